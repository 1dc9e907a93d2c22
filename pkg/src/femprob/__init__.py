"""Monte-Carlo comparison of Lagrange P_k and P_m finite elements at fixed mesh size."""

from ._accel import BACKEND
from .experiment import CampaignConfig, FrequencyTable, convergence_study, run_campaign, run_trial
from .laws import (
    AccuracyModel,
    BoundCoefficient,
    ErrorSample,
    empirical_frequency,
    estimate_coefficient,
    estimate_h_star,
    sigmoid_law,
    two_steps_law,
)
from .meshgen import Mesh, MeshParams, generate_mesh, mesh_statistics
from .problems import ProblemCase, polynomial_patch_case, runge_case, smooth_case

__version__ = "0.1.0"
