"""Monte-Carlo campaigns comparing P_k and P_m at fixed mesh size.

For every h of the grid and every trial, two meshes are drawn with
independent seeds: one is solved with P_k, the other with P_m. The per-row
frequency of {err_m <= err_k} is then set against the two-steps and sigmoid
laws evaluated at the campaign estimate of h*.

Work items are keyed by (h_index, trial_index) and results are reduced in
that order, so the output does not depend on the number of workers.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fem import SolverError, h1_error, solve_poisson
from .laws import (
    BoundCoefficient,
    ErrorSample,
    empirical_frequency,
    estimate_coefficient,
    estimate_h_star,
    sigmoid_law,
    two_steps_law,
)
from .linalg import DEFAULT_TOL
from .meshgen import MeshParams, MeshQualityError, generate_mesh
from .problems import make_case

log = logging.getLogger(__name__)

DEFAULT_JITTER = 0.3
DEFAULT_TRIALS = 500
NA_THRESHOLD = 1e-9


class CampaignAborted(RuntimeError):
    pass


def default_h_grid(case_name: str) -> tuple[float, ...]:
    if case_name == "smooth":
        return tuple(round(0.06 + 0.02 * i, 10) for i in range(13))
    return tuple(round(0.05 + 0.01 * i, 10) for i in range(14))


@dataclass(frozen=True)
class CampaignConfig:
    case: str
    k: int
    m: int
    h_grid: tuple[float, ...]
    trials: int = DEFAULT_TRIALS
    master_seed: int = 0
    alpha: float | None = None
    patch_degree: int = 1
    jitter: float = DEFAULT_JITTER
    min_angle_deg: float = 20.0
    tol: float = DEFAULT_TOL
    quad_degree: int | None = None
    seminorm: bool = False

    def __post_init__(self):
        object.__setattr__(self, "h_grid", tuple(float(h) for h in self.h_grid))
        if not 1 <= self.k < self.m <= 4:
            raise ValueError(f"need 1 <= k < m <= 4, got k={self.k}, m={self.m}")
        if not self.h_grid or any(not h > 0 for h in self.h_grid):
            raise ValueError("h_grid must be non-empty with positive entries")
        if any(b <= a for a, b in zip(self.h_grid, self.h_grid[1:])):
            raise ValueError("h_grid must be strictly increasing")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        # validates case name and alpha up front
        make_case(self.case, self.alpha, self.patch_degree)
        MeshParams(min(self.h_grid), 0, self.jitter, self.min_angle_deg)

    def problem(self):
        return make_case(self.case, self.alpha, self.patch_degree)


def derive_seed(master_seed: int, h_index: int, trial_index: int, slot: int) -> int:
    """Independent 64-bit seed for one mesh of one trial (slot 0: P_k, 1: P_m)."""
    ss = np.random.SeedSequence([master_seed, h_index, trial_index, slot])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class FemErrorSource:
    """Default error source: mesh, solve and measure the H1 error."""

    def __init__(self, config: CampaignConfig):
        self.config = config
        self._case = None

    def __getstate__(self):
        return {"config": self.config, "_case": None}

    def __call__(self, h, degree, seed):
        cfg = self.config
        if self._case is None:
            self._case = cfg.problem()
        mesh = generate_mesh(MeshParams(h, seed, cfg.jitter, cfg.min_angle_deg))
        sol = solve_poisson(mesh, degree, self._case, tol=cfg.tol, quad_degree=cfg.quad_degree)
        return h1_error(sol, self._case, seminorm=cfg.seminorm)


@dataclass(frozen=True)
class UniformErrorModel:
    """Synthetic errors uniform on [0, C_i h^i], replacing the FEM solver."""

    coef_k: float
    coef_m: float
    k: int
    m: int

    def __call__(self, h, degree, seed):
        c = self.coef_k if degree == self.k else self.coef_m
        return float(np.random.default_rng(seed).uniform(0.0, c * h**degree))


@dataclass(frozen=True)
class TrialResult:
    h_index: int
    trial_index: int
    sample_k: ErrorSample | None
    sample_m: ErrorSample | None
    failure: str | None = None

    @property
    def ok(self):
        return self.failure is None


def _trial(config, error_source, h_index, trial_index):
    h = config.h_grid[h_index]
    out = []
    for slot, degree in enumerate((config.k, config.m)):
        seed = derive_seed(config.master_seed, h_index, trial_index, slot)
        try:
            err = error_source(h, degree, seed)
        except (MeshQualityError, SolverError) as exc:
            return TrialResult(h_index, trial_index, None, None, f"P{degree}: {exc}")
        out.append(ErrorSample(h, seed, degree, float(err)))
    return TrialResult(h_index, trial_index, out[0], out[1])


def run_trial(config: CampaignConfig, h: float, trial_index: int, error_source=None):
    """Solve one independent mesh pair at grid value ``h``."""
    try:
        h_index = config.h_grid.index(float(h))
    except ValueError:
        raise ValueError(f"h={h} is not on the campaign grid") from None
    source = error_source if error_source is not None else FemErrorSource(config)
    return _trial(config, source, h_index, trial_index)


def _run_chunk(args):
    config, error_source, items = args
    return [_trial(config, error_source, hi, ti) for hi, ti in items]


@dataclass(frozen=True)
class FrequencyRow:
    h: float
    n_effective: int
    n_failed: int
    frequency: float
    two_steps: float
    sigmoid: float

    @property
    def n_attempted(self):
        return self.n_effective + self.n_failed


@dataclass(frozen=True)
class FrequencyTable:
    k: int
    m: int
    rows: tuple[FrequencyRow, ...]
    h_star: float
    coef_k: BoundCoefficient
    coef_m: BoundCoefficient
    trials: tuple[TrialResult, ...] = field(default=(), repr=False, compare=False)

    @property
    def h(self):
        return np.array([r.h for r in self.rows])

    @property
    def frequency(self):
        return np.array([r.frequency for r in self.rows])

    @property
    def samples(self):
        out = []
        for t in self.trials:
            if t.ok:
                out += [t.sample_k, t.sample_m]
        return out

    def failures(self):
        return [t for t in self.trials if not t.ok]


def _resolved(err):
    # errors at round-off level are exact reproductions and compare as ties
    return 0.0 if err <= NA_THRESHOLD else err


def min_effective(trials: int) -> int:
    return min(trials, max(2, math.ceil(trials / 2)))


def run_campaign(config: CampaignConfig, workers: int = 1, error_source=None) -> FrequencyTable:
    """Run every (h, trial) pair, estimate h* and tabulate both laws."""
    source = error_source if error_source is not None else FemErrorSource(config)
    items = [(hi, ti) for hi in range(len(config.h_grid)) for ti in range(config.trials)]
    if workers <= 1:
        results = []
        for hi in range(len(config.h_grid)):
            results += _run_chunk((config, source, items[hi * config.trials:(hi + 1) * config.trials]))
            log.info("h=%.4g done (%d/%d)", config.h_grid[hi], hi + 1, len(config.h_grid))
    else:
        size = max(1, len(items) // (8 * workers))
        chunks = [(config, source, items[i:i + size]) for i in range(0, len(items), size)]
        results = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_run_chunk, chunks):
                results += part
    # reduction keyed by indices, never by completion order
    results.sort(key=lambda r: (r.h_index, r.trial_index))
    return tabulate(config, results)


def tabulate(config: CampaignConfig, results) -> FrequencyTable:
    ok = [r for r in results if r.ok]
    for r in results:
        if not r.ok:
            log.warning("trial (h=%.4g, #%d) failed: %s",
                        config.h_grid[r.h_index], r.trial_index, r.failure)
    need = min_effective(config.trials)
    per_h = []
    for hi, h in enumerate(config.h_grid):
        row_ok = [r for r in ok if r.h_index == hi]
        n_failed = sum(1 for r in results if r.h_index == hi and not r.ok)
        if len(row_ok) < need:
            raise CampaignAborted(
                f"h={h}: only {len(row_ok)} successful trials out of {config.trials} "
                f"(need {need})"
            )
        pairs = [(_resolved(r.sample_m.error), _resolved(r.sample_k.error)) for r in row_ok]
        per_h.append((h, len(row_ok), n_failed, empirical_frequency(pairs)))

    coef_k = estimate_coefficient([r.sample_k for r in ok], config.k)
    coef_m = estimate_coefficient([r.sample_m for r in ok], config.m)
    exact = all(_resolved(s.error) == 0.0 for r in ok for s in (r.sample_k, r.sample_m))
    try:
        h_star = math.nan if exact else estimate_h_star(coef_k, coef_m)
    except ValueError:
        # one degree reproduces the solution exactly: no critical size
        h_star = math.nan
    rows = []
    for h, n_eff, n_failed, freq in per_h:
        if math.isnan(h_star):
            ts = sg = math.nan
        else:
            ts = two_steps_law(h, h_star)
            sg = sigmoid_law(h, h_star, config.k, config.m)
        rows.append(FrequencyRow(h, n_eff, n_failed, freq, ts, sg))
    return FrequencyTable(config.k, config.m, tuple(rows), h_star, coef_k, coef_m, tuple(results))


@dataclass(frozen=True)
class ConvergenceResult:
    h: tuple[float, ...]  # requested sizes
    h_actual: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float | None  # None when every error is at round-off level

    @property
    def applicable(self):
        return self.slope is not None


def fit_slope(h, errors):
    """Least-squares slope of log(error) against log(h)."""
    return float(np.polyfit(np.log(h), np.log(errors), 1)[0])


def convergence_study(case, k: int, h_list, seed: int = 0, tol: float = DEFAULT_TOL,
                      quad_degree=None, seminorm: bool = False) -> ConvergenceResult:
    """H1 errors on structured (unjittered) meshes and the fitted rate."""
    h_list = [float(h) for h in h_list]
    if len(h_list) < 3:
        raise ValueError("a convergence study needs at least three mesh sizes")
    if any(b >= a for a, b in zip(h_list, h_list[1:])):
        raise ValueError("h_list must be strictly decreasing")
    h_act, errs = [], []
    for h in h_list:
        mesh = generate_mesh(MeshParams(h, seed, 0.0))
        sol = solve_poisson(mesh, k, case, tol=tol, quad_degree=quad_degree)
        h_act.append(mesh.h_actual)
        errs.append(h1_error(sol, case, seminorm=seminorm))
    slope = None if max(errs) <= NA_THRESHOLD else fit_slope(h_act, errs)
    return ConvergenceResult(tuple(h_list), tuple(h_act), tuple(errs), slope)


def rms_deviation(table: FrequencyTable, law: str = "sigmoid") -> float:
    """Root-mean-square gap between the frequencies and one of the laws."""
    ref = np.array([getattr(r, "sigmoid" if law == "sigmoid" else "two_steps") for r in table.rows])
    return float(np.sqrt(np.mean((table.frequency - ref) ** 2)))
