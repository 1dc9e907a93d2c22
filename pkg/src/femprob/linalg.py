"""Compressed-row symmetric matrices and a Jacobi-preconditioned CG solver."""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._accel import njit, pick

DEFAULT_TOL = 1e-12


class DimensionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@njit
def _spmv_numba(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    y = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += data[p] * x[indices[p]]
        y[i] = acc
    return y


def _spmv_numpy(indptr, indices, data, x, rows=None):
    n = indptr.shape[0] - 1
    if rows is None:
        rows = np.repeat(np.arange(n), np.diff(indptr))
    return np.bincount(rows, weights=data * x[indices], minlength=n)


@njit
def _coo_to_csr_numba(n, rows, cols, vals):
    # stable counting sort by row, then insertion sort by column inside each
    # row; duplicates summed in input order
    nnz_in = rows.shape[0]
    counts = np.zeros(n + 1, dtype=np.int64)
    for p in range(nnz_in):
        counts[rows[p] + 1] += 1
    for i in range(n):
        counts[i + 1] += counts[i]
    pos = counts[:-1].copy()
    order = np.empty(nnz_in, dtype=np.int64)
    for p in range(nnz_in):
        r = rows[p]
        order[pos[r]] = p
        pos[r] += 1

    indptr = np.zeros(n + 1, dtype=np.int64)
    indices = np.empty(nnz_in, dtype=np.int64)
    data = np.empty(nnz_in)
    out = 0
    for i in range(n):
        start = counts[i]
        stop = counts[i + 1]
        seg = order[start:stop].copy()
        # insertion sort by column; stable
        for a in range(1, seg.shape[0]):
            key = seg[a]
            kc = cols[key]
            b = a - 1
            while b >= 0 and cols[seg[b]] > kc:
                seg[b + 1] = seg[b]
                b -= 1
            seg[b + 1] = key
        row_start = out
        for a in range(seg.shape[0]):
            p = seg[a]
            c = cols[p]
            if out > row_start and indices[out - 1] == c:
                data[out - 1] += vals[p]
            else:
                indices[out] = c
                data[out] = vals[p]
                out += 1
        indptr[i + 1] = out
    return indptr, indices[:out].copy(), data[:out].copy()


def _coo_to_csr_numpy(n, rows, cols, vals):
    order = np.lexsort((cols, rows))  # stable
    r = rows[order]
    c = cols[order]
    v = vals[order]
    if r.size == 0:
        return np.zeros(n + 1, dtype=np.int64), c.astype(np.int64), v.astype(float)
    new = np.ones(r.size, dtype=bool)
    new[1:] = (r[1:] != r[:-1]) | (c[1:] != c[:-1])
    starts = np.flatnonzero(new)
    # sequential accumulation keeps (i, j) and (j, i) sums bit-equal
    ids = np.cumsum(new) - 1
    data = np.zeros(starts.size)
    np.add.at(data, ids, v)
    indices = c[starts].astype(np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, r[starts] + 1, 1)
    return np.cumsum(indptr), indices, data


@njit
def _pcg_numba(indptr, indices, data, b, tol, max_iter):
    n = b.shape[0]
    x = np.zeros(n)
    history = np.empty(max_iter + 1)
    diag = np.ones(n)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            if indices[p] == i:
                diag[i] = data[p]
    bnorm = np.sqrt(np.dot(b, b))
    if bnorm == 0.0:
        history[0] = 0.0
        return x, 0, 0.0, history[:1]
    r = b.copy()
    z = r / diag
    p_dir = z.copy()
    rz = np.dot(r, z)
    rel = 1.0
    history[0] = rel
    it = 0
    while it < max_iter:
        q = np.zeros(n)
        for i in range(n):
            acc = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                acc += data[k] * p_dir[indices[k]]
            q[i] = acc
        alpha = rz / np.dot(p_dir, q)
        x += alpha * p_dir
        r -= alpha * q
        it += 1
        rel = np.sqrt(np.dot(r, r)) / bnorm
        if rel <= tol:
            # residual replacement: only stop on the true residual
            for i in range(n):
                acc = 0.0
                for k in range(indptr[i], indptr[i + 1]):
                    acc += data[k] * x[indices[k]]
                r[i] = b[i] - acc
            rel = np.sqrt(np.dot(r, r)) / bnorm
            history[it] = rel
            if rel <= tol:
                break
        else:
            history[it] = rel
        z = r / diag
        rz_new = np.dot(r, z)
        beta = rz_new / rz
        rz = rz_new
        p_dir = z + beta * p_dir
    return x, it, rel, history[: it + 1]


def _pcg_numpy(indptr, indices, data, b, tol, max_iter):
    n = b.shape[0]
    rows = np.repeat(np.arange(n), np.diff(indptr))
    diag = np.ones(n)
    on_diag = indices == rows
    diag[rows[on_diag]] = data[on_diag]
    x = np.zeros(n)
    bnorm = np.sqrt(b @ b)
    if bnorm == 0.0:
        return x, 0, 0.0, np.zeros(1)
    history = [1.0]
    r = b.copy()
    z = r / diag
    p_dir = z.copy()
    rz = r @ z
    rel = 1.0
    it = 0
    while it < max_iter:
        q = _spmv_numpy(indptr, indices, data, p_dir, rows)
        alpha = rz / (p_dir @ q)
        x += alpha * p_dir
        r -= alpha * q
        it += 1
        rel = np.sqrt(r @ r) / bnorm
        if rel <= tol:
            r = b - _spmv_numpy(indptr, indices, data, x, rows)
            rel = np.sqrt(r @ r) / bnorm
            history.append(rel)
            if rel <= tol:
                break
        else:
            history.append(rel)
        z = r / diag
        rz_new = r @ z
        p_dir = z + (rz_new / rz) * p_dir
        rz = rz_new
    return x, it, rel, np.asarray(history)


_spmv_kernel = pick(_spmv_numba, _spmv_numpy)
_coo_to_csr = pick(_coo_to_csr_numba, _coo_to_csr_numpy)
_pcg_kernel = pick(_pcg_numba, _pcg_numpy)


# ---------------------------------------------------------------------------
# public surface
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SparseSymMatrix:
    """Square CSR matrix, structurally symmetric, every diagonal stored."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        for arr in (self.indptr, self.indices, self.data):
            arr.setflags(write=False)

    @classmethod
    def from_coo(cls, n, rows, cols, vals):
        """Build from triplets, summing duplicates in input order.

        Zero diagonals are inserted where missing so the storage invariant
        holds for any input.
        """
        idx = np.arange(n, dtype=np.int64)
        rows = np.concatenate([np.asarray(rows, dtype=np.int64), idx])
        cols = np.concatenate([np.asarray(cols, dtype=np.int64), idx])
        vals = np.concatenate([np.asarray(vals, dtype=float), np.zeros(n)])
        indptr, indices, data = _coo_to_csr(n, rows, cols, vals)
        return cls(n, indptr, indices, data)

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {a.shape}")
        r, c = np.nonzero(a + a.T)
        return cls.from_coo(a.shape[0], r, c, a[r, c])

    @classmethod
    def identity(cls, n):
        idx = np.arange(n)
        return cls.from_coo(n, idx, idx, np.ones(n))

    @cached_property
    def _rows(self):
        return np.repeat(np.arange(self.n), np.diff(self.indptr))

    @property
    def nnz(self):
        return int(self.indices.size)

    def diagonal(self):
        d = np.zeros(self.n)
        on = self.indices == self._rows
        d[self._rows[on]] = self.data[on]
        return d

    def to_dense(self):
        out = np.zeros((self.n, self.n))
        out[self._rows, self.indices] = self.data
        return out

    def is_structurally_valid(self):
        """Sorted columns, diagonals present and a symmetric pattern."""
        rows, cols = self._rows, self.indices
        same_row = rows[1:] == rows[:-1]
        if np.any(cols[1:][same_row] <= cols[:-1][same_row]):
            return False
        if np.count_nonzero(rows == cols) != self.n:
            return False
        fwd = set(zip(rows.tolist(), cols.tolist()))
        return all((c, r) in fwd for r, c in fwd)

    def is_symmetric(self):
        """Exact (bitwise) value symmetry."""
        key = self._rows * self.n + self.indices
        tkey = self.indices * self.n + self._rows
        order = np.argsort(tkey, kind="stable")
        if not np.array_equal(tkey[order], key):
            return False
        return np.array_equal(self.data[order], self.data)


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    relative_residual: float
    converged: bool
    residual_history: np.ndarray = field(repr=False, compare=False, default=None)


def spmv(a: SparseSymMatrix, x) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=float)
    if x.shape != (a.n,):
        raise DimensionError(f"vector of length {x.shape} for a {a.n}x{a.n} matrix")
    return _spmv_kernel(a.indptr, a.indices, a.data, x)


def cg_solve(a: SparseSymMatrix, b, tol: float = DEFAULT_TOL, max_iter: int | None = None):
    """Solve ``a x = b`` for SPD ``a`` with Jacobi-preconditioned CG.

    Iteration stops once the *true* relative residual ``|b - a x| / |b|``
    is at most ``tol``. Non-convergence is not an error: the report carries
    ``converged=False`` and the caller decides.
    """
    b = np.ascontiguousarray(b, dtype=float)
    if b.shape != (a.n,):
        raise DimensionError(f"right-hand side of length {b.shape} for a {a.n}x{a.n} matrix")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter is None:
        max_iter = 20 * a.n
    x, its, rel, hist = _pcg_kernel(a.indptr, a.indices, a.data, b, float(tol), int(max_iter))
    return x, SolveReport(int(its), float(rel), bool(rel <= tol), hist)
