"""Dense linear solves and a small two-phase simplex LP solver.

Every LP in this package is tiny and dense (a handful of variables, a few
dozen rows), so a tableau simplex with Bland's rule is both fast enough and
deterministic: identical inputs always take identical pivot sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (InfeasibleError, InvalidInputError, ReachError,
                     SingularSystemError, UnboundedError)

PIVOT_TOL = 1e-12
LP_TOL = 1e-9
MAX_PIVOTS = 100_000


@dataclass(frozen=True)
class DenseLinearSystem:
    matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float)
        r = np.array(self.rhs, dtype=float).reshape(-1)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise InvalidInputError(f"matrix must be square, got shape {M.shape}")
        if r.shape[0] != M.shape[0]:
            raise InvalidInputError("rhs length does not match matrix size")
        if not (np.all(np.isfinite(M)) and np.all(np.isfinite(r))):
            raise InvalidInputError("non-finite entries in linear system")
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "rhs", r)


def solve_dense(sys: DenseLinearSystem | np.ndarray, rhs=None) -> np.ndarray:
    """Gaussian elimination with partial pivoting.

    The pivot is the largest-magnitude entry in the column (ties go to the
    lowest row). A pivot below ``PIVOT_TOL`` raises :class:`SingularSystemError`.
    """
    if not isinstance(sys, DenseLinearSystem):
        sys = DenseLinearSystem(sys, rhs)
    a = sys.matrix.copy()
    b = sys.rhs.copy()
    n = a.shape[0]
    for col in range(n):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[piv, col]) < PIVOT_TOL:
            raise SingularSystemError(f"pivot {a[piv, col]:.3g} in column {col} below {PIVOT_TOL}")
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        factors = a[col + 1:, col] / a[col, col]
        a[col + 1:, col:] -= np.outer(factors, a[col, col:])
        b[col + 1:] -= factors * b[col]
    x = np.zeros(n)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1:] @ x[row + 1:]) / a[row, row]
    return x


@dataclass(frozen=True)
class LinearProgram:
    """Optimize ``objective . x`` over ``{x | A x <= b}`` with ``x`` free.

    ``>=`` rows and equalities passed through ``ge_*``/``eq_*`` are folded
    into ``<=`` rows at construction.
    """

    objective: np.ndarray
    constraint_matrix: np.ndarray
    constraint_rhs: np.ndarray
    sense: str = "maximize"
    ge_matrix: np.ndarray | None = field(default=None, repr=False)
    ge_rhs: np.ndarray | None = field(default=None, repr=False)
    eq_matrix: np.ndarray | None = field(default=None, repr=False)
    eq_rhs: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        c = np.array(self.objective, dtype=float).reshape(-1)
        n = c.shape[0]
        A = np.array(self.constraint_matrix, dtype=float).reshape(-1, n)
        b = np.array(self.constraint_rhs, dtype=float).reshape(-1)
        blocks, rhs = [A], [b]
        if self.ge_matrix is not None:
            blocks.append(-np.array(self.ge_matrix, dtype=float).reshape(-1, n))
            rhs.append(-np.array(self.ge_rhs, dtype=float).reshape(-1))
        if self.eq_matrix is not None:
            E = np.array(self.eq_matrix, dtype=float).reshape(-1, n)
            e = np.array(self.eq_rhs, dtype=float).reshape(-1)
            blocks += [E, -E]
            rhs += [e, -e]
        A = np.vstack(blocks)
        b = np.concatenate(rhs)
        if A.shape[0] != b.shape[0]:
            raise InvalidInputError("constraint matrix and rhs lengths differ")
        if self.sense not in ("maximize", "minimize"):
            raise InvalidInputError(f"unknown LP sense {self.sense!r}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise InvalidInputError("non-finite LP data")
        for name, value in (("objective", c), ("constraint_matrix", A), ("constraint_rhs", b)):
            object.__setattr__(self, name, value)
        for name in ("ge_matrix", "ge_rhs", "eq_matrix", "eq_rhs"):
            object.__setattr__(self, name, None)

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]


class LPResult(NamedTuple):
    value: float
    x: np.ndarray


def _pivot(T: np.ndarray, row: int, col: int):
    T[row] /= T[row, col]
    colvals = T[:, col].copy()
    colvals[row] = 0.0
    nz = np.nonzero(colvals)[0]
    if nz.size:
        T[nz] -= np.outer(colvals[nz], T[row])


def _simplex(T: np.ndarray, basis: list[int], n_cols: int):
    """Minimize the last row of tableau ``T`` (reduced costs) with Bland's rule.

    ``T`` has constraint rows first and the cost row last; column ``n_cols``
    holds the right-hand side. Only columns ``< n_cols`` may enter.
    """
    for _ in range(MAX_PIVOTS):
        costs = T[-1, :n_cols]
        entering = np.nonzero(costs < -LP_TOL)[0]
        if entering.size == 0:
            return
        col = int(entering[0])
        column = T[:-1, col]
        positive = np.nonzero(column > LP_TOL)[0]
        if positive.size == 0:
            raise UnboundedError("objective is unbounded over the feasible region")
        ratios = T[positive, n_cols] / column[positive]
        best = ratios.min()
        ties = positive[ratios <= best + LP_TOL * max(1.0, abs(best))]
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
    raise ReachError("simplex did not terminate within the pivot limit")


def lp_solve(lp: LinearProgram) -> LPResult:
    """Solve ``lp`` with a two-phase tableau simplex (Bland's anti-cycling rule).

    Free variables are split as ``x = u - v``. Raises :class:`InfeasibleError`
    or :class:`UnboundedError`.
    """
    A, b = lp.constraint_matrix, lp.constraint_rhs
    c = lp.objective if lp.sense == "minimize" else -lp.objective
    m, n = A.shape
    if m == 0:
        if np.any(c != 0):
            raise UnboundedError("objective is unbounded: no constraints")
        return LPResult(0.0, np.zeros(n))
    scale = np.max(np.abs(A), axis=1)
    zero_rows = scale == 0
    if np.any(b[zero_rows] < -LP_TOL):
        raise InfeasibleError("constraint 0 <= b with b < 0")
    keep = ~zero_rows
    A = A[keep] / scale[keep, None]
    b = b[keep] / scale[keep]
    m = A.shape[0]

    neg = b < 0
    n_art = int(neg.sum())
    # columns: u (n), v (n), slacks (m), artificials (n_art), rhs
    width = 2 * n + m + n_art
    T = np.zeros((m + 1, width + 1))
    T[:m, :n] = A
    T[:m, n:2 * n] = -A
    T[:m, 2 * n:2 * n + m] = np.eye(m)
    T[:m, width] = b
    T[:m][neg] *= -1.0
    basis = [2 * n + i for i in range(m)]
    art_rows = np.nonzero(neg)[0]
    for k, r in enumerate(art_rows):
        T[r, 2 * n + m + k] = 1.0
        basis[r] = 2 * n + m + k

    if n_art:
        T[-1, 2 * n + m:width] = 1.0
        for r in art_rows:
            T[-1] -= T[r]
        _simplex(T, basis, width)
        if -T[-1, width] > LP_TOL * max(1.0, float(np.abs(b).max())):
            raise InfeasibleError("linear program is infeasible")
        for r in range(m):
            if basis[r] >= 2 * n + m:
                candidates = np.nonzero(np.abs(T[r, :2 * n + m]) > LP_TOL)[0]
                if candidates.size:
                    col = int(candidates[0])
                    _pivot(T, r, col)
                    basis[r] = col
        T = np.delete(T, np.s_[2 * n + m:width], axis=1)
        width = 2 * n + m
        redundant = [r for r in range(m) if basis[r] >= width]
        if redundant:
            T = np.delete(T, redundant, axis=0)
            basis = [bv for r, bv in enumerate(basis) if r not in redundant]

    T[-1] = 0.0
    T[-1, :n] = c
    T[-1, n:2 * n] = -c
    for r, bv in enumerate(basis):
        if T[-1, bv] != 0.0:
            T[-1] -= T[-1, bv] * T[r]
    _simplex(T, basis, width)

    z = np.zeros(width)
    for r, bv in enumerate(basis):
        z[bv] = T[r, width]
    x = z[:n] - z[n:2 * n]
    value = float(lp.objective @ x)
    return LPResult(value, x)


def lp_max_affine_over_vertices(fn, P) -> float:
    """Maximum of the affine function ``fn`` (a ParamAffineCoeff) over ``P``.

    Boxes use corner selection per gradient sign, known vertex lists are
    scanned directly, anything else goes through :func:`lp_solve`.
    """
    grad = np.asarray(fn.grad, dtype=float)
    if grad.shape[0] != P.dim:
        raise InvalidInputError(f"affine function over {grad.shape[0]} parameters, set has {P.dim}")
    if P.dim == 0 or not np.any(grad):
        return float(fn.const)
    if P.box is not None:
        corner = np.where(grad >= 0, P.box.upper, P.box.lower)
        return float(fn.const + grad @ corner)
    if P.vertices is not None:
        return float(fn.const + np.max(P.vertices @ grad))
    res = lp_solve(LinearProgram(grad, P.polyhedron.H, P.polyhedron.c, "maximize"))
    return float(fn.const + res.value)


def max_affine_many(consts: np.ndarray, grads: np.ndarray, P) -> np.ndarray:
    """Row-wise maxima of ``consts[j] + grads[j] . p`` over ``p`` in ``P``."""
    consts = np.asarray(consts, dtype=float)
    grads = np.asarray(grads, dtype=float).reshape(consts.shape[0], -1)
    if P.dim == 0 or not np.any(grads):
        return consts.copy()
    if P.box is not None:
        return consts + np.maximum(grads * P.box.upper, grads * P.box.lower).sum(axis=1)
    if P.vertices is not None:
        return consts + np.max(grads @ P.vertices.T, axis=1)
    out = np.empty_like(consts)
    cache: dict[bytes, float] = {}
    for j, g in enumerate(grads):
        key = g.tobytes()
        if key not in cache:
            cache[key] = lp_solve(LinearProgram(g, P.polyhedron.H, P.polyhedron.c)).value
        out[j] = consts[j] + cache[key]
    return out
