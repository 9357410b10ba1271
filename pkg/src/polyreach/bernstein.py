"""Parametric Bernstein expansion on the unit box and affine bound functions.

Given ``pi(x, p) = sum_i a_i(p) x^i`` on ``[0, 1]^n``, the Bernstein
coefficients ``b_i(p) = sum_{j <= i} C(i, j) / C(d, j) a_j(p)`` stay affine in
``p``. Pairing each coefficient with its grid point ``i / d`` gives the
control points; a least-squares plane through them at the parameter centroid,
shifted down (up) until it lies below (above) every control point for every
``p`` in ``P``, is an affine under- (over-) estimator of ``pi`` on the box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import InvalidInputError, ResourceLimitError
from .geometry import ParamSet, chebyshev_center
from .numkernel import DenseLinearSystem, max_affine_many, solve_dense
from .poly import MultiIndex, ParamAffineCoeff, ParamPoly

#: Per-axis degree cap for the Bernstein conversion.
MAX_AXIS_DEGREE = 12


@dataclass(frozen=True, eq=False)
class BernsteinForm:
    """Dense Bernstein coefficients ``b_i(p)`` for all ``i <= degree``.

    ``array`` has shape ``(d_1+1, ..., d_n+1, m+1)``; the last axis holds
    ``(const, grad...)``. Flattening is lexicographic in the multi-index.
    """

    degree: MultiIndex
    array: np.ndarray

    @property
    def n_vars(self) -> int:
        return len(self.degree)

    @property
    def n_params(self) -> int:
        return self.array.shape[-1] - 1

    @property
    def size(self) -> int:
        return math.prod(d + 1 for d in self.degree)

    def flat(self) -> np.ndarray:
        return self.array.reshape(self.size, self.n_params + 1)

    def indices(self) -> list[MultiIndex]:
        return [tuple(int(v) for v in i) for i in np.ndindex(*(d + 1 for d in self.degree))]

    @property
    def coeffs(self) -> Mapping[MultiIndex, ParamAffineCoeff]:
        return MappingProxyType({i: ParamAffineCoeff.from_array(row)
                                 for i, row in zip(self.indices(), self.flat())})

    def values(self, p=()) -> np.ndarray:
        """Coefficient values at a fixed parameter point, in flat order."""
        p = np.asarray(p, dtype=float).reshape(-1)
        if p.shape[0] != self.n_params:
            raise InvalidInputError(f"expected {self.n_params} parameters")
        flat = self.flat()
        return flat[:, 0] + flat[:, 1:] @ p


@dataclass(frozen=True, eq=False)
class ControlMatrix:
    """Rows ``(i^j / d, 1)`` of the least-squares design matrix.

    Axes of degree zero carry a zero column: the polynomial does not depend
    on them.
    """

    rows: np.ndarray

    @property
    def active_columns(self) -> np.ndarray:
        nz = np.any(self.rows[:, :-1] != 0.0, axis=0)
        return np.append(nz, True)


@dataclass(frozen=True)
class AffineBound:
    """``lower(x) = zeta.(x, 1) - delta_lower`` and ``upper(x) = zeta.(x, 1) + delta_upper``."""

    zeta: np.ndarray
    delta_lower: float
    delta_upper: float

    @property
    def n_vars(self) -> int:
        return self.zeta.shape[0] - 1

    def median(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x @ self.zeta[:-1] + self.zeta[-1]

    def lower(self, x) -> np.ndarray:
        return self.median(x) - self.delta_lower

    def upper(self, x) -> np.ndarray:
        return self.median(x) + self.delta_upper

    @property
    def lower_coeffs(self) -> np.ndarray:
        """``(slope..., intercept)`` of the lower bound function."""
        out = self.zeta.copy()
        out[-1] -= self.delta_lower
        return out

    @property
    def upper_coeffs(self) -> np.ndarray:
        out = self.zeta.copy()
        out[-1] += self.delta_upper
        return out


def _ratio_matrix(d: int) -> np.ndarray:
    M = np.zeros((d + 1, d + 1))
    for i in range(d + 1):
        for j in range(i + 1):
            M[i, j] = math.comb(i, j) / math.comb(d, j)
    return M


def bernstein_coefficients(poly: ParamPoly, degree: MultiIndex | None = None,
                           max_axis_degree: int = MAX_AXIS_DEGREE) -> BernsteinForm:
    """Bernstein coefficients of ``poly`` over the unit box.

    The multi-dimensional sum factorizes over axes, so the coefficient array
    is obtained by applying the 1-D ratio matrix along each axis in turn.
    ``degree`` may raise (never lower) the expansion degree.
    """
    d = tuple(poly.degree()) if degree is None else tuple(int(v) for v in degree)
    if len(d) != poly.n_vars:
        raise InvalidInputError("degree length does not match the polynomial")
    if any(v > max_axis_degree for v in d):
        raise ResourceLimitError(f"degree {d} exceeds the per-axis cap {max_axis_degree}")
    arr = poly.to_dense(d)
    for k, dk in enumerate(d):
        if dk == 0:
            continue
        arr = np.moveaxis(np.tensordot(_ratio_matrix(dk), arr, axes=([1], [k])), 0, k)
    arr.setflags(write=False)
    return BernsteinForm(d, arr)


def control_matrix(degree: MultiIndex) -> ControlMatrix:
    """Grid points ``i / d`` (lexicographic ``i``) with a trailing ones column."""
    d = tuple(int(v) for v in degree)
    if any(v < 0 for v in d):
        raise InvalidInputError("negative degree")
    grid = np.array(list(np.ndindex(*(v + 1 for v in d))), dtype=float).reshape(-1, len(d))
    denom = np.array([v if v > 0 else 1 for v in d], dtype=float)
    rows = np.hstack([grid / denom, np.ones((grid.shape[0], 1))])
    rows.setflags(write=False)
    return ControlMatrix(rows)


def centroid(P: ParamSet) -> np.ndarray:
    """Mean of the vertices of ``P`` (box center for boxes); Chebyshev center otherwise."""
    if P.dim == 0:
        return np.zeros(0)
    if P.box is not None:
        return P.box.center
    if P.vertices is not None:
        return P.vertices.mean(axis=0)
    return chebyshev_center(P.polyhedron)


def fit_affine_bounds(form: BernsteinForm, P: ParamSet, p_c=None) -> AffineBound:
    """Least-squares median plane at the centroid, shifted to bound every control point.

    ``delta_lower = max_{j, p} (median(i^j/d) - b_j(p))`` and symmetrically
    ``delta_upper = max_{j, p} (b_j(p) - median(i^j/d))``, each an exact
    maximization of an affine function over ``P``.
    """
    if P.dim != form.n_params:
        raise InvalidInputError(f"parameter set has dimension {P.dim}, form expects {form.n_params}")
    p_c = centroid(P) if p_c is None else np.asarray(p_c, dtype=float)
    A = control_matrix(form.degree).rows
    active = np.append(np.asarray(form.degree) > 0, True)
    b_c = form.values(p_c)
    Aa = A[:, active]
    zeta = np.zeros(A.shape[1])
    zeta[active] = solve_dense(DenseLinearSystem(Aa.T @ Aa, Aa.T @ b_c))
    median = A @ zeta
    flat = form.flat()
    d_low = max_affine_many(median - flat[:, 0], -flat[:, 1:], P)
    d_up = max_affine_many(flat[:, 0] - median, flat[:, 1:], P)
    return AffineBound(zeta, float(d_low.max()), float(d_up.max()))


def range_enclosure(form: BernsteinForm, P: ParamSet) -> tuple[float, float]:
    """Interval containing ``pi([0,1]^n x P)``: extreme coefficients over ``P``."""
    if P.dim != form.n_params:
        raise InvalidInputError("parameter dimension mismatch")
    flat = form.flat()
    hi = max_affine_many(flat[:, 0], flat[:, 1:], P).max()
    lo = -max_affine_many(-flat[:, 0], -flat[:, 1:], P).max()
    return float(lo), float(hi)
