"""Parametric multivariate polynomials in the power basis.

A :class:`ParamPoly` is a sparse map from exponent tuples to coefficients that
are affine in a parameter vector ``p``::

    pi(x, p) = sum_i (a_i + g_i . p) * x**i

Affinity in ``p`` is structural: there is no way to build a polynomial whose
coefficients depend nonlinearly on the parameters, so every downstream bound
computation over a parameter polytope stays a linear program.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

from .errors import InvalidInputError, ResourceLimitError

#: Coefficients with every entry below this magnitude are dropped.
DROP_TOL = 1e-14
#: Largest dense coefficient array built during composition.
MAX_DENSE_SIZE = 2_000_000

MultiIndex = tuple[int, ...]


@dataclass(frozen=True)
class ParamAffineCoeff:
    """Coefficient ``const + grad . p``."""

    const: float
    grad: tuple[float, ...] = ()

    def __call__(self, p=()) -> float:
        p = np.asarray(p, dtype=float).reshape(-1)
        if p.shape[0] != len(self.grad):
            raise InvalidInputError(f"expected {len(self.grad)} parameters, got {p.shape[0]}")
        return float(self.const + np.dot(self.grad, p)) if self.grad else float(self.const)

    @property
    def n_params(self) -> int:
        return len(self.grad)

    def as_array(self) -> np.ndarray:
        return np.array((self.const, *self.grad), dtype=float)

    @classmethod
    def from_array(cls, arr) -> "ParamAffineCoeff":
        arr = np.asarray(arr, dtype=float)
        return cls(float(arr[0]), tuple(float(v) for v in arr[1:]))


CoeffLike = Union[ParamAffineCoeff, float, int, Sequence[float], np.ndarray]


def _coeff_array(value: CoeffLike, n_params: int) -> np.ndarray:
    if isinstance(value, ParamAffineCoeff):
        arr = value.as_array()
    elif np.isscalar(value):
        arr = np.zeros(n_params + 1)
        arr[0] = float(value)
    else:
        arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.shape[0] != n_params + 1:
        raise InvalidInputError(
            f"coefficient has {arr.shape[0] - 1} parameter entries, expected {n_params}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("non-finite polynomial coefficient")
    return arr


class ParamPoly:
    """Sparse polynomial in ``n_vars`` state variables, affine in ``n_params`` parameters.

    ``terms`` maps exponent tuples to coefficients; a coefficient may be a
    :class:`ParamAffineCoeff`, a plain number (parameter-free) or a sequence
    ``(const, g_1, ..., g_m)``. Terms are merged, near-zero ones dropped, and
    the result is immutable.
    """

    __slots__ = ("n_vars", "n_params", "_exps", "_coef", "_terms")

    def __init__(self, n_vars: int, n_params: int = 0,
                 terms: Mapping[Sequence[int], CoeffLike] | Iterable[tuple[Sequence[int], CoeffLike]] = ()):
        if n_vars < 0 or n_params < 0:
            raise InvalidInputError("dimensions must be non-negative")
        self.n_vars = int(n_vars)
        self.n_params = int(n_params)
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[MultiIndex, np.ndarray] = {}
        for exps, value in items:
            key = tuple(int(e) for e in exps)
            if len(key) != self.n_vars:
                raise InvalidInputError(f"exponent tuple {key} does not have length {self.n_vars}")
            if any(e < 0 for e in key):
                raise InvalidInputError(f"negative exponent in {key}")
            arr = _coeff_array(value, self.n_params)
            if key in acc:
                acc[key] = acc[key] + arr
            else:
                acc[key] = arr.copy()
        keys = sorted(k for k, v in acc.items() if np.max(np.abs(v), initial=0.0) >= DROP_TOL)
        self._exps = np.array(keys, dtype=np.int64).reshape(len(keys), self.n_vars)
        self._coef = np.array([acc[k] for k in keys], dtype=float).reshape(len(keys), self.n_params + 1)
        self._exps.setflags(write=False)
        self._coef.setflags(write=False)
        self._terms = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, n_vars: int, n_params: int = 0) -> "ParamPoly":
        return cls(n_vars, n_params)

    @classmethod
    def constant(cls, n_vars: int, n_params: int, value: CoeffLike) -> "ParamPoly":
        return cls(n_vars, n_params, {(0,) * n_vars: value})

    @classmethod
    def variable(cls, n_vars: int, n_params: int, k: int) -> "ParamPoly":
        if not 0 <= k < n_vars:
            raise InvalidInputError(f"variable index {k} out of range")
        exps = [0] * n_vars
        exps[k] = 1
        return cls(n_vars, n_params, {tuple(exps): 1.0})

    @classmethod
    def parameter(cls, n_vars: int, n_params: int, j: int) -> "ParamPoly":
        """The polynomial ``p_j`` (constant in ``x``)."""
        if not 0 <= j < n_params:
            raise InvalidInputError(f"parameter index {j} out of range")
        coeff = np.zeros(n_params + 1)
        coeff[j + 1] = 1.0
        return cls(n_vars, n_params, {(0,) * n_vars: coeff})

    @classmethod
    def from_dense(cls, dense: np.ndarray, n_params: int) -> "ParamPoly":
        """Build from an array of shape ``(d_1+1, ..., d_n+1, n_params+1)``."""
        dense = np.asarray(dense, dtype=float)
        n_vars = dense.ndim - 1
        flat = dense.reshape(-1, n_params + 1)
        idx = np.nonzero(np.max(np.abs(flat), axis=1) >= DROP_TOL)[0]
        shape = dense.shape[:-1]
        terms = ((np.unravel_index(i, shape), flat[i]) for i in idx)
        return cls(n_vars, n_params, terms)

    @classmethod
    def _from_arrays(cls, n_vars, n_params, exps, coef) -> "ParamPoly":
        return cls(n_vars, n_params, zip(map(tuple, exps), coef))

    # -- accessors ----------------------------------------------------------

    @property
    def terms(self) -> Mapping[MultiIndex, ParamAffineCoeff]:
        if self._terms is None:
            self._terms = MappingProxyType({
                tuple(int(e) for e in ex): ParamAffineCoeff.from_array(c)
                for ex, c in zip(self._exps, self._coef)})
        return self._terms

    @property
    def exponents(self) -> np.ndarray:
        """Exponent matrix, one row per stored term (lexicographic order)."""
        return self._exps

    @property
    def coefficients(self) -> np.ndarray:
        """Coefficient matrix, row ``(const, grad...)`` per stored term."""
        return self._coef

    def __len__(self) -> int:
        return self._exps.shape[0]

    def is_zero(self) -> bool:
        return len(self) == 0

    def degree(self) -> MultiIndex:
        return degree(self)

    def depends_on_params(self) -> bool:
        return bool(self.n_params) and bool(np.any(self._coef[:, 1:] != 0.0))

    def __call__(self, x, p=()) -> float:
        return evaluate(self, x, p)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParamPoly):
            return NotImplemented
        return (self.n_vars == other.n_vars and self.n_params == other.n_params
                and np.array_equal(self._exps, other._exps)
                and np.array_equal(self._coef, other._coef))

    def __hash__(self):
        return hash((self.n_vars, self.n_params, self._exps.tobytes(), self._coef.tobytes()))

    def allclose(self, other: "ParamPoly", atol: float = 1e-12) -> bool:
        """Term-wise comparison up to ``atol`` (missing terms count as zero)."""
        if (self.n_vars, self.n_params) != (other.n_vars, other.n_params):
            return False
        diff = self - other
        return bool(np.all(np.abs(diff._coef) <= atol))

    def __repr__(self) -> str:
        if self.is_zero():
            return f"ParamPoly({self.n_vars}, {self.n_params}, 0)"
        return f"ParamPoly({self.n_vars}, {self.n_params}, {format_poly(self)})"

    # -- arithmetic ---------------------------------------------------------

    def _check_compatible(self, other: "ParamPoly"):
        if (self.n_vars, self.n_params) != (other.n_vars, other.n_params):
            raise InvalidInputError(
                f"incompatible polynomials: ({self.n_vars}, {self.n_params}) vs "
                f"({other.n_vars}, {other.n_params})")

    def _coerce(self, other) -> "ParamPoly":
        if isinstance(other, ParamPoly):
            self._check_compatible(other)
            return other
        if np.isscalar(other):
            return ParamPoly.constant(self.n_vars, self.n_params, float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return ParamPoly(self.n_vars, self.n_params,
                         itertools.chain(zip(map(tuple, self._exps), self._coef),
                                         zip(map(tuple, other._exps), other._coef)))

    __radd__ = __add__

    def __neg__(self):
        return ParamPoly._from_arrays(self.n_vars, self.n_params, self._exps, -self._coef)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return ParamPoly._from_arrays(self.n_vars, self.n_params, self._exps,
                                          self._coef * float(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.depends_on_params() and other.depends_on_params():
            raise InvalidInputError("product would be nonlinear in the parameters")
        out = []
        for ea, ca in zip(self._exps, self._coef):
            for eb, cb in zip(other._exps, other._coef):
                if self.depends_on_params():
                    coeff = ca * cb[0]
                else:
                    coeff = ca[0] * cb
                out.append((tuple(ea + eb), coeff))
        return ParamPoly(self.n_vars, self.n_params, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise InvalidInputError("only non-negative integer powers are supported")
        result = ParamPoly.constant(self.n_vars, self.n_params, 1.0)
        for _ in range(k):
            result = result * self
        return result

    def to_dense(self, degree_: Sequence[int] | None = None) -> np.ndarray:
        """Dense coefficients of shape ``(d_1+1, ..., d_n+1, n_params+1)``."""
        d = tuple(self.degree()) if degree_ is None else tuple(degree_)
        shape = tuple(k + 1 for k in d)
        size = math.prod(shape) * (self.n_params + 1)
        if size > MAX_DENSE_SIZE:
            raise ResourceLimitError(f"dense coefficient array of {size} entries exceeds cap")
        dense = np.zeros(shape + (self.n_params + 1,))
        if len(self):
            if np.any(self._exps > np.asarray(d)):
                raise InvalidInputError("requested degree is below the polynomial's degree")
            dense[tuple(self._exps.T)] = self._coef
        return dense


@dataclass(frozen=True)
class PolyVector:
    """Vector of polynomials sharing state and parameter dimensions."""

    components: tuple[ParamPoly, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise InvalidInputError("a polynomial vector needs at least one component")
        n, m = comps[0].n_vars, comps[0].n_params
        for c in comps:
            if not isinstance(c, ParamPoly):
                raise InvalidInputError("components must be ParamPoly instances")
            if (c.n_vars, c.n_params) != (n, m):
                raise InvalidInputError("components have inconsistent dimensions")
        object.__setattr__(self, "components", comps)

    @property
    def n_vars(self) -> int:
        return self.components[0].n_vars

    @property
    def n_params(self) -> int:
        return self.components[0].n_params

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self) -> Iterator[ParamPoly]:
        return iter(self.components)

    def __getitem__(self, k) -> ParamPoly:
        return self.components[k]

    def __call__(self, x, p=()) -> np.ndarray:
        return np.array([evaluate(c, x, p) for c in self.components])

    def eval_many(self, xs, ps=None) -> np.ndarray:
        """Evaluate at many points at once; returns shape ``(N, len(self))``."""
        return np.stack([eval_many(c, xs, ps) for c in self.components], axis=-1)


@dataclass(frozen=True)
class AffineMap:
    """Diagonal affine map ``y -> scale * y + offset`` taking the unit box onto a box."""

    scale: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        scale = np.array(self.scale, dtype=float).reshape(-1)
        offset = np.array(self.offset, dtype=float).reshape(-1)
        if scale.shape != offset.shape:
            raise InvalidInputError("scale and offset lengths differ")
        if np.any(scale < 0):
            raise InvalidInputError("scale entries must be non-negative")
        scale.setflags(write=False)
        offset.setflags(write=False)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "offset", offset)

    @property
    def dim(self) -> int:
        return self.scale.shape[0]

    def __call__(self, y) -> np.ndarray:
        return self.scale * np.asarray(y, dtype=float) + self.offset

    def inverse(self, x) -> np.ndarray:
        """Map back to unit-box coordinates; degenerate axes map to 0."""
        x = np.asarray(x, dtype=float)
        safe = np.where(self.scale > 0, self.scale, 1.0)
        return np.where(self.scale > 0, (x - self.offset) / safe, 0.0)

    @classmethod
    def identity(cls, n: int) -> "AffineMap":
        return cls(np.ones(n), np.zeros(n))


# -- operations ---------------------------------------------------------------


def _check_point(poly: ParamPoly, x, p):
    x = np.asarray(x, dtype=float).reshape(-1)
    p = np.asarray(p, dtype=float).reshape(-1)
    if x.shape[0] != poly.n_vars:
        raise InvalidInputError(f"expected {poly.n_vars} state values, got {x.shape[0]}")
    if p.shape[0] != poly.n_params:
        raise InvalidInputError(f"expected {poly.n_params} parameter values, got {p.shape[0]}")
    return x, p


def evaluate(poly: ParamPoly, x, p=()) -> float:
    """Value of ``poly`` at state ``x`` and parameter ``p``."""
    x, p = _check_point(poly, x, p)
    if poly.is_zero():
        return 0.0
    coef = poly.coefficients[:, 0] + poly.coefficients[:, 1:] @ p
    monos = np.prod(x ** poly.exponents, axis=1)
    return float(monos @ coef)


def eval_many(poly: ParamPoly, xs, ps=None) -> np.ndarray:
    """Vectorized evaluation at rows of ``xs`` (and matching rows of ``ps``)."""
    xs = np.asarray(xs, dtype=float).reshape(-1, poly.n_vars)
    if ps is None:
        ps = np.zeros((xs.shape[0], poly.n_params))
    ps = np.asarray(ps, dtype=float)
    ps = ps.reshape(-1, poly.n_params) if poly.n_params else np.zeros((xs.shape[0], 0))
    if ps.shape[0] == 1 and xs.shape[0] != 1:
        ps = np.broadcast_to(ps, (xs.shape[0], poly.n_params))
    if ps.shape[0] != xs.shape[0]:
        raise InvalidInputError("state and parameter sample counts differ")
    if poly.is_zero():
        return np.zeros(xs.shape[0])
    coef = poly.coefficients[:, 0][None, :] + ps @ poly.coefficients[:, 1:].T
    monos = np.prod(xs[:, None, :] ** poly.exponents[None, :, :], axis=2)
    return np.sum(monos * coef, axis=1)


def degree(poly: ParamPoly) -> MultiIndex:
    """Componentwise maximum exponent; all zeros for the zero polynomial."""
    if poly.is_zero():
        return (0,) * poly.n_vars
    return tuple(int(v) for v in poly.exponents.max(axis=0))


def _substitution_matrix(deg: int, scale: float, offset: float) -> np.ndarray:
    # T[j, i] = C(i, j) scale^j offset^(i-j): coefficient of y^j in (scale*y + offset)^i
    T = np.zeros((deg + 1, deg + 1))
    for i in range(deg + 1):
        for j in range(i + 1):
            T[j, i] = math.comb(i, j) * scale ** j * offset ** (i - j)
    return T


def compose_box(poly: ParamPoly, amap: AffineMap) -> ParamPoly:
    """Return ``gamma`` with ``gamma(y, p) = poly(scale*y + offset, p)``."""
    if amap.dim != poly.n_vars:
        raise InvalidInputError(f"map dimension {amap.dim} != polynomial dimension {poly.n_vars}")
    if poly.is_zero():
        return poly
    dense = poly.to_dense()
    for k in range(poly.n_vars):
        dk = dense.shape[k] - 1
        if dk == 0:
            continue
        T = _substitution_matrix(dk, amap.scale[k], amap.offset[k])
        dense = np.moveaxis(np.tensordot(T, dense, axes=([1], [k])), 0, k)
    return ParamPoly.from_dense(dense, poly.n_params)


def linear_combination(polys: PolyVector | Sequence[ParamPoly], weights) -> ParamPoly:
    """``sum_k weights[k] * polys[k]``."""
    polys = polys if isinstance(polys, PolyVector) else PolyVector(tuple(polys))
    weights = np.asarray(weights, dtype=float).reshape(-1)
    if weights.shape[0] != len(polys):
        raise InvalidInputError(f"{weights.shape[0]} weights for {len(polys)} polynomials")
    items = []
    for w, comp in zip(weights, polys):
        if w != 0.0:
            items.extend(zip(map(tuple, comp.exponents), comp.coefficients * w))
    return ParamPoly(polys.n_vars, polys.n_params, items)


def is_multiaffine(poly: ParamPoly | PolyVector, include_params: bool = False) -> bool:
    """True iff every state variable (and optionally parameter) has degree at most one.

    Coefficients are affine in ``p``, so each parameter already occurs with
    degree at most one in every monomial; the joint check only has to confirm
    that the state part of parameter-carrying monomials is multi-affine.
    """
    polys = poly.components if isinstance(poly, PolyVector) else (poly,)
    for comp in polys:
        if len(comp) == 0:
            continue
        if np.any(comp.exponents > 1):
            return False
        if include_params and comp.n_params:
            carrying = np.any(comp.coefficients[:, 1:] != 0.0, axis=1)
            if np.any(comp.exponents[carrying] > 1):
                return False
    return True


def euler_discretize(field: PolyVector, h: float) -> PolyVector:
    """Explicit Euler map ``x + h * f(x, p)`` of a polynomial vector field."""
    if not (h > 0 and math.isfinite(h)):
        raise InvalidInputError(f"Euler step must be positive, got {h}")
    n, m = field.n_vars, field.n_params
    if len(field) != n:
        raise InvalidInputError("vector field must have one component per state variable")
    return PolyVector(tuple(ParamPoly.variable(n, m, k) + comp * h
                            for k, comp in enumerate(field)))


def _elementary_symmetric_terms(r: int, d: int):
    """Index subsets of size r out of d copies (monomials of e_r)."""
    return itertools.combinations(range(d), r)


def blossom(poly: ParamPoly, d: int) -> ParamPoly:
    """Symmetric multi-affine blossom over ``d`` copies of the state.

    The result is a polynomial in ``n_vars * d`` variables ordered copy by
    copy; ``w(x, ..., x) = poly(x)`` and permuting copies leaves ``w``
    unchanged. Each monomial ``x_k**r`` becomes ``e_r(x_k^(1..d)) / C(d, r)``.
    """
    n, m = poly.n_vars, poly.n_params
    if any(dk > d for dk in degree(poly)):
        raise InvalidInputError(f"blossom degree {d} is below the polynomial degree {degree(poly)}")
    if d < 1:
        raise InvalidInputError("blossom needs at least one copy")
    out = []
    for exps, coef in zip(poly.exponents, poly.coefficients):
        per_axis = []
        for k, r in enumerate(exps):
            weight = 1.0 / math.comb(d, int(r))
            per_axis.append([(subset, weight) for subset in _elementary_symmetric_terms(int(r), d)])
        for choice in itertools.product(*per_axis):
            mono = [0] * (n * d)
            w = 1.0
            for k, (subset, weight) in enumerate(choice):
                w *= weight
                for c in subset:
                    mono[c * n + k] = 1
            out.append((tuple(mono), coef * w))
    return ParamPoly(n * d, m, out)


def diagonal(x, d: int) -> np.ndarray:
    """Stack ``d`` copies of ``x`` in the variable order used by :func:`blossom`."""
    return np.tile(np.asarray(x, dtype=float).reshape(-1), d)


def format_poly(poly: ParamPoly, var_names: Sequence[str] | None = None,
                param_names: Sequence[str] | None = None) -> str:
    """Human-readable rendering, e.g. ``(1 + 2*p0)*x0^2 - 3*x1``."""
    var_names = var_names or [f"x{k}" for k in range(poly.n_vars)]
    param_names = param_names or [f"p{j}" for j in range(poly.n_params)]
    if poly.is_zero():
        return "0"
    parts = []
    for exps, coef in zip(poly.exponents, poly.coefficients):
        mono = "*".join(name if e == 1 else f"{name}^{e}"
                        for name, e in zip(var_names, exps) if e)
        cterms = [f"{coef[0]:g}"] if coef[0] != 0 else []
        cterms += [f"{g:g}*{param_names[j]}" for j, g in enumerate(coef[1:]) if g != 0]
        cstr = " + ".join(cterms) if cterms else "0"
        if len(cterms) > 1:
            cstr = f"({cstr})"
        parts.append(f"{cstr}*{mono}" if mono else cstr)
    return " + ".join(parts)


class CompiledVector:
    """Fast batched evaluator for a :class:`PolyVector`.

    Parameters are treated as extra variables, so the vector becomes a
    parameter-free polynomial in ``(x, p)``. Each joint monomial is stored as
    a padded list of factor columns (repeated for higher powers, padded with a
    column of ones) and evaluated by a gather-and-multiply, followed by one
    matrix product with the coefficient table.
    """

    def __init__(self, vec: PolyVector):
        self.n_vars, self.n_params, self.n_out = vec.n_vars, vec.n_params, len(vec)
        n, m = self.n_vars, self.n_params
        monos: dict[tuple[int, ...], int] = {}
        entries: list[tuple[int, int, float]] = []
        for k, comp in enumerate(vec):
            for ex, coef in zip(comp.exponents, comp.coefficients):
                base = tuple(int(e) for e in ex)
                for j, value in enumerate(coef):
                    if value == 0.0:
                        continue
                    joint = base + tuple(int(j - 1 == q) for q in range(m))
                    u = monos.setdefault(joint, len(monos))
                    entries.append((u, k, float(value)))
        self.monomials = list(monos)
        self.coef = np.zeros((max(len(monos), 1), self.n_out))
        for u, k, value in entries:
            self.coef[u, k] += value
        ones_col = n + m
        depth = max((sum(mo) for mo in self.monomials), default=0)
        self.factors = np.full((max(len(monos), 1), max(depth, 1)), ones_col, dtype=np.intp)
        for u, mo in enumerate(self.monomials):
            cols = [v for v, e in enumerate(mo) for _ in range(e)]
            self.factors[u, :len(cols)] = cols
        self.parts = [self._part(k) for k in range(self.n_out)]

    def _part(self, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(support, factors, coef)`` of output ``k`` over its own joint variables.

        ``factors`` indexes rows of a matrix holding the support variables
        followed by a row of ones.
        """
        used = np.nonzero(self.coef[:, k])[0]
        support = np.array(sorted({v for u in used for v, e in enumerate(self.monomials[u]) if e}),
                           dtype=np.intp)
        local = {int(v): i for i, v in enumerate(support)}
        local[self.n_vars + self.n_params] = len(support)
        factors = np.vectorize(local.__getitem__, otypes=[np.intp])(self.factors[used]) \
            if used.size else np.full((1, 1), len(support), dtype=np.intp)
        coef = self.coef[used, k] if used.size else np.zeros(1)
        return support, factors, coef

    def __call__(self, xs: np.ndarray, ps: np.ndarray | None = None) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        lead = xs.shape[:-1]
        xs = xs.reshape(-1, self.n_vars)
        rows = xs.shape[0]
        Zt = np.empty((self.n_vars + self.n_params, rows))
        Zt[:self.n_vars] = xs.T
        if self.n_params:
            if ps is None:
                raise InvalidInputError("parameter values required")
            Zt[self.n_vars:] = np.broadcast_to(
                np.asarray(ps, dtype=float).reshape(-1, self.n_params), (rows, self.n_params)).T
        return self.eval_columns(Zt).T.reshape(*lead, self.n_out)

    def eval_columns(self, Zt: np.ndarray) -> np.ndarray:
        """Evaluate at the columns of ``Zt`` (rows ``x`` then ``p``); returns ``(n_out, R)``."""
        Z = np.empty((Zt.shape[0] + 1, Zt.shape[1]))
        Z[:-1] = Zt
        Z[-1] = 1.0
        M = Z[self.factors[:, 0]]
        for col in range(1, self.factors.shape[1]):
            M *= Z[self.factors[:, col]]
        return self.coef.T @ M
