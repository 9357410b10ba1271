"""Boxes, template polyhedra and parameter sets.

Sets are immutable value types. A :class:`TemplatePolyhedron` is the H-rep
``{x | H x <= c}``; a :class:`Box` is the axis-aligned special case kept in
bound form because most operations on it are closed-form.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import (EmptySetError, InfeasibleError, InvalidInputError,
                     ResourceLimitError, UnboundedError, UnboundedSetError)
from .numkernel import LinearProgram, lp_solve
from .poly import AffineMap

DEFAULT_VERTEX_CAP = 20
#: Largest number of row subsets tried when enumerating polytope vertices.
MAX_VERTEX_COMBINATIONS = 20_000


def _frozen(arr, ndim=1) -> np.ndarray:
    a = np.array(arr, dtype=float)
    if ndim == 1:
        a = a.reshape(-1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, hi = _frozen(self.lower), _frozen(self.upper)
        if lo.shape != hi.shape:
            raise InvalidInputError("lower and upper bounds have different lengths")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise InvalidInputError("NaN box bound")
        if np.any(lo > hi):
            raise InvalidInputError(f"box has lower > upper: {lo} > {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def from_intervals(cls, intervals: Sequence[Sequence[float]]) -> "Box":
        arr = np.asarray(intervals, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])

    @classmethod
    def unit(cls, n: int) -> "Box":
        return cls(np.zeros(n), np.ones(n))

    @classmethod
    def point(cls, x) -> "Box":
        return cls(x, x)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def volume(self) -> float:
        return float(np.prod(self.width))

    def intervals(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in zip(self.lower, self.upper)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Box):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))

    def __repr__(self) -> str:
        return f"Box({self.intervals()})"

    def allclose(self, other: "Box", atol: float = 1e-9) -> bool:
        return (np.allclose(self.lower, other.lower, rtol=0, atol=atol)
                and np.allclose(self.upper, other.upper, rtol=0, atol=atol))

    def contains_box(self, other: "Box", tol: float = 0.0) -> bool:
        return bool(np.all(other.lower >= self.lower - tol) and np.all(other.upper <= self.upper + tol))

    def inflate(self, eps: float) -> "Box":
        return Box(self.lower - eps, self.upper + eps)

    def hull(self, other: "Box") -> "Box":
        return Box(np.minimum(self.lower, other.lower), np.maximum(self.upper, other.upper))

    def intersect(self, other: "Box") -> "Box | None":
        lo = np.maximum(self.lower, other.lower)
        hi = np.minimum(self.upper, other.upper)
        if np.any(lo > hi):
            return None
        return Box(lo, hi)

    def translate(self, shift) -> "Box":
        shift = np.asarray(shift, dtype=float)
        return Box(self.lower + shift, self.upper + shift)

    def as_polyhedron(self) -> "TemplatePolyhedron":
        n = self.dim
        return TemplatePolyhedron(np.vstack([np.eye(n), -np.eye(n)]),
                                  np.concatenate([self.upper, -self.lower]))


@dataclass(frozen=True, eq=False)
class TemplatePolyhedron:
    """``{x | H x <= c}``; rows of ``H`` are the template directions."""

    H: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        H = np.array(self.H, dtype=float)
        if H.ndim != 2:
            raise InvalidInputError("template matrix must be two-dimensional")
        c = _frozen(self.c)
        if H.shape[0] != c.shape[0]:
            raise InvalidInputError(f"{H.shape[0]} template rows but {c.shape[0]} coefficients")
        if H.shape[0] and np.any(np.all(H == 0.0, axis=1)):
            raise InvalidInputError("template matrix has an all-zero row")
        if np.any(np.isnan(c)) or not np.all(np.isfinite(H)):
            raise InvalidInputError("invalid template data")
        H.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "c", c)

    @property
    def dim(self) -> int:
        return self.H.shape[1]

    @property
    def n_rows(self) -> int:
        return self.H.shape[0]

    def __repr__(self) -> str:
        return f"TemplatePolyhedron(rows={self.n_rows}, dim={self.dim})"

    def with_coeffs(self, c) -> "TemplatePolyhedron":
        return TemplatePolyhedron(self.H, c)

    def intersect(self, other: "TemplatePolyhedron | Box") -> "TemplatePolyhedron":
        other = as_polyhedron(other)
        if other.dim != self.dim:
            raise InvalidInputError("dimension mismatch in intersection")
        return TemplatePolyhedron(np.vstack([self.H, other.H]), np.concatenate([self.c, other.c]))

    def translate(self, shift) -> "TemplatePolyhedron":
        return TemplatePolyhedron(self.H, self.c + self.H @ np.asarray(shift, dtype=float))

    def is_empty(self) -> bool:
        try:
            lp_solve(LinearProgram(np.zeros(self.dim), self.H, self.c))
        except InfeasibleError:
            return True
        return False

    def is_box_template(self) -> bool:
        """True iff every row is a signed unit vector."""
        nz = np.count_nonzero(self.H, axis=1)
        return bool(np.all(nz == 1))

    def as_box(self) -> Box:
        """Exact box for a polyhedron whose rows are all (scaled) unit vectors."""
        if not self.is_box_template():
            raise InvalidInputError("polyhedron is not described by axis-aligned rows")
        lo = np.full(self.dim, -np.inf)
        hi = np.full(self.dim, np.inf)
        for row, ci in zip(self.H, self.c):
            k = int(np.nonzero(row)[0][0])
            a = row[k]
            if a > 0:
                hi[k] = min(hi[k], ci / a)
            else:
                lo[k] = max(lo[k], ci / a)
        if np.any(np.isinf(lo)) or np.any(np.isinf(hi)):
            raise UnboundedSetError("axis-aligned polyhedron is unbounded")
        if np.any(lo > hi):
            raise EmptySetError("axis-aligned polyhedron is empty")
        return Box(lo, hi)


SetLike = Union[Box, TemplatePolyhedron]


def as_polyhedron(s: SetLike) -> TemplatePolyhedron:
    return s.as_polyhedron() if isinstance(s, Box) else s


@dataclass(frozen=True, eq=False)
class ParamSet:
    """Bounded non-empty parameter polytope.

    ``box`` is set when the polytope is axis-aligned; ``vertices`` when they
    could be enumerated. Zero-dimensional sets (parameter-free systems) are
    allowed and have the single vertex ``()``.
    """

    polyhedron: TemplatePolyhedron
    box: Box | None = None
    vertices: np.ndarray | None = None

    def __post_init__(self):
        poly = self.polyhedron
        if isinstance(poly, Box):
            poly = poly.as_polyhedron()
            object.__setattr__(self, "polyhedron", poly)
        box = self.box
        if box is None and poly.n_rows and poly.is_box_template():
            box = poly.as_box()
        if box is None and poly.dim == 0:
            box = Box(np.zeros(0), np.zeros(0))
        if box is None:
            bounding_box(poly)  # raises on empty or unbounded
        verts = self.vertices
        if verts is None:
            if box is not None:
                verts = box_vertices(box, cap=DEFAULT_VERTEX_CAP) if box.dim <= 12 else None
            else:
                verts = enumerate_vertices(poly)
        if verts is not None:
            verts = np.asarray(verts, dtype=float)
            verts = _frozen(verts.reshape(-1, poly.dim) if poly.dim else verts.reshape(1, 0), ndim=2)
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def from_box(cls, box: Box) -> "ParamSet":
        return cls(box.as_polyhedron(), box=box)

    @classmethod
    def from_intervals(cls, intervals) -> "ParamSet":
        return cls.from_box(Box.from_intervals(intervals))

    @classmethod
    def empty_dim(cls) -> "ParamSet":
        """Parameter set of a parameter-free system."""
        return cls(TemplatePolyhedron(np.zeros((0, 0)), np.zeros(0)))

    @property
    def dim(self) -> int:
        return self.polyhedron.dim

    def contains(self, p, tol: float = 1e-9) -> bool:
        return contains(self.polyhedron, p, tol)

    def split(self, counts: Sequence[int]) -> list["ParamSet"]:
        """Partition a box parameter set into a grid of ``prod(counts)`` sub-boxes."""
        if self.box is None:
            raise InvalidInputError("only box parameter sets can be split")
        counts = [int(k) for k in counts]
        if len(counts) != self.dim or any(k < 1 for k in counts):
            raise InvalidInputError("one positive split count per parameter axis required")
        edges = [np.linspace(lo, hi, k + 1) for lo, hi, k in zip(self.box.lower, self.box.upper, counts)]
        pieces = []
        for idx in itertools.product(*(range(k) for k in counts)):
            lo = [edges[a][i] for a, i in enumerate(idx)]
            hi = [edges[a][i + 1] for a, i in enumerate(idx)]
            pieces.append(ParamSet.from_box(Box(lo, hi)))
        return pieces


def bounding_box(poly: SetLike) -> Box:
    """Smallest box containing ``poly`` (2n LPs)."""
    if isinstance(poly, Box):
        return poly
    n = poly.dim
    lo, hi = np.empty(n), np.empty(n)
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        try:
            hi[k] = lp_solve(LinearProgram(e, poly.H, poly.c, "maximize")).value
            lo[k] = lp_solve(LinearProgram(e, poly.H, poly.c, "minimize")).value
        except UnboundedError as exc:
            raise UnboundedSetError(f"polyhedron is unbounded along axis {k}") from exc
        except InfeasibleError as exc:
            raise EmptySetError("polyhedron is empty") from exc
    return Box(lo, np.maximum(hi, lo))


def template_hull(poly: SetLike, H: np.ndarray) -> TemplatePolyhedron:
    """Tightest ``<H, c>`` containing ``poly`` (one LP per template row)."""
    H = np.asarray(H, dtype=float)
    if isinstance(poly, Box):
        c = np.maximum(H * poly.upper, H * poly.lower).sum(axis=1)
        return TemplatePolyhedron(H, c)
    c = np.empty(H.shape[0])
    for i, row in enumerate(H):
        try:
            c[i] = lp_solve(LinearProgram(row, poly.H, poly.c, "maximize")).value
        except InfeasibleError as exc:
            raise EmptySetError("polyhedron is empty") from exc
        except UnboundedError as exc:
            raise UnboundedSetError("polyhedron is unbounded along a template direction") from exc
    return TemplatePolyhedron(H, c)


def unit_to_box_map(b: Box) -> AffineMap:
    """Affine map taking ``[0, 1]^n`` onto ``b``."""
    return AffineMap(b.upper - b.lower, b.lower)


def box_vertices(b: Box, cap: int = DEFAULT_VERTEX_CAP) -> np.ndarray:
    """All ``2^n`` corners in binary-counting order (last axis fastest)."""
    if b.dim > cap:
        raise ResourceLimitError(f"box of dimension {b.dim} exceeds vertex cap 2^{cap}")
    bits = np.array(list(itertools.product((0, 1), repeat=b.dim)), dtype=float).reshape(2 ** b.dim, b.dim)
    return b.lower + bits * (b.upper - b.lower)


def interval_hull(points) -> Box:
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise InvalidInputError("interval hull of an empty point set")
    pts = pts.reshape(pts.shape[0], -1)
    return Box(pts.min(axis=0), pts.max(axis=0))


def contains(s: SetLike, x, tol: float = 1e-9) -> bool:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != s.dim:
        raise InvalidInputError(f"point of dimension {x.shape[0]} tested against set of dimension {s.dim}")
    if isinstance(s, Box):
        return bool(np.all(x >= s.lower - tol) and np.all(x <= s.upper + tol))
    return bool(np.all(s.H @ x <= s.c + tol))


def contains_many(s: SetLike, xs, tol: float = 1e-9) -> np.ndarray:
    xs = np.asarray(xs, dtype=float).reshape(-1, s.dim)
    if isinstance(s, Box):
        return np.all((xs >= s.lower - tol) & (xs <= s.upper + tol), axis=1)
    return np.all(xs @ s.H.T <= s.c + tol, axis=1)


def preimage_under_map(poly: SetLike, amap: AffineMap, tol: float = 1e-12) -> TemplatePolyhedron:
    """``{y | H (scale*y + offset) <= c}``.

    Rows that vanish because all their axes are degenerate become the
    constant test ``0 <= c'``; they are dropped when it holds and make the
    result empty otherwise.
    """
    poly = as_polyhedron(poly)
    if amap.dim != poly.dim:
        raise InvalidInputError("map and polyhedron dimensions differ")
    H = poly.H * amap.scale[None, :]
    c = poly.c - poly.H @ amap.offset
    zero = np.all(np.abs(H) <= 1e-300, axis=1)
    if np.any(c[zero] < -tol * np.maximum(1.0, np.abs(poly.c[zero]))):
        raise EmptySetError("preimage is empty")
    return TemplatePolyhedron(H[~zero], c[~zero])


def box_template(n: int) -> np.ndarray:
    """Rows ``+e_k`` then ``-e_k``."""
    return np.vstack([np.eye(n), -np.eye(n)])


def octagon_template(n: int) -> np.ndarray:
    """Box rows plus ``+-e_j +- e_k`` for every pair ``j < k``."""
    rows = [*box_template(n)]
    for j, k in itertools.combinations(range(n), 2):
        for sj, sk in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            r = np.zeros(n)
            r[j], r[k] = sj, sk
            rows.append(r)
    return np.array(rows).reshape(-1, n)


def enumerate_vertices(poly: TemplatePolyhedron, tol: float = 1e-9) -> np.ndarray | None:
    """Brute-force vertex enumeration; ``None`` when too many row subsets."""
    n, m = poly.dim, poly.n_rows
    if n == 0:
        return np.zeros((1, 0))
    if math.comb(m, n) > MAX_VERTEX_COMBINATIONS:
        return None
    verts: list[np.ndarray] = []
    for rows in itertools.combinations(range(m), n):
        A = poly.H[list(rows)]
        if abs(np.linalg.det(A)) < 1e-12:
            continue
        v = np.linalg.solve(A, poly.c[list(rows)])
        if np.all(poly.H @ v <= poly.c + tol * np.maximum(1.0, np.abs(poly.c))):
            if not any(np.allclose(v, w, atol=1e-9) for w in verts):
                verts.append(v)
    if not verts:
        raise EmptySetError("polytope has no vertices")
    return np.array(verts)


def chebyshev_center(poly: TemplatePolyhedron) -> np.ndarray:
    norms = np.linalg.norm(poly.H, axis=1)
    obj = np.zeros(poly.dim + 1)
    obj[-1] = 1.0
    A = np.hstack([poly.H, norms[:, None]])
    res = lp_solve(LinearProgram(obj, A, poly.c, "maximize", ge_matrix=obj[None, :], ge_rhs=[0.0]))
    return res.x[:-1]


def clip_box(box: Box, poly: TemplatePolyhedron | None, sweeps: int = 3) -> Box | None:
    """Sound box enclosure of ``box & poly`` by linear constraint propagation.

    Exact for axis-aligned rows; for general rows each sweep tightens every
    variable against every row. Returns ``None`` when the intersection is
    detected empty.
    """
    if poly is None or poly.n_rows == 0:
        return box
    lo = box.lower.copy()
    hi = box.upper.copy()
    H, c = poly.H, poly.c
    for _ in range(sweeps):
        changed = False
        for row, ci in zip(H, c):
            nz = np.nonzero(row)[0]
            low_terms = np.minimum(row[nz] * lo[nz], row[nz] * hi[nz])
            total = low_terms.sum()
            for idx, k in enumerate(nz):
                rest = total - low_terms[idx]
                bound = (ci - rest) / row[k]
                if row[k] > 0 and bound < hi[k]:
                    hi[k] = bound
                    changed = True
                elif row[k] < 0 and bound > lo[k]:
                    lo[k] = bound
                    changed = True
            if np.any(lo > hi + 1e-12 * np.maximum(1.0, np.abs(hi))):
                return None
        if not changed or len(H) == np.count_nonzero(np.count_nonzero(H, axis=1) == 1):
            break
    return Box(np.minimum(lo, hi), np.maximum(lo, hi))


def clip_boxes(lower: np.ndarray, upper: np.ndarray, poly: TemplatePolyhedron | None,
               sweeps: int = 3) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized :func:`clip_box` over a batch of boxes (rows of ``lower``/``upper``).

    Returns ``(lower, upper, nonempty)``.
    """
    lo, hi = lower.copy(), upper.copy()
    ok = np.ones(lo.shape[0], dtype=bool)
    if poly is None or poly.n_rows == 0:
        return lo, hi, ok
    for _ in range(sweeps):
        for row, ci in zip(poly.H, poly.c):
            nz = np.nonzero(row)[0]
            low_terms = np.minimum(row[nz] * lo[:, nz], row[nz] * hi[:, nz])
            total = low_terms.sum(axis=1)
            for idx, k in enumerate(nz):
                bound = (ci - (total - low_terms[:, idx])) / row[k]
                if row[k] > 0:
                    hi[:, k] = np.minimum(hi[:, k], bound)
                else:
                    lo[:, k] = np.maximum(lo[:, k], bound)
    bad = np.any(lo > hi + 1e-12 * np.maximum(1.0, np.abs(hi)), axis=1)
    ok &= ~bad
    lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
    return lo, hi, ok


def project_2d(s: SetLike, axes: tuple[int, int], tol: float = 1e-9) -> np.ndarray:
    """Vertices (counter-clockwise) of the projection of ``s`` onto two axes.

    Boxes give their four corners. Polyhedra use iterative support-point
    refinement: start from extreme points along a few directions and split
    every edge whose outward normal still finds a point beyond it.
    """
    a, b = axes
    if isinstance(s, Box):
        lo, hi = s.lower[[a, b]], s.upper[[a, b]]
        return np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])

    def support(d2):
        obj = np.zeros(s.dim)
        obj[a], obj[b] = d2
        x = lp_solve(LinearProgram(obj, s.H, s.c, "maximize")).x
        return np.array([x[a], x[b]])

    pts = [support(np.array(d)) for d in ((1, 0), (0, 1), (-1, 0), (0, -1))]
    poly2 = _ccw_unique(pts, tol)
    if len(poly2) < 3:
        return np.array(poly2)
    done: set[tuple] = set()
    for _ in range(200):
        grew = False
        k = 0
        while k < len(poly2):
            p, q = poly2[k], poly2[(k + 1) % len(poly2)]
            key = (tuple(np.round(p, 12)), tuple(np.round(q, 12)))
            if key not in done:
                edge = q - p
                normal = np.array([edge[1], -edge[0]])
                r = support(normal)
                if normal @ (r - p) > tol * max(1.0, np.linalg.norm(normal) * np.linalg.norm(r)):
                    poly2.insert(k + 1, r)
                    grew = True
                    continue
                done.add(key)
            k += 1
        if not grew:
            break
    return np.array(poly2)


def _ccw_unique(points, tol):
    uniq: list[np.ndarray] = []
    for p in points:
        if not any(np.allclose(p, u, atol=tol) for u in uniq):
            uniq.append(np.asarray(p, dtype=float))
    if len(uniq) < 3:
        return uniq
    center = np.mean(uniq, axis=0)
    uniq.sort(key=lambda p: math.atan2(p[1] - center[1], p[0] - center[0]))
    return uniq
