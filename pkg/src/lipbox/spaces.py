"""Finite pointed metric spaces, polyhedral norms, and Lipschitz-free norms."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .config import CapExceeded
from .lp import EQ, LE, enumerate_vertices, linear_program, polytope, solve_lp

BASE_LABEL = "0"


class MetricError(ValueError):
    """Itemized metric axiom violations, each naming the offending points."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("; ".join(self._describe(v) for v in violations))

    @staticmethod
    def _describe(v):
        kind = v[0]
        if kind == "triangle":
            return f"triangle violation at ({v[1]}, {v[2]}, {v[3]})"
        if kind == "asymmetry":
            return f"asymmetric distance between {v[1]} and {v[2]}"
        if kind == "zero-distance":
            return f"zero or negative distance between {v[1]} and {v[2]}"
        if kind == "diagonal":
            return f"nonzero self-distance at {v[1]}"
        if kind == "base-label":
            return f"first point must be labeled {BASE_LABEL!r}, got {v[1]!r}"
        if kind == "shape":
            return "distance table shape does not match the label count"
        return f"duplicate label {v[1]!r}"


@dataclass(frozen=True)
class FiniteMetricSpace:
    labels: tuple        # index 0 is the base point
    d: tuple             # symmetric rational distance table

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def dist(self, i: int, j: int) -> Fraction:
        return self.d[i][j]

    def pairs(self):
        """Ordered pairs of distinct indices, base point included."""
        return [(i, j) for i in range(self.n) for j in range(self.n) if i != j]

    def upairs(self):
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n)]


def metric_violations(labels, table):
    out = []
    n = len(labels)
    if n == 0 or labels[0] != BASE_LABEL:
        out.append(("base-label", labels[0] if labels else ""))
    for lab in labels:
        if labels.count(lab) > 1:
            v = ("duplicate", lab)
            if v not in out:
                out.append(v)
    for i in range(n):
        if table[i][i] != 0:
            out.append(("diagonal", labels[i]))
    for i in range(n):
        for j in range(i + 1, n):
            if table[i][j] != table[j][i]:
                out.append(("asymmetry", labels[i], labels[j]))
            if table[i][j] <= 0:
                out.append(("zero-distance", labels[i], labels[j]))
    for i in range(n):
        for j in range(i + 1, n):
            for z in range(n):
                if z == i or z == j:
                    continue
                if table[i][j] > table[i][z] + table[z][j]:
                    out.append(("triangle", labels[i], labels[z], labels[j]))
    return out


def validate_metric(labels, table) -> FiniteMetricSpace:
    """Build a space from a label list and distance table, or raise MetricError."""
    labels = tuple(str(v) for v in labels)
    table = tuple(tuple(Fraction(v) for v in row) for row in table)
    if len(table) != len(labels) or any(len(r) != len(labels) for r in table):
        raise MetricError([("shape",)])
    bad = metric_violations(labels, table)
    if bad:
        raise MetricError(bad)
    return FiniteMetricSpace(labels, table)


@dataclass(frozen=True)
class FreeVector:
    """Sum of a_x * (delta_x - delta_0) over the non-base points."""
    space: FiniteMetricSpace
    coeffs: tuple  # indexed by labels[1:]


@dataclass(frozen=True)
class LipschitzFunctionVector:
    """Scalar function values at the non-base points; f(0) = 0 is implicit."""
    space: FiniteMetricSpace
    values: tuple  # indexed by labels[1:]

    def at(self, i: int) -> Fraction:
        return Fraction(0) if i == 0 else self.values[i - 1]


_BALL_CACHE: dict = {}


def lipschitz_ball_vertices(X: FiniteMetricSpace, cap: int = 8):
    """Extreme points of {f : f(0) = 0, |f(x) - f(y)| <= d(x, y)}.

    Coordinates follow labels[1:].
    """
    if X.n > cap:
        raise CapExceeded(f"space has {X.n} points, cap is {cap}")
    cached = _BALL_CACHE.get(X)
    if cached is not None:
        return cached
    n = X.n
    dim = n - 1
    A = []
    b = []
    for i, j in X.upairs():
        row = [Fraction(0)] * dim
        if i > 0:
            row[i - 1] = Fraction(1)
        if j > 0:
            row[j - 1] = Fraction(-1)
        A.append(list(row))
        b.append(X.dist(i, j))
        A.append([-v for v in row])
        b.append(X.dist(i, j))
    verts = enumerate_vertices(polytope(A, b))
    _BALL_CACHE[X] = verts
    return verts


def free_norm(X: FiniteMetricSpace, coeffs) -> Fraction:
    """Minimal transport cost realizing the coefficient vector (the free norm)."""
    if isinstance(coeffs, FreeVector):
        coeffs = coeffs.coeffs
    n = X.n
    pairs = X.pairs()
    cost = [X.dist(i, j) for i, j in pairs]
    rows = []
    rhs = []
    for z in range(1, n):
        row = [Fraction(0)] * len(pairs)
        for k, (i, j) in enumerate(pairs):
            if i == z:
                row[k] += 1
            if j == z:
                row[k] -= 1
        rows.append(row)
        rhs.append(Fraction(coeffs[z - 1]))
    sol = solve_lp(linear_program("min", cost, rows, [EQ] * len(rows), rhs,
                                  [True] * len(pairs)))
    assert sol.status == "optimal"
    return sol.value


def free_norm_dual(X: FiniteMetricSpace, coeffs) -> Fraction:
    """The same norm through the Lipschitz-ball vertices; independent of the LP."""
    if isinstance(coeffs, FreeVector):
        coeffs = coeffs.coeffs
    verts = lipschitz_ball_vertices(X)
    return max(sum(f * a for f, a in zip(v, coeffs)) for v in verts)


def molecule(X: FiniteMetricSpace, i: int, j: int) -> FreeVector:
    """(delta_i - delta_j) / d(i, j) as a FreeVector."""
    c = [Fraction(0)] * (X.n - 1)
    scale = 1 / X.dist(i, j)
    if i > 0:
        c[i - 1] += scale
    if j > 0:
        c[j - 1] -= scale
    return FreeVector(X, tuple(c))


def free_ball_molecules(X: FiniteMetricSpace):
    """All normalized two-point differences; they generate the free unit ball."""
    return tuple(molecule(X, i, j) for i, j in X.pairs())


class NormFormatError(ValueError):
    """The functional list cannot define a polyhedral norm."""


@dataclass(frozen=True)
class PolyhedralNorm:
    dim: int
    funcs: tuple          # extreme points of the dual unit ball
    points: tuple = None  # optional: points whose hull is the unit ball

    def norm(self, x) -> Fraction:
        return max(sum(w * v for w, v in zip(row, x)) for row in self.funcs)


def poly_norm_eval(N: PolyhedralNorm, x) -> Fraction:
    return N.norm(tuple(Fraction(v) for v in x))


def _rank_of(rows, dim):
    M = [list(r) for r in rows]
    r = 0
    for col in range(dim):
        piv = next((i for i in range(r, len(M)) if M[i][col] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        for i in range(len(M)):
            if i != r and M[i][col]:
                f = M[i][col] / M[r][col]
                M[i] = [a - f * p for a, p in zip(M[i], M[r])]
        r += 1
    return r


def polyhedral_norm(dim: int, funcs, *, points=None, reduce: bool = True) -> PolyhedralNorm:
    """Validate and canonicalize a dual-vertex description of a norm.

    The list must be symmetric and spanning; with reduce=True every functional
    kept is an extreme point of the dual ball, so it has dual norm exactly one.
    """
    rows = []
    for w in funcs:
        t = tuple(Fraction(v) for v in w)
        if len(t) != dim:
            raise NormFormatError(f"functional width {len(t)} != dim {dim}")
        if all(v == 0 for v in t):
            raise NormFormatError("zero functional")
        if t not in rows:
            rows.append(t)
    for t in rows:
        if tuple(-v for v in t) not in rows:
            raise NormFormatError(f"list is not symmetric: missing -{t}")
    if _rank_of(rows, dim) != dim:
        raise NormFormatError("functionals do not span the dual space")
    if reduce:
        kept = list(rows)
        i = 0
        while i < len(kept):
            others = kept[:i] + kept[i + 1:]
            if _in_hull(kept[i], others, dim):
                kept.pop(i)
            else:
                i += 1
        rows = kept
    rows.sort()
    pts = None
    if points is not None:
        pts = tuple(sorted(tuple(Fraction(v) for v in p) for p in points))
    return PolyhedralNorm(dim, tuple(rows), pts)


def _in_hull(target, gens, dim) -> bool:
    if not gens:
        return False
    k = len(gens)
    rows = []
    rhs = []
    for c in range(dim):
        rows.append([g[c] for g in gens])
        rhs.append(target[c])
    rows.append([Fraction(1)] * k)
    rhs.append(Fraction(1))
    sol = solve_lp(linear_program("min", [Fraction(0)] * k, rows, [EQ] * (dim + 1),
                                  rhs, [True] * k))
    return sol.status == "optimal"


_POINTS_CACHE: dict = {}


def ball_points(N: PolyhedralNorm):
    """Points spanning the unit ball: stored ones, else enumerated vertices."""
    if N.points is not None:
        return N.points
    cached = _POINTS_CACHE.get(N)
    if cached is None:
        cached = enumerate_vertices(polytope([list(w) for w in N.funcs],
                                             [Fraction(1)] * len(N.funcs)))
        _POINTS_CACHE[N] = cached
    return cached


def dual_vertices(N: PolyhedralNorm):
    """Extreme points of the dual unit ball (the functional list itself)."""
    return N.funcs


def l1_norm(dim: int) -> PolyhedralNorm:
    funcs = sorted(itertools.product((Fraction(-1), Fraction(1)), repeat=dim))
    pts = []
    for j in range(dim):
        e = [Fraction(0)] * dim
        e[j] = Fraction(1)
        pts.append(tuple(e))
        pts.append(tuple(-v for v in e))
    return PolyhedralNorm(dim, tuple(funcs), tuple(sorted(pts)))


def linf_norm(dim: int) -> PolyhedralNorm:
    funcs = []
    for j in range(dim):
        e = [Fraction(0)] * dim
        e[j] = Fraction(1)
        funcs.append(tuple(e))
        funcs.append(tuple(-v for v in e))
    pts = sorted(itertools.product((Fraction(-1), Fraction(1)), repeat=dim))
    return PolyhedralNorm(dim, tuple(sorted(funcs)), tuple(pts))


def scalar_norm() -> PolyhedralNorm:
    one = (Fraction(1),)
    mone = (Fraction(-1),)
    return PolyhedralNorm(1, (mone, one), (mone, one))


def free_space_norm(X: FiniteMetricSpace) -> PolyhedralNorm:
    """The free norm over coefficient vectors, with molecules as ball points."""
    verts = lipschitz_ball_vertices(X)
    pts = tuple(sorted(m.coeffs for m in free_ball_molecules(X)))
    return PolyhedralNorm(X.n - 1, verts, pts)


def metric_from_norm(N: PolyhedralNorm, labels, points) -> FiniteMetricSpace:
    """Finite pointed subspace of a normed space; the first point must be 0."""
    pts = [tuple(Fraction(v) for v in p) for p in points]
    if not pts or any(v != 0 for v in pts[0]):
        raise ValueError("first point must be the origin")
    d = [[N.norm(tuple(a - b for a, b in zip(p, q))) for q in pts] for p in pts]
    return validate_metric(labels, d)
