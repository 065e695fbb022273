"""Lipschitz-linear operators: LipL, Lip and Blip norms, linearization,
projective and injective tensor norms, and the standard constructions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .lp import LE, enumerate_vertices, linear_program, polytope, solve_lp
from .spaces import (
    FiniteMetricSpace,
    FreeVector,
    LipschitzFunctionVector,
    PolyhedralNorm,
    ball_points,
    free_ball_molecules,
    free_space_norm,
    lipschitz_ball_vertices,
    polyhedral_norm,
    scalar_norm,
)

F0 = Fraction(0)


class DimensionMismatch(ValueError):
    pass


def mat(rows):
    return tuple(tuple(Fraction(v) for v in row) for row in rows)


def zero_mat(nrows: int, ncols: int):
    return tuple((F0,) * ncols for _ in range(nrows))


def mat_vec(M, v):
    return tuple(sum(a * b for a, b in zip(row, v)) for row in M)


def mat_sub(M, N):
    return tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(M, N))


def mat_mul(M, N):
    cols = list(zip(*N))
    return tuple(tuple(sum(a * b for a, b in zip(row, col)) for col in cols) for row in M)


@dataclass(frozen=True)
class LipLinearOperator:
    """T(x, e) = A(x)·e with A(0) = 0; the table stores only non-base points."""
    space: FiniteMetricSpace
    domain: PolyhedralNorm
    codomain: PolyhedralNorm
    matrices: tuple  # per non-base point, a codomain.dim x domain.dim matrix

    def matrix(self, i: int):
        if i == 0:
            return zero_mat(self.codomain.dim, self.domain.dim)
        return self.matrices[i - 1]


def lip_linear_operator(space, domain, codomain, matrices) -> LipLinearOperator:
    ms = tuple(mat(m) for m in matrices)
    if len(ms) != space.n - 1:
        raise DimensionMismatch(f"expected {space.n - 1} matrices, got {len(ms)}")
    for m in ms:
        if len(m) != codomain.dim or any(len(r) != domain.dim for r in m):
            raise DimensionMismatch("matrix shape does not match the norms")
    return LipLinearOperator(space, domain, codomain, ms)


@dataclass(frozen=True)
class LipschitzMap:
    space: FiniteMetricSpace
    codomain: PolyhedralNorm
    values: tuple  # per non-base point, a vector in the codomain

    def at(self, i: int):
        if i == 0:
            return (F0,) * self.codomain.dim
        return self.values[i - 1]


def lipschitz_map(space, codomain, values) -> LipschitzMap:
    vals = tuple(tuple(Fraction(v) for v in row) for row in values)
    if len(vals) != space.n - 1 or any(len(v) != codomain.dim for v in vals):
        raise DimensionMismatch("value table shape does not match")
    return LipschitzMap(space, codomain, vals)


@dataclass(frozen=True)
class MetricMap:
    """Base-point-preserving point map between finite metric spaces."""
    space: FiniteMetricSpace
    target: FiniteMetricSpace
    images: tuple  # target labels, per non-base point

    def image_index(self, i: int) -> int:
        if i == 0:
            return 0
        return self.target.index(self.images[i - 1])


def metric_map(space, target, images) -> MetricMap:
    images = tuple(str(v) for v in images)
    if len(images) != space.n - 1:
        raise DimensionMismatch(f"expected {space.n - 1} images")
    for lab in images:
        if lab not in target.labels:
            raise ValueError(f"image point {lab!r} is not in the target space")
    return MetricMap(space, target, images)


@dataclass(frozen=True)
class TwoLipschitzTable:
    space_x: FiniteMetricSpace
    space_y: FiniteMetricSpace
    codomain: PolyhedralNorm
    values: tuple  # (nx-1) x (ny-1) table of codomain vectors; zero row/col implicit

    def at(self, i: int, j: int):
        if i == 0 or j == 0:
            return (F0,) * self.codomain.dim
        return self.values[i - 1][j - 1]


def two_lipschitz_table(space_x, space_y, codomain, values) -> TwoLipschitzTable:
    vals = tuple(
        tuple(tuple(Fraction(v) for v in cell) for cell in row) for row in values
    )
    if len(vals) != space_x.n - 1 or any(len(r) != space_y.n - 1 for r in vals):
        raise DimensionMismatch("table shape does not match the spaces")
    for row in vals:
        for cell in row:
            if len(cell) != codomain.dim:
                raise DimensionMismatch("cell width does not match the codomain")
    return TwoLipschitzTable(space_x, space_y, codomain, vals)


@dataclass(frozen=True)
class FreeTensor:
    """u = sum over non-base x of delta_(x,0) tensor u_x."""
    space: FiniteMetricSpace
    norm: PolyhedralNorm
    coeffs: tuple  # per non-base point, a vector u_x


def free_tensor(space, norm, coeffs) -> FreeTensor:
    cs = tuple(tuple(Fraction(v) for v in row) for row in coeffs)
    if len(cs) != space.n - 1 or any(len(c) != norm.dim for c in cs):
        raise DimensionMismatch("coefficient array shape does not match")
    return FreeTensor(space, norm, cs)


def tensor_of(m: FreeVector, norm: PolyhedralNorm, v) -> FreeTensor:
    v = tuple(Fraction(c) for c in v)
    return FreeTensor(m.space, norm, tuple(tuple(a * c for c in v) for a in m.coeffs))


# -- basic norms ----------------------------------------------------------


def opnorm(M, domain: PolyhedralNorm, codomain: PolyhedralNorm) -> Fraction:
    """Operator norm by maximizing over the primal vertices of the domain ball."""
    return max(codomain.norm(mat_vec(M, v)) for v in ball_points(domain))


def opnorm_lp(M, domain: PolyhedralNorm, codomain: PolyhedralNorm) -> Fraction:
    """The same norm through per-functional LPs; no vertex enumeration involved."""
    best = F0
    rows = [list(w) for w in domain.funcs]
    rhs = [Fraction(1)] * len(rows)
    for z in codomain.funcs:
        c = mat_vec(tuple(zip(*M)), z)  # z composed with M
        sol = solve_lp(linear_program("max", c, rows, [LE] * len(rows), rhs,
                                      [False] * domain.dim))
        assert sol.status == "optimal"
        best = max(best, sol.value)
    return best


def lip_norm(R) -> Fraction:
    """Lipschitz constant of a LipschitzMap or MetricMap (all pairs, base included)."""
    X = R.space
    best = F0
    for i, j in X.upairs():
        if isinstance(R, MetricMap):
            num = R.target.dist(R.image_index(i), R.image_index(j))
        else:
            diff = tuple(a - b for a, b in zip(R.at(i), R.at(j)))
            num = R.codomain.norm(diff)
        best = max(best, num / X.dist(i, j))
    return best


def lipl_norm(T: LipLinearOperator) -> Fraction:
    X = T.space
    best = F0
    for i, j in X.upairs():
        M = mat_sub(T.matrix(i), T.matrix(j))
        best = max(best, opnorm(M, T.domain, T.codomain) / X.dist(i, j))
    return best


def lipl_norm_via_lp(T: LipLinearOperator) -> Fraction:
    """Lip of x -> A(x) in the operator-norm metric, with LP-computed distances."""
    X = T.space
    best = F0
    for i, j in X.upairs():
        M = mat_sub(T.matrix(i), T.matrix(j))
        best = max(best, opnorm_lp(M, T.domain, T.codomain) / X.dist(i, j))
    return best


def lipl_norm_via_fields(T: LipLinearOperator) -> Fraction:
    """sup over e in B_E of Lip(x -> A(x)e), the column-slicing route."""
    best = F0
    for v in ball_points(T.domain):
        R = LipschitzMap(T.space, T.codomain,
                         tuple(mat_vec(m, v) for m in T.matrices))
        best = max(best, lip_norm(R))
    return best


def blip_norm(B: TwoLipschitzTable) -> Fraction:
    X, Y = B.space_x, B.space_y
    best = F0
    for x, xp in X.upairs():
        for y, yp in Y.upairs():
            diff = tuple(
                B.at(x, y)[k] - B.at(x, yp)[k] - B.at(xp, y)[k] + B.at(xp, yp)[k]
                for k in range(B.codomain.dim)
            )
            best = max(best, B.codomain.norm(diff) / (X.dist(x, xp) * Y.dist(y, yp)))
    return best


# -- linearization ---------------------------------------------------------


def linearize_apply(T: LipLinearOperator, u: FreeTensor):
    if u.space != T.space or u.norm.dim != T.domain.dim:
        raise DimensionMismatch("tensor does not live on the operator's domain")
    out = [F0] * T.codomain.dim
    for x in range(1, T.space.n):
        img = mat_vec(T.matrix(x), u.coeffs[x - 1])
        out = [a + b for a, b in zip(out, img)]
    return tuple(out)


def linearization_norm(T: LipLinearOperator) -> Fraction:
    """Norm of the linearized operator over molecule-by-vertex elementary tensors."""
    best = F0
    for m in free_ball_molecules(T.space):
        for v in ball_points(T.domain):
            u = tensor_of(m, T.domain, v)
            best = max(best, T.codomain.norm(linearize_apply(T, u)))
    return best


# -- tensor norms ----------------------------------------------------------


def projective_norm(u: FreeTensor) -> Fraction:
    """Dual LP over E*-valued tables g with g(0) = 0 and Lip(g) <= 1 in dual norm."""
    X = u.space
    dim = u.norm.dim
    nvars = (X.n - 1) * dim
    c = [F0] * nvars
    for x in range(1, X.n):
        for k in range(dim):
            c[(x - 1) * dim + k] = u.coeffs[x - 1][k]
    rows = []
    rhs = []
    for i, j in X.pairs():
        for v in ball_points(u.norm):
            row = [F0] * nvars
            if i > 0:
                for k in range(dim):
                    row[(i - 1) * dim + k] += v[k]
            if j > 0:
                for k in range(dim):
                    row[(j - 1) * dim + k] -= v[k]
            rows.append(row)
            rhs.append(X.dist(i, j))
    sol = solve_lp(linear_program("max", c, rows, [LE] * len(rows), rhs,
                                  [False] * nvars))
    assert sol.status == "optimal"
    return sol.value


def projective_norm_primal(u: FreeTensor) -> Fraction:
    """Primal oracle: cheapest molecule decomposition over unordered pairs."""
    X = u.space
    dim = u.norm.dim
    pairs = X.upairs()
    # variables: e_{ij} in E (free) and t_{ij} >= ||e_{ij}||, per pair
    nv = len(pairs) * (dim + 1)

    def evar(p, k):
        return p * (dim + 1) + k

    def tvar(p):
        return p * (dim + 1) + dim

    rows = []
    rels = []
    rhs = []
    for p, _ in enumerate(pairs):
        for w in u.norm.funcs:
            row = [F0] * nv
            for k in range(dim):
                row[evar(p, k)] = w[k]
            row[tvar(p)] = Fraction(-1)
            rows.append(row)
            rels.append(LE)
            rhs.append(F0)
    for z in range(1, X.n):
        for k in range(dim):
            row = [F0] * nv
            for p, (i, j) in enumerate(pairs):
                if i == z:
                    row[evar(p, k)] += 1
                if j == z:
                    row[evar(p, k)] -= 1
            rows.append(row)
            rels.append("==")
            rhs.append(u.coeffs[z - 1][k])
    c = [F0] * nv
    for p, (i, j) in enumerate(pairs):
        c[tvar(p)] = X.dist(i, j)
    sol = solve_lp(linear_program("min", c, rows, rels, rhs, [False] * nv))
    assert sol.status == "optimal"
    return sol.value


def injective_norm(u: FreeTensor) -> Fraction:
    verts = lipschitz_ball_vertices(u.space)
    best = F0
    for f in verts:
        for w in u.norm.funcs:
            s = sum(f[x - 1] * sum(a * b for a, b in zip(w, u.coeffs[x - 1]))
                    for x in range(1, u.space.n))
            best = max(best, abs(s))
    return best


_LIPL_BALL_CACHE: dict = {}


def lipl_ball_vertices(X: FiniteMetricSpace, E: PolyhedralNorm):
    """Vertices of the unit ball of scalar LipL tables, i.e. E*-valued g with
    g(0) = 0 and dual-norm increments bounded by the metric.  Flattened layout:
    g[x][k] at (x-1)*dim + k."""
    key = (X, E)
    cached = _LIPL_BALL_CACHE.get(key)
    if cached is not None:
        return cached
    dim = E.dim
    nvars = (X.n - 1) * dim
    A = []
    b = []
    for i, j in X.pairs():
        for v in ball_points(E):
            row = [F0] * nvars
            if i > 0:
                for k in range(dim):
                    row[(i - 1) * dim + k] += v[k]
            if j > 0:
                for k in range(dim):
                    row[(j - 1) * dim + k] -= v[k]
            A.append(row)
            b.append(X.dist(i, j))
    verts = enumerate_vertices(polytope(A, b))
    _LIPL_BALL_CACHE[key] = verts
    return verts


def pair(u: FreeTensor, T: LipLinearOperator) -> Fraction:
    if T.codomain.dim != 1:
        raise DimensionMismatch("pairing needs a scalar-valued operator")
    return linearize_apply(T, u)[0]


def projective_norm_via_duality(u: FreeTensor) -> Fraction:
    """max |<u, g>| over enumerated scalar-LipL-ball vertices; duality oracle."""
    best = F0
    dim = u.norm.dim
    for g in lipl_ball_vertices(u.space, u.norm):
        s = F0
        for x in range(1, u.space.n):
            s += sum(u.coeffs[x - 1][k] * g[(x - 1) * dim + k] for k in range(dim))
        best = max(best, abs(s))
    return best


# -- constructions ---------------------------------------------------------


def dual_norm_of(E: PolyhedralNorm) -> PolyhedralNorm:
    """The dual space as a PolyhedralNorm: functionals are E's ball vertices."""
    return polyhedral_norm(E.dim, ball_points(E), points=E.funcs)


def associate_TR(R: LipschitzMap) -> LipLinearOperator:
    """T_R(x, e*) = e*(R(x)) on X x E*."""
    Estar = dual_norm_of(R.codomain)
    mats = tuple((tuple(v),) for v in R.values)
    return LipLinearOperator(R.space, Estar, scalar_norm(), mats)


def elementary_operator(f: LipschitzFunctionVector, estar, z,
                        domain: PolyhedralNorm, codomain: PolyhedralNorm) -> LipLinearOperator:
    """A(x) = f(x) * (z outer e*): the rank-one operator f(x)e*(e)z."""
    estar = tuple(Fraction(v) for v in estar)
    z = tuple(Fraction(v) for v in z)
    if len(estar) != domain.dim or len(z) != codomain.dim:
        raise DimensionMismatch("functional or vector width mismatch")
    mats = []
    for x in range(1, f.space.n):
        fx = f.at(x)
        mats.append(tuple(tuple(fx * zi * ej for ej in estar) for zi in z))
    return LipLinearOperator(f.space, domain, codomain, tuple(mats))


def compose(w, T: LipLinearOperator, R: MetricMap, v,
            domain: PolyhedralNorm, codomain: PolyhedralNorm) -> LipLinearOperator:
    """w o T o (R, v) for linear w: F0 -> F, v: E -> E0 and a point map R: X -> X0."""
    if R.target != T.space:
        raise ValueError("R must map into the operator's metric space")
    w = mat(w)
    v = mat(v)
    if len(v) != T.domain.dim or any(len(r) != domain.dim for r in v):
        raise DimensionMismatch("v must map the new domain into the operator's")
    if len(w) != codomain.dim or any(len(r) != T.codomain.dim for r in w):
        raise DimensionMismatch("w must map the operator's codomain into the new one")
    mats = []
    for x in range(1, R.space.n):
        mats.append(mat_mul(w, mat_mul(T.matrix(R.image_index(x)), v)))
    return LipLinearOperator(R.space, domain, codomain, tuple(mats))


def delta_box(v, X: FiniteMetricSpace, domain: PolyhedralNorm,
              codomain: PolyhedralNorm) -> LipLinearOperator:
    """(x, e) -> delta_(x,0) tensor v(e), into F(X) tensor codomain under pi.

    The projective norm of the tensor space is polyhedral with dual ball the
    scalar LipL table polytope, so the result is an ordinary LipLinearOperator.
    """
    v = mat(v)
    if any(len(r) != domain.dim for r in v) or len(v) != codomain.dim:
        raise DimensionMismatch("v must map the domain norm into the codomain norm")
    n = X.n
    fdim = codomain.dim
    funcs = lipl_ball_vertices(X, codomain)
    pi_norm = PolyhedralNorm((n - 1) * fdim, funcs)
    mats = []
    for x in range(1, n):
        rows = []
        for xp in range(1, n):
            for k in range(fdim):
                rows.append(v[k] if xp == x else (F0,) * domain.dim)
        mats.append(tuple(rows))
    return LipLinearOperator(X, domain, pi_norm, tuple(mats))


def from_two_lipschitz(B: TwoLipschitzTable) -> LipLinearOperator:
    """The LipL operator on X x F(Y) with A(x)·delta_(y,0) = B[x][y]."""
    Y = B.space_y
    dom = free_space_norm(Y)
    mats = []
    for x in range(1, B.space_x.n):
        cols = [B.at(x, y) for y in range(1, Y.n)]
        rows = tuple(tuple(col[k] for col in cols) for k in range(B.codomain.dim))
        mats.append(rows)
    return LipLinearOperator(B.space_x, dom, B.codomain, tuple(mats))


def to_two_lipschitz(T: LipLinearOperator, Y: FiniteMetricSpace) -> TwoLipschitzTable:
    """Restrict back along (id_X, delta_Y); exact inverse of from_two_lipschitz."""
    if T.domain.dim != Y.n - 1:
        raise DimensionMismatch("operator domain is not F(Y) for this Y")
    vals = []
    for x in range(1, T.space.n):
        row = []
        for y in range(1, Y.n):
            e = [F0] * (Y.n - 1)
            e[y - 1] = Fraction(1)
            row.append(mat_vec(T.matrix(x), tuple(e)))
        vals.append(tuple(row))
    return TwoLipschitzTable(T.space, Y, T.codomain, tuple(vals))


def bilinear_sup_norm(Phi, E0: PolyhedralNorm, E: PolyhedralNorm,
                      F: PolyhedralNorm) -> Fraction:
    """sup of ||Phi(a, b)||_F over primal vertex pairs; Phi[k][i][j] trilinear data."""
    best = F0
    for a in ball_points(E0):
        for b in ball_points(E):
            img = tuple(
                sum(Phi[k][i][j] * a[i] * b[j]
                    for i in range(E0.dim) for j in range(E.dim))
                for k in range(F.dim)
            )
            best = max(best, F.norm(img))
    return best
