"""Integral norms of Lip-Linear operators: representing measures and duality.

The integral norm is the least total variation of a measure on the product
of the Lipschitz unit ball and the domain's dual ball that reproduces the
operator pointwise.  With polyhedral balls the measure search is a finite
LP over vertex pairs; the dual description (supremum over the injective
tensor ball) is a second, independently built LP, and the two values must
agree exactly by strong duality.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .config import CapExceeded, Caps
from .lp import EQ, GE, LE, linear_program, solve_lp
from .operators import DimensionMismatch, LipLinearOperator, lip_linear_operator
from .spaces import ball_points, dual_vertices, lipschitz_ball_vertices
from .summing import VerificationReport

F0 = Fraction(0)
F1 = Fraction(1)


class IntegralError(ValueError):
    """Ill-posed integral computation or malformed certificate."""


class SupportOutsideBall(IntegralError):
    """A certificate atom lies outside its declared unit ball."""


@dataclass(frozen=True)
class IntegralCertificate:
    """Discrete representing measure on vertex pairs of B_{X#} x B_{E*}.

    Scalar targets carry one signed rational weight per atom and the value
    is the sum of their absolute values.  Vector targets carry a codomain
    vector per atom instead and the value is the sum of codomain norms.
    Atoms are plain rational tuples so a verifier needs nothing but the
    subject data to re-check them.
    """

    support: tuple        # ((f, w), ...): f over labels[1:], w a dual vertex
    weights: tuple | None
    vectors: tuple | None
    value: Fraction


@dataclass(frozen=True)
class LinftyFactorization:
    """Discrete sup-norm factorization read off a representing measure."""

    point_rows: tuple       # per label, base included: sign-absorbed f values
    functional_rows: tuple  # per atom: the dual functional on the domain
    mu: tuple               # nonnegative atom masses
    lip_R: Fraction
    sup_v: Fraction
    product: Fraction


def _canonical_atom(f, w):
    """Flip (f, w) to (-f, -w) when the leading entry is negative.

    Both signings integrate to the same bilinear term, so the choice is
    presentation only; fixing it keeps certificates deterministic.
    """
    for v in f + w:
        if v > 0:
            return f, w, False
        if v < 0:
            return tuple(-a for a in f), tuple(-a for a in w), True
    return f, w, False


def integral_norm(T: LipLinearOperator, caps: Caps | None = None):
    """Least total variation representing T; returns (value, certificate).

    Measures are restricted to vertex pairs of the two balls.  Nothing is
    lost: the integrand f(x)e*(e) is bilinear, so an atom of weight c at an
    interior pair (sum_i a_i f_i, sum_j b_j w_j) splits into atoms c*a_i*b_j
    at the vertex pairs, reproducing the same operator with the same total
    variation (the a_i and b_j are convex weights).  Signed weights enter
    the LP as a difference of two nonnegative columns.
    """
    caps = caps if caps is not None else Caps()
    X, E, Fn = T.space, T.domain, T.codomain
    fverts = lipschitz_ball_vertices(X, caps.points)
    wverts = dual_vertices(E)
    if len(fverts) * len(wverts) * Fn.dim > caps.vertices:
        raise CapExceeded("representation LP exceeds the vertex cap")
    pairs = [(f, w) for f in fverts for w in wverts]
    if Fn.dim == 1:
        return _integral_scalar(T, pairs)
    return _integral_vector(T, pairs)


def _integral_scalar(T, pairs):
    X, E = T.space, T.domain
    ncols = 2 * len(pairs)
    rows, rhs = [], []
    for a in range(1, X.n):
        Ma = T.matrix(a)
        for k in range(E.dim):
            row = []
            for f, w in pairs:
                co = f[a - 1] * w[k]
                row.append(co)
                row.append(-co)
            rows.append(row)
            rhs.append(Ma[0][k])
    lp = linear_program("min", [F1] * ncols, rows, [EQ] * len(rows), rhs,
                        [True] * ncols)
    sol = solve_lp(lp)
    if sol.status != "optimal":
        raise IntegralError(f"representation LP is {sol.status}")
    merged: dict = {}
    for t, (f, w) in enumerate(pairs):
        wt = sol.x[2 * t] - sol.x[2 * t + 1]
        if wt == 0:
            continue
        f, w, _ = _canonical_atom(f, w)
        merged[(f, w)] = merged.get((f, w), F0) + wt
    support = tuple(k for k, v in merged.items() if v != 0)
    weights = tuple(merged[k] for k in support)
    total = sum((abs(v) for v in weights), F0)
    assert total == sol.value
    return sol.value, IntegralCertificate(support, weights, None, sol.value)


def _integral_vector(T, pairs):
    X, E, Fn = T.space, T.domain, T.codomain
    fd = Fn.dim
    stride = 2 * fd + 1  # per pair: fd plus-parts, fd minus-parts, one epigraph
    width = len(pairs) * stride

    def zplus(t, r):
        return t * stride + r

    def zminus(t, r):
        return t * stride + fd + r

    def tvar(t):
        return t * stride + 2 * fd

    rows, rels, rhs = [], [], []
    for a in range(1, X.n):
        Ma = T.matrix(a)
        for k in range(E.dim):
            for r in range(fd):
                row = [F0] * width
                for t, (f, w) in enumerate(pairs):
                    co = f[a - 1] * w[k]
                    row[zplus(t, r)] = co
                    row[zminus(t, r)] = -co
                rows.append(row)
                rels.append(EQ)
                rhs.append(Ma[r][k])
    fduals = dual_vertices(Fn)
    for t in range(len(pairs)):
        for wp in fduals:
            row = [F0] * width
            row[tvar(t)] = F1
            for r in range(fd):
                row[zplus(t, r)] = -wp[r]
                row[zminus(t, r)] = wp[r]
            rows.append(row)
            rels.append(GE)
            rhs.append(F0)
    c = [F0] * width
    for t in range(len(pairs)):
        c[tvar(t)] = F1
    sol = solve_lp(linear_program("min", c, rows, rels, rhs, [True] * width))
    if sol.status != "optimal":
        raise IntegralError(f"representation LP is {sol.status}")
    merged: dict = {}
    for t, (f, w) in enumerate(pairs):
        z = tuple(sol.x[zplus(t, r)] - sol.x[zminus(t, r)] for r in range(fd))
        if all(v == 0 for v in z):
            continue
        f, w, _ = _canonical_atom(f, w)
        prev = merged.get((f, w))
        merged[(f, w)] = z if prev is None else tuple(a + b for a, b in zip(prev, z))
    support = tuple(k for k, z in merged.items() if any(v != 0 for v in z))
    vectors = tuple(merged[k] for k in support)
    total = sum((Fn.norm(z) for z in vectors), F0)
    assert total == sol.value
    return sol.value, IntegralCertificate(support, None, vectors, sol.value)


def eps_dual_check(T: LipLinearOperator, caps: Caps | None = None) -> Fraction:
    """sup |T-hat(u)| over the injective-norm unit ball, as one LP.

    The injective ball is cut out by the finitely many functionals
    u -> sum_x f(x) w(u_x) with (f, w) ranging over vertex pairs, since the
    defining supremum is attained at extreme points.  Strong LP duality
    makes the result equal integral_norm on scalar targets; the two
    programs are assembled independently so the pair is a cross-check.
    """
    if T.codomain.dim != 1:
        raise IntegralError("epsilon duality check needs a scalar codomain")
    caps = caps if caps is not None else Caps()
    X, E = T.space, T.domain
    fverts = lipschitz_ball_vertices(X, caps.points)
    wverts = dual_vertices(E)
    nbase, d = X.n - 1, E.dim
    rows, rels, rhs = [], [], []
    seen = set()
    for f in fverts:
        for w in wverts:
            row = tuple(f[a] * w[k] for a in range(nbase) for k in range(d))
            if row in seen or tuple(-v for v in row) in seen:
                continue
            seen.add(row)
            rows.append(list(row))
            rels.append(LE)
            rhs.append(F1)
            rows.append([-v for v in row])
            rels.append(LE)
            rhs.append(F1)
    c = [T.matrix(a + 1)[0][k] for a in range(nbase) for k in range(d)]
    sol = solve_lp(linear_program("max", c, rows, rels, rhs,
                                  [False] * (nbase * d)))
    if sol.status != "optimal":
        raise IntegralError(f"duality LP is {sol.status}")
    return sol.value


def _check_atom(f, w, X, E):
    if len(f) != X.n - 1 or len(w) != E.dim:
        raise IntegralError("atom width does not match the spaces")

    def val(i):
        return F0 if i == 0 else f[i - 1]

    for i, j in X.upairs():
        if abs(val(i) - val(j)) > X.dist(i, j):
            raise SupportOutsideBall(
                f"function atom violates the Lipschitz ball at pair ({i}, {j})")
    for p in ball_points(E):
        if sum(wi * pi for wi, pi in zip(w, p)) > 1:
            raise SupportOutsideBall("functional atom exceeds the dual ball")


def reconstruct(cert: IntegralCertificate, X, E, Fn) -> LipLinearOperator:
    """Evaluate the finite integral formula as a LipLinearOperator."""
    scalar = cert.vectors is None
    if scalar and Fn.dim != 1:
        raise IntegralError("weights-only certificate needs a scalar codomain")
    coeffs = cert.weights if scalar else cert.vectors
    if coeffs is None or len(coeffs) != len(cert.support):
        raise IntegralError("certificate weight count does not match support")
    mats = [[[F0] * E.dim for _ in range(Fn.dim)] for _ in range(X.n - 1)]
    for (f, w), cv in zip(cert.support, coeffs):
        _check_atom(f, w, X, E)
        if not scalar and len(cv) != Fn.dim:
            raise IntegralError("atom vector width does not match the codomain")
        for a in range(1, X.n):
            fa = f[a - 1]
            if fa == 0:
                continue
            for k in range(E.dim):
                base = fa * w[k]
                if scalar:
                    mats[a - 1][0][k] += cv * base
                else:
                    for r in range(Fn.dim):
                        mats[a - 1][r][k] += cv[r] * base
    return lip_linear_operator(X, E, Fn, mats)


def verify_certificate(cert: IntegralCertificate,
                       T: LipLinearOperator) -> VerificationReport:
    """Re-check a certificate against its subject, exhaustively.

    Confirms every atom sits inside its ball, the reconstructed table
    matches the subject entry by entry, and the stored value is exactly
    the measure's total variation.
    """
    X, E, Fn = T.space, T.domain, T.codomain
    try:
        S = reconstruct(cert, X, E, Fn)
    except (IntegralError, DimensionMismatch) as err:
        return VerificationReport(False, "integral", 0, True, str(err))
    checked = 0
    for a in range(1, X.n):
        Ma, Sa = T.matrix(a), S.matrix(a)
        for r in range(Fn.dim):
            for k in range(E.dim):
                checked += 1
                if Ma[r][k] != Sa[r][k]:
                    return VerificationReport(False, "integral", checked, True,
                                              (X.labels[a], r, k))
    if cert.vectors is None:
        tv = sum((abs(v) for v in cert.weights), F0)
    else:
        tv = sum((Fn.norm(z) for z in cert.vectors), F0)
    checked += 1
    if tv != cert.value:
        return VerificationReport(False, "integral", checked, True,
                                  "total variation mismatch")
    return VerificationReport(True, "integral", checked, True)


def factorize_Linfty(cert: IntegralCertificate, X, E) -> LinftyFactorization:
    """T(x, e) = sum_k R(x)_k v(e)_k mu_k through sup-norm tables on the atoms.

    Weight signs are absorbed into R, so mu is the variation measure.  The
    reported product sup_v * lip_R * mu(Omega) upper-bounds the integral
    norm; it attains it when every atom sits at a norming vertex pair, as
    solver-produced certificates do.
    """
    if cert.vectors is not None:
        raise IntegralError("factorization needs a scalar-codomain certificate")
    for f, w in cert.support:
        _check_atom(f, w, X, E)
    signs = [F1 if v >= 0 else -F1 for v in cert.weights]
    mu = tuple(abs(v) for v in cert.weights)
    point_rows = []
    for i in range(X.n):
        point_rows.append(tuple(
            s * (F0 if i == 0 else f[i - 1])
            for s, (f, _) in zip(signs, cert.support)))
    lip = F0
    for i, j in X.upairs():
        num = max((abs(a - b) for a, b in zip(point_rows[i], point_rows[j])),
                  default=F0)
        lip = max(lip, num / X.dist(i, j))
    sup = F0
    for _, w in cert.support:
        sup = max(sup, max(sum(wi * pi for wi, pi in zip(w, p))
                           for p in ball_points(E)))
    mass = sum(mu, F0)
    return LinftyFactorization(tuple(point_rows),
                               tuple(w for _, w in cert.support),
                               mu, lip, sup, lip * sup * mass)
