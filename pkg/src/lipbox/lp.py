"""Exact rational linear programming and polytope vertex enumeration.

Two-phase simplex with Bland's rule over exact rationals.  Every returned
solution carries a certificate (optimal duals, Farkas row combination, or an
improving ray) and is re-checked by direct substitution before being handed
back, so downstream norm computations never depend on solver internals.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .config import CapExceeded

try:
    from gmpy2 import mpq as _Q  # speed only; all public values are Fractions
except ImportError:  # pragma: no cover
    _Q = Fraction

Rational = Fraction

LE, EQ, GE = "<=", "==", ">="
_RELS = (LE, EQ, GE)
_SENSES = ("min", "max")


class LpFormatError(ValueError):
    """Program dimensions or field values are inconsistent."""


class CertificationError(AssertionError):
    """A solution failed its own certificate check; indicates a solver bug."""


class UnboundedPolytopeError(ValueError):
    """Vertex enumeration was asked for a set with a recession direction."""


class DegeneratePolytopeError(ValueError):
    """The feasible set is empty-interior, so vertex enumeration is refused."""


def _fr(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    return Fraction(int(v.numerator), int(v.denominator))


@dataclass(frozen=True)
class LinearProgram:
    sense: str      # "min" or "max"
    c: tuple        # objective, length n
    rows: tuple     # m x n constraint matrix
    rels: tuple     # "<=", "==" or ">=" per row
    b: tuple        # right-hand sides, length m
    nonneg: tuple   # per-variable: True means x_j >= 0, False means free


def linear_program(sense, c, rows, rels, b, nonneg) -> LinearProgram:
    return LinearProgram(
        sense,
        tuple(Fraction(v) for v in c),
        tuple(tuple(Fraction(v) for v in row) for row in rows),
        tuple(rels),
        tuple(Fraction(v) for v in b),
        tuple(bool(v) for v in nonneg),
    )


@dataclass(frozen=True)
class LpSolution:
    status: str                 # "optimal", "infeasible" or "unbounded"
    value: Fraction | None
    x: tuple | None             # optimal point, or a feasible point when unbounded
    y: tuple | None             # dual multipliers (optimal) or Farkas row weights
    ray: tuple | None = None    # improving direction when unbounded


def _validate(lp: LinearProgram) -> None:
    if lp.sense not in _SENSES:
        raise LpFormatError(f"sense must be 'min' or 'max', got {lp.sense!r}")
    n = len(lp.c)
    if n == 0:
        raise LpFormatError("program has no variables")
    m = len(lp.rows)
    if len(lp.rels) != m or len(lp.b) != m:
        raise LpFormatError(f"row/rel/rhs counts differ: {m}/{len(lp.rels)}/{len(lp.b)}")
    if len(lp.nonneg) != n:
        raise LpFormatError(f"nonneg has length {len(lp.nonneg)}, expected {n}")
    for i, row in enumerate(lp.rows):
        if len(row) != n:
            raise LpFormatError(f"row {i} has width {len(row)}, expected {n}")
    for i, rel in enumerate(lp.rels):
        if rel not in _RELS:
            raise LpFormatError(f"row {i} has relation {rel!r}")


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Solve exactly; the returned solution has already passed check_solution."""
    _validate(lp)
    sol = _simplex(lp)
    check_solution(lp, sol)
    return sol


def _simplex(lp: LinearProgram) -> LpSolution:
    n = len(lp.c)
    m = len(lp.rows)
    minimize = lp.sense == "min"
    Z = _Q(0)
    ONE = _Q(1)

    # split free variables, append slack/surplus columns
    cols = []
    for j in range(n):
        cols.append((j, 1))
        if not lp.nonneg[j]:
            cols.append((j, -1))
    nsplit = len(cols)
    ncols = nsplit + sum(1 for r in lp.rels if r != EQ)

    rowsq = [[_Q(v) for v in row] for row in lp.rows]
    A = [[Z] * ncols for _ in range(m)]
    bq = [_Q(v) for v in lp.b]
    sidx = nsplit
    for i in range(m):
        ri = rowsq[i]
        Ai = A[i]
        for k, (j, sg) in enumerate(cols):
            Ai[k] = ri[j] if sg > 0 else -ri[j]
        if lp.rels[i] != EQ:
            Ai[sidx] = ONE if lp.rels[i] == LE else -ONE
            sidx += 1
    flip = [False] * m
    for i in range(m):
        if bq[i] < 0:
            flip[i] = True
            bq[i] = -bq[i]
            A[i] = [-v for v in A[i]]

    width = ncols + m
    T = [A[i] + [Z] * m + [bq[i]] for i in range(m)]
    for i in range(m):
        T[i][ncols + i] = ONE
    basis = list(range(ncols, ncols + m))

    state = {"obj": Z}
    red = [Z] * width

    def pivot(pr: int, pc: int) -> None:
        piv = T[pr][pc]
        T[pr] = [v / piv for v in T[pr]]
        rowp = T[pr]
        for i in range(len(T)):
            if i != pr and T[i][pc]:
                f = T[i][pc]
                T[i] = [a - f * p for a, p in zip(T[i], rowp)]
        f = red[pc]
        if f:
            state["obj"] += f * rowp[width]
            red[:] = [a - f * p for a, p in zip(red, rowp[:width])]
        basis[pr] = pc

    def run(limit: int):
        # Bland's rule: smallest eligible entering index, leaving ties by
        # smallest basis index; guarantees finite termination
        while True:
            pc = -1
            for j in range(limit):
                if red[j] < 0:
                    pc = j
                    break
            if pc < 0:
                return None
            pr = -1
            best = None
            for i in range(len(T)):
                tic = T[i][pc]
                if tic > 0:
                    ratio = T[i][width] / tic
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[pr]):
                        best = ratio
                        pr = i
            if pr < 0:
                return pc
            pivot(pr, pc)

    # phase 1: minimize the artificial mass
    for j in range(width):
        s = Z
        for i in range(len(T)):
            s += T[i][j]
        red[j] = (ONE if j >= ncols else Z) - s
    state["obj"] = sum(bq, Z)
    ent = run(width)
    if ent is not None:
        raise CertificationError("phase 1 cannot be unbounded")
    if state["obj"] != 0:
        ystd = [ONE - red[ncols + i] for i in range(m)]
        y = [_fr(-v if flip[i] else v) for i, v in enumerate(ystd)]
        return LpSolution(status="infeasible", value=None, x=None, y=tuple(y))

    # drive basic artificials out; a row with no structural pivot is redundant
    for r in range(len(T) - 1, -1, -1):
        if basis[r] < ncols:
            continue
        pc = next((j for j in range(ncols) if T[r][j] != 0), None)
        if pc is not None:
            pivot(r, pc)  # rhs is 0 here, so any nonzero pivot keeps feasibility
        else:
            del T[r]
            del basis[r]

    # phase 2
    cost = [Z] * width
    for k, (j, sg) in enumerate(cols):
        cj = _Q(lp.c[j])
        cost[k] = cj if sg > 0 else -cj
    if not minimize:
        for k in range(nsplit):
            cost[k] = -cost[k]
    for j in range(width):
        s = Z
        for i in range(len(T)):
            cb = cost[basis[i]]
            if cb:
                s += cb * T[i][j]
        red[j] = cost[j] - s
    obj = Z
    for i in range(len(T)):
        cb = cost[basis[i]]
        if cb:
            obj += cb * T[i][width]
    state["obj"] = obj
    ent = run(ncols)

    xsplit = [Z] * ncols
    for i in range(len(T)):
        if basis[i] < ncols:
            xsplit[basis[i]] = T[i][width]
    x = [Fraction(0)] * n
    for k, (j, sg) in enumerate(cols):
        x[j] += _fr(xsplit[k]) if sg > 0 else -_fr(xsplit[k])

    if ent is not None:
        dsplit = [Z] * ncols
        dsplit[ent] = ONE
        for i in range(len(T)):
            if basis[i] < ncols:
                dsplit[basis[i]] = -T[i][ent]
        ray = [Fraction(0)] * n
        for k, (j, sg) in enumerate(cols):
            ray[j] += _fr(dsplit[k]) if sg > 0 else -_fr(dsplit[k])
        return LpSolution(status="unbounded", value=None, x=tuple(x), y=None, ray=tuple(ray))

    # duals live in the artificial columns; dropped redundant rows get zero
    ystd = [Fraction(0)] * m
    for i in range(m):
        s = Z
        for k in range(len(T)):
            cb = cost[basis[k]]
            if cb:
                s += cb * T[k][ncols + i]
        ystd[i] = _fr(s)
    value = _fr(state["obj"])
    y = [(-v if flip[i] else v) for i, v in enumerate(ystd)]
    if not minimize:
        value = -value
        y = [-v for v in y]
    return LpSolution(status="optimal", value=value, x=tuple(x), y=tuple(y))


def check_solution(lp: LinearProgram, sol: LpSolution) -> None:
    """Verify the certificate by direct substitution; raise CertificationError."""
    if sol.status == "optimal":
        _check_optimal(lp, sol)
    elif sol.status == "infeasible":
        _check_farkas(lp, sol.y)
    elif sol.status == "unbounded":
        _check_ray(lp, sol)
    else:
        raise CertificationError(f"unknown status {sol.status!r}")


def _check_feasible(lp: LinearProgram, x) -> None:
    for j, nn in enumerate(lp.nonneg):
        if nn and x[j] < 0:
            raise CertificationError(f"x[{j}] < 0")
    for i, row in enumerate(lp.rows):
        lhs = sum(a * v for a, v in zip(row, x))
        if lp.rels[i] == LE and lhs > lp.b[i]:
            raise CertificationError(f"row {i} violated")
        if lp.rels[i] == GE and lhs < lp.b[i]:
            raise CertificationError(f"row {i} violated")
        if lp.rels[i] == EQ and lhs != lp.b[i]:
            raise CertificationError(f"row {i} violated")


def _check_optimal(lp: LinearProgram, sol: LpSolution) -> None:
    x, y = sol.x, sol.y
    _check_feasible(lp, x)
    if sum(cj * xj for cj, xj in zip(lp.c, x)) != sol.value:
        raise CertificationError("objective mismatch")
    minimize = lp.sense == "min"
    ym = list(y) if minimize else [-v for v in y]
    cm = list(lp.c) if minimize else [-v for v in lp.c]
    for i, rel in enumerate(lp.rels):
        if rel == LE and ym[i] > 0:
            raise CertificationError(f"dual sign row {i}")
        if rel == GE and ym[i] < 0:
            raise CertificationError(f"dual sign row {i}")
    for j in range(len(cm)):
        rc = cm[j] - sum(ym[i] * lp.rows[i][j] for i in range(len(lp.rows)))
        if lp.nonneg[j]:
            if rc < 0:
                raise CertificationError(f"reduced cost {j} negative")
            if rc != 0 and x[j] != 0:
                raise CertificationError(f"complementary slackness var {j}")
        elif rc != 0:
            raise CertificationError(f"reduced cost {j} nonzero for free var")
    for i, row in enumerate(lp.rows):
        slack = sum(a * v for a, v in zip(row, x)) - lp.b[i]
        if ym[i] != 0 and slack != 0:
            raise CertificationError(f"complementary slackness row {i}")
    vm = sol.value if minimize else -sol.value
    if sum(ym[i] * lp.b[i] for i in range(len(lp.b))) != vm:
        raise CertificationError("strong duality fails")


def _check_farkas(lp: LinearProgram, y) -> None:
    # y combines rows into 0 >= (positive), proving emptiness
    for i, rel in enumerate(lp.rels):
        if rel == LE and y[i] > 0:
            raise CertificationError(f"farkas sign row {i}")
        if rel == GE and y[i] < 0:
            raise CertificationError(f"farkas sign row {i}")
    for j in range(len(lp.c)):
        z = sum(y[i] * lp.rows[i][j] for i in range(len(lp.rows)))
        if lp.nonneg[j]:
            if z > 0:
                raise CertificationError(f"farkas column {j}")
        elif z != 0:
            raise CertificationError(f"farkas column {j} (free)")
    if sum(y[i] * lp.b[i] for i in range(len(lp.b))) <= 0:
        raise CertificationError("farkas combination not positive")


def _check_ray(lp: LinearProgram, sol: LpSolution) -> None:
    _check_feasible(lp, sol.x)
    r = sol.ray
    for j, nn in enumerate(lp.nonneg):
        if nn and r[j] < 0:
            raise CertificationError(f"ray[{j}] < 0")
    for i, row in enumerate(lp.rows):
        d = sum(a * v for a, v in zip(row, r))
        if lp.rels[i] == LE and d > 0:
            raise CertificationError(f"ray violates row {i}")
        if lp.rels[i] == GE and d < 0:
            raise CertificationError(f"ray violates row {i}")
        if lp.rels[i] == EQ and d != 0:
            raise CertificationError(f"ray violates row {i}")
    gain = sum(cj * vj for cj, vj in zip(lp.c, r))
    if lp.sense == "min" and gain >= 0:
        raise CertificationError("ray does not improve")
    if lp.sense == "max" and gain <= 0:
        raise CertificationError("ray does not improve")


@dataclass(frozen=True)
class Polytope:
    A: tuple  # rows of the system A x <= b
    b: tuple


def polytope(A, b) -> Polytope:
    return Polytope(
        tuple(tuple(Fraction(v) for v in row) for row in A),
        tuple(Fraction(v) for v in b),
    )


def _rank(rows, n: int) -> int:
    M = [list(r) for r in rows]
    rank = 0
    for col in range(n):
        piv = next((i for i in range(rank, len(M)) if M[i][col] != 0), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        prow = M[rank]
        inv = prow[col]
        for i in range(len(M)):
            if i != rank and M[i][col]:
                f = M[i][col] / inv
                M[i] = [a - f * p for a, p in zip(M[i], prow)]
        rank += 1
        if rank == len(M):
            break
    return rank


def enumerate_vertices(poly: Polytope, *, dim_cap: int = 10, vertex_cap: int = 100000):
    """All vertices of {x : A x <= b}, sorted lexicographically.

    The set must be bounded and full-dimensional; emptiness yields ().
    Incremental double description seeded from the exact bounding box, with
    tight-row masks kept exact and the combinatorial adjacency test.
    """
    n = len(poly.A[0]) if poly.A else 0
    if n == 0:
        raise LpFormatError("polytope has no coordinates")
    if n > dim_cap:
        raise CapExceeded(f"polytope dimension {n} exceeds cap {dim_cap}")
    m = len(poly.A)

    # interior test: max t with A x + t <= b, t <= 1
    rows = [list(r) + [Fraction(1)] for r in poly.A]
    rows.append([Fraction(0)] * n + [Fraction(1)])
    rels = [LE] * (m + 1)
    rhs = list(poly.b) + [Fraction(1)]
    obj = [Fraction(0)] * n + [Fraction(1)]
    sol = solve_lp(linear_program("max", obj, rows, rels, rhs, [False] * (n + 1)))
    if sol.status != "optimal":
        raise CertificationError("interior probe must be bounded")
    if sol.value < 0:
        return ()
    if sol.value == 0:
        raise DegeneratePolytopeError("feasible set has empty interior")

    lo = [None] * n
    hi = [None] * n
    for j in range(n):
        for sense, store in (("min", lo), ("max", hi)):
            c = [Fraction(0)] * n
            c[j] = Fraction(1)
            s = solve_lp(LinearProgram(sense, tuple(c), poly.A, (LE,) * m, poly.b,
                                       (False,) * n))
            if s.status == "unbounded":
                raise UnboundedPolytopeError(f"coordinate {j} is unbounded")
            store[j] = s.value

    rows_q = []  # (coeffs, rhs) over the working number type
    for j in range(n):
        e = [_Q(0)] * n
        e[j] = _Q(1)
        rows_q.append((list(e), _Q(hi[j])))
        e = [_Q(0)] * n
        e[j] = _Q(-1)
        rows_q.append((e, _Q(-lo[j])))

    def tight_mask(pt, upto):
        mask = 0
        for r in range(upto):
            a, beta = rows_q[r]
            if sum(ai * pi for ai, pi in zip(a, pt)) == beta:
                mask |= 1 << r
        return mask

    verts = [tuple(_Q(c) for c in corner)
             for corner in itertools.product(*[(lo[j], hi[j]) for j in range(n)])]
    tights = [tight_mask(v, 2 * n) for v in verts]
    if len(verts) > vertex_cap:
        raise CapExceeded(f"vertex count exceeds cap {vertex_cap}")

    for i in range(m):
        a = [_Q(v) for v in poly.A[i]]
        beta = _Q(poly.b[i])
        ridx = len(rows_q)
        rows_q.append((a, beta))
        s = [beta - sum(ai * vi for ai, vi in zip(a, v)) for v in verts]
        if all(si >= 0 for si in s):
            for k, sk in enumerate(s):
                if sk == 0:
                    tights[k] |= 1 << ridx
            continue
        newpts = []
        nverts = len(verts)
        for kp in range(nverts):
            if s[kp] <= 0:
                continue
            tp = tights[kp]
            for kn in range(nverts):
                if s[kn] >= 0:
                    continue
                common = tp & tights[kn]
                if common.bit_count() < n - 1:
                    continue
                adjacent = True
                for kz in range(nverts):
                    if kz != kp and kz != kn and (common & tights[kz]) == common:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                t = s[kp] / (s[kp] - s[kn])
                vp, vn = verts[kp], verts[kn]
                newpts.append(tuple(p + t * (q - p) for p, q in zip(vp, vn)))
        kept_v = []
        kept_t = []
        for k in range(nverts):
            if s[k] < 0:
                continue
            kept_v.append(verts[k])
            kept_t.append(tights[k] | (1 << ridx) if s[k] == 0 else tights[k])
        seen = set(kept_v)
        for pt in newpts:
            if pt in seen:
                continue
            seen.add(pt)
            kept_v.append(pt)
            kept_t.append(tight_mask(pt, len(rows_q)))
        verts, tights = kept_v, kept_t
        if len(verts) > vertex_cap:
            raise CapExceeded(f"vertex count exceeds cap {vertex_cap}")

    out = sorted(tuple(_fr(c) for c in v) for v in verts)
    for v in out:
        tight = []
        for i in range(m):
            lhs = sum(a * c for a, c in zip(poly.A[i], v))
            if lhs > poly.b[i]:
                raise CertificationError("enumerated point violates a row")
            if lhs == poly.b[i]:
                tight.append(poly.A[i])
        if _rank(tight, n) != n:
            raise CertificationError("enumerated point is not a vertex")
    return tuple(out)
