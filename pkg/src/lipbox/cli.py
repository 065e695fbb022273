"""Command-line interface: instance files, reports, generation, verification.

Instance files are JSON with every number an exact rational, written either
as an integer or as a string "p/q".  Reports mirror that convention, embed
certificates verbatim, and carry a single top-level timing_ms field that is
excluded from the byte-determinism contract.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import random
import re
import sys
import time
from fractions import Fraction
from importlib import resources

from .bounds import Value
from .config import CapExceeded, Caps, caps_from_env
from .integral import (
    IntegralError,
    eps_dual_check,
    factorize_Linfty,
    integral_norm,
)
from .integral import verify_certificate as verify_integral_certificate
from .lp import LpFormatError
from .operators import (
    DimensionMismatch,
    associate_TR,
    blip_norm,
    compose,
    delta_box,
    elementary_operator,
    free_tensor,
    from_two_lipschitz,
    injective_norm,
    lip_linear_operator,
    lip_norm,
    lipl_norm,
    lipl_norm_via_fields,
    lipl_norm_via_lp,
    lipschitz_map,
    linearization_norm,
    metric_map,
    opnorm,
    projective_norm,
    projective_norm_primal,
    to_two_lipschitz,
    two_lipschitz_table,
)
from .spaces import (
    LipschitzFunctionVector,
    MetricError,
    NormFormatError,
    ball_points,
    free_norm,
    free_norm_dual,
    l1_norm,
    linf_norm,
    metric_from_norm,
    polyhedral_norm,
    scalar_norm,
    validate_metric,
)
from .summing import (
    ConvergenceError,
    DegenerateSampleError,
    SummingError,
    dominated_lower_bound,
    dominated_via_A,
    dominated_via_B,
    lipschitz_p_summing,
    q_summing,
    sequence_sample,
)
from .summing import verify_certificate as verify_domination_certificate

F0 = Fraction(0)
F1 = Fraction(1)

_INPUT_ERRORS = (MetricError, NormFormatError, DimensionMismatch, LpFormatError,
                 SummingError, DegenerateSampleError, IntegralError, OSError,
                 json.JSONDecodeError)


class InstanceError(ValueError):
    """Malformed instance file; the message names the offending field."""


# -- rationals ----------------------------------------------------------------------


def parse_rational(v, where: str) -> Fraction:
    if isinstance(v, bool):
        raise InstanceError(f"{where}: expected a rational, got a boolean")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        try:
            val = Fraction(v)
        except (ValueError, ZeroDivisionError) as exc:
            raise InstanceError(f"{where}: bad rational {v!r}") from exc
        if val.denominator == 0:
            raise InstanceError(f"{where}: bad rational {v!r}")
        return val
    raise InstanceError(
        f"{where}: numbers must be integers or 'p/q' strings, got {type(v).__name__}")


def rs(v: Fraction) -> str:
    v = Fraction(v)
    return f"{v.numerator}/{v.denominator}"


def _vector(v, dim, where):
    if not isinstance(v, list) or len(v) != dim:
        raise InstanceError(f"{where}: expected a list of {dim} rationals")
    return tuple(parse_rational(x, where) for x in v)


def _matrix(v, nrows, ncols, where):
    if not isinstance(v, list) or len(v) != nrows:
        raise InstanceError(f"{where}: expected {nrows} matrix rows")
    return tuple(_vector(row, ncols, f"{where}[{i}]") for i, row in enumerate(v))


# -- instance files -----------------------------------------------------------------

_TOP_FIELDS = ("spaces", "norms", "maps", "operators", "linmaps", "tables",
               "tensors", "samples", "caps")
_CAP_FIELDS = ("points", "dim", "vertices", "iters")


@dataclasses.dataclass(frozen=True)
class Instance:
    spaces: dict
    norms: dict
    maps: dict
    operators: dict
    linmaps: dict   # name -> (matrix, domain norm, codomain norm)
    tables: dict
    tensors: dict
    samples: dict
    caps: Caps


def _require_dict(v, where):
    if not isinstance(v, dict):
        raise InstanceError(f"{where}: expected an object")
    return v


def _only_fields(d, allowed, where):
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise InstanceError(f"{where}: unknown field(s) {', '.join(extra)}")
    missing = sorted(set(allowed) - set(d))
    if missing:
        raise InstanceError(f"{where}: missing field(s) {', '.join(missing)}")


def _parse_norm_spec(spec, where):
    if isinstance(spec, str):
        kind, sep, dim = spec.partition(":")
        if not sep or not dim.isdigit() or int(dim) < 1:
            raise InstanceError(f"{where}: bad norm shorthand {spec!r}")
        if kind == "l1":
            return l1_norm(int(dim))
        if kind == "linf":
            return linf_norm(int(dim))
        raise InstanceError(f"{where}: unknown norm family {kind!r}")
    spec = _require_dict(spec, where)
    _only_fields(spec, ("dim", "funcs"), where)
    if not isinstance(spec["dim"], int) or spec["dim"] < 1:
        raise InstanceError(f"{where}.dim: expected a positive integer")
    dim = spec["dim"]
    if not isinstance(spec["funcs"], list):
        raise InstanceError(f"{where}.funcs: expected a list")
    funcs = [_vector(w, dim, f"{where}.funcs[{i}]")
             for i, w in enumerate(spec["funcs"])]
    try:
        return polyhedral_norm(dim, funcs)
    except NormFormatError as exc:
        raise InstanceError(f"{where}: {exc}") from exc


def _labeled_rows(entry, X, dim, where):
    """Per non-base label a vector; the base label must be absent."""
    entry = _require_dict(entry, where)
    if X.labels[0] in entry:
        raise InstanceError(
            f"{where}: base point {X.labels[0]!r} must map to zero; omit it")
    _only_fields(entry, X.labels[1:], where)
    return tuple(_vector(entry[lbl], dim, f"{where}.{lbl}") for lbl in X.labels[1:])


def _ref(pool, name, kind, where):
    if not isinstance(name, str) or name not in pool:
        have = ", ".join(sorted(pool)) or "none defined"
        raise InstanceError(f"{where}: unknown {kind} {name!r} (have: {have})")
    return pool[name]


def parse_instance(path: str, cap_overrides: dict | None = None) -> Instance:
    """Read and validate an instance file; see the README for the format."""
    text = _read_instance_text(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: not valid JSON: {exc}") from exc
    return parse_instance_dict(doc, cap_overrides)


def parse_instance_dict(doc, cap_overrides: dict | None = None) -> Instance:
    doc = _require_dict(doc, "instance")
    extra = sorted(set(doc) - set(_TOP_FIELDS))
    if extra:
        raise InstanceError(f"instance: unknown section(s) {', '.join(extra)}")

    caps_doc = _require_dict(doc.get("caps", {}), "caps")
    bad = sorted(set(caps_doc) - set(_CAP_FIELDS))
    if bad:
        raise InstanceError(f"caps: unknown field(s) {', '.join(bad)}")
    kw = {}
    for k in _CAP_FIELDS:
        if k in caps_doc:
            if not isinstance(caps_doc[k], int) or caps_doc[k] < 1:
                raise InstanceError(f"caps.{k}: expected a positive integer")
            kw[k] = caps_doc[k]
    # precedence: defaults, then the file block, then env, then CLI flags
    caps = caps_from_env(dataclasses.replace(Caps(), **kw))
    caps = dataclasses.replace(caps, **(cap_overrides or {}))

    spaces = {}
    for name, entry in _require_dict(doc.get("spaces", {}), "spaces").items():
        where = f"spaces.{name}"
        entry = _require_dict(entry, where)
        _only_fields(entry, ("labels", "table"), where)
        labels = entry["labels"]
        if (not isinstance(labels, list)
                or not all(isinstance(x, str) for x in labels)):
            raise InstanceError(f"{where}.labels: expected a list of strings")
        if len(set(labels)) != len(labels):
            raise InstanceError(f"{where}.labels: duplicate labels")
        table = [_vector(row, len(labels), f"{where}.table[{i}]")
                 for i, row in enumerate(
                     entry["table"] if isinstance(entry["table"], list) else ())]
        if len(table) != len(labels):
            raise InstanceError(f"{where}.table: expected {len(labels)} rows")
        try:
            X = validate_metric(tuple(labels), table)
        except MetricError as exc:
            raise InstanceError(f"{where}: {exc}") from exc
        if X.n > caps.points:
            raise CapExceeded(
                f"points cap: space {name!r} has {X.n} points, cap is {caps.points}")
        spaces[name] = X

    norms = {}
    for name, entry in _require_dict(doc.get("norms", {}), "norms").items():
        N = _parse_norm_spec(entry, f"norms.{name}")
        if N.dim > caps.dim:
            raise CapExceeded(
                f"dim cap: norm {name!r} has dimension {N.dim}, cap is {caps.dim}")
        norms[name] = N

    maps = {}
    for name, entry in _require_dict(doc.get("maps", {}), "maps").items():
        where = f"maps.{name}"
        entry = _require_dict(entry, where)
        _only_fields(entry, ("space", "codomain", "values"), where)
        X = _ref(spaces, entry["space"], "space", f"{where}.space")
        E = _ref(norms, entry["codomain"], "norm", f"{where}.codomain")
        rows = _labeled_rows(entry["values"], X, E.dim, f"{where}.values")
        maps[name] = lipschitz_map(X, E, rows)

    operators = {}
    for name, entry in _require_dict(doc.get("operators", {}), "operators").items():
        where = f"operators.{name}"
        entry = _require_dict(entry, where)
        _only_fields(entry, ("space", "domain", "codomain", "matrices"), where)
        X = _ref(spaces, entry["space"], "space", f"{where}.space")
        E = _ref(norms, entry["domain"], "norm", f"{where}.domain")
        Fn = _ref(norms, entry["codomain"], "norm", f"{where}.codomain")
        mdoc = _require_dict(entry["matrices"], f"{where}.matrices")
        if X.labels[0] in mdoc:
            raise InstanceError(
                f"{where}.matrices: base point {X.labels[0]!r} must map to the "
                "zero matrix; omit it")
        _only_fields(mdoc, X.labels[1:], f"{where}.matrices")
        mats = [_matrix(mdoc[lbl], Fn.dim, E.dim, f"{where}.matrices.{lbl}")
                for lbl in X.labels[1:]]
        operators[name] = lip_linear_operator(X, E, Fn, mats)

    linmaps = {}
    for name, entry in _require_dict(doc.get("linmaps", {}), "linmaps").items():
        where = f"linmaps.{name}"
        entry = _require_dict(entry, where)
        _only_fields(entry, ("domain", "codomain", "entries"), where)
        E = _ref(norms, entry["domain"], "norm", f"{where}.domain")
        Fn = _ref(norms, entry["codomain"], "norm", f"{where}.codomain")
        M = _matrix(entry["entries"], Fn.dim, E.dim, f"{where}.entries")
        linmaps[name] = (M, E, Fn)

    tables = {}
    for name, entry in _require_dict(doc.get("tables", {}), "tables").items():
        where = f"tables.{name}"
        entry = _require_dict(entry, where)
        _only_fields(entry, ("space_x", "space_y", "codomain", "values"), where)
        X = _ref(spaces, entry["space_x"], "space", f"{where}.space_x")
        Y = _ref(spaces, entry["space_y"], "space", f"{where}.space_y")
        Fn = _ref(norms, entry["codomain"], "norm", f"{where}.codomain")
        vdoc = _require_dict(entry["values"], f"{where}.values")
        _only_fields(vdoc, X.labels[1:], f"{where}.values")
        vals = tuple(
            _labeled_rows(vdoc[xl], Y, Fn.dim, f"{where}.values.{xl}")
            for xl in X.labels[1:])
        tables[name] = two_lipschitz_table(X, Y, Fn, vals)

    tensors = {}
    for name, entry in _require_dict(doc.get("tensors", {}), "tensors").items():
        where = f"tensors.{name}"
        entry = _require_dict(entry, where)
        _only_fields(entry, ("space", "norm", "coeffs"), where)
        X = _ref(spaces, entry["space"], "space", f"{where}.space")
        E = _ref(norms, entry["norm"], "norm", f"{where}.norm")
        rows = _labeled_rows(entry["coeffs"], X, E.dim, f"{where}.coeffs")
        tensors[name] = free_tensor(X, E, rows)

    samples = {}
    for name, entry in _require_dict(doc.get("samples", {}), "samples").items():
        where = f"samples.{name}"
        entry = _require_dict(entry, where)
        _only_fields(entry, ("space", "norm", "triples"), where)
        X = _ref(spaces, entry["space"], "space", f"{where}.space")
        E = _ref(norms, entry["norm"], "norm", f"{where}.norm")
        if not isinstance(entry["triples"], list) or not entry["triples"]:
            raise InstanceError(f"{where}.triples: expected a nonempty list")
        triples = []
        for i, t in enumerate(entry["triples"]):
            if not isinstance(t, list) or len(t) != 3:
                raise InstanceError(f"{where}.triples[{i}]: expected [x, y, vector]")
            x, y, e = t
            if x not in X.labels or y not in X.labels:
                raise InstanceError(f"{where}.triples[{i}]: unknown point label")
            triples.append((x, y, _vector(e, E.dim, f"{where}.triples[{i}]")))
        samples[name] = sequence_sample(X, E, triples)

    return Instance(spaces, norms, maps, operators, linmaps, tables, tensors,
                    samples, caps)


def _read_instance_text(path: str) -> str:
    """Literal path first; bare names fall back to the bundled data files."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except FileNotFoundError:
        if "/" not in path:
            ref = resources.files("lipbox").joinpath("data").joinpath(path)
            if ref.is_file():
                return ref.read_text(encoding="utf-8")
        raise


# -- free-vector expressions ---------------------------------------------------------

_TERM_RE = re.compile(r"([+-]?)(\d+(?:/\d+)?\*?)?([A-Za-z][A-Za-z0-9_']*)")


def parse_free_expression(expr: str, X):
    """Signed rational combinations of point labels, e.g. "a+b" or "2a-3/2*b"."""
    s = expr.replace(" ", "")
    coeffs = [F0] * (X.n - 1)
    pos = 0
    first = True
    while pos < len(s):
        m = _TERM_RE.match(s, pos)
        if not m or (not first and not m.group(1)):
            raise InstanceError(f"free expression: cannot parse at {s[pos:]!r}")
        sign = -1 if m.group(1) == "-" else 1
        coef = Fraction(m.group(2).rstrip("*")) if m.group(2) else F1
        label = m.group(3)
        if label == X.labels[0]:
            raise InstanceError(
                f"free expression: base point {label!r} carries no coefficient")
        if label not in X.labels:
            raise InstanceError(f"free expression: unknown point {label!r}")
        coeffs[X.index(label) - 1] += sign * coef
        pos = m.end()
        first = False
    if first:
        raise InstanceError("free expression: empty")
    return tuple(coeffs)


# -- report serialization -------------------------------------------------------------


def jsonize(x):
    if isinstance(x, Fraction):
        return rs(x)
    if isinstance(x, Value):
        return {"lo": rs(x.lo), "hi": rs(x.hi), "exact": x.exact}
    if isinstance(x, (bool, int, str)) or x is None:
        return x
    if isinstance(x, (list, tuple)):
        return [jsonize(v) for v in x]
    if isinstance(x, dict):
        return {
            ("|".join(str(p) for p in k) if isinstance(k, tuple) else str(k)):
            jsonize(v) for k, v in x.items()}
    if dataclasses.is_dataclass(x):
        return {f.name: jsonize(getattr(x, f.name)) for f in dataclasses.fields(x)}
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _emit(report: dict, ns) -> None:
    for line in _human_lines(report):
        print(line)
    if getattr(ns, "out", None):
        with open(ns.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=1, sort_keys=True)
            fh.write("\n")


def _human_lines(report):
    lines = []
    for k in sorted(report):
        v = report[k]
        if k == "checks":
            for c in v:
                status = "PASS" if c["ok"] else "FAIL"
                lines.append(f"{status} {c['name']}: {c['detail']}")
        elif isinstance(v, dict) and "lo" in v and "hi" in v:
            shown = v["lo"] if v.get("exact") else f"[{v['lo']}, {v['hi']}]"
            lines.append(f"{k}: {shown}")
        elif isinstance(v, dict) or isinstance(v, list):
            lines.append(f"{k}: {json.dumps(v, sort_keys=True)}")
        else:
            lines.append(f"{k}: {v}")
    return lines


# -- caps ------------------------------------------------------------------------------


def _flag_overrides(ns) -> dict:
    over = {}
    for k in _CAP_FIELDS:
        v = getattr(ns, f"cap_{k}", None)
        if v is not None:
            over[k] = v
    return over


def _base_caps(ns) -> Caps:
    return dataclasses.replace(caps_from_env(Caps()), **_flag_overrides(ns))


# -- norm subcommand -------------------------------------------------------------------


def cmd_norm(ns):
    inst = parse_instance(ns.instance, _flag_overrides(ns))
    kind = ns.kind
    report = {"command": f"norm {kind}", "object": ns.object}
    code = 0
    if kind == "lipl":
        T = _ref(inst.operators, ns.object, "operator", "norm lipl")
        val = lipl_norm(T)
        other = lipl_norm_via_lp(T)
        third = lipl_norm_via_fields(T)
        ok = val == other == third
        report.update(value=rs(val),
                      verification={"ok": ok, "method": "three independent routes"})
        code = 0 if ok else 1
    elif kind == "lip":
        R = _ref(inst.maps, ns.object, "map", "norm lip")
        val = lip_norm(R)
        other = lipl_norm(associate_TR(R))
        ok = val == other
        report.update(value=rs(val),
                      verification={"ok": ok, "method": "associate operator norm"})
        code = 0 if ok else 1
    elif kind == "blip":
        B = _ref(inst.tables, ns.object, "table", "norm blip")
        val = blip_norm(B)
        other = lipl_norm(from_two_lipschitz(B))
        ok = val == other
        report.update(value=rs(val),
                      verification={"ok": ok, "method": "free-space operator norm"})
        code = 0 if ok else 1
    elif kind == "free":
        if len(inst.spaces) != 1:
            raise InstanceError(
                "norm free: instance must contain exactly one space, "
                f"found {len(inst.spaces)}")
        (X,) = inst.spaces.values()
        coeffs = parse_free_expression(ns.object, X)
        val = free_norm(X, coeffs)
        other = free_norm_dual(X, coeffs)
        ok = val == other
        report.update(value=rs(val),
                      verification={"ok": ok, "method": "transport LP vs ball vertices"})
        code = 0 if ok else 1
    else:  # pi / eps tensor norms
        u = _ref(inst.tensors, ns.object, "tensor", f"norm {kind}")
        if kind == "pi":
            val = projective_norm(u)
            other = projective_norm_primal(u)
            ok = val == other
            report.update(value=rs(val),
                          verification={"ok": ok, "method": "dual LP vs primal LP"})
            code = 0 if ok else 1
        else:
            val = injective_norm(u)
            report.update(value=rs(val),
                          verification={"ok": True,
                                        "method": "vertex-pair enumeration"})
    return report, code


# -- summing subcommand ----------------------------------------------------------------


def cmd_summing(ns):
    inst = parse_instance(ns.instance, _flag_overrides(ns))
    caps = inst.caps
    report = {"command": f"summing {ns.kind}", "object": ns.object}
    code = 0
    if ns.kind == "lipp":
        p = parse_rational(ns.p, "--p")
        R = _ref(inst.maps, ns.object, "map", "summing lipp")
        val, cert = lipschitz_p_summing(R, p, cap=caps.points)
        rep = verify_domination_certificate(cert, R)
        report.update(p=rs(p), value=jsonize(val), certificate=jsonize(cert),
                      verification=jsonize(rep))
        code = 0 if rep.ok else 1
    elif ns.kind == "q":
        q = parse_rational(ns.q, "--q")
        M, E, Fn = _ref(inst.linmaps, ns.object, "linear map", "summing q")
        val, cert, _ = q_summing(M, E, Fn, q, caps=caps)
        rep = verify_domination_certificate(cert)
        report.update(q=rs(q), value=jsonize(val), certificate=jsonize(cert),
                      verification=jsonize(rep))
        code = 0 if rep.ok else 1
    else:  # dominated
        p = parse_rational(ns.p, "--p")
        q = parse_rational(ns.q, "--q")
        T = _ref(inst.operators, ns.object, "operator", "summing dominated")
        report.update(p=rs(p), q=rs(q), route=ns.route)
        vals = {}
        if ns.route in ("A", "both"):
            va, certs_a, _ = dominated_via_A(T, p, q, caps=caps)
            rep_a = verify_domination_certificate(certs_a["pietsch"], T)
            vals["A"] = va
            report.update(value_via_A=jsonize(va),
                          certificate_via_A=jsonize(certs_a),
                          verification_via_A=jsonize(rep_a))
            if not rep_a.ok:
                code = 1
        if ns.route in ("B", "both"):
            vb, certs_b, _ = dominated_via_B(T, p, q, caps=caps)
            rep_b = verify_domination_certificate(certs_b["linear"])
            vals["B"] = vb
            report.update(value_via_B=jsonize(vb),
                          certificate_via_B=jsonize(certs_b),
                          verification_via_B=jsonize(rep_b))
            if not rep_b.ok:
                code = 1
        if ns.route == "both":
            # route A lower-bounds the dominated norm, which route B computes
            ordered = vals["A"].lo <= vals["B"].hi
            report["routes_consistent"] = ordered
            if not ordered:
                code = 1
    return report, code


# -- integral subcommand ---------------------------------------------------------------


def cmd_integral(ns):
    inst = parse_instance(ns.instance, _flag_overrides(ns))
    caps = inst.caps
    T = _ref(inst.operators, ns.object, "operator", "integral")
    val, cert = integral_norm(T, caps=caps)
    rep = verify_integral_certificate(cert, T)
    report = {"command": "integral", "object": ns.object, "value": rs(val),
              "certificate": jsonize(cert), "verification": jsonize(rep)}
    code = 0 if rep.ok else 1
    if T.codomain.dim == 1:
        dual = eps_dual_check(T, caps=caps)
        report["dual_value"] = rs(dual)
        report["duality_ok"] = dual == val
        if dual != val:
            code = 1
    if ns.factorize:
        fac = factorize_Linfty(cert, T.space, T.domain)
        report["factorization"] = jsonize(fac)
        report["product_ge_value"] = fac.product >= val
        if fac.product < val:
            code = 1
    return report, code


# -- gen subcommand --------------------------------------------------------------------


def _gen_metric(rng, n, labels):
    table = [[F0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            d = Fraction(rng.randint(1, 6), rng.choice((1, 2)))
            table[i][j] = table[j][i] = d
    # shortest-path closure restores the triangle inequality
    for k in range(n):
        for i in range(n):
            for j in range(n):
                via = table[i][k] + table[k][j]
                if i != j and via < table[i][j]:
                    table[i][j] = via
    return validate_metric(labels, table)


def _gen_norm(rng, d):
    pick = rng.randrange(3)
    if pick == 0:
        return "l1", l1_norm(d)
    if pick == 1:
        return "linf", linf_norm(d)
    funcs = []
    for j in range(d):
        e = [F0] * d
        e[j] = F1
        funcs.append(tuple(e))
        funcs.append(tuple(-v for v in e))
    for _ in range(2):
        w = [Fraction(rng.randint(-2, 2)) for _ in range(d)]
        if all(v == 0 for v in w):
            w[rng.randrange(d)] = F1
        funcs.append(tuple(w))
        funcs.append(tuple(-v for v in w))
    return "verts", polyhedral_norm(d, funcs)


def _rand_frac(rng):
    return Fraction(rng.randint(-4, 4), rng.choice((1, 2)))


def gen_instance(n: int, d: int, seed: int, caps: Caps) -> dict:
    """Deterministic random instance exercising every file section."""
    if n > caps.points:
        raise CapExceeded(f"points cap: requested {n}, cap is {caps.points}")
    if d > caps.dim:
        raise CapExceeded(f"dim cap: requested {d}, cap is {caps.dim}")
    if n < 2 or d < 1:
        raise InstanceError("gen: need at least 2 points and dimension 1")
    rng = random.Random(seed)
    labels = tuple(["0"] + [f"p{i}" for i in range(1, n)])
    X = _gen_metric(rng, n, labels)
    kinds = {}
    norms = {}
    for name in ("E", "F"):
        kind, N = _gen_norm(rng, d)
        kinds[name] = kind
        norms[name] = N

    def norm_doc(name):
        if kinds[name] == "l1":
            return f"l1:{d}"
        if kinds[name] == "linf":
            return f"linf:{d}"
        N = norms[name]
        return {"dim": N.dim, "funcs": [[rs(v) for v in w] for w in N.funcs]}

    def rand_vec(dim):
        return [rs(_rand_frac(rng)) for _ in range(dim)]

    def rand_mat(nr, nc):
        return [rand_vec(nc) for _ in range(nr)]

    doc = {
        "spaces": {"X": {"labels": list(labels),
                         "table": [[rs(X.dist(i, j)) for j in range(n)]
                                   for i in range(n)]}},
        "norms": {"E": norm_doc("E"), "F": norm_doc("F")},
        "operators": {"T": {"space": "X", "domain": "E", "codomain": "F",
                            "matrices": {lbl: rand_mat(d, d)
                                         for lbl in labels[1:]}}},
        "maps": {"R": {"space": "X", "codomain": "E",
                       "values": {lbl: rand_vec(d) for lbl in labels[1:]}}},
        "linmaps": {"M": {"domain": "E", "codomain": "F",
                          "entries": rand_mat(d, d)}},
        "tensors": {"u": {"space": "X", "norm": "E",
                          "coeffs": {lbl: rand_vec(d) for lbl in labels[1:]}}},
        "samples": {"s": {"space": "X", "norm": "E",
                          "triples": [[labels[0], labels[1], rand_vec(d)],
                                      [labels[1], labels[-1], rand_vec(d)]]}},
    }
    sample_ok = any(
        Fraction(v) != 0 for t in doc["samples"]["s"]["triples"] for v in t[2])
    if not sample_ok:
        doc["samples"]["s"]["triples"][0][2][0] = "1/1"
    return doc


def cmd_gen(ns):
    caps = _base_caps(ns)
    doc = gen_instance(ns.points, ns.dim, ns.seed, caps)
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if ns.out:
        with open(ns.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="")
    return None, 0


# -- verify subcommand -------------------------------------------------------------------


def _x3():
    return validate_metric(("0", "a", "b"), [[0, 1, 2], [1, 0, 1], [2, 1, 0]])


def _x3p():
    return validate_metric(("0", "a", "b"), [[0, 1, 1], [1, 0, 2], [1, 2, 0]])


def _rand_operator(rng, X, E, Fn):
    mats = [[[_rand_frac(rng) for _ in range(E.dim)] for _ in range(Fn.dim)]
            for _ in range(X.n - 1)]
    return lip_linear_operator(X, E, Fn, mats)


def _dual_norm(E, w):
    return max(sum(wi * pi for wi, pi in zip(w, p)) for p in ball_points(E))


def _checks_s2(rng):
    checks = []
    setups = [(_x3(), l1_norm(2), linf_norm(2)), (_x3p(), linf_norm(2), l1_norm(2))]
    ops = [_rand_operator(rng, X, E, Fn) for X, E, Fn in setups for _ in range(3)]
    ok = all(lipl_norm(T) == lipl_norm_via_lp(T) == lipl_norm_via_fields(T)
             for T in ops)
    checks.append(("operator-norm-three-ways", ok, f"{len(ops)} operators"))
    ok = all(linearization_norm(T) == lipl_norm(T) for T in ops)
    checks.append(("linearization-isometry", ok, f"{len(ops)} operators"))

    X = _x3()
    E = l1_norm(2)
    Fn = linf_norm(2)
    ok = True
    for _ in range(3):
        v = [[_rand_frac(rng) for _ in range(E.dim)] for _ in range(Fn.dim)]
        ok = ok and lipl_norm(delta_box(v, X, E, Fn)) == opnorm(v, E, Fn)
    checks.append(("tensorization-norm", ok, "3 random linear maps"))

    ok = True
    for _ in range(3):
        f = LipschitzFunctionVector(X, (Fraction(rng.randint(-2, 2)),
                                        Fraction(rng.randint(-2, 2))))
        estar = tuple(_rand_frac(rng) for _ in range(E.dim))
        z = tuple(_rand_frac(rng) for _ in range(Fn.dim))
        T = elementary_operator(f, estar, z, E, Fn)
        want = lip_norm(lipschitz_map(X, scalar_norm(),
                                      [(f.at(1),), (f.at(2),)]))
        want = want * _dual_norm(E, estar) * Fn.norm(z)
        ok = ok and lipl_norm(T) == want
        R = lipschitz_map(X, Fn, [tuple(_rand_frac(rng) for _ in range(Fn.dim))
                                  for _ in range(X.n - 1)])
        mats = [tuple(tuple(rv * ev for ev in estar) for rv in R.at(i))
                for i in range(1, X.n)]
        TR = lip_linear_operator(X, E, Fn, mats)
        ok = ok and lipl_norm(TR) == lip_norm(R) * _dual_norm(E, estar)
    checks.append(("elementary-norms", ok, "3 random data tuples each"))

    ok = True
    for X0 in (_x3(), _x3p()):
        for _ in range(5):
            coeffs = tuple(_rand_frac(rng) for _ in range(X0.n - 1))
            ok = ok and free_norm(X0, coeffs) == free_norm_dual(X0, coeffs)
    checks.append(("free-norm-duality", ok, "10 random free vectors"))

    X, Y = _x3(), _x3p()
    Fn = l1_norm(2)
    ok = True
    for _ in range(3):
        vals = tuple(tuple(tuple(_rand_frac(rng) for _ in range(Fn.dim))
                           for _ in range(Y.n - 1)) for _ in range(X.n - 1))
        B = two_lipschitz_table(X, Y, Fn, vals)
        T = from_two_lipschitz(B)
        ok = ok and blip_norm(B) == lipl_norm(T)
        ok = ok and to_two_lipschitz(T, Y).values == B.values
    checks.append(("two-lipschitz-correspondence", ok, "3 random tables"))
    return checks


def _checks_s3(rng, caps):
    checks = []
    ok = True
    for trial in range(6):
        X = _x3() if trial % 2 else _x3p()
        E = l1_norm(2) if trial % 3 else linf_norm(2)
        T = _rand_operator(rng, X, E, scalar_norm())
        val, cert = integral_norm(T, caps=caps)
        ok = ok and val == eps_dual_check(T, caps=caps)
        ok = ok and verify_integral_certificate(cert, T).ok
        fac = factorize_Linfty(cert, X, E)
        ok = ok and fac.product >= val
    checks.append(("integral-duality", ok, "6 random scalar operators"))

    X = _x3()
    S = scalar_norm()
    T = lip_linear_operator(X, S, S, [[[F1]], [[Fraction(2)]]])
    val, cert = integral_norm(T, caps=caps)
    fac = factorize_Linfty(cert, X, S)
    ok = val == F1 and fac.product == val and len(cert.support) == 1
    checks.append(("integral-factorization-crafted", ok, "line isometry atom"))

    f = LipschitzFunctionVector(X, (F1, Fraction(2)))
    z = (F1, Fraction(-2))
    R = lipschitz_map(X, l1_norm(2),
                      [tuple(f.at(i) * zz for zz in z) for i in (1, 2)])
    TR = associate_TR(R)
    val, cert = integral_norm(TR, caps=caps)
    ok = val == lip_norm(R) and verify_integral_certificate(cert, TR).ok
    checks.append(("integral-rank-one-associate", ok, "Lip(f)*norm(z) attained"))
    return checks


def _checks_s4(rng, caps):
    checks = []
    ok = True
    norms = [l1_norm(2), linf_norm(2)]
    for trial in range(4):
        E = norms[rng.randrange(2)]
        Fn = norms[rng.randrange(2)]
        if trial % 2:
            d = Fraction(rng.randint(1, 4), rng.choice((1, 2)))
            X = validate_metric(("0", "x"), [[F0, d], [d, F0]])
            T = _rand_operator(rng, X, E, Fn)
        else:
            X = _x3() if trial % 4 else _x3p()
            M0 = [[_rand_frac(rng) for _ in range(E.dim)] for _ in range(Fn.dim)]
            mats = []
            for _ in range(X.n - 1):
                r = Fraction(rng.randint(-3, 3), rng.choice((1, 2)))
                mats.append([[r * v for v in row] for row in M0])
            T = lip_linear_operator(X, E, Fn, mats)
        va, ca, _ = dominated_via_A(T, F1, F1, caps=caps)
        vb, cb, _ = dominated_via_B(T, F1, F1, caps=caps)
        ok = ok and va.lo == vb.lo
        ok = ok and verify_domination_certificate(ca["pietsch"], T).ok
        ok = ok and verify_domination_certificate(cb["linear"]).ok
    checks.append(("route-equality-family", ok,
                   "two-point and separable operators, p = q = 1"))

    # pinned generic instance where the nested routes genuinely differ
    X = _x3p()
    E = linf_norm(2)
    T = lip_linear_operator(
        X, E, E,
        [[[F1, Fraction(-1, 2)], [Fraction(2), Fraction(-1)]],
         [[F0, Fraction(-2)], [F1, F1]]])
    va, _, _ = dominated_via_A(T, F1, F1, caps=caps)
    vb, _, _ = dominated_via_B(T, F1, F1, caps=caps)
    samp = sequence_sample(X, E, [("0", "a", (F1, F0)), ("0", "b", (F0, F1))])
    lb = dominated_lower_bound(T, F1, F1, samp)
    ok = va.lo == 3 and vb.lo == 4 and va.lo <= vb.lo and lb.lo <= vb.hi
    checks.append(("route-order-generic", ok,
                   "lower route 3, dominated norm 4, sample inside"))

    ok = True
    for _ in range(3):
        R = lipschitz_map(_x3(), l1_norm(2),
                          [tuple(_rand_frac(rng) for _ in range(2))
                           for _ in range(2)])
        vr, cr = lipschitz_p_summing(R, F1, cap=caps.points)
        va, _, _ = dominated_via_A(associate_TR(R), F1, F1, caps=caps)
        ok = ok and vr.lo == va.lo and verify_domination_certificate(cr, R).ok
    checks.append(("summing-associate", ok, "3 random Lipschitz maps"))

    ok = True
    for _ in range(2):
        X = _x3()
        E = l1_norm(2)
        Fn = linf_norm(2)
        T = _rand_operator(rng, X, E, Fn)
        R = metric_map(X, X, ["b", "a"])
        v = [[_rand_frac(rng) for _ in range(2)] for _ in range(2)]
        w = [[F1, F0], [F0, F1]]
        C = compose(w, T, R, v, E, Fn)
        dC, _, _ = dominated_via_A(C, F1, F1, caps=caps)
        pv, _, _ = q_summing(v, E, E, F1, caps=caps)
        bound = lipl_norm(T) * lip_norm(R) * pv.hi
        ok = ok and dC.lo <= bound
    checks.append(("composition-bound", ok, "2 random compositions"))

    E = l1_norm(2)
    e1 = (F1, F0)
    X = metric_from_norm(E, ("0", "e"), ((F0, F0), e1))
    ident = [[F1, F0], [F0, F1]]
    T = lip_linear_operator(X, E, E, [ident])
    dv, _, _ = dominated_via_A(T, F1, F1, caps=caps)
    qv, _, _ = q_summing(ident, E, E, F1, caps=caps)
    ok = dv.exact and qv.exact and dv.lo == qv.lo == 2
    checks.append(("point-evaluation-summing", ok,
                   "delta at a unit vector reaches the 1-summing norm 2"))
    return checks


def _checks_for_instance(inst: Instance, suite: str, caps: Caps):
    checks = []
    rng = random.Random(2026)
    if suite in ("all", "s2"):
        for name, T in sorted(inst.operators.items()):
            ok = lipl_norm(T) == lipl_norm_via_lp(T) == lipl_norm_via_fields(T)
            ok = ok and linearization_norm(T) == lipl_norm(T)
            checks.append((f"operator-norms[{name}]", ok, "three routes agree"))
        for name, R in sorted(inst.maps.items()):
            ok = lip_norm(R) == lipl_norm(associate_TR(R))
            checks.append((f"map-associate-norm[{name}]", ok, "Lip equals LipL"))
        for name, B in sorted(inst.tables.items()):
            T = from_two_lipschitz(B)
            ok = blip_norm(B) == lipl_norm(T)
            ok = ok and to_two_lipschitz(T, B.space_y).values == B.values
            checks.append((f"two-lipschitz[{name}]", ok, "round trip exact"))
        for name, u in sorted(inst.tensors.items()):
            ok = projective_norm(u) == projective_norm_primal(u)
            checks.append((f"tensor-pi[{name}]", ok, "dual equals primal"))
    if suite in ("all", "s3"):
        for name, T in sorted(inst.operators.items()):
            if T.codomain.dim != 1:
                continue
            val, cert = integral_norm(T, caps=caps)
            ok = val == eps_dual_check(T, caps=caps)
            ok = ok and verify_integral_certificate(cert, T).ok
            checks.append((f"integral-duality[{name}]", ok, "primal equals dual"))
    if suite in ("all", "s4"):
        for name, T in sorted(inst.operators.items()):
            va, _, _ = dominated_via_A(T, F1, F1, caps=caps)
            vb, _, _ = dominated_via_B(T, F1, F1, caps=caps)
            ok = va.lo <= vb.hi
            for sname, s in sorted(inst.samples.items()):
                if s.space != T.space or s.norm.dim != T.domain.dim:
                    continue
                try:
                    lb = dominated_lower_bound(T, F1, F1, s)
                except DegenerateSampleError:
                    continue
                ok = ok and lb.lo <= vb.hi
            checks.append((f"dominated-order[{name}]", ok,
                           "lower route and samples below the dominated norm"))
        for name, R in sorted(inst.maps.items()):
            vr, _ = lipschitz_p_summing(R, F1, cap=caps.points)
            va, _, _ = dominated_via_A(associate_TR(R), F1, F1, caps=caps)
            checks.append((f"summing-associate[{name}]", vr.lo == va.lo,
                           "map norm equals lower route of the associate"))
    return checks


def cmd_verify(ns):
    if ns.builtin and ns.instance:
        raise InstanceError("verify: give an instance file or --builtin, not both")
    if not ns.builtin and not ns.instance:
        raise InstanceError("verify: give an instance file or --builtin")
    suite = ns.suite
    if ns.builtin:
        caps = _base_caps(ns)
        rng = random.Random(2026)
        checks = []
        if suite in ("all", "s2"):
            checks.extend(_checks_s2(rng))
        if suite in ("all", "s3"):
            checks.extend(_checks_s3(rng, caps))
        if suite in ("all", "s4"):
            checks.extend(_checks_s4(rng, caps))
        source = "builtin"
    else:
        inst = parse_instance(ns.instance, _flag_overrides(ns))
        caps = inst.caps
        checks = _checks_for_instance(inst, suite, caps)
        source = ns.instance
    payload = [{"name": n, "ok": bool(ok), "detail": d} for n, ok, d in checks]
    ok_all = all(c["ok"] for c in payload)
    report = {"command": "verify", "source": source, "suite": suite,
              "checks": payload, "ok": ok_all}
    return report, 0 if ok_all else 1


# -- entry point --------------------------------------------------------------------------


def _common_flags(p):
    p.add_argument("--out", help="write the machine-readable report here")
    p.add_argument("--cap-points", type=int, dest="cap_points")
    p.add_argument("--cap-dim", type=int, dest="cap_dim")
    p.add_argument("--cap-vertices", type=int, dest="cap_vertices")
    p.add_argument("--cap-iters", type=int, dest="cap_iters")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lipbox",
        description="Exact norms and certificates for Lipschitz-linear operators")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("norm", help="operator, map, free and tensor norms")
    p.add_argument("kind", choices=("lipl", "lip", "blip", "free", "pi", "eps"))
    p.add_argument("instance")
    p.add_argument("object", help="object name, or a free expression like 'a+b'")
    _common_flags(p)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("summing", help="summing norms with certificates")
    p.add_argument("kind", choices=("lipp", "q", "dominated"))
    p.add_argument("instance")
    p.add_argument("object")
    p.add_argument("--p", default="1")
    p.add_argument("--q", default="1")
    p.add_argument("--route", choices=("A", "B", "both"), default="both")
    _common_flags(p)
    p.set_defaults(func=cmd_summing)

    p = sub.add_parser("integral", help="integral norms with certificates")
    p.add_argument("instance")
    p.add_argument("object")
    p.add_argument("--factorize", action="store_true")
    _common_flags(p)
    p.set_defaults(func=cmd_integral)

    p = sub.add_parser("verify", help="replay the identity suite")
    p.add_argument("instance", nargs="?")
    p.add_argument("--builtin", action="store_true")
    p.add_argument("--suite", choices=("all", "s2", "s3", "s4"), default="all")
    _common_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="generate a random instance file")
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    _common_flags(p)
    p.set_defaults(func=cmd_gen)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    start = time.perf_counter()
    try:
        report, code = ns.func(ns)
    except CapExceeded as err:
        print(f"cap exceeded: {err}", file=sys.stderr)
        return 3
    except ConvergenceError as err:
        print(f"iteration cap hit before convergence: {err}", file=sys.stderr)
        return 3
    except InstanceError as err:
        print(f"input error: {err}", file=sys.stderr)
        return 2
    except _INPUT_ERRORS as err:
        print(f"input error: {err}", file=sys.stderr)
        return 2
    if report is not None:
        report["timing_ms"] = int((time.perf_counter() - start) * 1000)
        _emit(report, ns)
    return code


if __name__ == "__main__":
    sys.exit(main())
