"""Integral norms: frozen examples, duality cross-checks, factorizations.

Oracle scheme: the representation LP (min total variation) and the
injective-ball supremum LP are independent formulations whose equality is
forced by strong duality, so each acts as the other's oracle; crafted
instances additionally pin values bracketed by hand (feasible measure above,
operator norm below).
"""

import random
from fractions import Fraction

import pytest

from lipbox.config import CapExceeded, Caps
from lipbox.integral import (
    IntegralCertificate,
    IntegralError,
    SupportOutsideBall,
    eps_dual_check,
    factorize_Linfty,
    integral_norm,
    reconstruct,
    verify_certificate,
)
from lipbox.operators import (
    associate_TR,
    elementary_operator,
    lip_linear_operator,
    lip_norm,
    lipl_norm,
    lipschitz_map,
)
from lipbox.spaces import (
    LipschitzFunctionVector,
    l1_norm,
    linf_norm,
    scalar_norm,
    validate_metric,
)

F = Fraction


def x3():
    return validate_metric(("0", "a", "b"), [[0, 1, 2], [1, 0, 1], [2, 1, 0]])


def x3p():
    return validate_metric(("0", "a", "b"), [[0, 1, 1], [1, 0, 2], [1, 2, 0]])


def _random_scalar_operator(rng, X, E):
    mats = [[[F(rng.randint(-3, 3), rng.randint(1, 2)) for _ in range(E.dim)]]
            for _ in range(X.n - 1)]
    return lip_linear_operator(X, E, scalar_norm(), mats)


# -- frozen examples -----------------------------------------------------------------


def test_line_isometry_single_atom():
    # lower bound: the operator norm of T is 1 (independent routine); the
    # single atom below is feasible with mass 1, so the value is pinned
    X = x3()
    S = scalar_norm()
    T = lip_linear_operator(X, S, S, [[[F(1)]], [[F(2)]]])
    assert lipl_norm(T) == 1
    val, cert = integral_norm(T)
    assert val == 1
    assert cert.support == (((F(1), F(2)), (F(1),)),)
    assert cert.weights == (F(1),)
    assert cert.vectors is None
    assert eps_dual_check(T) == 1
    assert reconstruct(cert, X, S, S).matrices == T.matrices
    assert verify_certificate(cert, T).ok


def test_zero_operator():
    X = x3()
    E = l1_norm(2)
    Z = lip_linear_operator(X, E, scalar_norm(), [[[0, 0]], [[0, 0]]])
    val, cert = integral_norm(Z)
    assert val == 0
    assert cert.support == ()
    assert eps_dual_check(Z) == 0


def test_elementary_unit_data():
    X = x3()
    E = l1_norm(2)
    f = LipschitzFunctionVector(X, (F(1), F(2)))
    T = elementary_operator(f, (F(1), F(1)), (F(1),), E, scalar_norm())
    val, cert = integral_norm(T)
    assert val == 1
    assert cert.support == (((F(1), F(2)), (F(1), F(1))),)
    assert cert.weights == (F(1),)
    assert eps_dual_check(T) == 1


# -- duality and invariants ----------------------------------------------------------


def test_duality_on_random_operators():
    rng = random.Random(31)
    norms = [l1_norm(2), linf_norm(2)]
    for trial in range(10):
        X = x3() if trial % 2 else x3p()
        E = norms[rng.randrange(2)]
        T = _random_scalar_operator(rng, X, E)
        val, cert = integral_norm(T)
        assert val == eps_dual_check(T)
        assert reconstruct(cert, X, E, T.codomain).matrices == T.matrices
        assert verify_certificate(cert, T).ok


def test_homogeneity():
    X = x3()
    E = linf_norm(2)
    T = _random_scalar_operator(random.Random(5), X, E)
    S = lip_linear_operator(X, E, scalar_norm(),
                            [[[5 * v for v in m[0]]] for m in T.matrices])
    vt, _ = integral_norm(T)
    vs, _ = integral_norm(S)
    assert vs == 5 * vt
    assert eps_dual_check(S) == 5 * eps_dual_check(T)


def test_triangle_inequality():
    rng = random.Random(7)
    X = x3p()
    E = l1_norm(2)
    T = _random_scalar_operator(rng, X, E)
    S = _random_scalar_operator(rng, X, E)
    both = lip_linear_operator(
        X, E, scalar_norm(),
        [[[a + b for a, b in zip(m[0], n[0])]]
         for m, n in zip(T.matrices, S.matrices)])
    vt, _ = integral_norm(T)
    vs, _ = integral_norm(S)
    vb, _ = integral_norm(both)
    assert vb <= vt + vs


def test_integral_dominates_operator_norm():
    rng = random.Random(13)
    for trial in range(6):
        X = x3() if trial % 2 else x3p()
        E = l1_norm(2) if trial % 3 else linf_norm(2)
        T = _random_scalar_operator(rng, X, E)
        val, _ = integral_norm(T)
        assert val >= lipl_norm(T)


def test_rank_one_associate_value():
    # for R(x) = f(x) * z the integral norm of the associate equals
    # Lip(f) times the codomain norm of z
    X = x3()
    f = LipschitzFunctionVector(X, (F(2), F(4)))
    z = (F(1), F(-2))
    R = lipschitz_map(X, l1_norm(2),
                      [tuple(f.at(i) * zz for zz in z) for i in (1, 2)])
    T = associate_TR(R)
    val, cert = integral_norm(T)
    assert val == 6
    assert val == lip_norm(R)
    assert eps_dual_check(T) == 6
    assert verify_certificate(cert, T).ok


def test_vector_codomain_certificate():
    X = x3()
    E = l1_norm(2)
    Fn = linf_norm(2)
    T = lip_linear_operator(X, E, Fn,
                            [[[F(1), F(0)], [F(0), F(1)]],
                             [[F(2), F(0)], [F(1), F(1)]]])
    val, cert = integral_norm(T)
    assert val == F(3, 2)
    assert cert.weights is None
    assert val == sum(Fn.norm(z) for z in cert.vectors)
    assert reconstruct(cert, X, E, Fn).matrices == T.matrices
    assert verify_certificate(cert, T).ok
    assert val >= lipl_norm(T)


# -- reconstruction and verification errors ------------------------------------------


def test_reconstruct_rejects_function_outside_ball():
    X = x3()
    E = l1_norm(2)
    cert = IntegralCertificate(
        support=(((F(3), F(0)), (F(1), F(0))),),
        weights=(F(1),), vectors=None, value=F(1))
    with pytest.raises(SupportOutsideBall):
        reconstruct(cert, X, E, scalar_norm())


def test_reconstruct_rejects_functional_outside_ball():
    X = x3()
    E = l1_norm(2)
    cert = IntegralCertificate(
        support=(((F(1), F(2)), (F(2), F(0))),),
        weights=(F(1),), vectors=None, value=F(1))
    with pytest.raises(SupportOutsideBall):
        reconstruct(cert, X, E, scalar_norm())


def test_reconstruct_rejects_width_mismatch():
    X = x3()
    cert = IntegralCertificate(
        support=(((F(1), F(2)), (F(1),)),),
        weights=(F(1), F(1)), vectors=None, value=F(2))
    with pytest.raises(IntegralError):
        reconstruct(cert, X, scalar_norm(), scalar_norm())


def test_tampered_certificates_fail():
    from dataclasses import replace
    X = x3()
    E = l1_norm(2)
    T = _random_scalar_operator(random.Random(41), X, E)
    _, cert = integral_norm(T)
    bad = replace(cert, weights=tuple(2 * w for w in cert.weights),
                  value=2 * cert.value)
    rep = verify_certificate(bad, T)
    assert not rep.ok and rep.witness is not None
    bad2 = replace(cert, value=cert.value + 1)
    rep2 = verify_certificate(bad2, T)
    assert not rep2.ok and rep2.witness == "total variation mismatch"


def test_eps_requires_scalar_codomain():
    X = x3()
    E = l1_norm(2)
    T = lip_linear_operator(X, E, linf_norm(2),
                            [[[F(1), F(0)], [F(0), F(1)]],
                             [[F(1), F(1)], [F(0), F(0)]]])
    with pytest.raises(IntegralError):
        eps_dual_check(T)


def test_vertex_cap_enforced():
    X = x3()
    E = l1_norm(2)
    T = _random_scalar_operator(random.Random(3), X, E)
    with pytest.raises(CapExceeded):
        integral_norm(T, caps=Caps(vertices=4))


# -- factorization -------------------------------------------------------------------


def test_factorize_line_isometry():
    X = x3()
    S = scalar_norm()
    T = lip_linear_operator(X, S, S, [[[F(1)]], [[F(2)]]])
    val, cert = integral_norm(T)
    fac = factorize_Linfty(cert, X, S)
    assert fac.lip_R == 1 and fac.sup_v == 1
    assert fac.product == 1 == val


def test_factorize_zero_certificate():
    cert = IntegralCertificate((), (), None, F(0))
    fac = factorize_Linfty(cert, x3(), l1_norm(2))
    assert fac.product == 0
    assert fac.mu == ()


def test_factorize_reproduces_operator_and_bounds_norm():
    rng = random.Random(19)
    X = x3p()
    E = linf_norm(2)
    for _ in range(4):
        T = _random_scalar_operator(rng, X, E)
        val, cert = integral_norm(T)
        fac = factorize_Linfty(cert, X, E)
        assert fac.product >= val
        # the discrete integral reproduces T on every (point, basis) pair
        for a in range(1, X.n):
            for k in range(E.dim):
                e = tuple(F(1) if t == k else F(0) for t in range(E.dim))
                got = sum(
                    fac.point_rows[a][j]
                    * sum(wi * ei for wi, ei in zip(fac.functional_rows[j], e))
                    * fac.mu[j]
                    for j in range(len(fac.mu)))
                assert got == T.matrix(a)[0][k]


def test_factorize_rejects_vector_certificates():
    X = x3()
    E = l1_norm(2)
    Fn = linf_norm(2)
    T = lip_linear_operator(X, E, Fn,
                            [[[F(1), F(0)], [F(0), F(1)]],
                             [[F(2), F(0)], [F(1), F(1)]]])
    _, cert = integral_norm(T)
    with pytest.raises(IntegralError):
        factorize_Linfty(cert, X, E)
