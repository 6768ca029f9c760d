import numpy as np
import pytest

from newton_infinity import geometry as geo
from newton_infinity.analysis import (Attainment, Conclusion, critical_values, fermat_witness, frank_wolfe,
                                      merge_values, search_minimizer_at_infinity, sigma_infinity,
                                      unconstrained_infimum, zero_infimum_branch)
from newton_infinity.conditions import ProblemInstance, Verdict, verify_certificate
from newton_infinity.poly import Polynomial, PolynomialError, parse
from randpoly import random_convenient, random_sos

XY = ["x", "y"]
XYZ = ["x", "y", "z"]
F0 = "(x*y - 1)^2 + x^2"


def P(text, names=XY):
    return parse(text, names)


def values(groups):
    return [g.value for g in groups]


@pytest.fixture(scope="module")
def unattained_report():
    return unconstrained_infimum(P(F0))


# -- critical values ---------------------------------------------------------

def test_finite_critical_values_of_unattained_objective():
    K0 = critical_values(P(F0))
    assert values(K0) == pytest.approx([1.0], abs=1e-9)
    assert np.allclose(K0[0].witness, 0, atol=1e-8)


def test_critical_values_one_variable():
    assert values(critical_values(P("x^2", ["x"]))) == pytest.approx([0.0], abs=1e-12)


def test_critical_values_of_square_of_hyperbola():
    assert values(critical_values(P("(x*y - 1)^2"))) == pytest.approx([0.0, 1.0], abs=1e-9)


def test_bad_face_values():
    p = P(F0)
    assert values(sigma_infinity(p)) == pytest.approx([0.0, 1.0], abs=1e-9)
    assert values(sigma_infinity(p, nonzero_only=True)) == pytest.approx([0.0], abs=1e-9)


@pytest.mark.parametrize("seed", range(6))
def test_convenient_has_no_bad_face_values(seed):
    assert sigma_infinity(random_convenient(seed, 1 + seed % 3)) == []


def test_constant_rejected():
    with pytest.raises(PolynomialError):
        critical_values(Polynomial.constant(1, XY))
    with pytest.raises(PolynomialError):
        unconstrained_infimum(Polynomial.constant(1, XY))


def test_merge_keeps_every_witness():
    pts = [np.array([0.0]), np.array([1.0]), np.array([2.0])]
    merged = merge_values([(1.0, pts[0], None), (1.0 + 1e-9, pts[1], None), (3.0, pts[2], None)], 1e-7)
    assert values(merged) == pytest.approx([1.0, 3.0])
    assert len(merged[0].points) == 2


# -- infimum -----------------------------------------------------------------

def test_unattained_infimum(unattained_report):
    r = unattained_report
    assert r.f_star == pytest.approx(0.0, abs=1e-9)
    assert r.f_star_prime == pytest.approx(0.0, abs=1e-9)
    assert r.attainment == Attainment.NOT_ATTAINED_LIKELY
    assert r.attained_at is None
    assert r.flags["consistent"] and not r.flags["oracle_undercut"]
    assert r.assumptions["bounded_below_assumed"] is True
    radii = [s.radius for s in r.oracle_trace]
    assert radii == sorted(radii)


def test_convex_quadratic_infimum():
    r = unconstrained_infimum(P("x^2 + y^2"))
    assert r.f_star == pytest.approx(0.0, abs=1e-12)
    assert r.attainment == Attainment.ATTAINED
    assert np.allclose(r.attained_at, 0, atol=1e-8)
    assert r.Sigma_inf == ()


def test_square_of_hyperbola_infimum():
    r = unconstrained_infimum(P("(x*y - 1)^2"))
    assert r.f_star == pytest.approx(0.0, abs=1e-9)
    assert r.attainment == Attainment.ATTAINED
    assert values(r.K0) == pytest.approx([0.0, 1.0], abs=1e-9)


@pytest.mark.parametrize("c", [3, 0.5])
def test_positive_scaling_equivariance(c, unattained_report):
    r = unconstrained_infimum(P(F0) * Polynomial.constant(c, XY))
    base = unattained_report
    assert r.f_star == pytest.approx(c * base.f_star, abs=1e-9)
    assert r.attainment == base.attainment
    assert values(r.K0) == pytest.approx([c * v for v in values(base.K0)], abs=1e-8)
    assert values(r.Sigma_inf) == pytest.approx([c * v for v in values(base.Sigma_inf)], abs=1e-8)


@pytest.mark.parametrize("seed", range(8))
def test_two_formulas_agree_on_sums_of_squares(seed):
    r = unconstrained_infimum(random_sos(seed, 1 + seed % 3), strict=False)
    if r.nondegeneracy.verdict.holds:
        assert abs(r.f_star - r.f_star_prime) <= 1e-7
        assert r.oracle_value >= r.f_star - 1e-4


# -- Fermat witness ----------------------------------------------------------

def test_fermat_witness_on_bad_edge(unattained_report):
    p = P(F0)
    face, x, value = fermat_witness(p, report=unattained_report)
    assert face.is_bad
    assert set(face.lattice_points) == {(0, 0), (1, 1), (2, 2)}
    assert np.all(x != 0)
    assert x[0] * x[1] == pytest.approx(1, abs=1e-8)
    assert value == pytest.approx(0.0, abs=1e-9)
    assert geo.face_polynomial(p, face).evaluate(x) == pytest.approx(unattained_report.f_star, abs=1e-8)


def test_fermat_witness_absent_when_attained():
    assert fermat_witness(P("x^2 + y^2")) is None


def test_fermat_witness_scaled_instance():
    face, x, value = fermat_witness(P("3*(x*y - 1)^2 + 3*x^2"))
    assert set(face.lattice_points) == {(0, 0), (1, 1), (2, 2)}
    assert value == pytest.approx(0.0, abs=1e-9)


# -- attainability -----------------------------------------------------------

def test_halfspace_attains():
    prob = ProblemInstance(P("x^2 + y^2 + z", XYZ), (P("-z", XYZ),))
    a = frank_wolfe(prob)
    assert a.convenient and a.conclusion == Conclusion.ATTAINS_BY_THEOREM
    assert a.heuristic_basis == (a.mf_status.verdict == Verdict.HOLDS_HEURISTIC)


def test_nonconvenient_gives_no_conclusion():
    a = frank_wolfe(ProblemInstance(P(F0)))
    assert not a.convenient and a.conclusion == Conclusion.NO_CONCLUSION


def test_convenient_quadratic_attains():
    assert frank_wolfe(ProblemInstance(P("x^2 + y^2"))).conclusion == Conclusion.ATTAINS_BY_THEOREM


# -- certificate search ------------------------------------------------------

def test_search_finds_verifying_certificate():
    prob = ProblemInstance(P(F0))
    cert = search_minimizer_at_infinity(prob, 0.0)
    assert cert is not None
    assert cert.J == (0, 1)
    assert tuple(cert.q) in {(1, -1), (-1, 1)}
    assert cert.lam == (1.0,)
    assert cert.x_star[0] * cert.x_star[1] == pytest.approx(1, abs=1e-8)
    value = prob.objective.initial_form(cert.q)[0].evaluate(cert.x_star)
    assert verify_certificate(prob, cert, value).verdict == Verdict.HOLDS_VERIFIED


@pytest.mark.parametrize("prob", [
    ProblemInstance(parse("x^2 + y^2", XY)),
    ProblemInstance(parse("x^2 + y^2 + z", XYZ), (parse("-z", XYZ),)),
])
def test_search_absent_when_attained(prob):
    assert search_minimizer_at_infinity(prob, 0.0) is None


def test_search_rejects_infinite_estimate():
    with pytest.raises(ValueError):
        search_minimizer_at_infinity(ProblemInstance(P(F0)), float("inf"))


def test_zero_infimum_branch():
    assert zero_infimum_branch(1e-4)
    assert not zero_infimum_branch(0.5)
