from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newton_infinity.numeric import (NoFeasiblePointError, SolverConfig, grid_infimum_oracle, solve_gradient_system,
                                     solve_system, start_points, strict_feasibility, strict_feasibility_exact)
from newton_infinity.poly import Polynomial, PolynomialError, parse, to_fraction
from randpoly import random_polynomial

XY = ["x", "y"]
F0 = "(x*y - 1)^2 + x^2"
CFG = SolverConfig()


def grads(text, names=XY):
    return parse(text, names).gradient()


# -- solver ------------------------------------------------------------------

def test_unique_critical_point_of_unattained_objective():
    roots = solve_gradient_system(grads(F0), CFG).points()
    assert len(roots) == 1
    assert np.allclose(roots[0], 0, atol=1e-8)


def test_convex_quadratic_critical_point():
    roots = solve_gradient_system(grads("x^2 + y^2"), CFG).points()
    assert len(roots) == 1 and np.allclose(roots[0], 0, atol=1e-10)


def test_hyperbola_representatives():
    p = parse("(x*y - 1)^2", XY)
    roots = solve_gradient_system(p.gradient(), CFG.with_(require_nonzero_coords=True)).points()
    assert roots
    for x in roots:
        assert x[0] * x[1] == pytest.approx(1, abs=1e-8)
        assert p.evaluate(x) == pytest.approx(0, abs=1e-12)
    assert any(x[0] > 0 for x in roots) and any(x[0] < 0 for x in roots)


def test_root_set_is_never_complete():
    assert solve_gradient_system(grads("x^2 + y^2"), CFG).complete is False


def test_gradient_count_checked():
    with pytest.raises(PolynomialError):
        solve_gradient_system(grads("x^2 + y^2")[:1], CFG)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(box_radius=0)
    with pytest.raises(ValueError):
        SolverConfig(starts_per_axis=1)


def test_start_points_seeded():
    a = start_points(2, CFG)
    assert np.array_equal(a, start_points(2, CFG))
    assert not np.array_equal(a, start_points(2, CFG.with_(rng_seed=1)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_solver_deterministic(seed):
    g = random_polynomial(seed).gradient()
    a = solve_gradient_system(g, CFG)
    b = solve_gradient_system(g, CFG)
    assert len(a) == len(b)
    for (x, r), (y, s) in zip(a.roots, b.roots):
        assert np.array_equal(x, y) and r == s


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_roots_have_small_residual(seed):
    g = random_polynomial(seed).gradient()
    for x in solve_gradient_system(g, CFG).points():
        assert np.linalg.norm([d.evaluate(x) for d in g]) <= CFG.residual_tol


def test_solve_system_on_circle_and_line():
    sys_ = [parse("x^2 + y^2 - 2", XY), parse("x - y", XY)]
    roots = sorted(tuple(np.round(x, 8)) for x in solve_system(sys_, CFG).points())
    assert roots == [(-1.0, -1.0), (1.0, 1.0)]


# -- strict feasibility ------------------------------------------------------

def test_single_halfspace():
    v = strict_feasibility([(1, 0)])
    assert v is not None and v[0] < 0


def test_antipodal_normals_infeasible():
    assert strict_feasibility([(1, 0), (-1, 0)]) is None


def test_two_normals_hand_solution():
    res = strict_feasibility_exact([(1, 1), (1, -1)])
    assert res.margin == 1
    assert res.v == (-1, 0)


def test_empty_list_needs_dimension():
    with pytest.raises(ValueError):
        strict_feasibility([])
    assert strict_feasibility([], 2) is not None


@settings(max_examples=80, deadline=None)
@given(st.lists(st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=3), min_size=1, max_size=5))
def test_strict_feasibility_sound(g_list):
    res = strict_feasibility_exact(g_list)
    gs = [[to_fraction(v) for v in g] for g in g_list]
    for g in gs:
        assert sum(a * b for a, b in zip(g, res.v)) <= -res.margin
    assert all(abs(v) <= 1 for v in res.v)
    if res.feasible:
        v = strict_feasibility(g_list)
        assert all(sum(a * Fraction(b) for a, b in zip(g, v)) < 0 for g in gs)


# -- grid oracle -------------------------------------------------------------

def test_oracle_unattained_example_large_box():
    res = grid_infimum_oracle(parse(F0, XY), [], CFG.with_(box_radius=50))
    assert 0 <= res.value <= 0.01


def test_oracle_halfspace_example():
    names = ["x", "y", "z"]
    res = grid_infimum_oracle(parse("x^2 + y^2 + z", names), [parse("-z", names)], CFG)
    assert res.value == pytest.approx(0, abs=1e-6)
    assert np.allclose(res.argmin, 0, atol=1e-2)


def test_oracle_constant():
    res = grid_infimum_oracle(Polynomial.constant(5, XY), [], CFG)
    assert res.value == 5


def test_oracle_empty_feasible_set():
    with pytest.raises(NoFeasiblePointError):
        grid_infimum_oracle(parse("x", ["x"]), [parse("x^2 + 1", ["x"])], CFG)


def test_oracle_flags_unbounded():
    res = grid_infimum_oracle(parse("x^3", ["x"]), [], CFG.with_(box_radius=1e5, unbounded_floor=-1e12))
    assert res.suspect_unbounded


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 8))
def test_oracle_monotone_in_resolution(seed, K):
    p = random_polynomial(seed)
    coarse = grid_infimum_oracle(p, [], CFG.with_(starts_per_axis=K, box_radius=2))
    fine = grid_infimum_oracle(p, [], CFG.with_(starts_per_axis=2 * K, box_radius=2))
    assert fine.value <= coarse.value


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 3))
def test_oracle_convex_quadratic(seed, n):
    rng = np.random.default_rng(seed)
    B = rng.integers(-3, 4, size=(n, n))
    H = B.T @ B + np.eye(n)
    b = rng.integers(-5, 6, size=n)
    names = ["x", "y", "z"][:n]
    xs = [Polynomial.variable(j, names) for j in range(n)]
    p = Polynomial.zero(names)
    for i in range(n):
        p = p + Polynomial.constant(int(b[i]), names) * xs[i]
        for j in range(n):
            p = p + Polynomial.constant(Fraction(int(H[i, j]), 2), names) * xs[i] * xs[j]
    x_opt = np.linalg.solve(H, -b)
    exact = float(0.5 * x_opt @ H @ x_opt + b @ x_opt)
    res = grid_infimum_oracle(p, [], CFG)
    assert abs(res.value - exact) <= 1e-4
