"""Verification suites: taming, transversality, graphlike, Koopman, chart, obstruction."""
import json
import math

import numpy as np
import pytest

from koopman_lab import verify
from koopman_lab.linflow import closed_form_flow3
from koopman_lab.polynomials import (
    Box2,
    MultiPoly,
    X,
    Y,
    Z,
    compute_M,
    count_sign_changes,
    default_box,
    example2_p,
    taming_p,
    taming_q,
)
from koopman_lab.surface import build_surface, equilibria, random_surface_points

GRID = [0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0]


def pair(l, M=None):
    M = compute_M(l, default_box(l)) if M is None else M
    return verify.TamingPair(taming_q(), taming_p(l, M), 2 * l - 1)


# -- taming ----------------------------------------------------------------------

def test_taming_example2():
    r = verify.verify_taming(build_surface(2), verify.example2_pair(), GRID)
    assert r.passed and r.metrics["min_derivative"] > 0


def test_taming_l4_with_figure_constant():
    r = verify.verify_taming(build_surface(4), pair(4, 4.0), GRID)
    assert r.passed
    assert verify.m_certificate(4, 4.0, Box2(-1, 1, 0.25, 2.75)).passed


@pytest.mark.parametrize("l", range(2, 7))
def test_taming_default_constant(l):
    assert verify.verify_taming(build_surface(l), pair(l), GRID).passed


def test_taming_fails_for_height_function():
    r = verify.verify_taming(build_surface(2), verify.TamingPair(taming_q(), Z, 1), GRID)
    assert not r.passed
    assert all(not d["onto"] for d in r.details)


def test_taming_fails_for_small_M():
    r = verify.verify_taming(build_surface(4), pair(4, 0.5), GRID)
    assert not r.passed and r.metrics["min_derivative"] < 0


def test_m_certificate_for_wide_box():
    assert not verify.m_certificate(4, 2.0, Box2(-1, 1, 0, 3)).passed
    assert verify.m_certificate(4, 5.8, Box2(-1, 1, 0, 3)).passed


def test_taming_needs_q_equal_y():
    with pytest.raises(verify.UnsupportedConfiguration):
        verify.verify_taming(build_surface(2), verify.TamingPair(X, example2_p(), 3), GRID)


def test_taming_pair_degree_check():
    with pytest.raises(ValueError):
        verify.TamingPair(taming_q(), taming_p(3, 1.0), 3)


# -- transversality ------------------------------------------------------------------

def test_single_fibers_example2():
    spec, tp = build_surface(2), verify.example2_pair()
    r = verify.verify_transversality(spec, tp, [(0.0, 0.5), (0.0, -10.0)])
    assert r.passed
    top, bottom = r.details
    assert top["count"] == 1 and top["hits"][0]["point"][2] > 0.5
    assert bottom["count"] == 1 and bottom["hits"][0]["piece"] == ["plane", 0]
    # on the bottom ray p = -(x + 1)/2, so p = -10 at x = 19
    assert bottom["hits"][0]["point"][0] == pytest.approx(19.0, abs=1e-9)


@pytest.mark.parametrize("l", [2, 3, 4])
def test_random_fibers(l, rng):
    spec, tp = build_surface(l), pair(l)
    fibers = verify.random_fibers(spec, tp, 200, rng)
    r = verify.verify_transversality(spec, tp, fibers, tol=1e-6)
    assert r.passed
    assert all(d["count"] in (0, 1) for d in r.details)
    assert sum(d["count"] for d in r.details) > 150


def test_transversality_detects_double_hit():
    """p = x^2 + z meets the l = 2 section at y = 0 twice for suitable levels."""
    spec = build_surface(2)
    r = verify.verify_transversality(spec, verify.TamingPair(taming_q(), X * X + Z, 2), [(0.0, 1.5)])
    assert not r.passed and r.details[0]["count"] >= 2


# -- graphlike -------------------------------------------------------------------------

def test_graphlike_l2():
    r = verify.graphlike_check(build_surface(2), pair(2), 2000, 1e-2, rng=np.random.default_rng(1))
    assert r.passed and r.metrics["basis_dim"] == 20


def test_graphlike_example2():
    assert verify.graphlike_check(build_surface(2), verify.example2_pair(), 1000, 1e-2).passed


def test_graphlike_constant_projection_fails():
    tp = verify.TamingPair(taming_q(), MultiPoly(3), 3)
    r = verify.graphlike_check(build_surface(2), tp, 1000, 1e-2)
    assert not r.passed and r.metrics["min_projected_distance"] == 0.0


# -- Koopman -----------------------------------------------------------------------------

@pytest.mark.parametrize("psi,lam", [(X + Y, 1.0), (X - Y, -1.0), (Z, 0.0)])
def test_eigenfunctions(psi, lam):
    r = verify.koopman_eigencheck(build_surface(3), psi, lam, 100, np.linspace(-2, 2, 21), 1e-9)
    assert r.passed


@pytest.mark.parametrize("lam", [-1.0, 0.0, 1.0, 2.0])
def test_x_is_not_an_eigenfunction(lam):
    assert not verify.koopman_eigencheck(build_surface(2), X, lam).passed


def test_invariant_subspace():
    expected = lambda t: np.diag([math.exp(t), math.exp(-t), 1.0])
    r = verify.invariant_subspace_check(build_surface(2), [X + Y, X - Y, Z], [-1.0, 0.3, 1.0], 1e-8, expected)
    assert r.passed
    C1 = r.details[2]["coefficients"]
    assert np.allclose(C1, np.diag([math.e, 1 / math.e, 1]), atol=1e-10)


def test_invariant_subspace_negative_and_trivial():
    spec = build_surface(2)
    assert not verify.invariant_subspace_check(spec, [X], [1.0]).passed
    r = verify.invariant_subspace_check(spec, [Z], [0.4, 2.0], expected=lambda t: [[1.0]])
    assert r.passed


def test_degenerate_gram():
    with pytest.raises(verify.DegenerateGram):
        verify.invariant_subspace_check(build_surface(2), [X + Y, 2 * (X + Y)], [1.0])


# -- conjugate field ------------------------------------------------------------------------

def test_field_at_equilibria():
    for l in (2, 4):
        spec, tp = build_surface(l), pair(l)
        for e in equilibria(spec):
            w = (tp.q.eval(e), tp.p.eval(e))
            field, xi = verify.conjugate_field(spec, tp, w)
            assert np.allclose(xi, e, atol=1e-12)
            assert np.abs(field).max() <= 1e-10


def test_field_example_point():
    spec, tp = build_surface(2), verify.example2_pair()
    field, xi = verify.conjugate_field(spec, tp, (0.0, 1.0))
    assert np.allclose(xi, [1.0, 0.0, 1.0], atol=1e-12)
    assert np.allclose(field, [1.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("l", [2, 3, 4])
def test_chart_consistency(l, rng):
    spec, tp = build_surface(l), pair(l)
    pts, _ = random_surface_points(spec, 100, rng)
    gq, gp = tp.q.gradient(), tp.p.gradient()
    for xi in pts:
        w = (tp.q.eval(xi), tp.p.eval(xi))
        field, found = verify.conjugate_field(spec, tp, w)
        assert np.linalg.norm(found - xi) <= 1e-8 * (1 + np.linalg.norm(xi))
        F = np.array([xi[1], xi[0], 0.0])
        want = np.array([sum(g.eval(xi) * f for g, f in zip(gq, F)), sum(g.eval(xi) * f for g, f in zip(gp, F))])
        assert np.abs(field - want).max() <= 1e-8 * (1 + np.abs(want).max())
        # pushforward of the flow, by finite differences
        h = 1e-6
        qp = lambda t: np.array([tp.q.eval(closed_form_flow3(t, xi)), tp.p.eval(closed_form_flow3(t, xi))])
        fd = (qp(h) - qp(-h)) / (2 * h)
        assert np.abs(fd - field).max() <= 1e-6 * (1 + np.abs(field).max())


@pytest.mark.parametrize("l", range(2, 7))
def test_field_zero_census(l):
    spec, tp = build_surface(l), pair(l)
    zeros = verify.field_zero_census(spec, tp)
    assert len(zeros) == l
    assert sorted(round(z[2]) for z in zeros) == list(range(l))


def test_field_bisection_cap():
    spec, tp = build_surface(2), verify.example2_pair()
    with pytest.raises(verify.NumericalFailure):
        verify.conjugate_field(spec, tp, (0.3, 0.2), max_iter=3)


# -- obstruction ------------------------------------------------------------------------------

def test_obstruction_examples():
    assert not verify.obstruction_check(3, 3)
    assert verify.obstruction_check(1, 3)
    assert not verify.obstruction_check(math.inf, 50)
    assert not verify.obstruction_check(None, 7)
    assert verify.min_degree(4) == 5


@pytest.mark.parametrize("turns", range(1, 11))
def test_obstruction_table(turns):
    for m in range(1, 15):
        assert bool(verify.obstruction_check(turns, m)) == (m >= turns + 1)


@pytest.mark.parametrize("l", range(2, 7))
def test_obstruction_consistency(l):
    assert verify.obstruction_check(l - 1, 2 * l - 1)
    assert not verify.obstruction_check(l - 1, l - 1)
    # the construction's p_x(0, z) really changes sign at every turn
    assert count_sign_changes(taming_p(l, 1.0).partial(0), (0, l - 1)) == l - 1


def test_obstruction_report_text():
    r = verify.obstruction_report(5, 4)
    assert not r.passed and "degree < turns+1" in r.details[0]["explanation"]


# -- reports --------------------------------------------------------------------------------------

def test_report_serialization():
    r = verify.verify_taming(build_surface(2), verify.example2_pair(), [0.0])
    d = r.to_dict()
    assert list(d)[:6] == ["suite", "pass", "samples", "worst_residual", "tolerance", "conventions"]
    assert "details" in d
    json.dumps(d)


def test_equivariance_and_invariance_suites():
    assert verify.equivariance_check().passed
    for l in (2, 3, 4):
        assert verify.invariance_check(build_surface(l)).passed
