"""Polynomial space P^m, the embedding Delta^m and the lifted generator."""
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from koopman_lab.linflow import closed_form_flow3, flow_point, hyperbolic_generator
from koopman_lab.polynomials import MultiPoly, X, Y, Z, example2_p, grlex_key, taming_p
from koopman_lab.symspace import (
    Covector,
    PolySpaceBasis,
    basis_dim,
    delta_embed,
    delta_embed_many,
    delta_jacobian,
    functional_from_polynomial,
    lift_generator,
    lifted_flow,
    matrix_to_json,
    pairing,
)

A3 = hyperbolic_generator(0)


@pytest.mark.parametrize("n,m,d", [(3, 3, 20), (1, 1, 2), (2, 2, 6), (3, 7, 120)])
def test_basis_dim(n, m, d):
    assert basis_dim(n, m) == d
    assert PolySpaceBasis(n, m).dim == d


def test_basis_order():
    b = PolySpaceBasis(2, 2)
    assert b.index_list == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
    big = PolySpaceBasis(3, 4)
    assert list(big.index_list) == sorted(big.index_list, key=grlex_key)
    assert len(set(big.index_list)) == math.comb(7, 3)


def test_basis_dim_errors():
    with pytest.raises(OverflowError):
        basis_dim(10, 10)
    with pytest.raises(ValueError):
        basis_dim(0, 2)


def test_delta_embed_examples():
    assert np.array_equal(delta_embed([3.0], 2).coords, [0, 3, 9])
    assert not delta_embed(np.zeros(4), 3).coords.any()
    assert np.array_equal(delta_embed([1.5, -2.0, 4.0], 1).coords, [0, 1.5, -2.0, 4.0])
    with pytest.raises(ValueError):
        delta_embed([1.0, 2.0], 2, PolySpaceBasis(3, 2))


def test_delta_reproduces_power_sum():
    """Pairing with eta = (c) on R gives c v + c^2 v^2 under the monomial convention."""
    b = PolySpaceBasis(1, 2)
    eta = Covector(b, np.array([0.0, 2.0, 4.0]))
    assert pairing(eta, delta_embed([3.0], 2, b)) == 2 * 3 + 4 * 9


def test_pairing_examples(rng):
    b = PolySpaceBasis(3, 3)
    w = delta_embed(rng.normal(size=3), 3, b)
    const = Covector(b, np.eye(b.dim)[0])
    assert pairing(const, w) == 0
    assert pairing(Covector(b, np.zeros(b.dim)), w) == 0
    v = np.array([0.3, -1.2, 2.0])
    assert pairing(functional_from_polynomial(Y, b), delta_embed(v, 3, b)) == pytest.approx(-1.2)
    with pytest.raises(ValueError):
        pairing(Covector(PolySpaceBasis(3, 2), np.zeros(10)), w)


def test_functional_from_polynomial_examples(rng):
    b = PolySpaceBasis(3, 3)
    eta = functional_from_polynomial(Y, b)
    assert eta.coords[b.position[(0, 1, 0)]] == 1 and np.count_nonzero(eta.coords) == 1
    tp = functional_from_polynomial(taming_p(2, 1), b)
    e2 = functional_from_polynomial(example2_p(), b)
    for v in rng.normal(size=(100, 3)):
        w = delta_embed(v, 3, b)
        assert pairing(tp, w) == pytest.approx(taming_p(2, 1).eval(v), abs=1e-12)
        assert pairing(e2, w) == pytest.approx(example2_p().eval(v) + 0.5, abs=1e-12)
    with pytest.raises(ValueError):
        functional_from_polynomial(taming_p(3, 1), b)


exps = st.tuples(*[st.integers(0, 2)] * 3)


@settings(max_examples=60, deadline=None)
@given(st.dictionaries(exps, st.floats(-3, 3, allow_nan=False), max_size=6),
       st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_pullback_identity(terms, v):
    p = MultiPoly(3, terms)
    m = max(p.degree(), 1)
    b = PolySpaceBasis(3, m)
    got = pairing(functional_from_polynomial(p, b), delta_embed(v, m, b))
    want = p.eval(v) - p.eval([0, 0, 0])
    scale = 1 + sum(abs(c) for c in p.terms.values()) * 2 ** (3 * 2)
    assert abs(got - want) <= 1e-10 * scale


def test_lift_examples():
    A = np.array([[1.0, 2.0], [-3.0, 0.5]])
    L1 = lift_generator(A, 1)
    assert np.array_equal(L1[0], np.zeros(3)) and np.array_equal(L1[1:, 1:], A)
    lam = -0.7
    assert np.allclose(lift_generator([[lam]], 3), np.diag([0, lam, 2 * lam, 3 * lam]))


def test_lift_block_diagonal():
    b = PolySpaceBasis(3, 3)
    L = lift_generator(A3, 3, b)
    degs = np.array([sum(a) for a in b.index_list])
    rows, cols = np.nonzero(L)
    assert np.array_equal(degs[rows], degs[cols])


def test_lift_conserves_x2_minus_y2(rng):
    b = PolySpaceBasis(3, 2)
    L = lift_generator(A3, 2, b)
    eta = functional_from_polynomial(X * X - Y * Y, b).coords
    for v in rng.normal(size=(20, 3)):
        assert abs(eta @ L @ delta_embed(v, 2, b).coords) <= 1e-12
        # finite differences along the closed-form flow
        h = 1e-5
        f = lambda t: eta @ delta_embed(closed_form_flow3(t, v), 2, b).coords
        assert abs((f(h) - f(-h)) / (2 * h)) <= 1e-6


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_generator_matches_finite_differences(m, rng):
    b = PolySpaceBasis(3, m)
    L = lift_generator(A3, m, b)
    h = 1e-5
    for v in rng.uniform(-1.5, 1.5, (20, 3)):
        fd = (delta_embed_many(closed_form_flow3(h, v), b) - delta_embed_many(closed_form_flow3(-h, v), b)) / (2 * h)
        assert np.abs(fd - L @ delta_embed_many(v, b)).max() <= 1e-6


def test_lifted_flow_examples():
    assert np.allclose(lifted_flow(A3, 3, 0.0), np.eye(20))
    assert np.allclose(lifted_flow([[1.0]], 2, 1.0), np.diag([1, math.e, math.e ** 2]), rtol=1e-13)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_equivariance(m, rng):
    b = PolySpaceBasis(3, m)
    for _ in range(200):
        t = rng.uniform(-2, 2)
        x = rng.normal(size=3)
        x *= rng.uniform(0, 3) / np.linalg.norm(x)
        dx = delta_embed_many(x, b)
        lhs = lifted_flow(A3, m, t) @ dx
        rhs = delta_embed_many(flow_point(A3, t, x), b)
        assert np.abs(lhs - rhs).max() <= 1e-8 * (1 + np.abs(dx).max())


def test_immersion_and_injectivity(rng):
    b = PolySpaceBasis(3, 3)
    for v in rng.normal(size=(100, 3)):
        J = delta_jacobian(v, b)
        assert np.linalg.matrix_rank(J) == 3
        h = 1e-6
        fd = np.stack([(delta_embed_many(v + h * e, b) - delta_embed_many(v - h * e, b)) / (2 * h)
                       for e in np.eye(3)], axis=1)
        assert np.allclose(J, fd, atol=1e-6)
        # the degree-one block reads v back
        assert np.array_equal(J[1:4], np.eye(3))
        assert np.array_equal(delta_embed(v, 3, b).coords[1:4], v)


def test_matrix_serialization():
    b = PolySpaceBasis(1, 3)
    data = json.loads(matrix_to_json(lift_generator([[1.0]], 3, b), b))
    assert data["dim"] == 4
    assert data["basis"] == [[0], [1], [2], [3]]
    assert data["rows"][2] == [0.0, 0.0, 2.0, 0.0]
