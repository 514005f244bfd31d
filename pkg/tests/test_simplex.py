import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from spinmc.simplex import (SimplexError, minimize_negative_mass,
                            minimize_weighted_cover)


def _reference_negative_mass(m, G):
    """Same LP via scipy: min 1.t s.t. t >= 0, t + G lam >= -m."""
    R, K = G.shape
    # variables: t (R), lam free split into 2K
    c = np.concatenate([np.ones(R), np.zeros(2 * K)])
    A_ub = np.hstack([-np.eye(R), -G, G])
    res = linprog(c, A_ub=A_ub, b_ub=m, bounds=[(0, None)] * R
                  + [(0, None)] * (2 * K), method="highs")
    assert res.success
    return res.fun


@settings(deadline=None, max_examples=40)
@given(st.integers(3, 12), st.integers(1, 4), st.integers(0, 10 ** 6))
def test_negative_mass_matches_scipy(R, K, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=R)
    G = rng.normal(size=(R, K))
    res = minimize_negative_mass(m, G)
    ref = _reference_negative_mass(m, G)
    assert res.objective >= -1e-9
    assert abs(res.objective - ref) < 1e-7 * max(1.0, abs(ref))
    # the reported lambda must achieve the reported objective
    achieved = np.maximum(0.0, -(m + G @ res.lam)).sum()
    assert abs(achieved - res.objective) < 1e-8


def test_negative_mass_already_positive():
    m = np.array([1.0, 2.0, 0.5])
    G = np.zeros((3, 2))
    res = minimize_negative_mass(m, G)
    assert res.objective == pytest.approx(0.0, abs=1e-12)


def test_negative_mass_no_gauge():
    m = np.array([1.0, -2.0, 0.5])
    res = minimize_negative_mass(m, np.zeros((3, 1)))
    assert res.objective == pytest.approx(2.0, abs=1e-10)


def test_negative_mass_exact_cancellation():
    # G column equals the negative part: objective is exactly 0
    m = np.array([-1.0, 1.0, 0.0])
    G = np.array([[1.0], [0.0], [0.0]])
    res = minimize_negative_mass(m, G)
    assert res.objective < 1e-10


@settings(deadline=None, max_examples=40)
@given(st.integers(2, 10), st.integers(2, 6), st.integers(0, 10 ** 6))
def test_weighted_cover_matches_scipy(R, F, seed):
    rng = np.random.default_rng(seed)
    Q = rng.uniform(0.1, 2.0, size=(R, F))
    y = rng.uniform(0.0, 3.0, size=R)
    cost = rng.uniform(0.5, 2.0, size=F)
    x, obj = minimize_weighted_cover(Q, y, cost)
    ref = linprog(cost, A_ub=-Q, b_ub=-y, bounds=[(0, None)] * F,
                  method="highs")
    assert ref.success
    assert np.all(x >= -1e-12)
    assert np.all(Q @ x >= y - 1e-8)
    assert abs(obj - ref.fun) < 1e-7 * max(1.0, abs(ref.fun))


def test_weighted_cover_infeasible():
    Q = np.zeros((1, 2))
    with pytest.raises(SimplexError):
        minimize_weighted_cover(Q, np.array([1.0]), np.ones(2))
