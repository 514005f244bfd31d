import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinmc.configspace import Lattice, tfim_model
from spinmc.gauge import optimize_gauge
from spinmc.noise import (build_L_set, critical_gamma, design_noise,
                          design_noise_single, family_link_matrix,
                          link_hamiltonian_matrix, tfim_noise_template)
from spinmc.opbasis import LocalRateMatrix, assemble_model, table_rates


def test_L_set_has_27_patterns():
    ls = build_L_set()
    assert len(ls.patterns) == 27
    # patterns are distinct as (flip, axis-map) signatures
    sigs = {(p.flips, p.axes) for p in ls.patterns}
    assert len(sigs) == 27


def test_L_set_entries_come_from_dissipators():
    # every pattern cites a dissipator term whose rate matrix is
    # positive on all of the pattern's positions
    ls = build_L_set()
    for p in ls.patterns:
        M = table_rates(p.witness).M
        for (r, c) in p.positions:
            assert M[r, c] > 0.0, (p.witness, r, c)


def test_family_link_matrices_positive():
    for fam in ("x", "+", ("x", "z"), ("y", "y")):
        M = family_link_matrix(fam, d=1)
        off = M.copy()
        np.fill_diagonal(off, 0.0)
        assert off.min() >= 0.0
        assert np.max(np.abs(M.sum(axis=0))) < 1e-10


def test_design_noise_single_qubit():
    des = design_noise_single((0.5, 0.0, 0.0))
    w = des.weights()
    # x-rotation is fixed by x-dephasing at weight tau
    assert des.objective == pytest.approx(0.5, abs=1e-9)
    assert w.get("x", 0.0) == pytest.approx(0.5, abs=1e-9)


def test_design_noise_verifies_classical():
    h = ((0.0, 0.0, 1.0), (0.0, 0.0, 1.0))
    J = np.zeros((3, 3))
    J[0, 0] = 0.5
    des = design_noise(h, J, d=1)
    M_H = LocalRateMatrix.from_dense(link_hamiltonian_matrix(h, J, 1), 2)
    M = M_H.M.copy()
    for fam, w in des.weights().items():
        M += w * family_link_matrix(fam, d=1)
    _, _, obj = optimize_gauge(LocalRateMatrix.from_dense(M, 2))
    assert obj == 0.0


@settings(deadline=None, max_examples=30)
@given(st.integers(0, 10 ** 6))
def test_design_noise_feasible_random(seed):
    rng = np.random.default_rng(seed)
    h = (rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3))
    J = rng.uniform(-1, 1, (3, 3))
    des = design_noise((tuple(h[0]), tuple(h[1])), J, d=1)
    assert des.objective >= 0.0
    assert all(w >= -1e-12 for w in des.weights().values())


def test_tfim_template_weights():
    t = tfim_noise_template(0.5, 1.0, d=1)
    assert t[("x", "x")] == pytest.approx(0.75)   # |J|/2 + |J|
    assert t[("y", "y")] == pytest.approx(0.25)
    assert t[("x", "z")] == pytest.approx(0.75)   # |J|/2 + |h|/2
    assert t[("z", "y")] == pytest.approx(0.75)
    t2 = tfim_noise_template(0.5, 1.0, d=2)
    assert t2[("x", "z")] == pytest.approx(0.5)   # |J|/2 + |h|/4


def _split_matrices(spec):
    """(Hamiltonian-only, unit-noise) local matrices of the first link."""
    bare = type(spec)(spec.lattice, spec.local_fields, spec.pair_couplings,
                      {}, {}, gamma=0.0)
    noise = type(spec)(spec.lattice, {}, {}, spec.local_noise,
                       spec.pair_noise, gamma=1.0)
    link = spec.lattice.links[0]
    return (assemble_model(bare).link_matrices[link],
            assemble_model(noise).link_matrices[link])


def test_critical_gamma_single_qubit():
    M_H = table_rates(("H", "x"), 0.5)
    M_n = table_rates(("L", "x"), 1.0)
    gc = critical_gamma(M_H, M_n, tol=1e-8)
    assert gc == pytest.approx(0.5, abs=1e-7)


def test_critical_gamma_zero_for_classical():
    M_H = table_rates(("L", "z"), 1.0)   # already non-negative
    M_n = table_rates(("L", "x"), 1.0)
    assert critical_gamma(M_H, M_n) == 0.0


def test_critical_gamma_rejects_bad_template():
    M_H = table_rates(("H", "x"), 0.5)
    with pytest.raises(ValueError):
        critical_gamma(M_H, M_H)   # template has negative entries
    zero = LocalRateMatrix.from_dense(np.zeros((6, 6)), 1)
    with pytest.raises(ValueError):
        critical_gamma(M_H, zero)


@pytest.mark.slow
def test_critical_gamma_tfim_1d():
    lat = Lattice("chain1D", (3,), "periodic")
    spec = tfim_model(lat, 0.5, 1.0, gamma=1.0, with_noise=True)
    M_H, M_n = _split_matrices(spec)
    gc = critical_gamma(M_H, M_n, tol=1e-4)
    assert gc == pytest.approx(1.0, abs=1e-3)
