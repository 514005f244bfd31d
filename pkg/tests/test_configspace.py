import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinmc.configspace import (Configuration, Lattice, ModelSpec, SiteState,
                                all_configurations, decode, encode,
                                state_axis_sign, state_index, tfim_model)


def test_state_index_roundtrip():
    for idx in range(6):
        axis, sign = state_axis_sign(idx)
        assert state_index(axis, sign) == idx


def test_state_order():
    # (x,+) (x,-) (y,+) (y,-) (z,+) (z,-)
    assert state_index("x", +1) == 0
    assert state_index("x", -1) == 1
    assert state_index("y", +1) == 2
    assert state_index("y", -1) == 3
    assert state_index("z", +1) == 4
    assert state_index("z", -1) == 5


@given(st.lists(st.integers(0, 5), min_size=1, max_size=70))
def test_encode_decode_roundtrip(indices):
    cfg = encode(indices)
    assert [s.index for s in decode(cfg)] == indices
    assert cfg.n_sites == len(indices)


@given(st.lists(st.integers(0, 5), min_size=1, max_size=45),
       st.lists(st.integers(0, 5), min_size=1, max_size=45))
def test_order_is_lexicographic(a, b):
    if len(a) != len(b):
        return
    ca, cb = encode(a), encode(b)
    assert (ca < cb) == (a < b)
    assert (ca == cb) == (a == b)


def test_two_site_configs_distinct_and_sorted():
    cfgs = list(all_configurations(2))
    assert len(cfgs) == 36
    keys = [c.key for c in cfgs]
    assert len(set(keys)) == 36
    assert keys == sorted(keys)


def test_replace_site():
    cfg = Configuration.from_indices([0, 3, 5])
    cfg2 = cfg.replace_site(1, 4)
    assert cfg2.indices() == [0, 4, 5]
    assert cfg.indices() == [0, 3, 5]  # immutable


def test_packing_spans_words():
    idx = [i % 6 for i in range(50)]   # needs 3 words at 21 sites/word
    cfg = Configuration.from_indices(idx)
    assert len(cfg.words) == 3
    assert cfg.indices() == idx


def test_site_state_repr():
    assert repr(SiteState.of("z", +1)) == "(+z)"
    assert repr(SiteState.of("y", -1)) == "(-y)"


def test_chain_links():
    lat = Lattice("chain1D", (4,), "open")
    assert lat.links == ((0, 1), (1, 2), (2, 3))
    latp = Lattice("chain1D", (4,), "periodic")
    assert (3, 0) in latp.links
    assert latp.degree(0) == 2


def test_square_lattice():
    lat = Lattice("square2D", (3, 3), "periodic")
    assert lat.n_sites == 9
    assert len(lat.links) == 18          # 2 per site
    assert all(lat.degree(i) == 4 for i in range(9))
    lato = Lattice("square2D", (2, 3), "open")
    assert len(lato.links) == 7


def test_lattice_validation():
    with pytest.raises(ValueError):
        Lattice("chain1D", (0,), "open")
    with pytest.raises(ValueError):
        Lattice("chain1D", (4, 4), "open")
    with pytest.raises(ValueError):
        Lattice("hexagonal", (4,), "open")
    with pytest.raises(ValueError):
        Lattice("chain1D", (1,), "periodic")


def test_model_spec_validation():
    lat = Lattice("chain1D", (2,), "open")
    with pytest.raises(ValueError):
        ModelSpec(lat, {5: (0, 0, 1)}, {}, {}, {})
    with pytest.raises(ValueError):
        ModelSpec(lat, {}, {(0, 1): np.zeros((2, 2))}, {}, {})
    with pytest.raises(ValueError):
        ModelSpec(lat, {}, {}, {0: {"q": 1.0}}, {})
    with pytest.raises(ValueError):
        ModelSpec(lat, {}, {}, {0: {"x": -1.0}}, {})
    with pytest.raises(ValueError):
        ModelSpec(lat, {}, {}, {}, {}, gamma=-0.5)


def test_tfim_model_fields():
    lat = Lattice("chain1D", (3,), "periodic")
    spec = tfim_model(lat, 0.5, 1.0, gamma=0.7, with_noise=True)
    assert spec.local_fields[0] == (0.0, 0.0, 1.0)
    J = np.asarray(spec.pair_couplings[(0, 1)])
    assert J[0, 0] == 0.5 and np.count_nonzero(J) == 1
    assert set(spec.pair_noise) == set(lat.links)
    assert spec.gamma == 0.7
