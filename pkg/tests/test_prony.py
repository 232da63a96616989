import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prony_wavelets import PronyInput, SupportBox, ValidationError, recover_sparse_trig
from prony_wavelets.errors import LatticeMatchError, SparsityExceeded
from prony_wavelets.prony import (
    companion,
    hankel,
    lattice_search,
    nodes_to_lattice,
    polish_phases,
    prony_nodes,
    vandermonde,
)

from oracles import trig_samples

H = np.sqrt(2) / 64
BOX = SupportBox.cube(-32, 33, 1)


def support(out):
    return sorted(tuple(int(c) for c in k) for k in out.locations)


def test_hankel_layout():
    H = hankel(np.arange(5), 3)
    assert H.tolist() == [[0, 1, 2], [1, 2, 3], [2, 3, 4]]


def test_companion_roots():
    coeffs = np.array([2.0, -3.0, 0.5, 1.0])
    ev = np.sort_complex(np.linalg.eigvals(companion(coeffs)))
    assert np.allclose(ev, np.sort_complex(np.roots(coeffs[::-1])))


def test_vandermonde_matches_samples():
    locs = np.array([[3], [-7]])
    V = vandermonde(locs, np.array([0.2]), 3)
    w = trig_samples({(3,): 1.0, (-7,): 0.0}, [0.2], 3)
    assert np.allclose(V[:, 0], w)


class TestNodes:
    def test_exact_nodes(self):
        d = 0.3
        w = trig_samples({(2,): 1.0, (-5,): -0.4, (7,): 0.2j}, [d], 4)
        est = prony_nodes(w, 4)
        assert est.rank == 3
        expect = np.sort(np.mod(-d * np.array([2, -5, 7]), 2 * np.pi))
        assert np.allclose(np.sort(np.mod(np.angle(est.nodes), 2 * np.pi)), expect, atol=1e-10)

    def test_zero_input(self):
        est = prony_nodes(np.zeros(6), 3)
        assert est.rank == 0 and len(est.nodes) == 0

    def test_length_checked(self):
        with pytest.raises(ValidationError):
            prony_nodes(np.ones(5), 3)

    def test_polish_recovers_phase(self):
        t = np.arange(-3, 3) + 0.5
        th = np.array([0.4, -1.1])
        w = np.exp(1j * np.outer(t, th)) @ np.array([1.0, 0.7])
        assert np.allclose(np.sort(polish_phases(w, th + 1e-4, t)), np.sort(th), atol=1e-12)


class TestNodesToLattice:
    def test_strict(self):
        z = np.exp(-1j * 0.3 * np.array([4, -2]))
        k, dist = nodes_to_lattice(z, [0.3], SupportBox.cube(-5, 6, 1))
        assert k[:, 0].tolist() == [4, -2]
        assert np.all(dist < 1e-12)

    def test_off_lattice(self):
        z = np.exp(-1j * 0.3 * np.array([4.5]))
        with pytest.raises(LatticeMatchError):
            nodes_to_lattice(z, [0.3], SupportBox.cube(-5, 6, 1))
        k, dist = nodes_to_lattice(z, [0.3], SupportBox.cube(-5, 6, 1), nearest=True)
        assert k[0, 0] in (4, 5)
        assert np.isclose(dist[0], 0.15)

    def test_ambiguous(self):
        # k = 0 and k = 21 have phases 2e-7 apart with this direction
        d = 2 * np.pi / 21 + 1e-8
        with pytest.raises(LatticeMatchError):
            nodes_to_lattice(np.array([1.0 + 0j]), [d], SupportBox.cube(0, 22, 1))

    def test_explicit_points_2d(self):
        pts = np.array([[0, 0], [1, 2], [3, -1]])
        d = np.array([0.1, 0.37])
        z = np.exp(-1j * (pts[1:] @ d))
        k, _ = nodes_to_lattice(z, d, pts)
        assert k.tolist() == [[1, 2], [3, -1]]


class TestRecover:
    def test_exact_1d(self):
        c = {(-20,): 0.5, (3,): -1.0, (31,): 0.25}
        out = recover_sparse_trig(PronyInput(trig_samples(c, [H], 4), [H], 4, BOX))
        assert support(out) == sorted(c)
        got = out.as_dict()
        assert all(abs(got[k][0] - v) < 1e-8 for k, v in c.items())

    def test_exact_2d(self):
        d = np.array([np.sqrt(2), np.sqrt(3)]) / 64
        box = SupportBox.cube(-32, 33, 2)
        c = {(-3, 10): 0.9, (17, -30): -0.2, (0, 0): 0.5}
        out = recover_sparse_trig(PronyInput(trig_samples(c, d, 3), d, 3, box))
        assert support(out) == sorted(c)

    def test_vector_components_merge(self):
        d = 0.3
        s = 3
        w1 = trig_samples({(1,): 1.0, (4,): 0.5}, [d], s)
        w2 = trig_samples({(4,): -0.3, (-6,): 0.8}, [d], s)
        out = recover_sparse_trig(PronyInput(np.column_stack([w1, w2]), [d], s, SupportBox.cube(-8, 9, 1)))
        assert support(out) == [(-6,), (1,), (4,)]
        got = out.as_dict()
        assert np.allclose(got[(4,)], [0.5, -0.3])
        assert np.allclose(got[(-6,)], [0.0, 0.8], atol=1e-12)

    def test_union_exceeds_sparsity(self):
        d = 0.3
        w1 = trig_samples({(1,): 1.0, (4,): 0.5}, [d], 2)
        w2 = trig_samples({(-2,): -0.3, (-6,): 0.8}, [d], 2)
        with pytest.raises(SparsityExceeded):
            recover_sparse_trig(PronyInput(np.column_stack([w1, w2]), [d], 2, SupportBox.cube(-8, 9, 1)))

    def test_zero_symbol(self):
        out = recover_sparse_trig(PronyInput(np.zeros(4), [0.3], 2, SupportBox.cube(0, 4, 1)))
        assert len(out.locations) == 0

    def test_support_outside_box(self):
        d = 0.3
        w = trig_samples({(12,): 1.0}, [d], 1)
        with pytest.raises(LatticeMatchError):
            recover_sparse_trig(PronyInput(w, [d], 1, SupportBox.cube(0, 8, 1)))

    def test_sample_count_checked(self):
        with pytest.raises(ValidationError):
            PronyInput(np.ones(5), [0.3], 3, BOX)

    def test_clustered_needs_lattice_search(self):
        # adjacent atoms at -31, -30 and -28: phase snapping alone is not accurate enough
        rng = np.random.default_rng(0)
        ks = rng.choice(np.arange(-32, 33), 8, replace=False)
        c = {(int(k),): rng.choice([-1, 1]) * rng.uniform(0.1, 1) for k in ks}
        inp = PronyInput(trig_samples(c, [H], 8), [H], 8, BOX)
        with pytest.raises(LatticeMatchError):
            recover_sparse_trig(inp, refine=False)
        out = recover_sparse_trig(inp)
        assert support(out) == sorted(c)
        got = out.as_dict()
        assert max(abs(got[k][0] - v) for k, v in c.items()) < 1e-8

    def test_lattice_search_direct(self):
        c = {(2,): 1.0, (3,): -0.5}
        w = trig_samples(c, [H], 2)
        found = lattice_search(w, 2, np.array([H]), BOX)
        assert sorted(map(tuple, found.tolist())) == sorted(c)

    def test_nearest_mode_trims(self):
        rng = np.random.default_rng(3)
        d = 0.3
        w = trig_samples({(1,): 1.0, (5,): -0.7}, [d], 2) + 1e-3 * rng.normal(size=4)
        out = recover_sparse_trig(PronyInput(w, [d], 2, SupportBox.cube(-8, 9, 1)), nearest=True, refine=False)
        assert support(out) == [(1,), (5,)]


@settings(max_examples=60, deadline=None)
@given(
    st.dictionaries(st.integers(-8, 8), st.floats(0.1, 1.0), min_size=1, max_size=4),
    st.lists(st.booleans(), min_size=4, max_size=4),
)
def test_recovery_property(mags, signs):
    c = {(k,): (v if sg else -v) for (k, v), sg in zip(mags.items(), signs)}
    s = 4
    d = 0.3
    out = recover_sparse_trig(PronyInput(trig_samples(c, [d], s), [d], s, SupportBox.cube(-8, 9, 1)))
    assert support(out) == sorted(c)
    got = out.as_dict()
    assert max(abs(got[k][0] - v) for k, v in c.items()) < 1e-8
