import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prony_wavelets import SupportBox, ValidationError, build_plan, make_bank, validate_shift
from prony_wavelets.demos import grid_1d, grid_2d
from prony_wavelets.errors import LambdaSearchExhausted
from prony_wavelets.sampling import (
    SamplingPlan,
    build_gamma,
    frequencies_from_pattern,
    group_frequencies,
    half_integer_indices,
    omega_in_lattice_shift,
)

H1 = np.array([np.sqrt(2) / 64])
H2 = np.array([np.sqrt(2) / 32, np.sqrt(3) / 32])


def test_half_integer_nodes():
    assert half_integer_indices(2).tolist() == [-1.5, -0.5, 0.5, 1.5]
    g = build_gamma(3, [1.0, 2.0])
    assert g.shape == (6, 2)
    assert np.allclose(g[:, 1], 2 * g[:, 0])
    with pytest.raises(ValidationError):
        build_gamma(0, [1.0])


class TestPlan:
    def test_counts(self, alpert):
        plan = build_plan(alpert, (2, 2), H1)
        assert plan.raw_count == 2 * 2 * 2 * 4
        assert len(plan.omega) <= plan.bound == 32
        assert len(plan.groups) == 2 * 4 * 2

    def test_group_frequencies_formula(self, alpert):
        plan = build_plan(alpert, (2, 3), H1)
        sc = alpert.scheme
        for g in plan.groups:
            freqs = group_frequencies(plan, g)
            p = sc.cosets[g.m_prime]
            for k, x in zip(g.lam.shifts, freqs):
                q = sc.mt_power(g.j) @ p + sc.mt_power(g.j + 1) @ np.array(k)
                assert np.allclose(x, np.pi * g.gamma + 2 * np.pi * q)
            anchor = np.pi * sc.mt_inv_power(g.j + 1) @ g.gamma + 2 * np.pi * sc.Mt_inv @ p
            assert np.allclose(g.anchor, anchor)

    def test_lambda_systems_well_posed(self, haar2d):
        plan = build_plan(haar2d, (2,), H2)
        for g in plan.groups:
            F = haar2d.phi_hat(g.anchor[None, :] + 2 * np.pi * np.array(g.lam.shifts, dtype=float))
            assert np.linalg.svd(F, compute_uv=False)[-1] > 1e-6

    def test_in_shifted_lattice(self, alpert, haar2d):
        assert omega_in_lattice_shift(build_plan(alpert, (2, 2), H1))
        assert omega_in_lattice_shift(build_plan(haar2d, (3,), H2))

    def test_hash_stable_and_sensitive(self, alpert):
        a = build_plan(alpert, (2, 2), H1)
        b = build_plan(alpert, (2, 2), H1)
        c = build_plan(alpert, (2, 1), H1)
        assert a.hash == b.hash != c.hash
        assert len(a.hash) == 16

    def test_dict_round_trip(self, alpert):
        plan = build_plan(alpert, (2, 2), H1, box=SupportBox.cube(0, 16, 1))
        back = SamplingPlan.from_dict(plan.to_dict(), alpert)
        assert back.hash == plan.hash
        assert np.array_equal(back.omega, plan.omega)
        assert back.box == plan.box
        assert [g.freq_index for g in back.groups] == [g.freq_index for g in plan.groups]

    def test_tampered_dict_rejected(self, alpert):
        d = build_plan(alpert, (1,), H1).to_dict()
        d["omega"][0][0] += 1e-3
        with pytest.raises(ValidationError):
            SamplingPlan.from_dict(d, alpert)

    def test_bad_inputs(self, alpert):
        with pytest.raises(ValidationError):
            build_plan(alpert, (2, 0), H1)
        with pytest.raises(ValidationError):
            build_plan(alpert, (2,), [0.0])
        with pytest.raises(ValidationError):
            build_plan(alpert, (2,), [0.1, 0.2])

    def test_allowed_grid_1d(self, alpert):
        grid = grid_1d()
        plan = build_plan(alpert, (2, 2), H1, allowed=grid)
        for x in plan.omega:
            assert np.min(np.abs(grid[:, 0] - x[0])) < 1e-12

    def test_allowed_grid_2d(self, haar2d):
        grid = grid_2d()
        plan = build_plan(haar2d, (2,), H2, allowed=grid)
        for x in plan.omega:
            assert np.min(np.max(np.abs(grid - x[None, :]), axis=1)) < 1e-12

    def test_allowed_grid_too_small(self, alpert):
        with pytest.raises(LambdaSearchExhausted):
            build_plan(alpert, (2,), H1, allowed=grid_1d()[:4])


@settings(max_examples=25, deadline=None)
@given(
    st.sampled_from([("alpert1d", None), ("haar1d", None), ("haar2d", "t2")]),
    st.lists(st.integers(1, 4), min_size=1, max_size=3),
    st.floats(0.001, 0.05),
)
def test_count_bound_property(bank_id, s, scale):
    bank = make_bank(*bank_id)
    h = scale * np.array([1.0, np.sqrt(2)])[: bank.n]
    plan = build_plan(bank, s, h)
    assert len(plan.omega) <= 2 * bank.M * bank.r * sum(s)
    assert plan.raw_count == 2 * bank.M * bank.r * sum(s)
    assert len({tuple(np.round(x, 9)) for x in plan.omega}) == len(plan.omega)


class TestValidateShift:
    def test_box_mode_boundary(self):
        box = SupportBox.cube(0, 16, 1)
        assert validate_shift([2 / 16], "box", box).passed
        assert not validate_shift([(2 + 1e-9) / 16], "box", box).passed
        assert not validate_shift([-0.1], "box", box).passed

    def test_box_mode_2d_sum(self):
        box = SupportBox.cube(-32, 32, 2)
        assert validate_shift([1 / 64, 1 / 64], "box", box).passed
        assert not validate_shift([1 / 64, 1 / 63], "box", box).passed

    def test_box_mode_needs_box(self):
        with pytest.raises(ValidationError):
            validate_shift([0.1], "box")

    def test_heuristic(self):
        assert not validate_shift([1.0]).passed
        assert not validate_shift([0.5]).passed
        assert validate_shift([np.sqrt(2) / 64]).passed
        assert validate_shift([np.sqrt(2), np.sqrt(3)], collision_radius=20).passed
        assert not validate_shift([np.sqrt(2), 2 * np.sqrt(2)], collision_radius=20).passed

    def test_unknown_mode(self):
        with pytest.raises(ValidationError):
            validate_shift([0.1], "exact")

    def test_report_dict(self):
        d = validate_shift([0.1], "box", SupportBox.cube(0, 4, 1)).to_dict()
        assert d["mode"] == "box" and d["width"] == 4 and d["passed"]


def test_frequencies_from_pattern():
    f = frequencies_from_pattern([1, -1], [0.5], [[0], [1]])
    assert np.allclose(f[:, 0], np.pi * np.array([0.5, 2.5, -0.5, 1.5]))
