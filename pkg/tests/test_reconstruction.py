import numpy as np
import pytest

from prony_wavelets import (
    SparseWaveletSignal,
    SupportBox,
    Tolerances,
    ValidationError,
    build_plan,
    demo_1d,
    demo_2d,
    fourier_measure,
    make_bank,
    measure_at,
    measure_on_plan,
    random_signal,
    reconstruct,
)
from prony_wavelets.errors import IllConditionedError, NumericalError, SingularMaskError, VerificationError
from prony_wavelets.lattice import block_mask_matrix
from prony_wavelets.reconstruction import plan_values, solve_group, unmix_masks
from prony_wavelets.signal import MeasurementSet, coeff_symbol

H1 = np.array([np.sqrt(2) / 64])
BOX16 = SupportBox.cube(0, 16, 1)


def max_coeff_error(a, b):
    fa, fb = a.flat(), b.flat()
    if set(fa) != set(fb):
        return np.inf
    return max((np.max(np.abs(fa[k] - fb[k])) for k in fa), default=0.0)


@pytest.fixture(scope="module")
def alpert_case():
    bank = make_bank("alpert1d")
    plan = build_plan(bank, (2, 2), H1)
    sig = random_signal(bank, (2, 2), BOX16, seed=5)
    return bank, plan, sig


class TestPieces:
    def test_solve_group(self, alpert_case):
        bank, plan, sig = alpert_case
        g = plan.groups[0]
        A_true = np.array([1.0 - 2j, 0.5])
        F = bank.phi_hat(g.anchor[None, :] + 2 * np.pi * np.array(g.lam.shifts, dtype=float))
        A, cond = solve_group(g, F @ A_true, bank)
        assert np.allclose(A, A_true)
        assert cond >= 1.0

    def test_solve_group_conditioning_gate(self, alpert_case):
        bank, plan, _ = alpert_case
        with pytest.raises(IllConditionedError):
            solve_group(plan.groups[0], np.ones(2), bank, tau_rank=0.99)

    def test_unmix_recovers_symbols(self, alpert_case):
        bank, plan, sig = alpert_case
        j, gi = 1, 2
        gamma = plan.gammas[j][gi]
        # symbols at pi Mt^-j gamma, pushed through the masks give the group rows
        xi = np.pi * bank.scheme.mt_inv_power(j) @ gamma
        a = np.array([0.3 + 0.1j, -0.7])
        b = coeff_symbol(sig, (1, j), xi)
        G = block_mask_matrix(bank, np.pi * bank.scheme.mt_inv_power(j + 1) @ gamma)
        row = np.concatenate([a, b]) @ G
        a_hat, b_hats = unmix_masks(bank, j, gamma, row)
        assert np.allclose(a_hat, a)
        assert np.allclose(b_hats[0], b)

    def test_unmix_singular_gate(self, alpert_case):
        bank, plan, _ = alpert_case
        with pytest.raises(SingularMaskError):
            unmix_masks(bank, 0, plan.gammas[0][0], np.ones(4), tau_rank=2.0)

    def test_plan_values(self, alpert_case):
        bank, plan, sig = alpert_case
        m = measure_on_plan(sig, bank, plan)
        assert np.array_equal(plan_values(m, plan), m.values)
        other = build_plan(bank, (2, 1), H1)
        with pytest.raises(ValidationError):
            plan_values(m, other)

    def test_plan_values_untagged_superset(self, alpert_case):
        bank, plan, sig = alpert_case
        extra = np.vstack([plan.omega[::-1], [[0.123]], [[9.0]]])
        m = measure_at(sig, bank, extra)
        assert np.allclose(plan_values(m, plan), fourier_measure(sig, bank, plan.omega))


class TestRoundTrip:
    def test_alpert(self, alpert_case):
        bank, plan, sig = alpert_case
        rec = reconstruct(measure_on_plan(sig, bank, plan), plan, bank, BOX16)
        assert rec.supports() == sig.supports()
        assert max_coeff_error(rec, sig) < 1e-8

    def test_haar1d_three_levels(self):
        bank = make_bank("haar1d")
        plan = build_plan(bank, (3, 2, 2), [1 / 64])
        box = SupportBox.cube(-8, 8, 1)
        sig = random_signal(bank, (3, 2, 2), box, seed=9)
        rec = reconstruct(measure_on_plan(sig, bank, plan), plan, bank, box)
        assert max_coeff_error(rec, sig) < 1e-8

    def test_haar2d(self, haar2d):
        h = np.array([np.sqrt(2), np.sqrt(3)]) / 32
        box = SupportBox.cube(0, 6, 2)
        plan = build_plan(haar2d, (2, 2), h)
        sig = random_signal(haar2d, (2, 2), box, seed=4)
        rec = reconstruct(measure_on_plan(sig, haar2d, plan), plan, haar2d, box)
        assert max_coeff_error(rec, sig) < 1e-8

    def test_complex_coefficients(self, alpert_case):
        bank, plan, sig = alpert_case
        csig = sig + sig.scale(0.5j)
        rec = reconstruct(measure_on_plan(csig, bank, plan), plan, bank, BOX16)
        assert rec.is_complex
        assert max_coeff_error(rec, csig) < 1e-8

    def test_fewer_atoms_than_sparsity(self, alpert):
        plan = build_plan(alpert, (3, 3), H1)
        sig = SparseWaveletSignal(1, 2, 2, 2, {(4,): [0.5, -0.2]}, {(1, 1): {(30,): [0.0, 1.0]}})
        rec = reconstruct(measure_on_plan(sig, alpert, plan), plan, alpert, BOX16)
        assert rec.supports() == sig.supports()
        assert max_coeff_error(rec, sig) < 1e-8

    def test_demos(self):
        for demo in (demo_1d(), demo_2d()):
            plan = demo.plan()
            rec = reconstruct(measure_on_plan(demo.signal, demo.bank, plan), plan, demo.bank, demo.box)
            assert max_coeff_error(rec, demo.signal) < 1e-8

    def test_details(self, alpert_case):
        bank, plan, sig = alpert_case
        res = reconstruct(measure_on_plan(sig, bank, plan), plan, bank, BOX16, details=True)
        assert [lv.j for lv in res.levels] == [1, 0]
        assert res.mismatch < 1e-10
        lv = res.levels[0]
        for gi, gamma in enumerate(plan.gammas[1]):
            xi = np.pi * bank.scheme.mt_inv_power(1) @ gamma
            assert np.allclose(lv.symbols[gi][1][0], coeff_symbol(sig, (1, 1), xi), atol=1e-10)
        assert res.diagnostics()["levels"][0]["level"] == 1
        # after peeling the finest level, what remains is the coarser signal
        coarse = SparseWaveletSignal(1, 2, 2, 2, sig.a0, {(1, 0): sig.b[(1, 0)]})
        assert np.allclose(lv.peeled, fourier_measure(coarse, bank, plan.omega), atol=1e-10)


class TestFailures:
    def test_shift_too_large(self, alpert):
        plan = build_plan(alpert, (2,), [0.2])
        sig = random_signal(alpert, (2,), BOX16, seed=0)
        with pytest.raises(ValidationError):
            reconstruct(measure_on_plan(sig, alpert, plan), plan, alpert, BOX16)

    def test_sparsity_underestimated(self, alpert):
        plan = build_plan(alpert, (1, 1), H1)
        sig = random_signal(alpert, (3, 3), BOX16, seed=0)
        with pytest.raises(NumericalError):
            reconstruct(measure_on_plan(sig, alpert, plan), plan, alpert, BOX16)

    def test_verification_gate(self, alpert_case):
        bank, plan, sig = alpert_case
        m = measure_on_plan(sig, bank, plan)
        noisy = m.with_values(m.values + 1e-3 * np.random.default_rng(0).normal(size=len(m)))
        with pytest.raises(NumericalError) as info:
            reconstruct(noisy, plan, bank, BOX16, Tolerances(refine=False))
        if isinstance(info.value, VerificationError):
            assert "levels" in info.value.diagnostics

    def test_box_dimension(self, alpert_case):
        bank, plan, sig = alpert_case
        with pytest.raises(ValidationError):
            reconstruct(measure_on_plan(sig, bank, plan), plan, bank, SupportBox.cube(0, 4, 2))

    def test_missing_frequency(self, alpert_case):
        bank, plan, sig = alpert_case
        m = MeasurementSet(plan.omega[1:], fourier_measure(sig, bank, plan.omega[1:]))
        with pytest.raises(ValidationError):
            reconstruct(m, plan, bank, BOX16)

    def test_tolerances_positive(self):
        with pytest.raises(ValidationError):
            Tolerances(eps_verify=0)

    def test_verbatim_variant_does_not_round_trip(self, haar2d_verbatim):
        demo = demo_2d(variant="verbatim")
        plan = demo.plan()
        with pytest.raises(NumericalError):
            reconstruct(measure_on_plan(demo.signal, demo.bank, plan), plan, demo.bank, demo.box)
