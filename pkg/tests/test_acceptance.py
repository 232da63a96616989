"""Acceptance suite. Each test records one pass/fail line per criterion;
the lines are repeated in the pytest terminal summary."""

import time

import numpy as np

from prony_wavelets import (
    NoiseSpec,
    PronyInput,
    SupportBox,
    add_noise,
    build_plan,
    demo_1d,
    demo_2d,
    fourier_measure,
    make_bank,
    measure_on_plan,
    random_signal,
    reconstruct,
    reconstruct_robust,
    recover_sparse_trig,
    validate_shift,
    verify_bank,
)
from prony_wavelets.demos import grid_1d
from prony_wavelets.errors import NumericalError
from prony_wavelets.noise import SweepSetup, monotonicity_check, snr_sweep, worker_count

from oracles import quad_signal_fourier, trig_samples

SQRT2, SQRT3 = np.sqrt(2.0), np.sqrt(3.0)


def rel_coeff_error(truth, got):
    """Relative l2 error over all coefficients, infinite if supports differ."""
    a, b = truth.flat(), got.flat()
    if set(a) != set(b):
        return np.inf
    diff = np.sqrt(sum(np.sum(np.abs(a[k] - b[k]) ** 2) for k in a))
    return diff / np.sqrt(sum(np.sum(np.abs(v) ** 2) for v in a.values()))


def test_c1_example_1d(criterion):
    d = demo_1d()
    t0 = time.perf_counter()
    plan = d.plan()
    rec = reconstruct(measure_on_plan(d.signal, d.bank, plan), plan, d.bank, d.box)
    elapsed = time.perf_counter() - t0
    sup = rec.supports()
    supports_ok = sup["a0"] == [(2,), (4,)] and sup[(1, 0)] == [(1,), (5,)] and sup[(1, 1)] == [(6,), (12,)]
    err = rel_coeff_error(d.signal, rec)
    ok = supports_ok and err < 1e-8 and elapsed < 1.0
    criterion(1, ok, f"supports={'exact' if supports_ok else sup} rel_err={err:.2e} time={elapsed:.3f}s")
    assert ok


def test_c2_cardinality(criterion):
    rng = np.random.default_rng(2)
    banks = [("alpert1d", None), ("haar1d", None), ("haar2d", "t2")]
    worst = 0.0
    violations = []
    for i in range(50):
        bank = make_bank(*banks[rng.integers(len(banks))])
        s = tuple(int(v) for v in rng.integers(1, 5, size=rng.integers(1, 4)))
        h = rng.uniform(0.001, 0.05, bank.n)
        plan = build_plan(bank, s, h)
        bound = 2 * bank.M * bank.r * sum(s)
        worst = max(worst, len(plan.omega) / bound)
        if len(plan.omega) > bound:
            violations.append((bank.name, s))
    d = demo_1d()
    grid = grid_1d()
    plan = d.plan()
    dedup = len(plan.omega)
    in_grid = all(np.min(np.abs(grid[:, 0] - x[0])) < 1e-12 for x in plan.omega)
    # the printed set is 4 node values times 6 offsets k = 0, +-1, +-2, 4
    ok = not violations and dedup == len(grid) == 24 and dedup <= plan.bound == 32 and in_grid
    criterion(2, ok, f"random: max #omega/bound={worst:.3f}, violations={len(violations)}; "
                     f"example: #omega={dedup} printed={len(grid)} bound={plan.bound}")
    assert ok


def test_c3_trig_suite(criterion):
    rng = np.random.default_rng(3)
    h = np.array([SQRT2 / 64, SQRT3 / 64])
    failures = []
    worst = 0.0
    t0 = time.perf_counter()
    for i in range(500):
        n = int(rng.integers(1, 3))
        s = int(rng.integers(1, 9))
        box = SupportBox.cube(-32, 33, n)
        pts = box.points()
        idx = rng.choice(len(pts), size=s, replace=False)
        coeffs = {tuple(int(v) for v in pts[j]): rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 1.0) for j in idx}
        d = h[:n]
        try:
            out = recover_sparse_trig(PronyInput(trig_samples(coeffs, d, s), d, s, box))
        except NumericalError as exc:
            failures.append((i, n, s, type(exc).__name__))
            continue
        got = out.as_dict()
        if set(got) != set(coeffs):
            failures.append((i, n, s, "support"))
            continue
        err = max(abs(got[k][0] - v) for k, v in coeffs.items())
        worst = max(worst, err)
        if err > 1e-8:
            failures.append((i, n, s, f"amplitude {err:.1e}"))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 10.0
    by_s = {}
    for _, _, s, _ in failures:
        by_s[s] = by_s.get(s, 0) + 1
    criterion(3, ok, f"failures={len(failures)}/500 by_s={dict(sorted(by_s.items()))} "
                     f"max_amp_err={worst:.1e} time={elapsed:.2f}s")
    assert ok, failures[:10]


def test_c4_bank_verification(criterion):
    bank = make_bank("alpert1d")
    grid = 2 * np.pi * np.arange(64)[:, None] / 64
    rep = verify_bank(bank, grid, tau=1e-8, tau_rank=1e-3)
    s = rep.summary()
    ok = rep.passed and s["points"] == 64
    criterion(4, ok, f"refinement={s['max_refinement_residual']:.1e} wavelet={s['max_wavelet_residual']:.1e} "
                     f"orthogonality={s['max_orthogonality_residual']:.1e} sigma_min={s['min_sigma_min']:.3f}")
    assert ok


def test_c5_round_trips(criterion):
    bank = make_bank("alpert1d")
    box = SupportBox.cube(0, 16, 1)
    plan = build_plan(bank, (2, 2), [SQRT2 / 64])
    failures = []
    worst = 0.0
    for seed in range(500):
        sig = random_signal(bank, (2, 2), box, seed=seed)
        try:
            rec = reconstruct(measure_on_plan(sig, bank, plan), plan, bank, box)
        except NumericalError as exc:
            failures.append((seed, type(exc).__name__))
            continue
        err = rel_coeff_error(sig, rec)
        worst = max(worst, err)
        if not err < 1e-8:
            failures.append((seed, f"error {err:.1e}"))
    ok = not failures
    criterion(5, ok, f"failures={len(failures)}/500 max_rel_err={worst:.1e}")
    assert ok, failures[:10]


def test_c6_noise(criterion):
    d = demo_1d()
    plan = d.plan()
    noisy = add_noise(measure_on_plan(d.signal, d.bank, plan), NoiseSpec(50.0, seed=0))
    try:
        _, rep = reconstruct_robust(noisy, plan, d.bank, d.box, truth=d.signal)
        single = bool(rep.exact_support)
        missed = {str(k): v["missed"] for k, v in rep.hits.items() if v["missed"]}
    except NumericalError as exc:
        single, missed = False, type(exc).__name__
    setup = SweepSetup("alpert1d", None, (2, 2), (SQRT2 / 64,), ((0,), (16,)), allowed=grid_1d())
    snrs = np.arange(20.0, 80.0 + 1e-9, 5.0)
    rows = snr_sweep(setup, snrs, trials=100, seed=0, workers=worker_count())
    mono = monotonicity_check(rows, confidence=0.95)
    rates = " ".join(f"{r.snr_db:g}:{r.rate:.2f}" for r in rows)
    ok = single and mono.passed
    criterion(6, ok, f"50dB example exact={single} missed={missed}; monotone={mono.passed}; rates {rates}")
    assert mono.passed, mono.violations
    assert single, f"50 dB example did not recover exact supports: missed {missed}"


def test_c7_example_2d(criterion):
    d = demo_2d(variant="t2")
    plan = d.plan()
    rec = reconstruct(measure_on_plan(d.signal, d.bank, plan), plan, d.bank, d.box)
    err = rel_coeff_error(d.signal, rec)
    v = demo_2d(variant="verbatim")
    vplan = v.plan()
    try:
        vrec = reconstruct(measure_on_plan(v.signal, v.bank, vplan), vplan, v.bank, v.box)
        verbatim = f"recovered rel_err={rel_coeff_error(v.signal, vrec):.2e}"
    except NumericalError as exc:
        verbatim = f"not recovered ({type(exc).__name__})"
    ok = err < 1e-8
    criterion(7, ok, f"t2 rel_err={err:.2e} #omega={len(plan.omega)}; verbatim (no threshold): {verbatim}")
    assert ok


def test_c8_shift_validator(criterion):
    box = SupportBox.cube(0, 16, 1)
    box2 = SupportBox.cube(0, 16, 2)
    at_limit = validate_shift([2 / 16], "box", box).passed and validate_shift([1 / 16, 1 / 16], "box", box2).passed
    over = validate_shift([(2 + 1e-9) / 16], "box", box).passed
    rational = validate_shift([1.0], "heuristic").passed
    ok = at_limit and not over and not rational
    criterion(8, ok, f"=2 passes: {at_limit}; 2+1e-9 passes: {over}; h=1 heuristic passes: {rational}")
    assert ok


def test_c9_quadrature(criterion):
    cases = [
        ("alpert1d", None, (2, 2), 16),
        ("haar1d", None, (2, 2), 16),
        ("haar2d", "t2", (2,), 4),
        ("haar2d", "verbatim", (2,), 4),
    ]
    errs = {}
    for name, variant, s, width in cases:
        bank = make_bank(name, variant)
        sig = random_signal(bank, s, SupportBox.cube(0, width, bank.n), seed=9)
        xi = np.random.default_rng(9).uniform(-4 * np.pi, 4 * np.pi, (20, bank.n))
        ref = quad_signal_fourier(sig, bank, xi)
        errs[name + (f":{variant}" if variant else "")] = float(np.max(np.abs(fourier_measure(sig, bank, xi) - ref)))
    ok = all(e < 1e-7 for e in errs.values())
    criterion(9, ok, " ".join(f"{k}={v:.1e}" for k, v in errs.items()))
    assert ok, errs
