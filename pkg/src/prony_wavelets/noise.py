"""Noisy measurements, rounding-based recovery and error reporting.

SNR is measured with maximum norms over the measurement set::

    SNR = -20 log10(max |eps| / max |f_hat|)

Noise is drawn uniformly from the complex unit disk and rescaled so that
this ratio is hit exactly.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import norm

from .errors import NumericalError, ValidationError
from .lattice import SupportBox, WaveletBank
from .reconstruction import Reconstruction, Tolerances, plan_values, run_levels
from .sampling import SamplingPlan
from .signal import MeasurementSet, SparseWaveletSignal, eval_signal_time, measure_on_plan, random_signal

DISTRIBUTIONS = ("uniform-complex-disk",)
THREADS_ENV = "PRONY_WAVELETS_THREADS"


@dataclass(frozen=True)
class NoiseSpec:
    snr_db: float
    seed: int = 0
    distribution: str = "uniform-complex-disk"

    def __post_init__(self):
        if not (self.snr_db > 0):
            raise ValidationError(f"snr_db must be positive or infinite, got {self.snr_db}")
        if self.distribution not in DISTRIBUTIONS:
            raise ValidationError(f"unknown noise distribution {self.distribution!r}")


def disk_noise(rng: np.random.Generator, size: int) -> np.ndarray:
    """I.i.d. points uniform on the unit disk in the complex plane."""
    radius = np.sqrt(rng.uniform(0.0, 1.0, size))
    angle = rng.uniform(0.0, 2 * np.pi, size)
    return radius * np.exp(1j * angle)


def snr_db(clean, noisy) -> float:
    clean = np.asarray(clean)
    eps = np.asarray(noisy) - clean
    peak = np.max(np.abs(eps), initial=0.0)
    if peak == 0:
        return math.inf
    return float(-20.0 * np.log10(peak / np.max(np.abs(clean))))


def add_noise(m: MeasurementSet, spec: NoiseSpec) -> MeasurementSet:
    """``m`` plus noise at exactly ``spec.snr_db``."""
    if len(m) == 0:
        raise ValidationError("empty measurement set")
    if math.isinf(spec.snr_db):
        return m.with_values(m.values.copy())
    peak = np.max(np.abs(m.values))
    if peak == 0:
        raise ValidationError("SNR undefined for zero signal")
    eps = disk_noise(np.random.default_rng(spec.seed), len(m))
    eps *= peak * 10.0 ** (-spec.snr_db / 20.0) / np.max(np.abs(eps))
    return m.with_values(m.values + eps)


def _support_sets(sig: SparseWaveletSignal) -> dict:
    return {key: set(v) for key, v in sig.supports().items()}


@dataclass
class RobustReport:
    mismatch: float
    distances: dict
    hits: Optional[dict] = None

    @property
    def exact_support(self) -> Optional[bool]:
        if self.hits is None:
            return None
        return all(h["missed"] == [] and h["extra"] == [] for h in self.hits.values())

    def to_dict(self) -> dict:
        return {
            "mismatch": self.mismatch,
            "max_distance": {str(k): float(np.max(v, initial=0.0)) for k, v in self.distances.items()},
            "hits": None if self.hits is None else {str(k): v for k, v in self.hits.items()},
            "exact_support": self.exact_support,
        }


def support_hits(truth: SparseWaveletSignal, recovered: SparseWaveletSignal) -> dict:
    """Per coefficient map: atoms found, missed and spurious."""
    t, r = _support_sets(truth), _support_sets(recovered)
    out = {}
    for key in t:
        got = r.get(key, set())
        out[key] = {
            "hit": sorted(t[key] & got),
            "missed": sorted(t[key] - got),
            "extra": sorted(got - t[key]),
        }
    return out


def reconstruct_robust(
    measurements: MeasurementSet,
    plan: SamplingPlan,
    bank: WaveletBank,
    box: SupportBox,
    tolerances: Optional[Tolerances] = None,
    truth: Optional[SparseWaveletSignal] = None,
    real: Optional[bool] = True,
) -> tuple:
    """Recovery with phase-nearest rounding of Prony nodes.

    Nodes are never rejected for lying off the lattice: each goes to the
    nearest lattice phase in the level box, duplicates merge and amplitudes
    are refitted. Returns ``(signal, RobustReport)``; the report compares
    supports with ``truth`` when given.
    """
    tol = tolerances or Tolerances()
    values = plan_values(measurements, plan)
    res: Reconstruction = run_levels(values, plan, bank, box, tol, nearest=True, real=real)
    distances = {}
    for lv in res.levels:
        for key, out in lv.prony.items():
            distances[key] = np.asarray(out.distances, dtype=float)
    hits = support_hits(truth, res.signal) if truth is not None else None
    return res.signal, RobustReport(res.mismatch, distances, hits)


def _rel(num: float, den: float) -> float:
    return num / den if den > 0 else num


def error_report(
    original: SparseWaveletSignal,
    recovered: SparseWaveletSignal,
    bank: WaveletBank,
    grid=None,
) -> dict:
    """Coefficient, support and time-domain differences between two signals.

    ``grid`` is an array of time points (``(N, n)``, or ``(N,)`` in 1D).
    Time-domain errors need time evaluators on the bank.
    """
    if (original.n, original.r, original.M) != (recovered.n, recovered.r, recovered.M):
        raise ValidationError("signals do not share a bank")
    a, b = original.flat(), recovered.flat()
    levels = {}
    keys = ["a0"] + sorted(set(original.b) | set(recovered.b))
    for key in keys:
        ka = {k for (w, k) in a if w == key}
        kb = {k for (w, k) in b if w == key}
        diff = sum(float(np.sum(np.abs(a.get((key, k), 0) - b.get((key, k), 0)) ** 2)) for k in ka | kb)
        size = sum(float(np.sum(np.abs(a[(key, k)]) ** 2)) for k in ka)
        tp = len(ka & kb)
        levels[str(key)] = {
            "relative_error": _rel(math.sqrt(diff), math.sqrt(size)),
            "precision": tp / len(kb) if kb else 1.0,
            "recall": tp / len(ka) if ka else 1.0,
        }
    diff_all = sum(float(np.sum(np.abs(a.get(k, 0) - b.get(k, 0)) ** 2)) for k in set(a) | set(b))
    size_all = sum(float(np.sum(np.abs(v) ** 2)) for v in a.values())
    report = {"relative_error": _rel(math.sqrt(diff_all), math.sqrt(size_all)), "levels": levels}
    if grid is not None and bank.has_time:
        t = np.asarray(grid, dtype=float)
        f0 = eval_signal_time(original, bank, t)
        f1 = eval_signal_time(recovered, bank, t)
        d = f0 - f1
        report["time"] = {
            "sup": float(np.max(np.abs(d), initial=0.0)),
            "l2": float(np.sqrt(np.mean(d ** 2))) if len(d) else 0.0,
            "points": int(len(d)),
        }
    return report


def difference_curve(original, recovered, bank: WaveletBank, grid) -> np.ndarray:
    """Columns ``t..., original, recovered, difference`` on ``grid``."""
    t = np.asarray(grid, dtype=float)
    T = t.reshape(len(t), -1)
    f0 = eval_signal_time(original, bank, t)
    f1 = eval_signal_time(recovered, bank, t)
    return np.column_stack([T, f0, f1, f0 - f1])


@dataclass
class SweepRow:
    snr_db: float
    trials: int
    successes: int
    failures: int = 0

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0


@dataclass
class SweepSetup:
    """One Monte Carlo trial: a random signal of fixed sparsity, its plan and box."""

    bank_name: str
    variant: Optional[str]
    s: tuple
    h: tuple
    box: tuple
    allowed: Optional[np.ndarray] = None
    tolerances: Tolerances = field(default_factory=Tolerances)


def _trial(args) -> list:
    setup, plan_dict, seed, snrs = args
    from .banks import make_bank

    # banks hold closures, so plans travel between processes as dicts
    bank = make_bank(setup.bank_name, setup.variant)
    plan = SamplingPlan.from_dict(plan_dict, bank)
    box = SupportBox(*setup.box)
    truth = random_signal(bank, setup.s, box, seed=seed)
    clean = measure_on_plan(truth, bank, plan)
    out = []
    for snr in snrs:
        noisy = add_noise(clean, NoiseSpec(snr, seed=seed))
        try:
            _, rep = reconstruct_robust(noisy, plan, bank, box, setup.tolerances, truth=truth)
            out.append(bool(rep.exact_support))
        except NumericalError:
            out.append(None)
    return out


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValidationError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def snr_sweep(
    setup: SweepSetup,
    snrs: Sequence[float],
    trials: int = 100,
    seed: int = 0,
    workers: Optional[int] = None,
) -> list:
    """Support-recovery counts per SNR.

    Trial ``i`` uses seed ``seed + i`` for both the signal and the noise at
    every SNR, so higher SNR sees the same noise shape scaled down. A trial
    whose pipeline raises a numerical error counts as a failure.
    """
    from .banks import make_bank
    from .sampling import build_plan

    bank = make_bank(setup.bank_name, setup.variant)
    plan = build_plan(bank, setup.s, setup.h, allowed=setup.allowed)
    snrs = [float(v) for v in snrs]
    plan_dict = plan.to_dict()
    jobs = [(setup, plan_dict, seed + i, snrs) for i in range(trials)]
    workers = worker_count() if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial, jobs, chunksize=max(1, trials // (4 * workers))))
    else:
        results = [_trial(job) for job in jobs]
    rows = []
    for i, snr in enumerate(snrs):
        col = [r[i] for r in results]
        rows.append(SweepRow(snr, trials, sum(1 for c in col if c), sum(1 for c in col if c is None)))
    return rows


@dataclass
class MonotonicityReport:
    passed: bool
    confidence: float
    violations: list

    def to_dict(self) -> dict:
        return {"passed": self.passed, "confidence": self.confidence, "violations": self.violations}


def monotonicity_check(rows: Sequence[SweepRow], confidence: float = 0.95) -> MonotonicityReport:
    """Flag significant drops of the success rate as SNR increases.

    For every pair of SNR levels ``lo < hi`` a one-sided two-proportion
    z-test asks whether the rate at ``hi`` is lower than at ``lo``. The sweep
    is monotone nondecreasing at the given confidence if no pair rejects.
    """
    rows = sorted(rows, key=lambda r: r.snr_db)
    z_crit = norm.ppf(confidence)
    bad = []
    for i, lo in enumerate(rows):
        for hi in rows[i + 1:]:
            if hi.rate >= lo.rate:
                continue
            pooled = (lo.successes + hi.successes) / (lo.trials + hi.trials)
            se = math.sqrt(pooled * (1 - pooled) * (1 / lo.trials + 1 / hi.trials))
            z = (lo.rate - hi.rate) / se if se > 0 else math.inf
            if z > z_crit:
                bad.append({"low_snr": lo.snr_db, "high_snr": hi.snr_db, "z": z})
    return MonotonicityReport(not bad, confidence, bad)
