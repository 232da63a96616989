"""Sparse wavelet signals, their Fourier measurements and time-domain values."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ValidationError
from .lattice import SupportBox, WaveletBank
from .sampling import SamplingPlan, _as_sparsity


def _key(k) -> tuple:
    return tuple(int(c) for c in np.atleast_1d(k))


@dataclass
class SparseWaveletSignal:
    """Coefficients ``a0`` (scaling, level 0) and ``b[(m, j)]`` (wavelets).

    Each coefficient map sends integer lattice points (tuples) to nonzero
    vectors of length ``r``; zero vectors are dropped. Wavelet index ``m`` runs over ``1..M-1`` and level ``j``
    over ``0..J-1``.
    """

    n: int
    r: int
    M: int
    J: int
    a0: dict = field(default_factory=dict)
    b: dict = field(default_factory=dict)

    def __post_init__(self):
        def clean(coeffs):
            out = {_key(k): np.asarray(v).reshape(self.r) for k, v in coeffs.items()}
            return {k: v for k, v in out.items() if np.any(v != 0)}

        self.a0 = clean(self.a0)
        b = {}
        for (m, j), coeffs in self.b.items():
            if not (1 <= m <= self.M - 1 and 0 <= j < self.J):
                raise ValidationError(f"wavelet key (m={m}, j={j}) out of range")
            b[(int(m), int(j))] = clean(coeffs)
        for m in range(1, self.M):
            for j in range(self.J):
                b.setdefault((m, j), {})
        self.b = b
        for k in list(self.a0) + [k for c in self.b.values() for k in c]:
            if len(k) != self.n:
                raise ValidationError(f"lattice point {k} has wrong dimension (n={self.n})")

    @classmethod
    def zeros(cls, bank: WaveletBank, J: int) -> "SparseWaveletSignal":
        return cls(bank.n, bank.r, bank.M, J)

    def coeffs(self, which) -> dict:
        """``"a0"`` or a ``(m, j)`` pair."""
        if which == "a0":
            return self.a0
        return self.b[tuple(which)]

    def arrays(self, which) -> tuple:
        c = self.coeffs(which)
        if not c:
            return np.zeros((0, self.n), dtype=np.int64), np.zeros((0, self.r))
        ks = sorted(c)
        return np.array(ks, dtype=np.int64), np.array([c[k] for k in ks])

    def supports(self) -> dict:
        out = {"a0": sorted(self.a0)}
        for key in sorted(self.b):
            out[key] = sorted(self.b[key])
        return out

    def sparsity(self) -> tuple:
        """Per-level sparsity, with level 0 also counting ``a0``."""
        s = []
        for j in range(self.J):
            sizes = [len(self.b[(m, j)]) for m in range(1, self.M)]
            if j == 0:
                sizes.append(len(self.a0))
            s.append(max(sizes))
        return tuple(s)

    @property
    def is_complex(self) -> bool:
        vals = list(self.a0.values()) + [v for c in self.b.values() for v in c.values()]
        return any(np.iscomplexobj(v) and np.any(np.imag(v) != 0) for v in vals)

    def flat(self) -> dict:
        """``{(which, k): vector}`` over all stored coefficients."""
        out = {("a0", k): v for k, v in self.a0.items()}
        for key, c in self.b.items():
            out.update({(key, k): v for k, v in c.items()})
        return out

    def scale(self, alpha) -> "SparseWaveletSignal":
        return SparseWaveletSignal(
            self.n, self.r, self.M, self.J,
            {k: alpha * v for k, v in self.a0.items()},
            {key: {k: alpha * v for k, v in c.items()} for key, c in self.b.items()},
        )

    def __add__(self, other: "SparseWaveletSignal") -> "SparseWaveletSignal":
        if (self.n, self.r, self.M, self.J) != (other.n, other.r, other.M, other.J):
            raise ValidationError("signals have different shapes")

        def merge(x, y):
            out = dict(x)
            for k, v in y.items():
                out[k] = out[k] + v if k in out else v
            return out

        return SparseWaveletSignal(
            self.n, self.r, self.M, self.J,
            merge(self.a0, other.a0),
            {key: merge(self.b[key], other.b[key]) for key in self.b},
        )


def coeff_symbol(signal: SparseWaveletSignal, which, xi) -> np.ndarray:
    """``sum_k c(k) exp(-i k.xi)`` for ``which`` in ``{"a0", (m, j)}``."""
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    X = np.atleast_2d(xi)
    ks, C = signal.arrays(which)
    out = np.exp(-1j * (X @ ks.T)) @ C
    return out[0] if single else out


def _bank_matches(signal: SparseWaveletSignal, bank: WaveletBank):
    if (signal.n, signal.r, signal.M) != (bank.n, bank.r, bank.M):
        raise ValidationError(
            f"signal (n={signal.n}, r={signal.r}, M={signal.M}) does not fit bank {bank}"
        )


def fourier_measure(signal: SparseWaveletSignal, bank: WaveletBank, xi) -> np.ndarray:
    """Fourier transform of the signal at ``xi``.

    ``a0_hat(xi) . phi_hat(xi) + sum_{j, m} b_hat_{m,j}(Mt^-j xi) . psi_hat_m(Mt^-j xi)``
    """
    _bank_matches(signal, bank)
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    X = np.atleast_2d(xi)
    out = np.zeros(len(X), dtype=complex)
    if signal.a0:
        out += np.sum(coeff_symbol(signal, "a0", X) * bank.phi_hat(X), axis=1)
    for j in range(signal.J):
        Xj = X @ bank.scheme.mt_inv_power(j).T
        for m in range(1, bank.M):
            if signal.b[(m, j)]:
                out += np.sum(coeff_symbol(signal, (m, j), Xj) * bank.psi_hat(m, Xj), axis=1)
    return out[0] if single else out


def level_contribution(signal: SparseWaveletSignal, bank: WaveletBank, j: int, xi) -> np.ndarray:
    """Fourier transform of the level-``j`` wavelet part alone."""
    X = np.atleast_2d(np.asarray(xi, dtype=float))
    Xj = X @ bank.scheme.mt_inv_power(j).T
    out = np.zeros(len(X), dtype=complex)
    for m in range(1, bank.M):
        if signal.b[(m, j)]:
            out += np.sum(coeff_symbol(signal, (m, j), Xj) * bank.psi_hat(m, Xj), axis=1)
    return out


@dataclass
class MeasurementSet:
    """Frequencies paired with complex Fourier values."""

    omega: np.ndarray
    values: np.ndarray
    bank: Optional[dict] = None
    plan_hash: Optional[str] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).reshape(-1)
        self.omega = np.asarray(self.omega, dtype=float).reshape(len(self.values), -1)

    def __len__(self):
        return len(self.values)

    def lookup(self, freqs, tol: float = 1e-9) -> np.ndarray:
        """Values at ``freqs``; raises if a frequency is not measured."""
        freqs = np.atleast_2d(np.asarray(freqs, dtype=float))
        idx = np.empty(len(freqs), dtype=np.int64)
        for i, x in enumerate(freqs):
            d = np.max(np.abs(self.omega - x[None, :]), axis=1)
            a = int(np.argmin(d))
            if d[a] > tol:
                raise ValidationError(f"frequency {x.tolist()} missing from measurement set")
            idx[i] = a
        return self.values[idx]

    def with_values(self, values) -> "MeasurementSet":
        return MeasurementSet(self.omega.copy(), values, self.bank, self.plan_hash)


def measure_on_plan(signal: SparseWaveletSignal, bank: WaveletBank, plan: SamplingPlan) -> MeasurementSet:
    return MeasurementSet(plan.omega.copy(), fourier_measure(signal, bank, plan.omega), bank.ident, plan.hash)


def measure_at(signal: SparseWaveletSignal, bank: WaveletBank, freqs) -> MeasurementSet:
    freqs = np.atleast_2d(np.asarray(freqs, dtype=float))
    return MeasurementSet(freqs, fourier_measure(signal, bank, freqs), bank.ident, None)


def eval_signal_time(signal: SparseWaveletSignal, bank: WaveletBank, t) -> np.ndarray:
    """``sum a0(k).Phi(t-k) + sum_{j,m,k} b_{m,j}(k).M^j Psi_m(D^j t - k)``.

    ``t`` has shape ``(N, n)``, or ``(N,)`` for one-dimensional banks.
    """
    _bank_matches(signal, bank)
    t = np.asarray(t, dtype=float)
    if bank.n == 1 and (t.ndim <= 1):
        t = t.reshape(-1, 1)
    T = np.atleast_2d(t)
    out = np.zeros(len(T))
    ks, C = signal.arrays("a0")
    for k, c in zip(ks, C):
        out += np.real(bank.phi_time(T - k[None, :]) @ c)
    for j in range(signal.J):
        Tj = T @ bank.scheme.d_power(j).T.astype(float)
        for m in range(1, bank.M):
            ks, C = signal.arrays((m, j))
            for k, c in zip(ks, C):
                out += bank.M ** j * np.real(bank.psi_time(m, Tj - k[None, :]) @ c)
    return out


def draw_amplitudes(rng: np.random.Generator, size, low: float = 0.1, high: float = 1.0) -> np.ndarray:
    """Uniform on ``[-high, -low] U [low, high]``."""
    mag = rng.uniform(low, high, size=size)
    sign = rng.choice([-1.0, 1.0], size=size)
    return sign * mag


def random_signal(
    bank: WaveletBank,
    s,
    box: SupportBox,
    seed=None,
    full: bool = True,
) -> SparseWaveletSignal:
    """Random ``s``-sparse signal with coefficients in ``[-1, 1] minus (-0.1, 0.1)``.

    Level-``j`` wavelet supports are drawn from ``D^j box``. With ``full``,
    every coefficient map gets exactly ``s_j`` atoms.
    """
    s = _as_sparsity(s)
    if box.n != bank.n:
        raise ValidationError("box dimension does not match bank")
    rng = np.random.default_rng(seed)
    J = len(s)

    def draw(points, count):
        if count > len(points):
            raise ValidationError(f"box too small: need {count} points, have {len(points)}")
        idx = np.sort(rng.choice(len(points), size=count, replace=False))
        return {tuple(int(c) for c in points[i]): draw_amplitudes(rng, bank.r) for i in idx}

    base = box.points()
    a0 = draw(base, s[0] if full else int(rng.integers(1, s[0] + 1)))
    b = {}
    for j in range(J):
        pts = box.level_points(bank.scheme, j)
        for m in range(1, bank.M):
            b[(m, j)] = draw(pts, s[j] if full else int(rng.integers(1, s[j] + 1)))
    return SparseWaveletSignal(bank.n, bank.r, bank.M, J, a0, b)
