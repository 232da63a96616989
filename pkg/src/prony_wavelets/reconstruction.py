"""Level-by-level recovery of a sparse wavelet signal from Fourier samples.

For each level ``j`` from the finest down to ``0``:

1. every sampling group ``(gamma, m')`` gives an ``r x r`` linear system in
   the scaling-function values ``phi_hat(anchor + 2 pi k)``, ``k in Lambda``;
2. the ``M`` row vectors for one ``gamma`` are unmixed through the block mask
   matrix ``G(pi Mt^-(j+1) gamma)`` into the symbols ``a_hat_j`` and
   ``b_hat_{m,j}`` at ``pi Mt^-j gamma``;
3. Prony's method turns the ``2 s_j`` symbol samples into lattice supports
   and coefficients of ``b_{m,j}``;
4. the recovered level is subtracted from the measurements.

The scaling coefficients ``a0`` are recovered from the level-0 symbols last.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import IllConditionedError, SingularMaskError, ValidationError, VerificationError
from .lattice import SupportBox, WaveletBank, block_mask_matrix
from .prony import PronyInput, PronyOutput, recover_sparse_trig
from .sampling import SamplingGroup, SamplingPlan, validate_shift
from .signal import MeasurementSet, SparseWaveletSignal, fourier_measure, level_contribution

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


@dataclass
class Tolerances:
    """Thresholds used by :func:`reconstruct`.

    ``tau_rank`` bounds the conditioning of the scaling-function systems and
    the smallest singular value of the block mask matrix. ``prony_rank``,
    ``tau_phase`` and ``tau_amp`` go to the Prony solver. ``eps_verify`` is
    the relative mismatch allowed when the result is re-measured.
    """

    tau_rank: float = 1e-6
    prony_rank: float = 1e-8
    tau_phase: float = 1e-6
    tau_amp: float = 1e-10
    eps_verify: float = 1e-6
    refine: bool = True

    def __post_init__(self):
        for name in ("tau_rank", "prony_rank", "tau_phase", "tau_amp", "eps_verify"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"tolerance {name} must be positive")

    def to_dict(self) -> dict:
        return {
            "tau_rank": self.tau_rank,
            "prony_rank": self.prony_rank,
            "tau_phase": self.tau_phase,
            "tau_amp": self.tau_amp,
            "eps_verify": self.eps_verify,
            "refine": self.refine,
        }


@dataclass
class LevelIntermediate:
    """What one level of the recovery computed.

    ``A`` maps ``(gamma_index, m')`` to the solved row vector, ``symbols``
    maps ``gamma_index`` to ``(a_hat_j, [b_hat_1j, ...])`` at ``pi Mt^-j gamma``,
    and ``peeled`` holds the measurement values on the plan frequencies after
    this level was subtracted.
    """

    j: int
    A: dict = field(default_factory=dict)
    conditioning: dict = field(default_factory=dict)
    symbols: dict = field(default_factory=dict)
    prony: dict = field(default_factory=dict)
    peeled: Optional[np.ndarray] = None

    def summary(self) -> dict:
        return {
            "level": self.j,
            "max_condition": max(self.conditioning.values(), default=0.0),
            "prony_residual": {str(k): float(v.residual) for k, v in self.prony.items()},
            "support": {str(k): [list(map(int, p)) for p in v.locations] for k, v in self.prony.items()},
        }


def solve_group(
    group: SamplingGroup,
    values,
    bank: WaveletBank,
    tau_rank: float = 1e-6,
) -> tuple:
    """Row vector ``A`` with ``A . phi_hat(anchor + 2 pi k) = values[k]`` over ``k in Lambda``.

    ``values`` are the current measurements at the group's frequencies, in
    the order of ``group.lam.shifts``. Returns ``(A, condition_number)``.
    """
    y = np.asarray(values, dtype=complex).reshape(-1)
    shifts = np.array(group.lam.shifts, dtype=float).reshape(-1, bank.n)
    if len(y) != bank.r or len(shifts) != bank.r:
        raise ValidationError(f"group needs {bank.r} values, got {len(y)}")
    F = bank.phi_hat(group.anchor[None, :] + TWO_PI * shifts).T  # column k holds phi_hat at shift k
    cond = float(np.linalg.cond(F))
    if not np.isfinite(cond) or cond > 1.0 / tau_rank:
        raise IllConditionedError(
            f"Phi-hat system ill-conditioned at (j={group.j}, gamma={group.gamma_index}, "
            f"m'={group.m_prime}): condition {cond:.3e}"
        )
    A = np.linalg.solve(F.T, y)
    return A, cond


def unmix_masks(bank: WaveletBank, j: int, gamma, A_row, tau_rank: float = 1e-6) -> tuple:
    """Solve ``(a_hat, b_hat_1, ..., b_hat_{M-1}) G(pi Mt^-(j+1) gamma) = A_row``.

    ``A_row`` is the concatenation of the ``M`` group rows for one ``gamma``.
    Returns ``(a_hat, [b_hat_1, ..., b_hat_{M-1}])``.
    """
    r, M = bank.r, bank.M
    A_row = np.asarray(A_row, dtype=complex).reshape(-1)
    if len(A_row) != M * r:
        raise ValidationError(f"expected a row of length {M * r}, got {len(A_row)}")
    arg = np.pi * (bank.scheme.mt_inv_power(j + 1) @ np.asarray(gamma, dtype=float))
    G = block_mask_matrix(bank, arg)
    smin = np.linalg.svd(G, compute_uv=False)[-1]
    if smin < tau_rank:
        raise SingularMaskError(f"mask matrix singular at gamma={np.asarray(gamma).tolist()}: sigma_min {smin:.3e}")
    x = np.linalg.solve(G.T, A_row)
    return x[:r], [x[m * r:(m + 1) * r] for m in range(1, M)]


def plan_values(measurements: MeasurementSet, plan: SamplingPlan) -> np.ndarray:
    """Measurement values on ``plan.omega``.

    A measurement set tagged with the plan hash is used as is; an untagged
    set is searched by frequency, so it may be a superset of the plan.
    """
    if measurements.plan_hash is not None:
        if measurements.plan_hash != plan.hash:
            raise ValidationError(
                f"measurements were taken for plan {measurements.plan_hash}, not {plan.hash}"
            )
        if len(measurements) != len(plan.omega):
            raise ValidationError("measurement count does not match the plan")
        return measurements.values.copy()
    return measurements.lookup(plan.omega)


def _prony(samples, direction, s, points, tol: Tolerances, nearest: bool) -> PronyOutput:
    inp = PronyInput(np.asarray(samples), direction, s, points)
    return recover_sparse_trig(
        inp,
        tau_rank=tol.prony_rank,
        tau_phase=tol.tau_phase,
        tau_amp=tol.tau_amp,
        nearest=nearest,
        refine=tol.refine and not nearest,
    )


REAL_TOL = 1e-9


def _as_coeffs(out: PronyOutput, real: Optional[bool]) -> dict:
    if real is None:
        scale = np.max(np.abs(out.amplitudes), initial=0.0)
        real = np.max(np.abs(out.amplitudes.imag), initial=0.0) <= REAL_TOL * max(scale, 1.0)
    coeffs = {}
    for k, a in zip(out.locations, out.amplitudes):
        coeffs[tuple(int(c) for c in k)] = a.real.copy() if real else a.copy()
    return coeffs


@dataclass
class Reconstruction:
    signal: SparseWaveletSignal
    levels: list
    mismatch: float
    a0: Optional[PronyOutput] = None

    def diagnostics(self) -> dict:
        return {"mismatch": self.mismatch, "levels": [lv.summary() for lv in self.levels]}


def run_levels(
    values: np.ndarray,
    plan: SamplingPlan,
    bank: WaveletBank,
    box: SupportBox,
    tol: Tolerances,
    nearest: bool = False,
    real: Optional[bool] = None,
) -> Reconstruction:
    """The recovery loop on plan-ordered values; see :func:`reconstruct`."""
    sc = bank.scheme
    J = plan.J
    current = np.asarray(values, dtype=complex).copy()
    recovered = SparseWaveletSignal(bank.n, bank.r, bank.M, J)
    levels = []
    a_hat0 = None
    for j in range(J - 1, -1, -1):
        lv = LevelIntermediate(j)
        for g in plan.level_groups(j):
            A, cond = solve_group(g, current[list(g.freq_index)], bank, tol.tau_rank)
            lv.A[(g.gamma_index, g.m_prime)] = A
            lv.conditioning[(g.gamma_index, g.m_prime)] = cond
        gam = plan.gammas[j]
        for gi, gamma in enumerate(gam):
            row = np.concatenate([lv.A[(gi, mp)] for mp in range(bank.M)])
            lv.symbols[gi] = unmix_masks(bank, j, gamma, row, tol.tau_rank)
        direction = np.pi * (sc.mt_inv_power(j) @ plan.h)
        points = box.level_points(sc, j)
        for m in range(1, bank.M):
            samples = np.array([lv.symbols[gi][1][m - 1] for gi in range(len(gam))])
            out = _prony(samples, direction, plan.s[j], points, tol, nearest)
            lv.prony[(m, j)] = out
            recovered.b[(m, j)] = _as_coeffs(out, real)
        part = SparseWaveletSignal(bank.n, bank.r, bank.M, J, {}, {(m, j): recovered.b[(m, j)] for m in range(1, bank.M)})
        current = current - level_contribution(part, bank, j, plan.omega)
        lv.peeled = current.copy()
        levels.append(lv)
        if j == 0:
            a_hat0 = np.array([lv.symbols[gi][0] for gi in range(len(gam))])
    a0_out = _prony(a_hat0, np.pi * plan.h, plan.s[0], box.points(), tol, nearest)
    recovered.a0 = _as_coeffs(a0_out, real)
    levels[-1].prony["a0"] = a0_out
    remeasured = fourier_measure(recovered, bank, plan.omega)
    scale = np.max(np.abs(values), initial=0.0)
    err = np.max(np.abs(remeasured - values), initial=0.0)
    mismatch = float(err / scale) if scale > 0 else float(err)
    return Reconstruction(recovered, levels, mismatch, a0_out)


def reconstruct(
    measurements: MeasurementSet,
    plan: SamplingPlan,
    bank: WaveletBank,
    box: SupportBox,
    tolerances: Optional[Tolerances] = None,
    real: Optional[bool] = None,
    check_shift: bool = True,
    details: bool = False,
):
    """Recover the sparse signal measured on ``plan``.

    Level-``j`` wavelet supports are searched in ``D^j box`` and ``a0`` in
    ``box``. ``real`` keeps only the real parts of the coefficients; by
    default they are dropped when negligible. After recovery the signal is re-measured on the plan and a
    relative mismatch above ``eps_verify`` raises :class:`VerificationError`.

    Returns the signal, or a :class:`Reconstruction` with per-level
    intermediates when ``details`` is set.
    """
    tol = tolerances or Tolerances()
    if box.n != bank.n:
        raise ValidationError("box dimension does not match bank")
    if check_shift:
        rep = validate_shift(plan.h, mode="box", box=box)
        if not rep.passed:
            raise ValidationError(
                f"shift too large for box {box}: width * sum(h) = {rep.value:.6g} exceeds 2"
            )
    values = plan_values(measurements, plan)
    res = run_levels(values, plan, bank, box, tol, nearest=False, real=real)
    if res.mismatch > tol.eps_verify:
        raise VerificationError(
            f"re-measured signal differs from the data by {res.mismatch:.3e} (relative)",
            diagnostics=res.diagnostics(),
        )
    return res if details else res.signal
