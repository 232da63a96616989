"""Deterministic Fourier sampling sets for sparse wavelet recovery.

A plan lists, for every level ``j``, every node ``gamma`` of the half-integer
progression along ``h`` and every coset index ``m'``, the ``r`` frequencies

    xi = pi * gamma + 2 pi (Mt^j p_m' + Mt^(j+1) k),   k in Lambda,

where ``Lambda`` is chosen at the anchor ``pi Mt^-(j+1) gamma + 2 pi Mt^-1 p_m'``.
The union of all group frequencies, deduplicated, is the sampling set.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .lattice import LambdaSet, SupportBox, WaveletBank, select_lambda

TWO_PI = 2.0 * np.pi
DEDUP_TOL = 1e-12


def _as_sparsity(s) -> tuple:
    if isinstance(s, (int, np.integer)):
        s = (int(s),)
    s = tuple(int(v) for v in s)
    if len(s) < 1 or any(v < 1 for v in s):
        raise ValidationError(f"sparsity vector must be nonempty with entries >= 1, got {s}")
    return s


def _as_shift(h, n: Optional[int] = None) -> np.ndarray:
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if n is not None and h.shape != (n,):
        raise ValidationError(f"shift vector must have {n} entries, got {h.shape[0]}")
    if np.any(h == 0) or not np.all(np.isfinite(h)):
        raise ValidationError("shift vector entries must be finite and nonzero")
    return h


def half_integer_indices(s: int) -> np.ndarray:
    """``-s + 1/2, ..., s - 1/2``."""
    return np.arange(-s, s) + 0.5


def build_gamma(s_j: int, h) -> np.ndarray:
    """The ``2 s_j`` nodes ``(i + 1/2) h``, ``i = -s_j, ..., s_j - 1``."""
    if s_j < 1:
        raise ValidationError("s_j must be >= 1")
    h = np.atleast_1d(np.asarray(h, dtype=float))
    return half_integer_indices(s_j)[:, None] * h[None, :]


@dataclass
class SamplingGroup:
    j: int
    gamma_index: int
    m_prime: int
    gamma: np.ndarray
    lam: LambdaSet
    offsets: np.ndarray  # (r, n) integer q with xi = pi*gamma + 2 pi q
    freq_index: tuple = ()

    @property
    def anchor(self) -> np.ndarray:
        return self.lam.anchor

    def to_dict(self) -> dict:
        return {
            "j": self.j,
            "gamma_index": self.gamma_index,
            "m_prime": self.m_prime,
            "gamma": [float(v) for v in self.gamma],
            "lambda": self.lam.to_dict(),
            "offsets": self.offsets.tolist(),
            "freq_index": list(self.freq_index),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SamplingGroup":
        return cls(
            j=int(d["j"]),
            gamma_index=int(d["gamma_index"]),
            m_prime=int(d["m_prime"]),
            gamma=np.array(d["gamma"], dtype=float),
            lam=LambdaSet.from_dict(d["lambda"]),
            offsets=np.array(d["offsets"], dtype=np.int64),
            freq_index=tuple(int(i) for i in d["freq_index"]),
        )


@dataclass
class SamplingPlan:
    bank: WaveletBank
    s: tuple
    h: np.ndarray
    radius: int
    tau_rank: float
    gammas: list
    groups: list
    omega: np.ndarray
    raw_count: int
    box: Optional[SupportBox] = None
    _hash: Optional[str] = field(default=None, repr=False)

    @property
    def J(self) -> int:
        return len(self.s)

    @property
    def bound(self) -> int:
        """``2 M r (s_0 + ... + s_{J-1})``."""
        return 2 * self.bank.M * self.bank.r * sum(self.s)

    def level_groups(self, j: int) -> list:
        return [g for g in self.groups if g.j == j]

    def group(self, j: int, gamma_index: int, m_prime: int) -> SamplingGroup:
        for g in self.groups:
            if (g.j, g.gamma_index, g.m_prime) == (j, gamma_index, m_prime):
                return g
        raise KeyError((j, gamma_index, m_prime))

    def to_dict(self, include_hash: bool = True) -> dict:
        d = {
            "format": "prony-wavelets/plan/1",
            "bank": self.bank.ident,
            "scheme": self.bank.scheme.to_dict(),
            "r": self.bank.r,
            "s": list(self.s),
            "h": [float(v) for v in self.h],
            "radius": self.radius,
            "tau_rank": self.tau_rank,
            "box": None if self.box is None else {"lo": list(self.box.lo), "hi": list(self.box.hi)},
            "gammas": [g.tolist() for g in self.gammas],
            "groups": [g.to_dict() for g in self.groups],
            "omega": self.omega.tolist(),
            "counts": {"raw": self.raw_count, "dedup": int(len(self.omega)), "bound": self.bound},
        }
        if include_hash:
            d["hash"] = self.hash
        return d

    @property
    def hash(self) -> str:
        if self._hash is None:
            payload = json.dumps(self.to_dict(include_hash=False), sort_keys=True)
            self._hash = hashlib.sha256(payload.encode()).hexdigest()[:16]
        return self._hash

    @classmethod
    def from_dict(cls, d: dict, bank: WaveletBank) -> "SamplingPlan":
        box = d.get("box")
        plan = cls(
            bank=bank,
            s=tuple(d["s"]),
            h=np.array(d["h"], dtype=float),
            radius=int(d["radius"]),
            tau_rank=float(d["tau_rank"]),
            gammas=[np.array(g, dtype=float).reshape(-1, bank.n) for g in d["gammas"]],
            groups=[SamplingGroup.from_dict(g) for g in d["groups"]],
            omega=np.array(d["omega"], dtype=float).reshape(-1, bank.n),
            raw_count=int(d["counts"]["raw"]),
            box=None if box is None else SupportBox(box["lo"], box["hi"]),
        )
        if "hash" in d and d["hash"] != plan.hash:
            raise ValidationError("plan file hash does not match its contents")
        return plan


def _matcher(points: np.ndarray, tol: float):
    """Index lookup of frequency vectors with tolerance ``tol``."""
    points = np.asarray(points, dtype=float)

    def find(x) -> int:
        d = np.max(np.abs(points - x[None, :]), axis=1)
        i = int(np.argmin(d))
        return i if d[i] <= tol else -1

    return find


def build_plan(
    bank: WaveletBank,
    s,
    h,
    radius: int = 5,
    tau_rank: float = 1e-6,
    allowed: Optional[np.ndarray] = None,
    allowed_tol: float = 1e-9,
    box: Optional[SupportBox] = None,
) -> SamplingPlan:
    """Build the sampling plan for sparsity ``s`` and shift ``h``.

    Parameters
    ----------
    allowed : array of shape (N, n), optional
        Restrict sampling frequencies to this set (within ``allowed_tol``).
        Used to target a fixed, externally given measurement grid.
    box : SupportBox, optional
        Default support box stored with the plan for later commands.
    """
    s = _as_sparsity(s)
    sc = bank.scheme
    h = _as_shift(h, sc.n)
    find_allowed = _matcher(allowed, allowed_tol) if allowed is not None else None

    gammas = [build_gamma(sj, h) for sj in s]
    groups = []
    freqs = []
    for j, gam in enumerate(gammas):
        Mtj = sc.mt_power(j)
        Mtj1 = sc.mt_power(j + 1)
        inv_j1 = sc.mt_inv_power(j + 1)
        for gi, g in enumerate(gam):
            base = np.pi * (inv_j1 @ g)
            for mp, p in enumerate(sc.cosets):
                anchor = base + TWO_PI * (sc.Mt_inv @ p)
                fixed = Mtj @ p
                pred = None
                if find_allowed is not None:
                    def pred(k, fixed=fixed, g=g):
                        q = fixed + Mtj1 @ np.array(k)
                        return find_allowed(np.pi * g + TWO_PI * q) >= 0
                lam = select_lambda(bank, anchor, radius, tau_rank, allowed=pred)
                offsets = np.array([fixed + Mtj1 @ np.array(k) for k in lam.shifts], dtype=np.int64)
                groups.append(SamplingGroup(j, gi, mp, g.copy(), lam, offsets))
                freqs.extend(np.pi * g[None, :] + TWO_PI * offsets)

    raw = np.array(freqs)
    keys = np.round(raw / DEDUP_TOL).astype(np.int64) if np.all(np.abs(raw) < 9e6) else None
    omega_list: list = []
    index_of: dict = {}
    assign = []
    for i, x in enumerate(raw):
        key = tuple(keys[i]) if keys is not None else tuple(np.round(x, 12))
        if key not in index_of:
            index_of[key] = len(omega_list)
            omega_list.append(x)
        assign.append(index_of[key])
    pos = 0
    for g in groups:
        g.freq_index = tuple(assign[pos:pos + len(g.offsets)])
        pos += len(g.offsets)
    return SamplingPlan(
        bank=bank,
        s=s,
        h=h,
        radius=radius,
        tau_rank=tau_rank,
        gammas=gammas,
        groups=groups,
        omega=np.array(omega_list).reshape(-1, sc.n),
        raw_count=len(raw),
        box=box,
    )


def group_frequencies(plan: SamplingPlan, group: SamplingGroup) -> np.ndarray:
    return plan.omega[list(group.freq_index)]


@dataclass
class ShiftReport:
    passed: bool
    mode: str
    value: float
    detail: dict

    def to_dict(self) -> dict:
        return {"passed": self.passed, "mode": self.mode, "value": self.value, **self.detail}


def validate_shift(
    h,
    mode: str = "heuristic",
    box: Optional[SupportBox] = None,
    collision_radius: int = 64,
    tau_phase: float = 1e-9,
) -> ShiftReport:
    """Check that ``h`` separates lattice phases.

    ``box`` mode tests ``0 < (b - a) * sum(h) <= 2`` for the support cube
    ``[a, b)^n``. ``heuristic`` mode computes all phases ``pi k.h mod 2 pi``
    for ``|k|_inf <= collision_radius`` and requires every circular gap to
    exceed ``tau_phase``, a finite stand-in for rational independence of
    ``1, h_1, ..., h_n``.
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if mode == "box":
        if box is None:
            raise ValidationError("box mode needs a support box")
        value = float(box.width * np.sum(h))
        return ShiftReport(0 < value <= 2, mode, value, {"width": box.width})
    if mode != "heuristic":
        raise ValidationError(f"unknown validation mode {mode!r}")
    n = len(h)
    R = collision_radius
    axes = [np.arange(-R, R + 1)] * n
    grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
    phases = np.sort(np.mod(np.pi * (grid @ h), TWO_PI))
    gaps = np.diff(np.concatenate([phases, phases[:1] + TWO_PI]))
    min_gap = float(gaps.min())
    return ShiftReport(min_gap > tau_phase, mode, min_gap, {"collision_radius": R, "tau_phase": tau_phase})


def omega_in_lattice_shift(plan: SamplingPlan, tol: float = 1e-9) -> bool:
    """Whether every frequency lies in ``pi * {(i + 1/2) h} + 2 pi Z^n``."""
    smax = max(plan.s)
    nodes = np.pi * build_gamma(smax, plan.h)
    for x in plan.omega:
        ok = False
        for g in nodes:
            q = (x - g) / TWO_PI
            if np.allclose(q, np.round(q), atol=tol):
                ok = True
                break
        if not ok:
            return False
    return True


def frequencies_from_pattern(nodes: Sequence[float], direction, offsets) -> np.ndarray:
    """All ``(t * direction + 2 q) * pi`` for node values ``t`` and integer offsets ``q``."""
    direction = np.atleast_1d(np.asarray(direction, dtype=float))
    out = [
        (t * direction + 2.0 * np.asarray(q, dtype=float)) * np.pi
        for t, q in itertools.product(nodes, offsets)
    ]
    return np.array(out).reshape(-1, len(direction))
