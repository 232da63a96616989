"""Prony recovery of sparse multivariate trigonometric polynomials.

Samples are taken at the half-integer progression ``t_i = i + 1/2`` for
``i = -s, ..., s - 1`` along a phase direction ``d``::

    w_i = sum_k c(k) exp(-i t_i k.d)

so each support point ``k`` contributes the unit-circle node
``z_k = exp(-i k.d)``. Nodes come from an annihilating filter (Hankel null
space, companion-matrix roots). They are then snapped to integer points of
a support box by phase, and amplitudes are refitted on the snapped support.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import LatticeMatchError, SparsityExceeded, ValidationError
from .lattice import SupportBox
from .sampling import half_integer_indices

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi

TAU_RANK = 1e-8
TAU_PHASE = 1e-6
TAU_AMP = 1e-10
TAU_FIT = 1e-11
ZERO_LEVEL = 1e-14
GAP_WARN = 10.0


@dataclass
class NodeEstimate:
    nodes: np.ndarray
    rank: int
    singular_values: np.ndarray
    ambiguous: bool = False


def hankel(w: np.ndarray, cols: int) -> np.ndarray:
    """``H[i, l] = w[i + l]`` with ``len(w) - cols + 1`` rows."""
    w = np.asarray(w)
    rows = len(w) - cols + 1
    idx = np.arange(rows)[:, None] + np.arange(cols)[None, :]
    return w[idx]


def companion(coeffs: np.ndarray) -> np.ndarray:
    """Companion matrix of ``a_0 + a_1 z + ... + a_d z^d`` (``a_d != 0``)."""
    a = np.asarray(coeffs, dtype=complex)
    d = len(a) - 1
    C = np.zeros((d, d), dtype=complex)
    if d > 1:
        C[1:, :-1] = np.eye(d - 1)
    C[:, -1] = -a[:-1] / a[-1]
    return C


def prony_nodes(w, s: int, tau_rank: float = TAU_RANK) -> NodeEstimate:
    """Unit-circle nodes of a sum of at most ``s`` exponentials.

    ``w`` holds ``2 s`` equispaced samples. The effective sparsity is the
    numerical rank of the ``s x (s + 1)`` Hankel matrix relative to its
    largest singular value.
    """
    w = np.asarray(w, dtype=complex).reshape(-1)
    if len(w) != 2 * s:
        raise ValidationError(f"expected {2 * s} samples, got {len(w)}")
    if np.max(np.abs(w), initial=0.0) < ZERO_LEVEL:
        return NodeEstimate(np.zeros(0, dtype=complex), 0, np.zeros(0))
    sv = np.linalg.svd(hankel(w, s + 1), compute_uv=False)
    rank = int(np.sum(sv > tau_rank * sv[0]))
    ambiguous = rank < len(sv) and sv[rank - 1] < GAP_WARN * sv[rank]
    if ambiguous:
        log.debug("Hankel rank ambiguous: singular values %s", sv)
    return NodeEstimate(_filter_roots(w, rank), rank, sv, bool(ambiguous))


def _filter_roots(w: np.ndarray, rank: int) -> np.ndarray:
    """Roots of the annihilating filter of length ``rank + 1``, on the unit circle."""
    if rank == 0:
        return np.zeros(0, dtype=complex)
    _, _, Vh = np.linalg.svd(hankel(w, rank + 1))
    roots = np.linalg.eigvals(companion(np.conj(Vh[-1])))
    return roots / np.abs(roots)


def polish_phases(w, phases, t, iters: int = 30) -> np.ndarray:
    """Gauss-Newton refinement of node phases ``theta`` in ``w ~ sum c exp(i t theta)``."""
    th = np.array(phases, dtype=float)
    for _ in range(iters):
        E = np.exp(1j * np.outer(t, th))
        c, *_ = np.linalg.lstsq(E, w, rcond=None)
        r = w - E @ c
        Jt = 1j * t[:, None] * E * c[None, :]
        J = np.vstack([
            np.hstack([Jt.real, E.real, -E.imag]),
            np.hstack([Jt.imag, E.imag, E.real]),
        ])
        step, *_ = np.linalg.lstsq(J, np.concatenate([r.real, r.imag]), rcond=None)
        th = th + step[: len(th)]
        if np.max(np.abs(step[: len(th)]), initial=0.0) < 1e-14:
            break
    return th


def _candidates(box_or_points) -> np.ndarray:
    if isinstance(box_or_points, SupportBox):
        return box_or_points.points()
    return np.atleast_2d(np.asarray(box_or_points, dtype=np.int64))


def _circular(a: np.ndarray) -> np.ndarray:
    return np.abs(np.angle(np.exp(1j * a)))


def nodes_to_lattice(
    nodes,
    direction,
    box: Union[SupportBox, np.ndarray],
    tau_phase: float = TAU_PHASE,
    nearest: bool = False,
) -> tuple:
    """Map nodes ``z`` to lattice points ``k`` with ``arg z = -k.d (mod 2 pi)``.

    Returns ``(locations, distances)``. In strict mode a match must lie within
    ``tau_phase`` and the runner-up must be farther than ``2 tau_phase``.
    With ``nearest`` the closest phase always wins.
    """
    nodes = np.asarray(nodes, dtype=complex).reshape(-1)
    cand = _candidates(box)
    d = np.atleast_1d(np.asarray(direction, dtype=float))
    if len(nodes) == 0:
        return np.zeros((0, cand.shape[1]), dtype=np.int64), np.zeros(0)
    cand_phase = -(cand @ d)
    dist = _circular(np.angle(nodes)[:, None] - cand_phase[None, :])
    order = np.argsort(dist, axis=1)
    best = order[:, 0]
    rows = np.arange(len(nodes))
    best_d = dist[rows, best]
    if not nearest:
        for i in rows:
            second = dist[i, order[i, 1]] if cand.shape[0] > 1 else np.inf
            if best_d[i] >= tau_phase:
                raise LatticeMatchError(
                    f"node off-lattice: phase distance {best_d[i]:.3e} >= {tau_phase:.1e}",
                    candidates=[tuple(cand[best[i]])],
                )
            if second <= 2 * tau_phase:
                raise LatticeMatchError(
                    "lattice match ambiguous",
                    candidates=[tuple(cand[best[i]]), tuple(cand[order[i, 1]])],
                )
    return cand[best], best_d


@dataclass
class PronyInput:
    """``2 s`` samples (rows) of an ``r``-vector symbol along ``direction``."""

    samples: np.ndarray
    direction: np.ndarray
    sparsity: int
    box: Union[SupportBox, np.ndarray]

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.ndim == 1:
            self.samples = self.samples[:, None]
        self.direction = np.atleast_1d(np.asarray(self.direction, dtype=float))
        if self.samples.shape[0] != 2 * self.sparsity:
            raise ValidationError(
                f"need exactly {2 * self.sparsity} samples, got {self.samples.shape[0]}"
            )


@dataclass
class PronyOutput:
    locations: np.ndarray
    amplitudes: np.ndarray
    nodes: np.ndarray
    residual: float
    distances: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ambiguous: bool = False

    def as_dict(self) -> dict:
        return {tuple(int(c) for c in k): a for k, a in zip(self.locations, self.amplitudes)}


def vandermonde(locations: np.ndarray, direction: np.ndarray, s: int) -> np.ndarray:
    """``V[i, k] = exp(-i t_i k.d)`` on the half-integer sample indices."""
    t = half_integer_indices(s)
    phase = np.asarray(locations, dtype=float) @ direction
    return np.exp(-1j * np.outer(t, phase))


def _lex_unique(points: np.ndarray) -> np.ndarray:
    if len(points) == 0:
        return points
    return np.unique(points, axis=0)


def lattice_search(
    w,
    s: int,
    direction,
    box: Union[SupportBox, np.ndarray],
    min_rank: int = 1,
    tau_fit: float = TAU_FIT,
    neighbours: int = 4,
    sweeps: int = 8,
) -> np.ndarray:
    """Lattice support of ``w`` found by refitting rather than by phase snapping.

    Used when the Hankel matrix is numerically rank deficient (clustered
    nodes). For every trial rank from ``min_rank`` to ``s`` the filter roots
    are polished by Gauss-Newton, snapped to the nearest distinct lattice
    phases, and improved by swapping single points with their phase
    neighbours. A support is accepted once the Vandermonde residual is at
    most ``tau_fit * |w|``; otherwise :class:`LatticeMatchError` is raised.
    """
    w = np.asarray(w, dtype=complex).reshape(-1)
    cand = _candidates(box)
    d = np.atleast_1d(np.asarray(direction, dtype=float))
    t = half_integer_indices(s)
    phase = np.mod(-(cand @ d), TWO_PI)
    order = np.argsort(phase)
    where = np.empty_like(order)
    where[order] = np.arange(len(order))
    target = tau_fit * np.linalg.norm(w)

    def residual(idx):
        V = np.exp(1j * np.outer(t, phase[idx]))
        c, *_ = np.linalg.lstsq(V, w, rcond=None)
        return float(np.linalg.norm(V @ c - w))

    best = (np.inf, None)
    for rank in range(max(min_rank, 1), s + 1):
        th = polish_phases(w, np.angle(_filter_roots(w, rank)), t)
        dist = _circular(th[:, None] - phase[None, :])
        S: list = []
        for i in np.argsort(dist.min(axis=1)):
            S.append(next(int(c) for c in np.argsort(dist[i]) if c not in S))
        cur = residual(S)
        for _ in range(sweeps):
            if cur <= target:
                break
            improved = False
            for p in range(len(S)):
                pos = where[S[p]]
                for step in range(-neighbours, neighbours + 1):
                    c = int(order[(pos + step) % len(order)])
                    if c in S:
                        continue
                    trial = S[:p] + [c] + S[p + 1:]
                    r = residual(trial)
                    if r < cur:
                        S, cur, improved = trial, r, True
            if not improved:
                break
        if cur <= target:
            return cand[np.array(S)]
        if cur < best[0]:
            best = (cur, S)
    raise LatticeMatchError(
        f"no lattice support fits the samples (best relative residual "
        f"{best[0] / max(np.linalg.norm(w), 1e-300):.2e})",
        candidates=[tuple(int(v) for v in cand[i]) for i in best[1]] if best[1] else [],
    )


def recover_sparse_trig(
    inp: PronyInput,
    tau_rank: float = TAU_RANK,
    tau_phase: float = TAU_PHASE,
    tau_amp: float = TAU_AMP,
    nearest: bool = False,
    refine: bool = True,
    tau_fit: float = TAU_FIT,
) -> PronyOutput:
    """Recover support and amplitudes of an ``s``-sparse vector symbol.

    Each component is processed by :func:`prony_nodes` separately; the
    lattice supports are merged and one least-squares Vandermonde system is
    solved for all components on the merged support. With ``nearest`` the
    lattice snap never fails, and a merged support larger than ``s`` is
    trimmed to the ``s`` largest amplitudes instead of raising.

    In strict mode the fit must leave a residual of at most
    ``tau_fit * |samples|``. If phase snapping fails that test and
    ``refine`` is set, :func:`lattice_search` is tried on each component.
    """
    s, d = inp.sparsity, inp.direction
    n = d.shape[0]
    W = inp.samples
    locs, nodes, dists, ranks = [], [], [], []
    ambiguous = False
    failure: Optional[Exception] = None
    for c in range(W.shape[1]):
        est = prony_nodes(W[:, c], s, tau_rank)
        ambiguous |= est.ambiguous
        nodes.append(est.nodes)
        ranks.append(est.rank)
        try:
            k, dist = nodes_to_lattice(est.nodes, d, inp.box, tau_phase, nearest=nearest)
        except LatticeMatchError as exc:
            failure = failure or exc
            continue
        locs.append(k)
        dists.append(dist)
    all_nodes = np.concatenate(nodes)
    all_dists = np.concatenate(dists) if dists else np.zeros(0)

    def fit(sup):
        V = vandermonde(sup, d, s)
        amp, *_ = np.linalg.lstsq(V, W, rcond=None)
        return amp, float(np.linalg.norm(V @ amp - W))

    def merged(parts):
        sup = _lex_unique(np.concatenate(parts).reshape(-1, n)).astype(np.int64) if parts else np.zeros((0, n), dtype=np.int64)
        return sup

    support = merged(locs)
    if failure is None and len(support) > s and not nearest:
        failure = SparsityExceeded(f"merged support has {len(support)} points, sparsity is {s}")
    if failure is None and not nearest and len(support):
        if fit(support)[1] > tau_fit * np.linalg.norm(W):
            failure = LatticeMatchError("snapped support does not fit the samples", candidates=[])
    if failure is not None:
        if not refine:
            raise failure
        log.debug("phase snapping failed (%s); searching lattice supports", failure)
        parts = []
        for c in range(W.shape[1]):
            if np.max(np.abs(W[:, c]), initial=0.0) < ZERO_LEVEL:
                continue
            parts.append(lattice_search(W[:, c], s, d, inp.box, ranks[c], tau_fit))
        support = merged(parts)
        if len(support) > s:
            raise SparsityExceeded(f"merged support has {len(support)} points, sparsity is {s}")
        ambiguous = True

    if len(support) == 0:
        return PronyOutput(support, np.zeros((0, W.shape[1]), dtype=complex), all_nodes,
                           float(np.linalg.norm(W)), all_dists, ambiguous)
    amp, res = fit(support)
    if len(support) > s:
        keep = np.sort(np.argsort(-np.linalg.norm(amp, axis=1))[:s])
        support = support[keep]
        amp, res = fit(support)
    keep = np.max(np.abs(amp), axis=1) >= tau_amp
    if not np.all(keep):
        support = support[keep]
        amp, res = fit(support) if len(support) else (amp[keep], float(np.linalg.norm(W)))
    return PronyOutput(support, amp, all_nodes, res, all_dists, ambiguous)
