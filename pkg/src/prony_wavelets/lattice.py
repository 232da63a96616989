"""Dilation matrices, integer lattices and Fourier-domain multiresolution tools.

Conventions
-----------
Frequencies are real vectors ``xi`` of length ``n``. Every evaluator accepts
either a single vector of shape ``(n,)`` or a batch of shape ``(N, n)`` and
returns a correspondingly shaped result. ``Mt`` always denotes the transpose
of the dilation matrix ``D``; it is the matrix acting on frequencies.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import LambdaSearchExhausted, ValidationError

TWO_PI = 2.0 * np.pi


def _as_int_matrix(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A))
    if A.shape[0] != A.shape[1]:
        raise ValidationError(f"dilation matrix must be square, got shape {A.shape}")
    if not np.all(np.equal(np.round(A), A)):
        raise ValidationError("dilation matrix must have integer entries")
    return np.round(A).astype(np.int64)


def _int_det(A: np.ndarray) -> int:
    return int(round(np.linalg.det(A.astype(float))))


def coset_representatives(Mt) -> list[tuple[int, ...]]:
    """Representatives of ``Z^n / Mt Z^n``.

    Enumerates the integer points of the half-open parallelepiped
    ``Mt [0, 1)^n`` in lexicographic order, with the zero vector moved to
    the front.

    >>> coset_representatives([[2]])
    [(0,), (1,)]
    """
    Mt = _as_int_matrix(Mt)
    det = _int_det(Mt)
    if det == 0:
        raise ValidationError("not a dilation matrix: singular")
    n = Mt.shape[0]
    corners = np.array([Mt @ np.array(v) for v in itertools.product((0, 1), repeat=n)])
    lo = corners.min(axis=0)
    hi = corners.max(axis=0)
    Mt_inv = np.linalg.inv(Mt.astype(float))
    reps = []
    for x in itertools.product(*(range(int(a), int(b) + 1) for a, b in zip(lo, hi))):
        u = Mt_inv @ np.array(x, dtype=float)
        if np.all(u >= -1e-12) and np.all(u < 1.0 - 1e-12):
            reps.append(tuple(int(c) for c in x))
    reps.sort()
    zero = tuple([0] * n)
    reps.remove(zero)
    reps.insert(0, zero)
    if len(reps) != abs(det):
        raise ValidationError(
            f"coset enumeration found {len(reps)} points, expected |det| = {abs(det)}"
        )
    return reps


class DilationScheme:
    """An integer dilation matrix together with its coset representatives.

    Parameters
    ----------
    D : array_like
        ``n x n`` integer matrix whose eigenvalues all exceed 1 in modulus.
    cosets : sequence of integer vectors, optional
        Representatives of ``Z^n / D^T Z^n``. Defaults to
        :func:`coset_representatives`. Custom choices are validated.
    """

    def __init__(self, D, cosets: Optional[Sequence[Sequence[int]]] = None):
        D = _as_int_matrix(D)
        M = abs(_int_det(D))
        if M < 2:
            raise ValidationError(f"not a dilation matrix: |det D| = {M} < 2")
        eig = np.linalg.eigvals(D.astype(float))
        if np.any(np.abs(eig) <= 1.0 + 1e-9):
            raise ValidationError(
                f"not a dilation matrix: eigenvalue moduli {np.abs(eig)} not all > 1"
            )
        self.D = D
        self.Mt = D.T.copy()
        self.M = M
        self.n = D.shape[0]
        self.Mt_inv = np.linalg.inv(self.Mt.astype(float))
        self.D_inv = np.linalg.inv(self.D.astype(float))
        if cosets is None:
            cosets = coset_representatives(self.Mt)
        self.cosets = np.array(cosets, dtype=np.int64).reshape(-1, self.n)
        self._check_cosets()

    def _check_cosets(self):
        if len(self.cosets) != self.M:
            raise ValidationError(f"need {self.M} coset representatives, got {len(self.cosets)}")
        if np.any(self.cosets[0] != 0):
            raise ValidationError("first coset representative must be the zero vector")
        for a, b in itertools.combinations(range(self.M), 2):
            u = self.Mt_inv @ (self.cosets[a] - self.cosets[b])
            if np.allclose(u, np.round(u), atol=1e-9):
                raise ValidationError(
                    f"cosets {tuple(self.cosets[a])} and {tuple(self.cosets[b])} coincide mod Mt Z^n"
                )

    def mt_power(self, j: int) -> np.ndarray:
        """Integer matrix ``Mt^j`` for ``j >= 0``."""
        return np.linalg.matrix_power(self.Mt, j)

    def d_power(self, j: int) -> np.ndarray:
        return np.linalg.matrix_power(self.D, j)

    def mt_inv_power(self, j: int) -> np.ndarray:
        return np.linalg.matrix_power(self.Mt_inv, j)

    def to_dict(self) -> dict:
        return {"D": self.D.tolist(), "cosets": self.cosets.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "DilationScheme":
        return cls(d["D"], d.get("cosets"))

    def __repr__(self):
        return f"DilationScheme(D={self.D.tolist()}, cosets={self.cosets.tolist()})"


@dataclass(frozen=True)
class SupportBox:
    """Half-open integer box ``lo <= k < hi`` (per coordinate)."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(int(v) for v in np.atleast_1d(self.lo))
        hi = tuple(int(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi):
            raise ValidationError("box bounds have different dimensions")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValidationError(f"empty box: lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, a: int, b: int, n: int) -> "SupportBox":
        return cls((a,) * n, (b,) * n)

    @property
    def n(self) -> int:
        return len(self.lo)

    @property
    def width(self) -> int:
        """Largest side length, the ``b - a`` of a cube containing the box."""
        return max(b - a for a, b in zip(self.lo, self.hi))

    def points(self) -> np.ndarray:
        axes = [np.arange(a, b) for a, b in zip(self.lo, self.hi)]
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=-1).astype(np.int64)

    def level_points(self, scheme: DilationScheme, j: int) -> np.ndarray:
        """Integer points of ``D^j [lo, hi)``, lexicographically sorted."""
        if j == 0:
            return self.points()
        Dj = scheme.d_power(j)
        corners = np.array(
            [Dj @ np.array(c) for c in itertools.product(*zip(self.lo, self.hi))], dtype=float
        )
        lo = np.floor(corners.min(axis=0)).astype(int)
        hi = np.ceil(corners.max(axis=0)).astype(int)
        axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
        grid = np.meshgrid(*axes, indexing="ij")
        cand = np.stack([g.ravel() for g in grid], axis=-1)
        u = cand @ np.linalg.matrix_power(scheme.D_inv, j).T
        keep = np.all(u >= np.array(self.lo) - 1e-9, axis=1) & np.all(
            u < np.array(self.hi) - 1e-9, axis=1
        )
        return cand[keep].astype(np.int64)

    def contains(self, k) -> bool:
        return all(a <= int(c) < b for c, a, b in zip(k, self.lo, self.hi))

    def __str__(self):
        return ",".join(f"{a}:{b}" for a, b in zip(self.lo, self.hi))


class TrigMatrixPoly:
    """Matrix-valued trigonometric polynomial ``sum_k C_k exp(-i k.xi)``.

    Parameters
    ----------
    coeffs : dict
        Maps integer vectors (tuples) to ``rows x cols`` matrices.
    """

    def __init__(self, coeffs: dict, rows: int = None, cols: int = None, n: int = None):
        items = sorted((tuple(int(c) for c in np.atleast_1d(k)), np.atleast_2d(v)) for k, v in coeffs.items())
        if not items:
            if rows is None or cols is None or n is None:
                raise ValidationError("empty trigonometric polynomial needs explicit shape")
            self.ks = np.zeros((0, n), dtype=np.int64)
            self.C = np.zeros((0, rows, cols), dtype=complex)
        else:
            self.ks = np.array([k for k, _ in items], dtype=np.int64)
            self.C = np.array([v for _, v in items], dtype=complex)
        self.rows, self.cols = self.C.shape[1], self.C.shape[2]
        if rows is not None and rows != self.rows or cols is not None and cols != self.cols:
            raise ValidationError("coefficient shape mismatch")
        self.n = self.ks.shape[1]

    @property
    def coeffs(self) -> dict:
        return {tuple(k): c for k, c in zip(self.ks.tolist(), self.C)}

    def __call__(self, xi) -> np.ndarray:
        return eval_trig_poly(self, xi)

    def to_list(self) -> list:
        out = []
        for k, c in zip(self.ks.tolist(), self.C):
            entry = {"k": k, "re": c.real.tolist()}
            if np.any(c.imag != 0):
                entry["im"] = c.imag.tolist()
            out.append(entry)
        return out

    @classmethod
    def from_list(cls, items: list, rows: int, cols: int, n: int) -> "TrigMatrixPoly":
        coeffs = {}
        for it in items:
            c = np.array(it["re"], dtype=complex)
            if "im" in it:
                c = c + 1j * np.array(it["im"], dtype=float)
            coeffs[tuple(it["k"])] = c.reshape(rows, cols)
        return cls(coeffs, rows, cols, n)


def eval_trig_poly(P: TrigMatrixPoly, xi) -> np.ndarray:
    """Evaluate ``P`` at ``xi`` of shape ``(n,)`` or ``(N, n)``."""
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    X = np.atleast_2d(xi)
    if X.shape[-1] != P.n:
        raise ValidationError(f"frequency dimension {X.shape[-1]} != {P.n}")
    phase = np.exp(-1j * (X @ P.ks.T))
    out = np.einsum("nk,kab->nab", phase, P.C)
    return out[0] if single else out


@dataclass
class LambdaSet:
    """Integer shifts making ``(phi_hat(anchor + 2 pi k))_k`` nonsingular."""

    anchor: np.ndarray
    shifts: tuple
    conditioning: float

    def to_dict(self) -> dict:
        return {
            "anchor": [float(v) for v in self.anchor],
            "shifts": [list(k) for k in self.shifts],
            "conditioning": float(self.conditioning),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LambdaSet":
        return cls(
            np.array(d["anchor"], dtype=float),
            tuple(tuple(int(c) for c in k) for k in d["shifts"]),
            float(d["conditioning"]),
        )


class WaveletBank:
    """Scaling vector, wavelet vectors and masks of a multiresolution analysis.

    Closed-form Fourier evaluators are optional. Without them ``phi_hat``
    falls back to the truncated infinite product of the low-pass mask and
    ``psi_hat`` to the two-scale relation.
    """

    def __init__(
        self,
        scheme: DilationScheme,
        r: int,
        masks: Sequence[TrigMatrixPoly],
        phi_hat: Optional[Callable] = None,
        psi_hat: Optional[Sequence[Callable]] = None,
        phi_time: Optional[Callable] = None,
        psi_time: Optional[Sequence[Callable]] = None,
        product_depth: int = 40,
        phi_hat0=None,
        name: str = "custom",
        variant: Optional[str] = None,
    ):
        if len(masks) != scheme.M:
            raise ValidationError(f"need {scheme.M} masks, got {len(masks)}")
        for G in masks:
            if (G.rows, G.cols) != (r, r) or G.n != scheme.n:
                raise ValidationError("masks must be r x r trigonometric polynomials in n variables")
        if psi_hat is not None and len(psi_hat) != scheme.M - 1:
            raise ValidationError("need M-1 closed-form wavelet evaluators")
        self.scheme = scheme
        self.r = r
        self.masks = list(masks)
        self._phi_hat = phi_hat
        self._psi_hat = list(psi_hat) if psi_hat is not None else None
        self._phi_time = phi_time
        self._psi_time = list(psi_time) if psi_time is not None else None
        self.product_depth = int(product_depth)
        self.phi_hat0 = None if phi_hat0 is None else np.asarray(phi_hat0, dtype=complex)
        self.name = name
        self.variant = variant
        self._v0 = None

    @property
    def n(self) -> int:
        return self.scheme.n

    @property
    def M(self) -> int:
        return self.scheme.M

    @property
    def has_closed_form(self) -> bool:
        return self._phi_hat is not None

    @property
    def has_time(self) -> bool:
        return self._phi_time is not None and self._psi_time is not None

    def mask(self, m: int, xi) -> np.ndarray:
        return eval_trig_poly(self.masks[m], xi)

    def phi_hat(self, xi) -> np.ndarray:
        if self._phi_hat is not None:
            return self._phi_hat(np.asarray(xi, dtype=float))
        return self.phi_hat_product(xi)

    def phi_hat_product(self, xi, depth: Optional[int] = None) -> np.ndarray:
        """Truncated product ``G0(Mt^-1 xi) ... G0(Mt^-depth xi) v0``."""
        depth = self.product_depth if depth is None else depth
        xi = np.asarray(xi, dtype=float)
        single = xi.ndim == 1
        X = np.atleast_2d(xi)
        P = np.broadcast_to(np.eye(self.r, dtype=complex), (len(X), self.r, self.r))
        W = X
        for _ in range(depth):
            W = W @ self.scheme.Mt_inv.T
            P = P @ self.mask(0, W)
        out = P @ self._refinable_vector()
        return out[0] if single else out

    def _refinable_vector(self) -> np.ndarray:
        if self._v0 is None:
            G00 = self.mask(0, np.zeros(self.n))
            w, V = np.linalg.eig(G00)
            idx = int(np.argmin(np.abs(w - 1.0)))
            if abs(w[idx] - 1.0) > 1e-9:
                raise ValidationError("non-refinable mask: G0(0) has no eigenvalue 1")
            v = V[:, idx]
            first = int(np.flatnonzero(np.abs(v) > 1e-12)[0])
            ref = self.phi_hat0 if self.phi_hat0 is not None else None
            if ref is None and self._phi_hat is not None:
                ref = self._phi_hat(np.zeros(self.n))
            target = ref[first] if ref is not None else 1.0
            self._v0 = v * (target / v[first])
        return self._v0

    def psi_hat(self, m: int, xi) -> np.ndarray:
        if not 1 <= m <= self.M - 1:
            raise ValidationError(f"wavelet index m={m} outside 1..{self.M - 1}")
        if self._psi_hat is not None:
            return self._psi_hat[m - 1](np.asarray(xi, dtype=float))
        return self.psi_hat_two_scale(m, xi)

    def psi_hat_two_scale(self, m: int, xi) -> np.ndarray:
        """``G_m(Mt^-1 xi) phi_hat(Mt^-1 xi)``."""
        xi = np.asarray(xi, dtype=float)
        W = xi @ self.scheme.Mt_inv.T
        return np.einsum("...ab,...b->...a", self.mask(m, W), self.phi_hat(W))

    def phi_time(self, t) -> np.ndarray:
        if self._phi_time is None:
            raise ValidationError("time evaluation unavailable for this bank")
        return self._phi_time(np.asarray(t, dtype=float))

    def psi_time(self, m: int, t) -> np.ndarray:
        if self._psi_time is None:
            raise ValidationError("time evaluation unavailable for this bank")
        if not 1 <= m <= self.M - 1:
            raise ValidationError(f"wavelet index m={m} outside 1..{self.M - 1}")
        return self._psi_time[m - 1](np.asarray(t, dtype=float))

    @property
    def ident(self) -> dict:
        return {"name": self.name, "variant": self.variant}

    def __repr__(self):
        return f"WaveletBank(name={self.name!r}, variant={self.variant!r}, n={self.n}, r={self.r}, M={self.M})"


def eval_phi_hat(bank: WaveletBank, xi) -> np.ndarray:
    return bank.phi_hat(xi)


def eval_psi_hat(bank: WaveletBank, m: int, xi) -> np.ndarray:
    return bank.psi_hat(m, xi)


def candidate_shifts(n: int, radius: int) -> np.ndarray:
    """All ``k`` with ``|k|_inf <= radius``, by sup norm then lexicographically."""
    pts = sorted(
        itertools.product(range(-radius, radius + 1), repeat=n),
        key=lambda k: (max(abs(c) for c in k), k),
    )
    return np.array(pts, dtype=np.int64).reshape(-1, n)


def select_lambda(
    bank: WaveletBank,
    xi,
    radius: int = 5,
    tau_rank: float = 1e-6,
    allowed: Optional[Callable[[tuple], bool]] = None,
) -> LambdaSet:
    """Greedy choice of ``r`` shifts ``k`` with ``phi_hat(xi + 2 pi k)`` independent.

    ``allowed`` optionally vetoes shifts, e.g. to keep the resulting sampling
    frequencies inside a prescribed measurement grid.
    """
    if radius < 0 or tau_rank <= 0:
        raise ValidationError("radius must be >= 0 and tau_rank > 0")
    xi = np.asarray(xi, dtype=float).reshape(-1)
    cands = candidate_shifts(bank.n, radius)
    if allowed is not None:
        cands = np.array([k for k in cands if allowed(tuple(int(c) for c in k))], dtype=np.int64).reshape(-1, bank.n)
    values = bank.phi_hat(xi[None, :] + TWO_PI * cands) if len(cands) else np.zeros((0, bank.r))
    chosen: list[int] = []
    sigma = np.inf
    for i in range(len(cands)):
        trial = values[chosen + [i]].T
        s = np.linalg.svd(trial, compute_uv=False)[-1]
        if s > tau_rank:
            chosen.append(i)
            sigma = s
            if len(chosen) == bank.r:
                break
    if len(chosen) < bank.r:
        raise LambdaSearchExhausted(
            f"Lambda search exhausted at xi={xi.tolist()} (radius={radius}, found {len(chosen)} of {bank.r})"
        )
    shifts = tuple(tuple(int(c) for c in cands[i]) for i in chosen)
    return LambdaSet(anchor=xi, shifts=shifts, conditioning=float(sigma))


@dataclass
class BankReport:
    grid: np.ndarray
    refinement: np.ndarray
    wavelet: np.ndarray
    orthogonality: np.ndarray
    sigma_min: np.ndarray
    tau: float
    tau_rank: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(
            np.all(self.refinement < self.tau)
            and np.all(self.wavelet < self.tau)
            and np.all(self.orthogonality < self.tau)
            and np.all(self.sigma_min > self.tau_rank)
        )

    def summary(self) -> dict:
        def mx(a):
            return float(a.max()) if a.size else 0.0

        return {
            "points": int(len(self.grid)),
            "max_refinement_residual": mx(self.refinement),
            "max_wavelet_residual": mx(self.wavelet),
            "max_orthogonality_residual": mx(self.orthogonality),
            "min_sigma_min": float(self.sigma_min.min()),
            "tau": self.tau,
            "tau_rank": self.tau_rank,
            "passed": self.passed,
        }


def block_mask_matrix(bank: WaveletBank, xi) -> np.ndarray:
    """The ``Mr x Mr`` matrix with blocks ``G_m(xi + 2 pi Mt^-1 p_m')``."""
    xi = np.asarray(xi, dtype=float).reshape(-1)
    r, M = bank.r, bank.M
    shifted = xi[None, :] + TWO_PI * (bank.scheme.cosets @ bank.scheme.Mt_inv.T)
    G = np.zeros((M * r, M * r), dtype=complex)
    for m in range(M):
        vals = bank.mask(m, shifted)
        for mp in range(M):
            G[m * r:(m + 1) * r, mp * r:(mp + 1) * r] = vals[mp]
    return G


def verify_bank(bank: WaveletBank, grid, tau: float = 1e-8, tau_rank: float = 1e-6) -> BankReport:
    """Residuals of the refinement, wavelet and orthogonality relations plus
    the smallest singular value of the block mask matrix, per grid point."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ValidationError("verification grid is empty")
    if grid.shape[1] != bank.n:
        grid = grid.reshape(-1, bank.n)
    sc = bank.scheme
    W = grid @ sc.Mt_inv.T
    phiW = bank.phi_hat(W)
    ref = np.linalg.norm(bank.phi_hat(grid) - np.einsum("nab,nb->na", bank.mask(0, W), phiW), axis=1)
    wav = np.zeros((len(grid), bank.M - 1))
    orth = np.zeros((len(grid), bank.M - 1))
    coset_shifts = TWO_PI * (sc.cosets @ sc.Mt_inv.T)
    G0s = [bank.mask(0, grid + c) for c in coset_shifts]
    for m in range(1, bank.M):
        pred = np.einsum("nab,nb->na", bank.mask(m, W), phiW)
        wav[:, m - 1] = np.linalg.norm(bank.psi_hat(m, grid) - pred, axis=1)
        acc = np.zeros((len(grid), bank.r, bank.r), dtype=complex)
        for c, G0 in zip(coset_shifts, G0s):
            Gm = bank.mask(m, grid + c)
            acc += G0 @ np.conj(np.swapaxes(Gm, -1, -2))
        orth[:, m - 1] = np.linalg.norm(acc, axis=(1, 2), ord=2)
    smin = np.array([np.linalg.svd(block_mask_matrix(bank, x), compute_uv=False)[-1] for x in grid])
    return BankReport(grid, ref, wav, orth, smin, tau, tau_rank)
