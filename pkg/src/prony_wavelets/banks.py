"""Built-in wavelet banks built from piecewise polynomials.

Each time-domain function is a sum of separable products of one-dimensional
piecewise polynomials on half-open intervals, so both pointwise values and
Fourier transforms are available in closed form. Masks are not hard-coded:
they are fitted from the two-scale relations by least squares and then
checked with :func:`~prony_wavelets.lattice.verify_bank`.
"""

from __future__ import annotations

from functools import lru_cache
from math import factorial
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .lattice import DilationScheme, TrigMatrixPoly, WaveletBank, candidate_shifts

SQRT3 = np.sqrt(3.0)

BUILTIN_BANKS = ("alpert1d", "haar1d", "haar2d")
HAAR2D_VARIANTS = ("t2", "verbatim")

_SERIES_TERMS = 30


def _centered_moments(q_max: int, w: float, x: np.ndarray) -> np.ndarray:
    """``J_q(x) = int_{-w}^{w} u^q exp(-i u x) du`` for ``q = 0..q_max``."""
    x0 = np.asarray(x, dtype=float)
    x = np.atleast_1d(x0)
    out = np.zeros((q_max + 1,) + x.shape, dtype=complex)
    small = np.abs(x) * w < 0.5
    if np.any(small):
        xs = x[small]
        for q in range(q_max + 1):
            acc = np.zeros(xs.shape, dtype=complex)
            for l in range(_SERIES_TERMS):
                p = q + l
                if p % 2:
                    continue
                acc += (-1j * xs) ** l / factorial(l) * (2.0 * w ** (p + 1) / (p + 1))
            out[q][small] = acc
    big = ~small
    if np.any(big):
        xb = x[big]
        e_plus = np.exp(-1j * w * xb)
        e_minus = np.exp(1j * w * xb)
        prev = 2.0 * np.sin(w * xb) / xb
        out[0][big] = prev
        for q in range(1, q_max + 1):
            boundary = (w ** q * e_plus - (-w) ** q * e_minus) / (-1j * xb)
            prev = boundary + q / (1j * xb) * prev
            out[q][big] = prev
    return out.reshape((q_max + 1,) + x0.shape)


class PiecewisePoly1D:
    """Piecewise polynomial on half-open intervals ``[a, b)``.

    ``pieces`` is a list of ``(a, b, coeffs)`` with ``coeffs`` ascending in
    powers of ``t``.
    """

    def __init__(self, pieces):
        self.pieces = [(float(a), float(b), tuple(float(c) for c in cs)) for a, b, cs in pieces]

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for a, b, cs in self.pieces:
            inside = (t >= a) & (t < b)
            out = out + np.where(inside, np.polynomial.polynomial.polyval(t, cs), 0.0)
        return out

    def fourier(self, x) -> np.ndarray:
        """``int f(t) exp(-i t x) dt``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for a, b, cs in self.pieces:
            c, w = 0.5 * (a + b), 0.5 * (b - a)
            # re-expand the polynomial around the interval centre
            shifted = np.polynomial.polynomial.Polynomial(cs)(np.polynomial.polynomial.Polynomial([c, 1.0]))
            coef = shifted.coef
            J = _centered_moments(len(coef) - 1, w, x)
            out += np.exp(-1j * c * x) * np.tensordot(coef, J, axes=(0, 0))
        return out

    @property
    def breakpoints(self) -> list:
        return sorted({p for a, b, _ in self.pieces for p in (a, b)})


class SeparableFunction:
    """``sum_terms coef * prod_d f_d(t_d)`` with 1D piecewise polynomial factors."""

    def __init__(self, terms: Sequence):
        self.terms = [(float(c), tuple(fs)) for c, fs in terms]
        self.n = len(self.terms[0][1])

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.n == 1 and (t.ndim == 0 or t.shape[-1] != 1):
            t = t[..., None]
        out = 0.0
        for c, fs in self.terms:
            prod = c
            for d, f in enumerate(fs):
                prod = prod * f(t[..., d])
            out = out + prod
        return np.asarray(out, dtype=float)

    def fourier(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        out = 0.0
        for c, fs in self.terms:
            prod = c
            for d, f in enumerate(fs):
                prod = prod * f.fourier(xi[..., d])
            out = out + prod
        return np.asarray(out, dtype=complex)


def _vector_evaluators(funcs: Sequence[SeparableFunction]):
    def fourier(xi):
        return np.stack([f.fourier(xi) for f in funcs], axis=-1)

    def time(t):
        return np.stack([f(t) for f in funcs], axis=-1)

    return fourier, time


def fit_masks(
    scheme: DilationScheme,
    phi_hat,
    target_hat,
    r: int,
    support_radius: int = 2,
    n_points: int = 400,
    seed: int = 12345,
    prune: float = 1e-12,
):
    """Least-squares fit of the mask ``G`` in ``target(xi) = G(Mt^-1 xi) phi_hat(Mt^-1 xi)``.

    Returns ``(G, residual)`` where ``residual`` is the max fit error on the
    sample grid. The fitted coefficients are real whenever the imaginary parts
    are below ``prune``.
    """
    n = scheme.n
    rng = np.random.default_rng(seed)
    xi = rng.uniform(-4 * np.pi, 4 * np.pi, size=(n_points, n))
    W = xi @ scheme.Mt_inv.T
    ks = candidate_shifts(n, support_radius)
    phiW = phi_hat(W)  # (N, r)
    phase = np.exp(-1j * (W @ ks.T))  # (N, K)
    design = (phase[:, :, None] * phiW[:, None, :]).reshape(len(xi), -1)  # columns (k, l)
    target = target_hat(xi)  # (N, r)
    sol, *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = float(np.max(np.abs(design @ sol - target)))
    C = sol.reshape(len(ks), r, r).transpose(0, 2, 1)  # C[k][row, l]
    C = np.where(np.abs(C.real) < prune, 0.0, C.real) + 1j * np.where(np.abs(C.imag) < prune, 0.0, C.imag)
    if np.all(C.imag == 0):
        C = C.real
    coeffs = {tuple(k): C[i] for i, k in enumerate(ks.tolist()) if np.any(C[i] != 0)}
    return TrigMatrixPoly(coeffs, r, r, n), residual


def _indicator(a, b):
    return PiecewisePoly1D([(a, b, (1.0,))])


def _alpert_functions():
    chi = _indicator(0.0, 1.0)
    # 2 sqrt3 (t - 1/2) on [0, 1)
    phi2 = PiecewisePoly1D([(0.0, 1.0, (-SQRT3, 2 * SQRT3))])
    psi1 = PiecewisePoly1D([(0.0, 0.5, (-1.0, 6.0)), (0.5, 1.0, (-5.0, 6.0))])
    # 2 sqrt3 (2t - 1/2) on [0, 1/2), -2 sqrt3 (2t - 3/2) on [1/2, 1)
    psi2 = PiecewisePoly1D([(0.0, 0.5, (-SQRT3, 4 * SQRT3)), (0.5, 1.0, (3 * SQRT3, -4 * SQRT3))])
    phis = [SeparableFunction([(1.0, (chi,))]), SeparableFunction([(1.0, (phi2,))])]
    psis = [[SeparableFunction([(1.0, (psi1,))]), SeparableFunction([(1.0, (psi2,))])]]
    return phis, psis


def _haar1d_functions():
    phis = [SeparableFunction([(1.0, (_indicator(0.0, 1.0),))])]
    psi = PiecewisePoly1D([(0.0, 0.5, (1.0,)), (0.5, 1.0, (-1.0,))])
    return phis, [[SeparableFunction([(1.0, (psi,))])]]


def _haar2d_functions(variant: str):
    chi = _indicator(0.0, 1.0)
    half_lo = _indicator(0.0, 0.5)
    half_hi = _indicator(0.5, 1.0)
    phis = [SeparableFunction([(1.0, (chi, chi))])]
    if variant == "t2":
        diff = PiecewisePoly1D([(0.0, 0.5, (1.0,)), (0.5, 1.0, (-1.0,))])
        psi = SeparableFunction([(1.0, (chi, diff))])
    elif variant == "verbatim":
        # chi(t1) (chi_[0,1/2)(t1) - chi_[1/2,1)(t2)), cut to the unit square
        psi = SeparableFunction([(1.0, (half_lo, chi)), (-1.0, (chi, half_hi))])
    else:
        raise ValidationError(f"unknown haar2d variant {variant!r}; choose from {HAAR2D_VARIANTS}")
    return phis, [[psi]]


def _assemble(name, variant, scheme, phis, psis, r):
    phi_f, phi_t = _vector_evaluators(phis)
    psi_pairs = [_vector_evaluators(p) for p in psis]
    masks = [fit_masks(scheme, phi_f, phi_f, r)[0]]
    masks += [fit_masks(scheme, phi_f, f, r)[0] for f, _ in psi_pairs]
    return WaveletBank(
        scheme,
        r,
        masks,
        phi_hat=phi_f,
        psi_hat=[f for f, _ in psi_pairs],
        phi_time=phi_t,
        psi_time=[t for _, t in psi_pairs],
        name=name,
        variant=variant,
    )


@lru_cache(maxsize=None)
def make_bank(name: str, variant: str = None) -> WaveletBank:
    """Construct a built-in bank.

    ``alpert1d``
        ``r = 2`` piecewise-linear multiwavelets with dilation 2.
    ``haar1d``
        Scalar Haar system with dilation 2.
    ``haar2d``
        Scalar indicator of the unit square with ``D = [[0, -2], [1, 0]]``.
        ``variant`` selects the wavelet: ``"t2"`` (default) or ``"verbatim"``.
    """
    if name == "alpert1d":
        phis, psis = _alpert_functions()
        return _assemble(name, None, DilationScheme([[2]]), phis, psis, 2)
    if name == "haar1d":
        phis, psis = _haar1d_functions()
        return _assemble(name, None, DilationScheme([[2]]), phis, psis, 1)
    if name == "haar2d":
        variant = variant or "t2"
        phis, psis = _haar2d_functions(variant)
        return _assemble(name, variant, DilationScheme([[0, -2], [1, 0]]), phis, psis, 1)
    raise ValidationError(f"unknown bank {name!r}; choose from {BUILTIN_BANKS}")


def with_cosets(bank: WaveletBank, cosets) -> WaveletBank:
    """Same bank with a different choice of coset representatives."""
    scheme = DilationScheme(bank.scheme.D, cosets)
    return WaveletBank(
        scheme,
        bank.r,
        bank.masks,
        phi_hat=bank._phi_hat,
        psi_hat=bank._psi_hat,
        phi_time=bank._phi_time,
        psi_time=bank._psi_time,
        product_depth=bank.product_depth,
        phi_hat0=bank.phi_hat0,
        name=bank.name,
        variant=bank.variant,
    )


def eval_time(bank: WaveletBank, which: str, t) -> np.ndarray:
    """Pointwise value of one scalar component.

    ``which`` is ``"phi_l"`` or ``"psi_m_l"`` with 1-based ``m`` and ``l``,
    e.g. ``"phi_2"`` or ``"psi_1_1"``.
    """
    parts = which.split("_")
    try:
        if parts[0] == "phi" and len(parts) == 2:
            l = int(parts[1])
            vals = bank.phi_time(t)
        elif parts[0] == "psi" and len(parts) == 3:
            m, l = int(parts[1]), int(parts[2])
            vals = bank.psi_time(m, t)
        else:
            raise ValueError
    except ValueError:
        raise ValidationError(f"bad function name {which!r}") from None
    if not 1 <= l <= bank.r:
        raise ValidationError(f"component {l} outside 1..{bank.r}")
    return vals[..., l - 1]
