"""Two fixed example problems, one per dimension.

``demo_1d``: the ``alpert1d`` bank with two levels, scaling atoms at 2 and 4,
level-0 wavelet atoms at 1 and 5 and level-1 wavelet atoms at 6 and 12.

``demo_2d``: the ``haar2d`` bank with one level, scaling atoms at (1, 0) and
(2, 3) and wavelet atoms at (2, 1) and (3, 5).

Each comes with a fixed measurement grid of the form
``pi * (t h + 2 q)`` with odd ``t`` and a handful of integer offsets ``q``.
Plans for these grids are built with ``allowed=`` so that every sampling
frequency falls on the grid.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .banks import make_bank
from .lattice import SupportBox, WaveletBank
from .sampling import SamplingPlan, build_plan, frequencies_from_pattern
from .signal import SparseWaveletSignal, draw_amplitudes

SQRT2 = np.sqrt(2.0)
SQRT3 = np.sqrt(3.0)

DEMO_SEED = 2015


@dataclass
class Demo:
    bank: WaveletBank
    signal: SparseWaveletSignal
    s: tuple
    h: np.ndarray
    box: SupportBox
    grid: np.ndarray

    def plan(self, on_grid: bool = True) -> SamplingPlan:
        """Sampling plan; with ``on_grid`` its frequencies are taken from ``grid``."""
        return build_plan(self.bank, self.s, self.h, allowed=self.grid if on_grid else None, box=self.box)


def grid_1d() -> np.ndarray:
    """``-sqrt2/128 t pi + 2 k pi`` for ``t = +-1, +-3`` and ``k = 0, +-1, +-2, 4``."""
    return frequencies_from_pattern([-1, 1, -3, 3], [-SQRT2 / 128], [[k] for k in (0, 1, -1, 2, -2, 4)])


def grid_2d() -> np.ndarray:
    """``(sqrt2/64 t + 2 k, sqrt3/64 t + 2 l) pi`` for ``t = +-1, +-3`` and ``k, l in {0, 1}``."""
    offsets = list(itertools.product((0, 1), repeat=2))
    return frequencies_from_pattern([-1, 1, -3, 3], [SQRT2 / 64, SQRT3 / 64], offsets)


def demo_1d(seed: int = DEMO_SEED) -> Demo:
    bank = make_bank("alpert1d")
    rng = np.random.default_rng(seed)

    def atoms(*ks):
        return {(k,): draw_amplitudes(rng, bank.r) for k in ks}

    signal = SparseWaveletSignal(1, bank.r, bank.M, 2, atoms(2, 4), {(1, 0): atoms(1, 5), (1, 1): atoms(6, 12)})
    return Demo(bank, signal, (2, 2), np.array([SQRT2 / 64]), SupportBox.cube(0, 16, 1), grid_1d())


def demo_2d(seed: int = DEMO_SEED, variant: str = "t2") -> Demo:
    bank = make_bank("haar2d", variant)
    rng = np.random.default_rng(seed)

    def atoms(*ks):
        return {k: draw_amplitudes(rng, 1) for k in ks}

    signal = SparseWaveletSignal(2, 1, bank.M, 1, atoms((1, 0), (2, 3)), {(1, 0): atoms((2, 1), (3, 5))})
    h = np.array([SQRT2 / 32, SQRT3 / 32])
    return Demo(bank, signal, (2,), h, SupportBox.cube(0, 6, 2), grid_2d())


DEMOS = {"1d": demo_1d, "2d": demo_2d}
