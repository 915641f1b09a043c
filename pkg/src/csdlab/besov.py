"""Dyadic block decompositions, Besov-type space-time norms, duality, energy report.

Block conventions.  Spatial shells are half-open, N <= max(1, |xi|) < 2N, with
every |xi| < 1 folded into N = 1.  Modulation shells use h = tau + s|xi| for
sign s and the same folding.  A block K^s_{N,L} is the product of an N-shell
and an L-shell; for fixed s the blocks partition the resolved lattice, so the
squared block masses sum to the squared windowed space-time norm exactly.

Mass convention matches spacetime.st_norm: mass(K)^2 = sum_K |u~|^2 dtau
dxi^2 / (2 pi)^3.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid2D, forward, l2_norm
from .spacetime import SQRT_2PI_CUBED, SpaceTimeField, duhamel_frames, halfwave_frames
from .grid import inverse


def shell_exponent(x) -> np.ndarray:
    """k such that the dyadic shell of x is N = 2^k (sub-unit folds to k = 0)."""
    return np.floor(np.log2(np.maximum(np.asarray(x, dtype=float), 1.0))).astype(int)


def shell_of(x) -> np.ndarray:
    return 2 ** shell_exponent(x)


def _is_dyadic(v: int) -> bool:
    return isinstance(v, (int, np.integer)) and v >= 1 and (v & (v - 1)) == 0


@dataclass(frozen=True)
class DyadicBlock:
    N: int
    L: int
    sign: int

    def __post_init__(self) -> None:
        if not _is_dyadic(self.N) or not _is_dyadic(self.L):
            raise ValueError(f"block sizes must be powers of two >= 1, got N={self.N}, L={self.L}")
        if self.sign not in (1, -1):
            raise ValueError(f"block sign must be +1 or -1, got {self.sign}")


@dataclass(frozen=True)
class NormSpec:
    s: float
    b: float
    q: float
    sign: int

    def __post_init__(self) -> None:
        if self.q not in (1, math.inf):
            raise ValueError(f"summation flavor must be 1 or inf, got {self.q}")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")


def _labels(u: SpaceTimeField, sign: int):
    """Per-lattice-point shell exponents (kN, kL), each of shape (m, n, n)."""
    kN = shell_exponent(u.grid.xiabs)
    h = u.taus.reshape(-1, 1, 1) + sign * u.grid.xiabs[None]
    kL = shell_exponent(np.abs(h))
    kN = np.broadcast_to(kN[None], kL.shape)
    return kN, kL


def _mass_weight(u: SpaceTimeField) -> float:
    return u.dtau * u.grid.dxi**2 / SQRT_2PI_CUBED**2


class BlockDecomposition:
    """All nonzero (N, L) block masses of a field for one sign."""

    def __init__(self, u: SpaceTimeField, sign: int) -> None:
        if sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {sign}")
        self.sign = sign
        s = u.spectrum
        abs2 = np.abs(s) ** 2
        if abs2.ndim > 3:
            abs2 = abs2.sum(axis=tuple(range(1, abs2.ndim - 2)))
        kN, kL = _labels(u, sign)
        nL = int(kL.max()) + 1
        nN = int(kN.max()) + 1
        combined = (kN * nL + kL).ravel()
        sq = np.bincount(combined, weights=abs2.ravel(), minlength=nN * nL)
        sq = sq.reshape(nN, nL) * _mass_weight(u)
        self.Nmax = 2 ** (nN - 1)
        self.Lmax = 2 ** (nL - 1)
        self._sq = sq
        self.pairs = [
            (DyadicBlock(2**i, 2**j, sign), float(np.sqrt(sq[i, j])))
            for i in range(nN) for j in range(nL) if sq[i, j] > 0.0
        ]

    def total_sq(self) -> float:
        return float(self._sq.sum())

    def norm(self, spec: NormSpec) -> float:
        if spec.sign != self.sign:
            raise ValueError("norm spec sign does not match the decomposition sign")
        terms = [b.N**spec.s * b.L**spec.b * m for b, m in self.pairs]
        if not terms:
            return 0.0
        return float(sum(terms)) if spec.q == 1 else float(max(terms))


def dyadic_project(u: SpaceTimeField, block: DyadicBlock) -> SpaceTimeField:
    kN, kL = _labels(u, block.sign)
    mask = (kN == int(math.log2(block.N))) & (kL == int(math.log2(block.L)))
    shape = mask.shape[:1] + (1,) * (u.spectrum.ndim - 3) + mask.shape[1:]
    spec = u.spectrum * mask.reshape(shape)
    return SpaceTimeField.from_spectrum(u.grid, u.times, u.T, spec)


def besov_norm(u: SpaceTimeField, spec: NormSpec) -> float:
    return BlockDecomposition(u, spec.sign).norm(spec)


def spatial_shell_masses(grid: Grid2D, fhat: np.ndarray) -> np.ndarray:
    """L2 masses per spatial dyadic shell (continuous convention)."""
    kN = shell_exponent(grid.xiabs)
    abs2 = np.abs(fhat) ** 2
    if abs2.ndim > 2:
        abs2 = abs2.sum(axis=tuple(range(abs2.ndim - 2)))
    sq = np.bincount(kN.ravel(), weights=abs2.ravel())
    return np.sqrt(sq) * grid.c_grid


def spatial_besov(grid: Grid2D, f: np.ndarray, s: float, rep: str = "physical") -> float:
    fhat = f if rep == "fourier" else forward(grid, f)
    masses = spatial_shell_masses(grid, fhat)
    N = 2.0 ** np.arange(masses.size)
    return float(np.sum(N**s * masses))


def sobolev(grid: Grid2D, f: np.ndarray, s: float, rep: str = "physical",
            variant: str = "shell") -> float:
    fhat = f if rep == "fourier" else forward(grid, f)
    if variant == "shell":
        masses = spatial_shell_masses(grid, fhat)
        N = 2.0 ** np.arange(masses.size)
        return float(np.sqrt(np.sum(N ** (2 * s) * masses**2)))
    if variant == "bracket":
        w = (1.0 + grid.xiabs**2) ** (s / 2)
    elif variant == "linear":
        w = (1.0 + grid.xiabs) ** s
    else:
        raise ValueError(f"unknown sobolev variant {variant!r}")
    return float(l2_norm(grid, w * fhat, rep="fourier"))


def duality_extremizer(u: SpaceTimeField, spec: NormSpec):
    """Witness v with unit dual norm whose pairing recovers the l1 norm.

    v~ is N^s L^b u~ chi_K / mass_K summed over nonzero blocks, which makes
    every block mass of v equal N^s L^b, so the (-s, -b, inf) norm is 1 and
    <u, v> telescopes to the (s, b, 1) norm.
    """
    if spec.q != 1:
        raise ValueError("duality witness is defined for the l1 flavor")
    dec = BlockDecomposition(u, spec.sign)
    if not dec.pairs:
        raise ValueError("duality witness undefined for the zero field")
    kN, kL = _labels(u, spec.sign)
    weight = np.zeros(kN.shape, dtype=float)
    for b, m in dec.pairs:
        mask = (kN == int(math.log2(b.N))) & (kL == int(math.log2(b.L)))
        weight[mask] = b.N**spec.s * b.L**spec.b / m
    shape = weight.shape[:1] + (1,) * (u.spectrum.ndim - 3) + weight.shape[1:]
    v = SpaceTimeField.from_spectrum(u.grid, u.times, u.T, u.spectrum * weight.reshape(shape))
    pair = np.sum(u.spectrum * np.conjugate(v.spectrum)) * u.dtau * u.grid.dxi**2
    pair = abs(complex(pair / SQRT_2PI_CUBED**2))
    return v, pair / dec.norm(spec)


def restriction_norm(grid: Grid2D, frames: np.ndarray, times: np.ndarray, T: float,
                     spec: NormSpec) -> float:
    """Windowed-extension upper bound for the time-slab norm.

    Returns the full-space norm of rho * u, which dominates the infimum over
    extensions agreeing with u on (-T, T); the true infimum is not computed.
    """
    u = SpaceTimeField(grid, times, T, frames)
    return besov_norm(u, spec)


def energy_report(grid: Grid2D, fhat: np.ndarray, F_hat: np.ndarray, times: np.ndarray,
                  s: float, sign: int, T: float):
    """Empirical constant for the linear energy inequality.

    Builds v = e^{-sign i t D} f + int_0^t e^{-sign i (t-t') D} F dt' on the
    sampled times and compares the windowed (s, 1/2, 1) norm of v against
    the spatial shell norm of f plus the windowed (s, -1/2, 1) norm of F.
    """
    if T > 1.0:
        raise ValueError(f"the energy report is stated for T <= 1, got {T}")
    times = np.asarray(times, dtype=float)
    zero = int(np.argmin(np.abs(times)))
    v_hat = halfwave_frames(grid, fhat, times, sign) + duhamel_frames(
        grid, times, zero, F_hat, sign)
    lhs = restriction_norm(grid, inverse(grid, v_hat), times, T,
                           NormSpec(s, 0.5, 1, sign))
    rhs = spatial_besov(grid, fhat, s, rep="fourier") + restriction_norm(
        grid, inverse(grid, F_hat), times, T, NormSpec(s, -0.5, 1, sign))
    if rhs == 0.0 and lhs != 0.0:
        raise ValueError("forcing and data vanish but the solution does not")
    return lhs, rhs, (lhs / rhs if rhs > 0 else 0.0)
