"""Periodic 2D spectral grid: transforms, norms, multipliers, dealiasing.

Convention: the continuum transform is f_hat(xi) = integral e^{-i x.xi} f(x) dx,
realized discretely as fft2(f) * dx^2.  Plancherel then reads
||f||_{L2} = c_grid * ||f_hat||_{l2} with c_grid = dxi / (2*pi) = 1 / length.
Fields are complex arrays whose last two axes are the spatial axes, so every
helper works unchanged for scalar (n, n) and spinor (2, n, n) data.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic grid with n points per axis on a box of side `length`."""

    n: int
    length: float = 2.0 * np.pi

    def __post_init__(self):
        if not (_is_pow2(self.n) and self.n >= 8):
            raise ValueError(f"grid size must be a power of two >= 8, got n={self.n}")
        if not self.length > 0:
            raise ValueError(f"grid length must be positive, got {self.length}")

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def dxi(self) -> float:
        return 2.0 * np.pi / self.length

    @property
    def ximax(self) -> float:
        return self.dxi * (self.n / 2)

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * self.dx

    @cached_property
    def xi1(self) -> np.ndarray:
        k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
        return np.broadcast_to(k[:, None], (self.n, self.n))

    @cached_property
    def xi2(self) -> np.ndarray:
        k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
        return np.broadcast_to(k[None, :], (self.n, self.n))

    @cached_property
    def xiabs(self) -> np.ndarray:
        return np.hypot(self.xi1, self.xi2)

    @cached_property
    def xiabs_safe(self) -> np.ndarray:
        # |xi| with the zero mode replaced by 1; callers must assign the
        # zero-mode value of homogeneous symbols explicitly.
        out = self.xiabs.copy()
        out[0, 0] = 1.0
        return out

    @cached_property
    def c_grid(self) -> float:
        return 1.0 / self.length

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        # 2/3-rule: keep integer modes |k| <= n//3 in each axis.
        idx = np.rint(np.fft.fftfreq(self.n) * self.n).astype(int)
        keep = np.abs(idx) <= self.n // 3
        return keep[:, None] & keep[None, :]


def forward(grid: Grid2D, f: np.ndarray) -> np.ndarray:
    """Physical -> Fourier on the last two axes."""
    return np.fft.fft2(f, axes=(-2, -1)) * grid.dx**2


def inverse(grid: Grid2D, fhat: np.ndarray) -> np.ndarray:
    """Fourier -> physical on the last two axes."""
    return np.fft.ifft2(fhat, axes=(-2, -1)) / grid.dx**2


def l2_norm(grid: Grid2D, f: np.ndarray, rep: str = "physical") -> float:
    if rep == "physical":
        return float(np.sqrt(np.sum(np.abs(f) ** 2)) * grid.dx)
    if rep == "fourier":
        return float(np.sqrt(np.sum(np.abs(f) ** 2)) * grid.c_grid)
    raise ValueError(f"unknown representation {rep!r}")


def inner_product(grid: Grid2D, f: np.ndarray, g: np.ndarray, rep: str = "physical") -> complex:
    """<f, g> = integral f * conj(g); conjugate-linear in the second slot."""
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch {f.shape} vs {g.shape}")
    s = np.sum(f * np.conjugate(g))
    if rep == "physical":
        return complex(s * grid.dx**2)
    if rep == "fourier":
        return complex(s * grid.c_grid**2)
    raise ValueError(f"unknown representation {rep!r}")


def multiplier(grid: Grid2D, fhat: np.ndarray, symbol, zero_mode=None) -> np.ndarray:
    """Apply a Fourier multiplier to hat-space data.

    `symbol` is either an (n, n) array or a callable (xi1, xi2) -> array.
    For homogeneous symbols the value at xi = 0 must be supplied via
    `zero_mode`; non-finite symbol values elsewhere are an error.
    """
    m = symbol(grid.xi1, grid.xi2) if callable(symbol) else np.asarray(symbol)
    m = m.astype(complex, copy=True) if zero_mode is not None else np.asarray(m, dtype=complex)
    if zero_mode is not None:
        m[..., 0, 0] = zero_mode
    if not np.all(np.isfinite(m)):
        bad = np.argwhere(~np.isfinite(m))[0]
        xi = (grid.xi1[bad[-2], bad[-1]], grid.xi2[bad[-2], bad[-1]])
        raise ValueError(f"multiplier symbol is not finite at xi={xi}")
    return fhat * m


def dealias(grid: Grid2D, f: np.ndarray, rep: str = "physical") -> np.ndarray:
    """Zero out the top third of the spectrum (apply after pointwise products)."""
    if rep == "physical":
        return inverse(grid, forward(grid, f) * grid.dealias_mask)
    return f * grid.dealias_mask


def band_limit(grid: Grid2D, f: np.ndarray, ximax: float, rep: str = "physical") -> np.ndarray:
    mask = grid.xiabs <= ximax
    if rep == "physical":
        return inverse(grid, forward(grid, f) * mask)
    return f * mask


def sobolev_weight(grid: Grid2D, s: float, variant: str = "bracket") -> np.ndarray:
    """Pointwise H^s weight on the frequency lattice.

    bracket: (1 + |xi|^2)^{s/2};  linear: (1 + |xi|)^s.  The linear variant is
    the one the scaling experiments integrate against.
    """
    if variant == "bracket":
        return (1.0 + grid.xiabs**2) ** (s / 2.0)
    if variant == "linear":
        return (1.0 + grid.xiabs) ** s
    raise ValueError(f"unknown sobolev weight variant {variant!r}")


def sobolev_norm(grid: Grid2D, f: np.ndarray, s: float, variant: str = "bracket",
                 rep: str = "physical") -> float:
    fhat = forward(grid, f) if rep == "physical" else f
    return l2_norm(grid, fhat * sobolev_weight(grid, s, variant), rep="fourier")


@dataclass
class ScalarField:
    """One complex field with an explicit representation tag."""

    grid: Grid2D
    values: np.ndarray
    rep: str = "physical"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n, self.grid.n):
            raise ValueError(
                f"field shape {self.values.shape} does not match grid n={self.grid.n}")
        if self.rep not in ("physical", "fourier"):
            raise ValueError(f"unknown representation {self.rep!r}")


@dataclass
class SpinorField:
    up: ScalarField
    down: ScalarField

    def __post_init__(self):
        if self.up.grid != self.down.grid:
            raise ValueError("spinor components must share one grid")
        if self.up.rep != self.down.rep:
            raise ValueError("spinor components must share one representation")

    @property
    def grid(self) -> Grid2D:
        return self.up.grid

    @property
    def rep(self) -> str:
        return self.up.rep

    def stack(self) -> np.ndarray:
        return np.stack([self.up.values, self.down.values])


def fft_forward(f):
    """ScalarField/SpinorField in physical representation -> fourier."""
    if isinstance(f, SpinorField):
        return SpinorField(fft_forward(f.up), fft_forward(f.down))
    if f.rep != "physical":
        raise ValueError("fft_forward expects a physical-representation field")
    return ScalarField(f.grid, forward(f.grid, f.values), rep="fourier")


def fft_inverse(f):
    if isinstance(f, SpinorField):
        return SpinorField(fft_inverse(f.up), fft_inverse(f.down))
    if f.rep != "fourier":
        raise ValueError("fft_inverse expects a fourier-representation field")
    return ScalarField(f.grid, inverse(f.grid, f.values), rep="physical")


def field_norm(f: ScalarField) -> float:
    return l2_norm(f.grid, f.values, rep=f.rep)


def field_inner(f: ScalarField, g: ScalarField) -> complex:
    if f.grid != g.grid:
        raise ValueError("inner product requires fields on one grid")
    if f.rep != g.rep:
        raise ValueError("inner product requires matching representations")
    return inner_product(f.grid, f.values, g.values, rep=f.rep)


def random_field(grid: Grid2D, rng: np.random.Generator, shape=(), band: float | None = None,
                 real: bool = False, norm: float | None = None) -> np.ndarray:
    """Seeded Gaussian field, optionally band-limited / real / L2-normalized."""
    full = tuple(shape) + (grid.n, grid.n)
    f = rng.standard_normal(full) + 1j * rng.standard_normal(full)
    if real:
        f = f.real.copy()
    if band is not None:
        f = band_limit(grid, f, band)
        if real:
            f = f.real.copy()
    if norm is not None:
        cur = np.sqrt(np.sum(np.abs(f) ** 2)) * grid.dx
        f = f * (norm / cur)
    return f
