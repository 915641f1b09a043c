"""Windowed space-time fields, their spectra, and time-grid propagators.

Conventions.  A field is sampled on uniform times t_k = t0 + k dt whose span
[t0, t0 + m dt) covers the support (-2T, 2T) of the cutoff rho.  The
space-time transform is

    u~(tau_l, xi) = dt * e^{-i tau_l t0} * DFT_k[rho_k * u_hat(t_k, xi)]_l,

with tau_l = 2*pi*fftfreq(m, dt) and u_hat the spatial transform of grid.py
(fft2 * dx^2).  Norms use the continuous Plancherel weight:

    st_norm(u)^2 = sum |u~|^2 dtau dxi^2 / (2 pi)^3
                 = sum_k dt rho_k^2 ||u(t_k)||_{L^2}^2   (exactly).

The window is the raised-cosine bump: 1 on |t| <= T, a half cosine ramp on
T <= |t| <= 2T, 0 outside.  Its transform has the closed form implemented in
`tukey_hat`, stable for all tau.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grid import Grid2D, forward

SQRT_2PI_CUBED = (2.0 * np.pi) ** 1.5


def tukey(t, T: float):
    """Window values: 1 on |t| <= T, cosine ramp to 0 at |t| = 2T."""
    if T <= 0:
        raise ValueError(f"window half-width must be positive, got {T}")
    a = np.abs(np.asarray(t, dtype=float))
    ramp = 0.5 * (1.0 + np.cos(np.pi * (a - T) / T))
    out = np.where(a <= T, 1.0, np.where(a <= 2 * T, ramp, 0.0))
    return out


def tukey_hat(tau, T: float):
    """Fourier transform of the window, integral convention e^{-i t tau}.

    Closed form (np.sinc is sin(pi x)/(pi x)):

        rho_hat(tau) = (3 pi T / 2) sinc(3 T tau / (2 pi))
                       * sinc((1 - T|tau|/pi) / 2) / (1 + T|tau|/pi)

    Checks: rho_hat(0) = 3T, rho_hat(pi/T) = -T/2, decay ~ tau^{-3}.
    """
    if T <= 0:
        raise ValueError(f"window half-width must be positive, got {T}")
    x = T * np.abs(np.asarray(tau, dtype=float)) / np.pi
    return (1.5 * np.pi * T) * np.sinc(1.5 * x) * np.sinc(0.5 * (1.0 - x)) / (1.0 + x)


def uniform_times(T: float, m: int) -> np.ndarray:
    """m samples t_k = -2T + k dt with dt = 4T/m (half-open cover of the support)."""
    if m < 4:
        raise ValueError(f"need at least 4 time samples, got {m}")
    dt = 4.0 * T / m
    return -2.0 * T + dt * np.arange(m)


def _check_times(times: np.ndarray, T: float) -> float:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 4:
        raise ValueError("times must be a 1d array with at least 4 samples")
    steps = np.diff(times)
    dt = steps[0]
    if dt <= 0 or not np.allclose(steps, dt, rtol=1e-9, atol=0.0):
        raise ValueError("times must be uniformly increasing")
    tol = 1e-9 * max(T, dt)
    if times[0] > -2.0 * T + tol or times[0] + times.size * dt < 2.0 * T - tol:
        raise ValueError(
            f"time samples [{times[0]}, {times[0] + times.size * dt}) do not cover "
            f"the window support (-{2 * T}, {2 * T})")
    return float(dt)


@dataclass
class SpaceTimeField:
    """Uniformly sampled field with a cached windowed spectrum.

    `frames` holds physical-space samples of shape (m, ..., n, n); it may be
    None when the object is built directly from a spectrum.
    """

    grid: Grid2D
    times: np.ndarray
    T: float
    frames: Optional[np.ndarray] = None
    _spectrum: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.dt = _check_times(self.times, self.T)
        if self.frames is None and self._spectrum is None:
            raise ValueError("provide frames or a spectrum")
        for arr in (self.frames, self._spectrum):
            if arr is None:
                continue
            if arr.shape[0] != self.times.size or arr.shape[-2:] != (self.grid.n, self.grid.n):
                raise ValueError(
                    f"sample array shape {arr.shape} does not match {self.times.size} "
                    f"times on a {self.grid.n}x{self.grid.n} grid")

    @classmethod
    def from_spectrum(cls, grid: Grid2D, times: np.ndarray, T: float,
                      spectrum: np.ndarray) -> "SpaceTimeField":
        return cls(grid, times, T, frames=None, _spectrum=np.asarray(spectrum, dtype=complex))

    @property
    def m(self) -> int:
        return self.times.size

    @property
    def taus(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.m, d=self.dt)

    @property
    def dtau(self) -> float:
        return 2.0 * np.pi / (self.m * self.dt)

    @property
    def window(self) -> np.ndarray:
        return tukey(self.times, self.T)

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            self._spectrum = self.compute_spectrum()
        return self._spectrum

    def compute_spectrum(self) -> np.ndarray:
        if self.frames is None:
            raise ValueError("no frames available to recompute the spectrum")
        shape = (self.m,) + (1,) * (self.frames.ndim - 1)
        rho = self.window.reshape(shape)
        hats = forward(self.grid, self.frames)
        phase = np.exp(-1j * self.taus * self.times[0]).reshape(shape)
        return self.dt * phase * np.fft.fft(rho * hats, axis=0)


def spacetime_spectrum(u: SpaceTimeField) -> np.ndarray:
    return u.spectrum


def st_norm(u: SpaceTimeField) -> float:
    s = u.spectrum
    total = np.sum(np.abs(s) ** 2) * u.dtau * u.grid.dxi**2
    return float(np.sqrt(total)) / SQRT_2PI_CUBED


def st_inner(u: SpaceTimeField, v: SpaceTimeField) -> complex:
    if u.grid is not v.grid and (u.grid.n != v.grid.n or u.grid.length != v.grid.length):
        raise ValueError("space-time inner product requires matching grids")
    if u.m != v.m or not np.allclose(u.times, v.times):
        raise ValueError("space-time inner product requires matching time samples")
    s = np.sum(u.spectrum * np.conjugate(v.spectrum)) * u.dtau * u.grid.dxi**2
    return complex(s / SQRT_2PI_CUBED**2)


def halfwave_frames(grid: Grid2D, fhat: np.ndarray, times: np.ndarray, s: int) -> np.ndarray:
    """Hat-space frames e^{-s i t_k D} fhat, stacked on a new leading axis."""
    if s not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {s}")
    times = np.asarray(times, dtype=float)
    phase = np.exp(-1j * s * times.reshape((-1,) + (1,) * fhat.ndim) * grid.xiabs)
    return phase * fhat[None]


def duhamel_frames(grid: Grid2D, times: np.ndarray, zero_index: int,
                   F_hat: np.ndarray, s: int) -> np.ndarray:
    """Trapezoid-in-time v(t_k) = int_0^{t_k} e^{-s i (t_k - t') D} F(t') dt'.

    F_hat has shape (m, ..., n, n) in hat space; times[zero_index] must be 0.
    The recursion v_k = P v_{k-1} + (dt/2)(P F_{k-1} + F_k) with
    P = e^{-s i dt D} runs upward from the zero index and its inverse runs
    downward, so each step costs one propagator application.
    """
    if s not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {s}")
    times = np.asarray(times, dtype=float)
    dt = float(times[1] - times[0])
    if abs(times[zero_index]) > 1e-12 * max(dt, 1.0):
        raise ValueError(f"times[{zero_index}] = {times[zero_index]} is not 0")
    if grid.ximax * dt > 0.5:
        warnings.warn(
            f"time step {dt} is coarse for max frequency {grid.ximax}; "
            "quadrature error may dominate", stacklevel=2)
    P = np.exp(-1j * s * dt * grid.xiabs)
    Pinv = np.conjugate(P)
    v = np.zeros_like(F_hat)
    half = 0.5 * dt
    for k in range(zero_index + 1, times.size):
        v[k] = P * v[k - 1] + half * (P * F_hat[k - 1] + F_hat[k])
    for k in range(zero_index - 1, -1, -1):
        v[k] = Pinv * (v[k + 1] - half * F_hat[k + 1]) - half * F_hat[k]
    return v
