"""Window transform oracle, spectra, Parseval, Duhamel recursion."""
from __future__ import annotations

import numpy as np
import pytest

from csdlab.grid import Grid2D, forward, inverse, l2_norm, random_field
from csdlab.spacetime import (
    SpaceTimeField,
    duhamel_frames,
    halfwave_frames,
    st_inner,
    st_norm,
    tukey,
    tukey_hat,
    uniform_times,
)


def window_hat_quadrature(tau: float, T: float, nodes: int = 200) -> float:
    # Gauss-Legendre oracle, split at t = T where the window loses smoothness
    x, w = np.polynomial.legendre.leggauss(nodes)
    total = 0.0
    for lo, hi in ((0.0, T), (T, 2 * T)):
        t = 0.5 * (hi - lo) * (x + 1.0) + lo
        vals = tukey(t, T) * np.cos(tau * t)
        total += 0.5 * (hi - lo) * float(np.sum(w * vals))
    return 2.0 * total


def test_window_values():
    T = 0.7
    assert tukey(0.0, T) == 1.0
    assert tukey(T, T) == 1.0
    assert tukey(-T, T) == 1.0
    assert abs(tukey(1.5 * T, T) - 0.5) < 1e-15
    assert tukey(2 * T, T) == 0.0
    assert tukey(5 * T, T) == 0.0
    with pytest.raises(ValueError):
        tukey(0.0, 0.0)


def test_window_hat_against_quadrature():
    for T in (0.25, 1.0):
        taus = np.concatenate([np.linspace(-60.0 / T, 60.0 / T, 101), [0.0]])
        for tau in taus:
            oracle = window_hat_quadrature(tau, T)
            assert abs(tukey_hat(tau, T) - oracle) < 1e-10 * max(1.0, 3 * T)


def test_window_hat_special_values():
    for T in (0.25, 0.5, 2.0):
        assert abs(tukey_hat(0.0, T) - 3.0 * T) < 1e-14
        assert abs(tukey_hat(np.pi / T, T) + 0.5 * T) < 1e-14
        assert abs(tukey_hat(-np.pi / T, T) + 0.5 * T) < 1e-14
    # cubic decay: |rho_hat| * tau^3 stays bounded
    T = 1.0
    taus = np.linspace(200, 2000, 50)
    bound = np.abs(tukey_hat(taus, T)) * taus**3
    assert np.max(bound) < 50.0


def test_times_and_coverage(grid, rng):
    T = 0.5
    times = uniform_times(T, 64)
    assert times[0] == -2 * T
    assert abs(times[1] - times[0] - 4 * T / 64) < 1e-15
    frames = random_field(grid, rng, shape=(64,))
    u = SpaceTimeField(grid, times, T, frames)
    assert u.m == 64
    # too-short span rejected
    with pytest.raises(ValueError, match="cover"):
        SpaceTimeField(grid, uniform_times(T, 64) * 0.5, T, frames)
    # nonuniform times rejected
    bad = times.copy()
    bad[3] += 1e-3
    with pytest.raises(ValueError, match="uniform"):
        SpaceTimeField(grid, bad, T, frames)


def test_separation_example(grid, rng):
    # time-independent field: spectrum = (discrete window hat) x (spatial hat)
    T = 0.5
    m = 1024
    times = uniform_times(T, m)
    f = random_field(grid, rng)
    u = SpaceTimeField(grid, times, T, np.broadcast_to(f, (m,) + f.shape).copy())
    rho_disc = u.dt * np.exp(-1j * u.taus * times[0]) * np.fft.fft(u.window)
    expect = rho_disc[:, None, None] * forward(grid, f)[None]
    assert np.max(np.abs(u.spectrum - expect)) < 1e-12 * np.max(np.abs(expect))
    # the discrete window transform tracks the closed form on resolved modes
    keep = np.abs(u.taus) < 50.0
    assert np.max(np.abs(rho_disc[keep] - tukey_hat(u.taus[keep], T))) < 1e-6


def test_free_wave_concentration(grid):
    T = 1.0
    m = 256
    times = uniform_times(T, m)
    fhat = np.zeros((grid.n, grid.n), dtype=complex)
    fhat[3, grid.n - 2] = 1.0  # xi0 = (3, -2)
    xi0 = np.hypot(3.0, 2.0)
    frames = inverse(grid, halfwave_frames(grid, fhat, times, 1))
    u = SpaceTimeField(grid, times, T, frames)
    line = np.abs(u.spectrum[:, 3, grid.n - 2])
    peak = int(np.argmax(line))
    assert abs(u.taus[peak] + xi0) <= 0.5 * u.dtau * 1.001
    # off the peak the profile follows the window transform
    far = np.abs(u.taus + xi0) > 20.0
    assert np.max(line[far]) < 0.05 * line[peak]
    # all other spatial modes silent
    mask = np.ones_like(u.spectrum, dtype=bool)
    mask[:, 3, grid.n - 2] = False
    assert np.max(np.abs(u.spectrum[mask])) < 1e-12


def test_exact_parseval(grid, rng):
    T = 0.5
    m = 48
    times = uniform_times(T, m)
    frames = random_field(grid, rng, shape=(m,))
    u = SpaceTimeField(grid, times, T, frames)
    rho = u.window
    direct = sum(u.dt * rho[k] ** 2 * l2_norm(grid, frames[k]) ** 2 for k in range(m))
    assert abs(st_norm(u) ** 2 - direct) < 1e-12 * direct
    assert abs(st_inner(u, u).real - st_norm(u) ** 2) < 1e-12 * direct
    assert abs(st_inner(u, u).imag) < 1e-12 * direct


def test_spectrum_linearity(grid, rng):
    T = 0.5
    m = 32
    times = uniform_times(T, m)
    fa = random_field(grid, rng, shape=(m,))
    fb = random_field(grid, rng, shape=(m,))
    ua = SpaceTimeField(grid, times, T, fa)
    ub = SpaceTimeField(grid, times, T, fb)
    uc = SpaceTimeField(grid, times, T, 2.0 * fa + 3j * fb)
    lin = 2.0 * ua.spectrum + 3j * ub.spectrum
    scale = np.max(np.abs(lin))
    assert np.max(np.abs(uc.spectrum - lin)) < 1e-10 * scale


def test_spinor_frames_supported(grid, rng):
    T = 0.5
    m = 32
    times = uniform_times(T, m)
    frames = random_field(grid, rng, shape=(m, 2))
    u = SpaceTimeField(grid, times, T, frames)
    assert u.spectrum.shape == (m, 2, grid.n, grid.n)


def test_halfwave_frames_phase(grid, rng):
    fhat = forward(grid, random_field(grid, rng))
    times = np.array([0.0, 0.2, 0.9])
    fr = halfwave_frames(grid, fhat, times, -1)
    assert np.allclose(fr[0], fhat)
    expect = np.exp(1j * 0.9 * grid.xiabs) * fhat
    assert np.allclose(fr[2], expect)


def test_duhamel_resonant_forcing(grid, rng):
    # forcing along the flow integrates to t x phase exactly
    T = 0.25
    m = 64
    times = uniform_times(T, m)
    zero = m // 2
    assert times[zero] == 0.0
    ghat = forward(grid, random_field(grid, rng, band=8.0))
    for s in (1, -1):
        F = halfwave_frames(grid, ghat, times, s)
        v = duhamel_frames(grid, times, zero, F, s)
        expect = times[:, None, None] * F
        assert np.max(np.abs(v - expect)) < 1e-12 * np.max(np.abs(expect))


def test_duhamel_matches_direct_trapezoid(grid, rng):
    # recursion reproduces the O(m^2) composite rule on generic forcing
    T = 0.25
    m = 32
    times = uniform_times(T, m)
    zero = m // 2
    F = forward(grid, random_field(grid, rng, shape=(m,), band=8.0))
    s = 1
    v = duhamel_frames(grid, times, zero, F, s)
    dt = times[1] - times[0]
    for k in (0, 5, zero, zero + 1, m - 1):
        if k == zero:
            expect = np.zeros_like(F[0])
        elif k > zero:
            acc = np.zeros_like(F[0])
            for j in range(zero, k):
                pa = np.exp(-1j * s * (times[k] - times[j]) * grid.xiabs)
                pb = np.exp(-1j * s * (times[k] - times[j + 1]) * grid.xiabs)
                acc += 0.5 * dt * (pa * F[j] + pb * F[j + 1])
            expect = acc
        else:
            acc = np.zeros_like(F[0])
            for j in range(k, zero):
                pa = np.exp(-1j * s * (times[k] - times[j]) * grid.xiabs)
                pb = np.exp(-1j * s * (times[k] - times[j + 1]) * grid.xiabs)
                acc -= 0.5 * dt * (pa * F[j] + pb * F[j + 1])
            expect = acc
        assert np.max(np.abs(v[k] - expect)) < 1e-11


def test_duhamel_coarse_step_warns(rng):
    big = Grid2D(64, length=2 * np.pi)
    times = np.linspace(-1.0, 1.0, 9)
    F = np.zeros((9, 64, 64), dtype=complex)
    with pytest.warns(UserWarning, match="coarse"):
        duhamel_frames(big, times, 4, F, 1)
