"""Spectral laboratory for a coupled spinor-potential system on a periodic box.

Submodules
    grid        power-of-two grids, FFT conventions, Sobolev weights
    dirac       projection algebra, Riesz multipliers, half-wave propagators
    spacetime   windowed space-time fields and their discrete spectra
    besov       dyadic block decompositions, duality witness, energy report
    nullforms   interaction inequalities and block estimate sweeps
    picard      Duhamel time stepping and the small-data iteration
    illposed    rectangle data, oscillatory kernels, flow-derivative spectra
    calibrate   frozen empirical constants with recompute hooks
    reports     deterministic JSON / CSV / npz serialization
    cli         the `csd` command-line front-end
"""
from __future__ import annotations

__version__ = "0.1.0"
