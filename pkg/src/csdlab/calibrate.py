"""Frozen empirical constants and the deterministic oracles that produced them.

Every inequality check in the test suite uses a concrete constant.  Exact
constants (the resonance scan minimum 2/pi^2, the small-angle projection
limit 1/2, |sin t| <= t) come out of closed-form analysis and the scans here
reproduce them; measured ceilings (bilinear sweeps, energy report) carry a
5 percent safety factor over a seeded dev run.  `recompute_*` functions
rerun the oracles so drift is detectable.
"""
from __future__ import annotations

import numpy as np

from .besov import energy_report
from .grid import Grid2D
from .nullforms import resonance_ratio_scan, sandwich_ratio_scan
from .spacetime import uniform_times

FROZEN = {
    # modulation inequality: max|h| >= c * min(|xi1|,|xi2|) * theta^2;
    # scan minimum is 2/pi^2 (attained at antipodal directions), c = 0.9*min/3
    "interaction_c": 0.060792710185399314,
    # interpolated angle bounds theta <= C_p (max|h|/min|xi|)^p, C_p = pi^{1-2p} c^{-p}
    "interaction_interp": {0.0: 3.141592653589793,
                           0.25: 3.5695384145607942,
                           0.5: 4.055778675973723},
    # pointwise symbol ceilings: 1 - cos(t) <= t^2/2 and |sin t| <= t are exact
    "q0_c": 0.5,
    "qmunu_c": 1.0,
    # projection sandwich norm over angle; dense scan max approaches 1/2
    "sandwich_c": 0.52499999715625,
    # bilinear block sweep (seeded): max measured/bound ratio with 5% headroom
    "thm31_seed": 2024,
    "thm31_cemp": 0.06511680816745406,
    # strip null-form sweep
    "thm33_seed": 101,
    "thm33_cemp": 0.12141695430492294,
    "trend_slope_cap": 0.1,
    # linear energy inequality: max empirical constant over the seeded suite
    "energy_seed": 515151,
    "energy_cemp_ceiling": 1.4376228540841054,
    # small-data Picard fixture (grid 128^2, T = 0.25, M = 0, 128 frames);
    # d_l2[k] = max_t L2 distance between spinor iterates k+1 and k
    "picard_seed": 20240477,
    "picard_amplitude": 1e-2,
    "picard_band": 8.0,
    "picard_d_l2": [6.028037e-06, 4.206135e-09, 1.962884e-12,
                    1.200282e-15, 8.759512e-19],
    "picard_d4_over_d3": 0.0007297877201836318,
    "picard_charge_drift": 3.395e-10,
    # normalized Dirac residual at 128 frames and its ratio after doubling
    # the frame count; second-order time stepping gives 4 up to roundoff
    "picard_dirac_residual": 2.2724061406949157e-4,
    "picard_residual_ratio": 4.0002,
    "picard_realness_defect": 7.376e-9,
    # coarse fixture where iterate differences stay above the roundoff
    # floor, so the contraction-ratio chain d4/d3 <= d3/d2 is measurable
    "picard_coarse": {"n": 32, "band": 4.0, "amplitude": 0.3,
                      "m": 32, "T": 0.25},
    # second-iterate spectrum along the snapped family (eps = pi/8, k = 1..4):
    # resonant floor |F2| >= c * t * lambda on the return region (5% shaved)
    # and the mismatched-pair ceiling |F2_nr| <= c' * overlap / lambda (5% added)
    "f2_eps": 0.39269908169872414,
    "f2_wstar_c": 5.576909710860859,
    "f2_nonres_c": 0.12885674677504166,
    # cubic flow derivative along its snapped family (eps = 1/2, k = 2..5):
    # the mismatched outer-sign classes stay below c * eps * lambda^(s+1)
    # in H^s (5% added; measured 1.8905 at s = -1/4 and 1.8935 at s = 0)
    "cubic_eps": 0.5,
    "cubic_offres_c": 1.9881348075419734,
}


def recompute_interaction_c() -> float:
    return 0.9 * resonance_ratio_scan() / 3.0


def recompute_interaction_interp(c: float) -> dict:
    return {p: np.pi ** (1 - 2 * p) * c ** (-p) for p in (0.0, 0.25, 0.5)}


def recompute_sandwich_c() -> float:
    return 1.05 * sandwich_ratio_scan()


def recompute_f2_wstar_c(eps: float = FROZEN["f2_eps"], n: int = 48) -> float:
    from .illposed import RectSpec, second_iterate_spectrum, snap_lambda_family

    _, family = snap_lambda_family([256, 1024, 2304, 4096], eps)
    floor = np.inf
    for lam in family:
        r = np.sqrt(lam)
        u = (np.arange(n) + 0.5) / n * (4.0 * r) - 2.0 * r
        x1, x2 = np.meshgrid(u, u, indexing="ij")
        mask = RectSpec("Wstar", lam).indicator(x1, x2)
        vals = second_iterate_spectrum(lam, eps, x1[mask], x2[mask])
        floor = min(floor, float(np.min(np.abs(vals))) * np.sqrt(lam) / (eps * lam))
    return 0.95 * floor


def recompute_f2_nonres_c(eps: float = FROZEN["f2_eps"], n: int = 32) -> float:
    from .illposed import (SIGN_TRIPLES, _centered_lattice, f2_overlap_area,
                           second_iterate_spectrum, snap_lambda_family)

    mism = tuple(tp for tp in SIGN_TRIPLES if tp[1] != tp[2])
    _, family = snap_lambda_family([256, 1024, 2304, 4096], eps)
    ceil = 0.0
    for lam in family:
        r = np.sqrt(lam)
        g1, g2, _ = _centered_lattice(0.0, 2.0 * r, 2.0 * r, n)
        field = second_iterate_spectrum(lam, eps, g1, g2, triples=mism, rtol=1e-3)
        ov = f2_overlap_area(lam, g1, g2)
        live = ov > 0
        ceil = max(ceil, float(np.max(np.abs(field[live]) * lam / ov[live])))
    return 1.05 * ceil


def recompute_cubic_offres_c(eps: float = FROZEN["cubic_eps"],
                             mc_samples: int = 20000, n_xi: int = 24,
                             seed: int = 515151) -> float:
    """Ceiling constant for the mismatched outer-sign cubic classes.

    The class field is sampled once at the middle family member, measured
    in H^s for s in {-1/4, 0}, divided by eps * lam**(s+1), and the larger
    ratio is kept with five percent of headroom.
    """
    from .illposed import (CUBIC_TUPLE_CLASSES, _centered_lattice,
                           cubic_term_spectrum, hs_norm_lattice,
                           snap_lambda_family)

    ks, lams = snap_lambda_family([1400.0], eps)
    k, lam = ks[0], lams[0]
    r = np.sqrt(lam)
    g1, g2, cell = _centered_lattice(lam, 3.0 * r, 3.0 * r, n_xi)
    field, _ = cubic_term_spectrum(
        lam, eps, g1, g2, seed, mc_samples,
        tuples=CUBIC_TUPLE_CLASSES["outer_mismatch"], lam_key=k)
    ratios = [hs_norm_lattice(field, g1, g2, s, cell) / (eps * lam ** (s + 1.0))
              for s in (-0.25, 0.0)]
    return 1.05 * max(ratios)


def _continuum_sample(rng: np.random.Generator, kmax: int = 6):
    nmodes = 6
    ks = rng.integers(-kmax, kmax + 1, size=(nmodes, 2))
    amps = rng.normal(size=nmodes) + 1j * rng.normal(size=nmodes)
    omegas = rng.uniform(-3.0, 3.0, size=3)
    fks = rng.integers(-kmax, kmax + 1, size=(3, nmodes, 2))
    famps = rng.normal(size=(3, nmodes)) + 1j * rng.normal(size=(3, nmodes))
    return ks, amps, omegas, fks, famps


def _modes_on(grid: Grid2D, ks, amps) -> np.ndarray:
    f = np.zeros((grid.n, grid.n), dtype=complex)
    for (k1, k2), a in zip(ks, amps):
        f[int(k1) % grid.n, int(k2) % grid.n] += a
    return f


def energy_cemp_suite(seed: int, samples: int = 100, refine: int = 0,
                      s: float = 0.25, sign: int = 1, T: float = 0.5) -> float:
    """Max empirical energy constant over seeded band-limited continuum data.

    refine = 0 runs on a 32^2 grid with 64 time samples; refine = 1 doubles
    both.  The sampled data are fixed continuum objects (integer-frequency
    modes), so the maximum is comparable across resolutions.
    """
    grid = Grid2D(32 << refine, length=2 * np.pi)
    m = 64 << refine
    times = uniform_times(T, m)
    worst = 0.0
    for i in range(samples):
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        ks, amps, omegas, fks, famps = _continuum_sample(rng)
        fhat = _modes_on(grid, ks, amps)
        F = np.zeros((m, grid.n, grid.n), dtype=complex)
        for om, mk, ma in zip(omegas, fks, famps):
            F += np.exp(1j * om * times)[:, None, None] * _modes_on(grid, mk, ma)[None]
        _, _, c = energy_report(grid, fhat, F, times, s, sign, T)
        worst = max(worst, c)
    return worst
