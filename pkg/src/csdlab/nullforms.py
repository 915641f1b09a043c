"""Angle geometry, null forms, Whitney covers, and bilinear measurement engines.

Geometry conventions.  theta(xi1, xi2, s1, s2) is the angle in [0, pi]
between s1*xi1 and s2*xi2.  Modulations use h = tau + s|xi|, matching the
dyadic shells of besov.py.  A bilinear interaction ties X0 = X1 - X2.

Measurement engines work on a dedicated integer lattice (unit frequency
spacings, 256 time modes, 64^2 spatial modes) where convolution is exact
integer index arithmetic: output points are labeled by float shell
arithmetic, never wrapped, so block masses are honest.  Block fills are
sparse (at most `max_fill` lattice points), which keeps measured ratios
genuine lower bounds for the operator norms they probe.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .besov import shell_exponent
from .dirac import ALPHA, projection, riesz
from .grid import Grid2D, dealias, forward, inverse
from .spacetime import SpaceTimeField


# ---------------------------------------------------------------------------
# angles and interactions


def theta(xi1, xi2, s1, s2) -> np.ndarray:
    """Angle in [0, pi] between s1*xi1 and s2*xi2, vectorized over rows.

    Uses atan2(|cross|, dot), which stays accurate near 0 and pi where the
    arccos of a clipped cosine loses half the working precision.
    """
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    n1 = np.hypot(xi1[..., 0], xi1[..., 1])
    n2 = np.hypot(xi2[..., 0], xi2[..., 1])
    if np.any(n1 == 0.0) or np.any(n2 == 0.0):
        raise ValueError("angle undefined for a zero frequency")
    ss = np.asarray(s1) * np.asarray(s2)
    dot = xi1[..., 0] * xi2[..., 0] + xi1[..., 1] * xi2[..., 1]
    cross = xi1[..., 0] * xi2[..., 1] - xi1[..., 1] * xi2[..., 0]
    return np.arctan2(np.abs(cross), ss * dot)


@dataclass(frozen=True)
class Interaction:
    """One (tau, xi) triple with X0 = X1 - X2 or X0 = X1 + X2."""

    tau1: float
    xi1: tuple
    tau2: float
    xi2: tuple
    signs: tuple
    relation: str = "difference"

    def __post_init__(self) -> None:
        if self.relation not in ("difference", "sum"):
            raise ValueError(f"relation must be 'difference' or 'sum', got {self.relation!r}")
        if len(self.signs) != 3 or any(s not in (1, -1) for s in self.signs):
            raise ValueError(f"signs must be three values in {{+1, -1}}, got {self.signs}")

    @property
    def tau0(self) -> float:
        return self.tau1 - self.tau2 if self.relation == "difference" else self.tau1 + self.tau2

    @property
    def xi0(self) -> tuple:
        f = -1.0 if self.relation == "difference" else 1.0
        return (self.xi1[0] + f * self.xi2[0], self.xi1[1] + f * self.xi2[1])


def modulations(inter: Interaction) -> tuple:
    """h_j = tau_j + s_j |xi_j| for j = 0, 1, 2."""
    out = []
    for s, tau, xi in ((inter.signs[0], inter.tau0, inter.xi0),
                       (inter.signs[1], inter.tau1, inter.xi1),
                       (inter.signs[2], inter.tau2, inter.xi2)):
        r = np.hypot(xi[0], xi[1])
        if r == 0.0:
            raise ValueError("modulation undefined for a zero frequency")
        out.append(float(tau + s * r))
    return tuple(out)


def sample_interactions(rng: np.random.Generator, count: int):
    """Random difference interactions in three families.

    A third of the samples carry generic random modulations, a third sit
    exactly on the cones h1 = h2 = 0, and a third use the adversarial split
    h0 = r/3, h1 = -r/3, h2 = r/3 that minimizes max|h_j| for the resonance
    value r = s0|xi1 - xi2| - s1|xi1| + s2|xi2|.
    """
    scale = np.exp(rng.uniform(np.log(0.1), np.log(100.0), size=(count, 2)))
    ang = rng.uniform(0.0, 2 * np.pi, size=(count, 2))
    xi1 = scale[:, :1] * np.stack([np.cos(ang[:, 0]), np.sin(ang[:, 0])], axis=1)
    xi2 = scale[:, 1:] * np.stack([np.cos(ang[:, 1]), np.sin(ang[:, 1])], axis=1)
    signs = rng.choice([-1, 1], size=(count, 3))
    n1 = np.hypot(xi1[:, 0], xi1[:, 1])
    n2 = np.hypot(xi2[:, 0], xi2[:, 1])
    n0 = np.hypot(xi1[:, 0] - xi2[:, 0], xi1[:, 1] - xi2[:, 1])
    bad = n0 == 0.0
    xi1[bad] *= 1.5
    n1[bad] *= 1.5
    n0 = np.hypot(xi1[:, 0] - xi2[:, 0], xi1[:, 1] - xi2[:, 1])
    r = signs[:, 0] * n0 - signs[:, 1] * n1 + signs[:, 2] * n2
    tau1 = np.empty(count)
    tau2 = np.empty(count)
    third = count // 3
    # generic
    tau1[:third] = rng.normal(scale=10.0, size=third)
    tau2[:third] = rng.normal(scale=10.0, size=third)
    # on-cone
    sl = slice(third, 2 * third)
    tau1[sl] = -signs[sl, 1] * n1[sl]
    tau2[sl] = -signs[sl, 2] * n2[sl]
    # equal-split minimizer of max|h|: h0 = r/3, h1 = -r/3, h2 = r/3
    sl = slice(2 * third, count)
    tau1[sl] = -r[sl] / 3.0 - signs[sl, 1] * n1[sl]
    tau2[sl] = r[sl] / 3.0 - signs[sl, 2] * n2[sl]
    return tau1, xi1, tau2, xi2, signs


def interaction_inequality_check(tau1, xi1, tau2, xi2, signs, c: float,
                                 interp_constants: dict) -> dict:
    """Count violations of the modulation inequality and its interpolates.

    Main check: max(|h0|, |h1|, |h2|) >= c * min(|xi1|, |xi2|) * theta^2.
    Interpolated checks: theta <= C_p * (max|h| / min|xi|)^p for each
    (p, C_p) in `interp_constants`.
    """
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    signs = np.asarray(signs)
    n1 = np.hypot(xi1[:, 0], xi1[:, 1])
    n2 = np.hypot(xi2[:, 0], xi2[:, 1])
    x0 = xi1 - xi2
    n0 = np.hypot(x0[:, 0], x0[:, 1])
    if np.any(n0 == 0.0) or np.any(n1 == 0.0) or np.any(n2 == 0.0):
        raise ValueError("degenerate interaction with a zero frequency")
    h0 = (np.asarray(tau1) - np.asarray(tau2)) + signs[:, 0] * n0
    h1 = np.asarray(tau1) + signs[:, 1] * n1
    h2 = np.asarray(tau2) + signs[:, 2] * n2
    hmax = np.maximum(np.abs(h0), np.maximum(np.abs(h1), np.abs(h2)))
    th = theta(xi1, xi2, signs[:, 1], signs[:, 2])
    nmin = np.minimum(n1, n2)
    report = {"main": int(np.sum(hmax < c * nmin * th**2))}
    for p, Cp in interp_constants.items():
        report[f"p={p}"] = int(np.sum(th > Cp * (hmax / nmin) ** p))
    return report


def resonance_ratio_scan(ratios=None, thetas=None) -> float:
    """Deterministic scan of |r| / (min(|xi1|,|xi2|) theta^2) over geometry.

    r = s0|xi1 - xi2| - s1|xi1| + s2|xi2| with |xi1| = 1, |xi2| = b <= 1;
    the worst max|h| over admissible taus is |r|/3, so a frozen constant
    c = margin * scan_min / 3 makes the inequality hold on the scan family.
    """
    if ratios is None:
        ratios = np.concatenate([np.logspace(-3, 0, 121), [1.0]])
    if thetas is None:
        thetas = np.concatenate([np.logspace(-4, np.log10(np.pi), 600), [np.pi]])
    b = ratios[None, :, None]
    th = thetas[:, None, None]
    best = np.inf
    for s1 in (1, -1):
        for s2 in (1, -1):
            # direction of s1 xi1 fixed at (1,0); s2 xi2 at angle theta
            u = np.array([1.0, 0.0])
            xi1 = s1 * u
            v1 = s2 * b * np.cos(th)
            v2 = s2 * b * np.sin(th)
            d = np.hypot(xi1[0] - v1, xi1[1] - v2)
            for s0 in (1, -1):
                r = s0 * d - s1 * 1.0 + s2 * b  # |xi1| = 1, |xi2| = b
                denom = np.minimum(1.0, b) * th**2
                best = min(best, float(np.min(np.abs(r) / denom)))
    return best


# ---------------------------------------------------------------------------
# angular sectors and Whitney covers


def omega_set(gamma: float) -> np.ndarray:
    """Uniform angular lattice of ceil(2 pi / gamma) unit vectors."""
    if not 0.0 < gamma <= np.pi:
        raise ValueError(f"angular radius must lie in (0, pi], got {gamma}")
    m = int(np.ceil(2 * np.pi / gamma))
    ang = 2 * np.pi * np.arange(m) / m
    return np.stack([np.cos(ang), np.sin(ang)], axis=1)


def angular_distance(a, b) -> np.ndarray:
    d = np.mod(np.asarray(a) - np.asarray(b) + np.pi, 2 * np.pi) - np.pi
    return np.abs(d)


def sector_indicator(grid: Grid2D, omega, gamma: float, sign: int,
                     closed: bool = True) -> np.ndarray:
    """Indicator of angle(sign * xi, omega) within gamma; zero mode excluded.

    `closed` uses the inclusive cutoff <= gamma; the half-open variant keeps
    the signed offset in [-gamma, gamma), which makes overlap counts exact
    when gamma divides 2 pi.
    """
    ang = np.arctan2(sign * grid.xi2, sign * grid.xi1)
    center = np.arctan2(omega[1], omega[0])
    off = np.mod(ang - center + np.pi, 2 * np.pi) - np.pi
    if closed:
        mask = np.abs(off) <= gamma
    else:
        mask = (off >= -gamma) & (off < gamma)
    mask = mask.copy()
    mask[0, 0] = False
    return mask


def sector_project(grid: Grid2D, f: np.ndarray, omega, gamma: float, sign: int,
                   rep: str = "physical", closed: bool = True) -> np.ndarray:
    mask = sector_indicator(grid, omega, gamma, sign, closed)
    if rep == "fourier":
        return f * mask
    return inverse(grid, forward(grid, f) * mask)


def strip_indicator(grid: Grid2D, omega, r: float) -> np.ndarray:
    perp = grid.xi1 * (-omega[1]) + grid.xi2 * omega[0]
    return np.abs(perp) <= r


def strip_project(grid: Grid2D, f: np.ndarray, omega, r: float,
                  rep: str = "physical") -> np.ndarray:
    mask = strip_indicator(grid, omega, r)
    if rep == "fourier":
        return f * mask
    return inverse(grid, forward(grid, f) * mask)


def whitney_cover_check(gamma: float, k: int, count: int,
                        rng: np.random.Generator) -> int:
    """Violations of the sector-cover property on random narrow-angle pairs.

    For pairs with angle(xi1, xi2) <= k gamma there must exist lattice
    directions omega1, omega2 with each xi_i inside its gamma-sector and
    angle(omega1, omega2) <= (k + 2) gamma.  The search is exhaustive over
    the direction lattice.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"need 0 < gamma < 1, got {gamma}")
    omegas = omega_set(gamma)
    oang = np.arctan2(omegas[:, 1], omegas[:, 0])
    pairok = angular_distance(oang[:, None], oang[None, :]) <= (k + 2) * gamma
    a1 = rng.uniform(0.0, 2 * np.pi, size=count)
    # include the boundary separation k*gamma exactly in a slice of samples
    delta = rng.uniform(-k * gamma, k * gamma, size=count)
    delta[: count // 100 + 1] = k * gamma
    a2 = a1 + delta
    m1 = angular_distance(a1[:, None], oang[None, :]) <= gamma
    m2 = angular_distance(a2[:, None], oang[None, :]) <= gamma
    reach = m1.astype(np.float32) @ pairok.astype(np.float32)
    found = np.any((reach > 0.5) & m2, axis=1)
    return int(np.sum(~found))


# ---------------------------------------------------------------------------
# null forms from Riesz products


def qform(grid: Grid2D, f1: np.ndarray, f2: np.ndarray, mu: int, nu: int,
          s1: int, s2: int, dealias_product: bool = True) -> np.ndarray:
    """Q^{mu nu}(f1, f2) = R^mu f1 R^nu f2 - R^nu f1 R^mu f2 on physical arrays."""
    a = riesz(grid, f1, mu, s1) * riesz(grid, f2, nu, s2)
    b = riesz(grid, f1, nu, s1) * riesz(grid, f2, mu, s2)
    out = a - b
    return dealias(grid, out) if dealias_product else out


def q0form(grid: Grid2D, f1: np.ndarray, f2: np.ndarray, s1: int, s2: int,
           dealias_product: bool = True) -> np.ndarray:
    """Q^0(f1, f2) = R^mu f1 R_mu f2 with the (+,-,-) index lowering."""
    out = riesz(grid, f1, 0, s1) * riesz(grid, f2, 0, s2)
    for j in (1, 2):
        out = out - riesz(grid, f1, j, s1) * riesz(grid, f2, j, s2)
    return dealias(grid, out) if dealias_product else out


def q0_symbol(xi1, xi2, s1, s2) -> np.ndarray:
    return 1.0 - np.cos(theta(xi1, xi2, s1, s2))


def _unit_directions(xi1, xi2, s1, s2):
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    s1 = np.asarray(s1)[..., None]
    s2 = np.asarray(s2)[..., None]
    u = s1 * xi1 / np.hypot(xi1[..., 0], xi1[..., 1])[..., None]
    v = s2 * xi2 / np.hypot(xi2[..., 0], xi2[..., 1])[..., None]
    return u, v


def q12_symbol(xi1, xi2, s1, s2) -> np.ndarray:
    u, v = _unit_directions(xi1, xi2, s1, s2)
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def q0j_symbol(xi1, xi2, s1, s2, j: int) -> np.ndarray:
    u, v = _unit_directions(xi1, xi2, s1, s2)
    return v[..., j - 1] - u[..., j - 1]


def sandwich_matrices(xi1, xi2, mu: int, s1: int, s2: int) -> np.ndarray:
    """P_{s1}(xi1) P_{-s2}(xi2) alpha^mu P_{s2}(xi2), batched over rows."""
    P1 = projection(xi1, s1)
    Pm = projection(xi2, -s2)
    P2 = projection(xi2, s2)
    a = ALPHA[mu]
    inner = np.einsum("...ab,bc,...cd->...ad", Pm, a, P2)
    return np.einsum("...ab,...bc->...ac", P1, inner)


def two_norm_2x2(m: np.ndarray) -> np.ndarray:
    """Spectral norm of a batch of 2x2 complex matrices, closed form."""
    g00 = np.abs(m[..., 0, 0]) ** 2 + np.abs(m[..., 1, 0]) ** 2
    g11 = np.abs(m[..., 0, 1]) ** 2 + np.abs(m[..., 1, 1]) ** 2
    t = g00 + g11
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    disc = np.sqrt(np.maximum(t**2 - 4.0 * np.abs(det) ** 2, 0.0))
    return np.sqrt(0.5 * (t + disc))


def symbol_bound_checks(count: int, rng: np.random.Generator,
                        constants: dict) -> dict:
    """Violation counts for the pointwise symbol bounds on random directions.

    constants: {"q0": c0, "qmunu": c1, "sandwich": c2} with bounds
    |Q^0 symbol| <= c0 theta^2, |Q^{mu nu} symbol| <= c1 theta,
    ||sandwich|| <= c2 theta (and the mu = 0 sandwich vanishes).
    """
    ang = rng.uniform(0.0, 2 * np.pi, size=(count, 2))
    rad = np.exp(rng.uniform(np.log(0.1), np.log(50.0), size=(count, 2)))
    xi1 = rad[:, :1] * np.stack([np.cos(ang[:, 0]), np.sin(ang[:, 0])], axis=1)
    xi2 = rad[:, 1:] * np.stack([np.cos(ang[:, 1]), np.sin(ang[:, 1])], axis=1)
    s1 = rng.choice([-1, 1], size=count)
    s2 = rng.choice([-1, 1], size=count)
    th = theta(xi1, xi2, s1, s2)
    report = {
        "q0": int(np.sum(np.abs(q0_symbol(xi1, xi2, s1, s2))
                         > constants["q0"] * th**2 + 1e-14)),
        "q12": int(np.sum(np.abs(q12_symbol(xi1, xi2, s1, s2))
                          > constants["qmunu"] * th + 1e-14)),
    }
    for j in (1, 2):
        report[f"q0{j}"] = int(np.sum(np.abs(q0j_symbol(xi1, xi2, s1, s2, j))
                                      > constants["qmunu"] * th + 1e-14))
    worst0 = 0.0
    viol = 0
    for mu in (1, 2):
        nrm = two_norm_2x2(sandwich_matrices(xi1, xi2, mu, s1, s2))
        viol += int(np.sum(nrm > constants["sandwich"] * th + 1e-14))
    m0 = two_norm_2x2(sandwich_matrices(xi1, xi2, 0, s1, s2))
    worst0 = float(np.max(m0))
    report["sandwich"] = viol
    report["sandwich_mu0_max"] = worst0
    return report


def sandwich_ratio_scan(nphi: int = 720) -> float:
    """Max of ||sandwich|| / theta over a dense direction grid, both mu, all signs."""
    phi1 = np.linspace(0.0, 2 * np.pi, nphi, endpoint=False)
    deltas = np.concatenate([np.logspace(-4, np.log10(np.pi), 200), [np.pi]])
    p1, dd = np.meshgrid(phi1, deltas, indexing="ij")
    p2 = p1 + dd
    best = 0.0
    for s1 in (1, -1):
        for s2 in (1, -1):
            # directions of the raw frequencies; the angle weight uses the signs
            xi1 = np.stack([np.cos(p1), np.sin(p1)], axis=-1).reshape(-1, 2)
            xi2 = np.stack([np.cos(p2), np.sin(p2)], axis=-1).reshape(-1, 2)
            th = theta(xi1, xi2, s1, s2)
            keep = th > 1e-9
            for mu in (1, 2):
                nrm = two_norm_2x2(sandwich_matrices(xi1[keep], xi2[keep], mu, s1, s2))
                best = max(best, float(np.max(nrm / th[keep])))
    return best


# ---------------------------------------------------------------------------
# divergence/curl split and the magnetic potential identity


def _divcurl_hats(grid: Grid2D, A1h: np.ndarray, A2h: np.ndarray):
    e1, e2 = grid.xi1, grid.xi2
    inv = 1.0 / grid.xiabs_safe**2
    curl = e1 * A2h - e2 * A1h
    df1 = -e2 * curl * inv
    df2 = e1 * curl * inv
    df1[0, 0] = 0.0
    df2[0, 0] = 0.0
    return df1, df2, curl


def divcurl_split(grid: Grid2D, A1: np.ndarray, A2: np.ndarray, rep: str = "physical"):
    """Split A into divergence-free and curl-free parts; zero mode goes to cf."""
    A1h = A1 if rep == "fourier" else forward(grid, A1)
    A2h = A2 if rep == "fourier" else forward(grid, A2)
    df1, df2, _ = _divcurl_hats(grid, A1h, A2h)
    cf1 = A1h - df1
    cf2 = A2h - df2
    if rep == "fourier":
        return df1, df2, cf1, cf2
    return (inverse(grid, df1), inverse(grid, df2),
            inverse(grid, cf1), inverse(grid, cf2))


def bfield(grid: Grid2D, A1: np.ndarray, A2: np.ndarray, sign: int,
           rep: str = "physical") -> np.ndarray:
    """Scalar potential B_s with hat s (xi_1 A2 - xi_2 A1)/|xi| (0 at xi = 0)."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    A1h = A1 if rep == "fourier" else forward(grid, A1)
    A2h = A2 if rep == "fourier" else forward(grid, A2)
    bh = sign * (grid.xi1 * A2h - grid.xi2 * A1h) / grid.xiabs_safe
    bh[0, 0] = 0.0
    return bh if rep == "fourier" else inverse(grid, bh)


# ---------------------------------------------------------------------------
# measurement lattice and sparse convolution engines

MEAS_TIME = 256   # tau = integer in [-128, 128)
MEAS_SPACE = 64   # xi = integer pair in [-32, 32)^2


@dataclass
class BlockPoints:
    """Sparse spectrum points on the measurement lattice (signed integers)."""

    taus: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    vals: np.ndarray

    def mass(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.vals) ** 2) / (2 * np.pi) ** 3))


def block_lattice_points(N: int, L: int, sign: int,
                         spatial_mask: np.ndarray | None = None):
    """Integer lattice points of the block: |xi| in the N-shell, |h| in the L-shell."""
    if spatial_mask is None:
        return _plain_block_points(N, L, sign)
    return _block_points_impl(N, L, sign, spatial_mask)


def _block_points_impl(N: int, L: int, sign: int, spatial_mask):
    half_s = MEAS_SPACE // 2
    half_t = MEAS_TIME // 2
    ks = np.arange(-half_s, half_s)
    K1, K2 = np.meshgrid(ks, ks, indexing="ij")
    r = np.hypot(K1, K2)
    mask = shell_exponent(r) == int(np.log2(N))
    if spatial_mask is not None:
        mask &= spatial_mask
    k1 = K1[mask]
    k2 = K2[mask]
    rr = r[mask]
    ls = np.arange(-half_t, half_t)
    h = ls[None, :] + sign * rr[:, None]
    ok = shell_exponent(np.abs(h)) == int(np.log2(L))
    pi, li = np.nonzero(ok)
    return ls[li], k1[pi], k2[pi]


_BLOCK_CACHE: dict = {}


def _plain_block_points(N: int, L: int, sign: int):
    key = (N, L, sign)
    if key not in _BLOCK_CACHE:
        _BLOCK_CACHE[key] = _block_points_impl(N, L, sign, None)
    return _BLOCK_CACHE[key]


def random_block_points(N: int, L: int, sign: int, rng: np.random.Generator,
                        max_fill: int = 512,
                        spatial_mask: np.ndarray | None = None) -> BlockPoints:
    taus, k1, k2 = block_lattice_points(N, L, sign, spatial_mask)
    if taus.size == 0:
        raise ValueError(f"block N={N}, L={L}, sign={sign} is empty on the lattice")
    if taus.size > max_fill:
        pick = rng.choice(taus.size, size=max_fill, replace=False)
        taus, k1, k2 = taus[pick], k1[pick], k2[pick]
    vals = rng.normal(size=taus.size) + 1j * rng.normal(size=taus.size)
    pts = BlockPoints(taus, k1, k2, vals)
    pts.vals = pts.vals / pts.mass()
    return pts


def sparse_product_spectrum(p1: BlockPoints, p2: BlockPoints, difference: bool,
                            conj2: bool, angle_signs: tuple | None = None):
    """All-pairs convolution; returns unique output points and amplitudes.

    Amplitudes carry the (2 pi)^{-3} dtau dxi^2 convolution measure of the
    unit-spacing lattice.  With `angle_signs` = (s1, s2) each pair is
    weighted by the angle between s1 xi1 and s2 xi2 (zero frequencies weigh 0).
    """
    f = -1 if difference else 1
    t0 = (p1.taus[:, None] + f * p2.taus[None, :]).ravel()
    k1 = (p1.k1[:, None] + f * p2.k1[None, :]).ravel()
    k2 = (p1.k2[:, None] + f * p2.k2[None, :]).ravel()
    v2 = np.conjugate(p2.vals) if conj2 else p2.vals
    vals = (p1.vals[:, None] * v2[None, :]).ravel() / (2 * np.pi) ** 3
    if angle_signs is not None:
        s1, s2 = angle_signs
        n1 = np.hypot(p1.k1, p1.k2)[:, None]
        n2 = np.hypot(p2.k1, p2.k2)[None, :]
        dot = (p1.k1[:, None] * p2.k1[None, :] + p1.k2[:, None] * p2.k2[None, :])
        cross = (p1.k1[:, None] * p2.k2[None, :] - p1.k2[:, None] * p2.k1[None, :])
        w = np.where((n1 * n2) > 0,
                     np.arctan2(np.abs(cross), s1 * s2 * dot), 0.0)
        vals = vals * w.ravel()
    # coherent accumulation at identical output points
    span_t = 2 * MEAS_TIME
    span_s = 2 * MEAS_SPACE
    lin = ((t0 + MEAS_TIME) * span_s + (k1 + MEAS_SPACE)) * span_s + (k2 + MEAS_SPACE)
    uniq, inv = np.unique(lin, return_inverse=True)
    amps = np.bincount(inv, weights=vals.real, minlength=uniq.size).astype(complex)
    amps += 1j * np.bincount(inv, weights=vals.imag, minlength=uniq.size)
    ut = uniq // (span_s * span_s) - MEAS_TIME
    rem = uniq % (span_s * span_s)
    uk1 = rem // span_s - MEAS_SPACE
    uk2 = rem % span_s - MEAS_SPACE
    return ut, uk1, uk2, amps


def product_block_masses(p1: BlockPoints, p2: BlockPoints) -> dict:
    """Block masses of P_{K0}(u1 conj(u2)) for every output block, both output signs."""
    ut, uk1, uk2, amps = sparse_product_spectrum(p1, p2, difference=True, conj2=True)
    r = np.hypot(uk1, uk2)
    kN = shell_exponent(r)
    power = np.abs(amps) ** 2 / (2 * np.pi) ** 3
    out = {}
    for s0 in (1, -1):
        kL = shell_exponent(np.abs(ut + s0 * r))
        nL = int(kL.max()) + 1
        lab = kN * nL + kL
        sq = np.bincount(lab, weights=power)
        for idx in np.nonzero(sq)[0]:
            out[(s0, 2 ** int(idx // nL), 2 ** int(idx % nL))] = float(np.sqrt(sq[idx]))
    return out


def thm31_bounds(N0: int, L0: int, N1: int, L1: int, N2: int, L2: int) -> tuple:
    """The three theoretical constants; the estimate uses their minimum."""
    nmin012 = min(N0, N1, N2)
    c1 = (nmin012 * min(L1, L2)) ** 0.5 * (min(N1, N2) * max(L1, L2)) ** 0.25
    c2 = []
    for Lj, Nj in ((L1, N1), (L2, N2)):
        c2.append((nmin012 * min(L0, Lj)) ** 0.5 * (min(N0, Nj) * max(L0, Lj)) ** 0.25)
    c3 = (nmin012**2 * min(L0, L1, L2)) ** 0.5
    return c1, c2[0], c2[1], c3


def bilinear_constant_measure(N1: int, L1: int, s1: int, N2: int, L2: int, s2: int,
                              rng: np.random.Generator, max_fill: int = 512) -> list:
    """Measured-to-theory rows for one input block pair, all output blocks."""
    p1 = random_block_points(N1, L1, s1, rng, max_fill)
    p2 = random_block_points(N2, L2, s2, rng, max_fill)
    rows = []
    for (s0, N0, L0), mass in product_block_masses(p1, p2).items():
        bounds = thm31_bounds(N0, L0, N1, L1, N2, L2)
        rows.append({
            "N0": N0, "L0": L0, "s0": s0,
            "N1": N1, "L1": L1, "s1": s1,
            "N2": N2, "L2": L2, "s2": s2,
            "measured": mass,
            "bound": min(bounds),
            "ratio": mass / min(bounds),
        })
    return rows


def thm31_sweep(seed: int, Ns=(1, 2, 4, 8, 16), Ls=(1, 2, 4, 8, 16, 32, 64),
                max_fill: int = 512) -> list:
    """Full ordered sweep over input block pairs; per-pair seeded RNG streams."""
    blocks = [(N, L, s) for N in Ns for L in Ls for s in (1, -1)]
    rows = []
    for i1, b1 in enumerate(blocks):
        for i2, b2 in enumerate(blocks):
            rng = np.random.default_rng(np.random.SeedSequence((seed, i1, i2)))
            rows.extend(bilinear_constant_measure(*b1, *b2, rng=rng, max_fill=max_fill))
    return rows


def strip_measure(r: float, N1: int, L1: int, s1: int, N2: int, L2: int, s2: int,
                  rng: np.random.Generator, omega=(1.0, 0.0),
                  max_fill: int = 512) -> dict:
    """Angle-weighted product of a strip-localized block with a full block.

    Returns the full space-time mass of B(P_strip u1, u2) over the bound
    (r L1 L2)^{1/2}.
    """
    half = MEAS_SPACE // 2
    ks = np.arange(-half, half)
    K1, K2 = np.meshgrid(ks, ks, indexing="ij")
    perp = K1 * (-omega[1]) + K2 * omega[0]
    strip = np.abs(perp) <= r
    p1 = random_block_points(N1, L1, s1, rng, max_fill, spatial_mask=strip)
    p2 = random_block_points(N2, L2, s2, rng, max_fill)
    _, _, _, amps = sparse_product_spectrum(
        p1, p2, difference=False, conj2=False, angle_signs=(s1, s2))
    measured = float(np.sqrt(np.sum(np.abs(amps) ** 2) / (2 * np.pi) ** 3))
    bound = (r * L1 * L2) ** 0.5
    return {"r": r, "N1": N1, "L1": L1, "s1": s1, "N2": N2, "L2": L2, "s2": s2,
            "measured": measured, "bound": bound, "ratio": measured / bound}


def thm33_sweep(seed: int, rs=(1, 2, 4, 8), Ls=(1, 4, 16), N1: int = 16,
                N2: int = 8, max_fill: int = 512) -> list:
    rows = []
    idx = 0
    for r in rs:
        for L1 in Ls:
            for L2 in Ls:
                for s1 in (1, -1):
                    for s2 in (1, -1):
                        rng = np.random.default_rng(np.random.SeedSequence((seed, idx)))
                        rows.append(strip_measure(r, N1, L1, s1, N2, L2, s2, rng))
                        idx += 1
    return rows


def trend_slopes(rows: list, params: tuple, ratio_key: str = "ratio") -> dict:
    """Least-squares slope of log(ratio) against log2(param) for each parameter."""
    out = {}
    for p in params:
        x = np.array([np.log2(row[p]) for row in rows], dtype=float)
        y = np.array([np.log(max(row[ratio_key], 1e-300)) for row in rows])
        keep = np.isfinite(y)
        x, y = x[keep], y[keep]
        if np.ptp(x) == 0:
            out[p] = 0.0
            continue
        slope = float(np.polyfit(x, y, 1)[0])
        out[p] = slope
    return out


# ---------------------------------------------------------------------------
# dense null form on periodic space-time fields


def nullform_B(u1: SpaceTimeField, u2: SpaceTimeField, s1: int, s2: int) -> SpaceTimeField:
    """Angle-weighted convolution of two windowed spectra, direct summation.

    Output indices follow X0 = X1 + X2 in signed integer coordinates;
    contributions falling outside the resolved lattice are dropped and
    flagged with a warning.  Intended for compactly supported spectra.
    """
    if u1.grid.n != u2.grid.n or u1.m != u2.m or not np.isclose(u1.dt, u2.dt):
        raise ValueError("null form inputs must share one lattice")
    grid = u1.grid
    m = u1.m

    def points(u):
        s = u.spectrum
        l, i, j = np.nonzero(s)
        # signed index coordinates
        ls = np.where(l >= m // 2, l - m, l)
        isd = np.where(i >= grid.n // 2, i - grid.n, i)
        jsd = np.where(j >= grid.n // 2, j - grid.n, j)
        return ls, isd, jsd, s[l, i, j]

    l1, i1, j1, v1 = points(u1)
    l2, i2, j2, v2 = points(u2)
    if l1.size == 0 or l2.size == 0:
        return SpaceTimeField.from_spectrum(grid, u1.times, u1.T,
                                            np.zeros_like(u1.spectrum))
    L0 = (l1[:, None] + l2[None, :]).ravel()
    I0 = (i1[:, None] + i2[None, :]).ravel()
    J0 = (j1[:, None] + j2[None, :]).ravel()
    x1a = (i1 * grid.dxi)[:, None]
    x1b = (j1 * grid.dxi)[:, None]
    x2a = (i2 * grid.dxi)[None, :]
    x2b = (j2 * grid.dxi)[None, :]
    n1 = np.hypot(x1a, x1b)
    n2 = np.hypot(x2a, x2b)
    dot = x1a * x2a + x1b * x2b
    cross = x1a * x2b - x1b * x2a
    w = np.where((n1 * n2) > 0, np.arctan2(np.abs(cross), s1 * s2 * dot), 0.0)
    vals = (v1[:, None] * v2[None, :]) * w
    vals = vals.ravel() * (u1.dtau * grid.dxi**2 / (2 * np.pi) ** 3)
    half_t, half_s = m // 2, grid.n // 2
    ok = ((L0 >= -half_t) & (L0 < half_t)
          & (I0 >= -half_s) & (I0 < half_s) & (J0 >= -half_s) & (J0 < half_s))
    if np.any(~ok):
        warnings.warn(f"{int(np.sum(~ok))} convolution outputs fell outside the "
                      "resolved lattice and were dropped", stacklevel=2)
    out = np.zeros((m, grid.n, grid.n), dtype=complex)
    np.add.at(out, (L0[ok] % m, I0[ok] % grid.n, J0[ok] % grid.n), vals[ok])
    return SpaceTimeField.from_spectrum(grid, u1.times, u1.T, out)
