"""Scaling experiments probing smoothness failure of the data-to-solution map.

The flow map of the coupled system is differentiated in the data amplitude at
zero.  The second derivative of the potentials is a time-integrated bilinear
of free half-waves; the second derivative of the spinor against a potential
perturbation and the third derivative of the decoupled spinor equation are
iterated Duhamel integrals with explicit oscillatory multipliers.  Feeding
frequency-rectangle data of width sqrt(lambda) around (lambda, 0) and
evaluating at the resonant time t = eps/sqrt(lambda) turns each derivative
into a frequency-space quadrature whose H^s size follows a power law in
lambda.  Comparing fitted exponents against the data-norm exponents shows the
smoothness the map cannot have.

Conventions.  Hats are continuum Fourier transforms without 2pi factors in
the forward direction, so Plancherel carries (2pi)^{-1} per dimension; the
fixed convolution constant is dropped from every displayed spectrum (it
cancels in all slopes and is absorbed by calibrated constants).  Frequency
rectangles are half-open boxes, so lattice cell counts reproduce areas
exactly when the sides align with the mesh.  All sign sums run over the
half-wave labels of each evolution factor.  Where a direction xi/|xi| is
needed at xi = 0 it is taken to be zero.

Sweeps snap lambda to the resonant family lambda = 4 k^2 pi^2 / eps^2 so
that t*lambda is an exact multiple of 2pi and the carrier phases cancel
identically; reports carry every per-point value next to the fitted slope.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid2D, ScalarField, SpinorField

SIGN_TRIPLES = tuple((s1, s2, s3)
                     for s1 in (1, -1) for s2 in (1, -1) for s3 in (1, -1))
SIGN_QUINTUPLES = tuple((s1, s2, s3, s4, s5)
                        for s1 in (1, -1) for s2 in (1, -1) for s3 in (1, -1)
                        for s4 in (1, -1) for s5 in (1, -1))

# box constants for the transverse return region: {3 xi1^2 <= xi2^2},
# |xi| <= C1 sqrt(lam), C2 sqrt(lam) <= |xi2| <= C3 sqrt(lam)
WSTAR_C = (2.0, 0.5, 1.0)

_VARIANTS = ("W", "Wtilde", "Wstar", "Wstarstar")


@dataclass(frozen=True)
class RectSpec:
    """Frequency-region descriptor at scale lambda.

    W is the square of half-side sqrt(lam) at (lam, 0); Wtilde shrinks the
    half-side to lam^(1/4); Wstarstar is the square of half-side
    sqrt(lam)/10 at (2 lam, 0); Wstar is the low-frequency return region
    where the second-iterate output concentrates.
    """

    variant: str
    lam: float

    def __post_init__(self) -> None:
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown region variant {self.variant!r}")
        if not self.lam >= 64.0:
            raise ValueError(f"lambda must be at least 64, got {self.lam}")

    def half_sides(self) -> tuple:
        """(center1, half1, center2, half2) for the axis-aligned variants."""
        r = np.sqrt(self.lam)
        if self.variant == "W":
            return (self.lam, r, 0.0, r)
        if self.variant == "Wtilde":
            q = self.lam ** 0.25
            return (self.lam, q, 0.0, q)
        if self.variant == "Wstarstar":
            return (2.0 * self.lam, r / 10.0, 0.0, r / 10.0)
        raise ValueError("Wstar is not an axis-aligned rectangle")

    def indicator(self, xi1, xi2) -> np.ndarray:
        """Pointwise membership; half-open boxes for the rectangle variants."""
        xi1 = np.asarray(xi1, dtype=float)
        xi2 = np.asarray(xi2, dtype=float)
        if self.variant == "Wstar":
            c1, c2, c3 = WSTAR_C
            r = np.sqrt(self.lam)
            return ((3.0 * xi1**2 <= xi2**2)
                    & (np.hypot(xi1, xi2) <= c1 * r)
                    & (np.abs(xi2) >= c2 * r) & (np.abs(xi2) <= c3 * r))
        c1, h1, c2, h2 = self.half_sides()
        return ((xi1 >= c1 - h1) & (xi1 < c1 + h1)
                & (xi2 >= c2 - h2) & (xi2 < c2 + h2))

    def area(self) -> float:
        if self.variant == "Wstar":
            c1, c2, c3 = WSTAR_C
            # two xi2 strips; |xi1| <= |xi2|/sqrt(3) makes the |xi| cap inactive
            return 2.0 * (c3**2 - c2**2) * self.lam / np.sqrt(3.0)
        _, h1, _, h2 = self.half_sides()
        return 4.0 * h1 * h2

    def extent(self) -> float:
        """Largest coordinate magnitude over the region."""
        if self.variant == "Wstar":
            return WSTAR_C[2] * np.sqrt(self.lam)
        c1, h1, c2, h2 = self.half_sides()
        return max(abs(c1) + h1, abs(c2) + h2)

    def min_side(self) -> float:
        if self.variant == "Wstar":
            return (WSTAR_C[2] - WSTAR_C[1]) * np.sqrt(self.lam)
        _, h1, _, h2 = self.half_sides()
        return 2.0 * min(h1, h2)


def rect_indicator(spec: RectSpec, xi1, xi2) -> np.ndarray:
    return spec.indicator(xi1, xi2)


def rect_data(spec: RectSpec, grid: Grid2D) -> ScalarField:
    """Inverse transform of the region indicator as a hat-space grid field.

    The grid must resolve the region (mesh at most min_side/16) and contain
    it (ximax beyond the extent); otherwise the error states what is needed.
    """
    need_dxi = spec.min_side() / 16.0
    need_ext = spec.extent()
    if grid.dxi > need_dxi or grid.ximax <= need_ext:
        n_req = int(2 ** np.ceil(np.log2(max(2.0 * need_ext / min(grid.dxi, need_dxi) + 2,
                                             grid.n))))
        raise ValueError(
            f"grid does not resolve the {spec.variant} region at lambda={spec.lam}: "
            f"need dxi <= {need_dxi:.4g} and ximax > {need_ext:.4g}, got "
            f"dxi={grid.dxi:.4g}, ximax={grid.ximax:.4g}; at this mesh n >= {n_req}")
    chi = spec.indicator(grid.xi1, grid.xi2).astype(complex)
    return ScalarField(grid, chi, rep="fourier")


def rect_spinor_data(spec: RectSpec, grid: Grid2D) -> SpinorField:
    """Spinor (phi, -phi)/sqrt(2) with phi the inverse indicator transform."""
    phi = rect_data(spec, grid)
    up = ScalarField(grid, phi.values / np.sqrt(2.0), rep="fourier")
    dn = ScalarField(grid, -phi.values / np.sqrt(2.0), rep="fourier")
    return SpinorField(up, dn)


# -- oscillatory multipliers --------------------------------------------------

def _phase_ratio(x) -> np.ndarray:
    """g(x) = (e^{ix} - 1)/(ix), series below |x| = 1e-4, else a
    cancellation-free closed form sin(x)/x + 2i sin^2(x/2)/x."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    closed = np.sin(xs) / xs + 2j * np.sin(0.5 * xs) ** 2 / xs
    series = 1.0 + 0.5j * x - x * x / 6.0 - 1j * x**3 / 24.0
    return np.where(small, series, closed)


def omega123(xi, eta, signs) -> np.ndarray:
    """s1 |xi| + s2 |xi - eta| - s3 |eta| on (..., 2) frequency arrays."""
    s1, s2, s3 = signs
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    diff = xi - eta
    return (s1 * np.hypot(xi[..., 0], xi[..., 1])
            + s2 * np.hypot(diff[..., 0], diff[..., 1])
            - s3 * np.hypot(eta[..., 0], eta[..., 1]))


def m123(t: float, xi, eta, signs):
    """Resonance multiplier (e^{it w} - 1)/(i w) at w = omega123."""
    out = t * _phase_ratio(t * omega123(xi, eta, signs))
    return out[()]


def _moments(x: np.ndarray) -> tuple:
    """M_n(x) = int_0^1 u^n e^{ixu} du for n = 1, 3, 5.

    Series in x below |x| = 6, else the integration-by-parts recursion
    M_n = (e^{ix} - n M_{n-1})/(ix) seeded by the stable M_0.
    """
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 6.0
    ms = np.zeros((6,) + x.shape, dtype=complex)
    if np.any(small):
        xs = x[small]
        p = np.ones(xs.shape, dtype=complex)
        acc = np.zeros((6,) + xs.shape, dtype=complex)
        for k in range(48):
            for n in range(6):
                acc[n] += p / (n + k + 1)
            p = p * (1j * xs) / (k + 1)
        ms[:, small] = acc
    big = ~small
    if np.any(big):
        xb = x[big]
        e = np.exp(1j * xb)
        cur = _phase_ratio(xb)
        ms[0, big] = cur
        for n in range(1, 6):
            cur = (e - n * cur) / (1j * xb)
            ms[n, big] = cur
    return ms[1], ms[3], ms[5]


def _divided_ratio(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """(g(x1) - g(x2))/(x1 - x2) with a stable nearly-coincident branch.

    The direct quotient loses digits as x1 -> x2; there the divided
    difference equals i int_0^1 u e^{iux} sinc(u(x1-x2)/2) du at the
    midpoint x, expanded in the gap through fourth order.
    """
    shape = np.broadcast_shapes(np.shape(x1), np.shape(x2))
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    d = x1 - x2
    small = np.abs(d) < 1e-2
    ds = np.where(small, 1.0, d)
    direct = (_phase_ratio(x1) - _phase_ratio(x2)) / ds
    out = np.asarray(direct, dtype=complex)
    if np.any(small):
        xm = 0.5 * (x1 + x2)[small]
        dd = d[small]
        m1, m3, m5 = _moments(xm)
        out[small] = 1j * (m1 - dd**2 / 24.0 * m3 + dd**4 / 1920.0 * m5)
    return out.reshape(shape)


def omega_cubic(xi, eta, zeta, signs) -> tuple:
    """The three phases of the twice-iterated Duhamel kernel.

    w0 = s2|eta| + s3|eta - zeta| - s4|zeta| (inner time),
    w2 = s1|xi| - s2|eta| - s5|xi - eta| (outer time), w1 = w0 + w2.
    """
    s1, s2, s3, s4, s5 = signs
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    r_xi = np.hypot(xi[..., 0], xi[..., 1])
    r_eta = np.hypot(eta[..., 0], eta[..., 1])
    r_z = np.hypot(zeta[..., 0], zeta[..., 1])
    dmz = eta - zeta
    r_emz = np.hypot(dmz[..., 0], dmz[..., 1])
    dxe = xi - eta
    r_xme = np.hypot(dxe[..., 0], dxe[..., 1])
    w0 = s2 * r_eta + s3 * r_emz - s4 * r_z
    w2 = s1 * r_xi - s2 * r_eta - s5 * r_xme
    return w0, w0 + w2, w2


def m12345(t: float, xi, eta, zeta, signs):
    """Closed form of the nested double time integral.

    int_0^t int_0^t' exp(-s1 i(t-t')|xi| - s2 i(t'-t'')|eta|
    + s3 i t''|zeta-eta| - s4 i t''|zeta| - s5 i t'|xi-eta|) dt'' dt'
    = -i t^2 e^{-s1 i t |xi|} (g(t w1) - g(t w2)) / (t w1 - t w2),
    every coincidence limit handled by the divided-difference branch.
    """
    s1 = signs[0]
    xi = np.asarray(xi, dtype=float)
    w0, w1, w2 = omega_cubic(xi, eta, zeta, signs)
    del w0
    r_xi = np.hypot(xi[..., 0], xi[..., 1])
    out = (-1j * t * t * np.exp(-1j * s1 * t * r_xi)
           * _divided_ratio(t * w1, t * w2))
    return out[()]


_LEGGAUSS_CACHE: dict = {}


def _leggauss01(q: int) -> tuple:
    if q not in _LEGGAUSS_CACHE:
        x, w = np.polynomial.legendre.leggauss(q)
        _LEGGAUSS_CACHE[q] = (0.5 * (x + 1.0), 0.5 * w)
    return _LEGGAUSS_CACHE[q]


def m12345_oracle(t: float, xi, eta, zeta, signs, rtol: float = 1e-9,
                  q0: int = 24, max_doublings: int = 5):
    """Gauss-Legendre quadrature of the double time integral.

    Node counts double until two successive levels agree to rtol * t^2;
    failure to converge raises.  Vectorized over leading axes.
    """
    s1 = signs[0]
    xi = np.asarray(xi, dtype=float)
    w0, w1, w2 = omega_cubic(xi, eta, zeta, signs)
    del w1
    r_xi = np.hypot(xi[..., 0], xi[..., 1])
    const = np.exp(-1j * s1 * t * r_xi)
    a = np.asarray(w2, dtype=float)[..., None, None]
    b = np.asarray(w0, dtype=float)[..., None, None]
    prev = None
    q = q0
    for _ in range(max_doublings + 1):
        y, w = _leggauss01(q)
        tp = t * y
        inner = tp[:, None] * y[None, :]
        phase = np.exp(1j * (a * tp[None, :, None] + b * inner[None, :, :]))
        val = t * np.einsum("i,j,...ij->...", w * tp, w, phase)
        if prev is not None and np.max(np.abs(val - prev)) <= rtol * t * t:
            return (const * val.reshape(np.shape(w2)))[()]
        prev = val
        q *= 2
    raise RuntimeError(
        f"time quadrature did not converge at {q // 2} nodes "
        f"(last change {np.max(np.abs(val - prev)):.3e})")


# -- second-derivative spectrum of the potential flow -------------------------

def _direction(x1, x2, r):
    with np.errstate(invalid="ignore", divide="ignore"):
        d1 = np.where(r > 0, x1 / np.where(r > 0, r, 1.0), 0.0)
        d2 = np.where(r > 0, x2 / np.where(r > 0, r, 1.0), 0.0)
    return d1, d2


def _midpoints(lo, hi, q):
    u = (np.arange(q) + 0.5) / q
    return lo[..., None] + (hi - lo)[..., None] * u


def second_iterate_spectrum(lam: float, eps: float, xi1, xi2, triples=None,
                            rtol: float = 1e-6, q0: int = 24,
                            qmax: int = 384) -> np.ndarray:
    """Spectrum of the second amplitude derivative of the potential flow.

    For rectangle spinor data at scale lambda, evaluated at t =
    eps/sqrt(lam), the transverse component is

        F2_hat(xi) = - sum_{s1,s2,s3} e^{-i s1 t |xi|} (1 - s1 xi1/|xi|)
                       int_{O(xi)} m123(t, xi, eta, (s1,s2,s3)) d eta,

    with O(xi) the exact overlap of the data rectangle and its xi
    translate.  The eta integral is midpoint quadrature on the overlap,
    refined x2 until successive levels agree to rtol of the field maximum.
    """
    if triples is None:
        triples = SIGN_TRIPLES
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    shape = np.broadcast_shapes(xi1.shape, xi2.shape)
    x1f = np.broadcast_to(xi1, shape).ravel()
    x2f = np.broadcast_to(xi2, shape).ravel()
    t = eps / np.sqrt(lam)
    r = np.sqrt(lam)
    lo1 = lam - r + np.maximum(0.0, x1f)
    hi1 = lam + r + np.minimum(0.0, x1f)
    lo2 = -r + np.maximum(0.0, x2f)
    hi2 = r + np.minimum(0.0, x2f)
    area = np.maximum(hi1 - lo1, 0.0) * np.maximum(hi2 - lo2, 0.0)

    prev = None
    q = q0
    while q <= qmax:
        val = _f2_level(lam, t, x1f, x2f, lo1, hi1, lo2, hi2, area, triples, q)
        if prev is not None:
            scale = max(float(np.max(np.abs(val))), 1e-300)
            if float(np.max(np.abs(val - prev))) <= rtol * scale:
                return val.reshape(shape)
        prev = val
        q *= 2
    raise RuntimeError(
        f"overlap quadrature did not converge by {qmax} points per axis")


def _f2_level(lam, t, x1f, x2f, lo1, hi1, lo2, hi2, area, triples, q):
    out = np.zeros(x1f.shape, dtype=complex)
    live = area > 0.0
    if not np.any(live):
        return out
    idx = np.nonzero(live)[0]
    chunk = max(1, 4_000_000 // (q * q))
    for start in range(0, idx.size, chunk):
        sel = idx[start:start + chunk]
        e1 = _midpoints(lo1[sel], hi1[sel], q)[:, :, None]
        e2 = _midpoints(lo2[sel], hi2[sel], q)[:, None, :]
        p1 = x1f[sel][:, None, None]
        p2 = x2f[sel][:, None, None]
        r_xi = np.hypot(x1f[sel], x2f[sel])
        d1, _ = _direction(x1f[sel], x2f[sel], r_xi)
        r_xme = np.hypot(p1 - e1, p2 - e2)
        r_eta = np.hypot(e1, np.broadcast_to(e2, r_xme.shape))
        cell = area[sel] / (q * q)
        acc = np.zeros(sel.shape, dtype=complex)
        for s1, s2, s3 in triples:
            w = s1 * r_xi[:, None, None] + s2 * r_xme - s3 * r_eta
            ratio = _phase_ratio(t * w).sum(axis=(1, 2))
            acc += (np.exp(-1j * s1 * t * r_xi) * (1.0 - s1 * d1)
                    * t * ratio * cell)
        out[sel] = -acc
    return out


def f2_overlap_area(lam: float, xi1, xi2) -> np.ndarray:
    """Area of the data-rectangle overlap feeding the second iterate at xi."""
    r = np.sqrt(lam)
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    w1 = np.maximum(2.0 * r - np.abs(xi1), 0.0)
    w2 = np.maximum(2.0 * r - np.abs(xi2), 0.0)
    return w1 * w2


# -- norms, lattices, fits ----------------------------------------------------

def hs_weight(s: float, xi1, xi2) -> np.ndarray:
    """(1 + |xi|)^{2s}, the squared Sobolev weight used throughout."""
    return (1.0 + np.hypot(np.asarray(xi1, float), np.asarray(xi2, float))) ** (2.0 * s)


def hs_norm_lattice(values, xi1, xi2, s: float, cell_area: float) -> float:
    """Weighted L2 mass of a hat-space lattice field, continuum convention."""
    w = hs_weight(s, xi1, xi2)
    total = float(np.sum(w * np.abs(np.asarray(values)) ** 2) * cell_area)
    return np.sqrt(total) / (2.0 * np.pi)


def rect_hs_norm(spec: RectSpec, s: float, q: int = 256) -> float:
    """H^s norm of the inverse indicator transform by midpoint quadrature."""
    if spec.variant == "Wstar":
        raise ValueError("norm quadrature expects an axis-aligned rectangle")
    c1, h1, c2, h2 = spec.half_sides()
    g1 = _midpoints(np.array(c1 - h1), np.array(c1 + h1), q)
    g2 = _midpoints(np.array(c2 - h2), np.array(c2 + h2), q)
    w = hs_weight(s, g1[:, None], g2[None, :])
    cell = (2.0 * h1 / q) * (2.0 * h2 / q)
    return np.sqrt(float(np.sum(w)) * cell) / (2.0 * np.pi)


def fit_loglog(lams, values) -> tuple:
    """Least-squares slope of log(value) against log(lambda).

    Returns (slope, intercept, rms residual); degenerate inputs raise.
    """
    lams = np.asarray(lams, dtype=float)
    values = np.asarray(values, dtype=float)
    if lams.size < 2 or np.any(values <= 0.0) or np.any(lams <= 0.0):
        raise ValueError("slope fit needs at least two positive points")
    x = np.log(lams)
    y = np.log(values)
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid**2)))


def snap_lambda_family(lams, eps: float) -> tuple:
    """Snap requested scales to lambda = 4 k^2 pi^2 / eps^2, deduplicated."""
    ks = sorted({max(1, int(round(np.sqrt(max(lam, 1.0)) * eps / (2.0 * np.pi))))
                 for lam in lams})
    return tuple(ks), tuple(4.0 * k * k * np.pi**2 / eps**2 for k in ks)


def _validate_sweep(lams) -> None:
    if len(lams) < 4 or max(lams) < 4.0 * min(lams):
        raise ValueError(
            "sweep needs at least 4 distinct scales spanning two octaves "
            f"after snapping, got {list(lams)}")


def _centered_lattice(center1: float, half1: float, half2: float, n: int) -> tuple:
    """Midpoint lattice of n x n cells on [c1-h1, c1+h1] x [-h2, h2]."""
    g1 = _midpoints(np.array(center1 - half1), np.array(center1 + half1), n)
    g2 = _midpoints(np.array(-half2), np.array(half2), n)
    cell = (2.0 * half1 / n) * (2.0 * half2 / n)
    return g1[:, None], g2[None, :], cell


def scaling_sweep_F2(lams, s: float, eps: float = np.pi / 8.0,
                     n_xi: int = 64, rtol: float = 1e-6) -> dict:
    """Exponent fit of the second-iterate output versus the data size.

    Measures ||F2(eps/sqrt(lam))||_{H^s} on a lattice covering the full
    output support and the squared data norm, both against lambda; the
    predictions are s/2 + 1, 2s + 1 and the inflation gap -3s/2.
    """
    ks, snapped = snap_lambda_family(lams, eps)
    _validate_sweep(snapped)
    term, data2 = [], []
    for lam in snapped:
        r = np.sqrt(lam)
        g1, g2, cell = _centered_lattice(0.0, 2.0 * r, 2.0 * r, n_xi)
        field = second_iterate_spectrum(lam, eps, g1, g2, rtol=rtol)
        term.append(hs_norm_lattice(field, g1, g2, s, cell))
        data2.append(rect_hs_norm(RectSpec("W", lam), s) ** 2)
    term_slope, _, term_res = fit_loglog(snapped, term)
    data_slope, _, data_res = fit_loglog(snapped, data2)
    ratio_slope = term_slope - data_slope
    return {
        "s": s, "eps": eps, "n_xi": n_xi,
        "k": list(ks), "lambdas": list(snapped),
        "t": [eps / np.sqrt(lam) for lam in snapped],
        "term_norms": term, "data_sq_norms": data2,
        "term_slope": term_slope, "term_fit_rms": term_res,
        "data_sq_slope": data_slope, "data_fit_rms": data_res,
        "ratio_slope": ratio_slope,
        "predicted": {"term_slope": 0.5 * s + 1.0,
                      "data_sq_slope": 2.0 * s + 1.0,
                      "ratio_slope": -1.5 * s},
    }


# -- second derivative of the spinor against a potential perturbation ---------

def aflow_term_spectrum(lam: float, eps: float, xi1, xi2, triples=None,
                        rtol: float = 1e-5, q0: int = 24,
                        qmax: int = 192) -> np.ndarray:
    """First spinor component of the mixed second derivative of the flow.

    The potential data is the small rectangle indicator, the spinor data
    the wide one.  The spectrum is 2i sum over sign triples of
    e^{-i s1 t |xi|} int mtilde(t, xi, eta) K(s1, s2; xi, xi - eta) d eta
    over the exact overlap {eta in W : xi - eta in Wtilde}, with mtilde the
    resonance ratio of s1|xi| - s2|xi-eta| - s3|eta| and K the half-wave
    projection weight of the coupling matrices.  The default tolerance is
    looser than the second-iterate one: this field's maximum is orders of
    magnitude below the resonant scale, and the slope fits consuming it
    only resolve percent-level changes.
    """
    if triples is None:
        triples = SIGN_TRIPLES
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    shape = np.broadcast_shapes(xi1.shape, xi2.shape)
    x1f = np.broadcast_to(xi1, shape).ravel()
    x2f = np.broadcast_to(xi2, shape).ravel()
    t = eps / np.sqrt(lam)
    r = np.sqrt(lam)
    quarter = lam ** 0.25
    lo1 = np.maximum(lam - r, x1f - lam - quarter)
    hi1 = np.minimum(lam + r, x1f - lam + quarter)
    lo2 = np.maximum(-r, x2f - quarter)
    hi2 = np.minimum(r, x2f + quarter)
    area = np.maximum(hi1 - lo1, 0.0) * np.maximum(hi2 - lo2, 0.0)

    prev = None
    q = q0
    while q <= qmax:
        val = _aflow_level(t, x1f, x2f, lo1, hi1, lo2, hi2, area, triples, q)
        if prev is not None:
            scale = max(float(np.max(np.abs(val))), 1e-300)
            if float(np.max(np.abs(val - prev))) <= rtol * scale:
                return val.reshape(shape)
        prev = val
        q *= 2
    raise RuntimeError(
        f"overlap quadrature did not converge by {qmax} points per axis")


def _aflow_level(t, x1f, x2f, lo1, hi1, lo2, hi2, area, triples, q):
    out = np.zeros(x1f.shape, dtype=complex)
    live = area > 0.0
    if not np.any(live):
        return out
    idx = np.nonzero(live)[0]
    chunk = max(1, 4_000_000 // (q * q))
    pref = 1.0 / (4.0 * np.sqrt(2.0))
    for start in range(0, idx.size, chunk):
        sel = idx[start:start + chunk]
        e1 = _midpoints(lo1[sel], hi1[sel], q)[:, :, None]
        e2 = _midpoints(lo2[sel], hi2[sel], q)[:, None, :]
        p1 = x1f[sel][:, None, None]
        p2 = x2f[sel][:, None, None]
        r_xi = np.hypot(x1f[sel], x2f[sel])
        dx1, dx2 = _direction(x1f[sel], x2f[sel], r_xi)
        rho1 = p1 - e1
        rho2 = p2 - e2
        r_rho = np.hypot(rho1, rho2)
        dr1, dr2 = _direction(rho1, rho2, r_rho)
        r_eta = np.hypot(e1, np.broadcast_to(e2, r_rho.shape))
        cell = area[sel] / (q * q)
        acc = np.zeros(sel.shape, dtype=complex)
        for s1, s2, s3 in triples:
            w = s1 * r_xi[:, None, None] - s2 * r_rho - s3 * r_eta
            mt = t * _phase_ratio(t * w)
            xiw_m = (1.0 - s1 * dx1) + 1j * s1 * dx2
            xiw_p = (1.0 + s1 * dx1) - 1j * s1 * dx2
            K = pref * ((1.0 + s2 * dr1) * xiw_m[:, None, None]
                        - 1j * s2 * dr2 * xiw_p[:, None, None])
            acc += np.exp(-1j * s1 * t * r_xi) * (mt * K).sum(axis=(1, 2)) * cell
        out[sel] = 2j * acc
    return out


def aflow_sweep(lams, s: float, eps: float = np.pi / 8.0,
                n_xi: int = 64, rtol: float = 1e-5) -> dict:
    """Exponent fit of the mixed second derivative versus the data product.

    Term norms are taken over the output support near (2 lam, 0); the data
    product is the H^s norm of the potential rectangle times that of the
    spinor rectangle, with predicted slopes s + 1 and 2s + 3/4.
    """
    ks, snapped = snap_lambda_family(lams, eps)
    _validate_sweep(snapped)
    term, data = [], []
    for lam in snapped:
        r = np.sqrt(lam)
        half = r + lam ** 0.25 + 1.0
        g1, g2, cell = _centered_lattice(2.0 * lam, half, half, n_xi)
        field = aflow_term_spectrum(lam, eps, g1, g2, rtol=rtol)
        term.append(hs_norm_lattice(field, g1, g2, s, cell))
        data.append(rect_hs_norm(RectSpec("Wtilde", lam), s)
                    * rect_hs_norm(RectSpec("W", lam), s))
    term_slope, _, term_res = fit_loglog(snapped, term)
    data_slope, _, data_res = fit_loglog(snapped, data)
    return {
        "s": s, "eps": eps, "n_xi": n_xi,
        "k": list(ks), "lambdas": list(snapped),
        "t": [eps / np.sqrt(lam) for lam in snapped],
        "term_norms": term, "data_product_norms": data,
        "term_slope": term_slope, "term_fit_rms": term_res,
        "data_product_slope": data_slope, "data_fit_rms": data_res,
        "slope_gap": data_slope - term_slope,
        "predicted": {"term_slope": s + 1.0,
                      "data_product_slope": 2.0 * s + 0.75,
                      "slope_gap": s - 0.25},
    }


# -- third derivative of the decoupled spinor flow ----------------------------

def _cubic_point(lam, t, xi1, xi2, rng, n_samples, tuples, sign_rows):
    """Monte-Carlo estimate of the cubic-term spectrum at one frequency.

    eta is uniform on the exact support rectangle (xi - W intersected with
    the difference set), zeta uniform on the data-rectangle overlap W cap
    (W + eta); the integrand is weighted by both areas.  Returns (value,
    half-sample spread) summed over the requested sign tuples.
    """
    r = np.sqrt(lam)
    lo1 = max(xi1 - lam - r, -2.0 * r)
    hi1 = min(xi1 - lam + r, 2.0 * r)
    lo2 = max(xi2 - r, -2.0 * r)
    hi2 = min(xi2 + r, 2.0 * r)
    if hi1 <= lo1 or hi2 <= lo2:
        return 0.0 + 0.0j, 0.0
    area_eta = (hi1 - lo1) * (hi2 - lo2)
    eta = rng.uniform((lo1, lo2), (hi1, hi2), size=(n_samples, 2))
    olo1 = lam - r + np.maximum(0.0, eta[:, 0])
    ohi1 = lam + r + np.minimum(0.0, eta[:, 0])
    olo2 = -r + np.maximum(0.0, eta[:, 1])
    ohi2 = r + np.minimum(0.0, eta[:, 1])
    area_o = (ohi1 - olo1) * (ohi2 - olo2)
    u = rng.random((n_samples, 2))
    zeta = np.stack([olo1 + u[:, 0] * (ohi1 - olo1),
                     olo2 + u[:, 1] * (ohi2 - olo2)], axis=1)

    r_xi = float(np.hypot(xi1, xi2))
    r_eta = np.hypot(eta[:, 0], eta[:, 1])
    r_z = np.hypot(zeta[:, 0], zeta[:, 1])
    r_emz = np.hypot(eta[:, 0] - zeta[:, 0], eta[:, 1] - zeta[:, 1])
    r_xme = np.hypot(xi1 - eta[:, 0], xi2 - eta[:, 1])
    with np.errstate(invalid="ignore", divide="ignore"):
        deta1 = np.where(r_eta > 0, eta[:, 0] / np.where(r_eta > 0, r_eta, 1.0), 0.0)
    dxi1 = xi1 / r_xi if r_xi > 0 else 0.0
    dxi2 = xi2 / r_xi if r_xi > 0 else 0.0

    s1v, s2v, s3v, s4v, s5v = sign_rows
    w0 = s2v[:, None] * r_eta + s3v[:, None] * r_emz - s4v[:, None] * r_z
    w2 = s1v[:, None] * r_xi - s2v[:, None] * r_eta - s5v[:, None] * r_xme
    m = (-1j * t * t * np.exp(-1j * s1v[:, None] * t * r_xi)
         * _divided_ratio(t * (w0 + w2), t * w2))
    pref = 1.0 / (2.0 * np.sqrt(2.0))
    u2 = 1.0 - s2v[:, None] * deta1
    u3 = -s2v[:, None] * deta1
    integrand = (-1j * pref * (1.0 + s1v[:, None] * dxi1) * m
                 + 1j * pref * (s1v[:, None] * dxi2) * m * u2
                 + pref * (1.0 - s1v[:, None] * dxi1) * m * u3)
    per_sample = integrand.sum(axis=0) * area_o
    half = n_samples // 2
    e1 = np.mean(per_sample[:half]) * area_eta
    e2 = np.mean(per_sample[half:]) * area_eta
    value = np.mean(per_sample) * area_eta
    return complex(value), 0.5 * abs(e1 - e2)


def _sign_rows(tuples) -> tuple:
    arr = np.asarray(tuples, dtype=float)
    return tuple(arr[:, j] for j in range(5))


def cubic_term_spectrum(lam: float, eps: float, xi1, xi2, seed: int,
                        mc_samples: int, tuples=None, lam_key: int = 0):
    """Cubic-derivative spectrum on a frequency lattice by Monte Carlo.

    Per-frequency RNG streams are keyed (seed, lam_key, flat index), so the
    field is independent of evaluation order.  Returns (values, spreads)
    with the half-sample spread as the error estimate.
    """
    if tuples is None:
        tuples = SIGN_QUINTUPLES
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    shape = np.broadcast_shapes(xi1.shape, xi2.shape)
    x1f = np.broadcast_to(xi1, shape).ravel()
    x2f = np.broadcast_to(xi2, shape).ravel()
    t = eps / np.sqrt(lam)
    rows = _sign_rows(tuples)
    vals = np.zeros(x1f.shape, dtype=complex)
    errs = np.zeros(x1f.shape, dtype=float)
    for i in range(x1f.size):
        rng = np.random.default_rng(np.random.SeedSequence((seed, lam_key, i)))
        vals[i], errs[i] = _cubic_point(lam, t, x1f[i], x2f[i], rng,
                                        mc_samples, tuples, rows)
    return vals.reshape(shape), errs.reshape(shape)


CUBIC_TUPLE_CLASSES = {
    "outer_resonant": tuple(tp for tp in SIGN_QUINTUPLES
                            if tp[0] == tp[4] and tp[2] == tp[3]),
    "inner_mismatch": tuple(tp for tp in SIGN_QUINTUPLES
                            if tp[0] == tp[4] and tp[2] != tp[3]),
    "outer_mismatch": tuple(tp for tp in SIGN_QUINTUPLES if tp[0] != tp[4]),
}


def cubic_sweep(lams, s: float, eps: float = 0.5, mc_samples: int = 20000,
                n_xi: int = 24, seed: int = 515151,
                per_class: bool = False) -> dict:
    """Exponent fit of the cubic flow derivative versus the cubed data norm.

    The H^s norm of the Monte-Carlo spectrum is fitted against lambda along
    the resonant family; points whose propagated MC spread exceeds 20% are
    flagged and excluded from the fit.  Predictions: term 3/2 + s, data
    cube 3s + 3/2, ratio -2s.
    """
    if mc_samples * n_xi * n_xi < 100_000:
        raise ValueError("need at least 1e5 samples per sweep point in total")
    ks, snapped = snap_lambda_family(lams, eps)
    _validate_sweep(snapped)
    term, data3, ses, flagged = [], [], [], []
    classes = {name: [] for name in CUBIC_TUPLE_CLASSES} if per_class else None
    for k, lam in zip(ks, snapped):
        r = np.sqrt(lam)
        g1, g2, cell = _centered_lattice(lam, 3.0 * r, 3.0 * r, n_xi)
        field, spread = cubic_term_spectrum(lam, eps, g1, g2, seed,
                                            mc_samples, lam_key=k)
        norm = hs_norm_lattice(field, g1, g2, s, cell)
        # propagate the per-point spreads through the weighted square sum
        w = hs_weight(s, g1, g2)
        num = float(np.sum(w * 2.0 * np.abs(field) * spread) * cell)
        se = 0.5 * num / max(norm, 1e-300) / (2.0 * np.pi) ** 2
        term.append(norm)
        ses.append(se)
        flagged.append(bool(se > 0.2 * norm))
        data3.append(rect_hs_norm(RectSpec("W", lam), s) ** 3)
        if per_class:
            for name, tuples in CUBIC_TUPLE_CLASSES.items():
                f_c, _ = cubic_term_spectrum(lam, eps, g1, g2, seed,
                                             mc_samples, tuples=tuples,
                                             lam_key=k)
                classes[name].append(hs_norm_lattice(f_c, g1, g2, s, cell))
    keep = [i for i, bad in enumerate(flagged) if not bad]
    if len(keep) < 2:
        raise ValueError("too many sweep points flagged by MC error")
    term_slope, _, term_res = fit_loglog([snapped[i] for i in keep],
                                         [term[i] for i in keep])
    data_slope, _, data_res = fit_loglog(snapped, data3)
    out = {
        "s": s, "eps": eps, "mc_samples": mc_samples, "n_xi": n_xi,
        "seed": seed, "k": list(ks), "lambdas": list(snapped),
        "t": [eps / np.sqrt(lam) for lam in snapped],
        "term_norms": term, "term_mc_se": ses, "flagged": flagged,
        "data_cube_norms": data3,
        "term_slope": term_slope, "term_fit_rms": term_res,
        "data_cube_slope": data_slope, "data_fit_rms": data_res,
        "ratio_slope": term_slope - data_slope,
        "predicted": {"term_slope": 1.5 + s,
                      "data_cube_slope": 3.0 * s + 1.5,
                      "ratio_slope": -2.0 * s},
    }
    if per_class:
        out["class_norms"] = classes
    return out
