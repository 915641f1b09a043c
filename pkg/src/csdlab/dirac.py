"""Dirac matrices, frequency-space projections, Riesz symbols, half-wave flow.

Signature (+, -, -).  alpha^0 = I, alpha^1 = sigma^1, alpha^2 = sigma^2,
beta = sigma^3, and the skew tensor is normalized by eps_{012} = 1.

The projections P_{+-}(xi) = (I +- xi_j alpha^j / |xi|) / 2 diagonalize the
spatial symbol, with the zero-mode policy P_{+-}(0) := I/2 so that the two
branches always sum to the identity.  Riesz symbols: r^0 = -1 and
r^j_s(xi) = -s xi_j / |xi| (0 at xi = 0).
"""
from __future__ import annotations

import numpy as np

from .grid import Grid2D, forward, inverse

ALPHA = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
)
BETA = np.array([[1, 0], [0, -1]], dtype=complex)

_EPS = np.zeros((3, 3, 3))
for _p, _s in (((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
               ((0, 2, 1), -1), ((2, 1, 0), -1), ((1, 0, 2), -1)):
    _EPS[_p] = _s


def alpha(mu: int) -> np.ndarray:
    if mu not in (0, 1, 2):
        raise ValueError(f"alpha index must be 0, 1 or 2, got {mu}")
    return ALPHA[mu]


def beta() -> np.ndarray:
    return BETA


def levi_civita(mu: int, nu: int, lam: int) -> int:
    for i in (mu, nu, lam):
        if i not in (0, 1, 2):
            raise ValueError(f"tensor index must be 0, 1 or 2, got {i}")
    return int(_EPS[mu, nu, lam])


def _check_sign(s: int) -> int:
    if not np.all(np.isin(s, (1, -1))):
        raise ValueError(f"sign must be +1 or -1, got {s}")
    return s


def projection(xi, s) -> np.ndarray:
    """Projection matrix at one or many nonzero frequencies.

    `xi` has shape (..., 2); the result has shape (..., 2, 2).  `s` is a
    scalar sign or an array of signs broadcastable against the batch shape.
    """
    _check_sign(s)
    xi = np.asarray(xi, dtype=float)
    r = np.hypot(xi[..., 0], xi[..., 1])
    if np.any(r == 0.0):
        raise ValueError("projection is undefined at xi = 0; use project_spinor's policy")
    w = np.asarray(s) * (xi[..., 0] + 1j * xi[..., 1]) / r
    out = np.empty(np.broadcast(xi[..., 0], w).shape + (2, 2), dtype=complex)
    out[..., 0, 0] = 0.5
    out[..., 1, 1] = 0.5
    out[..., 0, 1] = 0.5 * np.conjugate(w)
    out[..., 1, 0] = 0.5 * w
    return out


def riesz_symbol(grid: Grid2D, mu: int, s: int) -> np.ndarray:
    _check_sign(s)
    if mu == 0:
        return -np.ones((grid.n, grid.n))
    if mu in (1, 2):
        xi = grid.xi1 if mu == 1 else grid.xi2
        sym = -s * xi / grid.xiabs_safe
        sym[0, 0] = 0.0
        return sym
    raise ValueError(f"riesz index must be 0, 1 or 2, got {mu}")


def riesz(grid: Grid2D, f: np.ndarray, mu: int, s: int, rep: str = "physical") -> np.ndarray:
    """R^mu_s as a componentwise multiplier; works for scalar and spinor stacks."""
    sym = riesz_symbol(grid, mu, s)
    if rep == "fourier":
        return f * sym
    return inverse(grid, forward(grid, f) * sym)


def _halfwave_symbol(grid: Grid2D, t: float, s: int) -> np.ndarray:
    return np.exp(-1j * s * t * grid.xiabs)


def halfwave(grid: Grid2D, f: np.ndarray, t: float, s: int, rep: str = "physical") -> np.ndarray:
    """Propagator e^{-s i t D} applied on the last two axes."""
    _check_sign(s)
    sym = _halfwave_symbol(grid, t, s)
    if rep == "fourier":
        return f * sym
    return inverse(grid, forward(grid, f) * sym)


def _projection_factors(grid: Grid2D):
    w = (grid.xi1 + 1j * grid.xi2) / grid.xiabs_safe
    w = w.copy()
    w[0, 0] = 0.0  # makes the zero-mode projection I/2 for both signs
    return w


def project_spinor(grid: Grid2D, psi: np.ndarray, s: int, rep: str = "physical") -> np.ndarray:
    """Apply P_s(xi) modewise to a (2, n, n) spinor."""
    _check_sign(s)
    if psi.shape[0] != 2:
        raise ValueError(f"spinor stack must have leading axis 2, got {psi.shape}")
    ph = psi if rep == "fourier" else forward(grid, psi)
    w = _projection_factors(grid)
    up = 0.5 * (ph[0] + s * np.conjugate(w) * ph[1])
    dn = 0.5 * (s * w * ph[0] + ph[1])
    out = np.stack([up, dn])
    return out if rep == "fourier" else inverse(grid, out)


def dirac_current(grid: Grid2D, psi1: np.ndarray, psi2: np.ndarray, lam: int,
                  dealias_product: bool = True) -> np.ndarray:
    """Pointwise bilinear psi1^dag alpha^lam psi2 of physical-space spinors."""
    a = alpha(lam)
    out = (np.conjugate(psi1[0]) * (a[0, 0] * psi2[0] + a[0, 1] * psi2[1])
           + np.conjugate(psi1[1]) * (a[1, 0] * psi2[0] + a[1, 1] * psi2[1]))
    if dealias_product:
        from .grid import dealias
        out = dealias(grid, out)
    return out


def commutation_defect(xi, mu: int, s: int) -> np.ndarray:
    """alpha^mu P_s - P_{-s} alpha^mu P_s + r^mu_s P_s, identically zero.

    Vectorized over leading axes of `xi`.
    """
    xi = np.asarray(xi, dtype=float)
    P_s = projection(xi, s)
    P_m = projection(xi, -s)
    a = alpha(mu)
    if mu == 0:
        r = -np.ones(xi.shape[:-1])
    else:
        r = -s * xi[..., mu - 1] / np.hypot(xi[..., 0], xi[..., 1])
    aP = np.einsum("ab,...bc->...ac", a, P_s)
    PaP = np.einsum("...ab,...bc->...ac", P_m, aP)
    return aP - PaP + r[..., None, None] * P_s


def axis_identity_defect(xi, j: int, s: int) -> np.ndarray:
    """alpha^j P_s - P_{-s} alpha^j - s (xi_j/|xi|) I, identically zero."""
    xi = np.asarray(xi, dtype=float)
    P_s = projection(xi, s)
    P_m = projection(xi, -s)
    a = alpha(j)
    aP = np.einsum("ab,...bc->...ac", a, P_s)
    Pa = np.einsum("...ab,bc->...ac", P_m, a)
    ratio = xi[..., j - 1] / np.hypot(xi[..., 0], xi[..., 1])
    eye = np.broadcast_to(np.eye(2), P_s.shape)
    return aP - Pa - s * ratio[..., None, None] * eye
