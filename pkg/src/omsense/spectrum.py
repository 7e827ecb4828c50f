"""Effective non-Hermitian matrix of the two waveguide-coupled cavities.

Functions accept either :class:`~omsense.params.PhysicalParams` (results in
rad/s) or :class:`~omsense.params.ReducedParams` (results in units of Gamma).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .params import PhysicalParams, ReducedParams

# relative tolerance under which two imaginary parts count as tied
_TIE_RTOL = 1e-12


def _rates(p):
    """Return ``(delta, kappa, Gamma, Phi)`` in the units implied by ``p``."""
    if isinstance(p, PhysicalParams):
        return p.delta, p.kappa, p.Gamma, p.phi
    if isinstance(p, ReducedParams):
        return p.d, p.k, 1.0, p.phi
    raise TypeError(f"expected PhysicalParams or ReducedParams, got {type(p).__name__}")


@dataclass(frozen=True, eq=False)
class EffectiveMatrix:
    """The 2x2 matrix H with ``d/dt (a1, a2) = -i H (a1, a2) + drive``."""

    matrix: np.ndarray
    delta: float
    kappa: float
    Gamma: float
    Phi: float


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalue pair with ``Im(lambda_plus) >= Im(lambda_minus)``.

    ``lambda0_t`` and ``theta`` are the modulus and angle entering the closed
    form; they are NaN when the spectrum came from a numeric solve.
    """

    lambda_plus: complex
    lambda_minus: complex
    lambda0_t: float = float("nan")
    theta: float = float("nan")

    @property
    def splitting(self):
        return abs(self.lambda_plus - self.lambda_minus)


def matrix_elements(delta, kappa, Gamma, Phi):
    """Entries ``(h11, h22, h12)`` of H; broadcasts over array inputs."""
    delta = np.asarray(delta, dtype=float)
    loss = -0.5j * (kappa + Gamma)
    h11 = -0.5 * delta + loss
    h22 = 0.5 * delta + loss
    h12 = -0.5j * Gamma * np.cos(Phi) + 0.5 * Gamma * np.sin(Phi)
    return h11, h22, h12 * np.ones_like(delta)


def effective_matrix(p) -> EffectiveMatrix:
    delta, kappa, Gamma, Phi = _rates(p)
    h11, h22, h12 = matrix_elements(delta, kappa, Gamma, Phi)
    m = np.array([[complex(h11), complex(h12)], [complex(h12), complex(h22)]])
    return EffectiveMatrix(m, delta, kappa, Gamma, Phi)


def order_pair(l1, l2, scale=1.0):
    """Sort two eigenvalue arrays into ``(plus, minus)``.

    ``plus`` has the larger imaginary part; near-ties (within ``1e-12 * scale``)
    go to the larger real part.
    """
    l1 = np.asarray(l1, dtype=complex)
    l2 = np.asarray(l2, dtype=complex)
    dim = l1.imag - l2.imag
    tie = np.abs(dim) <= _TIE_RTOL * scale
    first = np.where(tie, l1.real >= l2.real, dim > 0)
    return np.where(first, l1, l2), np.where(first, l2, l1)


def closed_form_eigenvalues(delta, kappa, phi, Gamma=1.0):
    """Vectorized closed form; returns ``(plus, minus, lambda0_t, theta)``.

    ``theta`` uses the two-argument arctangent of
    ``(Gamma**2 sin 2Phi, Gamma**2 cos 2Phi - delta**2)`` so that the
    principal square root stays continuous across ``|delta| = Gamma``.
    """
    delta = np.asarray(delta, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    phi = np.asarray(phi, dtype=float)
    r2 = (delta / Gamma) ** 2
    lam0 = (1.0 + r2 * r2 - 2.0 * r2 * np.cos(2.0 * phi)) ** 0.25
    theta = np.arctan2(Gamma**2 * np.sin(2.0 * phi), Gamma**2 * np.cos(2.0 * phi) - delta**2)
    half = 0.5 * Gamma * lam0
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    base = 0.5 * (kappa + Gamma)
    lp = -1j * (base - half * c) - half * s
    lm = -1j * (base + half * c) + half * s
    plus, minus = order_pair(lp, lm, scale=Gamma)
    return plus, minus, lam0, theta


def eigenvalues_closed_form(p) -> Spectrum:
    """Closed-form spectrum of H for any detuning and phase deviation."""
    delta, kappa, Gamma, Phi = _rates(p)
    if not Gamma > 0:
        raise UsageError("Gamma must be positive")
    plus, minus, lam0, theta = closed_form_eigenvalues(delta, kappa, Phi, Gamma)
    return Spectrum(complex(plus), complex(minus), float(lam0), float(theta))


def quadratic_eigenvalues(h11, h22, h12, h21=None):
    """Eigenvalues of ``[[h11, h12], [h21, h22]]`` from the characteristic quadratic.

    Uses ``tr/2 +- sqrt(((h11 - h22)/2)**2 + h12 h21)``, which avoids forming
    ``tr**2 - 4 det`` and its cancellation. Broadcasts.
    """
    if h21 is None:
        h21 = h12
    h11, h22, h12, h21 = (np.asarray(v, dtype=complex) for v in (h11, h22, h12, h21))
    mean = 0.5 * (h11 + h22)
    root = np.sqrt((0.5 * (h11 - h22)) ** 2 + h12 * h21)
    return mean + root, mean - root


def eigenvalues_numeric(m) -> Spectrum:
    """Spectrum of an arbitrary 2x2 complex matrix."""
    if isinstance(m, EffectiveMatrix):
        scale = m.Gamma
        a = m.matrix
    else:
        a = np.asarray(m, dtype=complex)
        scale = max(float(np.abs(a).max()), 1e-300)
    if a.shape != (2, 2):
        raise UsageError(f"expected a 2x2 matrix, got shape {a.shape}")
    l1, l2 = quadratic_eigenvalues(a[0, 0], a[1, 1], a[0, 1], a[1, 0])
    plus, minus = order_pair(l1, l2, scale=scale)
    return Spectrum(complex(plus), complex(minus))


def linewidth_suppression_approx(kappa, Gamma, phi):
    """Small-phase estimate ``Im lambda_plus ~ -(kappa + Gamma phi**2 / 2) / 2`` at resonance."""
    return -0.5 * (kappa + 0.5 * Gamma * phi * phi)


def _discriminant(delta, Gamma, Phi):
    # (lambda_plus - lambda_minus)**2 = delta**2 - Gamma**2 exp(2 i Phi)
    return delta * delta - Gamma * Gamma * np.exp(2j * Phi)


def ep_locate(p, delta_range, n=2001, threshold=1e-6, max_iter=200):
    """Detunings of exceptional points inside ``delta_range``.

    Local minima of ``|lambda_plus - lambda_minus|`` on an ``n``-point grid are
    refined by bisection on the sign of ``d|disc|^2/d delta``; a minimum counts
    as an EP when the splitting there is below ``threshold * Gamma``.

    Parameters
    ----------
    p : PhysicalParams or ReducedParams
        Only ``kappa``, ``Gamma`` and ``phi`` are used.
    delta_range : tuple of float
        Scan window in the units of ``p``.
    """
    lo, hi = (float(v) for v in delta_range)
    if not hi > lo:
        raise UsageError(f"empty detuning scan range {delta_range!r}")
    if n < 3:
        raise UsageError("need at least 3 scan points")
    _, _, Gamma, Phi = _rates(p)

    grid = np.linspace(lo, hi, n)
    mag = np.abs(_discriminant(grid, Gamma, Phi))
    interior = np.nonzero((mag[1:-1] <= mag[:-2]) & (mag[1:-1] < mag[2:]))[0] + 1

    def slope(d):
        disc = _discriminant(d, Gamma, Phi)
        return 4.0 * d * disc.real  # d|disc|^2/d delta

    found = []
    for i in interior:
        a, b = grid[i - 1], grid[i + 1]
        sa = slope(a)
        for _ in range(max_iter):
            mid = 0.5 * (a + b)
            if mid in (a, b):
                break
            sm = slope(mid)
            if sm == 0:
                a = b = mid
                break
            if np.sign(sm) == np.sign(sa):
                a, sa = mid, sm
            else:
                b = mid
        d_ep = 0.5 * (a + b)
        if np.sqrt(abs(_discriminant(d_ep, Gamma, Phi))) < threshold * Gamma:
            found.append(float(d_ep))
    return found


__all__ = [
    "EffectiveMatrix",
    "Spectrum",
    "effective_matrix",
    "matrix_elements",
    "closed_form_eigenvalues",
    "eigenvalues_closed_form",
    "quadratic_eigenvalues",
    "eigenvalues_numeric",
    "order_pair",
    "linewidth_suppression_approx",
    "ep_locate",
]
