"""Static response of the driven optomechanical cavity.

After eliminating the mechanics and the auxiliary cavity, the intracavity
intensity ``beta = |alpha1|**2`` obeys::

    chi**2 beta**3 + chi A beta**2 + B beta = I

Raw coefficients span tens of decades (``chi ~ 1e-3 /s``, ``beta ~ 1e9``), so
all root finding is done on ``x = chi beta / Gamma``::

    x**3 + (A/Gamma) x**2 + (B/Gamma**2) x = I chi / Gamma**3
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import cubic
from .errors import NoPhysicalSolutionError, UsageError
from .params import PhysicalParams


def reduced_coefficients(d, k, phi):
    """``(A/Gamma, B/Gamma**2)`` for dimensionless detuning ``d`` and decay ``k``.

    Broadcasts over array inputs.
    """
    d = np.asarray(d, dtype=float)
    phi = np.asarray(phi, dtype=float)
    kg = np.asarray(k, dtype=float) + 1.0
    s = d * d + kg * kg
    c2, s2 = np.cos(2.0 * phi), np.sin(2.0 * phi)
    A = d + (-d * c2 + kg * s2) / s
    B = 0.25 * s + 0.25 / s - 0.5 * c2
    return A, B


@dataclass(frozen=True)
class CubicCoefficients:
    """Coefficients of the intensity cubic together with their source parameters.

    ``A`` in rad/s, ``B`` in (rad/s)**2, ``chi`` in rad/s, ``I`` in s^-2.
    """

    A: float
    B: float
    chi: float
    I: float
    params: PhysicalParams = field(repr=False)

    @property
    def Gamma(self):
        return self.params.Gamma

    @property
    def reduced(self):
        """``(a, b, c)`` of the dimensionless cubic."""
        G = self.Gamma
        return self.A / G, self.B / G**2, self.I * self.chi / G**3


@dataclass(frozen=True)
class SteadyState:
    """One steady state reconstructed from a cubic root.

    ``q`` and ``p`` are the mechanical quadratures in zero-point units;
    ``branch`` is ``"lower"``, ``"middle"``, ``"upper"`` in the three-root case
    and ``"single"`` otherwise.
    """

    beta: float
    alpha1: complex
    alpha2: complex
    q: float
    p: float
    stable: bool
    branch: str


def coefficients(p: PhysicalParams) -> CubicCoefficients:
    G = p.Gamma
    a, b = reduced_coefficients(p.delta / G, p.kappa / G, p.phi)
    return CubicCoefficients(float(a) * G, float(b) * G * G, p.chi, p.intensity, p)


def field_amplitudes(p: PhysicalParams, beta):
    """``(alpha1, alpha2)`` for intensity ``beta`` with a real positive drive."""
    kg = p.kappa + p.Gamma
    e2 = np.exp(2j * p.phi)
    x = complex(-0.5j * p.delta + 0.5 * kg) - e2 * p.Gamma**2 / (2.0 * (1j * p.delta + kg))
    den = x - 1j * p.chi * beta
    alpha1 = p.Omega / den
    alpha2 = -p.Gamma * np.exp(1j * p.phi) * alpha1 / (1j * p.delta + kg)
    return complex(alpha1), complex(alpha2)


def _roots_beta(c: CubicCoefficients):
    """Ascending non-negative roots in photon number."""
    if c.I < 0 or c.chi < 0:
        raise UsageError("I and chi must be non-negative")
    G = c.Gamma
    if c.chi == 0:
        if c.I == 0:
            return np.array([0.0])
        if c.B <= 0:
            raise NoPhysicalSolutionError("linear response with B <= 0 has no finite intensity")
        return np.array([c.I / c.B])
    a, b, cc = c.reduced
    roots, n = cubic.positive_roots(a, b, cc)
    return roots[: int(n)] * G / c.chi


def classify_roots(roots, c: CubicCoefficients):
    """Static stability: a root is stable iff ``dI/dbeta > 0``.

    A root sitting exactly on a turning point (``dI/dbeta == 0``) is marginal
    and reported unstable.
    """
    roots = np.asarray(roots, dtype=float)
    if c.chi == 0:
        return [bool(c.B > 0)] * roots.size
    G = c.Gamma
    a, b, _ = c.reduced
    slope = cubic.derivative(roots * c.chi / G, a, b)
    return [bool(s > 0) for s in np.atleast_1d(slope)]


def solve_intensity(c: CubicCoefficients) -> list[SteadyState]:
    """All non-negative steady states, ascending in ``beta``."""
    roots = _roots_beta(c)
    flags = classify_roots(roots, c)
    p = c.params
    tags = ["lower", "middle", "upper"] if roots.size == 3 else ["single"] * roots.size
    states = []
    for beta, stable, tag in zip(roots, flags, tags):
        a1, a2 = field_amplitudes(p, beta)
        states.append(
            SteadyState(
                beta=float(beta),
                alpha1=a1,
                alpha2=a2,
                q=-p.g / p.omega_m * float(beta),
                p=0.0,
                stable=stable,
                branch=tag,
            )
        )
    return states


def intensity_cubic(beta, c: CubicCoefficients):
    """Left-hand side ``chi**2 beta**3 + chi A beta**2 + B beta``."""
    beta = np.asarray(beta, dtype=float)
    return ((c.chi * c.chi * beta + c.chi * c.A) * beta + c.B) * beta


def turning_points(c: CubicCoefficients):
    """Fold intensities ``(beta_minus, beta_plus)`` or ``None``.

    Returned only when ``A < 0``, ``A**2 > 3B`` and ``beta_minus > 0``.
    """
    if c.chi == 0:
        raise UsageError("turning points need a non-zero Kerr coefficient")
    G = c.Gamma
    a, b, _ = c.reduced
    disc = a * a - 3.0 * b
    if not (a < 0 and disc > 0):
        return None
    r = math.sqrt(disc)
    lo = (-a - r) / 3.0
    if not lo > 0:
        return None
    # (-a - r)/3 == b / (-a + r) after multiplying out; use the stable form
    lo = b / (-a + r)
    hi = (-a + r) / 3.0
    scale = G / c.chi
    return lo * scale, hi * scale


def fold_intensities(c: CubicCoefficients):
    """Drive levels ``(I_low, I_high)`` bounding the three-root window, or ``None``.

    ``I_low`` is the value at the upper turning point (where the upper branch
    ends) and ``I_high`` the value at the lower turning point.
    """
    tp = turning_points(c)
    if tp is None:
        return None
    lo, hi = tp
    return float(intensity_cubic(hi, c)), float(intensity_cubic(lo, c))


@dataclass
class GridResult:
    """Output of a two-axis sweep.

    ``phi`` runs along axis 0 and ``delta`` (rad/s) along axis 1 of every
    array in ``values``.
    """

    phi: np.ndarray
    delta: np.ndarray
    values: dict
    meta: dict = field(default_factory=dict)


MONOSTABLE, NECESSARY, BISTABLE = 0, 1, 2
REGION_LABELS = {MONOSTABLE: "monostable", NECESSARY: "bistable-necessary", BISTABLE: "bistable-actual"}


def classify_grid(d, k, phi, drive_t):
    """Region class per cell for dimensionless inputs (broadcast).

    Returns ``(cls, count, A, B)``. ``cls`` is 2 where the cubic has three
    positive roots, 1 where only the drive-independent conditions
    ``A < 0`` and ``A**2 > 3B`` hold, 0 elsewhere.
    """
    a, b = reduced_coefficients(d, k, phi)
    a, b, c = np.broadcast_arrays(a, b, np.asarray(drive_t, dtype=float))
    _, count = cubic.positive_roots(a, b, c)
    necessary = (a < 0) & (a * a > 3.0 * b)
    cls = np.where(count == 3, BISTABLE, np.where(necessary, NECESSARY, MONOSTABLE))
    return cls, count, a, b


def bistable_region_map(p: PhysicalParams, phis, deltas) -> GridResult:
    """Classify each ``(phi, delta)`` cell of a grid for the drive in ``p``.

    ``deltas`` are in rad/s.
    """
    phis = np.asarray(phis, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    if phis.ndim != 1 or deltas.ndim != 1 or phis.size == 0 or deltas.size == 0:
        raise UsageError("phis and deltas must be non-empty 1-D arrays")
    G = p.Gamma
    P, D = np.meshgrid(phis, deltas / G, indexing="ij")
    drive_t = p.intensity * p.chi / G**3
    cls, count, a, b = classify_grid(D, p.kappa / G, P, drive_t)
    return GridResult(
        phi=phis,
        delta=deltas,
        values={"class": cls, "count": count, "A_over_Gamma": a, "B_over_Gamma2": b},
        meta={"drive_t": drive_t, "kappa_over_Gamma": p.kappa / G},
    )


def root_count(p: PhysicalParams) -> int:
    """Number of non-negative steady states."""
    return int(_roots_beta(coefficients(p)).size)


def fold_locations(p: PhysicalParams, name, lo, hi, n=400, xtol=None):
    """Parameter values in ``[lo, hi]`` where the number of steady states changes.

    The root count is sampled on ``n`` points and every change is bisected
    down to ``xtol`` (default ``1e-12 * (hi - lo)``).

    Returns
    -------
    list of tuple
        ``(value, count_below, count_above)`` in ascending order.
    """
    if name not in ("phi", "delta"):
        raise UsageError(f"cannot locate folds along {name!r}")
    if not hi > lo:
        raise UsageError("empty parameter range")
    if xtol is None:
        xtol = 1e-12 * (hi - lo)

    def count(v):
        return root_count(p.with_(**{name: float(v)}))

    grid = np.linspace(lo, hi, n)
    counts = [count(v) for v in grid]
    out = []
    for i in range(n - 1):
        if counts[i] == counts[i + 1]:
            continue
        a, b, ca = grid[i], grid[i + 1], counts[i]
        while b - a > xtol:
            mid = 0.5 * (a + b)
            if count(mid) == ca:
                a = mid
            else:
                b = mid
        out.append((float(0.5 * (a + b)), ca, counts[i + 1]))
    return out


__all__ = [
    "CubicCoefficients",
    "SteadyState",
    "GridResult",
    "reduced_coefficients",
    "coefficients",
    "field_amplitudes",
    "solve_intensity",
    "classify_roots",
    "intensity_cubic",
    "turning_points",
    "fold_intensities",
    "classify_grid",
    "bistable_region_map",
    "fold_locations",
    "root_count",
    "REGION_LABELS",
    "MONOSTABLE",
    "NECESSARY",
    "BISTABLE",
]
