"""System parameters, unit conversions and nondimensionalization.

All rates are angular frequencies in rad/s. Everything downstream of
:func:`reduce` works in units of the waveguide-induced rate ``Gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DomainError, UnsupportedConfigurationError

HBAR = 1.054571817e-34  # J s
C_LIGHT = 299_792_458.0  # m/s, exact
TWO_PI = 2.0 * math.pi

# gamma_m is not fixed by the model; only the relaxation time depends on it
# for the static response.
DEFAULT_GAMMA_M_RATIO = 1e-2


def wavelength_to_angular_frequency(wavelength):
    """Return ``2 pi c / wavelength`` in rad/s."""
    if not wavelength > 0:
        raise DomainError(f"wavelength must be positive, got {wavelength!r}")
    return TWO_PI * C_LIGHT / wavelength


def drive_intensity(P_in, kappa1, omega_d):
    """Drive intensity ``I = Omega**2 = P_in * kappa1 / (hbar * omega_d)``.

    Parameters
    ----------
    P_in : float
        Input laser power in W. Zero is allowed and gives ``I = 0``.
    kappa1 : float
        Decay rate of the driven cavity in rad/s.
    omega_d : float
        Laser angular frequency in rad/s.

    Returns
    -------
    float
        ``I`` in s^-2.
    """
    if P_in < 0 or not math.isfinite(P_in):
        raise DomainError(f"P_in must be non-negative, got {P_in!r}")
    if not kappa1 > 0:
        raise DomainError(f"kappa1 must be positive, got {kappa1!r}")
    if not omega_d > 0:
        raise DomainError(f"omega_d must be positive, got {omega_d!r}")
    return P_in * kappa1 / (HBAR * omega_d)


def kerr_coefficient(g, omega_m):
    """Optomechanically induced Kerr coefficient ``chi = g**2 / omega_m``."""
    if not omega_m > 0:
        raise DomainError(f"omega_m must be positive, got {omega_m!r}")
    return g * g / omega_m


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional description of one experiment.

    ``phi`` is the deviation of the propagation phase from a multiple of
    ``2 pi`` and must lie on the branch ``|phi| < pi``. If ``gamma_m`` is left
    as ``None`` it is set to ``1e-2 * omega_m``. ``I_drive`` (s^-2) fixes the
    drive intensity directly, bypassing ``P_in``, which allows a finite drive
    on a lossless cavity.
    """

    Gamma: float
    kappa1: float
    kappa2: float
    delta: float = 0.0
    phi: float = 0.0
    omega_m: float = TWO_PI * 1e4
    gamma_m: float | None = None
    g: float = TWO_PI * 1.0
    P_in: float = 8.06e-3
    lambda_d: float = 1550e-9
    I_drive: float | None = None

    def __post_init__(self):
        if self.gamma_m is None:
            object.__setattr__(self, "gamma_m", DEFAULT_GAMMA_M_RATIO * self.omega_m)
        checks = (
            ("Gamma", self.Gamma > 0),
            ("kappa1", self.kappa1 >= 0),
            ("kappa2", self.kappa2 >= 0),
            ("omega_m", self.omega_m > 0),
            ("gamma_m", self.gamma_m >= 0),
            ("g", self.g >= 0),
            ("P_in", self.P_in >= 0),
            ("lambda_d", self.lambda_d > 0),
            ("phi", abs(self.phi) < math.pi),
            ("delta", math.isfinite(self.delta)),
            ("I_drive", self.I_drive is None or self.I_drive >= 0),
        )
        for name, ok in checks:
            if not ok:
                raise DomainError(f"invalid {name}={getattr(self, name)!r}")

    @property
    def kappa(self):
        if self.kappa1 != self.kappa2:
            raise UnsupportedConfigurationError(
                f"unequal cavity decay rates (kappa1={self.kappa1}, kappa2={self.kappa2}) "
                "are not supported"
            )
        return self.kappa1

    @property
    def omega_d(self):
        return wavelength_to_angular_frequency(self.lambda_d)

    @property
    def chi(self):
        return kerr_coefficient(self.g, self.omega_m)

    @property
    def intensity(self):
        """Drive intensity ``I`` in s^-2.

        ``I_drive`` takes precedence when set; otherwise ``I`` follows from the
        input power and is zero when the driven cavity is lossless.
        """
        if self.I_drive is not None:
            return float(self.I_drive)
        if self.P_in == 0 or self.kappa1 == 0:
            return 0.0
        return drive_intensity(self.P_in, self.kappa1, self.omega_d)

    @property
    def Omega(self):
        """Real drive amplitude ``sqrt(I)`` in s^-1."""
        return math.sqrt(self.intensity)

    def with_(self, **changes):
        """Copy with fields replaced; ``kappa=`` sets both decay rates."""
        if "kappa" in changes:
            k = changes.pop("kappa")
            changes.setdefault("kappa1", k)
            changes.setdefault("kappa2", k)
        return replace(self, **changes)


@dataclass(frozen=True)
class ReducedParams:
    """Dimensionless parameters in units of ``Gamma``.

    ``intensity_t = I / Gamma**2`` is kept so that the linear case ``chi = 0``
    still carries its drive; ``drive_t = I chi / Gamma**3`` is derived.
    """

    d: float
    k: float
    phi: float
    chi_t: float = 0.0
    intensity_t: float = 0.0

    def __post_init__(self):
        if self.k < 0 or self.chi_t < 0 or self.intensity_t < 0:
            raise DomainError("k, chi_t and intensity_t must be non-negative")

    @property
    def drive_t(self):
        return self.intensity_t * self.chi_t


def reduce(p: PhysicalParams) -> ReducedParams:
    """Scale a :class:`PhysicalParams` by ``Gamma``."""
    G = p.Gamma
    return ReducedParams(
        d=p.delta / G,
        k=p.kappa / G,
        phi=p.phi,
        chi_t=p.chi / G,
        intensity_t=p.intensity / G**2,
    )


def inflate(r: ReducedParams, Gamma):
    """Inverse of :func:`reduce` for the quantities it preserves.

    Returns a dict with ``delta``, ``kappa``, ``chi`` (rad/s) and ``I`` (s^-2).
    """
    if not Gamma > 0:
        raise DomainError("Gamma must be positive")
    return {
        "delta": r.d * Gamma,
        "kappa": r.k * Gamma,
        "chi": r.chi_t * Gamma,
        "I": r.intensity_t * Gamma**2,
    }


def paper_params(**overrides) -> PhysicalParams:
    """Default sensing operating point.

    Gamma/2pi = 100 MHz, omega_m/2pi = 10 kHz, kappa/Gamma = 2e-3,
    P_in = 8.06 mW at 1550 nm, g/2pi = 1 Hz, on resonance with phi = 0.
    ``kappa`` may be overridden as a shortcut for both decay rates.
    """
    Gamma = TWO_PI * 100e6
    base = PhysicalParams(
        Gamma=Gamma,
        kappa1=2e-3 * Gamma,
        kappa2=2e-3 * Gamma,
        delta=0.0,
        phi=0.0,
        omega_m=TWO_PI * 1e4,
        g=TWO_PI * 1.0,
        P_in=8.06e-3,
        lambda_d=1550e-9,
    )
    return base.with_(**overrides) if overrides else base


def at_stiffness(p: PhysicalParams, ratio, gamma_m_ratio=None) -> PhysicalParams:
    """Move to ``Gamma / omega_m = ratio`` keeping ``chi`` (hence all statics) fixed.

    ``gamma_m`` is set to ``gamma_m_ratio * omega_m``; by default the current
    ``gamma_m / omega_m`` is kept.
    """
    if not ratio > 0:
        raise DomainError("stiffness ratio must be positive")
    if gamma_m_ratio is None:
        gamma_m_ratio = p.gamma_m / p.omega_m
    omega_m = p.Gamma / ratio
    g = math.sqrt(p.chi * omega_m)
    return replace(p, omega_m=omega_m, g=g, gamma_m=gamma_m_ratio * omega_m)


@dataclass(frozen=True)
class NanosphereParams:
    """Levitated nanosphere carrying ``N`` two-level emitters.

    Attributes
    ----------
    N : int
        Number of emitters.
    p_e : float
        Steady excited-state population.
    Omega_c : float
        Emitter-cavity coupling at the trap distance (rad/s).
    Delta_c : float
        Emitter-cavity detuning (rad/s), non-zero.
    gamma_c : float
        Decay constant of the evanescent field (1/m).
    q_zpf : float
        Zero-point motion of the nanosphere (m).
    """

    N: int
    p_e: float
    Omega_c: float
    Delta_c: float
    gamma_c: float
    q_zpf: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N!r}")
        if not 0.0 <= self.p_e <= 1.0:
            raise DomainError(f"p_e must lie in [0, 1], got {self.p_e!r}")
        if self.Delta_c == 0:
            raise DomainError("Delta_c must be non-zero (dispersive regime)")


def nanosphere_coupling(p: NanosphereParams):
    """Signed single-photon optomechanical coupling ``g`` in rad/s.

    ``g = -sqrt(2) N (2 p_e - 1) Omega_c**2 / (2 Delta_c) * gamma_c * q_zpf``.
    Use ``abs(g)`` when forming ``chi``.
    """
    if p.Delta_c == 0:
        raise DomainError("Delta_c must be non-zero")
    return (
        -math.sqrt(2.0)
        * p.N
        * (2.0 * p.p_e - 1.0)
        * p.Omega_c**2
        / (2.0 * p.Delta_c)
        * p.gamma_c
        * p.q_zpf
    )


def emitter_count(density, radius):
    """Number of emitters in a sphere: ``round(density * 4/3 pi R**3)``."""
    if density < 0 or radius <= 0:
        raise DomainError("density must be >= 0 and radius > 0")
    return max(1, round(density * 4.0 / 3.0 * math.pi * radius**3))


def zero_point_motion(mass, omega_m):
    """``q_zpf = sqrt(hbar / (2 m omega_m))`` in m."""
    if mass <= 0 or omega_m <= 0:
        raise DomainError("mass and omega_m must be positive")
    return math.sqrt(HBAR / (2.0 * mass * omega_m))


__all__ = [
    "HBAR",
    "C_LIGHT",
    "TWO_PI",
    "PhysicalParams",
    "ReducedParams",
    "NanosphereParams",
    "drive_intensity",
    "kerr_coefficient",
    "wavelength_to_angular_frequency",
    "reduce",
    "inflate",
    "paper_params",
    "at_stiffness",
    "nanosphere_coupling",
    "emitter_count",
    "zero_point_motion",
]
