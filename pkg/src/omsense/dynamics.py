"""Mean-field equations of motion, attractors, linear stability and hysteresis.

The state is stored as the real vector
``(Re a1, Im a1, Re a2, Im a2, q, p)``. Integration runs in the scaled time
``tau = Gamma t`` with every component divided by a natural scale
(``sqrt(Gamma/chi)`` for the fields, ``Gamma/g`` for the mechanics), so that a
steady state on any branch has components of order one whatever the physical
parameters. Tolerances and norms quoted below refer to these scaled
coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    DivergenceError,
    IntegrationError,
    SettleError,
    StiffnessError,
    SweepError,
    UsageError,
)
from .params import PhysicalParams
from .steadystate import SteadyState, coefficients, solve_intensity


@dataclass(frozen=True)
class MeanFieldState:
    """Mean cavity amplitudes and mechanical quadratures (zero-point units)."""

    alpha1: complex
    alpha2: complex
    q: float
    p: float

    def __post_init__(self):
        vals = (self.alpha1.real, self.alpha1.imag, self.alpha2.real, self.alpha2.imag, self.q, self.p)
        if not all(math.isfinite(v) for v in vals):
            raise UsageError("state components must be finite")

    @classmethod
    def vacuum(cls):
        return cls(0j, 0j, 0.0, 0.0)

    @classmethod
    def from_vector(cls, y):
        y = np.asarray(y, dtype=float)
        return cls(complex(y[0], y[1]), complex(y[2], y[3]), float(y[4]), float(y[5]))

    @classmethod
    def from_steady(cls, s: SteadyState):
        return cls(s.alpha1, s.alpha2, s.q, s.p)

    def to_vector(self):
        a1, a2 = complex(self.alpha1), complex(self.alpha2)
        return np.array([a1.real, a1.imag, a2.real, a2.imag, self.q, self.p])

    @property
    def beta(self):
        return abs(self.alpha1) ** 2

    @property
    def norm(self):
        return float(np.linalg.norm(self.to_vector()))


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of linearizing about a fixed point.

    ``max_real`` is the largest real part among the Jacobian eigenvalues in
    rad/s; ``stable`` is ``max_real < 0``.
    """

    max_real: float
    eigenvalues: np.ndarray = field(repr=False)
    stable: bool


@dataclass
class Trajectory:
    """Sampled solution; ``t`` in seconds, ``states`` with shape ``(n, 6)``."""

    t: np.ndarray
    states: np.ndarray

    @property
    def final(self):
        return MeanFieldState.from_vector(self.states[-1])

    @property
    def beta(self):
        return self.states[:, 0] ** 2 + self.states[:, 1] ** 2


def _coupling(p: PhysicalParams):
    return np.exp(1j * p.phi) * (0.5 * p.Gamma)


def derivatives(s: MeanFieldState, p: PhysicalParams) -> MeanFieldState:
    """Right-hand sides of the mean-field equations."""
    K = 0.5 * (p.kappa + p.Gamma)
    c = _coupling(p)
    a1, a2 = complex(s.alpha1), complex(s.alpha2)
    da1 = (0.5j * p.delta - K) * a1 - c * a2 - 1j * p.g * s.q * a1 + p.Omega
    da2 = (-0.5j * p.delta - K) * a2 - c * a1
    dq = p.omega_m * s.p
    dp = -p.omega_m * s.q - p.g * abs(a1) ** 2 - p.gamma_m * s.p
    return MeanFieldState(da1, da2, dq, dp)


def _cmul(z):
    """Real 2x2 block for multiplication by the complex number ``z``."""
    return np.array([[z.real, -z.imag], [z.imag, z.real]])


def jacobian(s: MeanFieldState, p: PhysicalParams):
    """Analytic 6x6 Jacobian of :func:`derivatives` in the real layout."""
    K = 0.5 * (p.kappa + p.Gamma)
    c = complex(_coupling(p))
    a1 = complex(s.alpha1)
    J = np.zeros((6, 6))
    J[0:2, 0:2] = _cmul(0.5j * p.delta - K - 1j * p.g * s.q)
    J[0:2, 2:4] = _cmul(-c)
    J[0, 4] = p.g * a1.imag
    J[1, 4] = -p.g * a1.real
    J[2:4, 2:4] = _cmul(-0.5j * p.delta - K)
    J[2:4, 0:2] = _cmul(-c)
    J[4, 5] = p.omega_m
    J[5, 0] = -2.0 * p.g * a1.real
    J[5, 1] = -2.0 * p.g * a1.imag
    J[5, 4] = -p.omega_m
    J[5, 5] = -p.gamma_m
    return J


class _Scaled:
    """RHS and Jacobian in ``tau = Gamma t`` and component-scaled variables."""

    def __init__(self, p: PhysicalParams):
        self.p = p
        G = p.Gamma
        if p.chi > 0:
            fs = math.sqrt(G / p.chi)
        else:
            fs = max(1.0, p.Omega / G)
        ms = G / p.g if p.g > 0 else 1.0
        self.scale = np.array([fs, fs, fs, fs, ms, ms])
        self.G = G
        K = 0.5 * (p.kappa + G)
        c = complex(_coupling(p))
        self.d11 = complex(0.5j * p.delta - K)
        self.d22 = complex(-0.5j * p.delta - K)
        self.c = c

    def to_scaled(self, y):
        return np.asarray(y, dtype=float) / self.scale

    def to_physical(self, z):
        return np.asarray(z, dtype=float) * self.scale

    def rhs(self, tau, z):
        p = self.p
        y = z * self.scale
        a1 = complex(y[0], y[1])
        a2 = complex(y[2], y[3])
        q, pm = y[4], y[5]
        da1 = (self.d11 - 1j * p.g * q) * a1 - self.c * a2 + p.Omega
        da2 = self.d22 * a2 - self.c * a1
        dq = p.omega_m * pm
        dp = -p.omega_m * q - p.g * (a1.real**2 + a1.imag**2) - p.gamma_m * pm
        f = np.array([da1.real, da1.imag, da2.real, da2.imag, dq, dp])
        return f / (self.scale * self.G)

    def jac(self, tau, z):
        J = jacobian(MeanFieldState.from_vector(z * self.scale), self.p)
        return J * self.scale[None, :] / (self.scale[:, None] * self.G)

    def residual(self, z):
        """``||dz/dtau|| / max(1, ||z||)``."""
        return float(np.linalg.norm(self.rhs(0.0, z)) / max(1.0, np.linalg.norm(z)))


def _as_vector(s0):
    if isinstance(s0, MeanFieldState):
        return s0.to_vector()
    if isinstance(s0, SteadyState):
        return MeanFieldState.from_steady(s0).to_vector()
    y = np.asarray(s0, dtype=float)
    if y.shape != (6,):
        raise UsageError(f"expected a 6-component state, got shape {y.shape}")
    return y


def _run(sys: _Scaled, z0, tau_end, rtol, atol, method, bound, extra_events=(), t_eval=None):
    def blowup(tau, z):
        return bound - np.linalg.norm(z)

    blowup.terminal = True
    events = [blowup, *extra_events]
    kwargs = {}
    if method in ("Radau", "BDF", "LSODA"):
        kwargs["jac"] = sys.jac
    sol = solve_ivp(
        sys.rhs,
        (0.0, tau_end),
        z0,
        method=method,
        rtol=rtol,
        atol=atol,
        events=events,
        t_eval=t_eval,
        **kwargs,
    )
    last = sys.to_physical(sol.y[:, -1]) if sol.y.size else sys.to_physical(z0)
    t_last = (sol.t[-1] if sol.t.size else 0.0) / sys.G
    if sol.status == -1:
        raise StiffnessError(
            f"integration failed at t={t_last:.6g} s ({sol.message}); "
            "lower Gamma/omega_m or use an implicit method (Radau, BDF, LSODA)",
            last_state=MeanFieldState.from_vector(last),
            t=t_last,
        )
    if sol.t_events[0].size:
        zb = sol.y_events[0][0]
        raise DivergenceError(
            f"state norm exceeded {bound:g} (scaled units) at t={sol.t_events[0][0] / sys.G:.6g} s",
            last_state=MeanFieldState.from_vector(sys.to_physical(zb)),
            t=float(sol.t_events[0][0] / sys.G),
        )
    return sol


def integrate(s0, p: PhysicalParams, t_end, tol=1e-9, *, method="DOP853", n_samples=None,
              max_norm=1e6) -> Trajectory:
    """Integrate from ``s0`` for ``t_end`` seconds.

    Parameters
    ----------
    tol : float
        Relative and absolute local error tolerance in scaled units.
    method : str
        Any ``scipy.integrate.solve_ivp`` method; the default explicit
        eighth-order scheme suits ``Gamma/omega_m`` up to about 1e2, use
        ``"LSODA"`` or ``"Radau"`` for stiffer systems.
    n_samples : int, optional
        Number of equally spaced output times; by default the solver steps.
    max_norm : float
        Divergence bound on the scaled state norm.
    """
    if not tol > 0:
        raise UsageError("tol must be positive")
    if not t_end > 0:
        raise UsageError("t_end must be positive")
    sys = _Scaled(p)
    tau_end = t_end * sys.G
    z0 = sys.to_scaled(_as_vector(s0))
    t_eval = None if n_samples is None else np.linspace(0.0, tau_end, int(n_samples))
    sol = _run(sys, z0, tau_end, tol, tol, method, max_norm, t_eval=t_eval)
    return Trajectory(sol.t / sys.G, (sol.y * sys.scale[:, None]).T)


def _newton(sys: _Scaled, z, steps=8):
    """Polish an approximate fixed point; keeps a step only if it lowers the residual."""
    r = sys.residual(z)
    for _ in range(steps):
        try:
            dz = np.linalg.solve(sys.jac(0.0, z), -sys.rhs(0.0, z))
        except np.linalg.LinAlgError:
            break
        trial = z + dz
        rt = sys.residual(trial)
        if not rt < r:
            break
        z, r = trial, rt
    return z


def settle(s0, p: PhysicalParams, tol=1e-10, *, method="LSODA", max_periods=1000.0,
           rtol=1e-9, max_norm=1e6, polish=True) -> MeanFieldState:
    """Integrate until ``||f|| < tol * max(1, ||state||)`` and return the endpoint.

    The run is cut off after ``max_periods`` mechanical periods; the endpoint
    is then Newton-polished onto the exact fixed point it approached.

    Raises
    ------
    SettleError
        If the residual criterion is not met before the cutoff.
    """
    if not tol > 0:
        raise UsageError("tol must be positive")
    sys = _Scaled(p)
    z0 = sys.to_scaled(_as_vector(s0))
    if sys.residual(z0) >= tol:

        def done(tau, z):
            return sys.residual(z) - tol

        done.terminal = True
        done.direction = -1
        tau_end = max_periods * 2.0 * math.pi * sys.G / p.omega_m
        sol = _run(sys, z0, tau_end, rtol, rtol * 1e-3, method, max_norm, extra_events=(done,))
        z = sol.y[:, -1]
        if not sol.t_events[1].size:
            raise SettleError(
                f"no fixed point reached within {max_periods:g} mechanical periods "
                f"(residual {sys.residual(z):.3g})",
                last_state=MeanFieldState.from_vector(sys.to_physical(z)),
                t=float(sol.t[-1] / sys.G),
            )
        z0 = sol.y_events[1][0]
    if polish:
        z0 = _newton(sys, z0)
    return MeanFieldState.from_vector(sys.to_physical(z0))


def fixed_point_residual(s: MeanFieldState, p: PhysicalParams) -> float:
    """Scaled residual ``||f|| / max(1, ||state||)`` used by :func:`settle`."""
    sys = _Scaled(p)
    return sys.residual(sys.to_scaled(s.to_vector()))


def linear_stability(s, p: PhysicalParams, tol=1e-8) -> StabilityReport:
    """Eigenvalues of the Jacobian at a fixed point.

    Raises :class:`UsageError` if the scaled residual exceeds ``tol``.
    """
    y = _as_vector(s)
    sys = _Scaled(p)
    z = sys.to_scaled(y)
    r = sys.residual(z)
    if not r <= tol:
        raise UsageError(f"state is not a fixed point (scaled residual {r:.3g} > {tol:g})")
    ev = np.linalg.eigvals(sys.jac(0.0, z)) * sys.G
    mr = float(ev.real.max())
    return StabilityReport(mr, ev, mr < 0)


def steady_states(p: PhysicalParams):
    """Cubic roots rebuilt as full mean-field states, ascending in ``beta``."""
    return [MeanFieldState.from_steady(s) for s in solve_intensity(coefficients(p))]


@dataclass
class HysteresisTrace:
    """Result of a quasi-static sweep.

    ``branch`` names the cubic root nearest to each settled state;
    ``jump`` marks steps whose relative change in ``beta`` exceeds the sweep
    threshold; ``leg`` counts direction reversals from zero.
    """

    name: str
    values: np.ndarray
    beta: np.ndarray
    branch: list
    jump: np.ndarray
    leg: np.ndarray

    def jump_locations(self, leg=None):
        """Midpoints between the two samples bracketing each jump."""
        out = []
        for i in np.nonzero(self.jump)[0]:
            if leg is None or self.leg[i] == leg:
                out.append(0.5 * (self.values[i - 1] + self.values[i]))
        return out

    @property
    def loop_area(self):
        """Absolute area enclosed by the ``(value, beta)`` polygon."""
        x, y = self.values, self.beta
        if x.size < 3:
            return 0.0
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def split_legs(path):
    """Leg index per point; a new leg starts whenever the direction reverses."""
    path = np.asarray(path, dtype=float)
    if path.ndim != 1 or path.size < 2:
        raise UsageError("a sweep path needs at least two values")
    steps = np.diff(path)
    if np.any(steps == 0):
        raise UsageError("sweep path repeats a value; legs must be strictly monotone")
    legs = np.zeros(path.size, dtype=int)
    for i in range(1, steps.size):
        legs[i + 1] = legs[i] + (1 if np.sign(steps[i]) != np.sign(steps[i - 1]) else 0)
    return legs


def _nearest_branch(p, beta):
    roots = solve_intensity(coefficients(p))
    if not roots:
        return "none"
    best = min(roots, key=lambda r: abs(r.beta - beta))
    return best.branch


def hysteresis_sweep(p: PhysicalParams, name, path, *, s0=None, jump_threshold=0.25,
                     **settle_kwargs) -> HysteresisTrace:
    """Sweep ``phi`` or ``delta`` along ``path``, settling from the previous endpoint.

    The first point starts from ``s0`` (vacuum by default). A jump is flagged
    where ``|beta_i - beta_{i-1}| / max(beta_i, beta_{i-1}) > jump_threshold``
    unless both states sit on a lone steady state; runs of flagged steps are
    merged into the one with the largest change.

    Raises
    ------
    SweepError
        Wrapping any integration failure, with the failing step index.
    """
    if name not in ("phi", "delta"):
        raise UsageError(f"cannot sweep {name!r}; use 'phi' or 'delta'")
    path = np.asarray(path, dtype=float)
    legs = split_legs(path)
    state = MeanFieldState.vacuum() if s0 is None else s0
    betas, tags = [], []
    for i, v in enumerate(path):
        pi = p.with_(**{name: float(v)})
        try:
            state = settle(state, pi, **settle_kwargs)
        except (IntegrationError, UsageError) as exc:
            raise SweepError(f"sweep failed at step {i} ({name}={v:.6g}): {exc}", step=i, value=float(v),
                             cause=exc) from exc
        betas.append(state.beta)
        tags.append(_nearest_branch(pi, state.beta))
    beta = np.array(betas)
    prev, cur = beta[:-1], beta[1:]
    denom = np.maximum(np.maximum(prev, cur), np.finfo(float).tiny)
    rel = np.zeros(beta.size)
    rel[1:] = np.abs(cur - prev) / denom
    # only a change of branch can be a jump; on a single branch beta is smooth
    single = np.array([t == "single" for t in tags])
    jump = rel > jump_threshold
    jump[1:] &= ~(single[1:] & single[:-1])
    # a steep approach to a fold can flag neighbouring steps; keep the largest
    i = 1
    while i < beta.size:
        if jump[i]:
            j = i
            while j + 1 < beta.size and jump[j + 1] and legs[j + 1] == legs[i]:
                j += 1
            keep = i + int(np.argmax(rel[i:j + 1]))
            jump[i:j + 1] = False
            jump[keep] = True
            i = j + 1
        else:
            i += 1
    return HysteresisTrace(name, path, beta, tags, jump, legs)


__all__ = [
    "MeanFieldState",
    "StabilityReport",
    "Trajectory",
    "HysteresisTrace",
    "derivatives",
    "jacobian",
    "integrate",
    "settle",
    "fixed_point_residual",
    "linear_stability",
    "steady_states",
    "split_legs",
    "hysteresis_sweep",
]
