"""Sensitivity of the steady intensity to the optomechanical coupling.

The figure of merit is ``eta = beta(g1) / beta(g2)`` with ``g1 < g2``. When
``g1`` leaves a single steady state while ``g2`` still has three (region II)
the upper branch of ``g2`` sits far above that of ``g1`` and ``1/eta`` is the
useful number.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import cubic
from .errors import NoPhysicalSolutionError, UndefinedBandwidthError, UsageError
from .params import PhysicalParams, TWO_PI, kerr_coefficient
from .steadystate import GridResult, reduced_coefficients

DEFAULT_G1 = TWO_PI * 1.0
DEFAULT_G2 = TWO_PI * 3.0

REGION_NONE, REGION_I, REGION_II = 0, 1, 2
REGION_NAMES = {REGION_NONE: "none", REGION_I: "I", REGION_II: "II"}

# relative spread under which an eta profile counts as flat
_FLAT_RTOL = 1e-12


@dataclass(frozen=True)
class SensitivityPoint:
    """Sensitivity at one operating point.

    ``count_g1`` and ``count_g2`` are the numbers of steady states; region II
    is ``count_g1 == 1`` with ``count_g2 == 3``.
    """

    phi: float
    delta: float
    beta_g1: float
    beta_g2: float
    eta: float
    region: str
    count_g1: int
    count_g2: int

    @property
    def eta_inv(self):
        return 1.0 / self.eta

    @property
    def reported(self):
        """``1/eta`` in region II, ``eta`` elsewhere."""
        return self.eta_inv if self.region == "II" else self.eta


def _check_pair(g1, g2):
    if g1 < 0 or g2 < 0:
        raise UsageError("couplings must be non-negative")
    if g1 > g2:
        raise UsageError(f"expected g1 <= g2, got g1={g1!r}, g2={g2!r}")


def _pick(roots, branch):
    if branch == "upper":
        return np.nanmax(np.where(np.isfinite(roots), roots, -np.inf), axis=-1)
    if branch == "lower":
        return np.nanmin(np.where(np.isfinite(roots), roots, np.inf), axis=-1)
    raise UsageError(f"branch must be 'upper' or 'lower', got {branch!r}")


def branch_intensity(d, k, phi, drive_t, branch="upper"):
    """Scaled intensity ``x = chi beta / Gamma`` on the chosen branch and the root count.

    The largest root always has ``dI/dbeta > 0``, so ``"upper"`` is the largest
    stable root; ``"lower"`` is the smallest. Cells without a positive root
    give NaN.
    """
    a, b = reduced_coefficients(d, k, phi)
    roots, count = cubic.positive_roots(a, b, drive_t)
    with np.errstate(invalid="ignore"):
        x = _pick(roots, branch)
    x = np.where(count > 0, x, np.nan)
    return x, count


def _region_codes(eta, n1, n2):
    two = (n1 == 1) & (n2 == 3)
    with np.errstate(invalid="ignore"):
        one = ~two & (eta > 1.0)
    return np.where(two, REGION_II, np.where(one, REGION_I, REGION_NONE))


def _evaluate(p: PhysicalParams, g1, g2, phi, d, branch):
    """Vectorized core; ``d`` is ``delta / Gamma``. Returns a dict of arrays."""
    G = p.Gamma
    I = p.intensity
    k = p.kappa / G
    chi1 = kerr_coefficient(g1, p.omega_m)
    chi2 = kerr_coefficient(g2, p.omega_m)
    if chi1 == 0 or chi2 == 0:
        raise UsageError("couplings must be positive")
    x1, n1 = branch_intensity(d, k, phi, I * chi1 / G**3, branch)
    x2, n2 = branch_intensity(d, k, phi, I * chi2 / G**3, branch)
    # beta = x Gamma / chi; the Gamma cancels in the ratio
    with np.errstate(invalid="ignore", divide="ignore"):
        eta = (x1 / x2) * (chi2 / chi1)
    return {
        "beta_g1": x1 * G / chi1,
        "beta_g2": x2 * G / chi2,
        "eta": eta,
        "count_g1": n1,
        "count_g2": n2,
        "region": _region_codes(eta, n1, n2),
    }


def sensitivity(p: PhysicalParams, g1=DEFAULT_G1, g2=DEFAULT_G2, branch="upper") -> SensitivityPoint:
    """``eta = beta(g1) / beta(g2)`` at the operating point in ``p``.

    Raises
    ------
    NoPhysicalSolutionError
        If either coupling has no positive steady state (for instance zero drive).
    """
    _check_pair(g1, g2)
    if p.intensity == 0:
        raise NoPhysicalSolutionError("zero drive leaves only the vacuum state")
    r = _evaluate(p, g1, g2, p.phi, p.delta / p.Gamma, branch)
    if not (np.isfinite(r["beta_g1"]) and np.isfinite(r["beta_g2"])):
        raise NoPhysicalSolutionError("no positive steady state for one of the couplings")
    return SensitivityPoint(
        phi=p.phi,
        delta=p.delta,
        beta_g1=float(r["beta_g1"]),
        beta_g2=float(r["beta_g2"]),
        eta=float(r["eta"]),
        region=REGION_NAMES[int(r["region"])],
        count_g1=int(r["count_g1"]),
        count_g2=int(r["count_g2"]),
    )


def region_classify(p: PhysicalParams, g1=DEFAULT_G1, g2=DEFAULT_G2) -> str:
    """``"II"`` if only ``g2`` is bistable, ``"I"`` if otherwise ``eta > 1``, else ``"none"``."""
    return sensitivity(p, g1, g2).region


def resolve_threads(threads=None):
    """Thread count from the argument, then ``OMSENSE_THREADS``, then 1."""
    if threads is None:
        env = os.environ.get("OMSENSE_THREADS")
        threads = int(env) if env else 1
    if threads < 1:
        raise UsageError("thread count must be at least 1")
    return int(threads)


def sensitivity_map(p: PhysicalParams, phis, deltas, g1=DEFAULT_G1, g2=DEFAULT_G2, *,
                    branch="upper", threads=None) -> GridResult:
    """Evaluate the sensitivity on the ``(phi, delta)`` grid.

    ``deltas`` are in rad/s. Cells without a steady state carry NaN and
    ``status == 1``. Rows are split across ``threads`` workers; the result
    does not depend on the thread count.
    """
    _check_pair(g1, g2)
    phis = np.asarray(phis, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    if phis.ndim != 1 or deltas.ndim != 1 or phis.size == 0 or deltas.size == 0:
        raise UsageError("phis and deltas must be non-empty 1-D arrays")
    if not (np.all(np.isfinite(phis)) and np.all(np.isfinite(deltas))):
        raise UsageError("grid values must be finite")
    d = deltas / p.Gamma
    nthreads = min(resolve_threads(threads), phis.size)

    def rows(chunk):
        P, Dg = np.meshgrid(chunk, d, indexing="ij")
        return _evaluate(p, g1, g2, P, Dg, branch)

    chunks = np.array_split(phis, nthreads)
    if nthreads == 1:
        parts = [rows(phis)]
    else:
        with ThreadPoolExecutor(max_workers=nthreads) as ex:
            parts = list(ex.map(rows, chunks))
    values = {key: np.concatenate([part[key] for part in parts], axis=0) for key in parts[0]}
    values["status"] = (~np.isfinite(values["eta"])).astype(int)
    return GridResult(phi=phis, delta=deltas, values=values,
                      meta={"g1": g1, "g2": g2, "branch": branch})


def eta_profile(p: PhysicalParams, deltas, g1=DEFAULT_G1, g2=DEFAULT_G2, branch="upper"):
    """``eta`` along ``deltas`` (rad/s) at the phase in ``p``, with region codes."""
    _check_pair(g1, g2)
    r = _evaluate(p, g1, g2, p.phi, np.asarray(deltas, dtype=float) / p.Gamma, branch)
    return r["eta"], r["region"]


@dataclass(frozen=True)
class BandwidthResult:
    """Contiguous window around the peak where the metric stays above threshold.

    ``width``, ``lo``, ``hi`` and ``peak_delta`` are in rad/s. ``clipped`` is
    set when the window reaches the scan boundary.
    """

    width: float
    lo: float
    hi: float
    peak_delta: float
    peak_value: float
    clipped: bool


def _metric(p, g1, g2, metric):
    def f(delta):
        eta, _ = eta_profile(p, delta, g1, g2)
        return 1.0 / eta if metric == "inverse" else eta

    return f


def bandwidth_window(p: PhysicalParams, g1=DEFAULT_G1, g2=DEFAULT_G2, drop=0.1, *,
                     delta_range=None, n=2001, metric="inverse") -> BandwidthResult:
    """Window in ``delta`` where the metric stays within ``(1 - drop)`` of its peak.

    Parameters
    ----------
    metric : {"inverse", "direct"}
        ``1/eta`` (the region-II figure of merit) or ``eta``.
    delta_range : tuple, optional
        Scan window in rad/s, by default ``(-0.2, 0.2) * Gamma``.
    """
    if not 0.0 < drop < 1.0:
        raise UsageError(f"drop must lie in (0, 1), got {drop!r}")
    if metric not in ("inverse", "direct"):
        raise UsageError(f"unknown metric {metric!r}")
    _check_pair(g1, g2)
    if delta_range is None:
        delta_range = (-0.2 * p.Gamma, 0.2 * p.Gamma)
    grid = np.linspace(delta_range[0], delta_range[1], n)
    f = _metric(p, g1, g2, metric)
    vals = f(grid)
    if not np.any(np.isfinite(vals)):
        raise UndefinedBandwidthError("no steady state anywhere in the scan window")
    vmax, vmin = np.nanmax(vals), np.nanmin(vals)
    if vmax - vmin <= _FLAT_RTOL * abs(vmax):
        raise UndefinedBandwidthError("sensitivity is flat over the scan window")
    i = int(np.nanargmax(vals))
    level = (1.0 - drop) * vmax
    inside = np.isfinite(vals) & (vals >= level)

    def edge(a, b):
        # a inside, b outside
        for _ in range(200):
            mid = 0.5 * (a + b)
            if mid in (a, b):
                break
            v = f(mid)
            if np.isfinite(v) and v >= level:
                a = mid
            else:
                b = mid
        return 0.5 * (a + b)

    j = i
    while j > 0 and inside[j - 1]:
        j -= 1
    m = i
    while m < n - 1 and inside[m + 1]:
        m += 1
    lo = edge(grid[j], grid[j - 1]) if j > 0 else grid[0]
    hi = edge(grid[m], grid[m + 1]) if m < n - 1 else grid[-1]
    return BandwidthResult(
        width=float(hi - lo),
        lo=float(lo),
        hi=float(hi),
        peak_delta=float(grid[i]),
        peak_value=float(vmax),
        clipped=bool(j == 0 or m == n - 1),
    )


def bandwidth(p: PhysicalParams, g1=DEFAULT_G1, g2=DEFAULT_G2, drop=0.1, **kwargs) -> float:
    """Width in rad/s of the ``1/eta`` window at the phase in ``p``; see :func:`bandwidth_window`."""
    return bandwidth_window(p, g1, g2, drop, **kwargs).width


@dataclass(frozen=True)
class OptimalDetuning:
    delta: float
    eta: float
    degenerate: bool


def optimal_detuning(p: PhysicalParams, g1=DEFAULT_G1, g2=DEFAULT_G2, delta_range=None,
                     n=2001) -> OptimalDetuning:
    """Detuning maximizing ``eta`` at the phase in ``p``.

    The grid maximum is refined by a bounded scalar search between its
    neighbours. A flat profile returns the window center with
    ``degenerate=True``.
    """
    _check_pair(g1, g2)
    if delta_range is None:
        delta_range = (-0.2 * p.Gamma, 0.2 * p.Gamma)
    lo, hi = float(delta_range[0]), float(delta_range[1])
    if not hi > lo:
        raise UsageError("empty detuning window")
    grid = np.linspace(lo, hi, n)
    f = _metric(p, g1, g2, "direct")
    vals = f(grid)
    if not np.any(np.isfinite(vals)):
        raise NoPhysicalSolutionError("no steady state anywhere in the scan window")
    vmax, vmin = np.nanmax(vals), np.nanmin(vals)
    if vmax - vmin <= _FLAT_RTOL * abs(vmax):
        return OptimalDetuning(0.5 * (lo + hi), float(vmax), True)
    i = int(np.nanargmax(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, n - 1)]
    res = minimize_scalar(lambda x: -float(f(x)), bounds=(a, b), method="bounded",
                          options={"xatol": 1e-10 * (hi - lo)})
    best_d, best_v = grid[i], vals[i]
    if res.success and np.isfinite(res.fun) and -res.fun > best_v:
        best_d, best_v = float(res.x), -float(res.fun)
    return OptimalDetuning(float(best_d), float(best_v), False)


__all__ = [
    "SensitivityPoint",
    "BandwidthResult",
    "OptimalDetuning",
    "DEFAULT_G1",
    "DEFAULT_G2",
    "REGION_NAMES",
    "branch_intensity",
    "sensitivity",
    "region_classify",
    "sensitivity_map",
    "eta_profile",
    "bandwidth",
    "bandwidth_window",
    "optimal_detuning",
    "resolve_threads",
]
