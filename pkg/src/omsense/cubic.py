"""Real positive roots of ``x**3 + a x**2 + b x - c = 0`` with ``c >= 0``.

Vectorized over broadcastable ``a, b, c``. The depressed cubic is solved with
the trigonometric form when three real roots exist and Cardano's formula
otherwise; every root is then Newton-polished on the undepressed polynomial.
"""

from __future__ import annotations

import numpy as np

_NEWTON_STEPS = 4


def _poly(x, a, b, c):
    return ((x + a) * x + b) * x - c


def _dpoly(x, a, b):
    return (3.0 * x + 2.0 * a) * x + b


def _polish(x, a, b, c):
    """Guarded Newton: a step is kept only where it lowers ``|f|``."""
    for _ in range(_NEWTON_STEPS):
        f = _poly(x, a, b, c)
        df = _dpoly(x, a, b)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(df != 0, f / df, 0.0)
        trial = x - step
        better = np.abs(_poly(trial, a, b, c)) < np.abs(f)
        x = np.where(better & np.isfinite(trial), trial, x)
    return x


def real_roots(a, b, c):
    """All real roots, ascending, NaN-padded to shape ``(..., 3)``.

    A repeated root appears with its multiplicity whenever the discriminant
    is not negative.
    """
    a, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c)))
    shift = a / 3.0
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 - c
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3

    out = np.full(a.shape + (3,), np.nan)

    three = disc <= 0
    if np.any(three):
        pp, qq, sh = p[three], q[three], shift[three]
        m = 2.0 * np.sqrt(np.maximum(-pp / 3.0, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            arg = np.where(m > 0, 3.0 * qq / (pp * m), 0.0)
        theta = np.arccos(np.clip(arg, -1.0, 1.0)) / 3.0
        ks = np.arange(3) * (2.0 * np.pi / 3.0)
        t = m[:, None] * np.cos(theta[:, None] - ks[None, :])
        out[three] = t - sh[:, None]

    one = ~three
    if np.any(one):
        pp, qq, sh = p[one], q[one], shift[one]
        s = np.sqrt(disc[one])
        # avoid cancellation: pick the larger-magnitude cube root argument
        w = -qq / 2.0 + np.copysign(s, -qq)
        u = np.cbrt(w)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.where(u != 0, -pp / (3.0 * u), 0.0)
        out[one, 0] = u + v - sh

    aa = a[..., None]
    bb = b[..., None]
    cc = c[..., None]
    out = _polish(out, aa, bb, cc)
    return np.sort(out, axis=-1)


def positive_roots(a, b, c):
    """Non-negative real roots and their count.

    Returns
    -------
    roots : ndarray, shape (..., 3)
        Ascending, NaN-padded at the end.
    count : ndarray of int
        Number of valid entries (1 or 3 for ``c > 0``).

    Notes
    -----
    For ``c == 0`` the polynomial factors as ``x (x**2 + a x + b)``: the vacuum
    root ``x = 0`` is returned together with the positive roots of the
    quadratic factor.
    """
    a, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c)))
    roots = real_roots(a, b, c)
    vals = np.where(roots > 0, roots, np.nan)

    undriven = c == 0
    if np.any(undriven):
        qa, qb = a[undriven], b[undriven]
        qd = qa * qa - 4.0 * qb
        sq = np.sqrt(np.where(qd > 0, qd, np.nan))
        hi = (-qa + sq) / 2.0
        lo = np.where(qa < 0, 2.0 * qb / (-qa + sq), (-qa - sq) / 2.0)
        quad = np.stack([np.zeros_like(qa), lo, hi], axis=-1)
        quad[..., 1:] = np.where(quad[..., 1:] > 0, quad[..., 1:], np.nan)
        vals[undriven] = quad

    vals = np.sort(vals, axis=-1)  # NaNs sort last
    count = np.sum(np.isfinite(vals), axis=-1)
    return vals, count


def derivative(x, a, b):
    """``d/dx (x**3 + a x**2 + b x)``; the sign fixes static stability."""
    return _dpoly(np.asarray(x, dtype=float), a, b)


def residual(x, a, b, c):
    return _poly(np.asarray(x, dtype=float), a, b, c)
