"""Stable tables of Riccati-Bessel type basis functions.

Radial solutions of the free Schroedinger equation at fixed energy are built
from the Riccati-Bessel pair

    j_l(x) = sqrt(pi x / 2) J_{l+1/2}(x),    j_0(x) = sin x,
    n_l(x) = sqrt(pi x / 2) Y_{l+1/2}(x),    n_0(x) = -cos x,

which satisfies the cross-product identity j_l n_l' - j_l' n_l = 1 for every
order. Layers where the local wavenumber squared is negative use the modified
(growing/decaying) pair instead, and layers where it vanishes use the power
solutions r^(l+1), r^(-l).

Everything is evaluated by three-term recurrences. The regular families are
recursed downward (Miller style) wherever upward recursion would admit the
dominant companion solution; the singular families are always safe upward.
Derivatives come from the two-term relation
f_l'(x) = f_{l-1}(x) - (l/x) f_l(x) with j_{-1} = cos x, n_{-1} = sin x.

The recurrence kernels are plain float loops, JIT-compiled when numba is
importable. The compiled and interpreted paths execute the same statements,
so numba is an accelerator, not a behavioral switch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - accelerator only
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda func: func

# Orders added above l_max before the downward recursion is trusted. Past the
# turning point the trial contamination decays at least like 4^-pad per
# order, so 30 orders give full double precision.
_MILLER_PAD = 30

# Trial sequences are rescaled at this magnitude so the downward recursion
# cannot overflow before normalization.
_RESCALE_AT = 1e250
_RESCALE_BY = 1e-250


@dataclass(frozen=True)
class RiccatiTable:
    """Basis values for orders 0..l_max at a fixed positive argument.

    For oscillatory tables, ``j``/``n`` are the regular/singular
    Riccati-Bessel functions and ``log_scale`` is 0. For modified tables,
    ``j`` holds the growing family times exp(-log_scale) and ``n`` the
    decaying family times exp(+log_scale), with log_scale = x; the scaled
    pair keeps a constant cross product of -1, so transfer-matrix algebra
    can use the entries directly without forming huge exponentials.

    ``jp``/``np`` are derivatives with respect to the argument, under the
    same scaling as their undifferentiated columns.
    """

    l_max: int
    x: float
    j: np.ndarray
    n: np.ndarray
    jp: np.ndarray
    np: np.ndarray
    log_scale: float = 0.0


@njit(cache=True)
def _oscillatory_kernel(l_max, x):
    j = np.empty(l_max + 1)
    n = np.empty(l_max + 1)
    jp = np.empty(l_max + 1)
    np_ = np.empty(l_max + 1)
    sin_x = math.sin(x)
    cos_x = math.cos(x)

    # Singular family, always upward: n_{l+1} = (2l+1)/x n_l - n_{l-1}.
    prev, cur = sin_x, -cos_x
    n[0] = cur
    for l in range(l_max):
        prev, cur = cur, ((2 * l + 1) / x) * cur - prev
        n[l + 1] = cur

    if l_max <= x:
        # Regular family upward is stable below the turning point.
        prev, cur = cos_x, sin_x
        j[0] = cur
        for l in range(l_max):
            prev, cur = cur, ((2 * l + 1) / x) * cur - prev
            j[l + 1] = cur
    else:
        # Miller's device: run j_{l-1} = (2l+1)/x j_l - j_{l+1} down from a
        # padded trial start, rescale against overflow, then normalize on
        # whichever closed-form anchor the trial sequence makes larger
        # (j_0 = sin x degenerates near multiples of pi).
        nxt, cur = 0.0, 1.0
        for l in range(l_max + _MILLER_PAD, -1, -1):
            if l <= l_max:
                j[l] = cur
            nxt, cur = cur, ((2 * l + 1) / x) * cur - nxt
            if abs(cur) > _RESCALE_AT:
                cur *= _RESCALE_BY
                nxt *= _RESCALE_BY
                for i in range(l, l_max + 1):
                    j[i] *= _RESCALE_BY
        if l_max == 0 or abs(j[0]) >= abs(j[1]):
            scale = sin_x / j[0]
        else:
            scale = (sin_x / x - cos_x) / j[1]
        for i in range(l_max + 1):
            j[i] *= scale

    jp[0] = cos_x
    np_[0] = sin_x
    for l in range(1, l_max + 1):
        jp[l] = j[l - 1] - (l / x) * j[l]
        np_[l] = n[l - 1] - (l / x) * n[l]
    return j, n, jp, np_


@njit(cache=True)
def _modified_kernel(l_max, x):
    g = np.empty(l_max + 1)
    d = np.empty(l_max + 1)
    gp = np.empty(l_max + 1)
    dp = np.empty(l_max + 1)
    g0 = -math.expm1(-2.0 * x) / 2.0        # sinh(x) e^-x, no cancellation
    gm1 = (1.0 + math.exp(-2.0 * x)) / 2.0  # cosh(x) e^-x

    # The growing family is recursed downward for every order: upward
    # recursion admits the decaying companion, which gains exp(l^2/x)
    # relative to it well before l reaches x. The family separation is only
    # exp(-(start^2 - l_max^2)/x), hence the argument-dependent start.
    start = l_max + _MILLER_PAD
    wide = int(math.ceil(math.sqrt(l_max * l_max + 180.0 * x))) + 5
    if wide > start:
        start = wide
    nxt, cur = 0.0, 1.0
    for l in range(start, -1, -1):
        if l <= l_max:
            g[l] = cur
        nxt, cur = cur, ((2 * l + 1) / x) * cur + nxt
        if abs(cur) > _RESCALE_AT:
            cur *= _RESCALE_BY
            nxt *= _RESCALE_BY
            for i in range(l, l_max + 1):
                g[i] *= _RESCALE_BY
    scale = g0 / g[0]
    for i in range(l_max + 1):
        g[i] *= scale

    # Decaying family upward: d_{l+1} = (2l+1)/x d_l + d_{l-1}, scaled start
    # d_{-1} = d_0 = 1 (both are e^-x before scaling).
    prev, cur = 1.0, 1.0
    d[0] = cur
    for l in range(l_max):
        prev, cur = cur, ((2 * l + 1) / x) * cur + prev
        d[l + 1] = cur

    gp[0] = gm1
    dp[0] = -1.0
    for l in range(1, l_max + 1):
        gp[l] = g[l - 1] - (l / x) * g[l]
        dp[l] = -d[l - 1] - (l / x) * d[l]
    return g, d, gp, dp


def _validate(l_max, x):
    if int(l_max) != l_max or l_max < 0:
        raise ValueError(f"l_max must be a nonnegative integer, got {l_max!r}")
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise ValueError(f"argument must be positive and finite, got {x!r}")
    return int(l_max), x


def riccati_table(l_max, x):
    """Tabulate j_l, n_l and their argument derivatives for l = 0..l_max.

    Raises ValueError for a non-positive or non-finite argument and
    OverflowError when n_l leaves double range for the requested orders.
    """
    l_max, x = _validate(l_max, x)
    j, n, jp, np_ = _oscillatory_kernel(l_max, x)
    if not np.isfinite(n).all():
        bad = int(np.flatnonzero(~np.isfinite(n))[0])
        raise OverflowError(f"singular solution overflows at l={bad}, x={x}")
    return RiccatiTable(l_max, x, j, n, jp, np_)


def modified_riccati_table(l_max, x):
    """Tabulate the modified (growing/decaying) pair, exponentially scaled.

    The growing family g_l(x) = sqrt(pi x/2) I_{l+1/2}(x) is returned times
    exp(-x) in ``j``, the decaying family d_l(x) = sqrt(2x/pi) K_{l+1/2}(x)
    times exp(+x) in ``n``; log_scale records x. The l=0 entries reduce to
    sinh(x) exp(-x) and 1 exactly.
    """
    l_max, x = _validate(l_max, x)
    g, d, gp, dp = _modified_kernel(l_max, x)
    if not np.isfinite(d).all():
        bad = int(np.flatnonzero(~np.isfinite(d))[0])
        raise OverflowError(f"decaying solution overflows at l={bad}, x={x}")
    return RiccatiTable(l_max, x, g, d, gp, dp, log_scale=x)


def power_solutions(l, r):
    """Zero-wavenumber solutions (r^(l+1), r^(-l)) and their r-derivatives.

    Returns ((regular, singular), (d_regular, d_singular)). Raises
    OverflowError when a power leaves double range.
    """
    l, r = _validate(l, r)
    regular = r ** (l + 1)
    singular = r ** (-l)
    d_regular = (l + 1) * r ** l
    d_singular = -l * r ** (-l - 1)
    for v in (regular, singular, d_regular, d_singular):
        if not math.isfinite(v):
            raise OverflowError(f"power solution overflows at l={l}, r={r}")
    return (regular, singular), (d_regular, d_singular)
