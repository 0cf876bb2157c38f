"""Fixed-energy phase shifts for layered spherical potentials.

A potential that is constant on spherical shells admits closed-form radial
solutions in every layer: Riccati-Bessel pairs where the local wavenumber
squared kappa_i^2 = k^2 - q_i is positive, the modified pair where it is
negative, and plain powers of r where it vanishes. The scattering problem
then reduces to matching values and radial derivatives across interfaces.

The solution coefficients (A, B) in each layer are propagated projectively:
only their ratio matters, each interface solve skips the common Wronskian
denominator, and the pair is renormalized after every step so nothing can
overflow. The phase shift is read off in the free region as
delta = -arctan(B/A), on the principal branch.

Exponentially scaled tables in evanescent layers keep every stored number
of order one; the scale mismatch between the two edges of a layer is folded
into B as a decaying carry factor, so thick forbidden regions underflow
gracefully toward the pure growing solution instead of overflowing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .riccati import _modified_kernel, _oscillatory_kernel

try:
    from numba import njit
except ImportError:  # pragma: no cover - accelerator only
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda func: func

# |kappa^2| at or below this is treated as an exactly flat band, where the
# oscillatory and modified tables both lose the argument to underflow.
_BRANCH_TOL = 1e-12


class SolverError(RuntimeError):
    """Propagation produced a non-finite or fully degenerate state."""


@dataclass(frozen=True, eq=False)
class LayeredPotential:
    """Piecewise-constant radial potential.

    ``values[i]`` holds on [breakpoints[i-1], breakpoints[i]) with an
    implicit leading breakpoint at 0, and the potential vanishes at and
    beyond the outermost breakpoint.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bps = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bps.ndim != 1 or vals.ndim != 1 or bps.size != vals.size:
            raise ValueError("breakpoints and values must be 1-D and equal length")
        if bps.size < 1:
            raise ValueError("a potential needs at least one layer")
        if not np.isfinite(bps).all() or bps[0] <= 0.0 or np.any(np.diff(bps) <= 0.0):
            raise ValueError("breakpoints must be finite, positive, strictly ascending")
        if not np.isfinite(vals).all():
            raise ValueError("layer values must be finite")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    @property
    def outer_radius(self):
        return float(self.breakpoints[-1])

    def __call__(self, r):
        """Pointwise value q(r), vectorized over r."""
        idx = np.searchsorted(self.breakpoints, np.asarray(r, dtype=float), side="right")
        padded = np.append(self.values, 0.0)
        return padded[idx]


@dataclass(frozen=True)
class CoefficientState:
    """Projective radial-solution coefficients (A, B) inside one layer."""

    A: float
    B: float
    layer_index: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.A) and math.isfinite(self.B)):
            raise ValueError("coefficients must be finite")
        if self.A == 0.0 and self.B == 0.0:
            raise ValueError("coefficient pair must not be identically zero")

    @property
    def ratio(self):
        """B/A; +-inf when A = 0."""
        if self.A == 0.0:
            return math.copysign(math.inf, self.B)
        return self.B / self.A


@dataclass(frozen=True, eq=False)
class PhaseShiftSet:
    """Phase shifts delta(k, l) for l = 0..l_max at one wave number."""

    k: float
    shifts: np.ndarray

    def __post_init__(self):
        shifts = np.asarray(self.shifts, dtype=float)
        if shifts.ndim != 1 or shifts.size < 1 or not np.isfinite(shifts).all():
            raise ValueError("shifts must be a finite 1-D array")
        object.__setattr__(self, "shifts", shifts)

    @property
    def l_max(self):
        return self.shifts.size - 1


@njit(cache=True)
def _layer_columns(k2, r, l_max):
    """Basis values and r-derivatives in one layer at radius r.

    Returns (F, G, Fp, Gp, branch, rate): regular column (F, Fp), singular
    column (G, Gp), branch in {1: oscillatory, 0: power, -1: modified},
    rate = |kappa| (0 for the power branch). Power columns are normalized
    to 1 at r itself; modified columns carry the e^-x / e^+x scaling of
    the tables. Cross products F*Gp - Fp*G are kappa, -(2l+1)/r, -|kappa|
    respectively, never zero.
    """
    n = l_max + 1
    if abs(k2) <= _BRANCH_TOL:
        F = np.ones(n)
        G = np.ones(n)
        Fp = np.empty(n)
        Gp = np.empty(n)
        for l in range(n):
            Fp[l] = (l + 1) / r
            Gp[l] = -l / r
        return F, G, Fp, Gp, 0, 0.0
    if k2 > 0.0:
        kap = math.sqrt(k2)
        j, nn, jp, npp = _oscillatory_kernel(l_max, kap * r)
        return j, nn, kap * jp, kap * npp, 1, kap
    kap = math.sqrt(-k2)
    g, d, gp, dp = _modified_kernel(l_max, kap * r)
    return g, d, kap * gp, kap * dp, -1, kap


@njit(cache=True)
def _phase_kernel(bps, vals, k, l_max):
    """Propagate all orders across every interface; returns
    (shifts, status, bad_l, bad_interface) with status 0 on success."""
    n = l_max + 1
    A = np.ones(n)
    B = np.zeros(n)
    shifts = np.zeros(n)
    for i in range(bps.shape[0]):
        r = bps[i]
        F, G, Fp, Gp, branch, rate = _layer_columns(k * k - vals[i], r, l_max)
        if i > 0:
            # (A, B) were solved in the basis normalized at the previous
            # interface; re-expressing in the basis normalized at r leaves
            # A alone (projective scale) and damps B by the ratio of the
            # two normalizations.
            r_left = bps[i - 1]
            if branch == -1:
                c = math.exp(-2.0 * rate * (r - r_left))
                for l in range(n):
                    B[l] *= c
            elif branch == 0:
                rho = r_left / r
                c = rho
                for l in range(n):
                    B[l] *= c
                    c *= rho * rho
        q_out = vals[i + 1] if i + 1 < bps.shape[0] else 0.0
        U, V, Up, Vp, _, _ = _layer_columns(k * k - q_out, r, l_max)
        for l in range(n):
            # Continuity of value and r-derivative, solved by Cramer with
            # the common cross-product denominator dropped.
            P = A[l] * F[l] + B[l] * G[l]
            Pp = A[l] * Fp[l] + B[l] * Gp[l]
            a = P * Vp[l] - Pp * V[l]
            b = U[l] * Pp - Up[l] * P
            m = abs(a)
            if abs(b) > m:
                m = abs(b)
            if not (0.0 < m < 1e308):
                return shifts, 1, l, i
            A[l] = a / m
            B[l] = b / m
    for l in range(n):
        if A[l] == 0.0:
            shifts[l] = 0.5 * math.pi
        else:
            shifts[l] = -math.atan(B[l] / A[l]) + 0.0
    return shifts, 0, -1, -1


def _kappa_squared(kappa):
    """kappa^2 from a real or purely imaginary local wavenumber."""
    c = complex(kappa)
    if not (math.isfinite(c.real) and math.isfinite(c.imag)):
        raise ValueError(f"non-finite wavenumber {kappa!r}")
    if c.real != 0.0 and c.imag != 0.0:
        raise ValueError(f"wavenumber must be real or purely imaginary, got {kappa!r}")
    return c.real * c.real - c.imag * c.imag


def propagate_interface(state, l, kappa_in, kappa_out, r):
    """Match the radial solution across one interface at radius r.

    The incoming coefficients refer to the (possibly scaled) basis of the
    inner layer evaluated at r; the result refers likewise to the outer
    layer's basis at r and is renormalized so max(|A|, |B|) = 1.
    """
    if int(l) != l or l < 0:
        raise ValueError(f"order must be a nonnegative integer, got {l!r}")
    l = int(l)
    r = float(r)
    if not math.isfinite(r) or r <= 0.0:
        raise ValueError(f"interface radius must be positive, got {r!r}")
    F, G, Fp, Gp, _, _ = _layer_columns(_kappa_squared(kappa_in), r, l)
    U, V, Up, Vp, _, _ = _layer_columns(_kappa_squared(kappa_out), r, l)
    P = state.A * F[l] + state.B * G[l]
    Pp = state.A * Fp[l] + state.B * Gp[l]
    a = P * Vp[l] - Pp * V[l]
    b = U[l] * Pp - Up[l] * P
    m = max(abs(a), abs(b))
    if not (0.0 < m < math.inf):
        raise SolverError(
            f"interface solve degenerate at l={l}, r={r}: (A, B)=({a}, {b})"
        )
    return CoefficientState(a / m, b / m, state.layer_index + 1)


def phase_shifts(potential, k, l_max=30):
    """Phase shifts delta(k, l), l = 0..l_max, on the branch (-pi/2, pi/2].

    A vanishing free-region A coefficient maps to +pi/2. Raises SolverError,
    naming the order and layer, if propagation degenerates.
    """
    k = float(k)
    if not math.isfinite(k) or k <= 0.0:
        raise ValueError(f"wave number must be positive, got {k!r}")
    if int(l_max) != l_max or l_max < 0:
        raise ValueError(f"l_max must be a nonnegative integer, got {l_max!r}")
    shifts, status, bad_l, bad_i = _phase_kernel(
        potential.breakpoints, potential.values, k, int(l_max)
    )
    if status != 0:
        raise SolverError(
            f"propagation degenerated at l={bad_l}, layer={bad_i + 1} "
            f"(k={k}, interface r={potential.breakpoints[bad_i]})"
        )
    return PhaseShiftSet(k=k, shifts=shifts)


def add_noise(shift_set, h, rng):
    """Multiplicative noise delta -> delta * (1 + (0.5 - z) h), z ~ U[0, 1].

    A fresh z is drawn per shift from ``rng``; h = 0 leaves values
    unchanged while consuming the same stream.
    """
    h = float(h)
    if not math.isfinite(h) or h < 0.0:
        raise ValueError(f"noise level must be nonnegative, got {h!r}")
    z = rng.random(shift_set.shifts.size)
    return PhaseShiftSet(shift_set.k, shift_set.shifts * (1.0 + (0.5 - z) * h))
