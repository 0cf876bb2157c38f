"""Best-fit objective, admissible search box, and potential-space distance.

A search point is a configuration of M (radius, value) pairs; the layered
potential it denotes takes value q_m on [r_{m-1}, r_m) after the pairs are
sorted by radius. The data misfit is the normalized quadratic form

    misfit = sum_l (delta_l - data_l)^2 / sum_l data_l^2,

and distances between candidate potentials use the L2 norm over the
three-dimensional ball, which has an exact closed form for layered
functions. Both are cheap, pure, and evaluated millions of times by the
search layers above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .forward import LayeredPotential, SolverError, _phase_kernel, phase_shifts


class UndefinedObjectiveError(ValueError):
    """Raised when the data shifts are identically zero (no normalization)."""


@dataclass(frozen=True, eq=False)
class AdmissibleBox:
    """Search bounds: up to max_layers layers inside radius, values in
    [q_low, q_high]."""

    max_layers: int
    radius: float
    q_low: float
    q_high: float

    def __post_init__(self):
        if int(self.max_layers) != self.max_layers or self.max_layers < 1:
            raise ValueError(f"max_layers must be a positive integer, got {self.max_layers!r}")
        if not (math.isfinite(self.radius) and self.radius > 0.0):
            raise ValueError(f"radius must be positive, got {self.radius!r}")
        if not (math.isfinite(self.q_low) and math.isfinite(self.q_high)):
            raise ValueError("value bounds must be finite")
        if self.q_low > self.q_high:
            raise ValueError(f"q_low={self.q_low} exceeds q_high={self.q_high}")
        object.__setattr__(self, "max_layers", int(self.max_layers))

    def lower(self, n_layers):
        """Coordinate-wise lower bounds of an n-layer vector (radii, values)."""
        return np.concatenate([np.zeros(n_layers), np.full(n_layers, self.q_low)])

    def upper(self, n_layers):
        return np.concatenate(
            [np.full(n_layers, self.radius), np.full(n_layers, self.q_high)]
        )

    def contains(self, config, tol=0.0):
        lo = self.lower(config.layer_count) - tol
        hi = self.upper(config.layer_count) + tol
        v = config.vector
        return config.layer_count <= self.max_layers and bool(
            np.all(v >= lo) and np.all(v <= hi)
        )


@dataclass(frozen=True, eq=False)
class Configuration:
    """A search point: layer radii and values, plus the layers open to
    optimization.

    Canonical configurations keep radii ascending; intermediate points
    produced by line searches may be unsorted and are sorted on every
    objective evaluation instead.
    """

    radii: np.ndarray
    values: np.ndarray
    active_layers: tuple = field(default=None)

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if radii.ndim != 1 or values.ndim != 1 or radii.size != values.size:
            raise ValueError("radii and values must be 1-D and equal length")
        if radii.size < 1:
            raise ValueError("a configuration needs at least one layer")
        if not (np.isfinite(radii).all() and np.isfinite(values).all()):
            raise ValueError("configuration coordinates must be finite")
        active = self.active_layers
        if active is None:
            active = tuple(range(radii.size))
        else:
            active = tuple(sorted({int(i) for i in active}))
            if active and (active[0] < 0 or active[-1] >= radii.size):
                raise ValueError(f"active layers {active} outside 0..{radii.size - 1}")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "active_layers", active)

    @property
    def layer_count(self):
        return self.radii.size

    @property
    def vector(self):
        """Flat coordinates (r_1..r_M, q_1..q_M)."""
        return np.concatenate([self.radii, self.values])

    @classmethod
    def from_vector(cls, vec, active_layers=None):
        vec = np.asarray(vec, dtype=float)
        m = vec.size // 2
        return cls(vec[:m], vec[m:], active_layers)

    def canonical(self):
        """Pairs stably sorted by radius; layer identity is renumbered, so
        all layers become active."""
        order = np.argsort(self.radii, kind="stable")
        return Configuration(self.radii[order], self.values[order])


def _canonical_layers(radii, values):
    """Sorted, deduplicated (breakpoints, values) lists a configuration
    denotes; ([1.0], [0.0]) when nothing remains."""
    order = np.argsort(radii, kind="stable")
    pairs = []
    for i in order:
        r = radii[i]
        if r <= 0.0:
            continue
        v = values[i]
        if pairs and r == pairs[-1][0]:
            pairs[-1] = (r, v)
        else:
            pairs.append((r, v))
    keep_r, keep_v = [], []
    for r, v in pairs:
        if keep_v and v == keep_v[-1]:
            keep_r[-1] = r
        else:
            keep_r.append(r)
            keep_v.append(v)
    while keep_v and keep_v[-1] == 0.0:
        keep_r.pop()
        keep_v.pop()
    if not keep_r:
        return [1.0], [0.0]
    return keep_r, keep_v


def config_to_potential(config):
    """The layered potential a configuration denotes.

    Pairs are sorted by radius; among equal radii the last pair wins (the
    earlier ones span empty intervals); non-positive radii span nothing
    and are dropped; adjacent equal values merge; trailing zero layers are
    the free region. An everywhere-zero result becomes the canonical zero
    potential on a unit ball.
    """
    keep_r, keep_v = _canonical_layers(config.radii, config.values)
    return LayeredPotential(keep_r, keep_v)


def well_summary(config):
    """Outer support radius and volume-dominant value of a configuration.

    Polished configurations can retain slivers: layers of near-zero width
    whose value is nearly free because it costs almost nothing in misfit
    or distance. Listed layer values are then misleading on their own, so
    the value reported here is the one on the layer with the largest r^3
    shell weight, the same weight potential_distance uses.
    """
    potential = config if isinstance(config, LayeredPotential) else config_to_potential(config)
    edges = np.concatenate([[0.0], potential.breakpoints])
    weights = np.diff(edges**3)
    return float(potential.breakpoints[-1]), float(potential.values[np.argmax(weights)])


def misfit(candidate, data):
    """Normalized quadratic deviation between two shift sets at equal k."""
    if candidate.k != data.k:
        raise ValueError(f"wave numbers differ: {candidate.k} vs {data.k}")
    if candidate.shifts.size != data.shifts.size:
        raise ValueError("shift sets cover different order ranges")
    denom = float(np.dot(data.shifts, data.shifts))
    if denom == 0.0:
        raise UndefinedObjectiveError("data shifts are identically zero")
    diff = candidate.shifts - data.shifts
    return float(np.dot(diff, diff)) / denom


def potential_distance(p, q):
    """L2(R^3) distance sqrt(4 pi int (p - q)^2 r^2 dr), exactly.

    Both potentials are piecewise constant, so the integral is a finite
    sum over the merged breakpoint grid.
    """
    edges = np.union1d(p.breakpoints, q.breakpoints)
    edges = np.concatenate([[0.0], edges])
    diff = p(edges[:-1]) - q(edges[:-1])
    shell = (edges[1:] ** 3 - edges[:-1] ** 3) / 3.0
    return math.sqrt(4.0 * math.pi * float(np.dot(diff * diff, shell)))


_ZERO = LayeredPotential([1.0], [0.0])


def potential_norm(p):
    """Distance to the zero potential."""
    return potential_distance(p, _ZERO)


def make_objective(data):
    """The misfit as a function of Configuration, with the data fixed.

    The returned callable sorts and canonicalizes each configuration,
    solves the forward problem at the data's wave number and order range,
    and normalizes by the data once.
    """
    denom = float(np.dot(data.shifts, data.shifts))
    if denom == 0.0:
        raise UndefinedObjectiveError("data shifts are identically zero")
    k = data.k
    l_max = data.l_max
    data_shifts = data.shifts

    def objective(config):
        # feeds the kernel directly; dataclass wrappers cost more than the solve
        keep_r, keep_v = _canonical_layers(config.radii, config.values)
        breakpoints = np.array(keep_r)
        shifts, status, bad_l, bad_i = _phase_kernel(breakpoints, np.array(keep_v), k, l_max)
        if status != 0:
            raise SolverError(
                f"propagation degenerated at l={bad_l}, layer={bad_i + 1} "
                f"(k={k}, interface r={breakpoints[bad_i]})"
            )
        diff = shifts - data_shifts
        return float(np.dot(diff, diff)) / denom

    return objective
