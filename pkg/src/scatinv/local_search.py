"""Derivative-free local refinement of layer configurations.

Three cooperating pieces:

* a bracketing plus golden-section line search that respects the box
  and never returns a point worse than where it started;
* a direction-cycling minimizer in the style of Powell's method: per
  cycle, independent trial minimizations from the cycle origin are used
  only to decide the order in which directions are then searched
  sequentially; the net cycle displacement is searched as an extra
  direction and, when the classic doubled-step test approves, replaces
  the direction that contributed most to it;
* a reduction sweep that repeatedly replaces two adjacent layers by one
  (in either direction, or trades the outermost layer against the zero
  tail) whenever the cheapest such merge changes the objective by less
  than a set fraction.

local_minimize alternates them, polishing in the currently reduced
subspace until a reduction pass removes no further layer. All candidate
points stay inside the admissible box; radii are sorted inside the
objective, not by the search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .forward import SolverError
from .objective import Configuration

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_MAX_CYCLES = 200
_CYCLE_TOL = 1e-8


@dataclass(frozen=True)
class LineSearchSpec:
    """Bracketing and golden-section controls, in configuration units."""

    expansion: float = 2.0
    tolerance: float = 1e-6
    max_evaluations: int = 200
    initial_step: float = 1e-2

    def __post_init__(self):
        if not (self.tolerance > 0.0):
            raise ValueError("tolerance must be positive")
        if self.max_evaluations < 3:
            raise ValueError("max_evaluations must be at least 3")
        if not (self.expansion > 1.0):
            raise ValueError("expansion must exceed 1")
        if not (self.initial_step > 0.0):
            raise ValueError("initial_step must be positive")


@dataclass(frozen=True)
class MinimizerRecord:
    """A locally minimized configuration with its objective value."""

    config: Configuration
    phi: float
    iteration: int = 0
    index: int = 0


def _feasible_interval(v0, d, lo, hi):
    """The t-range keeping v0 + t d inside [lo, hi]; contains 0."""
    t_lo, t_hi = -math.inf, math.inf
    for i in range(v0.size):
        if d[i] > 0.0:
            t_lo = max(t_lo, (lo[i] - v0[i]) / d[i])
            t_hi = min(t_hi, (hi[i] - v0[i]) / d[i])
        elif d[i] < 0.0:
            t_lo = max(t_lo, (hi[i] - v0[i]) / d[i])
            t_hi = min(t_hi, (lo[i] - v0[i]) / d[i])
    return min(t_lo, 0.0), max(t_hi, 0.0)


def _line_minimize(f, origin, direction, box, spec, f_origin=None):
    """Minimize f along origin + t * direction; returns (config, value).

    Grows a bracket outward from the origin, then refines it by golden
    section, so the dip nearest the starting point wins. Points the
    forward solver rejects score +inf.
    """
    v0 = origin.vector
    d = np.asarray(direction, dtype=float)
    norm = float(np.linalg.norm(d))
    if f_origin is None:
        f_origin = f(origin)
    if norm == 0.0 or not math.isfinite(norm):
        return origin, f_origin
    d = d / norm
    m = origin.layer_count
    lo, hi = box.lower(m), box.upper(m)
    t_lo, t_hi = _feasible_interval(v0, d, lo, hi)
    if t_hi - t_lo == 0.0:
        return origin, f_origin

    state = {"evals": 0, "best_t": 0.0, "best_f": f_origin}

    def ev(t):
        cfg = Configuration.from_vector(
            np.clip(v0 + t * d, lo, hi), origin.active_layers
        )
        state["evals"] += 1
        try:
            val = f(cfg)
        except SolverError:
            return math.inf
        if val < state["best_f"]:
            state["best_f"], state["best_t"] = val, t
        return val

    def refine(x_lo, x_hi):
        # golden section; every probe feeds the shared best-seen state
        if not (x_hi - x_lo > spec.tolerance):
            return
        if state["evals"] + 2 > spec.max_evaluations:
            return
        x1 = x_hi - _GOLDEN * (x_hi - x_lo)
        x2 = x_lo + _GOLDEN * (x_hi - x_lo)
        f1, f2 = ev(x1), ev(x2)
        while x_hi - x_lo > spec.tolerance and state["evals"] < spec.max_evaluations:
            if f1 <= f2:
                x_hi, x2, f2 = x2, x1, f1
                x1 = x_hi - _GOLDEN * (x_hi - x_lo)
                f1 = ev(x1)
            else:
                x_lo, x1, f1 = x1, x2, f2
                x2 = x_lo + _GOLDEN * (x_hi - x_lo)
                f2 = ev(x2)

    def bracket_from_origin():
        # Probe both ways, expand along the descending side until f turns
        # up, the box edge intervenes, or the budget runs out. Without
        # descent at either probe the interval just hugs the origin.
        t_plus = min(spec.initial_step, t_hi)
        t_minus = max(-spec.initial_step, t_lo)
        f_plus = ev(t_plus) if t_plus > 0.0 else math.inf
        f_minus = ev(t_minus) if t_minus < 0.0 else math.inf
        if min(f_plus, f_minus) >= f_origin:
            return (t_minus if t_minus < 0.0 else 0.0, t_plus if t_plus > 0.0 else 0.0)
        if f_plus <= f_minus:
            a, b, fb, bound = 0.0, t_plus, f_plus, t_hi
        else:
            a, b, fb, bound = 0.0, t_minus, f_minus, t_lo
        while state["evals"] < spec.max_evaluations:
            c = b + spec.expansion * (b - a)
            if (bound - c) * (bound - a) < 0.0 or c == bound:
                c = bound
            if c == b:
                break
            fc = ev(c)
            if fc >= fb or c == bound:
                a, b = (a, c) if a < c else (c, a)
                break
            a, b, fb = b, c, fc
        return (min(a, b), max(a, b))

    refine(*bracket_from_origin())

    best = Configuration.from_vector(
        np.clip(v0 + state["best_t"] * d, lo, hi), origin.active_layers
    )
    return best, state["best_f"]


def line_minimize(f, origin, direction, box, spec=LineSearchSpec()):
    """Box-constrained line minimization; never worse than the origin."""
    config, _ = _line_minimize(f, origin, direction, box, spec)
    return config


def _active_dims(config, subspace):
    layers = config.active_layers if subspace is None else tuple(sorted(subspace))
    m = config.layer_count
    return [i for i in layers] + [m + i for i in layers]


def _powell(f, start, box, spec, subspace=None):
    dims = _active_dims(start, subspace)
    n = 2 * start.layer_count
    current, f_current = start, f(start)
    if not dims:
        return current, f_current
    m = start.layer_count
    lo, hi = box.lower(m), box.upper(m)
    directions = []
    for dim in dims:
        u = np.zeros(n)
        u[dim] = 1.0
        directions.append(u)
    for _ in range(_MAX_CYCLES):
        q0, f0 = current, f_current
        # Trial minimizations all start from the cycle origin; their only
        # role is to order the directions, best improvement first.
        trial_values = [
            _line_minimize(f, q0, u, box, spec, f_origin=f0)[1] for u in directions
        ]
        order = sorted(range(len(directions)), key=lambda i: trial_values[i])
        directions = [directions[i] for i in order]
        seq, f_seq = q0, f0
        biggest_drop, drop_index = 0.0, 0
        for i, u in enumerate(directions):
            f_before = f_seq
            seq, f_seq = _line_minimize(f, seq, u, box, spec, f_origin=f_seq)
            if f_before - f_seq > biggest_drop:
                biggest_drop, drop_index = f_before - f_seq, i
        drift = seq.vector - q0.vector
        if np.any(drift != 0.0):
            f_pass = f_seq
            ext, f_ext = _line_minimize(f, q0, drift, box, spec, f_origin=f0)
            if f_ext < f_seq:
                seq, f_seq = ext, f_ext
            # Doubled-step test: keep the drift as a search direction only
            # when the landscape along it is not already used up, trading
            # out the direction that contributed most to it.
            doubled = Configuration.from_vector(
                np.clip(q0.vector + 2.0 * drift, lo, hi), start.active_layers
            )
            try:
                f_doubled = f(doubled)
            except SolverError:
                f_doubled = math.inf
            if f_doubled < f0:
                curvature = f0 - 2.0 * f_pass + f_doubled
                test = (
                    2.0 * curvature * (f0 - f_pass - biggest_drop) ** 2
                    - biggest_drop * (f0 - f_doubled) ** 2
                )
                if test < 0.0:
                    directions[drop_index] = directions[-1]
                    directions[-1] = drift / np.linalg.norm(drift)
        current, f_current = seq, f_seq
        if 2.0 * (f0 - f_current) <= _CYCLE_TOL * (abs(f0) + abs(f_current)) + 1e-25:
            break
    return current, f_current


def powell_minimize(f, start, box, subspace=None, spec=LineSearchSpec()):
    """Cycle coordinate directions plus the net-displacement direction
    until the per-cycle decrease is negligible. Coordinates of layers
    outside the active set never change."""
    config, _ = _powell(f, start, box, spec, subspace)
    return config


def _merge_candidates(config, box):
    """All one-layer-fewer (or tail-extended) variants, in sweep order."""
    r = config.radii
    v = config.values
    m = r.size
    out = []
    for b in range(m):
        if b + 1 < m:
            down = Configuration(np.delete(r, b), np.delete(v, b))
        elif m > 1:
            down = Configuration(r[:-1], v[:-1])
        else:
            down = Configuration([r[0]], [0.0])
        out.append(down)
        if b + 1 < m:
            out.append(Configuration(np.delete(r, b), np.delete(v, b + 1)))
        elif r[b] != box.radius:
            extended = r.copy()
            extended[b] = box.radius
            out.append(Configuration(extended, v.copy()))
    return out


def reduce_layers(config, box, merge_tol, f):
    """Repeatedly commit the cheapest layer merge while it changes the
    objective by less than merge_tol relative; returns the surviving
    configuration with every layer active."""
    if not (merge_tol > 0.0):
        raise ValueError("merge_tol must be positive")
    current = config.canonical()
    f_current = f(current)
    while True:
        best_cost, best_candidate = math.inf, None
        for candidate in _merge_candidates(current, box):
            cost = abs(f_current - f(candidate))
            if cost < best_cost:
                best_cost, best_candidate = cost, candidate
        if best_candidate is None or best_cost >= merge_tol * max(f_current, 1e-15):
            return current
        current = best_candidate.canonical()
        f_current = f(current)


def local_minimize(start, box, merge_tol, f, spec=LineSearchSpec()):
    """Alternate reduction and polish until reduction stops removing
    layers; polish always runs in the currently reduced subspace."""
    current = reduce_layers(start, box, merge_tol, f)
    reduced = current
    for _ in range(start.layer_count + 1):
        polished, _ = _powell(f, current, box, spec)
        reduced = reduce_layers(polished, box, merge_tol, f)
        if reduced.layer_count >= polished.layer_count:
            break
        current = reduced
    final = reduced.canonical()
    return MinimizerRecord(config=final, phi=f(final))
