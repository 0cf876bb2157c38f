"""Batched random search with a stability-index stopping rule.

Each iteration draws a fresh uniform batch inside the admissible box,
keeps the small fraction with the best misfit, polishes every survivor
with the local minimizer, and pools the polished points with those of
every earlier iteration, so good minimizers are never forgotten and the
selected set can only improve. The spread of the best few pooled
points, taken as the maximum pairwise potential distance over the
average norm of the first iteration's minimizers, decides termination:

  * a tight cluster (index <= stability_threshold) means the data
    determine the potential: verdict "stable";
  * a wide cluster whose misfits all sit within flatness_factor of the
    best means distinct potentials fit equally well: verdict "unstable";
  * hitting max_iterations with neither established: "exhausted".

Runs are deterministic for a fixed seed. Each iteration's batch comes
from an independent child stream keyed by (seed, iteration), survivor
polishing is order-preserving, and the pooled selection uses a total
order, so the report is identical no matter how many worker processes
execute the local minimizations.
"""

from __future__ import annotations

import math
import multiprocessing
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .forward import PhaseShiftSet, SolverError
from .local_search import LineSearchSpec, MinimizerRecord, local_minimize
from .objective import (
    AdmissibleBox,
    Configuration,
    UndefinedObjectiveError,
    config_to_potential,
    make_objective,
    potential_distance,
    potential_norm,
)

#: How each iteration's candidate pool is formed before selecting the
#: minimizing set. Reported verbatim so downstream tooling can detect a
#: change of convention.
MERGE_POLICY = "cumulative raw minimizers"

_COUNT_FUZZ = 1e-9  # guards floor() against 0.3 * 10 = 2.999... artifacts


@dataclass(frozen=True)
class SearchParams:
    """Knobs of the global search; defaults reproduce the reference runs."""

    batch_size: int = 5000
    keep_fraction: float = 0.01
    minimizing_fraction: float = 0.16
    stability_threshold: float = 0.02
    flatness_factor: float = 1.10
    max_iterations: int = 30
    merge_tol: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise ValueError(f"batch_size must be a positive integer, got {self.batch_size!r}")
        object.__setattr__(self, "batch_size", int(self.batch_size))
        if not 0.0 < self.keep_fraction < 1.0:
            raise ValueError(f"keep_fraction must be in (0, 1), got {self.keep_fraction!r}")
        if not 0.0 < self.minimizing_fraction < 1.0:
            raise ValueError(
                f"minimizing_fraction must be in (0, 1), got {self.minimizing_fraction!r}"
            )
        if not self.stability_threshold > 0.0:
            raise ValueError(
                f"stability_threshold must be positive, got {self.stability_threshold!r}"
            )
        if not self.flatness_factor > 1.0:
            raise ValueError(f"flatness_factor must exceed 1, got {self.flatness_factor!r}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError(
                f"max_iterations must be a positive integer, got {self.max_iterations!r}"
            )
        object.__setattr__(self, "max_iterations", int(self.max_iterations))
        if not (math.isfinite(self.merge_tol) and self.merge_tol > 0.0):
            raise ValueError(f"merge_tol must be positive, got {self.merge_tol!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        if self.kept_count < 1:
            raise ValueError(
                f"keep_fraction * batch_size = {self.keep_fraction * self.batch_size:.3g} "
                "keeps no survivors"
            )
        if self.minimizing_count < 1:
            raise ValueError(
                "minimizing_fraction leaves an empty minimizing set "
                f"({self.minimizing_fraction} of {self.kept_count} survivors)"
            )
        if self.kept_count < 2 or self.minimizing_count < 2:
            warnings.warn(
                "fewer than 2 survivors or minimizing-set members; the "
                "stability index degenerates",
                stacklevel=2,
            )

    @property
    def kept_count(self):
        """Survivors per batch."""
        return int(math.floor(self.keep_fraction * self.batch_size + _COUNT_FUZZ))

    @property
    def minimizing_count(self):
        """Size of the minimizing set selected from the pooled records."""
        return int(math.floor(self.minimizing_fraction * self.kept_count + _COUNT_FUZZ))


@dataclass(frozen=True, eq=False)
class StabilityReport:
    """Outcome of a search run.

    indices holds the stability index of every completed iteration;
    minimizing_set the final selected records, best first. d_av is the
    normalization fixed after the first iteration.
    """

    indices: tuple
    verdict: str
    best: MinimizerRecord
    minimizing_set: tuple
    d_av: float
    failed_starts: int = 0
    merge_policy: str = MERGE_POLICY

    def __post_init__(self):
        if self.verdict not in ("stable", "unstable", "exhausted"):
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if len(self.indices) < 1 or any(not (d >= 0.0) for d in self.indices):
            raise ValueError("indices must be nonempty and nonnegative")
        if not self.minimizing_set:
            raise ValueError("minimizing set is empty")
        if not (self.d_av > 0.0):
            raise ValueError(f"d_av must be positive, got {self.d_av!r}")
        if self.best.phi != min(r.phi for r in self.minimizing_set):
            raise ValueError("best record does not carry the smallest misfit")


def generate_batch(box, count, rng):
    """count configurations with coordinates uniform over the box, radii
    sorted ascending. Consumes exactly count * 2 * max_layers draws."""
    if count < 1:
        raise ValueError(f"count must be positive, got {count!r}")
    m = box.max_layers
    draws = rng.uniform(box.lower(m), box.upper(m), size=(count, 2 * m))
    return [Configuration(np.sort(row[:m]), row[m:]) for row in draws]


def reduce_batch(batch, f, keep_fraction):
    """The floor(keep_fraction * len(batch)) configurations with smallest f,
    ascending, equal values kept in generation order."""
    keep = int(math.floor(keep_fraction * len(batch) + _COUNT_FUZZ))
    if keep < 1:
        raise ValueError(
            f"keep_fraction={keep_fraction!r} keeps nothing from a batch of {len(batch)}"
        )
    scores = np.array([f(c) for c in batch])
    order = np.argsort(scores, kind="stable")[:keep]
    return [batch[i] for i in order]


def stability_index(records, d_av):
    """Maximum pairwise potential distance among the records, over d_av."""
    if not records:
        raise ValueError("stability index of an empty record set")
    if not (d_av > 0.0):
        raise ValueError(f"d_av must be positive, got {d_av!r}")
    potentials = [config_to_potential(r.config) for r in records]
    widest = 0.0
    for i in range(len(potentials)):
        for j in range(i + 1, len(potentials)):
            widest = max(widest, potential_distance(potentials[i], potentials[j]))
    return widest / d_av


_WORKER_STATE = {}


def _worker_setup(data, box, merge_tol, spec):
    _WORKER_STATE["objective"] = make_objective(data)
    _WORKER_STATE["box"] = box
    _WORKER_STATE["merge_tol"] = merge_tol
    _WORKER_STATE["spec"] = spec


def _worker_polish(config):
    try:
        return local_minimize(
            config,
            _WORKER_STATE["box"],
            _WORKER_STATE["merge_tol"],
            _WORKER_STATE["objective"],
            _WORKER_STATE["spec"],
        )
    except SolverError:
        return None


def reduced_random_search(data, box, params, workers=1, spec=None):
    """Search the box for layered potentials reproducing the data shifts.

    Returns a StabilityReport; raises SolverError if an entire iteration's
    local minimizations fail. workers > 1 farms the local minimizations
    out to a process pool without changing any reported number.
    """
    if not isinstance(data, PhaseShiftSet):
        raise TypeError(f"data must be a PhaseShiftSet, got {type(data).__name__}")
    if not np.any(data.shifts != 0.0):
        raise UndefinedObjectiveError("data shifts are identically zero")
    if int(workers) != workers or workers < 1:
        raise ValueError(f"workers must be a positive integer, got {workers!r}")
    spec = LineSearchSpec() if spec is None else spec
    objective = make_objective(data)

    pool = None
    if workers > 1:
        pool = multiprocessing.get_context().Pool(
            int(workers),
            initializer=_worker_setup,
            initargs=(data, box, params.merge_tol, spec),
        )
    _worker_setup(data, box, params.merge_tol, spec)

    indices = []
    failed_starts = 0
    pool_records = []
    d_av = None
    verdict = "exhausted"
    selection = None
    try:
        for iteration in range(1, params.max_iterations + 1):
            rng = np.random.default_rng(np.random.SeedSequence((params.seed, iteration)))
            batch = generate_batch(box, params.batch_size, rng)
            survivors = reduce_batch(batch, objective, params.keep_fraction)
            if pool is not None:
                polished = pool.map(_worker_polish, survivors)
            else:
                polished = [_worker_polish(c) for c in survivors]

            raw = []
            failed_now = 0
            for index, record in enumerate(polished):
                if record is None:
                    failed_now += 1
                else:
                    raw.append(replace(record, iteration=iteration, index=index))
            failed_starts += failed_now
            if not raw:
                raise SolverError(
                    f"all {len(survivors)} local minimizations failed in "
                    f"iteration {iteration}"
                )
            if failed_now:
                warnings.warn(
                    f"{failed_now} of {len(survivors)} local starts failed in "
                    f"iteration {iteration}",
                    stacklevel=2,
                )

            if d_av is None:
                norms = [potential_norm(config_to_potential(r.config)) for r in raw]
                d_av = sum(norms) / len(norms)
                if d_av == 0.0:
                    warnings.warn(
                        "first-iteration minimizers are all zero; normalizing by 1",
                        stacklevel=2,
                    )
                    d_av = 1.0

            pool_records = sorted(
                pool_records + raw, key=lambda r: (r.phi, r.iteration, r.index)
            )
            selection = tuple(pool_records[: params.minimizing_count])
            index_now = stability_index(selection, d_av)
            indices.append(index_now)

            if index_now <= params.stability_threshold:
                verdict = "stable"
                break
            best_phi = selection[0].phi
            if all(r.phi <= params.flatness_factor * best_phi for r in selection):
                verdict = "unstable"
                break
    finally:
        if pool is not None:
            pool.close()
            pool.join()

    return StabilityReport(
        indices=tuple(indices),
        verdict=verdict,
        best=selection[0],
        minimizing_set=selection,
        d_av=d_av,
        failed_starts=failed_starts,
    )
