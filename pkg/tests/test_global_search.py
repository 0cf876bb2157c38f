"""Batch generation, selection, the stability index, and the search driver.

The driver tests run at a reduced scale (batches of a few hundred) so the
whole file stays in the seconds range; the acceptance tests exercise the
full-size runs.
"""

import math

import numpy as np
import pytest

from scatinv.forward import LayeredPotential, PhaseShiftSet, SolverError, phase_shifts
from scatinv.global_search import (
    MERGE_POLICY,
    SearchParams,
    StabilityReport,
    generate_batch,
    reduce_batch,
    reduced_random_search,
    stability_index,
)
from scatinv.local_search import MinimizerRecord
from scatinv.objective import (
    AdmissibleBox,
    Configuration,
    UndefinedObjectiveError,
    config_to_potential,
    make_objective,
    potential_distance,
    potential_norm,
)

BOX = AdmissibleBox(2, 10.0, -20.0, 0.0)

Q1_DATA = phase_shifts(LayeredPotential([8.0], [-2.0 / 3.0]), 2.5, 30)
Q3_DATA = phase_shifts(LayeredPotential([8.0], [-10.0]), 2.5, 30)

# Small enough to keep a full run under a second, large enough that the
# kept and minimizing counts stay non-degenerate.
SMALL = dict(batch_size=400, keep_fraction=0.025, minimizing_fraction=0.3,
             max_iterations=5, seed=7)


class TestSearchParams:
    def test_defaults_reproduce_reference_counts(self):
        params = SearchParams()
        assert params.kept_count == 50
        assert params.minimizing_count == 8

    def test_counts_survive_float_floor_artifacts(self):
        # 0.29 * 100 = 28.999999999999996 in floats; floor must still give 29
        assert SearchParams(batch_size=100, keep_fraction=0.29).kept_count == 29

    @pytest.mark.parametrize("bad", [
        dict(batch_size=0), dict(batch_size=2.5), dict(keep_fraction=0.0),
        dict(keep_fraction=1.0), dict(minimizing_fraction=0.0),
        dict(minimizing_fraction=1.0), dict(stability_threshold=0.0),
        dict(flatness_factor=1.0), dict(max_iterations=0),
        dict(merge_tol=0.0), dict(merge_tol=math.inf), dict(seed=-1),
        dict(seed=0.5),
    ])
    def test_invalid_fields_rejected(self, bad):
        with pytest.raises(ValueError):
            SearchParams(**bad)

    def test_no_survivors_rejected(self):
        with pytest.raises(ValueError, match="keeps no survivors"):
            SearchParams(batch_size=10, keep_fraction=0.05)

    def test_empty_minimizing_set_rejected(self):
        # one survivor, 0.16 of it floors to zero
        with pytest.raises(ValueError, match="empty minimizing set"):
            SearchParams(batch_size=100, keep_fraction=0.01)

    def test_degenerate_counts_warn(self):
        with pytest.warns(UserWarning, match="stability index degenerates"):
            SearchParams(batch_size=20, keep_fraction=0.1, minimizing_fraction=0.6)

    def test_frozen(self):
        with pytest.raises(Exception):
            SearchParams().seed = 3


class TestGenerateBatch:
    def test_deterministic_for_equal_streams(self):
        a = generate_batch(BOX, 40, np.random.default_rng(5))
        b = generate_batch(BOX, 40, np.random.default_rng(5))
        assert all(np.array_equal(x.vector, y.vector) for x, y in zip(a, b))

    def test_admissible_and_sorted(self):
        batch = generate_batch(BOX, 200, np.random.default_rng(1))
        assert len(batch) == 200
        for config in batch:
            assert BOX.contains(config)
            assert np.all(np.diff(config.radii) >= 0.0)

    def test_consecutive_draws_differ(self):
        rng = np.random.default_rng(2)
        a = generate_batch(BOX, 1, rng)[0]
        b = generate_batch(BOX, 1, rng)[0]
        assert not np.array_equal(a.vector, b.vector)

    def test_count_validated(self):
        with pytest.raises(ValueError):
            generate_batch(BOX, 0, np.random.default_rng(0))


def _score_by_first_radius(table):
    def f(config):
        return table[float(config.radii[0])]
    return f


class TestReduceBatch:
    def test_keeps_smallest(self):
        batch = [Configuration([r], [-1.0]) for r in (1.0, 2.0, 3.0)]
        f = _score_by_first_radius({1.0: 3.0, 2.0: 1.0, 3.0: 2.0})
        kept = reduce_batch(batch, f, 1 / 3)
        assert len(kept) == 1 and kept[0].radii[0] == 2.0

    def test_output_sorted_ascending(self):
        batch = [Configuration([r], [-1.0]) for r in (1.0, 2.0, 3.0, 4.0)]
        f = _score_by_first_radius({1.0: 0.4, 2.0: 0.1, 3.0: 0.3, 4.0: 0.2})
        kept = reduce_batch(batch, f, 0.75)
        assert [c.radii[0] for c in kept] == [2.0, 4.0, 3.0]

    def test_ties_keep_generation_order(self):
        batch = [Configuration([r], [-1.0]) for r in (1.0, 2.0, 3.0)]
        kept = reduce_batch(batch, lambda c: 7.0, 2 / 3)
        assert [c.radii[0] for c in kept] == [1.0, 2.0]

    def test_empty_keep_rejected(self):
        batch = [Configuration([1.0], [-1.0])]
        with pytest.raises(ValueError):
            reduce_batch(batch, lambda c: 0.0, 0.5)


def _record(radii, values, phi, iteration=1, index=0):
    return MinimizerRecord(Configuration(radii, values), phi, iteration, index)


class TestStabilityIndex:
    def test_identical_records_give_zero(self):
        records = [_record([8.0], [-10.0], 0.1) for _ in range(3)]
        assert stability_index(records, 5.0) == 0.0

    def test_two_records_normalized_by_their_distance(self):
        a = _record([8.0], [-10.0], 0.1)
        b = _record([8.0], [-12.0], 0.2)
        d = potential_distance(config_to_potential(a.config),
                               config_to_potential(b.config))
        assert stability_index([a, b], d) == pytest.approx(1.0, rel=1e-12)

    def test_matches_brute_force_maximum(self):
        records = [_record([5.0], [-3.0], 0.1), _record([7.0], [-9.0], 0.2),
                   _record([8.0], [-1.0], 0.3)]
        potentials = [config_to_potential(r.config) for r in records]
        expected = max(
            potential_distance(potentials[i], potentials[j])
            for i in range(3) for j in range(i + 1, 3)
        )
        assert stability_index(records, 2.0) == pytest.approx(expected / 2.0)

    def test_empty_and_bad_normalization_rejected(self):
        with pytest.raises(ValueError):
            stability_index([], 1.0)
        with pytest.raises(ValueError):
            stability_index([_record([8.0], [-10.0], 0.1)], 0.0)


class TestStabilityReport:
    def test_validates_fields(self):
        rec = _record([8.0], [-10.0], 0.1)
        good = dict(indices=(0.5,), verdict="stable", best=rec,
                    minimizing_set=(rec,), d_av=1.0)
        assert StabilityReport(**good).merge_policy == MERGE_POLICY
        with pytest.raises(ValueError):
            StabilityReport(**{**good, "verdict": "converged"})
        with pytest.raises(ValueError):
            StabilityReport(**{**good, "indices": ()})
        with pytest.raises(ValueError):
            StabilityReport(**{**good, "minimizing_set": ()})
        with pytest.raises(ValueError):
            StabilityReport(**{**good, "d_av": 0.0})
        with pytest.raises(ValueError):
            StabilityReport(**{**good, "best": _record([8.0], [-10.0], 0.7)})

    def test_merge_policy_names_cumulative_pool(self):
        assert MERGE_POLICY == "cumulative raw minimizers"


class TestReducedRandomSearch:
    def test_recovers_shallow_well(self):
        report = reduced_random_search(Q1_DATA, BOX, SearchParams(**SMALL))
        assert report.verdict == "stable"
        assert report.indices[-1] <= 0.02
        assert report.best.phi < 1e-12
        recovered = config_to_potential(report.best.config)
        assert abs(recovered.breakpoints[-1] - 8.0) < 1e-3
        assert abs(recovered.values[0] + 2.0 / 3.0) < 1e-3

    def test_deterministic_across_runs(self):
        a = reduced_random_search(Q1_DATA, BOX, SearchParams(**SMALL))
        b = reduced_random_search(Q1_DATA, BOX, SearchParams(**SMALL))
        assert a.verdict == b.verdict
        assert a.indices == b.indices
        assert a.d_av == b.d_av
        assert np.array_equal(a.best.config.vector, b.best.config.vector)
        assert [r.phi for r in a.minimizing_set] == [r.phi for r in b.minimizing_set]

    def test_worker_count_does_not_change_the_report(self):
        serial = reduced_random_search(Q1_DATA, BOX, SearchParams(**SMALL))
        pooled = reduced_random_search(Q1_DATA, BOX, SearchParams(**SMALL), workers=2)
        assert serial.verdict == pooled.verdict
        assert serial.indices == pooled.indices
        assert serial.d_av == pooled.d_av
        assert serial.failed_starts == pooled.failed_starts
        assert np.array_equal(serial.best.config.vector, pooled.best.config.vector)

    def test_best_reproduces_its_misfit(self):
        report = reduced_random_search(Q1_DATA, BOX, SearchParams(**SMALL))
        f = make_objective(Q1_DATA)
        assert abs(f(report.best.config) - report.best.phi) < 1e-12

    def test_minimizing_set_shape(self):
        params = SearchParams(**SMALL)
        report = reduced_random_search(Q1_DATA, BOX, params)
        assert len(report.minimizing_set) == params.minimizing_count
        phis = [r.phi for r in report.minimizing_set]
        assert phis == sorted(phis)
        assert report.best is report.minimizing_set[0]
        assert all(r.iteration >= 1 for r in report.minimizing_set)

    def test_normalization_frozen_at_first_iteration(self):
        one = reduced_random_search(
            Q3_DATA, BOX, SearchParams(**{**SMALL, "max_iterations": 1}))
        four = reduced_random_search(
            Q3_DATA, BOX, SearchParams(**{**SMALL, "max_iterations": 4}))
        assert one.d_av == four.d_av

    def test_singleton_set_is_trivially_stable(self):
        with pytest.warns(UserWarning, match="degenerates"):
            params = SearchParams(batch_size=400, keep_fraction=0.025,
                                  minimizing_fraction=0.1, max_iterations=5, seed=7)
        report = reduced_random_search(Q3_DATA, BOX, params)
        assert report.verdict == "stable"
        assert report.indices == (0.0,)
        assert len(report.minimizing_set) == 1

    def test_zero_data_rejected(self):
        with pytest.raises(UndefinedObjectiveError):
            reduced_random_search(
                PhaseShiftSet(2.5, np.zeros(31)), BOX, SearchParams(**SMALL))

    def test_bad_inputs_rejected(self):
        with pytest.raises(TypeError):
            reduced_random_search(np.zeros(31), BOX, SearchParams(**SMALL))
        with pytest.raises(ValueError):
            reduced_random_search(Q1_DATA, BOX, SearchParams(**SMALL), workers=0)

    def test_verdict_consistent_with_indices(self):
        params = SearchParams(**SMALL)
        report = reduced_random_search(Q1_DATA, BOX, params)
        assert len(report.indices) <= params.max_iterations
        if report.verdict == "stable":
            assert report.indices[-1] <= params.stability_threshold
        elif report.verdict == "exhausted":
            assert len(report.indices) == params.max_iterations


def _fake_minimizer(phi_of):
    """A stand-in local minimizer: returns the start unchanged with a
    deterministic misfit, so pooling and selection can be checked exactly."""

    def fake(config, box, merge_tol, f, spec):
        return MinimizerRecord(config=config, phi=phi_of(config))

    return fake


class TestPoolingSemantics:
    PARAMS = dict(batch_size=60, keep_fraction=0.1, minimizing_fraction=0.5,
                  max_iterations=3, seed=11, stability_threshold=1e-12,
                  flatness_factor=1.0 + 1e-12)

    def _expected_pool(self, params, phi_of):
        objective = make_objective(Q3_DATA)
        pool = []
        for iteration in (1, 2, 3):
            rng = np.random.default_rng(np.random.SeedSequence((params.seed, iteration)))
            batch = generate_batch(BOX, params.batch_size, rng)
            survivors = reduce_batch(batch, objective, params.keep_fraction)
            pool.extend(
                MinimizerRecord(c, phi_of(c), iteration, index)
                for index, c in enumerate(survivors)
            )
        return sorted(pool, key=lambda r: (r.phi, r.iteration, r.index))

    def test_selection_is_best_of_all_iterations(self, monkeypatch):
        phi_of = lambda config: float(np.abs(config.values).sum())
        monkeypatch.setattr("scatinv.global_search.local_minimize",
                            _fake_minimizer(phi_of))
        params = SearchParams(**self.PARAMS)
        report = reduced_random_search(Q3_DATA, BOX, params)
        assert report.verdict == "exhausted"
        expected = self._expected_pool(params, phi_of)[: params.minimizing_count]
        got = report.minimizing_set
        assert [(r.phi, r.iteration, r.index) for r in got] == [
            (r.phi, r.iteration, r.index) for r in expected
        ]
        assert all(np.array_equal(g.config.vector, e.config.vector)
                   for g, e in zip(got, expected))

    def test_selected_worst_never_degrades_as_iterations_accumulate(self, monkeypatch):
        phi_of = lambda config: float(np.abs(config.values).sum())
        monkeypatch.setattr("scatinv.global_search.local_minimize",
                            _fake_minimizer(phi_of))
        worsts = []
        for cap in (1, 2, 3):
            params = SearchParams(**{**self.PARAMS, "max_iterations": cap})
            report = reduced_random_search(Q3_DATA, BOX, params)
            worsts.append(max(r.phi for r in report.minimizing_set))
        assert worsts[0] >= worsts[1] >= worsts[2]

    def test_equal_misfits_break_ties_by_iteration_then_index(self, monkeypatch):
        monkeypatch.setattr("scatinv.global_search.local_minimize",
                            _fake_minimizer(lambda config: 1.0))
        params = SearchParams(**{**self.PARAMS, "max_iterations": 2})
        report = reduced_random_search(Q3_DATA, BOX, params)
        # distinct configurations tie on misfit: the flatness rule fires
        assert report.verdict == "unstable"
        assert [(r.iteration, r.index) for r in report.minimizing_set] == [
            (1, i) for i in range(params.minimizing_count)
        ]


class TestFailureHandling:
    PARAMS = dict(batch_size=60, keep_fraction=0.1, minimizing_fraction=0.5,
                  max_iterations=2, seed=11)

    def test_partial_failures_counted_and_warned(self, monkeypatch):
        def flaky(config, box, merge_tol, f, spec):
            if config.values[0] > -10.0:
                raise SolverError("injected")
            return MinimizerRecord(config=Configuration([8.0], [-10.0]), phi=0.5)

        monkeypatch.setattr("scatinv.global_search.local_minimize", flaky)
        with pytest.warns(UserWarning, match="local starts failed"):
            report = reduced_random_search(Q3_DATA, BOX, SearchParams(**self.PARAMS))
        assert report.failed_starts > 0
        # identical surviving configurations make the very first index zero
        assert report.verdict == "stable"

    def test_full_iteration_failure_raises(self, monkeypatch):
        def broken(config, box, merge_tol, f, spec):
            raise SolverError("injected")

        monkeypatch.setattr("scatinv.global_search.local_minimize", broken)
        with pytest.raises(SolverError, match="local minimizations failed"):
            reduced_random_search(Q3_DATA, BOX, SearchParams(**self.PARAMS))
