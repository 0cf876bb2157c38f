"""Local-search tests: line search, coordinate cycling, layer reduction."""

import math

import numpy as np
import pytest

from scatinv.forward import LayeredPotential, phase_shifts
from scatinv.local_search import (
    LineSearchSpec,
    line_minimize,
    local_minimize,
    powell_minimize,
    reduce_layers,
)
from scatinv.objective import (
    AdmissibleBox,
    Configuration,
    config_to_potential,
    make_objective,
    potential_distance,
)

BOX = AdmissibleBox(2, 10.0, -20.0, 0.0)
SPEC = LineSearchSpec()


class TestLineMinimize:
    def test_interior_quadratic_minimum(self):
        f = lambda c: (c.vector[0] - 3.7) ** 2
        origin = Configuration([1.0], [-5.0])
        out = line_minimize(f, origin, np.array([1.0, 0.0]), BOX, SPEC)
        assert abs(out.radii[0] - 3.7) < 2e-6
        assert out.values[0] == -5.0

    def test_nonsmooth_vee_minimum(self):
        f = lambda c: abs(c.vector[0] - 0.3)
        origin = Configuration([1.0], [-5.0])
        out = line_minimize(f, origin, np.array([1.0, 0.0]), BOX, SPEC)
        grid = np.linspace(0.0, 10.0, 2_000_001)
        scan = grid[np.argmin(np.abs(grid - 0.3))]
        assert abs(out.radii[0] - scan) < 2e-6

    def test_outward_direction_from_boundary(self):
        f = lambda c: -c.vector[0]  # wants r beyond the box
        origin = Configuration([10.0], [-5.0])
        out = line_minimize(f, origin, np.array([1.0, 0.0]), BOX, SPEC)
        assert out.radii[0] == 10.0

    def test_never_worse_than_origin_and_always_feasible(self):
        f = lambda c: math.sin(5.0 * c.vector[0]) * math.cos(3.0 * c.vector[1]) + 0.1 * c.vector[1] ** 2
        origin = Configuration([9.8], [-0.3])
        for direction in ([1.0, 1.0], [-0.2, 1.0], [0.0, -1.0]):
            out = line_minimize(f, origin, np.array(direction), BOX, SPEC)
            assert f(out) <= f(origin)
            assert (out.vector >= BOX.lower(1)).all()
            assert (out.vector <= BOX.upper(1)).all()

    def test_zero_direction_returns_origin(self):
        origin = Configuration([2.0], [-1.0])
        out = line_minimize(lambda c: 0.0, origin, np.zeros(2), BOX, SPEC)
        assert out is origin


class TestPowellMinimize:
    def test_two_dim_quadratic(self):
        def f(c):
            r, q = c.vector
            return (r - 4.0) ** 2 + 2.0 * (q + 7.0) ** 2 + 0.5 * (r - 4.0) * (q + 7.0)

        out = powell_minimize(f, Configuration([1.0], [-1.0]), BOX)
        assert abs(out.radii[0] - 4.0) < 1e-6
        assert abs(out.values[0] + 7.0) < 1e-6

    def test_four_dim_quadratic(self):
        target = np.array([2.0, 8.0, -12.0, -3.0])

        def f(c):
            return float(np.sum((c.vector - target) ** 2))

        out = powell_minimize(f, Configuration([5.0, 5.5], [-10.0, -10.0]), BOX)
        assert np.abs(out.vector - target).max() < 1e-5

    def test_fixed_point_at_exact_minimum(self):
        def f(c):
            return float(np.sum((c.vector - np.array([4.0, -7.0])) ** 2))

        start = Configuration([4.0], [-7.0])
        out = powell_minimize(f, start, BOX)
        assert np.array_equal(out.vector, start.vector)

    def test_subspace_layers_never_move(self):
        target = np.array([2.0, 3.0, -12.0, -13.0])

        def f(c):
            return float(np.sum((c.vector - target) ** 2))

        start = Configuration([5.0, 6.0], [-10.0, -9.0])
        out = powell_minimize(f, start, BOX, subspace=(0,))
        assert abs(out.radii[0] - 2.0) < 1e-6
        assert abs(out.values[0] + 12.0) < 1e-6
        assert out.radii[1] == 6.0 and out.values[1] == -9.0

    def test_recovers_perturbed_well(self):
        data = phase_shifts(LayeredPotential([8.0], [-10.0]), 2.5, 30)
        f = make_objective(data)
        out = powell_minimize(f, Configuration([8.0], [-9.5]), BOX).canonical()
        assert abs(out.radii[0] - 8.0) < 1e-3
        assert abs(out.values[0] + 10.0) < 1e-3
        assert f(out) < 1e-8


class TestReduceLayers:
    def test_identical_adjacent_layers_always_merge(self):
        data = phase_shifts(LayeredPotential([8.0], [-10.0]), 2.5, 30)
        f = make_objective(data)
        out = reduce_layers(Configuration([4.0, 8.0], [-10.0, -10.0]), BOX, 0.1, f)
        assert out.layer_count == 1
        assert out.radii[0] == 8.0 and out.values[0] == -10.0
        assert f(out) == 0.0

    def test_single_layer_unchanged(self):
        data = phase_shifts(LayeredPotential([8.0], [-10.0]), 2.5, 30)
        f = make_objective(data)
        out = reduce_layers(Configuration([8.0], [-10.0]), BOX, 0.1, f)
        assert out.radii.tolist() == [8.0] and out.values.tolist() == [-10.0]

    def test_near_zero_outer_layer_merges_into_tail(self):
        data = phase_shifts(LayeredPotential([8.0], [-10.0]), 2.5, 30)
        f = make_objective(data)
        start = Configuration([8.0, 8.2], [-9.0, -1e-6])
        f_start = f(start)
        cost = abs(f_start - f(Configuration([8.0], [-9.0])))
        assert cost < 0.1 * f_start  # the merge the sweep should commit
        out = reduce_layers(start, BOX, 0.1, f)
        assert out.layer_count == 1
        assert out.radii[0] == 8.0 and out.values[0] == -9.0

    def test_expensive_merges_refused(self):
        data = phase_shifts(LayeredPotential([4.0, 8.0], [-15.0, -3.0]), 2.5, 30)
        f = make_objective(data)
        start = Configuration([4.0, 8.0], [-15.0, -3.0])
        out = reduce_layers(start, BOX, 0.1, f)
        assert out.layer_count == 2
        assert np.array_equal(out.vector, start.vector)

    def test_idempotent(self):
        data = phase_shifts(LayeredPotential([8.0], [-10.0]), 1.0, 30)
        f = make_objective(data)
        once = reduce_layers(Configuration([6.0, 8.0], [-9.0, -11.0]), BOX, 0.1, f)
        twice = reduce_layers(once, BOX, 0.1, f)
        assert np.array_equal(once.vector, twice.vector)

    def test_bad_tolerance_rejected(self):
        with pytest.raises(ValueError):
            reduce_layers(Configuration([1.0], [0.0]), BOX, 0.0, lambda c: 1.0)


class TestLocalMinimize:
    def test_exact_start_is_fixed_point(self):
        data = phase_shifts(LayeredPotential([8.0], [-10.0]), 2.5, 30)
        f = make_objective(data)
        record = local_minimize(Configuration([8.0], [-10.0]), BOX, 0.1, f)
        assert record.phi <= 1e-12
        assert np.array_equal(record.config.vector, np.array([8.0, -10.0]))

    def test_redundant_representation_collapses(self):
        data = phase_shifts(LayeredPotential([8.0], [-10.0]), 2.5, 30)
        f = make_objective(data)
        record = local_minimize(Configuration([8.0, 10.0], [-10.0, 0.0]), BOX, 0.1, f)
        assert record.phi <= 1e-12
        assert record.config.layer_count == 1

    def test_descends_from_random_starts(self):
        data = phase_shifts(LayeredPotential([8.0], [-2.0 / 3.0]), 2.0, 30)
        f = make_objective(data)
        rng = np.random.default_rng(11)
        for _ in range(3):
            radii = np.sort(rng.uniform(0.0, 10.0, 2))
            values = rng.uniform(-20.0, 0.0, 2)
            start = Configuration(radii, values)
            record = local_minimize(start, BOX, 0.1, f)
            assert record.phi < f(start)
            assert BOX.contains(record.config, tol=1e-12)

    def test_reports_reproducible_phi(self):
        data = phase_shifts(LayeredPotential([8.0], [-4.0]), 2.5, 30)
        f = make_objective(data)
        record = local_minimize(Configuration([5.0, 7.0], [-6.0, -2.0]), BOX, 0.1, f)
        assert f(record.config) == record.phi

    def test_deterministic(self):
        data = phase_shifts(LayeredPotential([8.0], [-4.0]), 2.5, 30)
        f = make_objective(data)
        start = Configuration([3.0, 9.0], [-12.0, -1.0])
        a = local_minimize(start, BOX, 0.1, f)
        b = local_minimize(start, BOX, 0.1, f)
        assert np.array_equal(a.config.vector, b.config.vector)
        assert a.phi == b.phi

    def test_recovers_well_from_good_start(self):
        truth = LayeredPotential([8.0], [-10.0])
        data = phase_shifts(truth, 2.5, 30)
        f = make_objective(data)
        record = local_minimize(Configuration([7.95, 9.0], [-10.2, -0.1]), BOX, 0.1, f)
        recovered = config_to_potential(record.config)
        assert record.phi < 1e-6
        # the metric weights edge offsets by the full well depth, so even a
        # phi ~ 1e-12 reconstruction carries distance ~ 1; wrong basins sit at ~40
        assert potential_distance(recovered, truth) < 2.0
