import numpy as np
import pytest

from priorbo.errors import ValidationError
from priorbo.pareto import (
    ParetoFront,
    dominates,
    hypervolume_2d,
    hypervolume_inclusion_exclusion,
    hypervolume_monte_carlo,
    pareto_front,
)


def front_of(points, ref=(0.0, 0.0)):
    pts = np.asarray(points, dtype=float)
    configs = np.zeros((pts.shape[0], 1))
    return pareto_front(configs, pts, np.asarray(ref, dtype=float))


class TestDominates:
    def test_examples(self):
        assert dominates([1.0, 2.0], [1.0, 1.0])
        assert not dominates([1.0, 1.0], [1.0, 1.0])  # equality is not strict
        assert not dominates([2.0, 0.0], [1.0, 1.0])  # incomparable
        assert not dominates([1.0, 1.0], [2.0, 0.0])

    def test_irreflexive_antisymmetric_transitive(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            a, b, c = rng.random((3, 3))
            assert not dominates(a, a)
            if dominates(a, b):
                assert not dominates(b, a)
            if dominates(a, b) and dominates(b, c):
                assert dominates(a, c)

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            dominates([1.0, 2.0], [1.0])


class TestParetoFront:
    def test_extraction(self):
        front = front_of([[1.0, 1.0], [2.0, 0.5], [0.5, 0.2], [1.5, 1.5]])
        # (0.5, 0.2) dominated by (1, 1); (1, 1) dominated by (1.5, 1.5)
        assert front.size == 2
        assert front.objectives.tolist() == [[2.0, 0.5], [1.5, 1.5]]

    def test_duplicates_collapse(self):
        front = front_of([[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]])
        assert front.size == 1

    def test_canonical_order_descending_first_objective(self):
        front = front_of([[0.2, 0.9], [0.9, 0.2], [0.5, 0.5]])
        first = front.objectives[:, 0]
        assert np.all(np.diff(first) < 0)

    def test_empty_observations(self):
        front = pareto_front(np.empty((0, 2)), np.empty((0, 2)), np.zeros(2))
        assert front.is_empty()
        assert hypervolume_2d(front) == 0.0

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        pts = rng.random((40, 2))
        once = front_of(pts)
        twice = front_of(once.objectives)
        assert np.array_equal(once.objectives, twice.objectives)

    def test_mutual_non_domination_enforced(self):
        with pytest.raises(ValidationError):
            ParetoFront(
                np.zeros((2, 1)),
                np.array([[1.0, 1.0], [0.5, 0.5]]),
                np.zeros(2),
            )

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            front_of([[np.inf, 1.0]])


class TestHypervolume2d:
    def test_single_point_unit_square(self):
        assert hypervolume_2d(front_of([[1.0, 1.0]])) == pytest.approx(1.0)

    def test_two_point_staircase(self):
        # (1, 0.5) and (0.5, 1): union of two boxes = 0.75
        hv = hypervolume_2d(front_of([[1.0, 0.5], [0.5, 1.0]]))
        assert hv == pytest.approx(0.75)

    def test_points_not_dominating_reference_contribute_zero(self):
        hv = hypervolume_2d(front_of([[1.0, 1.0], [2.0, -0.5]]))
        assert hv == pytest.approx(1.0)
        assert hypervolume_2d(front_of([[-0.2, -0.1]])) == 0.0

    def test_translation_invariance(self):
        rng = np.random.default_rng(2)
        pts = rng.random((12, 2))
        shift = np.array([3.7, -2.2])
        base = front_of(pts)
        moved = pareto_front(
            np.zeros((pts.shape[0], 1)), pts + shift, shift
        )
        assert hypervolume_2d(moved) == pytest.approx(hypervolume_2d(base), rel=1e-12)

    def test_adding_points_never_decreases_hv(self):
        rng = np.random.default_rng(3)
        pts = list(rng.random((30, 2)))
        prev = 0.0
        for k in range(1, len(pts) + 1):
            hv = hypervolume_2d(front_of(pts[:k]))
            assert hv >= prev - 1e-15
            prev = hv

    def test_requires_two_objectives(self):
        f = ParetoFront(np.zeros((1, 1)), np.array([[1.0, 1.0, 1.0]]), np.zeros(3))
        with pytest.raises(ValidationError):
            hypervolume_2d(f)


class TestHypervolumeEstimators:
    def test_inclusion_exclusion_matches_sweep(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            pts = 0.05 + 0.95 * rng.random((rng.integers(1, 11), 2))
            f = front_of(pts)
            assert hypervolume_inclusion_exclusion(f) == pytest.approx(
                hypervolume_2d(f), abs=1e-9
            )

    def test_inclusion_exclusion_three_objectives(self):
        # two overlapping boxes: 1*1*1 + 0.5*0.5*2 - 0.5*0.5*1 = 1.25
        f = ParetoFront(
            np.zeros((2, 1)),
            np.array([[1.0, 1.0, 1.0], [0.5, 0.5, 2.0]]),
            np.zeros(3),
        )
        assert hypervolume_inclusion_exclusion(f) == pytest.approx(1.25)

    def test_monte_carlo_agrees_with_sweep(self):
        rng = np.random.default_rng(5)
        n = 100_000
        for _ in range(10):
            pts = 0.1 + 0.9 * rng.random((6, 2))
            f = front_of(pts)
            exact = hypervolume_2d(f)
            est = hypervolume_monte_carlo(f, n, np.random.default_rng(99))
            box = np.prod(f.objectives.max(axis=0) - f.reference_point)
            p = exact / box
            se = box * np.sqrt(p * (1 - p) / n)
            assert abs(est - exact) <= 4 * se + 1e-12

    def test_monte_carlo_empty_box(self):
        f = front_of([[-1.0, -1.0]])
        assert hypervolume_monte_carlo(f, 1000, np.random.default_rng(0)) == 0.0

    def test_inclusion_exclusion_point_budget(self):
        pts = np.column_stack([np.linspace(1, 2, 25), np.linspace(2, 1, 25)])
        f = front_of(pts)
        with pytest.raises(ValidationError):
            hypervolume_inclusion_exclusion(f)
