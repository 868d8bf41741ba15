"""Predicate semantics, census correctness against the naive oracle, and
the constructive separator builders."""

from __future__ import annotations

import math

import numpy as np
import pytest

from stochsep import bounds, sampling, separability as sep


def make_predicate(w, theta, closed=True):
    return sep.LinearPredicate(np.asarray(w, dtype=float), theta, closed)


class TestLinearPredicate:
    def test_boundary_point_closed_vs_open(self):
        x = np.zeros(3)
        closed = make_predicate([1, 0, 0], 0.0, closed=True)
        opened = make_predicate([1, 0, 0], 0.0, closed=False)
        assert closed.evaluate(x) is True
        assert opened.evaluate(x) is False

    def test_tie_on_slanted_plane(self):
        x = np.array([1.0, 0.0])
        assert make_predicate([1, 1], 1.0, closed=True).evaluate(x) is True
        assert make_predicate([1, 1], 1.0, closed=False).evaluate(x) is False

    def test_negation_pointwise(self):
        rng = np.random.default_rng(0)
        pred = make_predicate(rng.standard_normal(4), 0.37, closed=False)
        neg = pred.negated()
        pts = rng.standard_normal((200, 4))
        assert np.array_equal(np.asarray(neg.evaluate(pts)), ~np.asarray(pred.evaluate(pts)))
        assert neg.closed and not pred.closed

    def test_matrix_evaluation_matches_rows(self):
        rng = np.random.default_rng(1)
        pred = make_predicate(rng.standard_normal(5), -0.2)
        pts = rng.standard_normal((50, 5))
        vec = np.asarray(pred.evaluate(pts))
        assert vec.tolist() == [pred.evaluate(p) for p in pts]

    def test_validation(self):
        with pytest.raises(ValueError):
            make_predicate([0.0, 0.0], 1.0)
        with pytest.raises(ValueError):
            make_predicate([1.0, np.nan], 1.0)
        with pytest.raises(ValueError):
            make_predicate([1.0, 2.0], 1.0).evaluate(np.zeros(3))

    def test_weights_frozen(self):
        pred = make_predicate([1.0, 2.0], 1.0)
        with pytest.raises(ValueError):
            pred.weights[0] = 5.0


class TestCascade:
    def test_empty_cascade_is_false(self):
        cascade = sep.CascadePredicate(())
        assert cascade.evaluate(np.zeros(3)) is False
        assert not np.asarray(cascade.evaluate(np.zeros((4, 3)))).any()

    def test_single_clause_equals_clause(self):
        rng = np.random.default_rng(2)
        preds = tuple(make_predicate(rng.standard_normal(3), 0.1) for _ in range(2))
        clause = sep.ConjunctionClause(preds)
        cascade = sep.CascadePredicate((clause,))
        pts = rng.standard_normal((100, 3))
        assert np.array_equal(
            np.asarray(cascade.evaluate(pts)), np.asarray(clause.evaluate(pts))
        )

    def test_dnf_matches_truth_table_oracle(self):
        rng = np.random.default_rng(3)
        preds = [make_predicate(rng.standard_normal(2), 0.0) for _ in range(3)]
        cascade = sep.CascadePredicate(
            (
                sep.ConjunctionClause((preds[0], preds[1])),
                sep.ConjunctionClause((preds[2],)),
            )
        )
        for x in rng.standard_normal((200, 2)):
            p = [q.evaluate(x) for q in preds]
            assert cascade.evaluate(x) == ((p[0] and p[1]) or p[2])

    def test_clause_requires_predicates(self):
        with pytest.raises(ValueError):
            sep.ConjunctionClause(())


class TestCapFunctional:
    def test_true_on_its_own_point(self):
        y = np.array([0.3, -0.4, 0.5])
        assert sep.cap_functional(y).evaluate(y) is True

    def test_orthogonal_point_outside(self):
        pred = sep.cap_functional(np.array([1.0, 0.0]))
        assert pred.evaluate(np.array([0.0, 1.0])) is False

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            sep.cap_functional(np.zeros(4))

    def test_cap_hit_rate_respects_volume_bound(self):
        # empirical in-cap frequency vs the cap volume bound rho^n/2
        x = sampling.sample(sampling.DistributionSpec("ball", 30), 10_000, sampling.SeedSpec(41))
        rng = np.random.default_rng(4)
        for i in rng.choice(10_000, size=20, replace=False):
            y = x[i]
            eps = 1.0 - float(np.linalg.norm(y))
            p_bound = math.exp(30 * math.log(bounds.cap_radius(eps))) / 2.0
            others = np.delete(x, i, axis=0)
            frac = float(np.asarray(sep.cap_functional(y).evaluate(others)).mean())
            sigma = math.sqrt(p_bound * (1 - p_bound) / others.shape[0])
            assert frac <= p_bound + 3 * sigma + 1e-12


class TestCensus:
    def test_antipodal_pair(self):
        x = np.array([[0.5, 0.0], [-0.5, 0.0]])
        res = sep.census(x)
        assert res.separable_count == 2
        assert res.f1 == 2.0  # the m-1 denominator exceeds 1 for tiny samples
        assert res.per_point.all()

    def test_duplicates_never_separable(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((20, 4))
        x[7] = x[3]
        res = sep.census(x)
        assert not res.per_point[3] and not res.per_point[7]

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_gram_matches_naive(self, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(5, 120))
        n = int(rng.integers(2, 10))
        x = rng.standard_normal((m, n))
        if seed % 2:
            x[m // 2] = x[0]  # force a tie
        fast, slow = sep.census(x), sep.census_naive(x)
        assert fast.separable_count == slow.separable_count
        assert np.array_equal(fast.per_point, slow.per_point)

    def test_block_boundaries(self):
        x = np.random.default_rng(6).standard_normal((37, 3))
        base = sep.census(x)
        for block in (1, 7, 36, 37, 100):
            other = sep.census(x, block=block)
            assert np.array_equal(base.per_point, other.per_point)

    def test_superset_monotonicity(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((100, 6))
        extra = rng.standard_normal((50, 6))
        small = sep.census(x).per_point
        large = sep.census(np.vstack([x, extra])).per_point[:100]
        assert not (large & ~small).any()  # growing the sample never helps

    def test_requires_two_rows(self):
        with pytest.raises(ValueError):
            sep.census(np.ones((1, 3)))

    def test_ball_frequency_dominates_theory_bound(self):
        x = sampling.sample(sampling.DistributionSpec("ball", 20), 10_000, sampling.SeedSpec(43))
        f1 = sep.census(x).f1
        theory = bounds.point_separation_bound_max(20, 10_000).value
        assert f1 >= theory - 0.05


class TestMcExperiment:
    CONFIG = sep.ExperimentConfig(("ball", "cube"), (3, 6), 400, 3, 99)

    def test_structure_and_determinism(self):
        rep1 = sep.mc_experiment(self.CONFIG, threads=1)
        rep2 = sep.mc_experiment(self.CONFIG, threads=2)
        assert len(rep1.cells) == 4
        for c1, c2 in zip(rep1.cells, rep2.cells):
            assert c1.f1_values == c2.f1_values
            assert len(c1.f1_values) == 3
            assert c1.f1_min <= c1.f1_median <= c1.f1_max

    def test_theory_only_on_ball_cells(self):
        rep = sep.mc_experiment(self.CONFIG, threads=1)
        for cell in rep.cells:
            if cell.distribution.kind == "ball":
                assert cell.theory == pytest.approx(
                    bounds.point_separation_bound_max(cell.distribution.n, 400).value
                )
            else:
                assert cell.theory is None

    def test_config_validation(self):
        with pytest.raises(ValueError):
            sep.ExperimentConfig((), (3,), 100, 1, 0)
        with pytest.raises(ValueError):
            sep.ExperimentConfig(("ball",), (3,), 100, 0, 0)
        mismatched = sep.ExperimentConfig(
            (sampling.DistributionSpec("ellipsoid", 4, (1.0,) * 4),), (5,), 100, 1, 0
        )
        with pytest.raises(ValueError):
            mismatched.cells()


class TestBuildTwoNeuron:
    def test_empty_cap_gives_single_predicate(self):
        y = np.array([0.9, 0.0, 0.0])
        others = np.array([[0.0, 0.5, 0.0], [0.1, 0.0, -0.2]])
        clause = sep.build_two_neuron(y, others)
        assert len(clause.predicates) == 1
        assert clause.evaluate(y)
        assert not np.asarray(clause.evaluate(others)).any()

    def test_planted_cap_survivor(self):
        n = 10
        y = np.zeros(n)
        y[0] = 0.95
        spurious = np.zeros(n)
        spurious[0], spurious[1] = 0.96, 0.1  # inside y's cap
        others = np.vstack([spurious, np.full((3, n), 0.05)])
        assert sep.cap_functional(y).evaluate(spurious)
        clause = sep.build_two_neuron(y, others)
        assert len(clause.predicates) == 2
        assert clause.evaluate(y)
        assert not np.asarray(clause.evaluate(others)).any()

    def test_weights_orthogonal(self):
        rng = np.random.default_rng(8)
        x = sampling.sample(sampling.DistributionSpec("ball", 10), 2_000, sampling.SeedSpec(11))
        built = 0
        for i in range(200):
            others = np.delete(x, i, axis=0)
            try:
                clause = sep.build_two_neuron(x[i], others)
            except sep.SeparationFailure:
                continue
            if len(clause.predicates) == 2:
                w1, w2 = (p.weights for p in clause.predicates)
                cos = abs(w1 @ w2) / (np.linalg.norm(w1) * np.linalg.norm(w2))
                assert cos <= 1e-8
                built += 1
        assert built > 0

    def test_fixes_points_beyond_single_functional(self):
        x = sampling.sample(sampling.DistributionSpec("ball", 10), 2_000, sampling.SeedSpec(11))
        res = sep.census(x)
        hard = np.flatnonzero(~res.per_point)
        fixed = 0
        for i in hard:
            others = np.delete(x, i, axis=0)
            try:
                sep.build_two_neuron(x[i], others)
                fixed += 1
            except sep.SeparationFailure:
                pass
        assert hard.size > 0
        assert fixed > hard.size // 4  # the second functional rescues many

    def test_degenerate_inputs_fail_loudly(self):
        y = np.array([1.0, 0.0])
        others = np.array([[1.0, 0.0]])  # duplicate of y: not separable
        with pytest.raises(sep.SeparationFailure):
            sep.build_two_neuron(y, others)


class TestBuildConjunctionSeparator:
    def test_single_other_point(self):
        y = np.array([1.0, 1.0])
        z = np.array([[0.0, 0.0]])
        clause = sep.build_conjunction_separator(y, z, max_k=1)
        assert len(clause.predicates) == 1
        assert clause.evaluate(y)
        assert not clause.evaluate(z[0])

    def test_triangle_center(self):
        tri = np.array([[1.0, 0.0], [-0.5, np.sqrt(3) / 2], [-0.5, -np.sqrt(3) / 2]])
        clause = sep.build_conjunction_separator(np.zeros(2), tri, max_k=3)
        assert len(clause.predicates) <= 3
        assert clause.evaluate(np.zeros(2))
        assert not np.asarray(clause.evaluate(tri)).any()

    def test_square_needs_four(self):
        corners = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
        clause = sep.build_conjunction_separator(np.zeros(2), corners, max_k=4)
        assert len(clause.predicates) == 4
        assert clause.evaluate(np.zeros(2))
        assert not np.asarray(clause.evaluate(corners)).any()

    def test_budget_exhaustion(self):
        corners = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
        with pytest.raises(sep.SeparationFailure):
            sep.build_conjunction_separator(np.zeros(2), corners, max_k=2)

    def test_coincident_point_rejected(self):
        with pytest.raises(ValueError):
            sep.build_conjunction_separator(
                np.zeros(2), np.array([[0.0, 0.0], [1.0, 1.0]]), max_k=3
            )
