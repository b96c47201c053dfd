"""Scoring, exact solvers, the alternating heuristic, and the dispatcher."""
import numpy as np
import pytest

from dmicluster import linalg
from dmicluster.clustering import (
    SolverConfig,
    augment_and_pick,
    brute_force,
    canonicalize_assignment,
    centered_idxmax_init,
    dmi_cluster,
    dmi_score,
    k_cofactors,
    labels_to_assignment,
    same_up_to_permutation,
    solve_exact_1d,
    solve_exact_2d,
)
from dmicluster.errors import (
    AllEqualError,
    DegenerateRankError,
    ShapeMismatchError,
    SingularIterationError,
    TooLargeError,
)
from dmicluster.fixtures import fixture_array, transform_parts

from helpers import (
    canonical_label_key,
    enumerate_best,
    enumerate_optimal_set,
    plain_score,
    random_full_labels,
    random_invertible,
    single_move_gain,
)


def legal_instance(rng, n, k):
    """Random data whose rows are k distinct generator rows repeated."""
    labels = random_full_labels(rng, n, k)
    b = random_invertible(rng, k)
    return labels_to_assignment(labels, k) @ b, labels


class TestAugmentAndPick:
    def test_fixture_keeps_all_columns(self):
        a = fixture_array("affine_7x2")
        a_tilde, cols, k = augment_and_pick(a)
        assert k == 3 and cols == (0, 1, 2)
        np.testing.assert_array_equal(a_tilde,
                                      np.hstack([a, np.ones((7, 1))]))

    def test_identical_zero_rows_pick_ones_column(self):
        a_tilde, cols, k = augment_and_pick(np.zeros((5, 2)))
        assert k == 1 and cols == (2,)
        np.testing.assert_array_equal(a_tilde, np.ones((5, 1)))

    def test_identical_nonzero_rows_are_rank_1(self):
        # greedy left-to-right picks the first constant data column; the
        # ones column spans the same space and is excluded
        a_tilde, cols, k = augment_and_pick(np.tile([2.0, 3.0], (4, 1)))
        assert k == 1 and cols == (0,)

    def test_row_stochastic_drops_ones(self):
        rng = np.random.default_rng(0)
        a = rng.dirichlet(np.ones(4), size=12)
        a_tilde, cols, k = augment_and_pick(a)
        assert k == 4 and cols == (0, 1, 2, 3)


class TestDmiScore:
    def test_empty_cluster_scores_zero(self):
        c = labels_to_assignment(np.array([0, 0, 0]), 2)
        a_tilde = np.array([[1.0, 1.0], [2.0, 1.0], [3.0, 1.0]])
        assert dmi_score(c, a_tilde) == 0.0

    def test_legal_product_is_positive(self):
        rng = np.random.default_rng(1)
        a, labels = legal_instance(rng, 8, 3)
        a_tilde, _, _ = augment_and_pick(a)
        assert dmi_score(labels_to_assignment(labels, 3), a_tilde) > 0.0

    def test_mean_split_is_maximal_over_all_assignments(self):
        values = np.array([1.0, 2.0, 3.0, 4.0])
        a_tilde, _, _ = augment_and_pick(values[:, None])
        split = labels_to_assignment(np.array([1, 1, 0, 0]), 2)
        best, _ = enumerate_best(a_tilde)
        assert dmi_score(split, a_tilde) == pytest.approx(best, rel=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            dmi_score(labels_to_assignment(np.array([0, 1]), 2), np.ones((3, 2)))
        with pytest.raises(ShapeMismatchError):
            dmi_score(labels_to_assignment(np.array([0, 1]), 2), np.ones((2, 3)))

    def test_matches_plain_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n, k = int(rng.integers(3, 9)), int(rng.integers(2, 4))
            a_tilde = rng.normal(size=(n, k))
            labels = random_full_labels(rng, n, k)
            c = labels_to_assignment(labels, k)
            assert dmi_score(c, a_tilde) == pytest.approx(
                plain_score(labels, a_tilde), rel=1e-9, abs=1e-12
            )


class TestExact1d:
    def test_one_to_four_splits_above_mean(self):
        res = solve_exact_1d([1.0, 2.0, 3.0, 4.0])
        assert res.solver_tag == "exact_1d"
        np.testing.assert_array_equal(res.labels, [1, 1, 0, 0])
        assert res.score == pytest.approx(8.0)

    def test_single_outlier(self):
        res = solve_exact_1d([0.0, 0.0, 0.0, 10.0])
        np.testing.assert_array_equal(res.labels, [1, 1, 1, 0])

    def test_point_at_mean_joins_lower_cluster(self):
        res = solve_exact_1d([-1.0, 1.0])
        np.testing.assert_array_equal(res.labels, [1, 0])
        res = solve_exact_1d([-1.0, 1.0, 0.0])
        np.testing.assert_array_equal(res.labels, [1, 0, 1])
        # the placement of the at-mean point is score-neutral
        a_tilde, _, _ = augment_and_pick(np.array([[-1.0], [1.0], [0.0]]))
        assert plain_score([1, 0, 1], a_tilde) == pytest.approx(
            plain_score([1, 0, 0], a_tilde)
        )

    def test_all_equal_raises(self):
        with pytest.raises(AllEqualError):
            solve_exact_1d([2.0, 2.0, 2.0])

    def test_optimal_against_enumeration(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            values = rng.normal(size=rng.integers(2, 9))
            if np.all(values == values[0]):
                continue
            res = solve_exact_1d(values)
            a_tilde, _, _ = augment_and_pick(values[:, None])
            best, _ = enumerate_best(a_tilde)
            assert res.score == pytest.approx(best, rel=1e-10)

    def test_partition_inverts_aggregate(self):
        res = solve_exact_1d([1.0, 2.0, 5.0])
        a_tilde, _, _ = augment_and_pick(np.array([[1.0], [2.0], [5.0]]))
        np.testing.assert_allclose(
            (res.assignment.T @ a_tilde) @ res.partition, np.eye(2), atol=1e-12
        )


class TestExact2d:
    def test_three_points_become_singletons(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        res = solve_exact_2d(pts)
        assert res.solver_tag == "exact_2d"
        assert sorted(res.assignment.sum(axis=0).tolist()) == [1.0, 1.0, 1.0]
        # score = 3! x triangle area x (1*1*1) via the simplex-volume form
        assert res.score == pytest.approx(1.0)

    def test_fixture_matches_brute_force(self):
        a = fixture_array("affine_7x2")
        res = solve_exact_2d(a)
        a_tilde, _, _ = augment_and_pick(a)
        best, labels = enumerate_best(a_tilde)
        assert res.score == pytest.approx(best, rel=1e-10)
        assert canonical_label_key(res.labels) == canonical_label_key(labels)

    def test_simplex_fixture_subsample_matches_brute_force(self):
        rng = np.random.default_rng(4)
        rows = rng.choice(20, size=10, replace=False)
        # two independent coordinates of the on-simplex rows
        sub = fixture_array("dmi_20x3")[rows][:, :2]
        res = solve_exact_2d(sub)
        a_tilde, _, _ = augment_and_pick(sub)
        best, _ = enumerate_best(a_tilde)
        assert res.score == pytest.approx(best, rel=1e-10)

    def test_random_instances_match_brute_force(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            pts = rng.normal(size=(int(rng.integers(3, 9)), 2))
            res = solve_exact_2d(pts)
            a_tilde, _, _ = augment_and_pick(pts)
            best, _ = enumerate_best(a_tilde)
            assert res.score == pytest.approx(best, rel=1e-10)

    def test_collinear_falls_back_to_1d(self):
        pts = np.column_stack([np.arange(5.0), 2.0 * np.arange(5.0) + 1.0])
        res = solve_exact_2d(pts)
        assert res.solver_tag == "exact_1d"
        assert res.k == 2
        with pytest.raises(DegenerateRankError):
            solve_exact_2d(pts, allow_fallback=False)

    def test_wrong_width_rejected(self):
        with pytest.raises(ShapeMismatchError):
            solve_exact_2d(np.ones((4, 3)))


class TestBruteForce:
    def test_distinct_independent_rows_become_identity(self):
        rng = np.random.default_rng(6)
        a_tilde = random_invertible(rng, 4)
        res = brute_force(a_tilde)
        assert same_up_to_permutation(res.assignment, np.eye(4))
        assert res.score == pytest.approx(abs(np.linalg.det(a_tilde)), rel=1e-12)

    def test_dominates_local_search(self):
        rng = np.random.default_rng(7)
        checked = 0
        for _ in range(10):
            a_tilde, _, _ = augment_and_pick(rng.normal(size=(7, 2)))
            bf = brute_force(a_tilde)
            try:
                run = k_cofactors(a_tilde, centered_idxmax_init(a_tilde))
            except SingularIterationError:
                continue  # centered init emptied a cluster on this draw
            checked += 1
            assert bf.score >= run.score - 1e-12
        assert checked >= 5

    def test_agrees_with_exact_1d(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            values = rng.normal(size=6)
            a_tilde, _, _ = augment_and_pick(values[:, None])
            assert brute_force(a_tilde).score == pytest.approx(
                solve_exact_1d(values).score, rel=1e-12
            )

    def test_matches_plain_enumeration(self):
        rng = np.random.default_rng(9)
        a_tilde = rng.normal(size=(6, 3))
        best, _ = enumerate_best(a_tilde)
        assert brute_force(a_tilde).score == pytest.approx(best, rel=1e-10)

    def test_too_large(self):
        with pytest.raises(TooLargeError):
            brute_force(np.ones((40, 3)))

    def test_collects_ties(self):
        a_tilde = np.array([[1.0, 1.0], [-1.0, 1.0], [1.0, 1.0], [-1.0, 1.0]])
        res = brute_force(a_tilde, collect_ties=True)
        keys = {tuple(np.argmax(c, axis=1)) for c in res.details["tied_assignments"]}
        oracle, _ = enumerate_optimal_set(a_tilde)
        assert keys == oracle


class TestKCofactors:
    def test_global_optimum_is_a_fixed_point(self):
        rng = np.random.default_rng(10)
        a, labels = legal_instance(rng, 9, 3)
        a_tilde, _, _ = augment_and_pick(a)
        init = labels_to_assignment(labels, 3)
        run = k_cofactors(a_tilde, init)
        assert run.details["termination"] == "converged"
        assert run.details["iterations"] == 1
        np.testing.assert_array_equal(run.assignment, init)

    def test_fixture_run_converges_with_certificate(self):
        a = fixture_array("kcofactors_30x2")
        a_tilde, _, _ = augment_and_pick(a)
        run = k_cofactors(a_tilde, centered_idxmax_init(a_tilde))
        assert run.details["termination"] == "converged"
        assert run.details["certificate"]
        traj = run.details["score_trajectory"]
        assert all(b >= a - 1e-12 for a, b in zip(traj, traj[1:]))
        # both directions of the local-max certificate
        d = linalg.inverse(run.assignment.T @ a_tilde)
        np.testing.assert_array_equal(
            linalg.idxmax(a_tilde @ d, reference=run.assignment), run.assignment
        )
        assert single_move_gain(run.labels, a_tilde) <= 1e-9 * run.score

    def test_mean_split_init_is_fixed_point_in_1d(self):
        values = np.array([0.0, 1.0, 2.0, 9.0, 10.0])
        a_tilde, _, _ = augment_and_pick(values[:, None])
        init = solve_exact_1d(values).assignment
        run = k_cofactors(a_tilde, init)
        assert run.details["iterations"] == 1
        np.testing.assert_array_equal(run.assignment, init)

    def test_empty_cluster_init_rejected(self):
        a_tilde = np.array([[1.0, 1.0], [2.0, 1.0], [3.0, 1.0]])
        with pytest.raises(SingularIterationError):
            k_cofactors(a_tilde, labels_to_assignment(np.array([0, 0, 0]), 2))

    def test_singular_init_rejected(self):
        # two clusters with identical aggregates
        a_tilde = np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 1.0], [2.0, 1.0]])
        init = labels_to_assignment(np.array([0, 1, 0, 1]), 2)
        with pytest.raises(SingularIterationError):
            k_cofactors(a_tilde, init)

    def test_certified_runs_are_local_maxima(self):
        rng = np.random.default_rng(11)
        checked = 0
        for _ in range(15):
            a_tilde = rng.normal(size=(8, 3))
            init = labels_to_assignment(random_full_labels(rng, 8, 3), 3)
            try:
                run = k_cofactors(a_tilde, init)
            except SingularIterationError:
                continue
            if run.details["termination"] != "converged":
                continue
            checked += 1
            assert single_move_gain(run.labels, a_tilde) <= 1e-9 * max(run.score, 1e-9)
        assert checked >= 5


class TestDispatch:
    def test_single_cluster(self):
        res = dmi_cluster(np.tile([3.0, 4.0], (5, 1)))
        assert res.solver_tag == "single_cluster"
        assert res.k == 1
        np.testing.assert_array_equal(res.assignment, np.ones((5, 1)))

    def test_legal_recovery_via_dedup_and_brute(self):
        rng = np.random.default_rng(12)
        for k in (2, 3, 4):
            a, labels = legal_instance(rng, 7, k)
            want = labels_to_assignment(labels, k)
            auto = dmi_cluster(a)
            assert auto.solver_tag == "exact_legal"
            assert same_up_to_permutation(auto.assignment, want)
            brute = dmi_cluster(a, SolverConfig(solver="brute"))
            assert same_up_to_permutation(brute.assignment, want)

    def test_legal_recovery_via_heuristic(self):
        rng = np.random.default_rng(13)
        a, labels = legal_instance(rng, 9, 3)
        res = dmi_cluster(a, SolverConfig(solver="kcofactors", seed=1))
        assert res.solver_tag == "k_cofactors"
        assert same_up_to_permutation(res.assignment,
                                      labels_to_assignment(labels, 3))

    def test_effective_dimension_dispatch(self):
        rng = np.random.default_rng(14)
        assert dmi_cluster(rng.normal(size=(6, 1))).solver_tag == "exact_1d"
        assert dmi_cluster(rng.normal(size=(7, 2))).solver_tag == "exact_2d"
        res = dmi_cluster(rng.normal(size=(8, 3)), SolverConfig(seed=0))
        assert res.solver_tag == "k_cofactors"

    def test_exact_mode_uses_brute_for_high_dimension(self):
        rng = np.random.default_rng(15)
        a = rng.normal(size=(6, 3))
        exact = dmi_cluster(a, SolverConfig(solver="exact"))
        assert exact.solver_tag == "brute_force"
        with pytest.raises(TooLargeError):
            dmi_cluster(rng.normal(size=(30, 3)),
                        SolverConfig(solver="exact", brute_cap=1000))

    def test_heuristic_matches_brute_on_small_instances(self):
        rng = np.random.default_rng(16)
        hits = 0
        for _ in range(10):
            a = rng.normal(size=(7, 3))
            heur = dmi_cluster(a, SolverConfig(seed=2))
            bf = dmi_cluster(a, SolverConfig(solver="brute"))
            assert heur.score <= bf.score + 1e-10
            hits += heur.score >= bf.score * (1.0 - 1e-9)
        assert hits >= 8  # restarts find the global optimum nearly always

    def test_determinism(self):
        rng = np.random.default_rng(17)
        a = rng.normal(size=(10, 4))
        r1 = dmi_cluster(a, SolverConfig(seed=5))
        r2 = dmi_cluster(a, SolverConfig(seed=5))
        np.testing.assert_array_equal(r1.assignment, r2.assignment)
        assert r1.score == r2.score

    def test_canonical_order(self):
        res = dmi_cluster(np.array([[0.0], [0.0], [0.0], [10.0]]))
        canon, _ = canonicalize_assignment(res.assignment)
        np.testing.assert_array_equal(res.assignment, canon)
        # larger cluster first
        assert res.assignment[:, 0].sum() == 3.0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(solver="nope")
        with pytest.raises(ValueError):
            SolverConfig(restarts=0)
        with pytest.raises(ValueError):
            SolverConfig(rank_tol=-1.0)


class TestTheoremProperties:
    def test_affine_fixture_invariance(self):
        a = fixture_array("affine_7x2")
        t, b = transform_parts()
        res_a = dmi_cluster(a)
        res_t = dmi_cluster(a @ t + b)
        assert same_up_to_permutation(res_a.assignment, res_t.assignment)

    def test_score_ratio_invariance(self):
        rng = np.random.default_rng(18)
        for _ in range(40):
            n, d = int(rng.integers(4, 10)), int(rng.integers(1, 4))
            a = rng.normal(size=(n, d))
            t = random_invertible(rng, d, min_abs_det=0.1)
            b = rng.normal(size=(1, d))
            at_a, _, k = augment_and_pick(a)
            at_t, _, k2 = augment_and_pick(a @ t + b)
            assert k == k2
            c1 = labels_to_assignment(random_full_labels(rng, n, k), k)
            c2 = labels_to_assignment(random_full_labels(rng, n, k), k)
            s = [dmi_score(c, at_a) for c in (c1, c2)]
            st = [dmi_score(c, at_t) for c in (c1, c2)]
            if min(s) < 1e-9 or min(st) < 1e-9:
                continue
            assert s[0] / s[1] == pytest.approx(st[0] / st[1], rel=1e-8)

    def test_argmax_set_invariance_small(self):
        rng = np.random.default_rng(19)
        for _ in range(15):
            n, d = int(rng.integers(4, 7)), int(rng.integers(1, 3))
            a = rng.normal(size=(n, d))
            t = random_invertible(rng, d, min_abs_det=0.2)
            b = rng.normal(size=(1, d))
            at_a, _, _ = augment_and_pick(a)
            at_t, _, _ = augment_and_pick(a @ t + b)
            set_a, _ = enumerate_optimal_set(at_a, rel_tol=1e-9)
            set_t, _ = enumerate_optimal_set(at_t, rel_tol=1e-9)
            assert set_a == set_t

    def test_mean_row_lies_on_every_boundary(self):
        rng = np.random.default_rng(20)
        for _ in range(10):
            a = rng.normal(size=(8, 2))
            res = dmi_cluster(a)
            mean_row = augment_and_pick(a)[0].mean(axis=0)
            prods = mean_row @ res.partition
            assert np.max(np.abs(prods - prods[0])) <= 1e-8 * abs(prods[0])

    def test_simplex_volume_form(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            a = rng.normal(size=(9, 2))
            res = dmi_cluster(a)
            a_tilde, _, _ = augment_and_pick(a)
            sizes = res.assignment.sum(axis=0)
            means = (res.assignment.T @ a_tilde) / sizes[:, None]
            expected = np.prod(sizes) * abs(linalg.determinant(means))
            assert res.score == pytest.approx(expected, rel=1e-8)

    def test_legality_randomized(self):
        rng = np.random.default_rng(22)
        for _ in range(25):
            k = int(rng.integers(2, 6))
            n = int(rng.integers(k, 31))
            a, labels = legal_instance(rng, n, k)
            res = dmi_cluster(a)
            assert same_up_to_permutation(res.assignment,
                                          labels_to_assignment(labels, k))
