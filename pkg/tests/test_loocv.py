import numpy as np
import pytest

from pumtune.errors import InsufficientPoints
from pumtune.geometry import (
    PointSet,
    Subdomain,
    compute_delta_min,
    generate_uniform_points,
    points_in_ball,
)
from pumtune.kernels import RadialKernel, kernel_matrix, solve_spd
from pumtune.loocv import (
    GridSpec,
    SearchBox,
    grid_search,
    loocv_criterion,
    rippa_errors,
)


def refit_loo_errors(train_j: PointSet, kernel: RadialKernel) -> np.ndarray:
    """Brute-force leave-one-out oracle: n refits of the (n-1)-point system.

    Uses the same regularization the one-shot path applied, so the comparison
    stays about the shortcut identity rather than differing models.
    """
    K = kernel_matrix(kernel, train_j, train_j)
    _, fact = solve_spd(K, train_j.values)
    Kj = K + fact.jitter_used * np.eye(train_j.n)
    errors = np.empty(train_j.n)
    for k in range(train_j.n):
        keep = [i for i in range(train_j.n) if i != k]
        coeffs = np.linalg.solve(Kj[np.ix_(keep, keep)], train_j.values[keep])
        pred = Kj[k, keep] @ coeffs
        errors[k] = train_j.values[k] - pred
    return errors


def random_subdomain_instance(seed, n_lo=5, n_hi=30):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_lo, n_hi + 1))
    pts = rng.random((n, 2))
    values = rng.normal(size=n)
    return PointSet(pts, values)


def well_conditioned(train, kernel, cap=1e7) -> bool:
    """Entrywise 1e-8 agreement is decidable in float64 only when the
    (jittered) system is reasonably conditioned; skip instances beyond it."""
    K = kernel_matrix(kernel, train, train)
    _, fact = solve_spd(K, train.values)
    return np.linalg.cond(K + fact.jitter_used * np.eye(train.n)) <= cap


class TestRippaErrors:
    def test_zero_values_give_zero_errors(self):
        ps = generate_uniform_points(8, 2, seed=1)
        train = PointSet(ps.points, np.zeros(8))
        errs = rippa_errors(train, RadialKernel("gaussian", 4.0))
        np.testing.assert_array_equal(errs, np.zeros(8))

    def test_two_symmetric_points(self):
        train = PointSet(np.array([[0.4, 0.5], [0.6, 0.5]]), np.array([1.0, 1.0]))
        errs = rippa_errors(train, RadialKernel("matern4", 3.0))
        assert abs(errs[0]) == pytest.approx(abs(errs[1]), rel=1e-12)

    def test_matches_refit_oracle(self):
        ps = generate_uniform_points(10, 2, seed=3)
        rng = np.random.default_rng(0)
        train = PointSet(ps.points, rng.normal(size=10))
        kernel = RadialKernel("gaussian", 4.0)
        got = rippa_errors(train, kernel)
        expected = refit_loo_errors(train, kernel)
        np.testing.assert_allclose(got, expected, rtol=1e-8)

    @pytest.mark.parametrize("family", ["gaussian", "matern4"])
    def test_identity_on_random_instances(self, family):
        checked = 0
        for seed in range(20):
            train = random_subdomain_instance(seed)
            eps = 0.5 + 14.5 * np.random.default_rng(seed + 50).random()
            kernel = RadialKernel(family, eps)
            if not well_conditioned(train, kernel):
                continue
            got = rippa_errors(train, kernel)
            expected = refit_loo_errors(train, kernel)
            scale = np.maximum(np.abs(expected), 1e-9 * np.max(np.abs(expected)))
            assert np.max(np.abs(got - expected) / scale) <= 1e-8
            checked += 1
        assert checked >= 10

    def test_needs_two_points(self):
        train = PointSet(np.array([[0.5, 0.5]]), np.array([1.0]))
        with pytest.raises(InsufficientPoints):
            rippa_errors(train, RadialKernel("gaussian", 1.0))


def make_subdomain(train, center, m=25, n_min=10):
    dmin = compute_delta_min(train, center, m, 2, n_min)
    members = points_in_ball(train, center, 2.0 * dmin)
    return Subdomain(center, 2.0 * dmin, members, dmin)


class TestLoocvCriterion:
    def test_zero_data_scores_zero(self):
        ps = generate_uniform_points(60, 2, seed=5)
        train = PointSet(ps.points, np.zeros(60))
        sub = make_subdomain(train, np.array([0.5, 0.5]))
        for eps, delta in [(0.5, sub.delta_min), (10.0, 1.7 * sub.delta_min)]:
            assert loocv_criterion(train, eps, delta, sub, "gaussian") == 0.0

    def test_composes_rippa_errors_bitwise(self):
        ps = generate_uniform_points(80, 2, seed=6)
        values = np.cos(3 * ps.points[:, 0]) * ps.points[:, 1]
        train = PointSet(ps.points, values)
        sub = make_subdomain(train, np.array([0.4, 0.6]))
        delta = 1.3 * sub.delta_min
        members = points_in_ball(train, sub.center, delta)
        direct = np.max(
            np.abs(rippa_errors(train.subset(members), RadialKernel("matern4", 5.0)))
        )
        assert loocv_criterion(train, 5.0, delta, sub, "matern4") == direct

    def test_matches_refit_maximum(self):
        ps = generate_uniform_points(70, 2, seed=7)
        rng = np.random.default_rng(1)
        train = PointSet(ps.points, rng.normal(size=70))
        sub = make_subdomain(train, np.array([0.5, 0.5]), n_min=15)
        got = loocv_criterion(train, 4.0, sub.delta_min, sub, "gaussian")
        members = points_in_ball(train, sub.center, sub.delta_min)
        oracle = np.max(
            np.abs(refit_loo_errors(train.subset(members), RadialKernel("gaussian", 4.0)))
        )
        assert got == pytest.approx(oracle, rel=1e-8)

    def test_permutation_invariance(self):
        ps = generate_uniform_points(50, 2, seed=8)
        rng = np.random.default_rng(2)
        values = rng.normal(size=50)
        perm = rng.permutation(50)
        train = PointSet(ps.points, values)
        shuffled = PointSet(ps.points[perm], values[perm])
        sub = make_subdomain(train, np.array([0.5, 0.5]))
        a = loocv_criterion(train, 5.0, 1.4 * sub.delta_min, sub, "matern4")
        b = loocv_criterion(shuffled, 5.0, 1.4 * sub.delta_min, sub, "matern4")
        assert a == pytest.approx(b, rel=1e-9)

    def test_too_small_ball_raises(self):
        train = PointSet(
            np.array([[0.5, 0.5], [0.9, 0.9], [0.1, 0.1]]), np.zeros(3)
        )
        sub = Subdomain(np.array([0.5, 0.5]), 0.05, np.array([0]), 0.05)
        with pytest.raises(InsufficientPoints):
            loocv_criterion(train, 1.0, 0.05, sub, "gaussian")


class TestGridSpec:
    def test_eps_grid_excludes_zero_and_hits_endpoint(self):
        box = SearchBox(delta_min=0.1)
        eps = GridSpec(n_eps=500, n_delta=30).eps_values(box)
        assert eps[0] == pytest.approx(0.04)
        assert eps[-1] == 20.0
        assert np.all(eps > 0.0)
        np.testing.assert_allclose(np.diff(eps), eps[0], rtol=1e-12)

    def test_delta_grid_inclusive_endpoints(self):
        box = SearchBox(delta_min=0.1)
        deltas = GridSpec(n_eps=5, n_delta=4).delta_values(box)
        assert deltas[0] == 0.1
        assert deltas[-1] == 0.2

    def test_rejects_empty_grid(self):
        with pytest.raises(ValueError):
            GridSpec(n_eps=0, n_delta=3)


class TestGridSearch:
    def test_singleton_grid(self):
        ps = generate_uniform_points(60, 2, seed=9)
        values = np.sin(5 * ps.points[:, 0])
        train = PointSet(ps.points, values)
        sub = make_subdomain(train, np.array([0.5, 0.5]))
        res = grid_search(train, sub, "matern4", GridSpec(n_eps=1, n_delta=1))
        assert res.best_eps == 20.0
        assert res.best_delta == sub.delta_min
        assert res.evaluations == 1
        direct = loocv_criterion(train, 20.0, sub.delta_min, sub, "matern4")
        assert res.best_score == direct

    def test_flat_zero_surface_tie_break(self):
        ps = generate_uniform_points(60, 2, seed=10)
        train = PointSet(ps.points, np.zeros(60))
        sub = make_subdomain(train, np.array([0.5, 0.5]))
        grid = GridSpec(n_eps=4, n_delta=3)
        res = grid_search(train, sub, "gaussian", grid)
        assert res.best_score == 0.0
        # every score ties at zero: smallest eps, then smallest delta wins
        assert res.best_eps == pytest.approx(20.0 / 4)
        assert res.best_delta == sub.delta_min

    def test_matches_exhaustive_recomputation(self):
        ps = generate_uniform_points(75, 2, seed=11)
        rng = np.random.default_rng(3)
        train = PointSet(ps.points, rng.normal(size=75))
        sub = make_subdomain(train, np.array([0.45, 0.55]), n_min=12)
        grid = GridSpec(n_eps=5, n_delta=3)
        res = grid_search(train, sub, "gaussian", grid)

        box = SearchBox(sub.delta_min)
        best = (np.inf, None, None)
        for eps in grid.eps_values(box):
            for delta in grid.delta_values(box):
                score = loocv_criterion(train, float(eps), float(delta), sub, "gaussian")
                if score < best[0]:
                    best = (score, float(eps), float(delta))
        assert res.best_eps == best[1]
        assert res.best_delta == best[2]
        assert abs(res.best_score - best[0]) <= 1e-12
        assert res.evaluations == 15

    def test_result_inside_box_and_score_is_minimum(self):
        for seed in range(4):
            ps = generate_uniform_points(60, 2, seed=20 + seed)
            rng = np.random.default_rng(seed)
            train = PointSet(ps.points, rng.normal(size=60))
            sub = make_subdomain(train, rng.random(2) * 0.4 + 0.3)
            grid = GridSpec(n_eps=6, n_delta=3)
            res = grid_search(train, sub, "matern4", grid)
            box = SearchBox(sub.delta_min)
            assert box.contains(res.best_eps, res.best_delta)
            for eps in grid.eps_values(box):
                for delta in grid.delta_values(box):
                    score = loocv_criterion(
                        train, float(eps), float(delta), sub, "matern4"
                    )
                    assert res.best_score <= score + 1e-15

    def test_best_score_reproducible_at_returned_pair(self):
        ps = generate_uniform_points(70, 2, seed=30)
        values = np.exp(ps.points[:, 0]) * np.sin(3 * ps.points[:, 1])
        train = PointSet(ps.points, values)
        sub = make_subdomain(train, np.array([0.6, 0.4]))
        res = grid_search(train, sub, "gaussian", GridSpec(n_eps=8, n_delta=4))
        again = loocv_criterion(train, res.best_eps, res.best_delta, sub, "gaussian")
        assert abs(res.best_score - again) <= 1e-12
