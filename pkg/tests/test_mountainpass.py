import numpy as np
import pytest

from fracpq.domain import FracParams, build_grid
from fracpq.eigensolver import SolverOptions, check_min_formula
from fracpq.errors import NoDescentDirectionError, ParameterError
from fracpq.mountainpass import (
    KIND_MINIMIZER,
    KIND_MOUNTAIN_PASS,
    KIND_TRIVIAL,
    estimate_geometry,
    find_descent_endpoint,
    minimize_J,
    mountain_pass,
    multistart_minimize,
    nonexistence_certificate,
    sweep_lambda,
)
from fracpq.oracle import dense_linear_eig, quadratic_saddle
from fracpq.problem import build_problem, weight_profile


@pytest.fixture(scope="module")
def minimizer_setup():
    """lambda_1q below lambda_1p: the coercive minimizer branch is active."""
    g = build_grid(0.0, 1.0, 24)
    params = FracParams(alpha=0.3, beta=0.4, p=3.0, q=2.0)
    one = weight_profile("one", g)
    prob = build_problem(g, params, one, 4.0 * one)
    return prob, check_min_formula(prob)


@pytest.fixture(scope="module")
def mp_setup():
    """lambda_1p below lambda_1q: the mountain-pass branch is active."""
    g = build_grid(0.0, 1.0, 24)
    params = FracParams(alpha=0.3, beta=0.4, p=3.0, q=2.0)
    one = weight_profile("one", g)
    prob = build_problem(g, params, one, 0.25 * one)
    return prob, check_min_formula(prob)


class TestGeometry:
    def test_lambda_zero_gives_positive_delta(self, bounded_problem32):
        geo = estimate_geometry(bounded_problem32, 0.0, samples=24, seed=1)
        assert geo.delta > 0.0
        assert np.all(geo.deltas > 0.0)

    def test_huge_lambda_collapses_geometry(self, bounded_problem32):
        geo = estimate_geometry(bounded_problem32, 1e6, samples=24, seed=1)
        assert geo.delta < 0.0
        assert np.all(geo.deltas < 0.0)

    def test_doubling_samples_never_raises_delta(self, bounded_problem32):
        geo1 = estimate_geometry(bounded_problem32, 3.0, samples=16, seed=4, refine_iters=0)
        geo2 = estimate_geometry(bounded_problem32, 3.0, samples=32, seed=4, refine_iters=0)
        assert np.all(geo2.deltas <= geo1.deltas + 1e-15)

    def test_rejects_negative_lambda(self, bounded_problem32):
        with pytest.raises(ParameterError):
            estimate_geometry(bounded_problem32, -1.0)


class TestMinimizeJ:
    def test_below_threshold_only_trivial(self, minimizer_setup):
        prob, rep = minimizer_setup
        lam = 0.9 * rep.lambda_star
        runs = multistart_minimize(prob, lam, starts=8, opts=SolverOptions(seed=3))
        assert all(cp.kind == KIND_TRIVIAL for cp in runs)
        assert all(float(np.max(np.abs(cp.u))) <= 1e-6 for cp in runs)
        assert min(cp.level for cp in runs) >= -1e-10
        assert min(float(h.min()) for h in (cp.history for cp in runs)) >= -1e-10

    def test_above_threshold_negative_minimum(self, minimizer_setup):
        prob, rep = minimizer_setup
        lam = 1.1 * rep.lambda_star
        assert lam < rep.lambda_1p
        cp = minimize_J(prob, lam, starts=6, opts=SolverOptions(seed=5))
        assert cp.kind == KIND_MINIMIZER and cp.converged
        assert cp.level < 0.0
        assert cp.residual <= 1e-6
        assert np.all(cp.u >= 0.0)
        assert cp.neighbor_certified
        assert np.all(np.diff(cp.history) <= 0.0)

    def test_start_at_zero_stays_trivial(self, minimizer_setup):
        prob, rep = minimizer_setup
        cp = minimize_J(prob, 1.1 * rep.lambda_star, starts=[np.zeros(prob.grid.n)])
        assert cp.kind == KIND_TRIVIAL and cp.level == 0.0

    def test_certificate_contradicts_nothing_below_threshold(self, minimizer_setup):
        prob, rep = minimizer_setup
        lam = 0.85 * rep.lambda_star
        runs = multistart_minimize(prob, lam, starts=6, opts=SolverOptions(seed=9))
        for cp in runs:
            if cp.kind != KIND_TRIVIAL and cp.residual <= 1e-6:
                assert nonexistence_certificate(prob, cp) >= rep.lambda_star * (1 - 1e-3)


class TestDescentEndpoint:
    def test_error_below_threshold(self, minimizer_setup):
        prob, rep = minimizer_setup
        with pytest.raises(NoDescentDirectionError):
            find_descent_endpoint(prob, 0.9 * rep.lambda_star, rep.result_q.direction)

    def test_small_scale_dip_along_q_eigenfunction(self, minimizer_setup):
        prob, rep = minimizer_setup
        lam = 0.5 * (rep.lambda_1q + min(rep.lambda_1p, 2.0 * rep.lambda_1q))
        assert rep.lambda_1q < lam < rep.lambda_1p
        e = find_descent_endpoint(prob, lam, rep.result_q.direction)
        assert prob.energy(e, lam) < 0.0

    def test_postcondition_always_negative(self, mp_setup):
        prob, rep = mp_setup
        lam = float(np.sqrt(rep.lambda_1p * rep.lambda_1q))
        e = find_descent_endpoint(prob, lam, rep.result_p.direction)
        assert prob.energy(e, lam) < 0.0

    def test_norm_constraint(self, mp_setup):
        prob, rep = mp_setup
        lam = float(np.sqrt(rep.lambda_1p * rep.lambda_1q))
        from fracpq.energy import seminorm_pow

        e = find_descent_endpoint(prob, lam, rep.result_p.direction, rho=0.5)
        assert seminorm_pow(e, prob.kern_p) ** (1.0 / 3.0) > 0.5


class TestMountainPass:
    def test_quadratic_control_matches_oracle(self, unit_grid32):
        params = FracParams(alpha=0.4, beta=0.4, p=2.0, q=2.0)
        one = weight_profile("one", unit_grid32)
        prob = build_problem(unit_grid32, params, one, one)
        vals, vecs = dense_linear_eig(prob.kern_p, prob.kern_q, prob.a, prob.b)
        lam = 0.5 * (vals[0] + vals[1])
        oracle = quadratic_saddle(prob.kern_p, prob.kern_q, prob.a, prob.b, lam)
        e = find_descent_endpoint(prob, lam, np.abs(vecs[:, 0]))
        cp = mountain_pass(prob, lam, e)
        assert cp.converged
        assert cp.residual <= 1e-6
        assert abs(cp.level - oracle["level"]) <= 1e-4 * max(1.0, abs(oracle["level"]))

    def test_nonlinear_saddle(self, mp_setup):
        prob, rep = mp_setup
        lam = float(np.sqrt(rep.lambda_1p * rep.lambda_1q))
        geo = estimate_geometry(prob, lam, samples=48, seed=3)
        assert geo.delta > 0.0
        e = find_descent_endpoint(prob, lam, rep.result_p.direction, rho=geo.rho)
        cp = mountain_pass(prob, lam, e, tol_mp=1e-6)
        assert cp.converged and cp.kind == KIND_MOUNTAIN_PASS
        assert cp.residual <= 1e-6
        assert cp.level >= geo.delta - 1e-8
        assert np.all(np.diff(cp.history) <= 1e-12)
        assert np.all(cp.u >= 0.0)

    def test_deterministic_and_orientation_free(self, mp_setup):
        prob, rep = mp_setup
        lam = float(np.sqrt(rep.lambda_1p * rep.lambda_1q))
        e = find_descent_endpoint(prob, lam, rep.result_p.direction)
        cp1 = mountain_pass(prob, lam, e)
        cp2 = mountain_pass(prob, lam, e)
        assert cp1.level == cp2.level
        # the path level profile is orientation-free: flipping the point
        # order leaves the maximum unchanged
        levels = cp1.path.levels
        assert float(np.max(levels)) == float(np.max(levels[::-1]))

    def test_rejects_nonnegative_endpoint_level(self, mp_setup):
        prob, rep = mp_setup
        lam = 0.5 * rep.lambda_star
        with pytest.raises(ParameterError):
            mountain_pass(prob, lam, rep.result_p.direction)


class TestSweep:
    def test_empty_grid(self, minimizer_setup):
        prob, _ = minimizer_setup
        table = sweep_lambda(prob, np.array([]))
        assert table.rows == [] and table.threshold is None

    def test_classification_flips_across_threshold(self, minimizer_setup):
        prob, rep = minimizer_setup
        lam_grid = rep.lambda_star * np.linspace(0.85, 1.15, 9)
        table = sweep_lambda(prob, lam_grid, opts=SolverOptions(seed=7), starts=3)
        classes = [row.classification for row in table.rows]
        order = {"no_nontrivial": 0, "threshold_degenerate": 1, "exists_positive": 2}
        codes = [order[c] for c in classes]
        assert codes == sorted(codes)
        assert codes[0] == 0 and codes[-1] == 2
        flips = sum(1 for a, b in zip(codes, codes[1:]) if a != b)
        assert flips <= 2
        assert not any(row.anomaly for row in table.rows)
        for row in table.rows:
            if row.classification == "exists_positive":
                assert row.level < 0.0 and row.branch == KIND_MINIMIZER
                assert row.residual <= 1e-6

    def test_mountain_pass_branch_used_when_p_side_smaller(self, mp_setup):
        prob, rep = mp_setup
        lam = float(np.sqrt(rep.lambda_1p * rep.lambda_1q))
        table = sweep_lambda(prob, np.array([lam]), opts=SolverOptions(seed=7), starts=3)
        row = table.rows[0]
        assert row.classification == "exists_positive"
        assert row.branch == KIND_MOUNTAIN_PASS
        assert row.converged and row.residual <= 1e-4
