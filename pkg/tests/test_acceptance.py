"""Acceptance suite: one test per criterion, at the stated tolerances.

Each test prints a single machine-readable pass line once its assertions
hold; run with `pytest tests/test_acceptance.py -v` to get one verdict line
per criterion.
"""

import json
import time

import numpy as np
import pytest

from fracpq.cli import main as cli_main
from fracpq.domain import FracParams, WeightField, build_grid, build_kernel
from fracpq.eigensolver import (
    SolverOptions,
    check_min_formula,
    principal_single,
    rn_principal,
    simplicity_probe,
)
from fracpq.energy import (
    evaluate_energies,
    evaluate_I,
    grad_I,
    grad_J,
    seminorm_pow,
    weighted_power_integral,
)
from fracpq.mountainpass import (
    KIND_MINIMIZER,
    KIND_TRIVIAL,
    estimate_geometry,
    find_descent_endpoint,
    minimize_J,
    mountain_pass,
    multistart_minimize,
)
from fracpq.oracle import dense_linear_eig, fd_gradient, inequality_suite, quadratic_saddle
from fracpq.problem import build_problem, weight_profile


def report(criterion: int, detail: str) -> None:
    print(f"criterion {criterion:02d}: PASS [{detail}]")


def test_criterion_01_min_formula():
    start = time.perf_counter()
    grid = build_grid(0.0, 1.0, 64)
    params = FracParams(alpha=0.3, beta=0.5, p=3.0, q=2.0)
    a = weight_profile("one", grid)
    b = weight_profile("indefinite", grid)
    assert np.any(b < 0.0) and np.any(b > 0.0)
    prob = build_problem(grid, params, a, b)
    rep = check_min_formula(prob)
    smaller = min(rep.lambda_1p, rep.lambda_1q)
    rel_gap = abs(rep.lambda_star - smaller) / smaller
    elapsed = time.perf_counter() - start
    assert rel_gap <= 1e-3
    assert elapsed < 30.0
    report(1, f"rel gap {rel_gap:.2e}, {elapsed:.1f}s")


def test_criterion_02_linear_oracle_agreement():
    grid = build_grid(0.0, 1.0, 64)
    kern = build_kernel(grid, 0.4, 2.0)
    one = WeightField(np.ones(64))
    res = principal_single(kern, one)
    vals, vecs = dense_linear_eig(kern, kern, one, one)
    # alpha = beta and a = b = 1: (2A) x = lam (2 h I) x, the factors cancel
    lam_dense = vals[0]
    rel = abs(res.lam - lam_dense) / lam_dense
    mode = np.abs(vecs[:, 0])
    cosine = float(np.dot(res.u, mode)) / (np.linalg.norm(res.u) * np.linalg.norm(mode))
    assert rel <= 1e-6
    assert cosine >= 1.0 - 1e-6
    report(2, f"eigenvalue rel {rel:.2e}, cosine 1-{1 - cosine:.2e}")


def _fd_check(grad_fn, energy_fn, point, tol=1e-5):
    g = grad_fn(point)
    fd = fd_gradient(energy_fn, point, 1e-6)
    return float(np.max(np.abs(g - fd)) / np.max(np.abs(fd)))


def _smooth_points(rng, count, n, floor=0.25, gap=0.08):
    out = []
    while len(out) < count:
        u = rng.standard_normal(n) * 0.8
        u = np.where(np.abs(u) < floor, floor * np.where(u >= 0.0, 1.0, -1.0), u)
        if np.min(np.abs(np.diff(u))) > gap:
            out.append(u)
    return out


def test_criterion_03_gradient_correctness():
    rng = np.random.default_rng(7)
    grid = build_grid(0.0, 1.0, 12)
    worst = 0.0
    # branch p, q >= 2
    params = FracParams(alpha=0.3, beta=0.4, p=3.0, q=2.0)
    prob = build_problem(grid, params, weight_profile("one", grid), weight_profile("indefinite", grid))
    for u in _smooth_points(rng, 50, 12):
        err = _fd_check(
            lambda v: grad_J(v, prob.a, prob.b, prob.kern_p, prob.kern_q, 1.3),
            lambda v: evaluate_energies(v, prob.a, prob.b, prob.kern_p, prob.kern_q, 1.3).J,
            u,
        )
        worst = max(worst, err)
    wgrid = build_grid(-1.0, 1.0, 12)
    wparams = FracParams(alpha=0.3, beta=0.4, p=2.5, q=2.0, regime="whole_space")
    wprob = build_problem(wgrid, wparams, np.exp(-wgrid.nodes ** 2))
    for u in _smooth_points(rng, 50, 12):
        err = _fd_check(
            lambda v: grad_I(v, wprob.a, wprob.kern_p, wprob.kern_q, 2.1),
            lambda v: evaluate_I(v, wprob.a, wprob.kern_p, wprob.kern_q, 2.1),
            u,
        )
        worst = max(worst, err)
    assert worst <= 1e-5
    # branch 1 < q < 2, away from the nonsmooth loci
    params_low = FracParams(alpha=0.3, beta=0.4, p=2.5, q=1.5)
    prob_low = build_problem(
        grid, params_low, weight_profile("one", grid), weight_profile("bump", grid)
    )
    worst_low = 0.0
    for u in _smooth_points(rng, 100, 12):
        err = _fd_check(
            lambda v: grad_J(v, prob_low.a, prob_low.b, prob_low.kern_p, prob_low.kern_q, 0.9),
            lambda v: evaluate_energies(
                v, prob_low.a, prob_low.b, prob_low.kern_p, prob_low.kern_q, 0.9
            ).J,
            u,
        )
        worst_low = max(worst_low, err)
    assert worst_low <= 1e-5
    report(3, f"worst rel err {max(worst, worst_low):.2e} over 200 points")


def test_criterion_04_simplicity():
    grid = build_grid(0.0, 1.0, 48)
    params = FracParams(alpha=0.3, beta=0.4, p=3.0, q=2.0)
    one = weight_profile("one", grid)
    prob = build_problem(grid, params, one, 2.0 * one)
    rep = simplicity_probe(prob, n_starts=10, opts=SolverOptions(seed=11))
    assert rep.max_deviation <= 1e-4
    for res in rep.results:
        assert np.all(res.direction >= 0.0)
        assert np.all(res.u >= 0.0)
    report(4, f"max aligned deviation {rep.max_deviation:.2e} over 10 starts")


def _threshold_fixture(n=48, b_scale=4.0):
    grid = build_grid(0.0, 1.0, n)
    params = FracParams(alpha=0.3, beta=0.4, p=3.0, q=2.0)
    one = weight_profile("one", grid)
    prob = build_problem(grid, params, one, b_scale * one)
    return prob, check_min_formula(prob)


def test_criterion_05_nonexistence_below_threshold():
    prob, rep = _threshold_fixture()
    lam = 0.9 * rep.lambda_star
    runs = multistart_minimize(prob, lam, starts=20, opts=SolverOptions(seed=13))
    worst_norm = 0.0
    min_level = np.inf
    for cp in runs:
        assert cp.kind == KIND_TRIVIAL
        assert cp.converged
        worst_norm = max(worst_norm, float(np.max(np.abs(cp.u))))
        min_level = min(min_level, cp.level, float(np.min(cp.history)))
    # starts have unit sup norm, so the bound is relative to each start
    assert worst_norm <= 1e-6
    assert min_level >= -1e-10
    report(5, f"20 trivial endings, worst norm {worst_norm:.1e}, min J {min_level:.1e}")


def test_criterion_06_existence_minimizer_branch():
    prob, rep = _threshold_fixture()
    assert rep.lambda_1q < rep.lambda_1p
    lam = 1.1 * rep.lambda_star
    assert lam < rep.lambda_1p
    cp = minimize_J(prob, lam, starts=8, opts=SolverOptions(seed=17))
    assert cp.kind == KIND_MINIMIZER and cp.converged
    assert cp.level < 0.0
    assert cp.residual <= 1e-6
    assert np.all(cp.u >= 0.0)
    report(6, f"level {cp.level:.3e}, residual {cp.residual:.1e}")


def test_criterion_07_mountain_pass_branch():
    # nonlinear branch: lambda_1p < lambda < lambda_1q
    prob, rep = _threshold_fixture(n=32, b_scale=0.25)
    assert rep.lambda_1p < rep.lambda_1q
    lam = float(np.sqrt(rep.lambda_1p * rep.lambda_1q))
    geo = estimate_geometry(prob, lam, samples=64, seed=3)
    assert geo.delta > 0.0
    endpoint = find_descent_endpoint(prob, lam, rep.result_p.direction, rho=geo.rho)
    cp = mountain_pass(prob, lam, endpoint, tol_mp=1e-4)
    assert cp.converged
    assert cp.residual <= 1e-4
    assert cp.level >= geo.delta - 1e-8

    # quadratic control: the saddle level matches the dense pencil analysis
    grid = build_grid(0.0, 1.0, 32)
    params2 = FracParams(alpha=0.4, beta=0.4, p=2.0, q=2.0)
    one = weight_profile("one", grid)
    prob2 = build_problem(grid, params2, one, one)
    vals, vecs = dense_linear_eig(prob2.kern_p, prob2.kern_q, prob2.a, prob2.b)
    lam2 = 0.5 * (vals[0] + vals[1])
    oracle = quadratic_saddle(prob2.kern_p, prob2.kern_q, prob2.a, prob2.b, lam2)
    e2 = find_descent_endpoint(prob2, lam2, np.abs(vecs[:, 0]))
    cp2 = mountain_pass(prob2, lam2, e2)
    assert cp2.converged and cp2.residual <= 1e-6
    assert abs(cp2.level - oracle["level"]) <= 1e-4 * max(1.0, abs(oracle["level"]))
    report(
        7,
        f"nonlinear c {cp.level:.4f} >= delta {geo.delta:.4f}, residual {cp.residual:.1e}; "
        f"quadratic |c - oracle| {abs(cp2.level - oracle['level']):.1e}",
    )


def test_criterion_08_inequality_suites():
    for name in ("hidden_convexity", "modulus_contraction", "holder_interpolation"):
        rep = inequality_suite(name, 100_000, rng_seed=21)
        assert rep.violations == 0, name
        assert rep.worst_slack >= -1e-12
    constants = {}
    for name, p in (("vec_p_ge_2", 4.0), ("vec_p_le_2", 1.5)):
        r1 = inequality_suite(name, 100_000, rng_seed=23, p=p)
        r2 = inequality_suite(name, 200_000, rng_seed=23, p=p)
        assert np.isfinite(r1.estimated_constant) and np.isfinite(r2.estimated_constant)
        drift = abs(r2.estimated_constant - r1.estimated_constant) / r1.estimated_constant
        assert drift <= 0.05
        constants[name] = (r1.estimated_constant, drift)
    report(8, f"zero violations at 1e5 samples; constants {constants}")


def test_criterion_09_quotient_invariances():
    rng = np.random.default_rng(29)
    grid = build_grid(0.0, 1.0, 32)
    kern = build_kernel(grid, 0.3, 2.5)
    w = WeightField(np.ones(32))
    u = rng.standard_normal(32)
    base = seminorm_pow(u, kern) / weighted_power_integral(u, w, 2.5, kern.h)
    for t in (-3.0, 0.01, 10.0):
        value = seminorm_pow(t * u, kern) / weighted_power_integral(t * u, w, 2.5, kern.h)
        assert value == pytest.approx(base, rel=1e-12)
    for r in (1.5, 2.0, 3.0):
        kern_r = build_kernel(grid, 0.3, r)
        s = seminorm_pow(u, kern_r)
        for t in (-3.0, 0.01, 10.0):
            assert seminorm_pow(t * u, kern_r) == pytest.approx(abs(t) ** r * s, rel=1e-12)
    report(9, "scale invariance and r-homogeneity at 1e-12")


def test_criterion_10_whole_space_truncation():
    params = FracParams(alpha=0.05, beta=0.4, p=2.5, q=2.0, regime="whole_space")
    assert 1.0 < params.q < params.p < params.q_beta_star
    gen = lambda x: np.exp(-((x / 0.5) ** 2))
    results = rn_principal(params, [1.0, 2.0, 4.0, 8.0], a_generator=gen, n_per_unit=12)
    lams = [r.lam for r in results]
    for a, b in zip(lams, lams[1:]):
        assert b <= a * (1.0 + 1e-9)
    cauchy = abs(lams[3] - lams[2]) / lams[2]
    assert cauchy <= 1e-2

    grid = build_grid(-4.0, 4.0, 96)
    prob = build_problem(grid, params, gen(grid.nodes))
    lam1 = lams[-1]
    direction = results[2].direction
    residuals = []
    for factor in (1.1, 1.3, 1.6, 2.0, 3.0):
        lam = factor * lam1
        endpoint = find_descent_endpoint(prob, lam, direction)
        cp = mountain_pass(prob, lam, endpoint, tol_mp=1e-4)
        assert cp.converged
        assert cp.residual <= 1e-4
        assert float(np.max(np.abs(cp.u))) > 1e-6
        residuals.append(cp.residual)
    report(
        10,
        f"lambda(R) {['%.4f' % l for l in lams]}, cauchy {cauchy:.2e}, "
        f"family worst residual {max(residuals):.1e}",
    )


def test_criterion_11_determinism(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text(
        "[domain]\nn = 32\n\n[solver]\nseed = 5\n\n[run]\ndeterministic = true\n"
    )
    assert cli_main(["eig", str(ini), "--output.dir=" + str(tmp_path / "a")]) == 0
    assert cli_main(["eig", str(ini), "--output.dir=" + str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "threshold.json").read_bytes()
    b = (tmp_path / "b" / "threshold.json").read_bytes()
    assert a == b
    payload = json.loads(a)
    assert payload["seed"] == 5
    report(11, "byte-identical threshold.json across reruns")
