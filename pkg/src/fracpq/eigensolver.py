"""Principal eigenvalues by Rayleigh-quotient minimization.

Three quotients are minimized here, all by monotone projected gradient
descent with an Armijo-style backtracking line search and a modulus
projection of every iterate:

* the single-operator quotient  S_r(u) / (h sum w |u|^r),
* the combined bounded-domain quotient  Phi(u) / Psi(u),
* the truncated whole-space quotient  (S_p + (p/q) S_q) / (h sum a |u|^p).

The two combined quotients are not scale-invariant for p > q, so iterates
are stored factored as (unit-sup direction v, log-scale theta).  Along each
ray t -> R(t v) the quotient is a monotone Moebius function of t^(p-q), so
the optimal scale jumps to a feasibility or cap boundary in closed form and
every stored number stays O(1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .concurrency import map_indexed
from .domain import WHOLE_SPACE, FloatArray, FracParams, KernelMatrix, WeightField, build_grid
from .energy import GridFunction, signed_power
from .errors import (
    InfeasibleWeightError,
    MinFormulaError,
    MonotonicityError,
    ParameterError,
    RegimeError,
)
from .problem import Problem, build_problem, decay_weight

_TINY = 1e-300


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and budgets shared by the quotient solvers."""

    tol_quotient: float = 1e-10
    tol_residual: float = 1e-6
    max_iter: int = 50_000
    seed: int = 0
    n_starts: int = 8
    tol_formula: float = 1e-3
    tie_tol: float = 1e-6
    ray_log_threshold: float = math.log(1e4)


DEFAULT_OPTIONS = SolverOptions()


@dataclass
class EigResult:
    """Outcome of one quotient minimization.

    ``lam`` is the quotient evaluated at the returned iterate ``u``;
    ``history`` is the non-increasing sequence of accepted quotient values.
    ``direction`` is the sup-normalized nonnegative profile of ``u`` and
    ``ray_escape`` flags that the iterate scale grew or shrank by more than
    the configured threshold while the quotient was still improving.
    """

    lam: float
    u: GridFunction
    residual: float
    iterations: int
    converged: bool
    history: FloatArray
    ray_escape: bool = False
    direction: GridFunction | None = None


@dataclass(frozen=True)
class ThresholdReport:
    """The two single-operator eigenvalues, the combined threshold, their gap."""

    lambda_star: float
    lambda_1p: float
    lambda_1q: float
    min_gap: float
    argmin_side: str
    result_p: EigResult
    result_q: EigResult
    result_star: EigResult


# ---------------------------------------------------------------------------
# fused kernel sums


def _power_sums(u: FloatArray, kern: KernelMatrix) -> tuple[float, FloatArray]:
    """Seminorm power and its gradient in one pass over the pair matrix."""
    d = u[:, None] - u[None, :]
    ad = np.abs(d)
    ad_r1 = ad ** (kern.r - 1.0)
    num = float(np.sum(kern.K * (ad_r1 * ad)))
    au = np.abs(u)
    au_r1 = au ** (kern.r - 1.0)
    num += 2.0 * kern.h * float(np.dot(kern.tail, au_r1 * au))
    grad = 2.0 * np.sum(kern.K * (ad_r1 * np.sign(d)), axis=1)
    grad += 2.0 * kern.h * kern.tail * (au_r1 * np.sign(u))
    return num, grad


def _seminorm_only(u: FloatArray, kern: KernelMatrix) -> float:
    d = np.abs(u[:, None] - u[None, :])
    num = float(np.sum(kern.K * d ** kern.r))
    num += 2.0 * kern.h * float(np.dot(kern.tail, np.abs(u) ** kern.r))
    return num


# ---------------------------------------------------------------------------
# single-operator principal eigenvalue


def _surrogate_mode(kern: KernelMatrix, w: FloatArray) -> FloatArray | None:
    """Lowest mode of the quadratic surrogate (same pair weights, r = 2)."""
    if np.any(w <= 0.0) or not np.all(np.isfinite(w)):
        return None
    row = kern.K.sum(axis=1)
    A = 2.0 * (np.diag(row) - kern.K) + 2.0 * np.diag(kern.h * kern.tail)
    try:
        _, vecs = scipy.linalg.eigh(A, np.diag(kern.h * w), subset_by_index=(0, 0))
    except scipy.linalg.LinAlgError:
        return None
    return np.abs(vecs[:, 0])


def _initial_single(kern: KernelMatrix, w: WeightField) -> FloatArray:
    candidates = []
    mode = _surrogate_mode(kern, w.values)
    if mode is not None:
        candidates.append(mode)
    candidates.append(np.ones(kern.n))
    candidates.append(np.maximum(w.values, 0.0))
    for u in candidates:
        den = kern.h * float(np.dot(w.values, np.abs(u) ** kern.r))
        if den > 0.0 and np.max(np.abs(u)) > 0.0:
            return u
    raise InfeasibleWeightError("no starting profile with positive weighted norm")


def principal_single(
    kern: KernelMatrix,
    w: WeightField,
    r: float | None = None,
    opts: SolverOptions = DEFAULT_OPTIONS,
) -> EigResult:
    """Minimize the single-operator quotient over the positive cone.

    The iterate is kept on the manifold h sum w |u|^r = 1, replaced by its
    modulus after every step, and the loop stops once the quotient decrease
    falls below ``tol_quotient`` (relative) and the scale-free residual of
    the eigenequation is at most ``tol_residual``.
    """
    if r is not None and not math.isclose(r, kern.r):
        raise ParameterError(f"exponent {r} does not match kernel exponent {kern.r}")
    r = kern.r
    if not w.has_positive_part:
        raise InfeasibleWeightError("weight has no positive part")
    if w.values.shape != (kern.n,):
        raise ParameterError("weight length does not match kernel size")

    u = _initial_single(kern, w)
    den = kern.h * float(np.dot(w.values, np.abs(u) ** r))
    u = u / den ** (1.0 / r)
    lam, grad = _power_sums(u, kern)
    history = [lam]
    step = 1.0
    converged = False
    residual = math.inf
    last_drop = math.inf
    iterations = 0

    for iterations in range(1, opts.max_iter + 1):
        resid_vec = grad - lam * kern.h * w.values * signed_power(u, r - 1.0)
        residual = float(np.max(np.abs(resid_vec))) / max(1.0, float(np.max(np.abs(u))) ** (r - 1.0))
        if last_drop <= opts.tol_quotient * max(abs(lam), _TINY) and residual <= opts.tol_residual:
            converged = True
            break
        dn = float(np.max(np.abs(resid_vec)))
        if dn == 0.0:
            converged = True
            break
        d = -resid_vec / dn * float(np.max(np.abs(u)))
        gamma = step
        accepted = False
        while gamma >= 1e-14:
            trial = np.abs(u + gamma * d)
            den = kern.h * float(np.dot(w.values, trial ** r))
            if den > 0.0:
                trial = trial / den ** (1.0 / r)
                lam_t = _seminorm_only(trial, kern)
                if lam_t < lam:
                    accepted = True
                    break
            gamma *= 0.5
        if not accepted:
            converged = residual <= opts.tol_residual
            break
        last_drop = lam - lam_t
        u = trial
        lam, grad = _power_sums(u, kern)
        history.append(lam)
        step = min(gamma * 1.5, 8.0)

    return EigResult(
        lam=lam,
        u=u,
        residual=residual,
        iterations=iterations,
        converged=converged,
        history=np.asarray(history),
        direction=u / max(float(np.max(np.abs(u))), _TINY),
    )


# ---------------------------------------------------------------------------
# combined quotients in (direction, log-scale) form


@dataclass(frozen=True)
class _QuotientSpec:
    """Homogeneous quotient (cA S_p + cB S_q) / (cPa psi_a + cPb psi_b)."""

    kern_p: KernelMatrix
    kern_q: KernelMatrix
    a: FloatArray
    b: FloatArray
    p: float
    q: float
    cA: float
    cB: float
    cPa: float
    cPb: float

    def components(self, v: FloatArray) -> tuple[float, float, float, float]:
        A = _seminorm_only(v, self.kern_p)
        B = _seminorm_only(v, self.kern_q)
        pa = self.kern_p.h * float(np.dot(self.a, np.abs(v) ** self.p))
        pb = self.kern_q.h * float(np.dot(self.b, np.abs(v) ** self.q)) if self.cPb else 0.0
        return A, B, pa, pb

    def theta_cap(self) -> float:
        gap = self.p - self.q
        if gap <= 1e-12:
            return 0.0
        return min(34.5 / gap, 230.0 / self.p)

    def value_at(self, comp: tuple[float, float, float, float], theta: float) -> float:
        A, B, pa, pb = comp
        w = math.exp((self.p - self.q) * theta)
        den = w * self.cPa * pa + self.cPb * pb
        if den <= 0.0:
            return math.inf
        return (w * self.cA * A + self.cB * B) / den

    def best_theta(self, comp: tuple[float, float, float, float], theta: float) -> tuple[float, float]:
        """Closed-form scale move: the quotient is Moebius in w = e^((p-q)theta)."""
        cap = self.theta_cap()
        if cap == 0.0:
            return theta, self.value_at(comp, theta)
        candidates = [-cap, cap, theta]
        _, _, pa, pb = comp
        alpha0 = self.cPa * pa
        beta0 = self.cPb * pb
        gap = self.p - self.q
        if alpha0 < 0.0 < beta0:
            w0 = -beta0 / alpha0
            candidates.append(math.log(w0 * 0.5) / gap)
        if beta0 < 0.0 < alpha0:
            w0 = -beta0 / alpha0
            candidates.append(math.log(w0 * 2.0) / gap)
        best_theta, best_val = theta, math.inf
        for cand in candidates:
            cand = min(max(cand, -cap), cap)
            val = self.value_at(comp, cand)
            if val < best_val:
                best_theta, best_val = cand, val
        return best_theta, best_val

    def feasible(self, comp: tuple[float, float, float, float]) -> bool:
        _, _, pa, pb = comp
        return self.cPa * pa > 0.0 or self.cPb * pb > 0.0

    def scaled_residual_parts(
        self, v: FloatArray, R: float
    ) -> tuple[FloatArray, FloatArray]:
        """Gradient pieces G_p, G_q with grad R(u) = e^((p-1)t) G_p + e^((q-1)t) G_q."""
        num_p, grad_p = _power_sums(v, self.kern_p)
        num_q, grad_q = _power_sums(v, self.kern_q)
        G_p = self.p * self.cA * grad_p
        G_p -= R * self.p * self.cPa * self.kern_p.h * self.a * signed_power(v, self.p - 1.0)
        G_q = self.q * self.cB * grad_q
        if self.cPb:
            G_q -= R * self.q * self.cPb * self.kern_q.h * self.b * signed_power(v, self.q - 1.0)
        return G_p, G_q


def _combined_spec(problem: Problem) -> _QuotientSpec:
    """Quotient spec for the problem's regime: Phi/Psi or the family quotient."""
    p, q = problem.params.p, problem.params.q
    if problem.regime == WHOLE_SPACE:
        coefs = (1.0 / p, 1.0 / q, 1.0 / p, 0.0)
    else:
        coefs = (1.0 / p, 1.0 / q, 1.0 / p, 1.0 / q)
    return _QuotientSpec(
        kern_p=problem.kern_p,
        kern_q=problem.kern_q,
        a=problem.a.values,
        b=problem.b.values,
        p=p,
        q=q,
        cA=coefs[0],
        cB=coefs[1],
        cPa=coefs[2],
        cPb=coefs[3],
    )


def _minimize_quotient(
    spec: _QuotientSpec, v0: FloatArray, opts: SolverOptions
) -> EigResult | None:
    """Projected descent with closed-form ray moves; None when v0 infeasible."""
    v = np.abs(np.asarray(v0, dtype=np.float64))
    vmax = float(np.max(v))
    if vmax <= 0.0:
        return None
    v = v / vmax
    comp = spec.components(v)
    if not spec.feasible(comp):
        return None
    theta, R = spec.best_theta(comp, 0.0)
    if not math.isfinite(R):
        return None
    history = [R]
    residual = math.inf
    converged = False
    step = 1.0
    last_drop = math.inf
    iterations = 0
    gap_p = spec.p - 1.0
    gap_q = spec.q - 1.0

    for iterations in range(1, opts.max_iter + 1):
        G_p, G_q = spec.scaled_residual_parts(v, R)
        # Normalize by the iterate's own leading homogeneity: dividing by
        # max(1, |u|^(p-1)) alone would vanish trivially on rays riding to
        # zero scale and stop the solve with an unconverged direction.
        log_m = max(gap_p * theta, gap_q * theta)
        resid_vec = math.exp(gap_p * theta - log_m) * G_p + math.exp(gap_q * theta - log_m) * G_q
        residual = float(np.max(np.abs(resid_vec)))
        if last_drop <= opts.tol_quotient * max(abs(R), _TINY) and residual <= opts.tol_residual:
            converged = True
            break
        dn = float(np.max(np.abs(resid_vec)))
        if dn == 0.0:
            converged = True
            break
        d = -resid_vec / dn
        gamma = step
        accepted = False
        while gamma >= 1e-14:
            trial = np.abs(v + gamma * d)
            tmax = float(np.max(trial))
            if tmax > 0.0:
                trial = trial / tmax
                comp_t = spec.components(trial)
                if spec.feasible(comp_t):
                    theta_t, R_t = spec.best_theta(comp_t, theta)
                    if R_t < R:
                        accepted = True
                        break
            gamma *= 0.5
        if not accepted:
            converged = residual <= opts.tol_residual
            break
        last_drop = R - R_t
        v, comp, theta, R = trial, comp_t, theta_t, R_t
        history.append(R)
        step = min(gamma * 1.5, 4.0)

    scale = math.exp(theta)
    u = scale * v
    # Reported residual follows the official scale-free convention
    # (gradient over max(1, |u|^(p-1))); the solver's internal measure
    # above is at least as strict.
    log_m = max(gap_p * theta, gap_q * theta)
    official = residual * math.exp(log_m - max(0.0, gap_p * theta))
    return EigResult(
        lam=R,
        u=u,
        residual=official,
        iterations=iterations,
        converged=converged,
        history=np.asarray(history),
        ray_escape=abs(theta) > opts.ray_log_threshold,
        direction=v,
    )


def _default_starts(spec: _QuotientSpec, opts: SolverOptions, extra_random: int = 2) -> list[FloatArray]:
    n = spec.kern_p.n

    def clipped(w: FloatArray) -> FloatArray:
        floor = 1e-3 * max(float(np.max(np.abs(w))), 1.0)
        return np.maximum(w, 0.0) + floor

    starts: list[FloatArray] = []
    for kern, w in (
        (spec.kern_p, clipped(spec.a)),
        (spec.kern_q, clipped(spec.b) if spec.cPb else None),
    ):
        if w is None:
            continue
        mode = _surrogate_mode(kern, w)
        if mode is not None:
            starts.append(mode)
    starts.append(np.ones(n))
    rng = np.random.default_rng(opts.seed)
    for _ in range(extra_random):
        starts.append(np.abs(rng.standard_normal(n)))
    return starts


def lambda_star(
    kern_p: KernelMatrix,
    kern_q: KernelMatrix,
    a: WeightField,
    b: WeightField,
    p: float | None = None,
    q: float | None = None,
    opts: SolverOptions = DEFAULT_OPTIONS,
    starts: list[FloatArray] | None = None,
) -> EigResult:
    """Minimize the combined quotient Phi/Psi over directions and scales.

    For p > q the infimum is typically approached only along eigenfunction
    rays; the solver reports the best value found, the endpoint it stopped
    at, and a ray_escape flag when the iterate scale ran away.
    """
    p = kern_p.r if p is None else p
    q = kern_q.r if q is None else q
    if not (math.isclose(p, kern_p.r) and math.isclose(q, kern_q.r)):
        raise ParameterError("exponents (p, q) must match the kernels")
    if not (a.has_positive_part and b.has_positive_part):
        raise InfeasibleWeightError("both weights need a positive part")
    spec = _QuotientSpec(
        kern_p=kern_p, kern_q=kern_q, a=a.values, b=b.values,
        p=p, q=q, cA=1.0 / p, cB=1.0 / q, cPa=1.0 / p, cPb=1.0 / q,
    )
    if starts is None:
        starts = _default_starts(spec, opts)
    results = [r for r in map_indexed(lambda v: _minimize_quotient(spec, v, opts), starts) if r]
    if not results:
        raise InfeasibleWeightError("no start with a positive denominator was found")
    return min(results, key=lambda r: r.lam)


def check_min_formula(problem: Problem, opts: SolverOptions = DEFAULT_OPTIONS) -> ThresholdReport:
    """Solve the two single-operator problems and the combined threshold.

    Raises MinFormulaError when the combined value strays from the smaller
    single-operator eigenvalue by more than ``tol_formula`` (relative).
    """
    jobs = [
        lambda: principal_single(problem.kern_p, problem.a, opts=opts),
        lambda: principal_single(problem.kern_q, problem.b, opts=opts),
        lambda: lambda_star(problem.kern_p, problem.kern_q, problem.a, problem.b, opts=opts),
    ]
    res_p, res_q, res_star = map_indexed(lambda job: job(), jobs)
    smaller = min(res_p.lam, res_q.lam)
    gap = abs(res_star.lam - smaller)
    if abs(res_p.lam - res_q.lam) <= opts.tie_tol * max(smaller, _TINY):
        side = "both"
    else:
        side = "p" if res_p.lam < res_q.lam else "q"
    report = ThresholdReport(
        lambda_star=res_star.lam,
        lambda_1p=res_p.lam,
        lambda_1q=res_q.lam,
        min_gap=gap,
        argmin_side=side,
        result_p=res_p,
        result_q=res_q,
        result_star=res_star,
    )
    if gap > opts.tol_formula * max(smaller, _TINY):
        raise MinFormulaError(
            f"threshold {res_star.lam} vs min eigenvalue {smaller}: relative gap "
            f"{gap / max(smaller, _TINY):.3e} exceeds {opts.tol_formula}"
        )
    return report


def rn_principal(
    params: FracParams,
    radii: list[float],
    a_generator=None,
    n_per_unit: int = 12,
    opts: SolverOptions = DEFAULT_OPTIONS,
) -> list[EigResult]:
    """Whole-space principal eigenvalue via a sweep of truncated intervals.

    Each radius R gets the symmetric interval (-R, R) with n proportional
    to R, and the truncated family quotient is minimized there.  The
    eigenvalue sequence must be non-increasing in R (larger admissible set).
    """
    if params.regime != WHOLE_SPACE:
        raise RegimeError("rn_principal needs whole-space parameters")
    if sorted(radii) != list(radii) or len(radii) == 0:
        raise ParameterError("radii must be a nonempty ascending sequence")
    if a_generator is None:
        a_generator = decay_weight(params)

    def solve_one(radius: float) -> EigResult:
        n = max(4, int(round(n_per_unit * 2 * radius)))
        grid = build_grid(-radius, radius, n)
        prob = build_problem(grid, params, a_generator(grid.nodes))
        spec = _combined_spec(prob)
        starts = _default_starts(spec, opts)
        results = [r for r in (_minimize_quotient(spec, v, opts) for v in starts) if r]
        if not results:
            raise InfeasibleWeightError(f"no feasible start on radius {radius}")
        return min(results, key=lambda r: r.lam)

    results = map_indexed(solve_one, radii)
    for prev, curr in zip(results, results[1:]):
        if curr.lam > prev.lam * (1.0 + 1e-8) + 1e-12:
            raise MonotonicityError(
                f"eigenvalue increased under domain inflation: {prev.lam} -> {curr.lam}"
            )
    return results


@dataclass(frozen=True)
class SimplicityReport:
    """Multistart probe of the one-dimensionality of the principal eigenspace."""

    n_starts: int
    max_deviation: float
    is_simple: bool
    tol: float
    results: list[EigResult] = field(repr=False)


def aligned_deviation(u: FloatArray, v: FloatArray) -> float:
    """Relative l2 distance of u from the best scalar multiple of v."""
    c = float(np.dot(u, v)) / max(float(np.dot(v, v)), _TINY)
    return float(np.linalg.norm(u - c * v)) / max(float(np.linalg.norm(u)), _TINY)


def simplicity_probe(
    problem: Problem,
    n_starts: int | None = None,
    opts: SolverOptions = DEFAULT_OPTIONS,
    tol: float = 1e-4,
) -> SimplicityReport:
    """Run the combined minimization from random nonnegative starts.

    All runs should land on proportional nonnegative profiles; the report
    carries the worst pairwise deviation after optimal scalar alignment.
    """
    if n_starts is None:
        n_starts = opts.n_starts
    if n_starts < 2:
        raise ParameterError("the probe needs at least two starts")
    spec = _combined_spec(problem)
    rng = np.random.default_rng(opts.seed)
    starts = [np.abs(rng.standard_normal(problem.grid.n)) for _ in range(n_starts)]
    results = map_indexed(lambda v: _minimize_quotient(spec, v, opts), starts)
    kept = [r for r in results if r is not None]
    if len(kept) < 2:
        raise InfeasibleWeightError("fewer than two feasible starts")
    worst = 0.0
    for i in range(len(kept)):
        for j in range(i + 1, len(kept)):
            worst = max(worst, aligned_deviation(kept[i].direction, kept[j].direction))
    return SimplicityReport(
        n_starts=len(kept),
        max_deviation=worst,
        is_simple=worst <= tol,
        tol=tol,
        results=kept,
    )


def combined_quotient_result(problem: Problem, opts: SolverOptions = DEFAULT_OPTIONS) -> EigResult:
    """Best combined-quotient minimization for the problem's regime."""
    spec = _combined_spec(problem)
    starts = _default_starts(spec, opts)
    results = [r for r in map_indexed(lambda v: _minimize_quotient(spec, v, opts), starts) if r]
    if not results:
        raise InfeasibleWeightError("no start with a positive denominator was found")
    return min(results, key=lambda r: r.lam)
