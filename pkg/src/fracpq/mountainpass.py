"""Existence machinery: coercive minimization, numerical mountain pass, sweeps.

The mountain-pass search deforms a discrete path of m+1 grid functions
joining 0 to a point of negative energy: locate the path maximum, descend
that interior point transversally to the path, respace the points every few
iterations (anchored at the crest so the ridge crossing cannot slip between
samples), and stop once the scale-free gradient norm at the path maximum is
small.  Once the crest is localized, the best point seen is polished by a
guarded root solve of the gradient system.  The path-maximum history is
non-increasing across iterations by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .concurrency import map_indexed
from .domain import FloatArray
from .energy import GridFunction, frac_laplacian_apply, scaled_residual_norm, seminorm_pow
from .errors import NoDescentDirectionError, ParameterError
from .eigensolver import DEFAULT_OPTIONS, SolverOptions, ThresholdReport, check_min_formula
from .problem import Problem, weak_residual

_TINY = 1e-300

KIND_MINIMIZER = "minimizer"
KIND_MOUNTAIN_PASS = "mountain_pass"
KIND_TRIVIAL = "trivial"

CLASS_NO_NONTRIVIAL = "no_nontrivial"
CLASS_THRESHOLD = "threshold_degenerate"
CLASS_EXISTS = "exists_positive"


@dataclass
class CriticalPoint:
    """An approximate critical point of the energy at a fixed lambda."""

    u: GridFunction
    level: float
    residual: float
    kind: str
    lam: float
    converged: bool
    iterations: int
    history: FloatArray | None = None
    neighbor_certified: bool | None = None
    path: "MountainPassPath | None" = None


@dataclass
class MountainPassPath:
    """Discrete path from 0 to the endpoint with its energy profile."""

    points: FloatArray
    levels: FloatArray


@dataclass(frozen=True)
class GeometryEstimate:
    """Sampled ridge geometry on spheres of the leading seminorm metric.

    ``delta`` is the sampled minimum of the energy on the best sphere and
    may be nonpositive, which signals that no ridge was found at this
    lambda.  ``lambda_star_geom`` estimates the largest lambda for which
    the sampled ridge stays positive.
    """

    rho: float
    delta: float
    lambda_star_geom: float
    samples: int
    rho_grid: FloatArray
    deltas: FloatArray


def _informed_directions(problem: Problem) -> list[FloatArray]:
    """Near-optimal sphere competitors: the two quadratic-surrogate modes.

    The energy's sphere minimum is attained along smooth eigenfunction-like
    profiles; seeding the sample with them keeps the sampled ridge height
    from grossly overestimating the true one.
    """
    from .eigensolver import _surrogate_mode

    out: list[FloatArray] = []
    for kern, w in ((problem.kern_p, problem.a.values), (problem.kern_q, problem.b.values)):
        floor = 1e-3 * max(float(np.max(np.abs(w))), 1.0)
        mode = _surrogate_mode(kern, np.maximum(w, 0.0) + floor)
        if mode is not None:
            out.append(mode)
    if len(out) == 2:
        out.append(out[0] / max(float(np.max(out[0])), _TINY) + out[1] / max(float(np.max(out[1])), _TINY))
    out.append(np.ones(problem.grid.n))
    return out


def _ray_coefficients(problem: Problem, direction: FloatArray, lam: float) -> tuple[float, float]:
    """J(t * direction) = c_p t^p + c_q t^q; returns (c_p, c_q)."""
    A, B, pa, pb = problem.components(direction)
    p, q = problem.params.p, problem.params.q
    c_p = A / p - lam * pa / p
    if problem.regime == "whole_space":
        c_q = B / q
    else:
        c_q = B / q - lam * pb / q
    return c_p, c_q


def _sphere_refine(
    problem: Problem, lam: float, rho: float, v0: FloatArray, iters: int = 80
) -> float:
    """Descend the energy on the sphere of p-seminorm radius rho.

    Projected gradient steps in the direction variable with the constraint
    normal removed; returns the lowest level reached.  Tightens the crude
    sampled sphere minimum toward the true one.
    """
    p = problem.params.p
    v = v0 / seminorm_pow(v0, problem.kern_p) ** (1.0 / p)
    best = problem.energy(rho * v, lam)
    step = 0.2
    for _ in range(iters):
        g = rho * problem.gradient(rho * v, lam)
        normal = p * frac_laplacian_apply(v, problem.kern_p)
        nn = float(np.dot(normal, normal))
        if nn > 0.0:
            g = g - (float(np.dot(g, normal)) / nn) * normal
        gn = float(np.max(np.abs(g)))
        if gn == 0.0:
            break
        moved = False
        gamma = step
        while gamma >= 1e-12:
            trial = v - gamma / gn * g * float(np.max(np.abs(v)))
            tnorm = seminorm_pow(trial, problem.kern_p)
            if tnorm > 0.0:
                trial = trial / tnorm ** (1.0 / p)
                level = problem.energy(rho * trial, lam)
                if level < best:
                    v, best = trial, level
                    moved = True
                    break
            gamma *= 0.5
        if not moved:
            break
        step = min(gamma * 1.5, 1.0)
    return best


def estimate_geometry(
    problem: Problem,
    lam: float,
    rho_grid: FloatArray | None = None,
    samples: int = 64,
    seed: int = 0,
    refine_iters: int = 80,
) -> GeometryEstimate:
    """Estimate the ridge height of the energy on seminorm spheres.

    Directions mix eigenfunction-like informed profiles with rough and
    smooth random draws, all normalized to unit p-seminorm; the energy at
    radius rho follows in closed form from each direction's homogeneous
    components.  The few radii with the highest crude minima are refined
    by constrained descent on the sphere, and the radius with the largest
    refined minimum wins.  lambda = 0 is allowed (the sphere minimum is
    then just the smallest sampled Phi).
    """
    if lam < 0.0:
        raise ParameterError("geometry sampling needs lambda >= 0")
    if rho_grid is None:
        rho_grid = np.geomspace(0.02, 5.0, 14)
    rho_grid = np.asarray(rho_grid, dtype=np.float64)
    rng = np.random.default_rng(seed)
    p, q = problem.params.p, problem.params.q
    n = problem.grid.n
    xi = (problem.grid.nodes - problem.grid.lo) / (problem.grid.hi - problem.grid.lo)
    n_modes = min(8, n - 1)
    modes = np.array([np.sin((k + 1) * np.pi * xi) for k in range(n_modes)])
    directions = _informed_directions(problem)
    while len(directions) < samples:
        # Alternate rough white-noise directions with smooth low-frequency
        # combinations; without the informed and smooth competitors a pure
        # white-noise sample grossly overestimates the sphere minimum.
        if len(directions) % 2 == 0:
            directions.append(rng.standard_normal(n))
        else:
            amps = rng.standard_normal(n_modes) / (1.0 + np.arange(n_modes))
            directions.append(amps @ modes)
    directions = directions[:samples]
    count = len(directions)
    coef = np.empty((count, 2))
    phipsi = np.empty((count, 4))
    normalized = []
    for k, v in enumerate(directions):
        v = v / seminorm_pow(v, problem.kern_p) ** (1.0 / p)
        normalized.append(v)
        c_p, c_q = _ray_coefficients(problem, v, lam)
        coef[k] = (c_p, c_q)
        A, B, pa, pb = problem.components(v)
        phipsi[k] = (A, B, pa, pb)
    levels = coef[:, 0][None, :] * rho_grid[:, None] ** p + coef[:, 1][None, :] * rho_grid[:, None] ** q
    deltas = levels.min(axis=1)
    argmins = levels.argmin(axis=1)
    if refine_iters > 0:
        top = np.argsort(deltas)[::-1][: min(4, deltas.size)]
        for idx in top:
            rho_i = float(rho_grid[idx])
            refined = _sphere_refine(
                problem, lam, rho_i, normalized[int(argmins[idx])], iters=refine_iters
            )
            deltas[idx] = min(deltas[idx], refined)
    best = int(np.argmax(deltas))
    rho = float(rho_grid[best])
    A, B, pa, pb = (phipsi[:, i] for i in range(4))
    phi = (rho ** p) * A / p + (rho ** q) * B / q
    if problem.regime == "whole_space":
        psi = (rho ** p) * pa / p
    else:
        psi = (rho ** p) * pa / p + (rho ** q) * pb / q
    with np.errstate(divide="ignore"):
        ratios = np.where(psi > 0.0, phi / np.where(psi > 0.0, psi, 1.0), np.inf)
    lambda_star_geom = float(np.min(ratios)) if np.any(psi > 0.0) else math.inf
    return GeometryEstimate(
        rho=rho,
        delta=float(deltas[best]),
        lambda_star_geom=lambda_star_geom,
        samples=count,
        rho_grid=rho_grid,
        deltas=deltas,
    )


def _certify_local_min(
    problem: Problem, lam: float, u: FloatArray, level: float, seed: int = 1, count: int = 16
) -> bool:
    """Energy at u is no larger than at sampled nearby points."""
    rng = np.random.default_rng(seed)
    radius = 1e-4 * (1.0 + float(np.max(np.abs(u))))
    for _ in range(count):
        pert = rng.standard_normal(u.size)
        pert *= radius / max(float(np.max(np.abs(pert))), _TINY)
        if problem.energy(u + pert, lam) < level - 1e-12 * (1.0 + abs(level)):
            return False
    return True


def _stopping_residual(g: FloatArray, u: FloatArray, p: float, q: float) -> float:
    """Gradient norm scaled by the iterate's own leading magnitude.

    Along a trajectory shrinking to the trivial point the gradient is of
    order ||u||^(q-1), so dividing by that keeps the measure bounded away
    from zero there while it still vanishes at genuine critical points.
    """
    norm = float(np.max(np.abs(u)))
    scale = max(norm ** (p - 1.0), norm ** (q - 1.0), _TINY)
    return float(np.max(np.abs(g))) / scale


def _descend_energy(
    problem: Problem,
    lam: float,
    u0: FloatArray,
    opts: SolverOptions,
    certify: bool = True,
) -> CriticalPoint:
    """Monotone modulus-projected descent on the energy from one start.

    The trial step is the spectral (Barzilai-Borwein) step, backtracked
    until the energy strictly decreases; iterates collapsing below the
    scale-aware zero threshold exit as the trivial point.
    """
    u = np.abs(np.asarray(u0, dtype=np.float64))
    start_norm = float(np.max(np.abs(u)))
    eps_zero = 1e-8 * (1.0 + start_norm)
    norm_cap = 1e8 * (1.0 + start_norm)
    level = problem.energy(u, lam)
    history = [level]
    converged = False
    residual = math.inf
    last_drop = math.inf
    iterations = 0
    p, q = problem.params.p, problem.params.q
    g = problem.gradient(u, lam)
    gamma = 0.1 * max(float(np.max(np.abs(u))), eps_zero) / max(float(np.max(np.abs(g))), _TINY)
    prev_u: FloatArray | None = None
    prev_g: FloatArray | None = None

    for iterations in range(1, opts.max_iter + 1):
        norm = float(np.max(np.abs(u)))
        if norm <= eps_zero:
            u = np.zeros_like(u)
            level = 0.0
            residual = 0.0
            converged = True
            break
        if norm > norm_cap:
            converged = False
            break
        residual = _stopping_residual(g, u, p, q)
        if last_drop <= opts.tol_quotient * max(1.0, abs(level)) and residual <= opts.tol_residual:
            converged = True
            break
        if prev_u is not None:
            du = u - prev_u
            dg = g - prev_g
            curv = float(np.dot(du, dg))
            if curv > 0.0:
                gamma = float(np.dot(du, du)) / curv
            else:
                gamma *= 2.0
        trial_gamma = gamma
        accepted = False
        while trial_gamma >= 1e-18 * gamma + 1e-300:
            trial = np.abs(u - trial_gamma * g)
            level_t = problem.energy(trial, lam)
            if level_t < level:
                accepted = True
                break
            trial_gamma *= 0.5
            if trial_gamma < 1e-14 * max(gamma, 1.0):
                break
        if not accepted:
            converged = residual <= opts.tol_residual
            break
        last_drop = level - level_t
        prev_u, prev_g = u, g
        u, level = trial, level_t
        g = problem.gradient(u, lam)
        history.append(level)
        gamma = trial_gamma

    kind = KIND_TRIVIAL if float(np.max(np.abs(u))) <= eps_zero else KIND_MINIMIZER
    certified = None
    if certify and kind == KIND_MINIMIZER and converged:
        certified = _certify_local_min(problem, lam, u, level)
    return CriticalPoint(
        u=u,
        level=level,
        residual=weak_residual(u, lam, problem),
        kind=kind,
        lam=lam,
        converged=converged,
        iterations=iterations,
        history=np.asarray(history),
        neighbor_certified=certified,
    )


def minimize_J(
    problem: Problem,
    lam: float,
    starts: int | list[FloatArray] = 8,
    opts: SolverOptions = DEFAULT_OPTIONS,
) -> CriticalPoint:
    """Multistart descent on the energy; returns the lowest point found.

    ``starts`` is either a count of random nonnegative starts (unit sup
    norm) or an explicit list of starting profiles.  A run that collapses
    below the scale-aware zero threshold reports kind="trivial".
    """
    if isinstance(starts, int):
        rng = np.random.default_rng(opts.seed)
        profiles = [np.abs(rng.standard_normal(problem.grid.n)) for _ in range(starts)]
        profiles = [v / max(float(np.max(v)), _TINY) for v in profiles]
    else:
        profiles = [np.asarray(v, dtype=np.float64) for v in starts]
    if not profiles:
        raise ParameterError("at least one start is required")
    runs = map_indexed(lambda v: _descend_energy(problem, lam, v, opts), profiles)
    return min(runs, key=lambda cp: cp.level)


def multistart_minimize(
    problem: Problem,
    lam: float,
    starts: int = 8,
    opts: SolverOptions = DEFAULT_OPTIONS,
) -> list[CriticalPoint]:
    """All multistart descent outcomes, ordered by start index."""
    rng = np.random.default_rng(opts.seed)
    profiles = [np.abs(rng.standard_normal(problem.grid.n)) for _ in range(starts)]
    profiles = [v / max(float(np.max(v)), _TINY) for v in profiles]
    return map_indexed(lambda v: _descend_energy(problem, lam, v, opts), profiles)


def find_descent_endpoint(
    problem: Problem,
    lam: float,
    direction: FloatArray,
    rho: float | None = None,
    max_doublings: int = 60,
) -> FloatArray:
    """Scale the direction until the energy is negative (and beyond rho).

    Doubles t upward from 1; if the energy never goes negative there, halves
    t downward, catching the small-t dip that exists whenever lambda exceeds
    the lower eigenvalue only.  Raises NoDescentDirectionError when no scale
    works, which is the signature of lambda at or below the threshold.
    """
    direction = np.asarray(direction, dtype=np.float64)
    if float(np.max(np.abs(direction))) <= 0.0:
        raise ParameterError("direction must be nonzero")
    c_p, c_q = _ray_coefficients(problem, direction, lam)
    p, q = problem.params.p, problem.params.q
    sem_p = seminorm_pow(direction, problem.kern_p)

    def ray_level(t: float) -> float:
        return c_p * t ** p + c_q * t ** q

    def norm_ok(t: float) -> bool:
        if rho is None:
            return True
        return (t ** p * sem_p) ** (1.0 / p) > rho

    t = 1.0
    for _ in range(max_doublings + 1):
        if ray_level(t) < 0.0 and norm_ok(t):
            return t * direction
        t *= 2.0
    t = 0.5
    for _ in range(max_doublings):
        if ray_level(t) < 0.0 and norm_ok(t):
            return t * direction
        t *= 0.5
    raise NoDescentDirectionError(
        "no scaling of the direction reaches a negative level; "
        "lambda appears to be at or below the existence threshold"
    )


def _initial_path(problem: Problem, lam: float, e: FloatArray, m: int) -> FloatArray:
    """Path parameters resolving the analytic ridge of the ray 0 -> e."""
    c_p, c_q = _ray_coefficients(problem, e, lam)
    p, q = problem.params.p, problem.params.q
    if c_p < 0.0 < c_q:
        t_star = (-(q * c_q) / (p * c_p)) ** (1.0 / (p - q)) if p > q else 0.5
        t_star = min(max(t_star, 1e-6), 1.0 - 1e-6)
        low = np.linspace(0.0, t_star, m // 2 + 1)
        high = np.linspace(t_star, 1.0, m - m // 2 + 1)
        ts = np.concatenate([low, high[1:]])
    else:
        ts = np.linspace(0.0, 1.0, m + 1)
    return ts[:, None] * e[None, :]


def _respace(points: FloatArray, anchor: int | None = None) -> FloatArray:
    """Equal-arclength resampling of the polyline, endpoints fixed.

    With an interior anchor index the two sides are resampled separately so
    the crest point survives the respacing exactly.
    """
    if anchor is not None and 0 < anchor < points.shape[0] - 1:
        left = _respace(points[: anchor + 1])
        right = _respace(points[anchor:])
        return np.vstack([left, right[1:]])
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total <= 0.0:
        return points
    targets = np.linspace(0.0, total, points.shape[0])
    out = np.empty_like(points)
    out[0] = points[0]
    out[-1] = points[-1]
    j = 0
    for i in range(1, points.shape[0] - 1):
        s = targets[i]
        while j < seg.size - 1 and cum[j + 1] < s:
            j += 1
        span = max(seg[j], _TINY)
        frac = (s - cum[j]) / span
        out[i] = points[j] + frac * (points[j + 1] - points[j])
    return out


def _crest_refine(
    problem: Problem, lam: float, points: FloatArray, jvals: FloatArray
) -> None:
    """Golden-search the energy maximum along the segments around the crest.

    Moves the crest point onto the 1-d maximum of the polyline near it, so
    a ridge crossing between samples cannot silently drop out of the path
    maximum.  Mutates points and jvals in place.
    """
    k = int(np.argmax(jvals))
    if k <= 0 or k >= points.shape[0] - 1:
        return
    phi = 0.5 * (math.sqrt(5.0) - 1.0)
    for a_pt, b_pt in ((points[k - 1], points[k]), (points[k], points[k + 1])):
        lo, hi = 0.0, 1.0
        f = lambda t: problem.energy(a_pt + t * (b_pt - a_pt), lam)
        t1, t2 = hi - phi * (hi - lo), lo + phi * (hi - lo)
        f1, f2 = f(t1), f(t2)
        for _ in range(24):
            if f1 < f2:
                lo, t1, f1 = t1, t2, f2
                t2 = lo + phi * (hi - lo)
                f2 = f(t2)
            else:
                hi, t2, f2 = t2, t1, f1
                t1 = hi - phi * (hi - lo)
                f1 = f(t1)
        t_best = t1 if f1 >= f2 else t2
        level = f(t_best)
        if level > jvals[k]:
            points[k] = a_pt + t_best * (b_pt - a_pt)
            jvals[k] = level


def _polish_saddle(
    problem: Problem,
    lam: float,
    u0: FloatArray,
    level0: float,
    tol_mp: float,
) -> tuple[FloatArray, float] | None:
    """Root-solve the gradient system from a near-saddle point, guarded.

    The polished point is accepted only when the solve succeeds, stays
    nonnegative, stays close to the path point, and keeps a level of the
    same magnitude; otherwise None and the raw path point stands.
    """
    import scipy.optimize

    try:
        sol = scipy.optimize.root(
            lambda v: problem.gradient(v, lam), u0, method="hybr", tol=1e-13
        )
    except Exception:
        return None
    if not sol.success:
        return None
    u = np.asarray(sol.x, dtype=np.float64)
    if float(np.min(u)) < -1e-10 * max(1.0, float(np.max(np.abs(u)))):
        return None
    u = np.abs(u)
    scale = 1.0 + float(np.max(np.abs(u0)))
    if float(np.max(np.abs(u - u0))) > scale:
        return None
    if float(np.max(np.abs(u))) <= 1e-4 * (1.0 + float(np.max(np.abs(u0)))):
        return None
    residual = weak_residual(u, lam, problem)
    if residual > tol_mp:
        return None
    level = problem.energy(u, lam)
    if level <= 0.0 or abs(level - level0) > abs(level0) + 1.0:
        return None
    return u, residual


def mountain_pass(
    problem: Problem,
    lam: float,
    e: FloatArray,
    m: int = 40,
    opts: SolverOptions = DEFAULT_OPTIONS,
    tol_mp: float = 1e-6,
    max_iter: int = 20_000,
    reparam_every: int = 10,
    polish: bool = True,
) -> CriticalPoint:
    """Path-deformation search for the minimax critical point.

    The endpoint must have negative energy.  Every iteration lowers the
    energy at the path maximum (or stops), so the reported level sequence
    is non-increasing.  Once the deformation has localized the pass (the
    gradient at the path maximum stops shrinking), the best point seen is
    polished by a root solve of the gradient system, guarded so it cannot
    drift to the trivial point or a different basin.
    """
    e = np.asarray(e, dtype=np.float64)
    level_e = problem.energy(e, lam)
    if not level_e < 0.0:
        raise ParameterError(f"endpoint energy must be negative, got {level_e}")
    if m < 4:
        raise ParameterError("need at least 4 path segments")
    p = problem.params.p
    points = _initial_path(problem, lam, e, m)
    jvals = np.array([problem.energy(pt, lam) for pt in points])
    _crest_refine(problem, lam, points, jvals)
    history = [float(np.max(jvals))]
    converged = False
    residual = math.inf
    best_u = points[int(np.argmax(jvals))].copy()
    best_res = math.inf
    best_level = float(np.max(jvals))
    iterations = 0
    polish_threshold = 1e-2

    for iterations in range(1, max_iter + 1):
        k = int(np.argmax(jvals))
        if k == 0:
            # All interior levels sit below the zero endpoint, whose gradient
            # vanishes: the minimax level is 0 at the origin saddle.
            best_u = np.zeros(problem.grid.n)
            residual = 0.0
            converged = True
            history.append(0.0)
            return CriticalPoint(
                u=best_u,
                level=0.0,
                residual=0.0,
                kind=KIND_MOUNTAIN_PASS,
                lam=lam,
                converged=True,
                iterations=iterations,
                history=np.asarray(history),
                path=MountainPassPath(points=points, levels=jvals),
            )
        if k == points.shape[0] - 1:
            k -= 1
        u = points[k]
        g = problem.gradient(u, lam)
        residual = scaled_residual_norm(g, u, p)
        if residual < best_res:
            best_res = residual
            best_u = u.copy()
            best_level = float(jvals[k])
        if residual <= tol_mp:
            converged = True
            break
        tangent = points[k + 1] - points[k - 1]
        tnorm2 = float(np.dot(tangent, tangent))
        if tnorm2 > 0.0:
            d = -(g - (float(np.dot(g, tangent)) / tnorm2) * tangent)
        else:
            d = -g
        moved = False
        for direction in (d, -g):
            dn = float(np.max(np.abs(direction)))
            if dn == 0.0:
                continue
            scale = max(float(np.max(np.abs(u))), float(np.max(np.abs(e))) / m) / dn
            gamma = 0.5
            while gamma >= 1e-13:
                trial = np.abs(u + gamma * scale * direction)
                level_t = problem.energy(trial, lam)
                if level_t < jvals[k]:
                    points[k] = trial
                    jvals[k] = level_t
                    moved = True
                    break
                gamma *= 0.5
            if moved:
                break
        if not moved:
            break
        if iterations % reparam_every == 0:
            candidate = _respace(points, anchor=int(np.argmax(jvals)))
            cand_vals = np.array([problem.energy(pt, lam) for pt in candidate])
            _crest_refine(problem, lam, candidate, cand_vals)
            if float(np.max(cand_vals)) <= float(np.max(jvals)) + 1e-12 * (1.0 + abs(float(np.max(jvals)))):
                points, jvals = candidate, cand_vals
        history.append(float(np.max(jvals)))
        if polish and best_res <= polish_threshold:
            polished = _polish_saddle(problem, lam, best_u, best_level, tol_mp)
            if polished is not None:
                best_u, residual = polished
                converged = True
                break
            # Not localized well enough for the root solve; keep deforming.
            polish_threshold = best_res * 0.3

    if not converged and polish and math.isfinite(best_res):
        polished = _polish_saddle(problem, lam, best_u, best_level, tol_mp)
        if polished is not None:
            best_u, residual = polished
            converged = True
    if not converged:
        residual = weak_residual(best_u, lam, problem)
        converged = residual <= tol_mp
    level = problem.energy(best_u, lam)
    return CriticalPoint(
        u=best_u,
        level=level,
        residual=residual,
        kind=KIND_MOUNTAIN_PASS,
        lam=lam,
        converged=converged,
        iterations=iterations,
        history=np.asarray(history),
        path=MountainPassPath(points=points, levels=jvals),
    )


@dataclass(frozen=True)
class SweepRow:
    """One lambda of the existence sweep."""

    lam: float
    classification: str
    branch: str | None
    level: float
    residual: float
    norm: float
    converged: bool
    anomaly: bool


@dataclass(frozen=True)
class SweepTable:
    """Existence classification across a lambda grid."""

    rows: list[SweepRow]
    threshold: ThresholdReport | None


def nonexistence_certificate(problem: Problem, cp: CriticalPoint, tol: float = 1e-6) -> float:
    """Quotient value of the scaled identity test at a candidate solution.

    A genuine nontrivial solution u satisfies p Phi(s u) = q lam Psi(s u)
    for s^(p-q) = p/q, which forces Phi(su)/Psi(su) >= threshold; below the
    threshold no candidate with a small residual can therefore exist.
    Returns that quotient (inf when it is undefined).
    """
    p, q = problem.params.p, problem.params.q
    s = (p / q) ** (1.0 / (p - q)) if p > q else 1.0
    su = s * cp.u
    A, B, pa, pb = problem.components(su)
    phi = A / p + B / q
    psi = pa / p + pb / q
    if psi <= 0.0:
        return math.inf
    return phi / psi


def sweep_lambda(
    problem: Problem,
    lam_grid: FloatArray,
    opts: SolverOptions = DEFAULT_OPTIONS,
    margin: float = 1e-3,
    starts: int = 5,
) -> SweepTable:
    """Classify every lambda against the computed threshold with evidence.

    Below (1-margin) times the threshold the multistart descent must find
    only the trivial point; above it the branch matching the ordering of
    the two single-operator eigenvalues is run and its critical point is
    recorded.  A lambda within the margin is labeled degenerate.
    """
    lam_grid = np.asarray(lam_grid, dtype=np.float64)
    if lam_grid.size == 0:
        return SweepTable(rows=[], threshold=None)
    thr = check_min_formula(problem, opts)
    lam_star = thr.lambda_star
    rows = []
    for lam in lam_grid:
        lam = float(lam)
        rel = lam / lam_star
        branch = None
        anomaly = False
        if rel < 1.0 - margin:
            classification = CLASS_NO_NONTRIVIAL
            cps = multistart_minimize(problem, lam, starts=starts, opts=opts)
            best = min(cps, key=lambda cp: cp.level)
            for cp in cps:
                if cp.kind != KIND_TRIVIAL and cp.residual <= opts.tol_residual:
                    if nonexistence_certificate(problem, cp) < lam_star * (1.0 - margin):
                        anomaly = True
            level, residual = best.level, best.residual
            norm = float(np.max(np.abs(best.u)))
            converged = all(cp.converged for cp in cps)
        elif rel <= 1.0 + margin:
            classification = CLASS_THRESHOLD
            # At the threshold the descent contracts sublinearly toward the
            # trivial point; a full budget would be burned without meaning.
            capped = replace(opts, max_iter=min(opts.max_iter, 2000))
            best = minimize_J(problem, lam, starts=starts, opts=capped)
            level, residual = best.level, best.residual
            norm = float(np.max(np.abs(best.u)))
            converged = best.converged
        else:
            classification = CLASS_EXISTS
            best = None
            if thr.lambda_1q <= thr.lambda_1p and lam < thr.lambda_1p * (1.0 - margin):
                branch = KIND_MINIMIZER
                best = minimize_J(problem, lam, starts=starts, opts=opts)
            elif thr.lambda_1p < thr.lambda_1q and lam < thr.lambda_1q * (1.0 - margin):
                branch = KIND_MOUNTAIN_PASS
                direction = thr.result_p.direction
                endpoint = find_descent_endpoint(problem, lam, direction)
                best = mountain_pass(problem, lam, endpoint, opts=opts, tol_mp=1e-4)
            else:
                branch = KIND_MINIMIZER
                best = minimize_J(problem, lam, starts=starts, opts=opts)
                if best.kind == KIND_TRIVIAL:
                    branch = KIND_MOUNTAIN_PASS
                    side = thr.result_p if thr.lambda_1p < thr.lambda_1q else thr.result_q
                    endpoint = find_descent_endpoint(problem, lam, side.direction)
                    best = mountain_pass(problem, lam, endpoint, opts=opts, tol_mp=1e-4)
            level, residual = best.level, best.residual
            norm = float(np.max(np.abs(best.u)))
            converged = best.converged
        rows.append(
            SweepRow(
                lam=lam,
                classification=classification,
                branch=branch,
                level=level,
                residual=residual,
                norm=norm,
                converged=converged,
                anomaly=anomaly,
            )
        )
    return SweepTable(rows=rows, threshold=thr)
