"""Independent brute-force verifiers.

Everything here deliberately avoids the iterative solver code paths: dense
LAPACK eigensolves for the quadratic case, exhaustive angular search on tiny
grids, central finite differences, and random-sampling suites for the scalar
inequalities the nonlinear analysis rests on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .domain import FloatArray, FracParams, KernelMatrix, WeightField
from .errors import InfeasibleWeightError, ParameterError

SUITE_NAMES = (
    "vec_p_ge_2",
    "vec_p_le_2",
    "hidden_convexity",
    "modulus_contraction",
    "holder_interpolation",
)

# Floating-point slack below which a negative margin counts as a violation.
SLACK = 1e-12


def quad_form_matrix(kern: KernelMatrix) -> FloatArray:
    """Symmetric matrix A with u^T A u = S_2-style seminorm power at r = 2.

    Valid for the kernel's own exponent r = 2:
    A = 2 (diag(row sums of K) - K) + 2 diag(h * tail).
    """
    if kern.r != 2.0:
        raise ParameterError(f"quadratic form needs r = 2, kernel has r = {kern.r}")
    row = kern.K.sum(axis=1)
    return 2.0 * (np.diag(row) - kern.K) + 2.0 * np.diag(kern.h * kern.tail)


def dense_single_eig(kern: KernelMatrix, w: WeightField) -> tuple[FloatArray, FloatArray]:
    """Full spectrum of A x = lam diag(h w) x for a strictly positive weight."""
    if np.any(w.values <= 0.0):
        raise InfeasibleWeightError("dense eigensolve needs a strictly positive weight")
    A = quad_form_matrix(kern)
    D = np.diag(kern.h * w.values)
    vals, vecs = scipy.linalg.eigh(A, D)
    return vals, vecs


def dense_linear_eig(
    kern_p: KernelMatrix,
    kern_q: KernelMatrix,
    a: WeightField,
    b: WeightField,
) -> tuple[FloatArray, FloatArray]:
    """Spectrum of (A + B) x = lam (D_a + D_b) x, ascending, D-orthonormal.

    A and B are the two r = 2 kernel forms with their tails; D_a, D_b the
    diagonal weight forms.  The combined weight must be strictly positive so
    the right-hand form is definite.
    """
    combined = a.values + b.values
    if np.any(combined <= 0.0):
        raise InfeasibleWeightError(
            "denominator form is not positive definite: a + b must be strictly positive"
        )
    A = quad_form_matrix(kern_p) + quad_form_matrix(kern_q)
    D = np.diag(kern_p.h * combined)
    vals, vecs = scipy.linalg.eigh(A, D)
    return vals, vecs


def quadratic_saddle(
    kern_p: KernelMatrix,
    kern_q: KernelMatrix,
    a: WeightField,
    b: WeightField,
    lam: float,
) -> dict:
    """Critical-point structure of the quadratic energy u^T(A - lam D)u / 2.

    For lam strictly between consecutive pencil eigenvalues the only critical
    point is the origin, an index-k saddle (k eigenvalues below lam), and the
    minimax level over paths joining 0 to any negative-energy point is 0.
    """
    vals, vecs = dense_linear_eig(kern_p, kern_q, a, b)
    index = int(np.sum(vals < lam))
    if index == 0 or bool(np.any(np.abs(vals - lam) <= 1e-12 * np.abs(vals))):
        raise ParameterError("quadratic saddle analysis needs lam strictly inside the spectrum gap")
    return {
        "level": 0.0,
        "index": index,
        "eigenvalues": vals,
        "unstable_direction": np.abs(vecs[:, 0]),
        "pass_direction": vecs[:, index],
    }


def _sphere_directions(n: int, resolution: int) -> FloatArray:
    """Nonnegative-orthant directions from a uniform angular grid."""
    angles = [np.linspace(0.0, 0.5 * np.pi, resolution) for _ in range(n - 1)]
    mesh = np.meshgrid(*angles, indexing="ij")
    flat = [m.reshape(-1) for m in mesh]
    count = flat[0].size
    u = np.ones((count, n))
    for k in range(n - 1):
        u[:, k] *= np.cos(flat[k])
        for j in range(k + 1, n):
            u[:, j] *= np.sin(flat[k])
    return u


def subspace_grid_search(
    kern: KernelMatrix,
    w: WeightField,
    r: float,
    resolution: int = 400,
) -> float:
    """Exhaustive single-operator quotient minimum over the nonnegative orthant.

    Only tiny grids are allowed; the angular grid has ``resolution`` points
    per angle and the quotient is scale-invariant, so directions suffice.
    """
    n = kern.n
    if n > 4:
        raise ParameterError(f"grid search is limited to n <= 4, got n = {n}")
    if r != kern.r:
        raise ParameterError(f"exponent {r} does not match kernel exponent {kern.r}")
    dirs = _sphere_directions(n, resolution)
    best = math.inf
    chunk = 65536
    for start in range(0, dirs.shape[0], chunk):
        block = dirs[start : start + chunk]
        diff = block[:, :, None] - block[:, None, :]
        num = np.einsum("ij,gij->g", kern.K, np.abs(diff) ** r)
        num += 2.0 * kern.h * (np.abs(block) ** r) @ kern.tail
        den = kern.h * (np.abs(block) ** r) @ w.values
        ok = den > 0.0
        if np.any(ok):
            best = min(best, float(np.min(num[ok] / den[ok])))
    if not math.isfinite(best):
        raise InfeasibleWeightError("no direction with positive denominator found")
    return best


def fd_gradient(functional: Callable[[FloatArray], float], u: FloatArray, step: float) -> FloatArray:
    """Central finite differences of a scalar functional, one coordinate at a time."""
    u = np.asarray(u, dtype=np.float64)
    g = np.zeros_like(u)
    for i in range(u.size):
        e = np.zeros_like(u)
        e[i] = step
        g[i] = (functional(u + e) - functional(u - e)) / (2.0 * step)
    return g


@dataclass(frozen=True)
class InequalityReport:
    """Outcome of one random-sampling inequality suite."""

    name: str
    samples: int
    violations: int
    worst_slack: float
    estimated_constant: float | None


def _pairs_heavy_tailed(rng: np.random.Generator, count: int) -> tuple[FloatArray, FloatArray]:
    """Symmetric heavy-tailed scalar pairs, normalized to unit max magnitude.

    Drawn as one (count, 2) block so a doubled sample contains the smaller
    sample as its prefix (the estimated constants are then monotone).
    """
    z = rng.standard_cauchy((count, 2))
    xi, eta = z[:, 0], z[:, 1]
    scale = np.maximum(np.abs(xi), np.abs(eta))
    ok = scale > 0.0
    xi, eta, scale = xi[ok], eta[ok], scale[ok]
    return xi / scale, eta / scale


def _suite_vec_monotone(rng: np.random.Generator, count: int, p: float, strong_form: bool):
    xi, eta = _pairs_heavy_tailed(rng, count)
    # keep pairs away from the diagonal, where the ratio is 0/0 and the
    # difference of powers cancels catastrophically
    keep = np.abs(xi - eta) > 1e-6
    xi, eta = xi[keep], eta[keep]

    def phi(t):
        return np.sign(t) * np.abs(t) ** (p - 1.0)

    inner = (phi(xi) - phi(eta)) * (xi - eta)
    lhs = np.abs(xi - eta) ** p
    if strong_form:
        rhs_core = inner ** (p / 2.0) * (np.abs(xi) ** p + np.abs(eta) ** p) ** ((2.0 - p) / 2.0)
    else:
        rhs_core = inner
    ratio = lhs / rhs_core
    constant = float(np.max(ratio))
    margin = constant * rhs_core - lhs
    violations = int(np.sum(margin < -SLACK))
    return xi.size, violations, float(np.min(margin)), constant


def _suite_hidden_convexity(rng: np.random.Generator, count: int, p: float):
    vals = np.abs(rng.standard_normal((count, 4)))
    scale = np.max(vals, axis=1)
    ok = scale > 0.0
    vals = vals[ok] / scale[ok, None]
    ux, uy, vx, vy = vals.T
    wx = (0.5 * (ux ** p + vx ** p)) ** (1.0 / p)
    wy = (0.5 * (uy ** p + vy ** p)) ** (1.0 / p)
    margin = 0.5 * np.abs(ux - uy) ** p + 0.5 * np.abs(vx - vy) ** p - np.abs(wx - wy) ** p
    return vals.shape[0], int(np.sum(margin < -SLACK)), float(np.min(margin)), None


def _suite_modulus(rng: np.random.Generator, count: int):
    xi, eta = _pairs_heavy_tailed(rng, count)
    margin = np.abs(xi - eta) - np.abs(np.abs(xi) - np.abs(eta))
    return xi.size, int(np.sum(margin < -SLACK)), float(np.min(margin)), None


def _suite_holder(rng: np.random.Generator, count: int, params: FracParams, grid_size: int = 16):
    t, s = _interp_pair(params)
    p = params.p
    pstar = params.p_alpha_star
    h = 1.0 / grid_size
    samples = violations = 0
    worst = math.inf
    batch = 4096
    remaining = count
    while remaining > 0:
        m = min(batch, remaining)
        remaining -= m
        a = np.abs(rng.standard_normal((m, grid_size)))
        u = rng.standard_normal((m, grid_size))
        a /= np.maximum(np.max(a, axis=1, keepdims=True), 1e-300)
        u /= np.maximum(np.max(np.abs(u), axis=1, keepdims=True), 1e-300)
        lhs = h * np.sum(a * np.abs(u) ** p, axis=1)
        f1 = h * np.sum(a * np.abs(u) ** pstar, axis=1)
        f2 = h * np.sum(a * np.abs(u) ** s, axis=1)
        rhs = f1 ** (p * t / pstar) * f2 ** (p * (1.0 - t) / s)
        margin = rhs - lhs
        samples += m
        violations += int(np.sum(margin < -SLACK))
        worst = min(worst, float(np.min(margin)))
    return samples, violations, worst, None


def _interp_pair(params: FracParams) -> tuple[float, float]:
    from .problem import interpolation_parameters

    return interpolation_parameters(params)


def inequality_suite(
    name: str,
    sample_count: int,
    rng_seed: int,
    p: float | None = None,
    params: FracParams | None = None,
) -> InequalityReport:
    """Run one scalar/grid inequality suite on random samples.

    Pair samples are drawn heavy-tailed (Cauchy) to probe extreme ratios;
    grid samples are componentwise normal, with the modulus applied where
    nonnegativity is required.  All samples are normalized to unit magnitude
    before checking, so the homogeneous margins stay O(1) and the 1e-12
    violation slack is meaningful.
    """
    rng = np.random.default_rng(rng_seed)
    if name == "vec_p_ge_2":
        p = 4.0 if p is None else p
        if p <= 2.0:
            raise ParameterError("vec_p_ge_2 needs p > 2")
        n, v, w, c = _suite_vec_monotone(rng, sample_count, p, strong_form=False)
    elif name == "vec_p_le_2":
        p = 1.5 if p is None else p
        if not (1.0 < p <= 2.0):
            raise ParameterError("vec_p_le_2 needs 1 < p <= 2")
        n, v, w, c = _suite_vec_monotone(rng, sample_count, p, strong_form=True)
    elif name == "hidden_convexity":
        p = 3.0 if p is None else p
        n, v, w, c = _suite_hidden_convexity(rng, sample_count, p)
    elif name == "modulus_contraction":
        n, v, w, c = _suite_modulus(rng, sample_count)
    elif name == "holder_interpolation":
        if params is None:
            params = FracParams(alpha=0.3, beta=0.4, p=2.5, q=2.0)
        n, v, w, c = _suite_holder(rng, sample_count, params)
    else:
        raise ParameterError(f"unknown suite {name!r}; choose one of {SUITE_NAMES}")
    return InequalityReport(
        name=name, samples=n, violations=v, worst_slack=w, estimated_constant=c
    )
