"""Problem bundle: grid, parameters, weights, and assembled kernels.

Also hosts the small registry of named analytic weight profiles used by the
command-line layer and the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .domain import (
    WHOLE_SPACE,
    DomainGrid,
    FloatArray,
    FracParams,
    KernelMatrix,
    WeightField,
    build_kernel,
)
from .energy import (
    GridFunction,
    evaluate_energies,
    evaluate_I,
    grad_I,
    grad_J,
    scaled_residual_norm,
    seminorm_pow,
    weighted_power_integral,
)
from .errors import ConfigError, ParameterError


@dataclass(frozen=True)
class Problem:
    """Immutable bundle of everything a solver needs."""

    grid: DomainGrid
    params: FracParams
    a: WeightField
    b: WeightField
    kern_p: KernelMatrix
    kern_q: KernelMatrix

    @property
    def regime(self) -> str:
        return self.params.regime

    def energy(self, u: GridFunction, lam: float) -> float:
        if self.regime == WHOLE_SPACE:
            return evaluate_I(u, self.a, self.kern_p, self.kern_q, lam)
        return evaluate_energies(u, self.a, self.b, self.kern_p, self.kern_q, lam).J

    def gradient(self, u: GridFunction, lam: float) -> GridFunction:
        if self.regime == WHOLE_SPACE:
            return grad_I(u, self.a, self.kern_p, self.kern_q, lam)
        return grad_J(u, self.a, self.b, self.kern_p, self.kern_q, lam)

    def components(self, u: GridFunction) -> tuple[float, float, float, float]:
        """The four homogeneous pieces (S_p, S_q, psi_a, psi_b) at u."""
        return (
            seminorm_pow(u, self.kern_p),
            seminorm_pow(u, self.kern_q),
            weighted_power_integral(u, self.a, self.params.p, self.grid.h),
            weighted_power_integral(u, self.b, self.params.q, self.grid.h),
        )


def weak_residual(u: GridFunction, lam: float, problem: Problem) -> float:
    """Scale-free measure of how well u solves the discrete weak equation."""
    g = problem.gradient(u, lam)
    return scaled_residual_norm(g, u, problem.params.p)


def build_problem(
    grid: DomainGrid,
    params: FracParams,
    a_values: FloatArray,
    b_values: FloatArray | None = None,
) -> Problem:
    """Assemble kernels for (alpha, p) and (beta, q) and wrap the weights.

    In the whole-space regime the b weight plays no role; a zero field is
    stored so dimensions stay consistent.
    """
    if b_values is None:
        if params.regime != WHOLE_SPACE:
            raise ParameterError("bounded-domain problems need both weights")
        b_values = np.zeros(grid.n)
    return Problem(
        grid=grid,
        params=params,
        a=WeightField(np.asarray(a_values, dtype=np.float64)),
        b=WeightField(np.asarray(b_values, dtype=np.float64)),
        kern_p=build_kernel(grid, params.alpha, params.p),
        kern_q=build_kernel(grid, params.beta, params.q),
    )


def interpolation_parameters(params: FracParams, t: float | None = None) -> tuple[float, float]:
    """Interpolation pair (t, s) for the whole-space integrability class.

    t defaults to the midpoint of (0, sqrt((p-q)/p)); s is then fixed by the
    conjugacy p*t/p_alpha_star + p*(1-t)/s = 1, which makes the weighted
    interpolation inequality an exact Hoelder instance.
    """
    p, q = params.p, params.q
    if not p > q:
        raise ParameterError("interpolation parameters need q < p")
    t_max = math.sqrt((p - q) / p)
    if t is None:
        t = 0.5 * t_max
    if not (0.0 < t < t_max):
        raise ParameterError(f"t must lie in (0, {t_max}), got {t}")
    if not math.isfinite(params.p_alpha_star):
        raise ParameterError("interpolation needs a finite critical exponent p_alpha_star")
    theta1 = p * t / params.p_alpha_star
    if theta1 >= 1.0:
        raise ParameterError("t too large for the critical exponent")
    s = p * (1.0 - t) / (1.0 - theta1)
    return t, s


def whole_space_weight_exponent(params: FracParams, t: float | None = None) -> float:
    """Decay exponent d making (1+|x|)^(-d) integrable at the required index.

    The required Lebesgue index is the conjugate of q_beta_star / s; any
    d above its reciprocal works, and one extra unit of decay is added.
    """
    _, s = interpolation_parameters(params, t)
    if not math.isfinite(params.q_beta_star):
        raise ParameterError("whole-space weight needs a finite q_beta_star")
    ratio = params.q_beta_star / s
    if ratio <= 1.0:
        raise ParameterError(f"q_beta_star/s must exceed 1, got {ratio}")
    m = ratio / (ratio - 1.0)
    return 1.0 + 1.0 / m


def decay_weight(params: FracParams, t: float | None = None) -> Callable[[FloatArray], FloatArray]:
    """Default whole-space weight generator (1+|x|)^(-d) with derived d."""
    d = whole_space_weight_exponent(params, t)

    def generator(x: FloatArray) -> FloatArray:
        return (1.0 + np.abs(x)) ** (-d)

    return generator


def weight_generator(spec: str) -> Callable[[FloatArray], FloatArray]:
    """Named analytic weight as a plain function of the coordinate.

    Supported: ``one``, ``const:<c>``, ``decay:<d>`` for (1+|x|)^(-d), and
    ``gauss:<w>`` for exp(-(x/w)^2).  These are the profiles meaningful on
    any interval, which the truncation sweep needs.
    """
    if spec == "one":
        return lambda x: np.ones_like(x)
    if spec.startswith("const:"):
        c = float(spec.split(":", 1)[1])
        return lambda x: np.full_like(x, c)
    if spec.startswith("decay:"):
        d = float(spec.split(":", 1)[1])
        return lambda x: (1.0 + np.abs(x)) ** (-d)
    if spec.startswith("gauss:"):
        w = float(spec.split(":", 1)[1])
        return lambda x: np.exp(-((x / w) ** 2))
    raise ConfigError(f"weight profile {spec!r} is not defined as a function of x")


def weight_profile(spec: str, grid: DomainGrid) -> FloatArray:
    """Resolve a named analytic profile or a CSV path to nodal values.

    Profiles: ``one``, ``const:<c>``, ``indefinite`` (sign-changing with a
    positive part), ``bump`` (centered Gaussian in relative coordinates),
    ``decay:<d>``, ``gauss:<w>``.  Anything else is read as a one-column
    CSV of n values.
    """
    x = grid.nodes
    xi = (x - grid.lo) / (grid.hi - grid.lo)
    if spec == "indefinite":
        return np.sin(2.0 * np.pi * xi) + 0.25
    if spec == "bump":
        return np.exp(-(((xi - 0.5) / 0.2) ** 2))
    try:
        return weight_generator(spec)(x)
    except ConfigError:
        pass
    path = Path(spec)
    if path.exists():
        values = np.loadtxt(path, delimiter=",", dtype=np.float64).reshape(-1)
        if values.size != grid.n:
            raise ConfigError(f"weight file {spec} has {values.size} values, grid needs {grid.n}")
        return values
    raise ConfigError(f"unknown weight profile {spec!r} (not a known name or readable file)")
