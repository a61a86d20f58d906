"""Grids, parameters, weights, and the discrete singular-kernel structures.

The spatial setting is one-dimensional: a bounded interval discretized by
uniform cell centers, with functions extended by zero outside the interval.
The nonlocal energy is realized by a symmetric pair kernel between cell
centers plus an exact analytic tail that accounts for the interaction of
each interior node with the whole exterior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import ParameterError, RegimeError

FloatArray = NDArray[np.float64]

BOUNDED_DOMAIN = "bounded_domain"
WHOLE_SPACE = "whole_space"


@dataclass(frozen=True)
class DomainGrid:
    """Uniform cell-centered grid on the interval (lo, hi).

    Attributes
    ----------
    lo, hi : float
        Interval endpoints, lo < hi.
    n : int
        Number of interior cells, n >= 2.
    h : float
        Cell width (hi - lo) / n.
    nodes : FloatArray
        Cell centers lo + (i + 1/2) h for i = 0..n-1.
    """

    lo: float
    hi: float
    n: int
    h: float
    nodes: FloatArray


def build_grid(lo: float, hi: float, n: int) -> DomainGrid:
    """Build a uniform cell-centered grid with n cells on (lo, hi)."""
    lo = float(lo)
    hi = float(hi)
    n = int(n)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
        raise ParameterError(f"interval endpoints must satisfy lo < hi, got ({lo}, {hi})")
    if n < 2:
        raise ParameterError(f"need at least 2 cells, got n={n}")
    h = (hi - lo) / n
    nodes = lo + (np.arange(n, dtype=np.float64) + 0.5) * h
    return DomainGrid(lo=lo, hi=hi, n=n, h=h, nodes=nodes)


@dataclass(frozen=True)
class FracParams:
    """Fractional orders and integrability exponents of the two operators.

    The pair (alpha, p) drives the leading operator and (beta, q) the lower
    one, with 1 < q <= p and both orders in (0, 1).  Either ordering of
    alpha and beta is accepted.  ``regime`` selects the bounded-interval
    problem or the truncated whole-line problem; the latter additionally
    requires q < p < q_beta_star.
    """

    alpha: float
    beta: float
    p: float
    q: float
    regime: str = BOUNDED_DOMAIN
    p_alpha_star: float = field(init=False)
    q_beta_star: float = field(init=False)

    def __post_init__(self) -> None:
        for name, s in (("alpha", self.alpha), ("beta", self.beta)):
            if not (0.0 < s < 1.0):
                raise ParameterError(f"{name} must lie in (0, 1), got {s}")
        if not (1.0 < self.q <= self.p):
            raise ParameterError(f"exponents must satisfy 1 < q <= p, got q={self.q}, p={self.p}")
        if self.regime not in (BOUNDED_DOMAIN, WHOLE_SPACE):
            raise ParameterError(f"unknown regime {self.regime!r}")
        object.__setattr__(self, "p_alpha_star", _critical_exponent(self.p, self.alpha))
        object.__setattr__(self, "q_beta_star", _critical_exponent(self.q, self.beta))
        if self.regime == WHOLE_SPACE:
            if not (self.q < self.p < self.q_beta_star):
                raise RegimeError(
                    "whole-space regime requires q < p < q_beta_star, got "
                    f"q={self.q}, p={self.p}, q_beta_star={self.q_beta_star}"
                )


def _critical_exponent(r: float, s: float) -> float:
    """Critical Sobolev exponent r/(1 - s r) in dimension one; inf if s r >= 1."""
    if s * r < 1.0:
        return r / (1.0 - s * r)
    return math.inf


@dataclass(frozen=True)
class WeightField:
    """Nodal values of a bounded weight; may change sign.

    ``has_positive_part`` records whether the weight is positive somewhere,
    which every quotient denominator built from it requires.
    """

    values: FloatArray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ParameterError("weight values must form a nonempty 1-d sequence")
        if not np.all(np.isfinite(values)):
            raise ParameterError("weight values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def has_positive_part(self) -> bool:
        return bool(np.any(self.values > 0.0))


@dataclass(frozen=True)
class KernelMatrix:
    """Discrete singular-kernel data for one (order, exponent) pair.

    Attributes
    ----------
    s, r : float
        Fractional order and integrability exponent.
    h : float
        Grid spacing, kept here so energy sums need no extra grid handle.
    K : FloatArray
        Symmetric pair weights h^2 / |x_i - x_j|^(1 + s r), zero diagonal.
    tail : FloatArray
        Exact exterior densities: tail[i] integrates |x_i - y|^(-(1+s r))
        over the complement of the interval.
    """

    s: float
    r: float
    h: float
    K: FloatArray
    tail: FloatArray

    @property
    def n(self) -> int:
        return self.K.shape[0]


def _check_kernel_params(s: float, r: float) -> None:
    if not (0.0 < s < 1.0):
        raise ParameterError(f"order s must lie in (0, 1), got {s}")
    if r <= 1.0:
        raise ParameterError(f"exponent r must exceed 1, got {r}")
    if s * r > 1.0:
        raise RegimeError(
            f"supercritical product s*r = {s * r} > 1 is not supported in dimension one"
        )


def exterior_tail(grid: DomainGrid, s: float, r: float) -> FloatArray:
    """Exact exterior integral of the kernel for every node.

    For a node x inside (lo, hi) the integral of |x - y|^(-(1+s r)) over
    y outside the interval has the closed form
    ((x - lo)^(-s r) + (hi - x)^(-s r)) / (s r).
    """
    _check_kernel_params(s, r)
    sr = s * r
    left = grid.nodes - grid.lo
    right = grid.hi - grid.nodes
    return (left ** (-sr) + right ** (-sr)) / sr


def build_kernel(grid: DomainGrid, s: float, r: float) -> KernelMatrix:
    """Assemble the symmetric pair kernel and its exterior tail.

    Off-diagonal entries are the midpoint-rule weights
    h^2 / |x_i - x_j|^(1 + s r); the diagonal is zero because the pair
    integrand vanishes at coincident nodes.
    """
    _check_kernel_params(s, r)
    dist = np.abs(grid.nodes[:, None] - grid.nodes[None, :])
    np.fill_diagonal(dist, 1.0)
    K = grid.h ** 2 * dist ** (-(1.0 + s * r))
    np.fill_diagonal(K, 0.0)
    return KernelMatrix(s=float(s), r=float(r), h=grid.h, K=K, tail=exterior_tail(grid, s, r))
