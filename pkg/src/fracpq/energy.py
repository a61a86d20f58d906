"""Nonlocal energies, their gradients, and the scale-free weak residual.

A grid function is a plain float array over the cell centers, understood as
zero outside the interval.  The core quantity is the discrete seminorm power

    S_r(u) = sum_ij K_ij |u_i - u_j|^r  +  2 h * sum_i tail_i |u_i|^r,

the full double sum over ordered pairs plus the exterior-tail term from the
zero extension (the interior-exterior region contributes both ordered
copies, hence the factor 2).  ``frac_laplacian_apply`` is exactly the gradient of
S_r(u)/r, so the Euler identity <g, u> = S_r(u) holds by r-homogeneity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import FloatArray, KernelMatrix, WeightField
from .errors import DimensionMismatchError, InfeasibleWeightError

GridFunction = FloatArray


def signed_power(t: FloatArray, e: float) -> FloatArray:
    """sign(t) |t|^e, with the value 0 at t = 0 (finite for every e > 0)."""
    return np.sign(t) * np.abs(t) ** e


def _check_len(u: np.ndarray, n: int) -> FloatArray:
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (n,):
        raise DimensionMismatchError(f"expected a grid function of length {n}, got shape {u.shape}")
    return u


def seminorm_pow(u: GridFunction, kern: KernelMatrix) -> float:
    """Discrete seminorm power S_r(u) for the kernel's exponent r."""
    u = _check_len(u, kern.n)
    d = u[:, None] - u[None, :]
    pair = float(np.sum(kern.K * np.abs(d) ** kern.r))
    tail = 2.0 * kern.h * float(np.dot(kern.tail, np.abs(u) ** kern.r))
    return pair + tail


def frac_laplacian_apply(u: GridFunction, kern: KernelMatrix) -> GridFunction:
    """Gradient of S_r(u)/r: the discrete fractional r-Laplacian action.

    Component i is 2 sum_j K_ij |u_i-u_j|^(r-2)(u_i-u_j)
    + 2 h tail_i |u_i|^(r-2) u_i.
    """
    u = _check_len(u, kern.n)
    d = u[:, None] - u[None, :]
    g = 2.0 * np.sum(kern.K * signed_power(d, kern.r - 1.0), axis=1)
    g += 2.0 * kern.h * kern.tail * signed_power(u, kern.r - 1.0)
    return g


def weighted_power_integral(u: GridFunction, w: WeightField, r: float, h: float) -> float:
    """Midpoint-rule integral h * sum_i w_i |u_i|^r."""
    return h * float(np.dot(w.values, np.abs(u) ** r))


@dataclass(frozen=True)
class EnergyReport:
    """All energy pieces evaluated at one grid function and one lambda."""

    seminorm_p: float
    seminorm_q: float
    psi_a: float
    psi_b: float
    phi: float
    psi: float
    J: float
    lam: float


def evaluate_energies(
    u: GridFunction,
    a: WeightField,
    b: WeightField,
    kern_p: KernelMatrix,
    kern_q: KernelMatrix,
    lam: float,
) -> EnergyReport:
    """Evaluate the two seminorm powers, the weighted integrals, phi, psi, J.

    phi = S_p/p + S_q/q, psi = psi_a/p + psi_b/q, J = phi - lam * psi.
    """
    sp = seminorm_pow(u, kern_p)
    sq = seminorm_pow(u, kern_q)
    p, q = kern_p.r, kern_q.r
    psi_a = weighted_power_integral(u, a, p, kern_p.h)
    psi_b = weighted_power_integral(u, b, q, kern_q.h)
    phi = sp / p + sq / q
    psi = psi_a / p + psi_b / q
    return EnergyReport(
        seminorm_p=sp,
        seminorm_q=sq,
        psi_a=psi_a,
        psi_b=psi_b,
        phi=phi,
        psi=psi,
        J=phi - lam * psi,
        lam=lam,
    )


def grad_J(
    u: GridFunction,
    a: WeightField,
    b: WeightField,
    kern_p: KernelMatrix,
    kern_q: KernelMatrix,
    lam: float,
) -> GridFunction:
    """Gradient of J; also the weak-form residual vector of the equation."""
    p, q = kern_p.r, kern_q.r
    g = frac_laplacian_apply(u, kern_p) + frac_laplacian_apply(u, kern_q)
    g -= lam * kern_p.h * (a.values * signed_power(u, p - 1.0) + b.values * signed_power(u, q - 1.0))
    return g


def _require_nonnegative(a: WeightField) -> None:
    if np.any(a.values < 0.0):
        raise InfeasibleWeightError("whole-space weight must be nonnegative everywhere")


def evaluate_I(
    u: GridFunction,
    a: WeightField,
    kern_p: KernelMatrix,
    kern_q: KernelMatrix,
    lam: float,
) -> float:
    """Whole-space energy S_p/p + S_q/q - (lam/p) h sum a |u|^p."""
    _require_nonnegative(a)
    p = kern_p.r
    return (
        seminorm_pow(u, kern_p) / p
        + seminorm_pow(u, kern_q) / kern_q.r
        - (lam / p) * weighted_power_integral(u, a, p, kern_p.h)
    )


def grad_I(
    u: GridFunction,
    a: WeightField,
    kern_p: KernelMatrix,
    kern_q: KernelMatrix,
    lam: float,
) -> GridFunction:
    """Gradient of the whole-space energy."""
    _require_nonnegative(a)
    p = kern_p.r
    g = frac_laplacian_apply(u, kern_p) + frac_laplacian_apply(u, kern_q)
    g -= lam * kern_p.h * a.values * signed_power(u, p - 1.0)
    return g


def scaled_residual_norm(gradient: GridFunction, u: GridFunction, p: float) -> float:
    """Sup norm of the gradient divided by max(1, ||u||_inf^(p-1)).

    The leading term of the equation is (p-1)-homogeneous, so this measure
    is invariant under u -> t u for large t and tolerances stay scale-free.
    """
    scale = max(1.0, float(np.max(np.abs(u))) ** (p - 1.0)) if u.size else 1.0
    return float(np.max(np.abs(gradient))) / scale


def single_operator_residual(
    u: GridFunction, lam: float, kern: KernelMatrix, w: WeightField
) -> float:
    """Scale-free residual of the single-operator eigenequation at (u, lam)."""
    g = frac_laplacian_apply(u, kern) - lam * kern.h * w.values * signed_power(u, kern.r - 1.0)
    return scaled_residual_norm(g, u, kern.r)
