"""Integrals against the Gibbs weight exp(-V/t) and boundary-layer quantities."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import ConfigError, MixedExponentError
from .mesh import GL_THETA, GL_WEIGHTS, GridSpec, WeightedMesh, build_mesh
from .potential import CheckResult, PiecewisePotential

Z_RTOL = 1e-8


def _check_t(t: float, allow_zero: bool = False) -> None:
    if not math.isfinite(t) or t < 0 or (t == 0 and not allow_zero):
        raise ConfigError(f"temperature must be {'>=' if allow_zero else '>'} 0, got {t}")


def partition_function(pot: PiecewisePotential, t: float, grid: GridSpec | None = None,
                       with_error: bool = False):
    """Z_t = integral of exp(-V/t) over the truncated, layer-refined mesh.

    With ``with_error=True`` returns ``(Z, rel_err)`` where rel_err is the
    change under one nested mesh doubling.
    """
    _check_t(t, allow_zero=True)
    z = build_mesh(pot, t, grid).z
    if not with_error:
        return z
    z2 = build_mesh(pot, t, grid, refine=1).z
    err = abs(z2 - z) / abs(z2)
    if err > Z_RTOL:
        warnings.warn(f"partition function mesh-doubling error {err:.2e} exceeds {Z_RTOL:g}")
    return z, err


def _common_exponent(pot: PiecewisePotential) -> float:
    if pot.left.exponent != pot.right.exponent:
        raise MixedExponentError(
            f"wings have exponents {pot.left.exponent} and {pot.right.exponent}; "
            "the mixed-exponent expansion is not supported")
    return pot.left.exponent


def laplace_constant(alpha: float) -> float:
    """C_alpha = integral_0^inf exp(-u**alpha) du = Gamma(1/alpha) / alpha."""
    return math.gamma(1.0 / alpha) / alpha


def z_expansion(pot: PiecewisePotential) -> tuple[float, float]:
    """(gamma, exponent) with Z_t - (b - a) ~ gamma * t**exponent as t -> 0."""
    alpha = _common_exponent(pot)
    s = pot.left.boundary_coefficient ** (1 / alpha) + pot.right.boundary_coefficient ** (1 / alpha)
    return laplace_constant(alpha) * s, 1.0 / alpha


def weighted_moment(pot: PiecewisePotential, t: float, f: Callable, grid: GridSpec | None = None,
                    mesh: WeightedMesh | None = None) -> float:
    """Expectation of f under mu_t (f vectorised over numpy arrays)."""
    _check_t(t, allow_zero=True)
    mesh = mesh or build_mesh(pot, t, grid)
    return mesh.expect(np.asarray(f(mesh.qp_x), dtype=float))


def variance(pot: PiecewisePotential, t: float, grid: GridSpec | None = None,
             mesh: WeightedMesh | None = None) -> float:
    _check_t(t, allow_zero=True)
    mesh = mesh or build_mesh(pot, t, grid)
    m = mesh.expect(mesh.qp_x)
    return mesh.expect((mesh.qp_x - m) ** 2)


@dataclass(frozen=True)
class BoundaryMeasure:
    weight_left: float
    weight_right: float

    def as_tuple(self) -> tuple[float, float]:
        return self.weight_left, self.weight_right

    def sup_distance(self, other: "BoundaryMeasure") -> float:
        return max(abs(self.weight_left - other.weight_left),
                   abs(self.weight_right - other.weight_right))


def wing_masses(pot: PiecewisePotential, t: float, grid: GridSpec | None = None,
                mesh: WeightedMesh | None = None) -> tuple[float, float, float]:
    """Unnormalised masses of (x < a, [a, b], x > b)."""
    mesh = mesh or build_mesh(pot, t, grid)
    left = float(mesh.qp_w[mesh.qp_x < pot.a].sum())
    right = float(mesh.qp_w[mesh.qp_x > pot.b].sum())
    mid = float(mesh.qp_w[(mesh.qp_x >= pot.a) & (mesh.qp_x <= pot.b)].sum())
    return left, mid, right


def boundary_measure_sigma_t(pot: PiecewisePotential, t: float,
                             grid: GridSpec | None = None) -> BoundaryMeasure:
    """Projection onto {a, b} of mu_t restricted to the complement of the plateau."""
    _check_t(t)
    left, _, right = wing_masses(pot, t, grid)
    total = left + right
    wl = left / total
    return BoundaryMeasure(wl, 1.0 - wl)


def limiting_sigma(pot: PiecewisePotential) -> BoundaryMeasure:
    """Small-temperature limit of sigma_t: weights proportional to a_side**(1/alpha)."""
    alpha = _common_exponent(pot)
    wl = pot.left.boundary_coefficient ** (1 / alpha)
    wr = pot.right.boundary_coefficient ** (1 / alpha)
    return BoundaryMeasure(wl / (wl + wr), wr / (wl + wr))


def _half_line_rule(scale: float, length: float, n_cells: int = 96):
    edges = np.linspace(0.0, length * scale, n_cells + 1)
    h = np.diff(edges)
    x = (edges[:-1, None] + h[:, None] * GL_THETA[None, :]).ravel()
    w = (h[:, None] * GL_WEIGHTS[None, :]).ravel()
    return x, w


def _derivative(g: Callable, dg: Callable | None):
    if dg is not None:
        return dg

    def fd(x):
        x = np.asarray(x, dtype=float)
        h = 1e-6 * np.maximum(1.0, np.abs(x))
        return (np.asarray(g(x + h)) - np.asarray(g(x - h))) / (2 * h)
    return fd


def boundary_mean_control_check(g: Callable, t: float, eps: float,
                                dg: Callable | None = None) -> CheckResult:
    """Half-line Gaussian mean control.

    Checks
        | int_0^inf g^2 w - sqrt(pi t / 2) g(0)^2 |
            <= eps sqrt(pi t / 2) g(0)^2 + (1 + 1/eps) t int_0^inf g'^2 w
    with w = exp(-x^2 / 2t).  The constants come from Young's inequality on
    the cross term and the Gaussian Poincare inequality (constant t) for the
    odd extension of g - g(0).
    """
    _check_t(t)
    if not 0 < eps < 1:
        raise ConfigError("eps must lie in (0, 1)")
    dg = _derivative(g, dg)
    x, w = _half_line_rule(math.sqrt(t), 12.0)
    w = w * np.exp(-x * x / (2 * t))
    g0 = float(np.asarray(g(np.array([0.0])))[0])
    gx = np.asarray(g(x), dtype=float)
    dgx = np.asarray(dg(x), dtype=float)
    mass = math.sqrt(math.pi * t / 2)
    lhs = abs(float(np.dot(w, gx * gx)) - mass * g0 * g0)
    rhs = eps * mass * g0 * g0 + (1 + 1 / eps) * t * float(np.dot(w, dgx * dgx))
    tol = 1e-12 * max(rhs, lhs, 1e-300)
    ok = lhs <= rhs + tol
    return CheckResult(ok, None, f"lhs={lhs:.6e} rhs={rhs:.6e}")


def general_mean_control_check(wing: PiecewisePotential, g: Callable, eps: float, c_p: float,
                               dg: Callable | None = None) -> CheckResult:
    """Mean control on the half-line for a symmetric weight exp(-W).

    ``wing`` is a degenerate-plateau potential W (minimum at its plateau point
    x0); ``c_p`` is the Poincare constant of exp(-W) on the line.  Checks
        | int_{x0}^inf (g^2 - g(x0)^2) e^{-W} |
            <= eps eta(x > x0) g(x0)^2 + (1 + 1/eps) c_p int_{x0}^inf g'^2 e^{-W}.
    """
    if wing.left != wing.right:
        raise ConfigError("the weight must be symmetric")
    dg = _derivative(g, dg)
    r_max = wing.right.distance_at_level(45.0)
    x, w = _half_line_rule(1.0, r_max, n_cells=256)
    x = x + wing.b
    w = w * np.exp(-np.asarray(wing.value(x)))
    g0 = float(np.asarray(g(np.array([wing.b])))[0])
    gx = np.asarray(g(x), dtype=float)
    dgx = np.asarray(dg(x), dtype=float)
    mass = float(w.sum())
    lhs = abs(float(np.dot(w, gx * gx - g0 * g0)))
    rhs = eps * mass * g0 * g0 + (1 + 1 / eps) * c_p * float(np.dot(w, dgx * dgx))
    ok = lhs <= rhs + 1e-12 * max(rhs, lhs, 1e-300)
    return CheckResult(ok, None, f"lhs={lhs:.6e} rhs={rhs:.6e}")
