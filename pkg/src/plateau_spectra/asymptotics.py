"""Closed-form small-temperature expansions c0 + coefficient * t**exponent."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError
from .potential import PiecewisePotential, pl_constant
from .quadrature import _common_exponent, laplace_constant, z_expansion

KINDS = ("poincare", "lsi", "partition", "conjecture", "counterexample-lower")


@dataclass(frozen=True)
class AsymptoticModel:
    c0: float
    coefficient: float
    exponent: float
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown expansion kind {self.kind!r}")
        if not 0 < self.exponent <= 1:
            raise ConfigError(f"expansion exponent must lie in (0, 1], got {self.exponent}")
        if self.c0 < 0:
            raise ConfigError("c0 must be nonnegative")

    def evaluate(self, t):
        return self.c0 + self.coefficient * np.power(t, self.exponent)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "c0": self.c0, "coefficient": self.coefficient,
                "exponent": self.exponent}


def segment_constant(pot: PiecewisePotential) -> float:
    return pot.width ** 2 / math.pi ** 2


def theorem_cs_limits(pot: PiecewisePotential) -> tuple[float, float]:
    """Limits of (C_LS / t, C_P / t) for a unique minimiser: (2 C_PL, 1 / V''(x0))."""
    if not pot.degenerate:
        raise ConfigError("unique-minimiser limits need a degenerate plateau; "
                          "use the plateau expansions instead")
    curv = max(pot.kappa_a, pot.kappa_b)
    if not (math.isfinite(curv) and curv > 0) or pot.kappa_a != pot.kappa_b:
        raise ConfigError("unique-minimiser limits need a C2 minimum with positive curvature")
    return 2.0 * pl_constant(pot), 1.0 / curv


def conjecture_prediction(pot: PiecewisePotential, t: float) -> float:
    """C_LS(mu_0) + 2 C_PL t, with C_LS(mu_0) the segment value."""
    return segment_constant(pot) + 2.0 * pl_constant(pot) * t


def counterexample_lower_bound(t: float) -> float:
    if t < 0:
        raise ConfigError("t must be >= 0")
    return 1.0 + math.sqrt(8.0 * t / math.pi)


def theorem_1d_coefficient(kappa_a: float, kappa_b: float) -> float:
    """sqrt(2 / pi) (kappa_a**-1/2 + kappa_b**-1/2)."""
    if not (kappa_a > 0 and kappa_b > 0):
        raise ConfigError("curvatures must be positive")
    return (kappa_a ** -0.5 + kappa_b ** -0.5) * math.sqrt(2.0 / math.pi)


def _neumann_boundary_data(width: float):
    # Gap eigenfunction sin(pi (x - mid) / width) rescaled to unit Dirichlet
    # energy; returns (squared trace at each end, derivative at each end).
    amp2 = 2.0 * width / math.pi ** 2
    slope = math.sqrt(amp2) * (math.pi / width) * math.cos(math.pi / 2)
    return amp2, slope


def poincare_expansion_1d(pot: PiecewisePotential) -> AsymptoticModel:
    """c0 + Lambda t**(1/alpha) with Lambda = C_alpha sum_side a_side**(1/alpha) f(end)^2.

    In one dimension the boundary-gradient correction vanishes because the
    gap eigenfunction satisfies Neumann conditions; this is asserted.
    """
    if pot.degenerate:
        raise ConfigError("plateau expansion needs a < b")
    alpha = _common_exponent(pot)
    trace2, slope = _neumann_boundary_data(pot.width)
    assert abs(slope) < 1e-12 * math.sqrt(trace2), "Neumann eigenfunction must have zero end slope"
    mass = sum(w.boundary_coefficient ** (1.0 / alpha) for w in (pot.left, pot.right))
    lam = laplace_constant(alpha) * mass * trace2
    return AsymptoticModel(segment_constant(pot), lam, 1.0 / alpha, "poincare")


def lsi_expansion_1d(pot: PiecewisePotential) -> AsymptoticModel:
    if pot.degenerate or not pot.quadratic_wings:
        raise ConfigError("log-Sobolev expansion needs a < b and quadratic wings")
    ka, kb = pot.kappa_a, pot.kappa_b
    coef = math.sqrt(2.0) * pot.width * math.pi ** -1.5 * (ka ** -0.5 + kb ** -0.5)
    return AsymptoticModel(segment_constant(pot), coef, 0.5, "lsi")


def z_expansion_model(pot: PiecewisePotential) -> AsymptoticModel:
    gamma, exponent = z_expansion(pot)
    return AsymptoticModel(pot.width, gamma, exponent, "partition")


def conjecture_model(pot: PiecewisePotential) -> AsymptoticModel:
    return AsymptoticModel(segment_constant(pot), 2.0 * pl_constant(pot), 1.0, "conjecture")


def counterexample_lower_model() -> AsymptoticModel:
    return AsymptoticModel(1.0, math.sqrt(8.0 / math.pi), 0.5, "counterexample-lower")
