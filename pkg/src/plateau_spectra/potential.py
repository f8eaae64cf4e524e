"""Plateau potentials: V = 0 on [a, b], convex analytic wings outside.

A wing is a function of the distance r >= 0 to the plateau, written as a
finite sum of powers ``sum_k c_k r**p_k``.  The leading (smallest) power is the
Lojasiewicz exponent and its coefficient c gives the boundary coefficient
a_side = 1 / c used by the low-temperature expansions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .exceptions import ConfigError, InstabilityError, PLDivergenceError

WING_KINDS = ("power", "quadratic", "series")


@dataclass(frozen=True)
class WingSpec:
    """One side of a plateau potential, V(r) = coefficient * r**exponent + extra terms.

    ``extra_terms`` holds (coefficient, power) pairs with power > exponent; it
    is only meaningful for ``kind == "series"``.  ``upper_exponent`` is the
    growth exponent beta of the upper bound V <= C r**beta near the plateau;
    it defaults to ``exponent``.
    """

    kind: str = "power"
    exponent: float = 2.0
    coefficient: float = 0.5
    upper_exponent: float | None = None
    extra_terms: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in WING_KINDS:
            raise ConfigError(f"wing kind must be one of {WING_KINDS}, got {self.kind!r}")
        if self.kind == "quadratic" and self.exponent != 2.0:
            raise ConfigError("quadratic wing must have exponent 2")
        for name in ("exponent", "coefficient"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ConfigError(f"wing {name} must be finite, got {v}")
        if self.kind != "series" and self.extra_terms:
            raise ConfigError("extra_terms are only allowed for kind='series'")
        for c, p in self.extra_terms:
            if not (math.isfinite(c) and math.isfinite(p)) or p <= self.exponent:
                raise ConfigError(
                    f"series term ({c}, {p}) must be finite with power > leading exponent")

    @classmethod
    def quadratic(cls, curvature: float) -> "WingSpec":
        """Wing (curvature / 2) r**2, i.e. one-sided second derivative ``curvature``."""
        return cls("quadratic", 2.0, 0.5 * curvature)

    @classmethod
    def power(cls, exponent: float, coefficient: float = 1.0, upper_exponent=None) -> "WingSpec":
        return cls("power", float(exponent), float(coefficient), upper_exponent)

    @property
    def beta(self) -> float:
        return float(self.exponent if self.upper_exponent is None else self.upper_exponent)

    @property
    def terms(self) -> tuple[tuple[float, float], ...]:
        return ((self.coefficient, self.exponent),) + tuple(self.extra_terms)

    @property
    def boundary_coefficient(self) -> float:
        """a_side in V(r) ~ r**alpha / a_side."""
        return 1.0 / self.coefficient

    @property
    def max_power(self) -> float:
        return max(p for _, p in self.terms)

    @property
    def curvature(self) -> float:
        """One-sided second derivative at r = 0+ (finite only for exponent 2)."""
        p = self.exponent
        if p == 2.0:
            return 2.0 * self.coefficient
        return 0.0 if p > 2.0 else math.inf

    def value(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for c, p in self.terms:
            out = out + c * np.power(r, p)
        return out

    def grad(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for c, p in self.terms:
            out = out + c * p * np.power(r, p - 1.0)
        return out

    def hess(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        with np.errstate(divide="ignore"):
            for c, p in self.terms:
                if p == 1.0:
                    continue
                if p == 2.0:
                    out = out + 2.0 * c
                else:
                    out = out + c * p * (p - 1.0) * np.power(r, p - 2.0)
        return out

    def distance_at_level(self, level: float) -> float:
        """Smallest r with value(r) = level (level > 0)."""
        lo, hi = 0.0, 1.0
        while float(self.value(hi)) < level:
            hi *= 2.0
            if hi > 1e300:
                raise ConfigError("wing does not reach the requested level")
        # Leading-term guess is exact for pure power wings.
        guess = (level / self.coefficient) ** (1.0 / self.exponent)
        if not self.extra_terms and guess > 0:
            return guess
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if float(self.value(mid)) < level:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * hi:
                break
        return 0.5 * (lo + hi)

    def to_dict(self) -> dict:
        d = {"type": self.kind, "exponent": self.exponent, "coefficient": self.coefficient}
        if self.upper_exponent is not None:
            d["upper_exponent"] = self.upper_exponent
        if self.extra_terms:
            d["terms"] = [list(tp) for tp in self.extra_terms]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WingSpec":
        if not isinstance(d, dict):
            raise ConfigError(f"wing must be a table/object, got {d!r}")
        kind = d.get("type", d.get("kind", "power"))
        if kind == "custom-series":
            kind = "series"
        try:
            if kind == "quadratic" and "curvature" in d:
                return cls.quadratic(float(d["curvature"]))
            exponent = float(d.get("exponent", 2.0))
            coefficient = float(d["coefficient"])
            upper = d.get("upper_exponent")
            terms = tuple((float(c), float(p)) for c, p in d.get("terms", ()))
        except KeyError as exc:
            raise ConfigError(f"wing is missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"wing field has invalid value: {exc}") from None
        return cls(kind, exponent, coefficient, None if upper is None else float(upper), terms)


@dataclass(frozen=True)
class PiecewisePotential:
    """Convex potential with argmin V = [a, b] (a == b allowed) and min V = 0."""

    a: float
    b: float
    left: WingSpec
    right: WingSpec

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or self.a > self.b:
            raise ConfigError(f"plateau must satisfy a <= b, got [{self.a}, {self.b}]")

    @property
    def width(self) -> float:
        return self.b - self.a

    @property
    def degenerate(self) -> bool:
        return self.a == self.b

    @property
    def kappa_a(self) -> float:
        return self.left.curvature

    @property
    def kappa_b(self) -> float:
        return self.right.curvature

    @property
    def quadratic_wings(self) -> bool:
        return self.left.exponent == 2.0 and self.right.exponent == 2.0

    def wing(self, side: str) -> WingSpec:
        return self.left if side == "left" else self.right

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        r = x > self.b
        out = np.where(r, self.right.value(np.where(r, x - self.b, 0.0)), out)
        lft = x < self.a
        out = np.where(lft, self.left.value(np.where(lft, self.a - x, 0.0)), out)
        return out if out.ndim else float(out)

    __call__ = value

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        r = x > self.b
        out = np.where(r, self.right.grad(np.where(r, x - self.b, 0.0)), out)
        lft = x < self.a
        out = np.where(lft, -self.left.grad(np.where(lft, self.a - x, 0.0)), out)
        return out if out.ndim else float(out)

    def hess(self, x):
        """Second derivative; at x = a or b the one-sided wing value is returned."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        r = x >= self.b
        out = np.where(r, self.right.hess(np.where(r, x - self.b, 1.0)), out)
        lft = (x <= self.a) & ~((x == self.b) & r)
        out = np.where(lft, self.left.hess(np.where(lft, self.a - x, 1.0)), out)
        return out if out.ndim else float(out)

    def flat_arrays(self):
        """(a, b, left coefs, left powers, right coefs, right powers) for kernels."""
        lc, lp = map(np.array, zip(*self.left.terms))
        rc, rp = map(np.array, zip(*self.right.terms))
        return (float(self.a), float(self.b), lc.astype(float), lp.astype(float),
                rc.astype(float), rp.astype(float))

    def scaled(self, s: float) -> "PiecewisePotential":
        """Potential x -> V(x / s): plateau and wing lengths stretched by s."""
        def scale_wing(w: WingSpec) -> WingSpec:
            extra = tuple((c / s ** p, p) for c, p in w.extra_terms)
            return WingSpec(w.kind, w.exponent, w.coefficient / s ** w.exponent,
                            w.upper_exponent, extra)
        return PiecewisePotential(self.a * s, self.b * s, scale_wing(self.left), scale_wing(self.right))

    def to_dict(self) -> dict:
        return {"plateau": [self.a, self.b], "left_wing": self.left.to_dict(),
                "right_wing": self.right.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewisePotential":
        if "plateau" not in d:
            raise ConfigError("potential config is missing field 'plateau'")
        plateau = d["plateau"]
        if not isinstance(plateau, (list, tuple)) or len(plateau) != 2:
            raise ConfigError("field 'plateau' must be a pair [a, b]")
        for key in ("left_wing", "right_wing"):
            if key not in d:
                raise ConfigError(f"potential config is missing field {key!r}")
        try:
            a, b = float(plateau[0]), float(plateau[1])
        except (TypeError, ValueError):
            raise ConfigError("field 'plateau' must contain numbers") from None
        return cls(a, b, WingSpec.from_dict(d["left_wing"]), WingSpec.from_dict(d["right_wing"]))


# ---------------------------------------------------------------------------
# Named potentials
# ---------------------------------------------------------------------------

def counterexample() -> PiecewisePotential:
    """x -> dist(x, [-pi/2, pi/2])**2 / 2."""
    w = WingSpec.quadratic(1.0)
    return PiecewisePotential(-math.pi / 2, math.pi / 2, w, w)


def gaussian(curvature: float = 1.0) -> PiecewisePotential:
    """x -> curvature * x**2 / 2, a degenerate plateau at 0."""
    w = WingSpec.quadratic(curvature)
    return PiecewisePotential(0.0, 0.0, w, w)


def asymmetric(kappa_a: float = 1.0, kappa_b: float = 4.0, a=-math.pi / 2, b=math.pi / 2):
    return PiecewisePotential(a, b, WingSpec.quadratic(kappa_a), WingSpec.quadratic(kappa_b))


def quartic(coefficient: float = 1.0, a=-math.pi / 2, b=math.pi / 2):
    w = WingSpec.power(4.0, coefficient)
    return PiecewisePotential(a, b, w, w)


NAMED = {
    "counterexample": counterexample,
    "gaussian": gaussian,
    "asymmetric": asymmetric,
    "quartic": quartic,
}


def named_potential(spec: str) -> PiecewisePotential:
    """Parse ``name`` or ``name(arg, ...)``, e.g. ``asymmetric(1,4)``."""
    spec = spec.strip()
    name, _, rest = spec.partition("(")
    name = name.strip()
    if name not in NAMED:
        raise ConfigError(f"unknown named potential {name!r}; known: {sorted(NAMED)}")
    args: list[float] = []
    if rest:
        if not rest.endswith(")"):
            raise ConfigError(f"malformed potential spec {spec!r}")
        body = rest[:-1].strip()
        try:
            args = [float(v) for v in body.split(",")] if body else []
        except ValueError:
            raise ConfigError(f"non-numeric argument in {spec!r}") from None
    return NAMED[name](*args)


# ---------------------------------------------------------------------------
# Polyak-Lojasiewicz quantities
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    passed: bool
    witness: float | None = None
    detail: str = ""

    def __bool__(self):
        return bool(self.passed)


def _pl_ratio(pot: PiecewisePotential, x):
    g = np.asarray(pot.grad(x))
    return np.asarray(pot.value(x)) / (g * g)


def pl_constant(pot: PiecewisePotential, search_radius: float = 10.0, n_samples: int = 2001,
                min_radius: float = 1e-2) -> float:
    """Sup of V / V'^2 over min_radius <= dist(x, [a, b]) <= search_radius.

    The window is sampled log-uniformly on both wings and the sampled argmax
    is polished with a bounded golden-section/Brent search.  An infinite
    ``search_radius`` is allowed when the ratio stays bounded at infinity,
    i.e. when the top power of each wing is at least 2.
    """
    if not 0 < min_radius < search_radius:
        raise ConfigError("need 0 < min_radius < search_radius")
    for side in ("left", "right"):
        w = pot.wing(side)
        if math.isinf(search_radius) and w.max_power < 2.0:
            r = 1e6
            x = pot.b + r if side == "right" else pot.a - r
            raise PLDivergenceError(
                f"PL inequality fails globally: V/V'^2 grows like r^(2-p) on the {side} wing",
                witness=x)
    r_hi = search_radius if math.isfinite(search_radius) else 1e3
    rs = np.geomspace(min_radius, r_hi, n_samples)
    best, best_x, best_r, side_best = -np.inf, None, None, None
    for side in ("left", "right"):
        xs = pot.b + rs if side == "right" else pot.a - rs
        ratio = _pl_ratio(pot, xs)
        k = int(np.argmax(ratio))
        if ratio[k] > best:
            best, best_x, best_r, side_best = float(ratio[k]), float(xs[k]), k, side
    # polish between the neighbouring samples
    lo = rs[max(best_r - 1, 0)]
    hi = rs[min(best_r + 1, rs.size - 1)]
    if hi > lo:
        sign = 1.0 if side_best == "right" else -1.0
        base = pot.b if side_best == "right" else pot.a
        res = minimize_scalar(lambda r: -float(_pl_ratio(pot, base + sign * r)),
                              bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12 * hi})
        if -res.fun > best:
            best = float(-res.fun)
    return best


def quadratic_growth_check(pot: PiecewisePotential, c_pl: float, xs: Sequence[float],
                           rtol: float = 1e-12) -> CheckResult:
    """dist(x, argmin)^2 / (4 c_pl) <= V(x) at every sample point."""
    if c_pl <= 0:
        raise ConfigError("c_pl must be positive")
    xs = np.asarray(xs, dtype=float)
    dist = np.maximum(np.maximum(pot.a - xs, xs - pot.b), 0.0)
    lhs = dist ** 2 / (4.0 * c_pl)
    v = np.asarray(pot.value(xs))
    slack = v + rtol * np.maximum(np.abs(v), np.abs(lhs)) - lhs
    k = int(np.argmin(slack))
    if slack[k] < 0:
        return CheckResult(False, float(xs[k]), f"violation {-slack[k]:.3e} at x={xs[k]:.6g}")
    return CheckResult(True)


def gradient_flow_decay_check(pot: PiecewisePotential, c_pl: float, y0: float,
                              horizon: float = 10.0, dt: float = 1e-2) -> CheckResult:
    """Integrate y' = -V'(y) by RK4 and test V(y_s) <= exp(-s / c_pl) V(y0)."""
    if c_pl <= 0 or dt <= 0 or horizon <= 0:
        raise ConfigError("c_pl, dt and horizon must be positive")
    grad = lambda y: float(pot.grad(y))  # noqa: E731
    y = float(y0)
    v0 = float(pot.value(y))
    v_prev = v0
    n = int(math.ceil(horizon / dt))
    resolution = 1e4 * math.ulp(max(abs(pot.a), abs(pot.b), 1.0))
    for k in range(1, n + 1):
        if dt * abs(float(pot.hess(y))) > 0.1:
            raise InstabilityError(f"dt * |V''| > 0.1 at y={y:.6g}; reduce dt")
        k1 = grad(y)
        k2 = grad(y - 0.5 * dt * k1)
        k3 = grad(y - 0.5 * dt * k2)
        k4 = grad(y - dt * k3)
        y -= dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        v = float(pot.value(y))
        if max(pot.a - y, y - pot.b) < resolution:
            break  # distance to the plateau no longer representable
        if v > v_prev * (1 + 1e-12) + 1e-300:
            raise InstabilityError(f"V increased along the flow at step {k}")
        v_prev = v
        bound = math.exp(-k * dt / c_pl) * v0 * (1 + 1e-6)
        if v > bound:
            return CheckResult(False, k * dt, f"V={v:.6e} exceeds {bound:.6e} at s={k * dt:.4g}")
    return CheckResult(True)


def _convexity_samples(pot: PiecewisePotential, n: int = 400):
    span = max(pot.width, 1.0)
    return np.linspace(pot.a - 3 * span, pot.b + 3 * span, n)


def validate_assumptions(pot: PiecewisePotential) -> dict[str, CheckResult]:
    """Check each structural assumption; returns one CheckResult per bullet."""
    report: dict[str, CheckResult] = {}
    coef_ok = all(c > 0 for w in (pot.left, pot.right) for c, _ in w.terms)
    report["coefficients positive"] = CheckResult(coef_ok)
    alpha_ok = all(w.exponent >= 1.0 for w in (pot.left, pot.right))
    report["alpha >= 1"] = CheckResult(alpha_ok, detail="convexity forces alpha >= 1")
    beta_ok = all(w.exponent < 2.0 * w.beta for w in (pot.left, pot.right))
    report["alpha < 2 beta"] = CheckResult(beta_ok)

    xs = _convexity_samples(pot)
    v = np.asarray(pot.value(xs))
    report["nonnegative, min 0 on plateau"] = CheckResult(
        bool(np.all(v >= 0) and float(pot.value(0.5 * (pot.a + pot.b))) == 0.0))
    # Three-point convexity and monotone derivative on a sample grid.
    x0, x1, x2 = xs[:-2], xs[1:-1], xs[2:]
    chord = ((x2 - x1) * v[:-2] + (x1 - x0) * v[2:]) / (x2 - x0)
    conv = bool(np.all(v[1:-1] <= chord + 1e-12 * np.maximum(1.0, np.abs(chord))))
    g = np.asarray(pot.grad(xs))
    mono = bool(np.all(np.diff(g) >= -1e-12 * np.maximum(1.0, np.abs(g[1:]))))
    report["convex"] = CheckResult(conv and mono and alpha_ok and coef_ok)
    report["integrable"] = CheckResult(coef_ok and all(w.exponent > 0 for w in (pot.left, pot.right)))
    return report
