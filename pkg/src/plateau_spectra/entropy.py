"""Log-Sobolev constants by direct maximisation of the entropy quotient.

The quotient Ent(f^2) / (2 int f'^2) is evaluated for piecewise-linear f on a
:class:`WeightedMesh`; the entropy integrand is sampled at the mesh's Gauss
points.  Maximisation only ever under-estimates the supremum, so the reported
constant is a lower bound; the matching upper bound comes from tightening a
defective inequality with the Poincare constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .exceptions import ConfigError
from .mesh import GridSpec, WeightedMesh, build_mesh
from .potential import PiecewisePotential
from .quadrature import wing_masses
from .spectral import (assemble_mesh, bakry_emery_bound, cell_conductance, dirichlet_energy,
                       laplacian_dot, poincare_constant)

CLIP = 1e-30
DEFAULT_AMPLITUDES = tuple(np.logspace(-3, 0, 13))


@dataclass
class LsiResult:
    c_ls: float
    lower_bound: float
    upper_bound: float
    extremal_values: np.ndarray = field(repr=False)
    restarts_used: int
    converged: bool
    c_p: float = math.nan
    best_quotient: float = math.nan
    amplitude: float = math.nan
    iterations: int = 0
    diagnostics: list = field(default_factory=list, repr=False)


def _relative_entropy_density(s, m):
    # m * (u log u - u + 1) with u = s / m; nonnegative and cancellation-free
    # for u near 1, with 0 log 0 = 0 through the clip.
    delta = (s - m) / m
    u = np.maximum(1.0 + delta, CLIP)
    log_u = np.where(delta > -0.5, np.log1p(np.maximum(delta, -0.5)), np.log(u))
    return m * (u * log_u - delta)


def _second_moment(f, mesh: WeightedMesh):
    fq = mesh.at_qp(f)
    s = fq * fq
    m = mesh.expect(s)
    if not m > 0:
        raise ConfigError("entropy of the zero function is undefined")
    return fq, s, m


def entropy_functional(f, mesh: WeightedMesh) -> float:
    """Ent(f^2) under the normalised mesh measure, with 0 log 0 = 0."""
    _, s, m = _second_moment(np.asarray(f, dtype=float), mesh)
    return max(mesh.expect(_relative_entropy_density(s, m)), 0.0)


def lsi_rayleigh(f, mesh: WeightedMesh, conductance=None) -> float:
    """Ent(f^2) / (2 int f'^2 dmu); ``conductance`` defaults to the mesh's cell
    conductances (the off-diagonal of the stiffness matrix, negated)."""
    f = np.asarray(f, dtype=float)
    if conductance is None:
        conductance = cell_conductance(mesh)
    d = dirichlet_energy(conductance, f) / mesh.z
    if not d > 0:
        raise ConfigError("quotient undefined: f has zero Dirichlet energy")
    return entropy_functional(f, mesh) / (2.0 * d)


def _value_and_grad(f, mesh: WeightedMesh, conductance):
    fq, s, m = _second_moment(f, mesh)
    z = mesh.z
    ent = mesh.expect(_relative_entropy_density(s, m))
    kf = laplacian_dot(conductance, f)
    d = dirichlet_energy(conductance, f) / z
    q = ent / (2.0 * d)
    g_ent = mesh.scatter(mesh.qp_w * 2.0 * fq * np.log(np.maximum(s, CLIP) / m)) / z
    g_d = 2.0 * kf / z
    grad = g_ent / (2.0 * d) - ent * g_d / (2.0 * d * d)
    return q, grad


def _normalise(f, mesh: WeightedMesh):
    return f / math.sqrt(mesh.expect(mesh.at_qp(f) ** 2))


def _ascend(f, mesh, conductance, precond, max_iter, tol, window=50):
    """Preconditioned gradient ascent with backtracking; returns (q, f, iters, converged)."""
    f = _normalise(f, mesh)
    q, grad = _value_and_grad(f, mesh, conductance)
    sub, dia = precond
    step = 1.0
    history = [q]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        direction = _kernels.tridiag_solve(sub, dia, sub, grad)
        slope = float(np.dot(grad, direction))
        if not slope > 0:
            converged = True
            break
        accepted = False
        for _ in range(40):
            trial = f + step * direction
            if trial.min() > -1e-12 * abs(trial).max():
                try:
                    q_new, g_new = _value_and_grad(_normalise(trial, mesh), mesh, conductance)
                except (ZeroDivisionError, ValueError, FloatingPointError):
                    q_new = -math.inf
                if math.isfinite(q_new) and q_new >= q + 1e-4 * step * slope:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            converged = True
            break
        f = _normalise(trial, mesh)
        q, grad = q_new, g_new
        step *= 2.0
        history.append(q)
        if len(history) > window and history[-1] - history[-1 - window] <= tol * abs(history[-1]):
            converged = True
            break
    return q, f, it, converged


def _smooth_perturbation(nodes, rng, n_modes=6):
    lo, hi = nodes[0], nodes[-1]
    u = (nodes - lo) / (hi - lo)
    k = np.arange(1, n_modes + 1)
    coef = rng.standard_normal(n_modes) / k
    g = np.cos(np.pi * np.outer(u, k)) @ coef
    return g / np.max(np.abs(g))


def maximise_quotient(mesh: WeightedMesh, seed_function, *, restarts: int = 2, max_iter: int = 400,
                      tol: float = 1e-10, amplitudes=DEFAULT_AMPLITUDES, seed: int = 0):
    """Best entropy quotient over warm starts 1 + s g and seeded random restarts.

    Returns (best_q, best_f, best_s, iterations, converged, restarts_used, diagnostics).
    """
    k, m = assemble_mesh(mesh)
    cond = cell_conductance(mesh)
    scale = 1.0 / mesh.z
    precond = ((k.off + m.off) * scale, (k.diag + m.diag) * scale)
    g = np.asarray(seed_function, dtype=float)
    g = g / np.max(np.abs(g))
    rng = np.random.default_rng(seed)
    starts = []
    scan = []
    for s in amplitudes:
        f = 1.0 + s * g
        if f.min() <= 0:
            continue
        try:
            q = lsi_rayleigh(f, mesh, cond)
        except ConfigError:
            continue
        scan.append((q, s))
    if not scan:
        raise ConfigError("no admissible warm start; check the seed function")
    scan.sort(reverse=True)
    q0, s0 = scan[0]
    starts.append(("warm", s0, 1.0 + s0 * g))
    for _ in range(restarts):
        s = float(rng.choice(np.asarray(amplitudes)))
        p = _smooth_perturbation(mesh.nodes, rng)
        starts.append(("random", s, 1.0 + min(s, 0.9) * p))
    best = (-math.inf, None, math.nan, False)
    total_iters = 0
    diagnostics = []
    used = 0
    for kind, s, f in starts:
        try:
            q, f_opt, iters, conv = _ascend(f, mesh, cond, precond, max_iter, tol)
        except (ValueError, FloatingPointError) as exc:
            diagnostics.append(f"{kind} start s={s:.3g} diverged: {exc}")
            continue
        if kind == "random":
            used += 1
        total_iters += iters
        diagnostics.append(f"{kind} start s={s:.3g}: q={q:.15g} iters={iters} converged={conv}")
        if q > best[0]:
            best = (q, f_opt, s, conv)
    if best[1] is None:
        return q0, 1.0 + s0 * g, s0, total_iters, False, used, diagnostics
    return best[0], best[1], best[2], total_iters, best[3], used, diagnostics


def rothaus_tighten(A: float, B: float, c_p: float) -> float:
    """Tight constant A + (B / 2) c_p from a defective inequality (A, B)."""
    if min(A, B, c_p) < 0:
        raise ConfigError("defective constants and c_p must be nonnegative")
    return A + 0.5 * B * c_p


def defective_lsi_components(pot: PiecewisePotential, t: float,
                             grid: GridSpec | None = None) -> tuple[float, float]:
    """(A, B) with Ent(f^2) <= 2 A int f'^2 + B int f^2 for mu_t.

    Splits the line into left wing, plateau and right wing.  On each piece the
    conditional measure has its own log-Sobolev constant (t / kappa on a wing
    by strong convexity, the segment value on the plateau) and the mixing
    term is bounded by mass * phi(1 / mass) = log(1 / mass).
    """
    if t < 0:
        raise ConfigError(f"temperature must be >= 0, got {t}")
    if not pot.quadratic_wings:
        raise ConfigError("defective components need quadratic wings")
    pieces = []
    consts = []
    if t == 0:
        pieces = [1.0]
    else:
        left, mid, right = wing_masses(pot, t, grid)
        z = left + mid + right
        pieces = [left / z, mid / z, right / z]
        consts += [t / pot.kappa_a, t / pot.kappa_b]
    if not pot.degenerate:
        consts.append(pot.width ** 2 / math.pi ** 2)
    A = max(consts)
    B = float(sum(-math.log(p) for p in pieces if p > 0))
    return A, B


def lsi_constant(pot: PiecewisePotential, t: float, grid: GridSpec | None = None, *,
                 restarts: int = 2, max_iter: int = 400, tol: float = 1e-10,
                 amplitude_grid=DEFAULT_AMPLITUDES, seed: int = 0,
                 mesh: WeightedMesh | None = None) -> LsiResult:
    """Numerical C_LS(mu_t) bracketed by [lower_bound, upper_bound].

    The quotient of 1 + s g1 tends to c_p as s -> 0, so c_ls is reported as
    max(best quotient, c_p); the optimiser's own best value is kept in
    ``best_quotient``.
    """
    if t < 0:
        raise ConfigError(f"temperature must be >= 0, got {t}")
    mesh = mesh or build_mesh(pot, t, grid)
    spec = poincare_constant(pot, t, mesh=mesh)
    q, f, s, iters, conv, used, diag = maximise_quotient(
        mesh, spec.eigenfunction, restarts=restarts, max_iter=max_iter, tol=tol,
        amplitudes=amplitude_grid, seed=seed)
    c_ls = max(q, spec.c_p)
    upper = math.inf
    if pot.quadratic_wings:
        A, B = defective_lsi_components(pot, t, grid)
        upper = rothaus_tighten(A, B, spec.c_p)
    be = bakry_emery_bound(pot, t)
    if be is not None:
        upper = min(upper, be)
    return LsiResult(c_ls=c_ls, lower_bound=c_ls, upper_bound=upper,
                     extremal_values=f, restarts_used=used, converged=conv, c_p=spec.c_p,
                     best_quotient=q, amplitude=s, iterations=iters, diagnostics=diag)
