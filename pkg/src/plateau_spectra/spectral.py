"""Poincare constants as inverse spectral gaps of the weighted Neumann problem.

Discretisation: continuous piecewise-linear elements on a :class:`WeightedMesh`.
The stiffness matrix is the weighted Dirichlet form, the mass matrix the
consistent weighted L2 form; both are symmetric tridiagonal, so the smallest
nonzero eigenvalue of the pencil (K, M) is located by Sturm-count bisection
and its eigenvector by inverse iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .exceptions import ConfigError, ConvergenceError
from .mesh import GL_ORDER, GridSpec, WeightedMesh, build_mesh
from .potential import PiecewisePotential

RESIDUAL_TOL = 1e-8


@dataclass
class Tridiagonal:
    """Symmetric tridiagonal matrix stored as (diag, off)."""

    diag: np.ndarray
    off: np.ndarray

    def dot(self, v):
        out = self.diag * v
        out[:-1] += self.off * v[1:]
        out[1:] += self.off * v[:-1]
        return out

    def quad(self, v) -> float:
        return float(np.dot(v, self.dot(v)))

    def toarray(self):
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def __add__(self, other: "Tridiagonal") -> "Tridiagonal":
        return Tridiagonal(self.diag + other.diag, self.off + other.off)

    def scaled(self, s: float) -> "Tridiagonal":
        return Tridiagonal(s * self.diag, s * self.off)


@dataclass
class SpectralResult:
    lambda1: float
    c_p: float
    eigenfunction: np.ndarray
    residual: float
    mesh_size: int
    nodes: np.ndarray = field(repr=False, default=None)
    rayleigh: float = math.nan
    mesh: WeightedMesh | None = field(repr=False, default=None)

    def eigenfunction_at(self, x):
        return np.interp(x, self.nodes, self.eigenfunction)


def cell_conductance(mesh: WeightedMesh) -> np.ndarray:
    h = np.diff(mesh.nodes)
    return mesh.cell_weights / (h * h)


def dirichlet_energy(conductance: np.ndarray, f) -> float:
    """sum over cells of conductance * (jump of f)^2, free of the cancellation
    that f^T K f suffers for nearly constant f."""
    df = np.diff(f)
    return float(np.dot(conductance, df * df))


def laplacian_dot(conductance: np.ndarray, f) -> np.ndarray:
    """K f assembled from cell fluxes."""
    flux = conductance * np.diff(f)
    out = np.zeros(np.size(f))
    out[:-1] -= flux
    out[1:] += flux
    return out


def stiffness_matrix(mesh: WeightedMesh) -> Tridiagonal:
    kc = cell_conductance(mesh)
    diag = np.zeros(mesh.n_nodes)
    diag[:-1] += kc
    diag[1:] += kc
    return Tridiagonal(diag, -kc)


def mass_matrix(mesh: WeightedMesh, lumped: bool = False) -> Tridiagonal:
    if lumped:
        return Tridiagonal(mesh.node_weights.copy(), np.zeros(mesh.n_nodes - 1))
    n_cells = mesh.n_nodes - 1
    w = mesh.qp_w.reshape(n_cells, GL_ORDER)
    th = mesh.qp_theta.reshape(n_cells, GL_ORDER)
    m_ll = (w * (1 - th) ** 2).sum(axis=1)
    m_lr = (w * th * (1 - th)).sum(axis=1)
    m_rr = (w * th ** 2).sum(axis=1)
    diag = np.zeros(mesh.n_nodes)
    diag[:-1] += m_ll
    diag[1:] += m_rr
    return Tridiagonal(diag, m_lr)


def assemble_mesh(mesh: WeightedMesh, lumped: bool = False) -> tuple[Tridiagonal, Tridiagonal]:
    if mesh.n_nodes < 2:
        raise ConfigError("cannot assemble on an empty mesh")
    return stiffness_matrix(mesh), mass_matrix(mesh, lumped)


def assemble(pot: PiecewisePotential, t: float, grid: GridSpec | None = None,
             lumped: bool = False):
    """(stiffness, mass, mesh) for mu_t; mass is consistent unless ``lumped``."""
    if t < 0:
        raise ConfigError(f"temperature must be >= 0, got {t}")
    mesh = build_mesh(pot, t, grid)
    k, m = assemble_mesh(mesh, lumped)
    return k, m, mesh


def _deflate(v, m1, one_m_one):
    return v - (np.dot(m1, v) / one_m_one)


def _bisect_second_eigenvalue(k: Tridiagonal, m: Tridiagonal, hi: float, rtol: float = 4e-16,
                              n_shifts: int = 32, max_sweeps: int = 80) -> float:
    lo = 0.0
    counts = _kernels.sturm_counts(k.diag, k.off, m.diag, m.off, np.array([hi]))
    while counts[0] < 2:
        hi *= 2.0
        counts = _kernels.sturm_counts(k.diag, k.off, m.diag, m.off, np.array([hi]))
    for _ in range(max_sweeps):
        if hi - lo <= rtol * hi:
            break
        shifts = np.linspace(lo, hi, n_shifts + 2)[1:-1]
        c = _kernels.sturm_counts(k.diag, k.off, m.diag, m.off, shifts)
        below = np.nonzero(c <= 1)[0]
        above = np.nonzero(c >= 2)[0]
        if below.size:
            lo = max(lo, shifts[below[-1]])
        if above.size:
            hi = min(hi, shifts[above[0]])
    return 0.5 * (lo + hi)


def solve_pencil(k: Tridiagonal, m: Tridiagonal, z: float = 1.0, max_iter: int = 8,
                 tol: float = RESIDUAL_TOL, x_probe=None):
    """Smallest nonzero eigenpair of K v = lambda M v with K 1 = 0.

    Returns (lambda1, v, residual) with v M-orthogonal to constants and
    v^T M v = z.
    """
    n = k.diag.size
    m1 = m.dot(np.ones(n))
    one_m_one = float(m1.sum())
    probe = np.linspace(-1.0, 1.0, n) if x_probe is None else np.asarray(x_probe, dtype=float)
    v = _deflate(probe, m1, one_m_one)
    rq = k.quad(v) / m.quad(v)
    lam = _bisect_second_eigenvalue(k, m, rq * (1 + 1e-10) + 1e-300)
    if not lam > 0:
        raise ConvergenceError(f"nonpositive spectral gap {lam}; check the assembly")
    sub = k.off - lam * m.off
    dia = k.diag - lam * m.diag
    residual = math.inf
    for _ in range(max_iter):
        y = _kernels.tridiag_solve(sub, dia, sub, m.dot(v))
        y = _deflate(y, m1, one_m_one)
        v = y / math.sqrt(m.quad(y))
        mv = m.dot(v)
        residual = float(np.linalg.norm(k.dot(v) - lam * mv) / (lam * np.linalg.norm(mv)))
        if residual <= tol * 1e-2:
            break
    if not residual <= tol:
        raise ConvergenceError(f"eigen-residual {residual:.2e} above {tol:g}")
    v = v * math.sqrt(z)
    if v[-1] < v[0]:
        v = -v
    return lam, v, residual


def poincare_constant(pot: PiecewisePotential, t: float, grid: GridSpec | None = None,
                      mesh: WeightedMesh | None = None, tol: float = RESIDUAL_TOL) -> SpectralResult:
    """C_P(mu_t) = 1 / lambda_1 for the discretised weighted Neumann problem.

    t = 0 gives the uniform measure on the plateau (solved on the plateau mesh).
    The eigenfunction is normalised to mean 0 and unit L2(mu_t) norm, with the
    sign chosen so that it increases from left to right.
    """
    if mesh is None:
        if t < 0:
            raise ConfigError(f"temperature must be >= 0, got {t}")
        mesh = build_mesh(pot, t, grid)
    k, m = assemble_mesh(mesh)
    lam, v, res = solve_pencil(k, m, z=mesh.z, tol=tol, x_probe=mesh.nodes)
    rayleigh = m.quad(v) / dirichlet_energy(cell_conductance(mesh), v)
    return SpectralResult(lambda1=lam, c_p=1.0 / lam, eigenfunction=v, residual=res,
                          mesh_size=mesh.n_nodes, nodes=mesh.nodes, rayleigh=rayleigh, mesh=mesh)


def neumann_baseline(a: float, b: float):
    """Exact constant (b - a)^2 / pi^2 of the uniform measure on [a, b] and its
    extremal function x -> sin(pi (x - (a + b)/2) / (b - a))."""
    if not a < b:
        raise ConfigError("need a < b")
    width = b - a
    mid = 0.5 * (a + b)
    return width ** 2 / math.pi ** 2, lambda x: np.sin(math.pi * (np.asarray(x) - mid) / width)


def _neumann_inverse(conductance: np.ndarray, y: np.ndarray) -> np.ndarray:
    # Solves K x = y (sum y = 0) for the 1D weighted Laplacian through fluxes.
    flux = -np.cumsum(y[:-1])
    x = np.empty(y.size)
    x[0] = 0.0
    np.cumsum(flux / conductance, out=x[1:])
    return x


def max_constrained_rayleigh(conductance: np.ndarray, m: Tridiagonal, w: np.ndarray,
                             rtol: float = 1e-13, max_iter: int = 2000):
    """sup of g^T M g / g^T K g over g with w^T g = 0, K the Neumann Laplacian
    with cell conductances ``conductance``.

    Power iteration on g -> P K^{-1} (M g - eta w), which is self-adjoint in
    the K inner product on the constraint space.
    """
    n = m.diag.size
    one_w = float(w.sum())
    g = np.linspace(-1.0, 1.0, n)
    g -= np.dot(w, g) / one_w
    c_old = 0.0
    c = 0.0
    change = math.inf
    for _ in range(max_iter):
        mg = m.dot(g)
        eta = mg.sum() / one_w
        g = _neumann_inverse(conductance, mg - eta * w)
        g -= np.dot(w, g) / one_w
        g /= math.sqrt(dirichlet_energy(conductance, g))
        c = m.quad(g)
        change = abs(c - c_old)
        if change <= rtol * c:
            break
        c_old = c
    if change > 1e-9 * c:
        raise ConvergenceError(f"power iteration stalled, last change {change:.2e}")
    return c, g


def surrogate_constant(pot: PiecewisePotential, t: float, grid: GridSpec | None = None,
                       return_function: bool = False):
    """Boundary-augmented plateau constant C_t.

    sup over g on [a, b] with zero plateau mean of
        (int_a^b g^2 + sqrt(pi t / (2 kappa_a)) g(a)^2 + sqrt(pi t / (2 kappa_b)) g(b)^2)
        / int_a^b g'^2.
    """
    if not pot.quadratic_wings:
        raise ConfigError("surrogate constant needs quadratic wings")
    if pot.degenerate:
        raise ConfigError("surrogate constant needs a non-degenerate plateau")
    if t < 0:
        raise ConfigError(f"temperature must be >= 0, got {t}")
    grid = grid or GridSpec()
    mesh = build_mesh(pot, 0.0, grid)
    m0 = mass_matrix(mesh)
    w = m0.dot(np.ones(mesh.n_nodes))
    m = Tridiagonal(m0.diag.copy(), m0.off.copy())
    m.diag[0] += math.sqrt(math.pi * t / (2 * pot.kappa_a))
    m.diag[-1] += math.sqrt(math.pi * t / (2 * pot.kappa_b))
    c, g = max_constrained_rayleigh(cell_conductance(mesh), m, w)
    if return_function:
        return c, mesh.nodes, g
    return c


def bakry_emery_bound(pot: PiecewisePotential, t: float):
    """t / rho when V is rho-strongly convex (rho = inf V'' > 0), else None."""
    if not pot.degenerate:
        return None
    rs = np.concatenate([[0.0], np.geomspace(1e-8, 1e3, 400)])
    rho = min(float(np.min(w.hess(rs))) for w in (pot.left, pot.right))
    if not rho > 0 or not math.isfinite(rho):
        return None
    return t / rho
