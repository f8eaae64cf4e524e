"""Truncated, boundary-layer refined 1D meshes carrying Gibbs weights.

Every integral against exp(-V/t) in the package goes through a
:class:`WeightedMesh`: 8-point Gauss-Legendre per cell, with the weight
folded into the quadrature weights.  Cells never straddle the plateau ends,
so the integrand is smooth on each cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError
from .potential import PiecewisePotential, WingSpec

GL_ORDER = 8
_GX, _GW = np.polynomial.legendre.leggauss(GL_ORDER)
GL_THETA = 0.5 * (_GX + 1.0)
GL_WEIGHTS = 0.5 * _GW


@dataclass(frozen=True)
class GridSpec:
    """Mesh construction parameters.

    truncation: the wings are cut where V / t reaches this level.
    n_plateau: number of uniform cells on [a, b].
    layer_cells_per_scale: cells per boundary-layer width (a_side t)**(1/alpha).
    refinement_ratio: cell sizes grow by this factor per layer width outward.
    """

    truncation: float = 40.0
    n_plateau: int = 2000
    layer_cells_per_scale: int = 16
    refinement_ratio: float = 1.5

    def __post_init__(self):
        if not self.truncation >= 30:
            raise ConfigError("grid truncation must be >= 30")
        if int(self.n_plateau) != self.n_plateau or self.n_plateau < 64:
            raise ConfigError("grid n_plateau must be an integer >= 64")
        if int(self.layer_cells_per_scale) != self.layer_cells_per_scale or self.layer_cells_per_scale < 8:
            raise ConfigError("grid layer_cells_per_scale must be an integer >= 8")
        if not self.refinement_ratio > 1:
            raise ConfigError("grid refinement_ratio must be > 1")

    def to_dict(self) -> dict:
        return {"truncation": self.truncation, "n_plateau": self.n_plateau,
                "layer_cells_per_scale": self.layer_cells_per_scale,
                "refinement_ratio": self.refinement_ratio}

    @classmethod
    def from_dict(cls, d: dict | None) -> "GridSpec":
        d = dict(d or {})
        unknown = set(d) - {"truncation", "n_plateau", "layer_cells_per_scale", "refinement_ratio"}
        if unknown:
            raise ConfigError(f"unknown grid field(s): {sorted(unknown)}")
        kw = {}
        try:
            for k, v in d.items():
                kw[k] = int(v) if k in ("n_plateau", "layer_cells_per_scale") else float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"grid field {k!r} has invalid value {v!r}") from None
        return cls(**kw)


def layer_width(wing: WingSpec, t: float) -> float:
    """Distance at which V / t = 1 for the leading term: (t / c)**(1/alpha)."""
    return (t / wing.coefficient) ** (1.0 / wing.exponent)


def wing_offsets(wing: WingSpec, t: float, grid: GridSpec) -> np.ndarray:
    """Distances 0 = r_0 < r_1 < ... < r_max from the plateau end into one wing."""
    ell = layer_width(wing, t)
    r_max = wing.distance_at_level(grid.truncation * t)
    h = ell / grid.layer_cells_per_scale
    growth = grid.refinement_ratio ** (1.0 / grid.layer_cells_per_scale)
    rs = [0.0]
    r = 0.0
    while r + h < r_max:
        # stay uniform across the first layer width
        r += h
        rs.append(r)
        if r >= ell:
            h *= growth
    if r_max - rs[-1] < 0.5 * h and len(rs) > 1:
        rs[-1] = r_max
    else:
        rs.append(r_max)
    return np.asarray(rs)


def build_nodes(pot: PiecewisePotential, t: float, grid: GridSpec) -> np.ndarray:
    if t < 0 or not math.isfinite(t):
        raise ConfigError(f"temperature must be finite and >= 0, got {t}")
    if pot.degenerate:
        if t == 0:
            raise ConfigError("t = 0 with a degenerate plateau is a Dirac mass")
        plateau = np.array([pot.a])
    else:
        plateau = np.linspace(pot.a, pot.b, grid.n_plateau + 1)
    if t == 0:
        return plateau
    left = pot.a - wing_offsets(pot.left, t, grid)[1:][::-1]
    right = pot.b + wing_offsets(pot.right, t, grid)[1:]
    return np.concatenate([left, plateau, right])


def refine_nodes(nodes: np.ndarray) -> np.ndarray:
    """Bisect every cell (nested refinement)."""
    out = np.empty(2 * nodes.size - 1)
    out[0::2] = nodes
    out[1::2] = 0.5 * (nodes[:-1] + nodes[1:])
    return out


@dataclass
class WeightedMesh:
    """Nodes plus quadrature data for integrals against exp(-V/t).

    ``qp_w`` already contains the Gibbs weight, so sum(qp_w * F(qp_x)) is the
    unnormalised integral of F.  ``qp_left``, ``qp_right`` and ``qp_theta``
    describe how nodal values are linearly interpolated to quadrature points.
    """

    nodes: np.ndarray
    cell_weights: np.ndarray
    node_weights: np.ndarray
    qp_x: np.ndarray
    qp_w: np.ndarray
    qp_left: np.ndarray
    qp_right: np.ndarray
    qp_theta: np.ndarray
    t: float = 0.0
    z: float = 1.0

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.size)

    @classmethod
    def from_nodes(cls, pot: PiecewisePotential | None, t: float, nodes) -> "WeightedMesh":
        nodes = np.asarray(nodes, dtype=float)
        if nodes.size < 2:
            raise ConfigError("mesh needs at least two nodes")
        h = np.diff(nodes)
        if np.any(h <= 0):
            raise ConfigError("mesh nodes must be strictly increasing")
        n_cells = h.size
        qx = nodes[:-1, None] + h[:, None] * GL_THETA[None, :]
        base_w = h[:, None] * GL_WEIGHTS[None, :]
        if pot is None or t == 0:
            gibbs = np.ones_like(qx)
        else:
            gibbs = np.exp(-np.asarray(pot.value(qx.ravel())).reshape(qx.shape) / t)
        qw = base_w * gibbs
        cell_w = qw.sum(axis=1)
        node_w = np.zeros(nodes.size)
        node_w[:-1] += 0.5 * cell_w
        node_w[1:] += 0.5 * cell_w
        idx = np.repeat(np.arange(n_cells), GL_ORDER)
        return cls(
            nodes=nodes, cell_weights=cell_w, node_weights=node_w,
            qp_x=qx.ravel(), qp_w=qw.ravel(), qp_left=idx, qp_right=idx + 1,
            qp_theta=np.tile(GL_THETA, n_cells), t=float(t), z=float(cell_w.sum()))

    @classmethod
    def discrete(cls, nodes, weights) -> "WeightedMesh":
        """A purely atomic measure: integrals are weighted sums over nodes."""
        nodes = np.asarray(nodes, dtype=float)
        weights = np.asarray(weights, dtype=float)
        idx = np.arange(nodes.size)
        return cls(nodes=nodes, cell_weights=np.zeros(max(nodes.size - 1, 0)),
                   node_weights=weights, qp_x=nodes.copy(), qp_w=weights.copy(),
                   qp_left=idx, qp_right=idx, qp_theta=np.zeros(nodes.size),
                   t=0.0, z=float(weights.sum()))

    def at_qp(self, f):
        f = np.asarray(f, dtype=float)
        return (1.0 - self.qp_theta) * f[self.qp_left] + self.qp_theta * f[self.qp_right]

    def integrate(self, fq) -> float:
        """Unnormalised integral of quadrature-point values."""
        return float(np.dot(self.qp_w, fq))

    def expect(self, fq) -> float:
        return self.integrate(fq) / self.z

    def scatter(self, gq):
        """Adjoint of :meth:`at_qp`: sum quadrature-point values back onto nodes."""
        n = self.nodes.size
        out = np.bincount(self.qp_left, weights=(1.0 - self.qp_theta) * gq, minlength=n)
        out += np.bincount(self.qp_right, weights=self.qp_theta * gq, minlength=n)
        return out


def build_mesh(pot: PiecewisePotential, t: float, grid: GridSpec | None = None,
               refine: int = 0) -> WeightedMesh:
    grid = grid or GridSpec()
    nodes = build_nodes(pot, t, grid)
    for _ in range(refine):
        nodes = refine_nodes(nodes)
    return WeightedMesh.from_nodes(pot, t, nodes)
