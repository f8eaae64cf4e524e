"""Overdamped Langevin simulation of dX = -V'(X)/t ds + sqrt(2) dB and
autocorrelation-based estimates of the spectral gap."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import _kernels
from .exceptions import ConfigError, InstabilityError, NumericalError
from .mesh import GridSpec, build_mesh, layer_width
from .potential import PiecewisePotential
from .spectral import poincare_constant

OBSERVABLES = ("gap-eigenfunction", "coordinate", "custom-nodes")
CHUNK = 1 << 15


@dataclass
class SimConfig:
    t: float
    dt: float
    n_steps: int
    n_chains: int = 32
    burn_in: int = 0
    seed: int = 0
    observable: str = "gap-eigenfunction"
    record_every: int = 10
    custom_values: tuple = field(default_factory=tuple)

    def __post_init__(self):
        self.custom_values = tuple(float(v) for v in self.custom_values)
        if not (self.t > 0 and self.dt > 0):
            raise ConfigError("t and dt must be positive")
        for name in ("n_steps", "n_chains", "record_every"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.burn_in < 0:
            raise ConfigError("burn_in must be >= 0")
        if self.observable not in OBSERVABLES:
            raise ConfigError(f"observable must be one of {OBSERVABLES}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["custom_values"] = list(self.custom_values)
        return d


def max_curvature(pot: PiecewisePotential, t: float, grid: GridSpec | None = None) -> float:
    """sup |V''| over the truncated simulation domain."""
    nodes = build_mesh(pot, t, grid).nodes
    return float(np.max(np.abs(pot.hess(nodes))))


def check_config(pot: PiecewisePotential, cfg: SimConfig, c_p: float,
                 grid: GridSpec | None = None) -> SimConfig:
    """Reject unstable steps; raise burn-in to ten relaxation times if needed."""
    h = max_curvature(pot, cfg.t, grid)
    if cfg.dt * h / cfg.t > 0.1:
        raise ConfigError(f"unstable step: dt * sup|V''| / t = {cfg.dt * h / cfg.t:.3g} > 0.1; "
                          f"use dt <= {0.1 * cfg.t / h:.3g}")
    needed = int(math.ceil(10.0 * c_p / cfg.dt))
    if cfg.burn_in < needed:
        warnings.warn(f"burn_in raised from {cfg.burn_in} to {needed} steps")
        cfg = SimConfig(**{**cfg.to_dict(), "burn_in": needed})
    return cfg


@dataclass
class SimSummary:
    t: float
    dt: float
    record_dt: float
    observable: np.ndarray = field(repr=False)
    positions: np.ndarray = field(repr=False)
    mean: float = math.nan
    variance: float = math.nan
    stderr_mean: float = math.nan
    plateau_fraction: float = math.nan
    c_p_reference: float = math.nan
    config: SimConfig | None = None


def _chain_generators(seed: int, n_chains: int):
    # Philox is counter based; each chain gets its own spawned key.
    children = np.random.SeedSequence(int(seed)).spawn(n_chains)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def _initial_states(mesh, gens):
    # inverse CDF of mu_t on the mesh (piecewise-linear cumulative mass)
    cdf = np.concatenate([[0.0], np.cumsum(mesh.cell_weights)])
    cdf /= cdf[-1]
    u = np.array([g.random() for g in gens])
    return np.interp(u, cdf, mesh.nodes)


def _run(pot, cfg: SimConfig, mesh, halve: bool):
    """Drive all chains; two normals are drawn per coarse step so that the
    halved-step path shares the coarse path's Brownian increments."""
    gens = _chain_generators(cfg.seed, cfg.n_chains)
    x = _initial_states(mesh, gens)
    a, b, lc, lp, rc, rp = pot.flat_arrays()
    pad_l = 10 * layer_width(pot.left, cfg.t)
    pad_r = 10 * layer_width(pot.right, cfg.t)
    xmin, xmax = mesh.nodes[0] - pad_l, mesh.nodes[-1] + pad_r
    total = cfg.burn_in + cfg.n_steps
    n_rec = cfg.n_steps // cfg.record_every
    rec = np.empty((cfg.n_chains, n_rec))
    k = 0
    done = 0
    while done < total:
        chunk = min(CHUNK, total - done)
        # keep chunk boundaries aligned with burn-in and recording
        if done < cfg.burn_in:
            chunk = min(chunk, cfg.burn_in - done)
        else:
            chunk = max(cfg.record_every, chunk - chunk % cfg.record_every)
            chunk = min(chunk, total - done)
        z = np.stack([g.standard_normal((chunk, 2)) for g in gens])
        if halve:
            noise, dt, every = z.reshape(cfg.n_chains, 2 * chunk), 0.5 * cfg.dt, 2 * cfg.record_every
        else:
            noise, dt, every = z.sum(axis=2) / math.sqrt(2.0), cfg.dt, cfg.record_every
        if done < cfg.burn_in:
            every = noise.shape[1]
        out, x, failed = _kernels.em_chains(x, noise, dt, cfg.t, every, a, b, lc, lp, rc, rp, xmin, xmax)
        if np.any(failed >= 0):
            c = int(np.argmax(failed >= 0))
            raise InstabilityError(
                f"chain {c} left [{xmin:.4g}, {xmax:.4g}] at step {done + int(failed[c])}; "
                f"reduce dt (currently {cfg.dt:g})")
        if done >= cfg.burn_in:
            m = out.shape[1]
            rec[:, k:k + m] = out
            k += m
        done += chunk
    return rec[:, :k]


def _observable_values(cfg: SimConfig, positions, spec, mesh):
    if cfg.observable == "coordinate":
        return positions.copy()
    if cfg.observable == "gap-eigenfunction":
        return np.interp(positions, spec.nodes, spec.eigenfunction)
    vals = np.asarray(cfg.custom_values, dtype=float)
    if vals.size != mesh.n_nodes:
        raise ConfigError(f"custom observable needs {mesh.n_nodes} nodal values, got {vals.size}")
    return np.interp(positions, mesh.nodes, vals)


def simulate(pot: PiecewisePotential, cfg: SimConfig, grid: GridSpec | None = None,
             halve_dt: bool = False) -> SimSummary:
    """Run ``cfg.n_chains`` Euler-Maruyama chains started from mu_t.

    With ``halve_dt`` the same Brownian paths are integrated with step dt / 2,
    which isolates the step-size bias from Monte Carlo noise.
    """
    mesh = build_mesh(pot, cfg.t, grid)
    spec = poincare_constant(pot, cfg.t, mesh=mesh)
    cfg = check_config(pot, cfg, spec.c_p, grid)
    positions = _run(pot, cfg, mesh, halve_dt)
    obs = _observable_values(cfg, positions, spec, mesh)
    chain_means = obs.mean(axis=1)
    in_plateau = ((positions >= pot.a) & (positions <= pot.b)).mean()
    return SimSummary(
        t=cfg.t, dt=cfg.dt * (0.5 if halve_dt else 1.0), record_dt=cfg.dt * cfg.record_every,
        observable=obs, positions=positions, mean=float(obs.mean()), variance=float(obs.var()),
        stderr_mean=float(chain_means.std(ddof=1) / math.sqrt(obs.shape[0])) if obs.shape[0] > 1 else math.nan,
        plateau_fraction=float(in_plateau), c_p_reference=spec.c_p, config=cfg)


def autocorrelation(series, max_lag: int, mean: float | None = None) -> np.ndarray:
    """Pooled autocorrelation of (chains, n) series up to ``max_lag``."""
    y = np.atleast_2d(np.asarray(series, dtype=float))
    mu = y.mean() if mean is None else mean
    sums, counts = _kernels.lag_sums(y - mu, max_lag)
    acov = sums / counts
    return acov / acov[0]


def _fit_rate(rho, record_dt):
    below = np.nonzero(rho < 0.05)[0]
    if below.size == 0:
        raise NumericalError("window too short: autocorrelation never drops below 0.05")
    cut = np.nonzero(rho < 0.1)[0][0]
    lags = np.arange(cut)
    use = (rho[:cut] <= 0.9) & (rho[:cut] >= 0.1)
    if use.sum() < 2:
        raise NumericalError("too few lags with autocorrelation in [0.1, 0.9]; lower record_every")
    slope = np.polyfit(lags[use] * record_dt, np.log(rho[:cut][use]), 1)[0]
    if not slope < 0:
        raise NumericalError("autocorrelation does not decay")
    return -1.0 / slope


def gap_estimate(summary: SimSummary, max_lag: int | None = None,
                 n_batches: int = 8) -> tuple[float, float]:
    """(c_p_hat, stderr) from the log-linear decay of the autocorrelation.

    The stderr comes from batch means over groups of chains.
    """
    obs = summary.observable
    n_chains, n = obs.shape
    if max_lag is None:
        max_lag = min(n // 4, 2000)
    mean = float(obs.mean())
    c_hat = _fit_rate(autocorrelation(obs, max_lag, mean), summary.record_dt)
    n_batches = min(n_batches, n_chains)
    if n_batches < 2:
        return c_hat, math.nan
    groups = np.array_split(np.arange(n_chains), n_batches)
    vals = [_fit_rate(autocorrelation(obs[g], max_lag, mean), summary.record_dt) for g in groups]
    return c_hat, float(np.std(vals, ddof=1) / math.sqrt(n_batches))


def dt_halving_check(pot: PiecewisePotential, cfg: SimConfig, grid: GridSpec | None = None):
    """(passed, c_coarse, c_fine, stderr): halving dt on the same Brownian paths
    moves the estimate by less than the reported stderr."""
    coarse = simulate(pot, cfg, grid)
    fine = simulate(pot, cfg, grid, halve_dt=True)
    c1, s1 = gap_estimate(coarse)
    c2, _ = gap_estimate(fine)
    return abs(c1 - c2) < s1, c1, c2, s1


def histogram_check(pot: PiecewisePotential, summary: SimSummary, n_bins: int = 20,
                    thin: int | None = None, grid: GridSpec | None = None):
    """(p_value, chi2) of recorded positions against equal-mass bins of mu_t.

    Samples are thinned to roughly three relaxation times apart so that they
    are close to independent.
    """
    mesh = build_mesh(pot, summary.t, grid)
    if thin is None:
        thin = max(1, int(math.ceil(3.0 * summary.c_p_reference / summary.record_dt)))
    x = summary.positions[:, ::thin].ravel()
    cdf = np.concatenate([[0.0], np.cumsum(mesh.cell_weights)])
    cdf /= cdf[-1]
    edges = np.interp(np.linspace(0, 1, n_bins + 1), cdf, mesh.nodes)
    edges[0], edges[-1] = -np.inf, np.inf
    counts, _ = np.histogram(x, bins=edges)
    expected = np.full(n_bins, x.size / n_bins)
    chi2, p = stats.chisquare(counts, expected)
    return float(p), float(chi2)


def write_autocorrelation_csv(target, summary: SimSummary, max_lag: int) -> None:
    """Per-chain autocorrelations with columns (chain, lag, autocorrelation).

    ``target`` is a path or an open text stream.
    """
    if not hasattr(target, "write"):
        with open(target, "w", newline="") as fh:
            write_autocorrelation_csv(fh, summary, max_lag)
        return
    mean = float(summary.observable.mean())
    w = csv.writer(target, lineterminator="\n")
    w.writerow(["chain", "lag", "autocorrelation"])
    for c, series in enumerate(summary.observable):
        rho = autocorrelation(series[None, :], max_lag, mean)
        for lag, r in enumerate(rho):
            w.writerow([c, lag, format(float(r), ".17g")])
