"""Temperature sweeps, log-log power fits and the conjecture refutation report."""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .asymptotics import (conjecture_prediction, lsi_expansion_1d, poincare_expansion_1d,
                          segment_constant)
from .entropy import lsi_constant
from .exceptions import (ConfigError, MixedExponentError, NumericalError, PLDivergenceError)
from .mesh import GridSpec, build_mesh
from .potential import PiecewisePotential, pl_constant
from .spectral import poincare_constant

COLUMNS = ("t", "z_t", "c_p", "c_ls", "c_ls_lower", "c_ls_upper",
           "asymptote_p", "asymptote_ls", "conjecture")
QUANTITIES = ("z", "poincare", "lsi")
QUANTITY_COLUMN = {"poincare": "c_p", "lsi": "c_ls_lower", "partition": "z_t", "z": "z_t"}
NOISE_FACTOR = 10.0


@dataclass
class SweepRow:
    t: float
    z_t: float = math.nan
    c_p: float = math.nan
    c_ls: float = math.nan
    c_ls_lower: float = math.nan
    c_ls_upper: float = math.nan
    asymptote_p: float = math.nan
    asymptote_ls: float = math.nan
    conjecture: float = math.nan
    noise: float = 0.0
    missing: dict = field(default_factory=dict)

    def values(self) -> list[float]:
        return [getattr(self, c) for c in COLUMNS]


@dataclass
class SweepTable:
    rows: list[SweepRow]
    potential: dict | None = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    def __len__(self):
        return len(self.rows)


@dataclass
class FitResult:
    exponent: float
    coefficient: float
    r_squared: float
    residuals: np.ndarray = field(repr=False)
    rows_used: int = 0

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "coefficient": self.coefficient,
                "r_squared": self.r_squared, "residuals": [float(r) for r in self.residuals],
                "rows_used": self.rows_used}


def parse_t_grid(spec: str) -> np.ndarray:
    """``A:B:Nlog`` -> N log-spaced temperatures from A down to B."""
    parts = spec.split(":")
    if len(parts) != 3 or not parts[2].endswith("log"):
        raise ConfigError(f"t-grid must look like A:B:Nlog, got {spec!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2][:-3])
    except ValueError:
        raise ConfigError(f"t-grid {spec!r} has non-numeric parts") from None
    if not (a > 0 and b > 0 and n >= 1):
        raise ConfigError("t-grid endpoints must be positive and N >= 1")
    if n > 1 and not a > b:
        raise ConfigError("t-grid must run from the larger to the smaller temperature")
    return np.geomspace(a, b, n) if n > 1 else np.array([a])


def fill_asymptotes(pot: PiecewisePotential, t: float, row: SweepRow) -> None:
    """Set the closed-form columns of ``row``; inapplicable ones stay NaN."""
    if pot.degenerate:
        return
    try:
        row.asymptote_p = float(poincare_expansion_1d(pot).evaluate(t))
    except MixedExponentError as exc:
        row.missing["asymptote_p"] = str(exc)
    if pot.quadratic_wings:
        row.asymptote_ls = float(lsi_expansion_1d(pot).evaluate(t))
    try:
        row.conjecture = conjecture_prediction(pot, t)
    except PLDivergenceError as exc:
        row.missing["conjecture"] = str(exc)


def compute_row(pot_dict: dict, t: float, quantities=QUANTITIES, grid_dict: dict | None = None,
                lsi_opts: dict | None = None) -> SweepRow:
    """One sweep cell; takes plain dicts so it can run in a worker process."""
    pot = PiecewisePotential.from_dict(pot_dict)
    grid = GridSpec.from_dict(grid_dict)
    row = SweepRow(t=float(t))
    mesh = build_mesh(pot, t, grid)
    if "z" in quantities:
        row.z_t = mesh.z
    spec = None
    if "poincare" in quantities or "lsi" in quantities:
        try:
            spec = poincare_constant(pot, t, mesh=mesh)
            row.c_p = spec.c_p
            fine = poincare_constant(pot, t, mesh=build_mesh(pot, t, grid, refine=1))
            row.noise = abs(fine.c_p - spec.c_p)
        except NumericalError as exc:
            row.missing["c_p"] = str(exc)
    if "lsi" in quantities and spec is not None:
        try:
            res = lsi_constant(pot, t, grid, mesh=mesh, **(lsi_opts or {}))
            row.c_ls, row.c_ls_lower, row.c_ls_upper = res.c_ls, res.lower_bound, res.upper_bound
        except (NumericalError, ConfigError) as exc:
            row.missing["c_ls"] = str(exc)
    fill_asymptotes(pot, t, row)
    return row


def default_jobs() -> int:
    raw = os.environ.get("SPECTRA_JOBS", "1")
    try:
        jobs = int(raw)
    except ValueError:
        raise ConfigError(f"SPECTRA_JOBS must be an integer, got {raw!r}") from None
    return max(1, jobs)


def run_sweep(pot: PiecewisePotential, t_grid, quantities=QUANTITIES, grid: GridSpec | None = None,
              jobs: int | None = None, lsi_opts: dict | None = None) -> SweepTable:
    """Evaluate every requested quantity on a strictly decreasing t-grid.

    A cell that fails is kept with NaNs and a reason in ``row.missing``.
    """
    ts = np.asarray(t_grid, dtype=float)
    if ts.ndim != 1 or ts.size == 0 or np.any(ts <= 0) or not np.all(np.isfinite(ts)):
        raise ConfigError("t-grid must be a nonempty list of positive temperatures")
    if np.any(np.diff(ts) >= 0):
        raise ConfigError("t-grid must be strictly decreasing")
    unknown = set(quantities) - set(QUANTITIES)
    if unknown:
        raise ConfigError(f"unknown quantities {sorted(unknown)}")
    grid = grid or GridSpec()
    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    args = [(pot.to_dict(), float(t), tuple(quantities), grid.to_dict(), lsi_opts) for t in ts]
    rows: list[SweepRow] = []
    if jobs == 1 or len(args) == 1:
        for a in args:
            rows.append(_safe_row(*a))
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(args))) as pool:
            rows = list(pool.map(_safe_row_star, args))
    if all(r.missing.get("error") for r in rows):
        raise NumericalError("every sweep cell failed: " + "; ".join(r.missing["error"] for r in rows))
    return SweepTable(rows, pot.to_dict())


def _safe_row(pot_dict, t, quantities, grid_dict, lsi_opts) -> SweepRow:
    try:
        return compute_row(pot_dict, t, quantities, grid_dict, lsi_opts)
    except (NumericalError, ConfigError, FloatingPointError) as exc:
        return SweepRow(t=t, missing={"error": f"{type(exc).__name__}: {exc}"})


def _safe_row_star(args):
    return _safe_row(*args)


def power_fit(table, quantity: str, c0: float, noise_factor: float = NOISE_FACTOR) -> FitResult:
    """Least squares of log(C(t) - c0) on log t; returns slope and exp(intercept).

    ``table`` is a :class:`SweepTable` (``quantity`` names a column or one of
    poincare / lsi / partition) or a pair (ts, values).
    """
    if isinstance(table, SweepTable):
        col = QUANTITY_COLUMN.get(quantity, quantity)
        if col not in COLUMNS:
            raise ConfigError(f"unknown quantity {quantity!r}")
        ts, vals, noise = table.t, table.column(col), table.column("noise")
    else:
        ts, vals = (np.asarray(v, dtype=float) for v in table)
        noise = np.zeros_like(ts)
    ok = np.isfinite(vals) & np.isfinite(ts)
    ts, vals, noise = ts[ok], vals[ok], noise[ok]
    diff = vals - c0
    if np.any(diff <= 0):
        raise NumericalError("expansion coefficient nonpositive or below noise")
    keep = diff > noise_factor * noise
    if keep.sum() < 4:
        raise NumericalError(f"need >= 4 usable rows above the noise floor, have {int(keep.sum())}")
    x, y = np.log(ts[keep]), np.log(diff[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(float(slope), float(math.exp(intercept)), min(max(r2, 0.0), 1.0), resid,
                     int(keep.sum()))


def refutation_report(pot: PiecewisePotential, table: SweepTable, threshold: float = 5.0) -> dict:
    """Compare certified lower bounds on C_LS with the conjectured linear growth.

    Verdicts: REFUTED, NOT-REFUTED, NOT-APPLICABLE (unique minimiser) or
    INCONCLUSIVE.
    """
    notes: list[str] = []
    report = {"verdict": "INCONCLUSIVE", "ratios": [], "fit": None, "notes": notes}
    try:
        c_pl = pl_constant(pot)
    except PLDivergenceError as exc:
        notes.append(f"PL constant unavailable: {exc}")
        return report
    c0 = 0.0 if pot.degenerate else segment_constant(pot)
    rows = [r for r in table.rows if math.isfinite(r.c_ls_lower)]
    ratios = [{"t": float(r.t), "ratio": float((r.c_ls_lower - c0) / (2.0 * c_pl * r.t))} for r in rows]
    report["ratios"] = ratios
    if len(rows) < 3:
        notes.append(f"need >= 3 rows with a log-Sobolev lower bound, have {len(rows)}")
        return report
    vals = np.array([r["ratio"] for r in ratios])
    if pot.degenerate:
        report["verdict"] = "NOT-APPLICABLE"
        notes.append("unique minimiser: the conjecture concerns multiple minimisers; "
                     f"C_LS / (2 C_PL t) ranges over [{vals.min():.6g}, {vals.max():.6g}]")
        return report
    increasing = bool(np.all(np.diff(vals) > 0))
    if vals.min() > threshold and increasing:
        report["verdict"] = "REFUTED"
    else:
        report["verdict"] = "NOT-REFUTED"
    notes.append(f"smallest ratio {vals.min():.6g}, threshold {threshold:g}, "
                 f"increasing as t decreases: {increasing}")
    try:
        fit = power_fit(table, "lsi", c0)
        report["fit"] = {k: v for k, v in fit.to_dict().items() if k != "residuals"}
        notes.append(f"measured exponent {fit.exponent:.4f} against the conjectured exponent 1")
    except NumericalError as exc:
        notes.append(f"no power fit: {exc}")
    return report


def _fmt(x: float) -> str:
    return "nan" if not math.isfinite(x) and math.isnan(x) else format(float(x), ".17g")


def write_csv(table: SweepTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for r in table.rows:
            w.writerow([_fmt(v) for v in r.values()])


def read_csv(path) -> SweepTable:
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ConfigError(f"cannot read sweep table {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header[:len(COLUMNS)]) != COLUMNS:
            raise ConfigError(f"{path}: expected CSV header {','.join(COLUMNS)}")
        rows = []
        for line in reader:
            try:
                vals = [float(v) for v in line[:len(COLUMNS)]]
            except ValueError:
                raise ConfigError(f"{path}: non-numeric entry in row {line}") from None
            rows.append(SweepRow(**dict(zip(COLUMNS, vals))))
    return SweepTable(rows)


def table_to_dict(table: SweepTable) -> dict:
    return {"columns": list(COLUMNS),
            "rows": [{k: v for k, v in asdict(r).items()} for r in table.rows]}
