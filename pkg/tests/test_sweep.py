import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from plateau_spectra.exceptions import ConfigError, NumericalError
from plateau_spectra.mesh import GridSpec
from plateau_spectra.potential import counterexample, gaussian
from plateau_spectra.sweep import (COLUMNS, SweepRow, SweepTable, compute_row, default_jobs,
                                   parse_t_grid, power_fit, read_csv, refutation_report,
                                   run_sweep, write_csv)

SMALL = GridSpec(n_plateau=128, layer_cells_per_scale=8)


def test_column_order():
    assert COLUMNS == ("t", "z_t", "c_p", "c_ls", "c_ls_lower", "c_ls_upper",
                       "asymptote_p", "asymptote_ls", "conjecture")


def test_parse_t_grid():
    np.testing.assert_allclose(parse_t_grid("1e-2:1e-5:4log"), [1e-2, 1e-3, 1e-4, 1e-5])
    assert parse_t_grid("0.5:0.5:1log").tolist() == [0.5]
    for bad in ("1e-2:1e-5", "1e-2:1e-5:4", "1e-5:1e-2:4log", "a:b:3log", "0:1e-3:3log"):
        with pytest.raises(ConfigError):
            parse_t_grid(bad)


@given(st.floats(0.3, 1.2), st.floats(0.1, 10.0), st.floats(0.0, 5.0))
def test_power_fit_recovers_exact_law(exponent, coef, c0):
    ts = np.geomspace(1e-2, 1e-6, 6)
    fit = power_fit((ts, c0 + coef * ts ** exponent), "poincare", c0)
    assert fit.exponent == pytest.approx(exponent, rel=1e-9)
    assert fit.coefficient == pytest.approx(coef, rel=1e-8)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.rows_used == 6


def test_power_fit_guards():
    ts = np.geomspace(1e-2, 1e-5, 5)
    with pytest.raises(NumericalError, match="nonpositive"):
        power_fit((ts, 1.0 - ts), "poincare", 1.0)
    with pytest.raises(NumericalError, match=">= 4"):
        power_fit((ts[:3], 1 + ts[:3]), "poincare", 1.0)


def test_noise_floor_drops_rows():
    ts = np.geomspace(1e-2, 1e-6, 7)
    rows = [SweepRow(t=t, c_p=1 + t ** 0.5, noise=1.0 if k >= 5 else 0.0) for k, t in enumerate(ts)]
    fit = power_fit(SweepTable(rows), "poincare", 1.0)
    assert fit.rows_used == 5


def test_sweep_matches_single_rows_and_parallel(monkeypatch):
    pot = counterexample()
    ts = parse_t_grid("1e-2:1e-4:3log")
    serial = run_sweep(pot, ts, ("z", "poincare"), SMALL, jobs=1)
    parallel = run_sweep(pot, ts, ("z", "poincare"), SMALL, jobs=2)
    assert serial.column("c_p").tolist() == parallel.column("c_p").tolist()
    row = compute_row(pot.to_dict(), ts[1], ("z", "poincare"), SMALL.to_dict())
    assert row.c_p == serial.rows[1].c_p
    np.testing.assert_allclose(serial.column("z_t"), math.pi + np.sqrt(2 * math.pi * ts), rtol=1e-10)
    assert np.all(np.isnan(serial.column("c_ls")))


def test_sweep_validation():
    with pytest.raises(ConfigError):
        run_sweep(counterexample(), [1e-3, 1e-2])
    with pytest.raises(ConfigError):
        run_sweep(counterexample(), [1e-3], quantities=("bogus",))


def test_default_jobs(monkeypatch):
    monkeypatch.delenv("SPECTRA_JOBS", raising=False)
    assert default_jobs() == 1
    monkeypatch.setenv("SPECTRA_JOBS", "3")
    assert default_jobs() == 3
    monkeypatch.setenv("SPECTRA_JOBS", "many")
    with pytest.raises(ConfigError):
        default_jobs()


def test_csv_round_trip(tmp_path):
    table = run_sweep(counterexample(), [1e-2, 1e-3], ("poincare",), SMALL)
    path = tmp_path / "s.csv"
    write_csv(table, path)
    assert path.read_text().splitlines()[0] == ",".join(COLUMNS)
    back = read_csv(path)
    for col in ("t", "c_p", "asymptote_p", "conjecture"):
        assert back.column(col).tolist() == table.column(col).tolist()
    assert np.all(np.isnan(back.column("c_ls")))


def _synthetic(rows):
    return SweepTable([SweepRow(t=t, c_ls_lower=v) for t, v in rows])


def test_refutation_verdicts():
    pot = counterexample()
    ts = np.geomspace(1e-2, 1e-5, 5)
    refuted = refutation_report(pot, _synthetic([(t, 1 + 1.6 * math.sqrt(t)) for t in ts]))
    assert refuted["verdict"] == "REFUTED"
    assert set(refuted) == {"verdict", "ratios", "fit", "notes"}
    assert refuted["fit"]["exponent"] == pytest.approx(0.5)
    consistent = refutation_report(pot, _synthetic([(t, 1 + t) for t in ts]))
    assert consistent["verdict"] == "NOT-REFUTED"
    few = refutation_report(pot, _synthetic([(1e-2, 1.2)]))
    assert few["verdict"] == "INCONCLUSIVE"
    unique = refutation_report(gaussian(), _synthetic([(t, t) for t in ts]))
    assert unique["verdict"] == "NOT-APPLICABLE"


@given(st.integers(0, 2 ** 32 - 1))
def test_power_fit_tolerates_tiny_multiplicative_noise(seed):
    rng = np.random.default_rng(seed)
    ts = np.geomspace(1e-2, 1e-5, 8)
    vals = (1 + 1.6 * np.sqrt(ts)) * (1 + 1e-6 * rng.standard_normal(ts.size))
    fit = power_fit((ts, vals), "poincare", 1.0)
    assert abs(fit.exponent - 0.5) < 0.02
    assert abs(fit.coefficient - 1.6) / 1.6 < 0.03
