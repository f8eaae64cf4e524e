import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from plateau_spectra import _kernels
from plateau_spectra.exceptions import ConfigError, NumericalError
from plateau_spectra.langevin import (SimConfig, autocorrelation, check_config, gap_estimate,
                                      histogram_check, max_curvature, simulate,
                                      write_autocorrelation_csv)
from plateau_spectra.potential import counterexample, gaussian


def _ou_config(**kw):
    base = dict(t=1.0, dt=0.01, n_steps=60_000, n_chains=16, seed=5, record_every=5)
    base.update(kw)
    return SimConfig(**base)


def test_config_validation():
    for bad in (dict(dt=0.0), dict(n_steps=0), dict(burn_in=-1), dict(observable="x"), dict(seed=-1)):
        with pytest.raises(ConfigError):
            _ou_config(**bad)
    assert SimConfig(**_ou_config().to_dict()) == _ou_config()


def test_unstable_step_rejected():
    with pytest.raises(ConfigError, match="unstable"):
        check_config(gaussian(), _ou_config(dt=0.5), c_p=1.0)


def test_burn_in_raised(recwarn):
    cfg = check_config(gaussian(), _ou_config(), c_p=1.0)
    assert cfg.burn_in == 1000
    assert any("burn_in" in str(w.message) for w in recwarn)


def test_max_curvature():
    assert max_curvature(counterexample(), 1e-2) == pytest.approx(1.0)


def test_same_seed_same_paths():
    a = simulate(gaussian(), _ou_config(n_steps=2000))
    b = simulate(gaussian(), _ou_config(n_steps=2000))
    c = simulate(gaussian(), _ou_config(n_steps=2000, seed=6))
    np.testing.assert_array_equal(a.positions, b.positions)
    assert not np.array_equal(a.positions, c.positions)


def test_chain_paths_do_not_depend_on_chain_count():
    few = simulate(gaussian(), _ou_config(n_steps=2000, n_chains=3))
    many = simulate(gaussian(), _ou_config(n_steps=2000, n_chains=8))
    np.testing.assert_array_equal(few.positions, many.positions[:3])


def test_numpy_fallback_reproduces_numba(monkeypatch):
    cfg = _ou_config(n_steps=3000, n_chains=4)
    monkeypatch.setattr(_kernels, "USE_NUMBA", True)
    a = simulate(counterexample(), SimConfig(**{**cfg.to_dict(), "t": 0.1, "dt": 0.005}))
    monkeypatch.setattr(_kernels, "USE_NUMBA", False)
    b = simulate(counterexample(), SimConfig(**{**cfg.to_dict(), "t": 0.1, "dt": 0.005}))
    np.testing.assert_allclose(a.positions, b.positions, rtol=1e-12, atol=1e-12)


def test_ornstein_uhlenbeck_gap_and_moments():
    summary = simulate(gaussian(), _ou_config())
    c_hat, se = gap_estimate(summary)
    assert abs(c_hat - 1.0) < max(4 * se, 0.05)
    assert summary.variance == pytest.approx(summary.c_p_reference, rel=0.05)
    p, _ = histogram_check(gaussian(), summary)
    assert p > 1e-3


@given(st.floats(-0.9, 0.9), st.integers(0, 1000))
def test_autocorrelation_of_ar1(phi, seed):
    rng = np.random.default_rng(seed)
    n = 20_000
    e = rng.standard_normal((4, n))
    y = np.empty((4, n))
    y[:, 0] = e[:, 0] / math.sqrt(1 - phi * phi)
    for i in range(1, n):
        y[:, i] = phi * y[:, i - 1] + e[:, i]
    rho = autocorrelation(y, 3)
    assert rho[0] == 1.0
    np.testing.assert_allclose(rho[1:], phi ** np.arange(1, 4), atol=0.04)


def test_short_window_is_a_numerical_error():
    summary = simulate(counterexample(), SimConfig(t=0.05, dt=0.0025, n_steps=200, n_chains=4))
    with pytest.raises(NumericalError):
        gap_estimate(summary)


def test_custom_observable_needs_nodal_values():
    with pytest.raises(ConfigError):
        simulate(gaussian(), _ou_config(n_steps=200, observable="custom-nodes", custom_values=(1.0, 2.0)))


def test_autocorrelation_csv_layout():
    summary = simulate(gaussian(), _ou_config(n_steps=500, n_chains=2))
    buf = io.StringIO()
    write_autocorrelation_csv(buf, summary, 4)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "chain,lag,autocorrelation"
    assert len(lines) == 1 + 2 * 5
    assert lines[1].startswith("0,0,1")
