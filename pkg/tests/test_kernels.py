import numpy as np
import pytest
from hypothesis import given, strategies as st

from plateau_spectra import _kernels as k
from plateau_spectra.potential import counterexample, quartic

pytestmark = pytest.mark.skipif(k.numba is None, reason="numba not installed")

sizes = st.integers(2, 60)
seeds = st.integers(0, 2 ** 32 - 1)


def _pencil(n, rng):
    kd = rng.uniform(2.0, 4.0, n)
    ko = rng.uniform(-1.0, 1.0, n - 1)
    md = rng.uniform(2.0, 3.0, n)
    mo = rng.uniform(0.0, 0.5, n - 1)
    return kd, ko, md, mo


@given(sizes, seeds)
def test_sturm_counts_agree_with_dense_eigenvalues(n, seed):
    rng = np.random.default_rng(seed)
    kd, ko, md, mo = _pencil(n, rng)
    from scipy.linalg import eigh
    kmat = np.diag(kd) + np.diag(ko, 1) + np.diag(ko, -1)
    mmat = np.diag(md) + np.diag(mo, 1) + np.diag(mo, -1)
    ev = eigh(kmat, mmat, eigvals_only=True)
    shifts = np.sort(rng.uniform(ev.min() - 1, ev.max() + 1, 7))
    shifts = shifts[np.min(np.abs(shifts[:, None] - ev[None, :]), axis=1) > 1e-8]
    expected = (ev[None, :] < shifts[:, None]).sum(axis=1)
    assert np.array_equal(k.sturm_counts_numba(kd, ko, md, mo, shifts), expected)
    assert np.array_equal(k.sturm_counts_numpy(kd, ko, md, mo, shifts), expected)


@given(sizes, seeds)
def test_tridiag_solvers_agree(n, seed):
    rng = np.random.default_rng(seed)
    diag = rng.uniform(3.0, 5.0, n)
    sub = rng.uniform(-1, 1, n - 1)
    rhs = rng.standard_normal(n)
    a = k.tridiag_solve_numba(sub, diag, sub, rhs)
    b = k.tridiag_solve_numpy(sub, diag, sub, rhs)
    dense = np.diag(diag) + np.diag(sub, 1) + np.diag(sub, -1)
    np.testing.assert_allclose(dense @ a, rhs, atol=1e-12)
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)


@given(st.integers(1, 5), st.integers(10, 200), st.integers(0, 20), seeds)
def test_lag_sums_agree(chains, n, max_lag, seed):
    y = np.random.default_rng(seed).standard_normal((chains, n))
    max_lag = min(max_lag, n - 1)
    s1, c1 = k.lag_sums_numba(y, max_lag)
    s2, c2 = k.lag_sums_numpy(y, max_lag)
    np.testing.assert_allclose(s1, s2, rtol=1e-10, atol=1e-10)
    np.testing.assert_array_equal(c1, c2)


@pytest.mark.parametrize("pot", [counterexample(), quartic()])
def test_euler_maruyama_flavours_agree(pot, monkeypatch):
    rng = np.random.default_rng(7)
    noise = rng.standard_normal((4, 3000))
    x0 = np.array([-3.0, -1.0, 0.5, 2.5])
    args = (x0, noise, 1e-3, 0.05, 10, *pot.flat_arrays(), -50.0, 50.0)
    monkeypatch.setattr(k, "USE_NUMBA", True)
    out_nb, x_nb, fail_nb = k.em_chains(*args)
    monkeypatch.setattr(k, "USE_NUMBA", False)
    out_np, x_np, fail_np = k.em_chains(*args)
    np.testing.assert_allclose(out_nb, out_np, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(x_nb, x_np, rtol=1e-12, atol=1e-12)
    assert np.all(fail_nb == -1) and np.all(fail_np == -1)


def test_euler_maruyama_reports_escape(monkeypatch):
    pot = counterexample()
    noise = np.full((2, 50), 5.0)
    for flag in (True, False):
        monkeypatch.setattr(k, "USE_NUMBA", flag)
        _, _, failed = k.em_chains(np.zeros(2), noise, 0.1, 1.0, 1, *pot.flat_arrays(), -3.0, 3.0)
        assert np.all(failed >= 0)
