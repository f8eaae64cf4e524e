"""Hot inner loops, each in a numba and a pure-numpy flavour.

The numba versions are used when numba imports cleanly and the environment
variable ``PLATEAU_SPECTRA_DISABLE_NUMBA`` is unset (or ``0``).  Both flavours
are always importable so that tests and ``benchmarks/bench_kernels.py`` can
compare them directly.
"""
import os

import numpy as np
from scipy.linalg import solve_banded

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

_DISABLED = os.environ.get("PLATEAU_SPECTRA_DISABLE_NUMBA", "").strip() not in ("", "0")
USE_NUMBA = numba is not None and not _DISABLED


def _njit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------------------
# Sturm counts for the symmetric tridiagonal pencil K - x M
# ---------------------------------------------------------------------------

def _sturm_counts_py(kd, ko, md, mo, shifts):
    n = kd.shape[0]
    out = np.zeros(shifts.shape[0], dtype=np.int64)
    tiny = 1e-300
    for s in range(shifts.shape[0]):
        x = shifts[s]
        count = 0
        d = kd[0] - x * md[0]
        if d < 0.0:
            count += 1
        for i in range(1, n):
            e = ko[i - 1] - x * mo[i - 1]
            if d == 0.0:
                d = tiny
            d = (kd[i] - x * md[i]) - e * e / d
            if d < 0.0:
                count += 1
        out[s] = count
    return out


sturm_counts_numba = _njit(_sturm_counts_py)


def sturm_counts_numpy(kd, ko, md, mo, shifts):
    """Vectorised over shifts; the recurrence itself stays sequential."""
    shifts = np.asarray(shifts, dtype=float)
    d = kd[0] - shifts * md[0]
    count = (d < 0.0).astype(np.int64)
    for i in range(1, kd.shape[0]):
        e = ko[i - 1] - shifts * mo[i - 1]
        d = np.where(d == 0.0, 1e-300, d)
        d = (kd[i] - shifts * md[i]) - e * e / d
        count += d < 0.0
    return count


def sturm_counts(kd, ko, md, mo, shifts):
    """Number of generalized eigenvalues of (K, M) strictly below each shift.

    K and M are symmetric tridiagonal (diagonals ``kd``, ``md``; off-diagonals
    ``ko``, ``mo``) and M is positive definite, so by Sylvester's law of inertia
    the count equals the number of negative pivots in the LDL^T factorisation
    of K - x M.
    """
    shifts = np.ascontiguousarray(shifts, dtype=float)
    if USE_NUMBA:
        return sturm_counts_numba(kd, ko, md, mo, shifts)
    return sturm_counts_numpy(kd, ko, md, mo, shifts)


# ---------------------------------------------------------------------------
# Tridiagonal solve
# ---------------------------------------------------------------------------

def _tridiag_solve_py(sub, diag, sup, rhs):
    # Thomas algorithm, no pivoting; zero pivots are nudged.
    n = diag.shape[0]
    c = np.empty(n)
    y = np.empty(n)
    beta = diag[0]
    if beta == 0.0:
        beta = 1e-300
    c[0] = sup[0] / beta if n > 1 else 0.0
    y[0] = rhs[0] / beta
    for i in range(1, n):
        beta = diag[i] - sub[i - 1] * c[i - 1]
        if beta == 0.0:
            beta = 1e-300
        if i < n - 1:
            c[i] = sup[i] / beta
        y[i] = (rhs[i] - sub[i - 1] * y[i - 1]) / beta
    for i in range(n - 2, -1, -1):
        y[i] -= c[i] * y[i + 1]
    return y


tridiag_solve_numba = _njit(_tridiag_solve_py)


def tridiag_solve_numpy(sub, diag, sup, rhs):
    n = diag.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = sup
    ab[1] = diag
    ab[2, :-1] = sub
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def tridiag_solve(sub, diag, sup, rhs):
    """Solve a tridiagonal system given sub-, main and super-diagonals."""
    rhs = np.ascontiguousarray(rhs, dtype=float)
    if USE_NUMBA:
        return tridiag_solve_numba(sub, diag, sup, rhs)
    return tridiag_solve_numpy(sub, diag, sup, rhs)


# ---------------------------------------------------------------------------
# Euler-Maruyama for dX = -V'(X)/t ds + sqrt(2) dB
# ---------------------------------------------------------------------------
# A potential is flattened to (a, b, lc, lp, rc, rp): plateau ends and the
# coefficient/power arrays of the left and right wing series.

def _wing_grad(r, coefs, powers):
    g = 0.0
    for k in range(coefs.shape[0]):
        p = powers[k]
        if p == 1.0:
            g += coefs[k]
        else:
            g += coefs[k] * p * r ** (p - 1.0)
    return g


_wing_grad_nb = _njit(_wing_grad)


def _em_chain(x0, noise, dt, t, record_every, a, b, lc, lp, rc, rp, xmin, xmax):
    n_steps = noise.shape[0]
    n_rec = n_steps // record_every
    out = np.empty(n_rec)
    x = x0
    amp = np.sqrt(2.0 * dt)
    k = 0
    for i in range(n_steps):
        if x > b:
            drift = -_wing_grad_nb(x - b, rc, rp) / t
        elif x < a:
            drift = _wing_grad_nb(a - x, lc, lp) / t
        else:
            drift = 0.0
        x = x + drift * dt + amp * noise[i]
        if x > xmax or x < xmin or x != x:
            return out[:k], x, i
        if (i + 1) % record_every == 0:
            out[k] = x
            k += 1
    return out, x, -1


em_chain_numba = _njit(_em_chain)


def _wing_grad_vec(r, coefs, powers):
    g = np.zeros_like(r)
    for c, p in zip(coefs, powers):
        g += c * p * np.power(r, p - 1.0)
    return g


def em_chains_numpy(x0, noise, dt, t, record_every, a, b, lc, lp, rc, rp, xmin, xmax):
    """All chains at once; loops over time steps only.

    Returns (records, final, failed) where ``failed[c]`` is the first step at
    which chain c left [xmin, xmax] (or -1).
    """
    x = np.array(x0, dtype=float)
    n_chains, n_steps = noise.shape
    n_rec = n_steps // record_every
    out = np.empty((n_chains, n_rec))
    failed = np.full(n_chains, -1, dtype=np.int64)
    amp = np.sqrt(2.0 * dt)
    k = 0
    for i in range(n_steps):
        drift = np.zeros_like(x)
        right = x > b
        left = x < a
        if right.any():
            drift[right] = -_wing_grad_vec(x[right] - b, rc, rp) / t
        if left.any():
            drift[left] = _wing_grad_vec(a - x[left], lc, lp) / t
        x = x + drift * dt + amp * noise[:, i]
        bad = ((x > xmax) | (x < xmin) | ~np.isfinite(x)) & (failed < 0)
        if bad.any():
            failed[bad] = i
            x[bad] = np.clip(np.nan_to_num(x[bad]), xmin, xmax)
        if (i + 1) % record_every == 0:
            out[:, k] = x
            k += 1
    return out, x, failed


def em_chains(x0, noise, dt, t, record_every, a, b, lc, lp, rc, rp, xmin, xmax):
    if USE_NUMBA:
        n_chains, n_steps = noise.shape
        n_rec = n_steps // record_every
        out = np.empty((n_chains, n_rec))
        final = np.empty(n_chains)
        failed = np.full(n_chains, -1, dtype=np.int64)
        for c in range(n_chains):
            rec, xf, fail = em_chain_numba(
                float(x0[c]), np.ascontiguousarray(noise[c]), dt, t, record_every,
                a, b, lc, lp, rc, rp, xmin, xmax)
            final[c] = xf
            failed[c] = fail
            out[c, : rec.shape[0]] = rec
            if fail >= 0:
                out[c, rec.shape[0]:] = np.nan
        return out, final, failed
    return em_chains_numpy(x0, noise, dt, t, record_every, a, b, lc, lp, rc, rp, xmin, xmax)


# ---------------------------------------------------------------------------
# Lagged autocovariance sums
# ---------------------------------------------------------------------------

def _lag_sums_py(y, max_lag):
    # y: (chains, n) already centred; returns sum over chains and i of y_i y_{i+k}
    n_chains, n = y.shape
    out = np.zeros(max_lag + 1)
    counts = np.zeros(max_lag + 1)
    for c in range(n_chains):
        for k in range(max_lag + 1):
            s = 0.0
            for i in range(n - k):
                s += y[c, i] * y[c, i + k]
            out[k] += s
            counts[k] += n - k
    return out, counts


lag_sums_numba = _njit(_lag_sums_py)


def lag_sums_numpy(y, max_lag):
    n_chains, n = y.shape
    out = np.empty(max_lag + 1)
    counts = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        out[k] = np.einsum("ij,ij->", y[:, : n - k], y[:, k:])
        counts[k] = n_chains * (n - k)
    return out, counts


def lag_sums(y, max_lag):
    y = np.ascontiguousarray(y, dtype=float)
    if USE_NUMBA:
        return lag_sums_numba(y, int(max_lag))
    return lag_sums_numpy(y, int(max_lag))
