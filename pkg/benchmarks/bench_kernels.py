"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run once untimed (JIT warm-up), then timed; the two flavours
are also checked to agree.
"""
import argparse
import timeit

import numpy as np

from plateau_spectra import _kernels as k
from plateau_spectra.potential import counterexample
from plateau_spectra.spectral import assemble


def _cases(rng):
    pot = counterexample()
    kmat, mmat, _ = assemble(pot, 1e-4)
    shifts = np.linspace(0.5, 2.0, 64)
    n = kmat.diag.size
    rhs = rng.standard_normal(n)
    diag = kmat.diag + mmat.diag
    off = kmat.off + mmat.off
    a, b, lc, lp, rc, rp = pot.flat_arrays()
    noise = rng.standard_normal((16, 20_000))
    x0 = np.zeros(16)
    y = rng.standard_normal((16, 4000))
    em_args = (x0, noise, 1e-3, 0.05, 10, a, b, lc, lp, rc, rp, -50.0, 50.0)
    return {
        "sturm_counts (n=%d, 64 shifts)" % n: (
            lambda: k.sturm_counts_numba(kmat.diag, kmat.off, mmat.diag, mmat.off, shifts),
            lambda: k.sturm_counts_numpy(kmat.diag, kmat.off, mmat.diag, mmat.off, shifts)),
        "tridiag_solve (n=%d)" % n: (
            lambda: k.tridiag_solve_numba(off, diag, off, rhs),
            lambda: k.tridiag_solve_numpy(off, diag, off, rhs)),
        "em_chains (16 x 20000 steps)": (
            lambda: _em_numba(*em_args),
            lambda: k.em_chains_numpy(*em_args)),
        "lag_sums (16 x 4000, 200 lags)": (
            lambda: k.lag_sums_numba(y, 200),
            lambda: k.lag_sums_numpy(y, 200)),
    }


def _em_numba(*args):
    saved = k.USE_NUMBA
    k.USE_NUMBA = True
    try:
        return k.em_chains(*args)
    finally:
        k.USE_NUMBA = saved


def _first(x):
    return x[0] if isinstance(x, tuple) else x


def main(argv=None):
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if k.numba is None:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s}  agree")
    for name, (fast, slow) in _cases(rng).items():
        agree = np.allclose(_first(fast()), _first(slow()), rtol=1e-10, atol=1e-12)
        t_fast = min(timeit.repeat(fast, number=1, repeat=args.repeat)) * 1e3
        t_slow = min(timeit.repeat(slow, number=1, repeat=args.repeat)) * 1e3
        print(f"{name:40s} {t_fast:11.3f} {t_slow:11.3f} {t_slow / t_fast:8.1f}  {agree}")


if __name__ == "__main__":
    main()
