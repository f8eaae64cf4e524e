import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from plateau_spectra.entropy import (defective_lsi_components, entropy_functional, lsi_constant,
                                     lsi_rayleigh, rothaus_tighten)
from plateau_spectra.exceptions import ConfigError
from plateau_spectra.mesh import GridSpec, WeightedMesh, build_mesh
from plateau_spectra.potential import asymmetric, counterexample, gaussian, quartic

SMALL = GridSpec(n_plateau=128, layer_cells_per_scale=8)
seeds = st.integers(0, 2 ** 32 - 1)


def _random_smooth(nodes, seed, n_modes=5):
    rng = np.random.default_rng(seed)
    span = nodes[-1] - nodes[0]
    x = (nodes - nodes[0]) / span
    f = rng.uniform(0.2, 1.0) * np.ones_like(nodes)
    for j in range(1, n_modes + 1):
        f += rng.standard_normal() / j * np.cos(j * math.pi * x)
    return f


@given(st.floats(0.01, 0.99), st.floats(-5, 5), st.floats(-5, 5))
def test_entropy_of_two_point_measure(p, u, v):
    if u * u + v * v < 1e-200:
        return
    mesh = WeightedMesh.discrete([0.0, 1.0], [p, 1 - p])
    s = np.array([u * u, v * v])
    m = p * s[0] + (1 - p) * s[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(s > 0, s * np.log(s / m), 0.0)
    expected = p * terms[0] + (1 - p) * terms[1]
    assert entropy_functional([u, v], mesh) == pytest.approx(expected, rel=1e-9, abs=1e-14)


@given(seeds, st.floats(0.01, 100.0))
def test_entropy_is_nonnegative_and_two_homogeneous(seed, c):
    mesh = build_mesh(counterexample(), 1e-2, SMALL)
    f = _random_smooth(mesh.nodes, seed)
    e = entropy_functional(f, mesh)
    assert e >= 0
    assert entropy_functional(c * f, mesh) == pytest.approx(c * c * e, rel=1e-9, abs=1e-300)


def test_entropy_of_constants_vanishes():
    mesh = build_mesh(counterexample(), 1e-2, SMALL)
    assert entropy_functional(np.full(mesh.n_nodes, 3.7), mesh) < 1e-25
    with pytest.raises(ConfigError):
        entropy_functional(np.zeros(mesh.n_nodes), mesh)


@given(seeds)
def test_entropy_linearises_to_twice_the_variance(seed):
    mesh = build_mesh(asymmetric(1, 4), 1e-3, SMALL)
    g = _random_smooth(mesh.nodes, seed)
    eps = 1e-4
    gq = mesh.at_qp(g)
    var = mesh.expect(gq * gq) - mesh.expect(gq) ** 2
    assert entropy_functional(1 + eps * g, mesh) == pytest.approx(2 * eps * eps * var, rel=1e-3)


@given(seeds, st.floats(1e-4, 0.5))
def test_quotient_respects_rigorous_upper_bound(seed, t):
    pot = asymmetric(1.0, 4.0)
    res = lsi_constant(pot, t, SMALL, restarts=0, max_iter=30)
    mesh = build_mesh(pot, t, SMALL)
    f = _random_smooth(mesh.nodes, seed)
    assert lsi_rayleigh(f, mesh) <= res.upper_bound


@given(seeds, st.floats(1e-3, 2.0))
def test_gaussian_quotient_below_bakry_emery(seed, t):
    mesh = build_mesh(gaussian(), t, SMALL)
    f = _random_smooth(mesh.nodes, seed)
    assert lsi_rayleigh(f, mesh) <= t * (1 + 1e-9)


@pytest.mark.parametrize("t", [1.0, 0.1, 0.01])
def test_gaussian_lsi_is_t(t):
    res = lsi_constant(gaussian(), t)
    assert res.c_ls / t == pytest.approx(1.0, rel=2e-2)
    assert res.upper_bound == pytest.approx(t)


def test_lsi_between_bounds_and_above_poincare():
    res = lsi_constant(counterexample(), 1e-3, seed=3)
    assert res.c_p <= res.c_ls <= res.upper_bound
    assert res.lower_bound == res.c_ls
    assert res.restarts_used >= 1
    assert res.extremal_values.shape == build_mesh(counterexample(), 1e-3).nodes.shape


def test_lsi_segment_baseline():
    res = lsi_constant(counterexample(), 0.0)
    assert res.c_ls == pytest.approx(1.0, rel=1e-5)
    assert res.upper_bound == pytest.approx(1.0, rel=1e-12)


def test_lsi_is_reproducible_for_fixed_seed():
    a = lsi_constant(asymmetric(1, 4), 1e-2, SMALL, seed=11)
    b = lsi_constant(asymmetric(1, 4), 1e-2, SMALL, seed=11)
    assert a.c_ls == b.c_ls and a.best_quotient == b.best_quotient


def test_rothaus_and_defective_components():
    assert rothaus_tighten(1.0, 2.0, 3.0) == 4.0
    with pytest.raises(ConfigError):
        rothaus_tighten(-1.0, 0.0, 1.0)
    a0, b0 = defective_lsi_components(counterexample(), 0.0)
    assert (a0, b0) == (pytest.approx(1.0), 0.0)
    a, b = defective_lsi_components(counterexample(), 1e-4)
    assert a == pytest.approx(1.0) and b > 0
    with pytest.raises(ConfigError):
        defective_lsi_components(quartic(), 1e-3)


@given(seeds, st.floats(-50, 50).filter(lambda c: abs(c) > 1e-3))
def test_quotient_is_scale_invariant(seed, c):
    mesh = build_mesh(counterexample(), 1e-3, SMALL)
    f = _random_smooth(mesh.nodes, seed)
    assert lsi_rayleigh(c * f, mesh) == pytest.approx(lsi_rayleigh(f, mesh), rel=1e-10)


def test_quotient_linearises_to_poincare_ratio():
    from plateau_spectra.spectral import poincare_constant
    pot = counterexample()
    mesh = build_mesh(pot, 1e-3, SMALL)
    g = poincare_constant(pot, 1e-3, mesh=mesh).eigenfunction
    c_p = poincare_constant(pot, 1e-3, mesh=mesh).c_p
    q3, q4 = (lsi_rayleigh(1 + s * g, mesh) for s in (1e-3, 1e-4))
    # O(s) error: Richardson extrapolation removes the linear term
    assert abs(q4 - c_p) < abs(q3 - c_p)
    assert (10 * q4 - q3) / 9 == pytest.approx(c_p, rel=1e-6)


@given(seeds, st.floats(-10, 10))
def test_entropy_is_shift_covariant(seed, shift):
    from plateau_spectra.potential import PiecewisePotential
    pot = asymmetric(1, 2)
    moved = PiecewisePotential(pot.a + shift, pot.b + shift, pot.left, pot.right)
    mesh = build_mesh(pot, 1e-2, SMALL)
    mesh_moved = build_mesh(moved, 1e-2, SMALL)
    f = _random_smooth(mesh.nodes, seed)
    assert entropy_functional(f, mesh_moved) == pytest.approx(entropy_functional(f, mesh), rel=1e-6)
