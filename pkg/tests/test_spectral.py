import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import eigh

from plateau_spectra.exceptions import ConfigError
from plateau_spectra.mesh import GridSpec, build_mesh
from plateau_spectra.potential import (PiecewisePotential, WingSpec, asymmetric, counterexample,
                                       gaussian, quartic)
from plateau_spectra.spectral import (assemble, assemble_mesh, bakry_emery_bound,
                                      cell_conductance, dirichlet_energy, laplacian_dot,
                                      neumann_baseline, poincare_constant, surrogate_constant)

SMALL = GridSpec(n_plateau=128, layer_cells_per_scale=8)


def test_stiffness_annihilates_constants():
    k, m, mesh = assemble(counterexample(), 1e-2, SMALL)
    assert np.max(np.abs(k.dot(np.ones(mesh.n_nodes)))) < 1e-12 * np.max(k.diag)
    assert m.dot(np.ones(mesh.n_nodes)).sum() == pytest.approx(mesh.z, rel=1e-13)


def test_flux_forms_match_matrix(rng):
    k, _, mesh = assemble(asymmetric(1, 4), 1e-3, SMALL)
    f = rng.standard_normal(mesh.n_nodes)
    cond = cell_conductance(mesh)
    np.testing.assert_allclose(laplacian_dot(cond, f), k.dot(f), rtol=1e-10, atol=1e-10)
    assert dirichlet_energy(cond, f) == pytest.approx(k.quad(f), rel=1e-10)


@pytest.mark.parametrize("pot,t", [(counterexample(), 1e-2), (asymmetric(1, 4), 1e-3), (quartic(), 1e-3),
                                   (gaussian(2.0), 0.5)])
def test_gap_matches_dense_generalized_eigensolver(pot, t):
    k, m, mesh = assemble(pot, t, SMALL)
    ev, vecs = eigh(k.toarray(), m.toarray())
    res = poincare_constant(pot, t, mesh=mesh)
    assert res.lambda1 == pytest.approx(ev[1], rel=1e-9)
    v = vecs[:, 1] * math.sqrt(mesh.z)
    overlap = abs(np.dot(v, m.dot(res.eigenfunction))) / mesh.z
    assert overlap == pytest.approx(1.0, abs=1e-8)


@given(st.floats(1e-4, 2.0), st.floats(0.2, 5.0))
def test_gaussian_poincare_is_t_over_kappa(t, kappa):
    assert poincare_constant(gaussian(kappa), t).c_p == pytest.approx(t / kappa, rel=1e-6)


def test_segment_baseline():
    exact, f = neumann_baseline(-math.pi / 2, math.pi / 2)
    res = poincare_constant(counterexample(), 0.0)
    assert exact == 1.0
    assert res.c_p == pytest.approx(1.0, rel=1e-6)
    np.testing.assert_allclose(res.eigenfunction, math.sqrt(2) * f(res.nodes), atol=1e-5)
    with pytest.raises(ConfigError):
        neumann_baseline(1.0, 1.0)


@given(st.floats(1e-5, 0.5), st.floats(0.3, 3.0))
def test_scaling_law(t, s):
    # C_P of exp(-V(x / s) / t) is s^2 times C_P of exp(-V / t)
    pot = asymmetric(1.0, 2.0)
    base = poincare_constant(pot, t).c_p
    assert poincare_constant(pot.scaled(s), t).c_p == pytest.approx(s * s * base, rel=1e-6)


@given(st.floats(1e-5, 0.5), st.floats(-5, 5))
def test_translation_and_reflection_invariance(t, shift):
    pot = asymmetric(1.0, 3.0)
    moved = PiecewisePotential(pot.a + shift, pot.b + shift, pot.left, pot.right)
    mirrored = PiecewisePotential(-pot.b, -pot.a, pot.right, pot.left)
    ref = poincare_constant(pot, t).c_p
    assert poincare_constant(moved, t).c_p == pytest.approx(ref, rel=1e-6)
    assert poincare_constant(mirrored, t).c_p == pytest.approx(ref, rel=1e-6)


def test_symmetric_eigenfunction_is_odd():
    res = poincare_constant(counterexample(), 1e-3)
    f = res.eigenfunction_at
    xs = np.linspace(-3, 3, 41)
    np.testing.assert_allclose(f(xs), -f(-xs), atol=1e-6)
    assert res.residual < 1e-8


@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-5, 1.0))
def test_discrete_poincare_inequality(seed, t):
    pot = asymmetric(1.0, 4.0)
    mesh = build_mesh(pot, t, SMALL)
    k, m = assemble_mesh(mesh)
    c_p = poincare_constant(pot, t, mesh=mesh).c_p
    f = np.random.default_rng(seed).standard_normal(mesh.n_nodes).cumsum()
    mean = m.dot(f).sum() / mesh.z
    var = m.quad(f) / mesh.z - mean ** 2
    assert var <= c_p * k.quad(f) / mesh.z * (1 + 1e-9)


def test_mesh_refinement_converges():
    pot = counterexample()
    mesh = build_mesh(pot, 1e-4)
    coarse = poincare_constant(pot, 1e-4, mesh=mesh).c_p
    fine = poincare_constant(pot, 1e-4, mesh=build_mesh(pot, 1e-4, refine=1)).c_p
    # the finer space contains the coarser one, so the Rayleigh maximum can only grow
    assert fine >= coarse * (1 - 1e-12)
    assert fine - coarse < 1e-6


def test_poincare_decreases_with_temperature():
    pot = counterexample()
    vals = [poincare_constant(pot, t).c_p for t in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    assert vals[-1] > 1.0


def test_surrogate_tracks_poincare():
    pot = counterexample()
    for t in (1e-3, 1e-5):
        c_t = surrogate_constant(pot, t)
        c_p = poincare_constant(pot, t).c_p
        assert abs(c_t - c_p) / math.sqrt(t) < 0.3
    assert surrogate_constant(pot, 0.0) == pytest.approx(1.0, rel=1e-6)
    with pytest.raises(ConfigError):
        surrogate_constant(quartic(), 1e-3)


def test_bakry_emery():
    assert bakry_emery_bound(gaussian(2.0), 0.3) == pytest.approx(0.15)
    assert bakry_emery_bound(counterexample(), 0.3) is None
    wing = WingSpec.power(4.0)
    assert bakry_emery_bound(PiecewisePotential(0, 0, wing, wing), 0.3) is None


def test_two_node_hand_assembly():
    from plateau_spectra.mesh import WeightedMesh
    mesh = WeightedMesh.from_nodes(None, 0.0, [0.0, 1.0])
    k, m = assemble_mesh(mesh)
    np.testing.assert_allclose(k.toarray(), [[1, -1], [-1, 1]], atol=1e-15)
    np.testing.assert_allclose(m.toarray(), [[1 / 3, 1 / 6], [1 / 6, 1 / 3]], atol=1e-15)
    _, lumped = assemble_mesh(mesh, lumped=True)
    np.testing.assert_allclose(lumped.diag, [0.5, 0.5], atol=1e-15)


@pytest.mark.parametrize("pot", [counterexample(), asymmetric(1, 4), quartic()])
def test_eigenfunction_normalisation(pot):
    res = poincare_constant(pot, 1e-3)
    _, m = assemble_mesh(res.mesh)
    f = res.eigenfunction
    assert abs(m.dot(f).sum() / res.mesh.z) < 1e-8
    assert m.quad(f) / res.mesh.z == pytest.approx(1.0, abs=1e-8)
    assert res.eigenfunction_at(pot.b) >= 0
    assert res.rayleigh == pytest.approx(res.c_p, rel=1e-8)
