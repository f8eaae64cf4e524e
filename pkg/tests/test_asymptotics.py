import math

import pytest
from hypothesis import given, strategies as st

from plateau_spectra.asymptotics import (AsymptoticModel, conjecture_model, conjecture_prediction,
                                         counterexample_lower_bound, counterexample_lower_model,
                                         lsi_expansion_1d, poincare_expansion_1d, segment_constant,
                                         theorem_1d_coefficient, theorem_cs_limits,
                                         z_expansion_model)
from plateau_spectra.exceptions import ConfigError, MixedExponentError
from plateau_spectra.potential import (PiecewisePotential, WingSpec, asymmetric, counterexample,
                                       gaussian, quartic)

curv = st.floats(0.05, 50.0)


def test_symmetric_coefficient():
    assert theorem_1d_coefficient(1, 1) == pytest.approx(2 * math.sqrt(2 / math.pi), rel=1e-15)
    assert theorem_1d_coefficient(1, 1) == pytest.approx(1.5957691216, rel=1e-10)


def test_asymmetric_coefficient():
    assert theorem_1d_coefficient(1, 4) == pytest.approx(1.5 * math.sqrt(2 / math.pi), rel=1e-15)
    with pytest.raises(ConfigError):
        theorem_1d_coefficient(0, 1)


@given(curv, curv)
def test_general_expansion_reduces_to_quadratic_formula(ka, kb):
    model = poincare_expansion_1d(asymmetric(ka, kb))
    assert model.c0 == pytest.approx(1.0)
    assert model.exponent == 0.5
    assert model.coefficient == pytest.approx(theorem_1d_coefficient(ka, kb), rel=1e-13)


@given(curv, curv, st.floats(0.1, 10.0))
def test_lsi_and_poincare_coefficients_coincide(ka, kb, width):
    pot = PiecewisePotential(0.0, width, WingSpec.quadratic(ka), WingSpec.quadratic(kb))
    p, ls = poincare_expansion_1d(pot), lsi_expansion_1d(pot)
    assert ls.c0 == p.c0 == pytest.approx(width ** 2 / math.pi ** 2)
    assert ls.coefficient == pytest.approx(p.coefficient, rel=1e-13)


def test_quartic_coefficient():
    model = poincare_expansion_1d(quartic())
    assert model.exponent == 0.25
    expected = math.gamma(0.25) / 4 * 2 * 2 * math.pi / math.pi ** 2
    assert model.coefficient == pytest.approx(expected, rel=1e-14)
    assert model.coefficient == pytest.approx(1.1540675, rel=1e-7)


def test_expansions_reject_bad_inputs():
    with pytest.raises(ConfigError):
        poincare_expansion_1d(gaussian())
    with pytest.raises(ConfigError):
        lsi_expansion_1d(quartic())
    with pytest.raises(MixedExponentError):
        poincare_expansion_1d(PiecewisePotential(0, 1, WingSpec.quadratic(1), WingSpec.power(4.0)))
    with pytest.raises(ConfigError):
        AsymptoticModel(1.0, 1.0, 1.5, "poincare")
    with pytest.raises(ConfigError):
        AsymptoticModel(1.0, 1.0, 0.5, "nonsense")


def test_unique_minimiser_limits():
    assert theorem_cs_limits(gaussian(2.0)) == pytest.approx((0.5, 0.5))
    with pytest.raises(ConfigError):
        theorem_cs_limits(counterexample())


@given(st.floats(0, 1))
def test_conjecture_lies_below_proved_lower_bound(t):
    assert conjecture_prediction(counterexample(), t) == pytest.approx(1 + t)
    assert conjecture_model(counterexample()).evaluate(t) == pytest.approx(1 + t)
    # sqrt(8 t / pi) > t on (0, 8 / pi)
    if 1e-12 < t < 2:
        assert counterexample_lower_bound(t) > conjecture_prediction(counterexample(), t)
    assert counterexample_lower_model().evaluate(t) == pytest.approx(counterexample_lower_bound(t))


def test_partition_model():
    model = z_expansion_model(counterexample())
    assert (model.c0, model.exponent) == (math.pi, 0.5)
    assert model.coefficient == pytest.approx(math.sqrt(2 * math.pi))
    assert model.to_dict()["kind"] == "partition"
    assert segment_constant(counterexample()) == pytest.approx(1.0)
