import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from errors import QuadratureBudgetExceeded
from fock_core import ModeGrid, largest_increase, trend_slack
from harness import spot_pair_index
from spacetime_net import SAMPLE_POINTS, Wedge, sample_wedge_elements, translation_unitary, wedge_element
from warp import (
    MOLLIFIERS,
    DeformationContext,
    DeformationMatrix,
    commutant_trend,
    deform_element,
    deformed_commutant_check,
    deformed_out_state,
    deformed_scattering_operator,
    gaussian_closed_form,
    mollifier,
    mollifier_independence,
    momentum_vectors,
    phase_operator,
    regularized_factors,
    warp_covariance_residual,
    warp_oscillatory,
    warp_spectral,
)


@pytest.fixture
def element(small_net, rng):
    return sample_wedge_elements(small_net, Wedge.RIGHT, 1, rng)[0]


def test_deformation_matrix_validation():
    with pytest.raises(ValueError):
        DeformationMatrix(-0.1)
    with pytest.raises(ValueError):
        DeformationMatrix(0.5, sign=2)
    Q = DeformationMatrix(0.5)
    assert_allclose((-Q).matrix, -Q.matrix)


def test_deformation_matrix_is_antisymmetric():
    assert DeformationMatrix(0.7).antisymmetry_residual(SAMPLE_POINTS) <= 1e-12


def test_unknown_mollifier():
    with pytest.raises(KeyError):
        mollifier("boxcar")


def test_regulators_must_decrease():
    with pytest.raises(ValueError):
        DeformationContext(DeformationMatrix(0.5), regulators=(0.1, 0.2))


def test_zero_deformation_is_identity(small_net, element):
    assert_allclose(warp_spectral(small_net, element.operator, DeformationMatrix(0.0)), element.operator)


def test_warp_preserves_vacuum_column(small_net, element):
    FQ = warp_spectral(small_net, element.operator, DeformationMatrix(0.8))
    omega = small_net.vacuum
    assert_allclose(FQ @ omega, element.operator @ omega, atol=1e-14)


def test_spectral_form_matches_direct_conjugation(small_net, element):
    Q = DeformationMatrix(0.5)
    F = element.operator
    direct = np.zeros_like(F)
    for n, p in enumerate(momentum_vectors(small_net)):
        U = translation_unitary(small_net, Q.apply(p))
        direct[:, n] = (U @ F @ U.conj().T)[:, n]
    assert_allclose(warp_spectral(small_net, F, Q), direct, atol=1e-12)


def test_warp_is_covariant(small_net, element):
    assert warp_covariance_residual(small_net, element, DeformationMatrix(0.5)) <= 1e-12


def test_gaussian_closed_form_matches_quadrature(small_net):
    Q = DeformationMatrix(0.5)
    numeric = regularized_factors(small_net, Q, MOLLIFIERS["product-gaussian"], 0.2, 48)
    assert_allclose(numeric, gaussian_closed_form(small_net, Q, 0.2), atol=1e-8)


def test_oscillatory_form_matches_spectral(small_net, element):
    context = DeformationContext(DeformationMatrix(0.5))
    deformed = deform_element(small_net, element, context.Q, context)
    assert deformed.oracle_distance <= 1e-4
    assert len(deformed.regulator_trace) == len(context.regulators)
    assert deform_element(small_net, element, context.Q).oracle_distance is None


@pytest.mark.parametrize("kappa", [0.25, 1.0])
def test_oscillatory_form_matches_spectral_across_kappa(small_net, element, kappa):
    context = DeformationContext(DeformationMatrix(kappa))
    assert deform_element(small_net, element, context.Q, context).oracle_distance <= 1e-4


def test_undeformed_extrapolation(small_net, element):
    extrapolated, _ = warp_oscillatory(small_net, element.operator, DeformationMatrix(0.0))
    assert_allclose(extrapolated, element.operator, atol=1e-5)


def test_mollifier_families_agree(small_net, element):
    assert mollifier_independence(small_net, element, DeformationMatrix(0.25)) <= 1e-5


def test_warp_budget_exceeded(small_net, element):
    with pytest.raises(QuadratureBudgetExceeded):
        warp_oscillatory(small_net, element.operator, DeformationMatrix(0.5), budget=100)


def test_commutant_with_identity_vanishes(small_net, element):
    one = wedge_element(small_net, [], [(1.0, ())], Wedge.LEFT)
    assert deformed_commutant_check(small_net, [element], [one], 0.5) == pytest.approx(0.0, abs=1e-12)


def test_commutant_trend_shape():
    trend = commutant_trend(ModeGrid(1.0, 2), 0.5, caps=(1, 2))
    assert trend["caps"] == [1, 2]
    assert len(trend["values"]) == len(trend["operator_norms"]) == 2
    assert all(0 <= v <= w + 1e-12 for v, w in zip(trend["values"], trend["operator_norms"]))
    assert trend["largest_increase"] == pytest.approx(largest_increase(trend["values"]))
    assert trend["non_increasing"] == (trend["largest_increase"] <= trend_slack(trend["values"]))


def test_undeformed_mixed_elements_commute():
    # antipodal packets on an integer grid have vanishing two-point commutator in every mode
    trend = commutant_trend(ModeGrid(1.0, 2), 0.0, caps=(1, 2))
    assert max(trend["operator_norms"]) <= 1e-12
    assert trend["non_increasing"]


def test_phase_operator_on_lowest_pair(default_net):
    # M^2 = 2 for one lowest-mode quantum per factor, so kappa = 0.5 gives exp(i)
    one = default_net.net1.state_vector((1, 0, 0))
    psi = default_net.product_vector(one, one)
    value = np.vdot(psi, phase_operator(default_net, 0.5) @ psi)
    assert value == pytest.approx(np.exp(1j))
    assert value.real == pytest.approx(math.cos(1.0))

    two = default_net.net2.state_vector((0, 1, 0))
    psi = default_net.product_vector(one, two)
    assert np.vdot(psi, phase_operator(default_net, 0.5) @ psi) == pytest.approx(np.exp(2j))


def test_deformed_vacuum_pair(small_context):
    omega = small_context.net.vacuum
    state = deformed_out_state(small_context, omega, omega, 0.5)
    assert_allclose(state.composed, omega, atol=1e-8)
    assert state.checks["path_distance"] <= 1e-8


def test_deformed_state_paths_agree(small_context):
    net = small_context.net
    e1 = np.eye(net.net1.dim)[1]
    plus = net.product_vector(e1, net.net2.vacuum)
    minus = net.product_vector(net.net1.vacuum, e1)
    for direction in ("out", "in"):
        state = deformed_out_state(small_context, plus, minus, 0.5, direction)
        assert state.checks["path_distance"] <= 1e-8


def test_zero_kappa_reproduces_undeformed_s(small_context):
    result = deformed_scattering_operator(small_context, 0.0)
    assert result.checks["correction"] <= 1e-6
    assert result.checks["interaction_gap"] <= 1e-6
    assert_allclose(result.matrix, result.undeformed, atol=1e-6)


def test_deformed_s_eigenphases(small_context):
    kappa = 0.5
    result = deformed_scattering_operator(small_context, kappa)
    assert result.checks["correction"] <= 1e-6
    assert result.checks["phase_error"] <= 1e-4
    assert result.checks["unitarity"] <= 1e-6

    spot = result.eigenphases[spot_pair_index(small_context.net)]
    # lowest mode 0.5 in each factor: M^2 = 2 * 0.5 * 0.5
    assert spot["mass_squared"] == pytest.approx(0.5)
    assert spot["eigenvalue"].real == pytest.approx(math.cos(2 * kappa * 0.5 * 0.5), abs=1e-4)
    for row in result.eigenphases:
        assert abs(row["eigenvalue"] - np.exp(1j * kappa * row["mass_squared"])) <= 1e-4
