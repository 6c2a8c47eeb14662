import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from asymptotics import (
    PROFILES,
    AsymptoticKind,
    AsymptoticsSetup,
    AveragingKernel,
    asymptotic_field,
    asymptotic_triple_generators,
    build_scattering_state,
    check_clustering,
    ergodic_limit,
    ergodic_trace,
    factorization_residual,
    field_properties,
    intertwiner_report,
    kernel_profile,
    scattering_context,
    scattering_operator,
    smear_along_ray,
    wave_dictionary,
)
from errors import ApproximantError, NotAWaveError, QuadratureBudgetExceeded, WedgeMismatchError
from fock_core import field_operator, ladder_matrices, wave_packet
from spacetime_net import Wedge, affine_element, field_power_element, reflection, sample_wedge_elements, wedge_element


@pytest.mark.parametrize("name", sorted(PROFILES))
def test_kernel_profiles_are_normalized(name):
    profile = kernel_profile(name)
    assert profile.normalization_error() < 1e-8
    assert float(np.atleast_1d(profile.fourier(0.0))[0]) == pytest.approx(1.0)


def test_unknown_kernel_profile():
    with pytest.raises(KeyError):
        kernel_profile("boxcar")


def test_kernel_rejects_bad_exponent_and_center():
    with pytest.raises(ValueError):
        AveragingKernel(PROFILES["gaussian"], 1.2, 8.0)
    with pytest.raises(ValueError):
        AveragingKernel(PROFILES["gaussian"], 0.5, 0.0)


def test_schedule_must_grow():
    with pytest.raises(ValueError):
        AsymptoticsSetup(schedule=(16.0, 8.0))


def test_smearing_the_identity(default_net, setup):
    identity = np.eye(default_net.dim)
    for sign in (1, -1):
        averaged, _ = smear_along_ray(default_net, identity, setup.kernel(16.0), sign)
        assert_allclose(averaged, identity, atol=1e-12)


def test_plus_ray_leaves_net_one_operators_alone(default_net, setup):
    a, creator = ladder_matrices(default_net.net1, 0)
    F = default_net.embed(a.matrix + creator.matrix, None)
    averaged, _ = smear_along_ray(default_net, F, setup.kernel(16.0), +1)
    assert_allclose(averaged, F, atol=1e-12)


def test_minus_ray_damps_by_gaussian_factor(default_net, setup):
    # gap sqrt(2) and |T|^eps = 4 give exp(-(4 sqrt 2)^2 / 2) = exp(-16)
    a, creator = ladder_matrices(default_net.net1, 0)
    F = default_net.embed(a.matrix + creator.matrix, None)
    averaged, _ = smear_along_ray(default_net, F, setup.kernel(16.0), -1)
    assert_allclose(np.abs(averaged), math.exp(-16.0) * np.abs(F), atol=1e-12)
    assert_allclose(ergodic_limit(default_net, F, -1), 0.0)


def test_quadrature_budget_exceeded(default_net, setup):
    with pytest.raises(QuadratureBudgetExceeded):
        smear_along_ray(default_net, np.eye(default_net.dim), setup.kernel(64.0), +1, budget=16)


def test_ergodic_trace_decreases(default_net, setup, rng):
    F = sample_wedge_elements(default_net, Wedge.RIGHT, 1, rng)[0]
    for sign in (1, -1):
        trace = ergodic_trace(default_net, F.operator, sign, setup)
        assert trace.monotone
        assert trace.final_residual <= 1e-3
        assert all(r <= b + 1e-12 for r, b in zip(trace.residuals, trace.bounds))
        assert len(trace.rows()) == len(setup.schedule)


def test_factorization_closed_form(default_net, setup, rng):
    F = sample_wedge_elements(default_net, Wedge.RIGHT, 1, rng)[0]
    for kind in (AsymptoticKind.OUT_PLUS, AsymptoticKind.IN_MINUS):
        phi, trace = asymptotic_field(default_net, F, kind, setup)
        assert factorization_residual(default_net, F, phi, kind) <= 1e-8
        assert trace.schedule[-1] == (64.0 if kind.future else -64.0)


def test_squared_fields_factorize_onto_pinched_leg(default_net, setup, rng):
    F = sample_wedge_elements(default_net, Wedge.RIGHT, 1, rng)[0]
    power = field_power_element(default_net, F.factors[0][0], F.factors[1][1], 2)
    for kind in (AsymptoticKind.OUT_PLUS, AsymptoticKind.IN_MINUS):
        phi, _ = asymptotic_field(default_net, power, kind, setup)
        assert factorization_residual(default_net, power, phi, kind, pinched=True) <= 1e-8
        # phi(g)^2 keeps number-operator terms, so the vacuum expectation alone is not the limit
        assert factorization_residual(default_net, power, phi, kind) > 1e-3


def test_extrapolated_limit_beats_last_approximant(default_net, rng):
    setup = AsymptoticsSetup(schedule=(2.0, 4.0, 8.0))
    F = sample_wedge_elements(default_net, Wedge.RIGHT, 1, rng)[0]
    phi, trace = asymptotic_field(default_net, F, AsymptoticKind.OUT_PLUS, setup)
    exact = ergodic_limit(default_net, F.operator, AsymptoticKind.OUT_PLUS.sign)
    assert trace.final_residual > 1e-6
    assert np.linalg.norm(phi - exact) <= 1e-2 * trace.final_residual
    assert trace.extrapolation_shift == pytest.approx(trace.final_residual, rel=1e-2)


def test_field_properties_of_a_sampled_element(default_net, setup, rng):
    F = sample_wedge_elements(default_net, Wedge.RIGHT, 1, rng)[0]
    partners = sample_wedge_elements(default_net, Wedge.LEFT, 2, rng)
    properties = field_properties(default_net, F, AsymptoticKind.OUT_PLUS, setup, partners=partners)
    assert properties["invariance"] <= 1e-8
    assert properties["vacuum"] <= 1e-8
    assert properties["covariance"] <= 1e-8
    assert properties["extrapolation_shift"] >= 0.0
    assert np.isfinite(properties["strong_convergence"])


def test_dictionary_letters_differ_between_wedges(small_net):
    dictionary = wave_dictionary(small_net, functions=2, word_length=1)
    right = dictionary[AsymptoticKind.OUT_PLUS]
    left = dictionary[AsymptoticKind.IN_PLUS]
    assert [F.wedge for F in right] == [Wedge.RIGHT] * len(right)
    assert [F.wedge for F in left] == [Wedge.LEFT] * len(left)
    for F, G in zip(right[1:], left[1:]):
        assert np.linalg.norm(F.operator - G.operator) > 1e-2


def test_field_without_constant_has_zero_vacuum_expectation(default_net, setup):
    f = wave_packet(default_net.net1.grid, -math.pi / 2.0, 0.4)
    F = affine_element(default_net, f, None, c0=0.0)
    phi, _ = asymptotic_field(default_net, F, AsymptoticKind.OUT_PLUS, setup)
    omega = default_net.vacuum
    assert abs(np.vdot(omega, phi @ omega)) <= 1e-12
    expected = default_net.embed(field_operator(default_net.net1, f).matrix, None)
    assert_allclose(phi, expected, atol=1e-10)


def test_wrong_wedge_is_rejected(default_net, setup, rng):
    F = sample_wedge_elements(default_net, Wedge.RIGHT, 1, rng)[0]
    with pytest.raises(WedgeMismatchError):
        asymptotic_field(default_net, F, AsymptoticKind.IN_PLUS, setup)


def test_primed_fields_agree_with_direct_limit(default_net, setup, rng):
    J = reflection(default_net)
    F = sample_wedge_elements(default_net, Wedge.RIGHT, 1, rng)[0]
    G = J.conjugate_element(F)
    for kind in (AsymptoticKind.IN_PLUS, AsymptoticKind.OUT_MINUS):
        phi, trace = asymptotic_field(default_net, G, kind, setup, J)
        assert trace.cross_check <= 1e-10
        assert factorization_residual(default_net, G, phi, kind) <= 1e-8


def test_vacuum_pair_scatters_to_vacuum(small_context):
    omega = small_context.net.vacuum
    for direction in ("out", "in"):
        state = build_scattering_state(small_context, omega, omega, direction)
        assert_allclose(state.composed, omega, atol=1e-8)


def test_chiral_two_wave_state(small_context):
    net = small_context.net
    e1 = np.eye(net.net1.dim)[1]
    e2 = np.eye(net.net2.dim)[2]
    plus = net.product_vector(e1, net.net2.vacuum)
    minus = net.product_vector(net.net1.vacuum, e2)
    state = build_scattering_state(small_context, plus, minus, "out")
    assert_allclose(state.composed, np.kron(e1, e2), atol=1e-8)
    assert state.checks["norm_factorization"] <= 1e-8
    incoming = build_scattering_state(small_context, plus, minus, "in")
    assert incoming.checks["in_duality"] <= 1e-8


def test_bad_direction(small_context):
    omega = small_context.net.vacuum
    with pytest.raises(ValueError):
        build_scattering_state(small_context, omega, omega, "sideways")


def test_non_wave_is_rejected(small_context):
    net = small_context.net
    excited = np.eye(net.net2.dim)[1]
    with pytest.raises(NotAWaveError):
        build_scattering_state(small_context, net.product_vector(net.net1.vacuum, excited), net.vacuum)


def test_missing_approximant(small_net, setup):
    bare = scattering_context(small_net, setup, dictionary=wave_dictionary(small_net, functions=1, word_length=0))
    plus = small_net.product_vector(np.eye(small_net.net1.dim)[1], small_net.net2.vacuum)
    with pytest.raises(ApproximantError):
        build_scattering_state(bare, plus, small_net.vacuum)


def test_clustering_of_identities(small_context):
    net = small_context.net
    one_right = wedge_element(net, [], [(1.0, ())], Wedge.RIGHT)
    one_left = wedge_element(net, [], [(1.0, ())], Wedge.LEFT)
    assert check_clustering(small_context, one_right, one_right, one_left, one_left) == pytest.approx(0.0, abs=1e-14)


def test_clustering_of_sampled_elements(small_context, rng):
    net = small_context.net
    F, G = sample_wedge_elements(net, Wedge.RIGHT, 2, rng)
    Fp, Gp = sample_wedge_elements(net, Wedge.LEFT, 2, rng)
    assert check_clustering(small_context, F, G, Fp, Gp) <= 1e-6


def test_scattering_operator_is_identity(small_context, rng):
    S = scattering_operator(small_context, rng=rng)
    assert S.rank == S.dim == 16
    for name in ("identity", "unitarity", "vacuum", "covariance", "exact_chiral", "random_isometry"):
        assert S.checks[name] <= 1e-6, name
    assert S.checks["completeness_defect"] == 0.0
    assert_allclose(S.matrix, np.eye(16), atol=1e-6)


def test_asymptotic_triple_and_intertwiner(small_context, rng):
    net = small_context.net
    samples = list(zip(sample_wedge_elements(net, Wedge.RIGHT, 2, rng, leg_mask=(True, False)),
                       sample_wedge_elements(net, Wedge.RIGHT, 2, rng, leg_mask=(True, False))))
    primed = list(zip(sample_wedge_elements(net, Wedge.LEFT, 2, rng, leg_mask=(False, True)),
                      sample_wedge_elements(net, Wedge.LEFT, 2, rng, leg_mask=(False, True))))
    triple = asymptotic_triple_generators(small_context, samples, primed)
    for name in ("commutator_exact_legs", "vacuum_action", "chiral_structure", "scattering_identity"):
        assert triple.checks[name] <= 1e-6, name
    assert triple.checks["asymptotic_vacuum_defect"] == 0.0

    report = intertwiner_report(net, triple, samples)
    assert report["unitarity"] <= 1e-12
    assert report["vacuum"] <= 1e-12
    assert report["covariance"] <= 1e-10
    assert report["generator_mapping"] <= 1e-6
