import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from errors import CacheChecksumError, DimensionOverflowError, StaleCacheError, SupportViolationError
from fock_core import ModeGrid, build_fock_space, wave_packet
from spacetime_net import (
    WEDGE_LEAKAGE,
    Wedge,
    apply_translation,
    build_two_d_net,
    field_power_element,
    mass_squared,
    reflection,
    sample_wedge_elements,
    structural_report,
    translation_unitary,
    wedge_element,
)
from spectrum_cache import cache_path, cache_spectrum, cached_spectrum, load_spectrum, spectral_key


def test_default_net_dimension(default_net):
    assert default_net.dim == 81
    assert default_net.vacuum[default_net.vacuum_index] == 1.0


def test_structural_report_is_exact(default_net):
    report = structural_report(default_net)
    for name, value in report.items():
        assert value <= 1e-12, name


def test_right_mover_has_equal_energy_and_momentum(default_net):
    space = default_net.net1
    psi = default_net.product_vector(space.state_vector((1, 0, 0)), default_net.net2.vacuum)
    i = int(np.argmax(np.abs(psi)))
    assert default_net.energies[i] == pytest.approx(1 / math.sqrt(2))
    assert default_net.momenta[i] == pytest.approx(1 / math.sqrt(2))
    assert default_net.plus_mask[i]
    assert not default_net.minus_mask[i]


def test_mass_squared_of_pair(default_net):
    space = default_net.net1
    one = space.state_vector((1, 0, 0))
    psi = default_net.product_vector(one, one)
    M2 = mass_squared(default_net)
    assert np.vdot(psi, M2 @ psi).real == pytest.approx(2.0)


def test_spectrum_in_forward_cone(default_net):
    assert all(s.in_forward_cone for s in default_net.joint_spectrum)
    covered = sorted(i for s in default_net.joint_spectrum for i in s.indices)
    assert covered == list(range(default_net.dim))


def test_translation_at_origin_is_identity(default_net):
    assert_allclose(translation_unitary(default_net, (0.0, 0.0)), np.eye(default_net.dim))


def test_vacuum_is_translation_invariant(default_net):
    for x in [(1.0, 0.3), (-2.0, 5.0)]:
        assert_allclose(translation_unitary(default_net, x) @ default_net.vacuum, default_net.vacuum)


def test_translation_of_wedge_element(default_net, rng):
    F = sample_wedge_elements(default_net, Wedge.RIGHT, 1, rng)[0]
    x = (0.1, 0.5)
    moved = apply_translation(default_net, F, x)
    U = translation_unitary(default_net, x)
    assert_allclose(moved.operator, U @ F.operator @ U.conj().T, atol=1e-12)
    assert_allclose(np.kron(*moved.legs), moved.operator, atol=1e-10)
    assert moved.wedge is Wedge.RIGHT


def test_translation_out_of_wedge_violates_support(default_net, rng):
    F = sample_wedge_elements(default_net, Wedge.RIGHT, 1, rng)[0]
    with pytest.raises(SupportViolationError):
        apply_translation(default_net, F, (0.0, -40.0))


def test_lightcone_projections_on_chiral_states(default_net):
    space = default_net.net1
    psi1 = (space.vacuum + space.state_vector((1, 0, 0))) / math.sqrt(2)
    state = default_net.product_vector(psi1, default_net.net2.vacuum)
    assert_allclose(default_net.Pplus @ state, state)
    assert_allclose(default_net.Pminus @ state, np.vdot(space.vacuum, psi1) * default_net.vacuum)


def test_empty_word_is_identity(small_net):
    element = wedge_element(small_net, [], polynomial=[(1.0, ())])
    assert_allclose(element.operator, np.eye(small_net.dim))


def test_wrong_side_support_raises(default_net):
    grid = default_net.net1.grid
    f = wave_packet(grid, 2.0, 0.3)
    with pytest.raises(SupportViolationError):
        wedge_element(default_net, [(f, None)], wedge=Wedge.RIGHT)
    # the same packet is admissible for the left wedge
    wedge_element(default_net, [(f, None)], wedge=Wedge.LEFT)


def test_quarter_period_packet_belongs_to_one_wedge(default_net):
    f = wave_packet(default_net.net1.grid, -math.pi / 2.0, 0.4)
    F = wedge_element(default_net, [(f, None)], wedge=Wedge.RIGHT)
    assert F.wedge is Wedge.RIGHT
    with pytest.raises(SupportViolationError):
        wedge_element(default_net, [(f, None)], wedge=Wedge.LEFT)


def test_support_is_measured_on_the_circle(default_net):
    grid = default_net.net1.grid
    f = wave_packet(grid, -math.pi / 2.0, 0.4)
    wrapped = wave_packet(grid, -math.pi / 2.0 + grid.period, 0.4)
    assert wrapped.reduced_center == pytest.approx(-math.pi / 2.0)
    assert wrapped.side_leakage(-1) == pytest.approx(f.side_leakage(-1), abs=1e-12)
    wedge_element(default_net, [(wrapped, None)], wedge=Wedge.RIGHT)


def test_right_and_left_samples_are_different_operators(default_net):
    right = sample_wedge_elements(default_net, Wedge.RIGHT, 3, np.random.default_rng(7))
    left = sample_wedge_elements(default_net, Wedge.LEFT, 3, np.random.default_rng(7))
    for F, G in zip(right, left):
        assert np.linalg.norm(F.operator - G.operator) > 1e-2


def test_field_power_element_legs(default_net, rng):
    F = sample_wedge_elements(default_net, Wedge.RIGHT, 1, rng)[0]
    power = field_power_element(default_net, F.factors[0][0], F.factors[1][1], 2)
    assert_allclose(default_net.embed(*power.legs), power.operator, atol=1e-10)
    with pytest.raises(ValueError):
        field_power_element(default_net, F.factors[0][0], F.factors[1][1], 0)


def test_sampled_legs_match_operator(default_net, rng):
    for wedge in Wedge:
        for F in sample_wedge_elements(default_net, wedge, 3, rng):
            assert F.wedge is wedge
            assert_allclose(default_net.embed(*F.legs), F.operator, atol=1e-10)


def test_reflection_basics(default_net):
    J = reflection(default_net)
    omega = default_net.vacuum
    assert_allclose(J.apply(omega), omega)
    assert_allclose(J.apply(1j * omega), -1j * omega)
    U = translation_unitary(default_net, (1.0, 0.0))
    assert_allclose(J.conjugate(U) @ U, np.eye(default_net.dim), atol=1e-12)
    assert all(value <= 1e-12 for value in J.checks.values())


def test_reflected_element_lives_in_opposite_wedge(default_net, rng):
    J = reflection(default_net)
    F = sample_wedge_elements(default_net, Wedge.RIGHT, 1, rng)[0]
    G = J.conjugate_element(F)
    assert G.wedge is Wedge.LEFT
    assert_allclose(G.operator, np.conj(F.operator))
    for f, g in G.factors:
        assert f is None or f.side_leakage(+1) <= WEDGE_LEAKAGE
        assert g is None or g.side_leakage(-1) <= WEDGE_LEAKAGE


def test_dimension_overflow():
    space = build_fock_space(ModeGrid(1.0, 3), per_mode_cap=2, energy_cap=4.0)
    with pytest.raises(DimensionOverflowError):
        build_two_d_net(space, space, max_dim=50)


def _spaces(spacing=1.0):
    space = build_fock_space(ModeGrid(spacing, 2), per_mode_cap=2, energy_cap=2.0 * spacing)
    return space, space


def test_spectrum_cache_round_trip(tmp_path):
    net1, net2 = _spaces()
    net = build_two_d_net(net1, net2)
    cache_spectrum(net, str(tmp_path))
    loaded = load_spectrum(spectral_key(net1, net2), str(tmp_path))
    assert loaded == net.joint_spectrum
    assert cached_spectrum(net1, net2, str(tmp_path)) == net.joint_spectrum


def test_spectral_key_depends_on_grid():
    assert spectral_key(*_spaces(1.0)) != spectral_key(*_spaces(0.5))


def test_corrupted_cache_raises(tmp_path):
    net1, net2 = _spaces()
    path = cache_spectrum(build_two_d_net(net1, net2), str(tmp_path))
    with open(path) as f:
        document = json.load(f)
    document["spectrum"][0]["energy"] = 99.0
    with open(path, "w") as f:
        json.dump(document, f)
    with pytest.raises(CacheChecksumError):
        load_spectrum(spectral_key(net1, net2), str(tmp_path))


def test_stale_cache_is_detected_and_recomputed(tmp_path):
    old1, old2 = _spaces(1.0)
    new1, new2 = _spaces(0.5)
    written = cache_spectrum(build_two_d_net(old1, old2), str(tmp_path))
    stale = cache_path(spectral_key(new1, new2), str(tmp_path))
    with open(written) as src, open(stale, "w") as dst:
        dst.write(src.read())

    with pytest.raises(StaleCacheError):
        load_spectrum(spectral_key(new1, new2), str(tmp_path))
    assert cached_spectrum(new1, new2, str(tmp_path)) == build_two_d_net(new1, new2).joint_spectrum
    assert load_spectrum(spectral_key(new1, new2), str(tmp_path))
