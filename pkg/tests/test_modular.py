import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from errors import NotCyclicError, NotSeparatingError
from fock_core import wave_packet
from modular import (
    FLAT_LEAKAGE,
    commutant,
    diagonal_example,
    double_commutant,
    generated_algebra,
    geometric_vs_modular_report,
    modular_flow_residual,
    modular_objects,
    rank,
    span_distance,
    standard_form_example,
    toy_wedge_net,
)
from spacetime_net import wedge_element


def _matrix_units(d):
    return [np.outer(np.eye(d)[i], np.eye(d)[j]) for i in range(d) for j in range(d)]


def test_commutant_of_scalars_is_everything():
    alg = generated_algebra([np.eye(3)])
    assert alg.rank == 1
    assert commutant(alg).rank == 9


def test_commutant_of_full_algebra_is_scalars():
    alg = generated_algebra(_matrix_units(2))
    assert alg.rank == 4
    prime = commutant(alg)
    assert prime.rank == 1
    assert prime.contains(np.eye(2))


def test_diagonal_algebra_is_its_own_commutant():
    alg, *_ = diagonal_example()
    assert alg.rank == 2
    assert span_distance(commutant(alg), alg) <= 1e-10


def test_empty_generator_list():
    with pytest.raises(ValueError):
        generated_algebra([])


def test_rank_of_zero_matrix():
    assert rank(np.zeros((3, 3))) == 0
    assert rank(np.diag([1.0, 1e-12, 0.0])) == 1


@pytest.mark.parametrize("example", [diagonal_example, standard_form_example])
def test_modular_objects_match_closed_form(example):
    alg, omega, expected_delta, expected_V = example()
    data = modular_objects(alg, omega)
    assert_allclose(data.delta, expected_delta, atol=1e-10)
    assert_allclose(data.conjugation, expected_V, atol=1e-10)
    assert_allclose(data.delta @ omega, omega, atol=1e-10)
    assert_allclose(data.apply_J(omega), omega, atol=1e-10)
    assert all(value <= 1e-10 for value in data.checks.values())


def test_standard_form_spectrum():
    alg, omega, _, _ = standard_form_example((0.7, 0.3))
    data = modular_objects(alg, omega)
    eigenvalues = sorted(np.real(np.linalg.eigvalsh(data.delta)))
    assert_allclose(eigenvalues, sorted([3 / 7, 1.0, 1.0, 7 / 3]), atol=1e-10)


def test_modular_flow_preserves_algebra():
    alg, omega, _, _ = standard_form_example()
    data = modular_objects(alg, omega)
    assert modular_flow_residual(alg, data) <= 1e-10
    assert span_distance(double_commutant(alg), alg) <= 1e-10


def test_scalars_are_not_cyclic():
    alg = generated_algebra([np.eye(2)])
    with pytest.raises(NotCyclicError):
        modular_objects(alg, np.array([1.0, 0.0]))


def test_full_algebra_is_not_separating():
    alg = generated_algebra(_matrix_units(2))
    with pytest.raises(NotSeparatingError):
        modular_objects(alg, np.array([1.0, 1.0]) / math.sqrt(2))


def test_toy_wedge_report_is_deterministic():
    net, elements = toy_wedge_net()
    assert net.dim == 4
    first = geometric_vs_modular_report(net, elements)
    second = geometric_vs_modular_report(net, elements)
    assert first == second
    assert all(np.isfinite(value) for value in first.values())
    assert first["algebra_rank"] == 4
    assert first["modular_flow_residual"] <= 1e-10


def test_toy_net_with_full_right_factor_is_not_separating():
    net, [element] = toy_wedge_net()
    f, g = element.factors[0][0], element.factors[1][1]
    ig = wave_packet(g.grid, g.center, g.width, 1j)
    # phi2(g) and phi2(i g) generate every operator on the second factor
    elements = [wedge_element(net, [(f, None)], leakage=FLAT_LEAKAGE),
                wedge_element(net, [(None, g)], leakage=FLAT_LEAKAGE),
                wedge_element(net, [(None, ig)], leakage=FLAT_LEAKAGE)]
    with pytest.raises(NotSeparatingError):
        geometric_vs_modular_report(net, elements)
