#!/usr/bin/env python3
"""
Finite-dimensional Tomita-Takesaki theory.

Algebras are spans of matrices closed under products and adjoints. For a
cyclic and separating vector Omega the Tomita map S: A Omega -> A* Omega is
antilinear, S xi = M conj(xi), and its polar decomposition gives

    Delta = S* S = M^T conj(M),    J xi = V conj(xi),  V = M conj(Delta^-1/2)

so J A J = V conj(A) conj(V). Matrices are vectorized column-major when
solving linear conditions on them.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from errors import ModularError, NotCyclicError, NotSeparatingError
from fock_core import ModeGrid, build_fock_space, wave_packet
from spacetime_net import TwoDNet, build_two_d_net, reflection, wedge_element

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-8
IDENTITY_TOLERANCE = 1e-10
DEFAULT_FLOW_TIMES = (0.5, 1.0, 2.0)
# A single mode has a flat density: half its mass sits on either side of the circle.
FLAT_LEAKAGE = 0.5 + 1e-12


def vec(A) -> np.ndarray:
    """Column-major flattening."""
    return np.asarray(A).flatten("F")


def inv_vec(v, dim: int) -> np.ndarray:
    return np.asarray(v).reshape((dim, dim), order="F")


def rank(A, eps: float = RANK_TOLERANCE) -> int:
    """Number of singular values above eps relative to the largest."""
    s = linalg.svdvals(A)
    if not len(s) or s[0] == 0:
        return 0
    return int(np.sum(s > eps * s[0]))


def _span_basis(matrices, dim, eps=1e-12):
    """Orthonormal (Hilbert-Schmidt) basis of the span of matrices, shape (k, dim, dim)."""
    if not len(matrices):
        return np.zeros((0, dim, dim), dtype=complex)
    columns = np.array([vec(A) for A in matrices]).T
    basis = linalg.orth(columns, rcond=eps)
    return np.array([inv_vec(basis[:, k], dim) for k in range(basis.shape[1])])


@dataclass(frozen=True, eq=False)
class MatrixAlgebra:
    """*-algebra spanned by basis; generators record how it was obtained."""

    generators: tuple = field(repr=False)
    basis: np.ndarray = field(repr=False)
    selfadjoint_closed: bool = True

    @property
    def dim(self) -> int:
        """Size of the matrices."""
        return self.basis.shape[1]

    @property
    def rank(self) -> int:
        """Linear dimension of the algebra."""
        return self.basis.shape[0]

    def span_residual(self, A) -> float:
        """Distance of A from the span, in Hilbert-Schmidt norm."""
        columns = np.array([vec(B) for B in self.basis]).T
        a = vec(A)
        return float(np.linalg.norm(a - columns @ (columns.conj().T @ a)))

    def contains(self, A, tolerance: float = IDENTITY_TOLERANCE) -> bool:
        return self.span_residual(A) <= tolerance * max(1.0, float(np.linalg.norm(A)))


def generated_algebra(generators, max_rank: int | None = None) -> MatrixAlgebra:
    """
    Unital *-algebra generated by a list of square matrices.

    The span of {1, G, G*} is multiplied with itself until it stops growing.
    """
    generators = tuple(np.asarray(G, dtype=complex) for G in generators)
    if not generators:
        raise ValueError("at least one generator is needed")
    dim = generators[0].shape[0]
    if any(G.shape != (dim, dim) for G in generators):
        raise ValueError("generators must be square matrices of one size")
    max_rank = dim * dim if max_rank is None else max_rank

    basis = _span_basis([np.eye(dim)] + [M for G in generators for M in (G, G.conj().T)], dim)
    while True:
        products = [A @ B for A in basis for B in basis]
        grown = _span_basis(list(basis) + products, dim)
        if grown.shape[0] > max_rank:
            raise ValueError(f"generated algebra exceeds rank bound {max_rank}")
        if grown.shape[0] == basis.shape[0]:
            break
        basis = grown
    logger.debug("generated algebra: %d generators on dim %d -> rank %d", len(generators), dim, basis.shape[0])
    return MatrixAlgebra(generators, basis)


def commutant(alg: MatrixAlgebra) -> MatrixAlgebra:
    """
    All X with [X, G] = 0 for every generator G and its adjoint.

    vec(XG) = (G^T x 1) vec(X) and vec(GX) = (1 x G) vec(X).
    """
    dim = alg.dim
    identity = np.eye(dim)
    blocks = []
    for G in alg.generators:
        for M in (G, G.conj().T):
            blocks.append(np.kron(M.T, identity) - np.kron(identity, M))
    kernel = linalg.null_space(np.vstack(blocks), rcond=1e-12)
    basis = np.array([inv_vec(kernel[:, k], dim) for k in range(kernel.shape[1])])
    return MatrixAlgebra(tuple(basis), basis)


def double_commutant(alg: MatrixAlgebra) -> MatrixAlgebra:
    return commutant(commutant(alg))


def span_distance(first: MatrixAlgebra, second: MatrixAlgebra) -> float:
    """Largest distance of a basis element of either algebra from the other's span."""
    forward = max((second.span_residual(B) for B in first.basis), default=0.0)
    backward = max((first.span_residual(B) for B in second.basis), default=0.0)
    return max(forward, backward)


@dataclass(frozen=True, eq=False)
class ModularData:
    """Modular operator Delta and conjugation J = V K of (alg, Omega)."""

    delta: np.ndarray = field(repr=False)
    conjugation: np.ndarray = field(repr=False)
    omega: np.ndarray = field(repr=False)
    checks: dict = field(default_factory=dict)

    def apply_J(self, xi) -> np.ndarray:
        return self.conjugation @ np.conj(xi)

    def conjugate(self, A) -> np.ndarray:
        """J A J."""
        return self.conjugation @ np.conj(A) @ np.conj(self.conjugation)

    def delta_power(self, exponent) -> np.ndarray:
        values, vectors = linalg.eigh(self.delta)
        return (vectors * np.power(values.astype(complex), exponent)) @ vectors.conj().T

    def flow(self, A, t: float) -> np.ndarray:
        """Delta^{it} A Delta^{-it}."""
        forward = self.delta_power(1j * t)
        return forward @ A @ forward.conj().T


def modular_objects(alg: MatrixAlgebra, omega, rank_tolerance: float = RANK_TOLERANCE,
                    tolerance: float = IDENTITY_TOLERANCE) -> ModularData:
    """
    Delta and J of alg with respect to omega.

    Raises:
        NotCyclicError: alg omega does not span the space
        NotSeparatingError: alg' omega does not span the space
        ModularError: a defining identity fails beyond tolerance
    """
    omega = np.asarray(omega, dtype=complex)
    dim = alg.dim
    X = np.array([B @ omega for B in alg.basis]).T
    if rank(X, rank_tolerance) < dim:
        raise NotCyclicError(f"algebra vectors span {rank(X, rank_tolerance)} of {dim} dimensions")
    prime = commutant(alg)
    if rank(np.array([C @ omega for C in prime.basis]).T, rank_tolerance) < dim:
        raise NotSeparatingError(f"commutant of rank {prime.rank} does not act cyclically on omega")

    Y = np.array([B.conj().T @ omega for B in alg.basis]).T
    M = Y @ linalg.pinv(np.conj(X))
    delta = M.T @ np.conj(M)
    delta = 0.5 * (delta + delta.conj().T)
    values, vectors = linalg.eigh(delta)
    if values[0] <= 0:
        raise ModularError(f"modular operator is not positive definite (smallest eigenvalue {values[0]:.2e})")
    inverse_root = (vectors / np.sqrt(values)) @ vectors.conj().T
    V = M @ np.conj(inverse_root)

    data = ModularData(delta, V, omega)
    conjugated = MatrixAlgebra(alg.generators, _span_basis([data.conjugate(B) for B in alg.basis], dim))
    inverse = (vectors / values) @ vectors.conj().T
    checks = {
        "delta_vacuum": float(np.linalg.norm(delta @ omega - omega)),
        "J_vacuum": float(np.linalg.norm(data.apply_J(omega) - omega)),
        "J_involution": float(np.abs(V @ np.conj(V) - np.eye(dim)).max()),
        "J_unitary": float(np.abs(V.conj().T @ V - np.eye(dim)).max()),
        "J_delta_inversion": float(np.abs(data.conjugate(delta) - inverse).max()),
        "JAJ_commutant": span_distance(conjugated, prime),
    }
    scale = max(1.0, float(np.linalg.norm(omega)))
    failed = {name: value for name, value in checks.items() if value > tolerance * scale}
    if failed:
        raise ModularError(f"modular identities fail: {failed}")
    logger.debug("modular objects on dim %d: %s", dim, checks)
    return ModularData(delta, V, omega, checks)


def modular_flow_residual(alg: MatrixAlgebra, data: ModularData, times=DEFAULT_FLOW_TIMES) -> float:
    """max over t and basis elements of the distance of Delta^{it} B Delta^{-it} from alg."""
    return max(alg.span_residual(data.flow(B, t)) for t in times for B in alg.basis)


# --- worked examples --------------------------------------------------------

def diagonal_example(alpha: complex = 0.6 + 0.3j, beta: complex = 0.5 - 0.55j):
    """
    Maximal abelian diagonal algebra on C^2 with omega = (alpha, beta).

    Returns:
        tuple: (algebra, omega, expected Delta, expected V)
    """
    alg = generated_algebra([np.diag([1.0, 0.0])])
    omega = np.array([alpha, beta], dtype=complex)
    expected_V = np.diag([alpha / np.conj(alpha), beta / np.conj(beta)])
    return alg, omega, np.eye(2, dtype=complex), expected_V


def standard_form_example(weights=(0.7, 0.3)):
    """
    M_2 x 1 on C^2 x C^2 with omega = sum_i sqrt(w_i) e_i x e_i.

    Delta comes from the singular value decomposition of omega reshaped to
    a 2 x 2 matrix: Delta = rho1 x rho2^-1. V is the tensor flip.

    Returns:
        tuple: (algebra, omega, expected Delta, expected V)
    """
    d = len(weights)
    units = [np.outer(np.eye(d)[i], np.eye(d)[j]) for i in range(d) for j in range(d)]
    alg = generated_algebra([np.kron(E, np.eye(d)) for E in units])
    omega = sum(math.sqrt(w) * np.kron(np.eye(d)[i], np.eye(d)[i]) for i, w in enumerate(weights))
    omega = omega.astype(complex)

    U, s, Vh = linalg.svd(omega.reshape(d, d))
    rho1 = (U * s ** 2) @ U.conj().T
    rho2 = (Vh.T * s ** 2) @ np.conj(Vh)
    expected_delta = np.kron(rho1, linalg.inv(rho2))
    flip = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            flip[j * d + i, i * d + j] = 1.0
    return alg, omega, expected_delta, flip


def toy_wedge_net(spacing: float = 1.0, amplitudes=(1.0, 0.6)) -> tuple:
    """
    Single-mode chiral factors with per-mode cap 1 (product dimension 4) and a
    right-wedge element phi1(f) x 1 + 1 x phi2(g) with unequal amplitudes,
    which generates a maximal abelian algebra with cyclic vacuum.

    Returns:
        tuple: (TwoDNet, [WedgeElement])
    """
    grid = ModeGrid(spacing, 1)
    space = build_fock_space(grid, per_mode_cap=1)
    net = build_two_d_net(space, space)
    quarter = grid.period / 4.0
    f = wave_packet(grid, -quarter, 0.5, amplitudes[0])
    g = wave_packet(grid, quarter, 0.5, amplitudes[1])
    element = wedge_element(net, [(f, None), (None, g)], ((1.0, (0,)), (1.0, (1,))), label="phi1+phi2",
                            leakage=FLAT_LEAKAGE)
    return net, [element]


def geometric_vs_modular_report(net: TwoDNet, elements, rank_tolerance: float = RANK_TOLERANCE) -> dict:
    """
    Compare the modular conjugation of the algebra generated by wedge
    elements with the geometric reflection of the net.

    Diagnostic only: at finite truncation the two need not agree.

    Raises:
        NotCyclicError, NotSeparatingError: the vacuum is not a standard vector
    """
    alg = generated_algebra([e.operator for e in elements])
    data = modular_objects(alg, net.vacuum, rank_tolerance)
    J = reflection(net)
    prime = commutant(alg)
    geometric_image = MatrixAlgebra(alg.generators, _span_basis([J.conjugate(B) for B in alg.basis], alg.dim))
    return {
        "algebra_rank": alg.rank,
        "commutant_rank": prime.rank,
        "conjugation_distance": float(np.linalg.norm(data.conjugation - J.orthogonal, 2)),
        "action_distance": max(
            float(np.linalg.norm(data.conjugate(B) - J.conjugate(B), 2)) for B in alg.basis
        ),
        "geometric_commutant_distance": span_distance(geometric_image, prime),
        "modular_flow_residual": modular_flow_residual(alg, data),
        "delta_spread": float(np.ptp(np.real(linalg.eigvalsh(data.delta)))),
    }


def main():
    print("🔁 Finite-dimensional modular theory")
    print("-" * 40)
    for name, example in (("diagonal", diagonal_example), ("standard form", standard_form_example)):
        alg, omega, expected_delta, expected_V = example()
        data = modular_objects(alg, omega)
        print(f"  {name:<14} |Delta - oracle| = {np.abs(data.delta - expected_delta).max():.1e}"
              f"   |V - oracle| = {np.abs(data.conjugation - expected_V).max():.1e}")

    net, elements = toy_wedge_net()
    report = geometric_vs_modular_report(net, elements)
    print("\nGeometric vs modular J (diagnostic):")
    for name, value in report.items():
        print(f"  {name:<28} {value}")


if __name__ == "__main__":
    main()
