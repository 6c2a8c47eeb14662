#!/usr/bin/env python3
"""
Two-dimensional chiral net: Borchers triple data on the tensor product of
two truncated lightline theories.

Conventions:
    H = (P1 x 1 + 1 x P2) / sqrt(2),  P = (P1 x 1 - 1 x P2) / sqrt(2)
    U(x0, x1) = exp(i (H x0 - P x1)) = U1((x0 - x1)/sqrt(2)) x U2((x0 + x1)/sqrt(2))

so H - P = sqrt(2) (1 x P2) and net-1 excitations are the right movers:
ran(P+) = H1 x [Omega2], ran(P-) = [Omega1] x H2.

Both generators are diagonal in the occupation product basis. Joint
eigenvalues are grouped by an exact key (sqrt(2) E, sqrt(2) P) built from
rational multiples of the grid spacings.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy.linalg import expm

from errors import DimensionOverflowError, ReflectionError, SupportViolationError
from fock_core import (
    DEFAULT_MAX_DIM,
    FockSpace,
    TestFunction,
    field_operator,
    wave_packet,
    weyl_operator,
)

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)

# Spacetime points used to certify the reflection at construction time
SAMPLE_POINTS = ((1.0, 0.0), (0.0, 1.0), (0.5, -1.5), (-2.0, 0.3), (1.7, 2.2))

REFLECTION_TOLERANCE = 1e-12

# Largest share of a packet's mass allowed on the wrong half of the circle.
# Two modes cannot go below about 0.18, three modes below about 0.06.
WEDGE_LEAKAGE = 0.25


class Wedge(str, Enum):
    """Right wedge W = {x1 > |x0|} and its causal complement W'."""

    RIGHT = "W"
    LEFT = "W'"

    @property
    def opposite(self) -> Wedge:
        return Wedge.LEFT if self is Wedge.RIGHT else Wedge.RIGHT

    def contains(self, x) -> bool:
        x0, x1 = x
        return x1 >= abs(x0) if self is Wedge.RIGHT else -x1 >= abs(x0)


@dataclass(frozen=True)
class JointEigenspace:
    """Joint eigenspace of (H, P) with its exact key (sqrt(2) E, sqrt(2) P)."""

    key: tuple
    energy: float
    momentum: float
    indices: tuple

    @property
    def in_forward_cone(self) -> bool:
        light_plus, light_minus = self.key
        return light_plus >= abs(light_minus)

    def projection(self, dim: int) -> np.ndarray:
        mask = np.zeros(dim)
        mask[list(self.indices)] = 1.0
        return np.diag(mask).astype(complex)


def _exact_spacing(space: FockSpace) -> Fraction:
    return Fraction(str(space.grid.spacing))


def chiral_coordinates(net1: FockSpace, net2: FockSpace):
    """Exact chiral momenta (u, v) of every product basis state."""
    d1, d2 = _exact_spacing(net1), _exact_spacing(net2)
    return [(d1 * int(l1), d2 * int(l2)) for l1 in net1.levels for l2 in net2.levels]


def joint_spectrum(net1: FockSpace, net2: FockSpace) -> tuple:
    """Group product basis states into joint eigenspaces of (H, P)."""
    groups = {}
    for index, (u, v) in enumerate(chiral_coordinates(net1, net2)):
        groups.setdefault((u + v, u - v), []).append(index)
    spectrum = []
    for key in sorted(groups):
        light_plus, light_minus = key
        spectrum.append(JointEigenspace(
            key=key,
            energy=float(light_plus) / SQRT2,
            momentum=float(light_minus) / SQRT2,
            indices=tuple(groups[key]),
        ))
    return tuple(spectrum)


@dataclass(frozen=True, eq=False)
class TwoDNet:
    """Chiral two-dimensional net with its translation generators and lightcone projections."""

    net1: FockSpace
    net2: FockSpace
    joint_spectrum: tuple
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.net1.dim * self.net2.dim

    @cached_property
    def vacuum(self) -> np.ndarray:
        vec = np.kron(self.net1.vacuum, self.net2.vacuum)
        vec.setflags(write=False)
        return vec

    @property
    def vacuum_index(self) -> int:
        return self.net1.vacuum_index * self.net2.dim + self.net2.vacuum_index

    @cached_property
    def energies(self) -> np.ndarray:
        return (self.u + self.v) / SQRT2

    @cached_property
    def momenta(self) -> np.ndarray:
        return (self.u - self.v) / SQRT2

    @cached_property
    def H(self) -> np.ndarray:
        return np.diag(self.energies).astype(complex)

    @cached_property
    def P(self) -> np.ndarray:
        return np.diag(self.momenta).astype(complex)

    @cached_property
    def plus_mask(self) -> np.ndarray:
        """Basis states in ker(H - P), i.e. no net-2 momentum."""
        return self.v == 0

    @cached_property
    def minus_mask(self) -> np.ndarray:
        """Basis states in ker(H + P), i.e. no net-1 momentum."""
        return self.u == 0

    @cached_property
    def Pplus(self) -> np.ndarray:
        return np.diag(self.plus_mask.astype(float)).astype(complex)

    @cached_property
    def Pminus(self) -> np.ndarray:
        return np.diag(self.minus_mask.astype(float)).astype(complex)

    def ray_frequencies(self, sign: int) -> np.ndarray:
        """
        Diagonal of the generator of t -> U(t, sign * t).

        U(t, t) = exp(i sqrt(2) v t) and U(t, -t) = exp(i sqrt(2) u t).
        """
        return SQRT2 * (self.v if sign > 0 else self.u)

    def embed(self, A1=None, A2=None) -> np.ndarray:
        """A1 x A2 with None standing for the identity."""
        left = np.eye(self.net1.dim) if A1 is None else np.asarray(A1)
        right = np.eye(self.net2.dim) if A2 is None else np.asarray(A2)
        return np.kron(left, right)

    def product_vector(self, psi1, psi2) -> np.ndarray:
        return np.kron(np.asarray(psi1), np.asarray(psi2))


def build_two_d_net(net1: FockSpace, net2: FockSpace, max_dim: int = DEFAULT_MAX_DIM,
                    spectrum: tuple | None = None) -> TwoDNet:
    """
    Build the two-dimensional net of two chiral factors.

    spectrum may be supplied from the spectral cache; it is checked against
    the factor dimensions and recomputed when absent.
    """
    dim = net1.dim * net2.dim
    if dim > max_dim:
        raise DimensionOverflowError(dim, max_dim)

    if spectrum is None:
        spectrum = joint_spectrum(net1, net2)
    elif sum(len(space.indices) for space in spectrum) != dim:
        raise ValueError("supplied joint spectrum does not cover the product space")

    u = np.repeat(net1.levels * net1.grid.spacing, net2.dim).astype(float)
    v = np.tile(net2.levels * net2.grid.spacing, net1.dim).astype(float)
    u.setflags(write=False)
    v.setflags(write=False)
    net = TwoDNet(net1, net2, spectrum, u, v)

    violations = [s.key for s in spectrum if not s.in_forward_cone]
    if violations:
        raise ValueError(f"joint eigenvalues outside the forward cone: {violations}")
    logger.info("Two-dimensional net: dim %d = %d x %d, %d joint eigenspaces",
                dim, net1.dim, net2.dim, len(spectrum))
    return net


def translation_unitary(net: TwoDNet, x) -> np.ndarray:
    """U(x) = exp(i (H x0 - P x1)) as a dense matrix."""
    return np.diag(_translation_phases(net, x))


def _translation_phases(net, x):
    x0, x1 = x
    return np.exp(1j * (net.energies * x0 - net.momenta * x1))


def lightcone_projections(net: TwoDNet):
    """Orthogonal projections onto ker(H - P) and ker(H + P)."""
    return net.Pplus, net.Pminus


def mass_squared(net: TwoDNet) -> np.ndarray:
    """H^2 - P^2, equal to 2 u v on each product basis state."""
    return np.diag(2.0 * net.u * net.v).astype(complex)


# --- wedge elements -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WedgeElement:
    """
    Operator generated by smeared fields localized in one wedge.

    factors holds (f, g) pairs; pair i stands for phi1(f) x phi2(g), with
    None meaning the identity on that leg. polynomial is a sequence of
    (coefficient, word) terms, word a tuple of pair indices evaluated as an
    ordered product; the empty word is the identity. legs holds (A1, A2)
    when the element is a simple tensor A1 x A2. leakage is the wrong-side
    mass its generating functions may carry.
    """

    operator: np.ndarray = field(repr=False)
    wedge: Wedge
    factors: tuple
    polynomial: tuple
    weyl: bool = False
    legs: tuple | None = field(default=None, repr=False)
    label: str = ""
    leakage: float = WEDGE_LEAKAGE


_SUPPORT_SLACK = 1e-12


def _check_pair(wedge, index, f, g, leakage=WEDGE_LEAKAGE):
    """
    Net-1 function on R- and net-2 function on R+ for W; mirrored for W'.

    Sides are halves of the position circle of period 2 pi / spacing, and
    at most `leakage` of each function's mass may sit on the wrong one.
    """
    side1, side2 = (-1, 1) if wedge is Wedge.RIGHT else (1, -1)
    for net, fn, side in ((1, f, side1), (2, g, side2)):
        if fn is None:
            continue
        wrong = fn.side_leakage(side)
        if wrong > leakage + _SUPPORT_SLACK:
            half = "R+" if side < 0 else "R-"
            raise SupportViolationError(
                wedge.value, index,
                f"net-{net} function at {fn.reduced_center:+.2f} has {wrong:.3f} of its mass on {half}"
                f" (allowed {leakage:g})",
            )


def _leg(space, fn, weyl):
    if fn is None:
        return None
    return (weyl_operator(space, fn) if weyl else field_operator(space, fn)).matrix


def _evaluate(net, pair_matrices, polynomial):
    result = np.zeros((net.dim, net.dim), dtype=complex)
    identity = np.eye(net.dim, dtype=complex)
    for coefficient, word in polynomial:
        term = identity
        for i in word:
            term = term @ pair_matrices[i]
        result += coefficient * term
    return result


def wedge_element(net: TwoDNet, pairs, polynomial=None, wedge: Wedge = Wedge.RIGHT,
                  weyl: bool = False, label: str = "", leakage: float = WEDGE_LEAKAGE) -> WedgeElement:
    """
    Evaluate a word in the pair generators of a wedge algebra.

    polynomial defaults to the single ordered product of all pairs.
    """
    wedge = Wedge(wedge)
    pairs = tuple((f, g) for f, g in pairs)
    for index, (f, g) in enumerate(pairs):
        _check_pair(wedge, index, f, g, leakage)
    if polynomial is None:
        polynomial = ((1.0, tuple(range(len(pairs)))),)
    polynomial = tuple((complex(c), tuple(word)) for c, word in polynomial)
    for _, word in polynomial:
        if any(not 0 <= i < len(pairs) for i in word):
            raise IndexError(f"word {word} references a missing pair")

    pair_matrices = [net.embed(_leg(net.net1, f, weyl), _leg(net.net2, g, weyl)) for f, g in pairs]
    operator = _evaluate(net, pair_matrices, polynomial)
    operator.setflags(write=False)
    return WedgeElement(operator, wedge, pairs, polynomial, weyl, None, label, leakage)


def affine_element(net: TwoDNet, f: TestFunction | None, g: TestFunction | None,
                   c0: complex = 1.0, d0: complex = 1.0, wedge: Wedge = Wedge.RIGHT,
                   label: str = "") -> WedgeElement:
    """(c0 + phi1(f)) x (d0 + phi2(g)); a missing test function drops that field."""
    pairs = []
    polynomial = [(c0 * d0, ())]
    if f is not None:
        pairs.append((f, None))
        polynomial.append((d0, (len(pairs) - 1,)))
    if g is not None:
        pairs.append((None, g))
        polynomial.append((c0, (len(pairs) - 1,)))
    if f is not None and g is not None:
        pairs.append((f, g))
        polynomial.append((1.0, (len(pairs) - 1,)))
    element = wedge_element(net, pairs, polynomial, wedge, label=label)

    A1 = c0 * np.eye(net.net1.dim, dtype=complex)
    if f is not None:
        A1 = A1 + field_operator(net.net1, f).matrix
    A2 = d0 * np.eye(net.net2.dim, dtype=complex)
    if g is not None:
        A2 = A2 + field_operator(net.net2, g).matrix
    return replace(element, legs=(A1, A2))


def field_power_element(net: TwoDNet, f: TestFunction, g: TestFunction, power: int = 2,
                        wedge: Wedge = Wedge.RIGHT, label: str = "") -> WedgeElement:
    """(phi1(f) x phi2(g))^power = phi1(f)^power x phi2(g)^power, a simple tensor nonlinear in both fields."""
    if power < 1:
        raise ValueError(f"power must be positive, got {power}")
    element = wedge_element(net, [(f, g)], ((1.0, (0,) * power),), wedge, label=label)
    A1 = np.linalg.matrix_power(field_operator(net.net1, f).matrix, power)
    A2 = np.linalg.matrix_power(field_operator(net.net2, g).matrix, power)
    return replace(element, legs=(A1, A2))


def _side_center(rng, grid, side):
    """Middle of one half of the position circle, jittered by a tenth of a quarter period."""
    quarter = grid.period / 4.0
    return side * quarter * (1.0 + rng.uniform(-0.1, 0.1))


def sample_wedge_elements(net: TwoDNet, wedge: Wedge, count: int, rng, width_range=(0.3, 0.5),
                          leg_mask=(True, True)) -> list:
    """
    Random affine-field elements (c0 + phi1(f)) x (d0 + phi2(g)) of one wedge.

    Packets are centred near the middle of the wedge's half of each
    position circle. leg_mask switches the net-1 and net-2 fields on or off.
    """
    wedge = Wedge(wedge)
    side1, side2 = (-1, 1) if wedge is Wedge.RIGHT else (1, -1)
    elements = []
    for i in range(count):
        f = g = None
        if leg_mask[0]:
            f = wave_packet(net.net1.grid, _side_center(rng, net.net1.grid, side1),
                            rng.uniform(*width_range), rng.uniform(0.5, 1.5))
        if leg_mask[1]:
            g = wave_packet(net.net2.grid, _side_center(rng, net.net2.grid, side2),
                            rng.uniform(*width_range), rng.uniform(0.5, 1.5))
        c0 = complex(rng.normal(), rng.normal())
        d0 = complex(rng.normal(), rng.normal())
        elements.append(affine_element(net, f, g, c0, d0, wedge, label=f"{wedge.value}[{i}]"))
    return elements


def apply_translation(net: TwoDNet, target, x):
    """
    Translate a vector, an operator or a WedgeElement by x.

    Wedge elements carry their generating functions along and must still
    satisfy their wedge constraint. For x in the wedge this holds while the
    lightline shifts stay small against the spatial period; larger shifts
    wrap a packet onto the other half of the circle and raise
    SupportViolationError.
    """
    if tuple(x) == (0, 0):
        return target
    phases = _translation_phases(net, x)
    if isinstance(target, WedgeElement):
        x0, x1 = x
        s1, s2 = (x0 - x1) / SQRT2, (x0 + x1) / SQRT2
        factors = tuple(
            (None if f is None else f.shifted(s1), None if g is None else g.shifted(s2))
            for f, g in target.factors
        )
        for index, (f, g) in enumerate(factors):
            _check_pair(target.wedge, index, f, g, target.leakage)
        operator = phases[:, None] * target.operator * phases.conj()[None, :]
        operator.setflags(write=False)
        legs = None
        if target.legs is not None:
            p1 = np.exp(1j * net.net1.levels * net.net1.grid.spacing * s1)
            p2 = np.exp(1j * net.net2.levels * net.net2.grid.spacing * s2)
            legs = (p1[:, None] * target.legs[0] * p1.conj()[None, :],
                    p2[:, None] * target.legs[1] * p2.conj()[None, :])
        return replace(target, operator=operator, factors=factors, legs=legs)

    target = np.asarray(target)
    if target.ndim == 1:
        return phases * target
    return phases[:, None] * target * phases.conj()[None, :]


# --- reflection -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ReflectionJ:
    """
    Antiunitary J = R K with K entrywise conjugation in the product basis.

    R is a real orthogonal matrix, the identity for the chiral net.
    """

    orthogonal: np.ndarray = field(repr=False)
    checks: dict = field(default_factory=dict)

    def apply(self, vector) -> np.ndarray:
        return self.orthogonal @ np.conj(vector)

    def conjugate(self, A) -> np.ndarray:
        """J A J."""
        return self.orthogonal @ np.conj(A) @ self.orthogonal.T

    def conjugate_element(self, element: WedgeElement) -> WedgeElement:
        """J F J as an element of the opposite wedge."""
        factors = tuple(
            (None if f is None else f.reflected(), None if g is None else g.reflected())
            for f, g in element.factors
        )
        polynomial = tuple((np.conj(c), word) for c, word in element.polynomial)
        operator = self.conjugate(element.operator)
        operator.setflags(write=False)
        legs = None if element.legs is None else (np.conj(element.legs[0]), np.conj(element.legs[1]))
        return WedgeElement(operator, element.wedge.opposite, factors, polynomial, element.weyl, legs,
                            f"J({element.label})", element.leakage)


def reflection(net: TwoDNet, points=SAMPLE_POINTS, kappa: float = 1.0) -> ReflectionJ:
    """
    Geometric reflection of the chiral net, certified on sample points.

    Checks J^2 = 1, J Omega = Omega, J U(x) J = U(-x), J P+- J = P+- and
    J exp(i kappa M^2) J = exp(-i kappa M^2); raises ReflectionError on
    any residual above 1e-12.
    """
    R = np.eye(net.dim)
    J = ReflectionJ(R)

    checks = {
        "involution": float(np.abs(R @ np.conj(R) - np.eye(net.dim)).max()),
        "vacuum": float(np.linalg.norm(J.apply(net.vacuum) - net.vacuum)),
        "lightcone_plus": float(np.abs(J.conjugate(net.Pplus) - net.Pplus).max()),
        "lightcone_minus": float(np.abs(J.conjugate(net.Pminus) - net.Pminus).max()),
    }
    checks["translation"] = max(
        float(np.abs(J.conjugate(translation_unitary(net, x))
                     - translation_unitary(net, (-x[0], -x[1]))).max())
        for x in points
    )
    twist = expm(1j * kappa * mass_squared(net))
    checks["twist"] = float(np.abs(J.conjugate(twist) - twist.conj().T).max())

    failed = {name: value for name, value in checks.items() if value > REFLECTION_TOLERANCE}
    if failed:
        raise ReflectionError(f"geometric reflection fails {sorted(failed)}: {failed}")
    return ReflectionJ(R, checks)


def structural_report(net: TwoDNet, points=SAMPLE_POINTS) -> dict:
    """
    Exact structure of the net: spectrum condition, vacuum uniqueness,
    group law of U and lightcone geometry.

    Returns:
        dict: residual per property (floats; 0.0 means exact)
    """
    omega = net.vacuum
    vacuum_projector = np.outer(omega, omega.conj())
    Pplus, Pminus = lightcone_projections(net)
    zero_key = (Fraction(0), Fraction(0))
    vacuum_space = [s for s in net.joint_spectrum if s.key == zero_key]

    group_law = 0.0
    for x in points:
        for y in points:
            lhs = translation_unitary(net, x) @ translation_unitary(net, y)
            rhs = translation_unitary(net, (x[0] + y[0], x[1] + y[1]))
            group_law = max(group_law, float(np.abs(lhs - rhs).max()))

    # U(x) = U1((x0 - x1)/sqrt2) x U2((x0 + x1)/sqrt2) as matrices
    factorization = 0.0
    for x0, x1 in points:
        u1 = np.diag(np.exp(1j * net.net1.levels * net.net1.grid.spacing * (x0 - x1) / SQRT2))
        u2 = np.diag(np.exp(1j * net.net2.levels * net.net2.grid.spacing * (x0 + x1) / SQRT2))
        factorization = max(factorization,
                            float(np.abs(np.kron(u1, u2) - translation_unitary(net, (x0, x1))).max()))

    plus_rest = Pplus - vacuum_projector
    minus_rest = Pminus - vacuum_projector
    return {
        "spectrum_in_cone": float(sum(not s.in_forward_cone for s in net.joint_spectrum)),
        "spectrum_in_cone_float": float(max(0.0, np.max(np.abs(net.momenta) - net.energies))),
        "vacuum_dimension_defect": float(abs(len(vacuum_space[0].indices) - 1) if vacuum_space else 1),
        "vacuum_annihilated": float(max(np.linalg.norm(net.H @ omega), np.linalg.norm(net.P @ omega))),
        "group_law": group_law,
        "translation_factorization": factorization,
        "projection_product": float(np.abs(Pplus @ Pminus - vacuum_projector).max()),
        "wave_orthogonality": float(np.abs(plus_rest @ minus_rest).max()),
    }


def main():
    from fock_core import ModeGrid, build_fock_space

    print("🌐 Two-dimensional chiral net")
    print("-" * 40)
    space = build_fock_space(ModeGrid(1.0, 3), per_mode_cap=2, energy_cap=4.0)
    net = build_two_d_net(space, space)
    print(f"Product dimension: {net.dim}")
    print(f"Joint eigenspaces: {len(net.joint_spectrum)}")

    report = structural_report(net)
    for name, value in report.items():
        status = "✅" if value <= 1e-12 else "❌"
        print(f"  {status} {name:<28} {value:.2e}")

    J = reflection(net)
    print("\nReflection checks:")
    for name, value in J.checks.items():
        print(f"  {name:<16} {value:.2e}")


if __name__ == "__main__":
    main()
