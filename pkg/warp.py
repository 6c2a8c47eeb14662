#!/usr/bin/env python3
"""
Warped-convolution deformation F -> F_Q = int dE(x) alpha_{Qx}(F).

On a joint eigenvector of momentum p the warped operator acts as
U(Qp) F U(Qp)^-1, so in the product basis F_Q is an entrywise phase
multiple of F:

    (F_Q)_{mn} = exp(i (p_m - p_n) . Q p_n) F_{mn}

with the Minkowski product x . y = x0 y0 - x1 y1. warp_spectral evaluates
this exactly and is the oracle for warp_oscillatory, which evaluates the
mollified double integral and extrapolates the regulator to zero.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from joblib import Parallel, delayed
from scipy import special
from scipy.linalg import expm

from asymptotics import (
    AsymptoticKind,
    ScatteringContext,
    ScatteringState,
    asymptotic_table,
    build_scattering_state,
    scattering_operator,
    two_wave_basis,
)
from errors import ExtrapolationError, PathDisagreementError, QuadratureBudgetExceeded, RankDeficiencyWarning
from fock_core import ModeGrid, build_fock_space, largest_increase, trend_slack, wave_packet
from spacetime_net import (
    SAMPLE_POINTS,
    TwoDNet,
    Wedge,
    WedgeElement,
    affine_element,
    apply_translation,
    build_two_d_net,
    mass_squared,
    translation_unitary,
    wedge_element,
)

logger = logging.getLogger(__name__)

DEFAULT_REGULATORS = (0.4, 0.2, 0.1, 0.05)
DEFAULT_WARP_BUDGET = 4096

_EXTRAPOLATION_FLOOR = 1e-13


def minkowski(x, y):
    """x . y = x0 y0 - x1 y1 over the last axis."""
    x, y = np.asarray(x), np.asarray(y)
    return x[..., 0] * y[..., 0] - x[..., 1] * y[..., 1]


@dataclass(frozen=True)
class DeformationMatrix:
    """Q = sign * kappa * [[0, 1], [1, 0]]; sign = -1 deforms the commutant wedge."""

    kappa: float
    sign: int = 1

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError(f"kappa must be nonnegative, got {self.kappa}")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")

    @property
    def matrix(self) -> np.ndarray:
        return self.sign * self.kappa * np.array([[0.0, 1.0], [1.0, 0.0]])

    def __neg__(self) -> DeformationMatrix:
        return DeformationMatrix(self.kappa, -self.sign)

    def apply(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.matrix.T

    def antisymmetry_residual(self, samples) -> float:
        """max |(Qx) . y + x . (Qy)| over sample pairs."""
        samples = np.asarray(samples, dtype=float)
        worst = 0.0
        for x in samples:
            for y in samples:
                worst = max(worst, abs(float(minkowski(self.apply(x), y) + minkowski(x, self.apply(y)))))
        return worst


# --- mollifiers ----------------------------------------------------------------

@dataclass(frozen=True)
class Mollifier:
    """
    f(x, y) = g(|x|^2) g(|y|^2) with g(0) = 1.

    smoothing(|z|^2) is the polynomial factor the y-integral leaves behind
    after substituting x = p + eps z; it is 1 for a pure Gaussian.
    """

    name: str
    radial: Callable = field(repr=False)
    smoothing: Callable = field(repr=False)

    def __call__(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return self.radial(np.sum(x * x, axis=-1)) * self.radial(np.sum(y * y, axis=-1))


MOLLIFIERS = {
    "product-gaussian": Mollifier(
        "product-gaussian",
        radial=lambda r2: np.exp(-0.5 * r2),
        smoothing=lambda r2: np.ones_like(r2),
    ),
    "polynomial-damped": Mollifier(
        "polynomial-damped",
        radial=lambda r2: (1.0 + 0.5 * r2) * np.exp(-0.5 * r2),
        smoothing=lambda r2: 2.0 - 0.5 * r2,
    ),
}


def mollifier(name: str) -> Mollifier:
    if name not in MOLLIFIERS:
        raise KeyError(f"unknown mollifier '{name}', expected one of {sorted(MOLLIFIERS)}")
    return MOLLIFIERS[name]


@dataclass(frozen=True)
class DeformationContext:
    """Deformation matrix, mollifier and regulator schedule of one warp run."""

    Q: DeformationMatrix
    mollifier: Mollifier = MOLLIFIERS["product-gaussian"]
    regulators: tuple = DEFAULT_REGULATORS
    budget: int = DEFAULT_WARP_BUDGET
    n_jobs: int = 1

    def __post_init__(self):
        if not self.regulators or any(e <= 0 for e in self.regulators):
            raise ValueError(f"regulators must be positive, got {self.regulators}")
        if any(b >= a for a, b in zip(self.regulators, self.regulators[1:])):
            raise ValueError(f"regulators must be strictly decreasing, got {self.regulators}")


# --- spectral form ------------------------------------------------------------

def momentum_vectors(net: TwoDNet) -> np.ndarray:
    """(E, P) of every product basis state, shape (dim, 2)."""
    return np.stack([net.energies, net.momenta], axis=1)


def warp_phases(net: TwoDNet, Q: DeformationMatrix) -> np.ndarray:
    p = momentum_vectors(net)
    return np.exp(1j * minkowski(p[:, None, :] - p[None, :, :], Q.apply(p)[None, :, :]))


def warp_spectral(net: TwoDNet, F, Q: DeformationMatrix) -> np.ndarray:
    """Exact F_Q on the discrete joint spectrum."""
    if Q.kappa == 0:
        return np.array(F, dtype=complex)
    return warp_phases(net, Q) * np.asarray(F, dtype=complex)


def warp_covariance_residual(net: TwoDNet, F, Q: DeformationMatrix, points=SAMPLE_POINTS) -> float:
    """max ||alpha_x(F_Q) - (alpha_x F)_Q|| over points."""
    F = F.operator if isinstance(F, WedgeElement) else np.asarray(F)
    warped = warp_spectral(net, F, Q)
    return max(
        float(np.abs(apply_translation(net, warped, x) - warp_spectral(net, apply_translation(net, F, x), Q)).max())
        for x in points
    )


# --- oscillatory form ---------------------------------------------------------

def _node_count(eps, frequency, momentum):
    return int(math.ceil(24 + 4.0 * eps * (frequency + eps * eps * momentum)))


def regularized_factors(net: TwoDNet, Q: DeformationMatrix, moll: Mollifier, eps: float,
                        nodes: int) -> np.ndarray:
    """
    Entrywise factor I(eps) with (regularized integral)_{mn} = I_{mn}(eps) F_{mn}.

    The y-integral against exp(-i x.y) U(y) is done in closed form; the
    remaining x-integral around each p_n is tensor Gauss-Hermite quadrature
    in z = (x - p_n) / eps.
    """
    z1, w1 = special.roots_hermitenorm(nodes)
    z = np.stack(np.meshgrid(z1, z1, indexing="ij"), axis=-1).reshape(-1, 2)
    w = np.outer(w1, w1).ravel() / (2.0 * math.pi)
    smoothing = moll.smoothing(np.sum(z * z, axis=1))

    p = momentum_vectors(net)
    factors = np.empty((net.dim, net.dim), dtype=complex)
    for n in range(net.dim):
        x = p[n] + eps * z
        damping = moll.radial(eps * eps * np.sum(x * x, axis=1))
        phase = np.exp(1j * minkowski((p - p[n])[:, None, :], Q.apply(x)[None, :, :]))
        factors[:, n] = phase @ (w * damping * smoothing)
    return factors


def gaussian_closed_form(net: TwoDNet, Q: DeformationMatrix, eps: float) -> np.ndarray:
    """I(eps) for the product-Gaussian mollifier in closed form."""
    p = momentum_vectors(net)
    d = p[:, None, :] - p[None, :, :]
    theta = minkowski(d, Q.apply(p)[None, :, :])
    # b . z = d . Q z
    qk = Q.sign * Q.kappa
    b = np.stack([-qk * d[..., 1], qk * d[..., 0]], axis=-1)
    p2 = np.sum(p * p, axis=1)[None, :]
    b2 = np.sum(b * b, axis=-1)
    scale = 1.0 + eps ** 4
    return np.exp((-0.5 * (p2 + b2) * eps * eps + 1j * theta) / scale) / scale


def _frequency_bounds(net, Q):
    p = momentum_vectors(net)
    spread = float(np.max(np.abs(p[:, None, :] - p[None, :, :]))) if net.dim > 1 else 0.0
    return Q.kappa * math.sqrt(2.0) * spread, float(np.max(np.sum(p * p, axis=1)))


def _neville_diagonal(steps, tables):
    """Diagonal of the Neville tableau extrapolating tables[i] ~ I(h_i) to h = 0."""
    rows = [[table] for table in tables]
    for i in range(1, len(tables)):
        for j in range(1, i + 1):
            ratio = steps[i] / (steps[i - j] - steps[i])
            rows[i].append(rows[i][j - 1] + (rows[i][j - 1] - rows[i - 1][j - 1]) * ratio)
    return [rows[i][i] for i in range(len(tables))]


def warp_oscillatory(net: TwoDNet, F, Q: DeformationMatrix, moll="product-gaussian",
                     regulators=DEFAULT_REGULATORS, budget: int = DEFAULT_WARP_BUDGET, n_jobs: int = 1,
                     trace: list | None = None):
    """
    Regularized warped convolution extrapolated to eps -> 0.

    Args:
        net: two-dimensional net
        F: operator to deform
        Q: deformation matrix
        moll: Mollifier or registry name
        regulators: strictly decreasing eps schedule
        budget: largest admissible number of 2D quadrature nodes
        n_jobs: joblib workers over the regulator schedule
        trace: optional list receiving (eps, ||regularized - spectral||) rows

    Returns:
        tuple: (extrapolated matrix, error estimate)

    Raises:
        QuadratureBudgetExceeded: a regulator needs more nodes than budget
        ExtrapolationError: successive extrapolants do not settle
    """
    moll = mollifier(moll) if isinstance(moll, str) else moll
    F = np.asarray(F, dtype=complex)
    frequency, momentum = _frequency_bounds(net, Q)

    def entry(eps):
        nodes = _node_count(eps, frequency, momentum)
        if (nodes + 8) ** 2 > budget:
            raise QuadratureBudgetExceeded((nodes + 8) ** 2, budget, f"warped convolution at eps={eps}")
        coarse = regularized_factors(net, Q, moll, eps, nodes)
        fine = regularized_factors(net, Q, moll, eps, nodes + 8)
        return fine, float(np.abs(fine - coarse).max())

    results = Parallel(n_jobs=n_jobs, backend="threading")(delayed(entry)(eps) for eps in regulators)
    factors = [r[0] for r in results]
    quadrature_error = max(r[1] for r in results)

    if trace is not None:
        spectral = warp_spectral(net, F, Q)
        trace.extend((eps, float(np.linalg.norm(I * F - spectral))) for eps, I in zip(regulators, factors))

    diagonal = _neville_diagonal([eps * eps for eps in regulators], factors)
    changes = [float(np.linalg.norm((b - a) * F)) for a, b in zip(diagonal, diagonal[1:])]
    floor = _EXTRAPOLATION_FLOOR * max(1.0, float(np.linalg.norm(F)))
    for a, b in zip(changes, changes[1:]):
        if b > floor and b > a:
            raise ExtrapolationError(
                f"{moll.name}: extrapolants do not settle, changes {['%.2e' % c for c in changes]}"
            )

    error = (changes[-1] if changes else 0.0) + quadrature_error * float(np.linalg.norm(F))
    logger.debug("warp %s kappa=%g: changes %s, error %.2e", moll.name, Q.kappa, changes, error)
    return diagonal[-1] * F, error


@dataclass(frozen=True, eq=False)
class DeformedElement:
    """A wedge element with its spectral and oscillatory warped forms."""

    original: WedgeElement
    Q: DeformationMatrix
    spectral_form: np.ndarray = field(repr=False)
    oscillatory_form: np.ndarray | None = field(default=None, repr=False)
    error: float | None = None
    regulator_trace: tuple = ()

    @property
    def oracle_distance(self) -> float | None:
        if self.oscillatory_form is None:
            return None
        return float(np.linalg.norm(self.oscillatory_form - self.spectral_form))

    def as_wedge_element(self) -> WedgeElement:
        """The warped operator carried by the original element's wedge and generators."""
        operator = self.spectral_form.copy()
        operator.setflags(write=False)
        return replace(self.original, operator=operator, legs=None, label=f"{self.original.label}_Q")


def deform_element(net: TwoDNet, F: WedgeElement, Q: DeformationMatrix,
                   context: DeformationContext | None = None) -> DeformedElement:
    """Spectral form always; the oscillatory form and regulator trace when a context is given."""
    spectral = warp_spectral(net, F.operator, Q)
    if context is None:
        return DeformedElement(F, Q, spectral)
    trace = []
    oscillatory, error = warp_oscillatory(net, F.operator, Q, context.mollifier, context.regulators,
                                          context.budget, context.n_jobs, trace)
    deformed = DeformedElement(F, Q, spectral, oscillatory, error, tuple(trace))
    logger.info("Deformed %s: oracle distance %.2e (reported error %.2e)",
                F.label or "element", deformed.oracle_distance, error)
    return deformed


def mollifier_independence(net: TwoDNet, F, Q: DeformationMatrix, regulators=DEFAULT_REGULATORS,
                           budget: int = DEFAULT_WARP_BUDGET) -> float:
    """Distance between the extrapolated forms of the two built-in mollifier families."""
    F = F.operator if isinstance(F, WedgeElement) else F
    first, _ = warp_oscillatory(net, F, Q, "product-gaussian", regulators, budget)
    second, _ = warp_oscillatory(net, F, Q, "polynomial-damped", regulators, budget)
    return float(np.abs(first - second).max())


# --- deformed wedge algebras ----------------------------------------------------

def deformed_commutant_check(net: TwoDNet, samples, primed_samples, kappa: float, vectors=None) -> float:
    """
    max ||[F_Q, G'_{-Q}] psi|| over R samples F, R' samples G' and vectors psi.

    vectors=None takes the operator norm, i.e. the worst unit vector.
    """
    Q = DeformationMatrix(kappa)
    worst = 0.0
    for F in samples:
        FQ = warp_spectral(net, F.operator, Q)
        for G in primed_samples:
            GQ = warp_spectral(net, G.operator, -Q)
            commutator = FQ @ GQ - GQ @ FQ
            if vectors is None:
                value = float(np.linalg.norm(commutator, 2))
            else:
                value = max(float(np.linalg.norm(commutator @ psi)) for psi in vectors)
            worst = max(worst, value)
    return worst


def _low_states(net: TwoDNet) -> list:
    """Omega and the lowest one-particle state of each factor, admitted at every cap."""
    lowest1 = net.net1.state_vector((1,) + (0,) * (net.net1.grid.count - 1))
    lowest2 = net.net2.state_vector((1,) + (0,) * (net.net2.grid.count - 1))
    return [net.vacuum, net.product_vector(lowest1, net.net2.vacuum), net.product_vector(net.net1.vacuum, lowest2)]


def commutant_trend(grid: ModeGrid, kappa: float, caps=(1, 2, 3), energy_cap: float = math.inf,
                    width: float = 0.4, n_jobs: int = 1) -> dict:
    """
    Deformed commutant residual for fixed smearings as per_mode_cap grows.

    F = (1 + phi1(f-)) x (1 + phi2(f+)) in R and G' = (1 + phi1(f+)) x (1 + phi2(f-))
    in R', with f-+ packets a quarter period either side of the origin.
    values are max ||[F_Q, G'_-Q] psi|| over Omega and the lowest
    one-particle states; operator_norms are the worst-vector values.

    Returns:
        dict: {"caps": list, "values": list, "operator_norms": list,
               "largest_increase": float, "non_increasing": bool}
    """
    quarter = grid.period / 4.0
    left, right = wave_packet(grid, -quarter, width), wave_packet(grid, quarter, width)

    def entry(cap):
        space = build_fock_space(grid, cap, energy_cap)
        net = build_two_d_net(space, space)
        F = affine_element(net, left, right, 1.0, 1.0, Wedge.RIGHT, label="F")
        Gp = affine_element(net, right, left, 1.0, 1.0, Wedge.LEFT, label="G'")
        return (deformed_commutant_check(net, [F], [Gp], kappa, _low_states(net)),
                deformed_commutant_check(net, [F], [Gp], kappa))

    results = Parallel(n_jobs=n_jobs, backend="threading")(delayed(entry)(cap) for cap in caps)
    values = [r[0] for r in results]
    increase = largest_increase(values)
    logger.info("Commutant trend kappa=%g over caps %s: %s", kappa, list(caps), ["%.3e" % v for v in values])
    return {"caps": list(caps), "values": values, "operator_norms": [r[1] for r in results],
            "largest_increase": increase, "non_increasing": increase <= trend_slack(values)}


# --- deformed scattering ------------------------------------------------------

def deformed_context(ctx: ScatteringContext, kappa: float) -> ScatteringContext:
    """
    Scattering context whose dictionary is warped: R elements with Q_kappa,
    R' elements with -Q_kappa. The T schedule and tolerances are unchanged.
    """
    if kappa == 0:
        return ctx
    Q = DeformationMatrix(kappa)
    tables = {}
    for kind, table in ctx.tables.items():
        kind_Q = Q if AsymptoticKind(kind).wedge is Wedge.RIGHT else -Q
        elements = [deform_element(ctx.net, F, kind_Q).as_wedge_element() for F in table.elements]
        tables[kind] = asymptotic_table(ctx.net, elements, kind, ctx.setup, ctx.J)
    logger.info("Deformed scattering context at kappa=%g", kappa)
    return ScatteringContext(ctx.net, ctx.J, ctx.setup, tables)


def phase_operator(net: TwoDNet, kappa: float) -> np.ndarray:
    """exp(i kappa (H^2 - P^2))."""
    return expm(1j * kappa * mass_squared(net))


def deformed_out_state(ctx: ScatteringContext, plus, minus, kappa: float, direction: str = "out",
                       deformed: ScatteringContext | None = None, tolerance: float = 1e-8) -> ScatteringState:
    """
    Scattering state of the deformed theory along two paths.

    (i)  exp(-+ (i/2) kappa (H^2 - P^2)) applied to the undeformed out (in) state
    (ii) the asymptotics pipeline run on warped dictionary elements

    Returns the path (ii) state with the path distance in checks.

    Raises:
        PathDisagreementError: the paths differ by more than tolerance
    """
    deformed = deformed if deformed is not None else deformed_context(ctx, kappa)
    undeformed = build_scattering_state(ctx, plus, minus, direction)
    sign = -1.0 if direction == "out" else 1.0
    predicted = phase_operator(ctx.net, sign * kappa / 2.0) @ undeformed.composed
    state = build_scattering_state(deformed, plus, minus, direction)

    distance = float(np.linalg.norm(state.composed - predicted))
    if distance > tolerance * max(1.0, float(np.linalg.norm(predicted))):
        raise PathDisagreementError(distance, tolerance)
    return replace(state, checks={**state.checks, "path_distance": distance})


@dataclass(frozen=True, eq=False)
class DeformedScattering:
    """S_kappa with the undeformed S and per-pair eigenphases."""

    kappa: float
    matrix: np.ndarray = field(repr=False)
    undeformed: np.ndarray = field(repr=False)
    eigenphases: tuple = field(repr=False)
    checks: dict = field(default_factory=dict)


def deformed_scattering_operator(ctx: ScatteringContext, kappa: float, basis_pairs=None,
                                 deformed: ScatteringContext | None = None, points=SAMPLE_POINTS,
                                 rank_tolerance: float = 1e-8) -> DeformedScattering:
    """
    S_kappa from deformed in/out states, checked against exp(i kappa (H^2 - P^2)) S.

    eigenphases holds one row per basis pair: the expectation of S_kappa in
    the normalized out state, its mass squared and the predicted phase.
    interaction_gap = max |lambda_i - lambda_j| / 2 bounds min_c ||S_kappa - c||
    from below.
    """
    net = ctx.net
    basis_pairs = two_wave_basis(net) if basis_pairs is None else list(basis_pairs)
    deformed = deformed if deformed is not None else deformed_context(ctx, kappa)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficiencyWarning)
        S = scattering_operator(ctx, basis_pairs, rank_tolerance=rank_tolerance, points=points)
    S_kappa = scattering_operator(deformed, basis_pairs, rank_tolerance=rank_tolerance, points=points)
    projector = S.span_projector
    M2 = np.real(np.diag(mass_squared(net)))

    rows = []
    for index, out in enumerate(S.out_states.T):
        norm2 = float(np.vdot(out, out).real)
        value = complex(np.vdot(out, S_kappa.matrix @ out) / norm2)
        m2 = float(np.vdot(out, M2 * out).real / norm2)
        expected = complex(np.exp(1j * kappa * m2))
        rows.append({
            "pair": index,
            "mass_squared": m2,
            "eigenvalue": value,
            "expected": expected,
            "phase_error": abs(float(np.angle(value / expected))) if abs(value) > 0 else math.pi,
        })

    eigenvalues = np.array([r["eigenvalue"] for r in rows])
    identity = np.eye(net.dim)
    checks = {
        "correction": float(np.linalg.norm((S_kappa.matrix - phase_operator(net, kappa) @ S.matrix) @ projector, 2)),
        "phase_error": max(r["phase_error"] for r in rows),
        "interaction_gap": 0.5 * float(np.max(np.abs(eigenvalues[:, None] - eigenvalues[None, :]))),
        "unitarity": float(np.linalg.norm((S_kappa.matrix.conj().T @ S_kappa.matrix - identity) @ projector, 2)),
        "gram": S_kappa.checks["gram_out"],
        "covariance": max(
            float(np.linalg.norm((translation_unitary(net, x) @ S_kappa.matrix
                                  - S_kappa.matrix @ translation_unitary(net, x)) @ projector, 2))
            for x in points
        ),
        "rank": float(S_kappa.rank),
    }
    logger.info("S_kappa at kappa=%g: correction %.2e, interaction gap %.3f",
                kappa, checks["correction"], checks["interaction_gap"])
    return DeformedScattering(kappa, S_kappa.matrix, S.matrix, tuple(rows), checks)


def main():
    from asymptotics import AsymptoticsSetup, scattering_context

    print("🌀 Warped convolution")
    print("-" * 40)
    grid = ModeGrid(0.5, 2)
    space = build_fock_space(grid, per_mode_cap=2, energy_cap=1.0)
    net = build_two_d_net(space, space)
    f = wave_packet(grid, -grid.period / 4.0, 0.4)
    F = wedge_element(net, [(f, None)], label="phi1(f)")
    for kappa in (0.25, 0.5, 1.0):
        deformed = deform_element(net, F, DeformationMatrix(kappa), DeformationContext(DeformationMatrix(kappa)))
        print(f"  kappa={kappa:<5} oracle distance {deformed.oracle_distance:.2e}  error {deformed.error:.2e}")

    ctx = scattering_context(net, AsymptoticsSetup())
    result = deformed_scattering_operator(ctx, 0.5)
    print("\nDeformed S:")
    for name, value in result.checks.items():
        print(f"  {name:<16} {value:.3e}")


if __name__ == "__main__":
    main()
