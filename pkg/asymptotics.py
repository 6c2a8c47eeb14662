#!/usr/bin/env python3
"""
Light-ray time averages, asymptotic fields and two-wave scattering.

F_+-(h_T) = int dt h_T(t) alpha_{(t, +-t)}(F) is diagonal in frequency: in
the product basis entry (m, n) of F oscillates with the difference of the
ray frequencies of m and n, so the average multiplies it by the filter
c(w) = int dt h_T(t) exp(i w t). The limit T -> +-inf is the pinching of F
onto the zero-frequency block, i.e. the mean-ergodic projection.

Asymptotic fields for the primed wedge are obtained by conjugating with the
geometric reflection J and are cross-checked against the direct limit.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from itertools import product
from typing import Callable

import numpy as np
from joblib import Parallel, delayed
from scipy import integrate, linalg, special

from errors import (
    ApproximantError,
    NonConvergenceError,
    NotAWaveError,
    QuadratureBudgetExceeded,
    RankDeficiencyWarning,
    SupportViolationError,
    WedgeMismatchError,
)
from fock_core import wave_packet
from spacetime_net import (
    SAMPLE_POINTS,
    ReflectionJ,
    TwoDNet,
    Wedge,
    WedgeElement,
    apply_translation,
    reflection,
    translation_unitary,
    wedge_element,
)

logger = logging.getLogger(__name__)

DEFAULT_SCHEDULE = (8.0, 16.0, 32.0, 64.0)
DEFAULT_QUADRATURE_BUDGET = 8192

# Filter values below this are indistinguishable from rounding
ROUNDING_FLOOR = 1e-13


# --- kernel profiles -------------------------------------------------------

@dataclass(frozen=True)
class KernelProfile:
    """Even, nonnegative, unit-integral profile h with its Fourier transform."""

    name: str
    half_support: float
    density: Callable = field(repr=False)
    fourier: Callable = field(repr=False)

    def normalization_error(self, nodes: int = 512) -> float:
        x, w = special.roots_legendre(nodes)
        return abs(float(self.half_support * np.dot(w, self.density(self.half_support * x))) - 1.0)


def _gaussian_density(s):
    return np.exp(-0.5 * np.asarray(s, dtype=float) ** 2) / math.sqrt(2.0 * math.pi)


def _gaussian_fourier(k):
    return np.exp(-0.5 * np.asarray(k, dtype=float) ** 2)


def _bump_shape(s):
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    out = np.zeros_like(s)
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


@lru_cache(maxsize=1)
def _bump_normalization():
    value, _ = integrate.quad(lambda s: math.exp(-1.0 / (1.0 - s * s)), -1.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    return 1.0 / value


def _bump_density(s):
    return _bump_normalization() * _bump_shape(s)


def _bump_fourier(k):
    k = np.atleast_1d(np.asarray(k, dtype=float))
    values = np.empty_like(k)
    for i, wavenumber in enumerate(k):
        if wavenumber == 0:
            values[i] = 1.0
            continue
        value, _ = integrate.quad(lambda s: math.exp(-1.0 / (1.0 - s * s)), 0.0, 1.0,
                                  weight="cos", wvar=abs(wavenumber), limit=200)
        values[i] = 2.0 * _bump_normalization() * value
    return values


PROFILES = {
    "gaussian": KernelProfile("gaussian", 8.0, _gaussian_density, _gaussian_fourier),
    "bump": KernelProfile("bump", 1.0, _bump_density, _bump_fourier),
}


def kernel_profile(name: str) -> KernelProfile:
    if name not in PROFILES:
        raise KeyError(f"unknown kernel profile '{name}', expected one of {sorted(PROFILES)}")
    return PROFILES[name]


@dataclass(frozen=True)
class AveragingKernel:
    """h_T(t) = |T|^-eps h(|T|^-eps (t - T))."""

    profile: KernelProfile
    exponent: float
    center: float

    def __post_init__(self):
        if not 0.0 < self.exponent < 1.0:
            raise ValueError(f"kernel exponent must lie in (0, 1), got {self.exponent}")
        if self.center == 0:
            raise ValueError("kernel center T must be nonzero")

    @property
    def scale(self) -> float:
        return abs(self.center) ** self.exponent

    @property
    def window(self):
        half = self.profile.half_support * self.scale
        return self.center - half, self.center + half

    def __call__(self, t):
        return self.profile.density((np.asarray(t, dtype=float) - self.center) / self.scale) / self.scale

    def node_count(self, max_frequency: float) -> int:
        """Gauss-Legendre nodes resolving exp(i w t) h_T(t) on the window."""
        length = 2.0 * self.profile.half_support * self.scale
        return int(math.ceil(0.5 * max_frequency * length + 2.0 * self.profile.half_support ** 2 + 32))

    def filter(self, frequencies, nodes: int) -> np.ndarray:
        """
        Discrete c(w) = sum_j w_j h_T(t_j) exp(i w t_j), normalized so c(0) = 1.
        """
        x, w = special.roots_legendre(nodes)
        half = self.profile.half_support
        weights = w * half * self.profile.density(half * x)
        weights = weights / weights.sum()
        times = self.center + half * self.scale * x
        return np.exp(1j * np.outer(np.asarray(frequencies, dtype=float), times)) @ weights


# --- smearing along a light ray ---------------------------------------------

def _frequency_blocks(net: TwoDNet, sign: int):
    freqs = net.ray_frequencies(sign)
    differences = np.round(freqs[:, None] - freqs[None, :], 10)
    omegas, inverse = np.unique(differences, return_inverse=True)
    return omegas, inverse.reshape(differences.shape)


def _block_norms(F, omegas, inverse):
    magnitudes = np.abs(F) ** 2
    return np.sqrt(np.bincount(inverse.ravel(), weights=magnitudes.ravel(), minlength=len(omegas)))


def smear_along_ray(net: TwoDNet, F, kernel: AveragingKernel, sign: int,
                    budget: int = DEFAULT_QUADRATURE_BUDGET, tolerance: float | None = None):
    """
    Quadrature approximation of F_+-(h_T).

    Args:
        net: two-dimensional net
        F: operator (matrix) to average
        kernel: averaging kernel h_T
        sign: +1 for the ray (t, t), -1 for (t, -t)
        budget: largest admissible Gauss-Legendre node count
        tolerance: optional bound on the reported quadrature error

    Returns:
        tuple: (averaged operator, quadrature error bound)
    """
    F = np.asarray(F, dtype=complex)
    omegas, inverse = _frequency_blocks(net, sign)
    block_total = float(_block_norms(F, omegas, inverse).sum())
    n = kernel.node_count(float(np.max(np.abs(omegas))))
    while True:
        if 2 * n > budget:
            raise QuadratureBudgetExceeded(2 * n, budget, "light-ray average")
        coarse = kernel.filter(omegas, n)
        fine = kernel.filter(omegas, 2 * n)
        error = (float(np.max(np.abs(fine - coarse))) + ROUNDING_FLOOR) * block_total
        if tolerance is None or error <= tolerance:
            break
        n *= 2

    logger.debug("smear T=%+g sign=%+d nodes=%d error=%.2e", kernel.center, sign, 2 * n, error)
    return fine[inverse] * F, error


def ergodic_limit(net: TwoDNet, F, sign: int) -> np.ndarray:
    """Mean-ergodic limit of the ray averages: the zero-frequency block of F."""
    freqs = net.ray_frequencies(sign)
    resonant = np.isclose(freqs[:, None], freqs[None, :], rtol=0.0, atol=1e-10)
    return np.where(resonant, np.asarray(F, dtype=complex), 0.0)


def ergodic_bound(net: TwoDNet, F, kernel: AveragingKernel, sign: int, vector: bool = False) -> float:
    """
    Analytic bound on the distance of F_+-(h_T) from its ergodic limit.

    vector=True bounds ||F(h_T) Omega - P F Omega|| by
    ||(1 - P) F Omega|| * max_gap |h^(|T|^eps gap)|; otherwise the operator
    distance is bounded by sum over nonzero frequencies of |h^| * ||F_w||.
    """
    F = np.asarray(F, dtype=complex)
    freqs = net.ray_frequencies(sign)
    if vector:
        column = F @ net.vacuum
        gaps = freqs - freqs[net.vacuum_index]
        moving = (np.abs(gaps) > 1e-10) & (np.abs(column) > 0)
        if not np.any(moving):
            return 0.0
        decay = np.abs(kernel.profile.fourier(kernel.scale * np.unique(np.abs(gaps[moving]))))
        return float(np.linalg.norm(column[moving]) * decay.max())
    omegas, inverse = _frequency_blocks(net, sign)
    norms = _block_norms(F, omegas, inverse)
    moving = np.abs(omegas) > 1e-10
    if not np.any(moving):
        return 0.0
    decay = np.abs(kernel.profile.fourier(kernel.scale * np.abs(omegas[moving])))
    return float(np.dot(decay, norms[moving]))


# --- asymptotic fields ----------------------------------------------------

class AsymptoticKind(str, Enum):
    OUT_PLUS = "out+"
    IN_MINUS = "in-"
    IN_PLUS = "in+"
    OUT_MINUS = "out-"

    @property
    def sign(self) -> int:
        return 1 if self in (AsymptoticKind.OUT_PLUS, AsymptoticKind.IN_PLUS) else -1

    @property
    def future(self) -> bool:
        return self in (AsymptoticKind.OUT_PLUS, AsymptoticKind.OUT_MINUS)

    @property
    def wedge(self) -> Wedge:
        """Wedge whose algebra the argument must belong to."""
        return Wedge.RIGHT if self in (AsymptoticKind.OUT_PLUS, AsymptoticKind.IN_MINUS) else Wedge.LEFT

    @property
    def reflected(self) -> AsymptoticKind:
        """Kind on the other wedge with the same ray and opposite time direction."""
        return {
            AsymptoticKind.OUT_PLUS: AsymptoticKind.IN_PLUS,
            AsymptoticKind.IN_PLUS: AsymptoticKind.OUT_PLUS,
            AsymptoticKind.IN_MINUS: AsymptoticKind.OUT_MINUS,
            AsymptoticKind.OUT_MINUS: AsymptoticKind.IN_MINUS,
        }[self]


@dataclass(frozen=True)
class AsymptoticsSetup:
    """Kernel, schedule and tolerances shared by all limit computations."""

    profile: KernelProfile = PROFILES["gaussian"]
    exponent: float = 0.5
    schedule: tuple = DEFAULT_SCHEDULE
    budget: int = DEFAULT_QUADRATURE_BUDGET
    n_jobs: int = 1
    floor: float = 1e-12
    cross_tolerance: float = 1e-10
    approximant_tolerance: float = 1e-8
    wave_tolerance: float = 1e-10

    def __post_init__(self):
        magnitudes = [abs(t) for t in self.schedule]
        if not magnitudes:
            raise ValueError("T schedule must be nonempty")
        if any(b <= a for a, b in zip(magnitudes, magnitudes[1:])):
            raise ValueError(f"T schedule must be strictly increasing in |T|: {self.schedule}")

    def kernel(self, T: float) -> AveragingKernel:
        return AveragingKernel(self.profile, self.exponent, T)


@dataclass(frozen=True)
class ConvergenceTrace:
    """Residuals of an approximation along the T schedule."""

    kind: str
    schedule: tuple
    residuals: tuple
    bounds: tuple
    quadrature_errors: tuple
    extrapolated: float
    fitted_gap: float | None
    monotone: bool
    cross_check: float | None = None
    extrapolation_shift: float = 0.0

    @property
    def final_residual(self) -> float:
        return self.residuals[-1]

    def rows(self) -> list:
        return [
            {"T": T, "residual": r, "bound": b, "quadrature_error": q}
            for T, r, b, q in zip(self.schedule, self.residuals, self.bounds, self.quadrature_errors)
        ]


def _decrease_criterion(schedule, residuals, floor) -> bool:
    """Each step must shrink the residual by |T_k| / |T_k+1| unless it sits at the floor."""
    for (t0, r0), (t1, r1) in zip(zip(schedule, residuals), zip(schedule[1:], residuals[1:])):
        if r1 <= floor:
            continue
        if r1 > r0 * abs(t0) / abs(t1):
            return False
    return True


def _extrapolate(schedule, residuals, exponent, floor):
    """Fit r ~ C exp(-(|T|^eps g)^2 / 2) to the last two residuals and predict the next doubling."""
    if len(residuals) < 2 or residuals[-1] <= floor or residuals[-2] <= residuals[-1]:
        return residuals[-1], None
    s0, s1 = abs(schedule[-2]) ** (2 * exponent), abs(schedule[-1]) ** (2 * exponent)
    gap_squared = 2.0 * math.log(residuals[-2] / residuals[-1]) / (s1 - s0)
    s2 = (2.0 * abs(schedule[-1])) ** (2 * exponent)
    predicted = residuals[-1] * math.exp(-0.5 * gap_squared * (s2 - s1))
    return predicted, math.sqrt(gap_squared)


def _richardson_limit(net, sign, schedule, previous, last, setup: AsymptoticsSetup):
    """
    Two-point elimination of the decaying part under the residual model
    A(T) = L + c_T(w) F_w with c_T(w) = exp(i w T) h^(|T|^eps w), block by block.

    Blocks whose model values at the two points are not well separated keep
    the last approximant: the zero-frequency block, and blocks already at
    rounding level.
    """
    omegas, inverse = _frequency_blocks(net, sign)
    t0, t1 = schedule[-2], schedule[-1]

    def model(T):
        return np.exp(1j * omegas * T) * setup.profile.fourier(abs(T) ** setup.exponent * np.abs(omegas))

    c0, c1 = model(t0), model(t1)
    gap = c0 - c1
    size = np.maximum(np.abs(c0), np.abs(c1))
    separable = (size > ROUNDING_FLOOR) & (np.abs(gap) >= 0.5 * size)
    safe = np.where(separable, gap, 1.0)
    weight_last = np.where(separable, c0 / safe, 1.0)
    weight_previous = np.where(separable, -c1 / safe, 0.0)
    return weight_last[inverse] * last + weight_previous[inverse] * previous


def _limit_along_ray(net, F, sign, future, setup: AsymptoticsSetup, kind_label, vector=False):
    """
    Ray averages over the schedule, their residuals against the ergodic limit,
    the extrapolated limit and a trace.
    """
    F = np.asarray(F, dtype=complex)
    limit = ergodic_limit(net, F, sign)
    schedule = tuple(abs(T) if future else -abs(T) for T in setup.schedule)

    def entry(T):
        kernel = setup.kernel(T)
        averaged, qerr = smear_along_ray(net, F, kernel, sign, setup.budget)
        if vector:
            residual = float(np.linalg.norm((averaged - limit) @ net.vacuum))
            bound = ergodic_bound(net, F, kernel, sign, vector=True) + qerr
        else:
            residual = float(np.linalg.norm(averaged - limit))
            bound = ergodic_bound(net, F, kernel, sign) + qerr
        return averaged, residual, bound, qerr

    results = Parallel(n_jobs=setup.n_jobs, backend="threading")(delayed(entry)(T) for T in schedule)
    residuals = tuple(r for _, r, _, _ in results)
    floor = setup.floor * max(1.0, float(np.linalg.norm(F)))
    extrapolated, gap = _extrapolate(schedule, residuals, setup.exponent, floor)
    trace = ConvergenceTrace(
        kind=kind_label,
        schedule=schedule,
        residuals=residuals,
        bounds=tuple(b for _, _, b, _ in results),
        quadrature_errors=tuple(q for _, _, _, q in results),
        extrapolated=extrapolated,
        fitted_gap=gap,
        monotone=_decrease_criterion(schedule, residuals, floor),
    )
    if len(results) < 2:
        return results[-1][0], trace
    estimate = _richardson_limit(net, sign, schedule, results[-2][0], results[-1][0], setup)
    shift = float(np.linalg.norm(estimate - results[-1][0]))
    return estimate, replace(trace, extrapolation_shift=shift)


def ergodic_trace(net: TwoDNet, F, sign: int, setup: AsymptoticsSetup) -> ConvergenceTrace:
    """Trace of ||F_+-(h_T) Omega - P_+- F Omega|| along the schedule (T -> +inf)."""
    _, trace = _limit_along_ray(net, F, sign, True, setup, f"ergodic{'+' if sign > 0 else '-'}", vector=True)
    return trace


def asymptotic_field(net: TwoDNet, F: WedgeElement, kind, setup: AsymptoticsSetup,
                     J: ReflectionJ | None = None):
    """
    Asymptotic field of a wedge element: the ray averages on the schedule,
    extrapolated to |T| -> inf from the last two points. trace.extrapolation_shift
    is the distance of the last approximant from the returned limit.

    out+ and in- need F in R; in+ and out- need F in R'. The primed kinds
    are computed as J Phi(J F J) J and compared with the direct limit; the
    deviation is stored as trace.cross_check.

    Returns:
        tuple: (operator, ConvergenceTrace)

    Raises:
        WedgeMismatchError: F belongs to the wrong wedge
        NonConvergenceError: residuals fail the decrease criterion
    """
    kind = AsymptoticKind(kind)
    if F.wedge is not kind.wedge:
        raise WedgeMismatchError(f"{kind.value} needs an element of {kind.wedge.value}, got {F.wedge.value}")

    if kind.wedge is Wedge.RIGHT:
        operator, trace = _limit_along_ray(net, F.operator, kind.sign, kind.future, setup, kind.value)
    else:
        J = J or reflection(net)
        partner = J.conjugate_element(F)
        reflected, trace = _limit_along_ray(net, partner.operator, kind.sign, not kind.future, setup, kind.value)
        operator = J.conjugate(reflected)
        direct, _ = _limit_along_ray(net, F.operator, kind.sign, kind.future, setup, kind.value)
        deviation = float(np.linalg.norm(direct - operator))
        if deviation > setup.cross_tolerance:
            logger.warning("%s: J-conjugated and direct limits differ by %.2e", kind.value, deviation)
        trace = replace(trace, schedule=tuple(-t for t in trace.schedule), cross_check=deviation)

    if not trace.monotone:
        raise NonConvergenceError(
            f"{kind.value} residuals {['%.2e' % r for r in trace.residuals]} fail the decrease criterion",
            trace,
        )
    return operator, trace


def field_properties(net: TwoDNet, F: WedgeElement, kind, setup: AsymptoticsSetup,
                     partners=(), points=SAMPLE_POINTS, J: ReflectionJ | None = None) -> dict:
    """
    Structural properties of an extracted asymptotic field.

    invariance: ||(1 - P) Phi P|| for the lightcone projection P of the ray
    vacuum: ||Phi Omega - P F Omega||
    covariance: max ||alpha_x(Phi(F)) - Phi(alpha_x F)|| over points x in F's wedge
                whose translate keeps F's packets on their side of the circle
    strong_convergence: max ||Phi(F) F' Omega - F' P F Omega|| over elements F' of the other wedge
    """
    kind = AsymptoticKind(kind)
    phi, trace = asymptotic_field(net, F, kind, setup, J)
    P = net.Pplus if kind.sign > 0 else net.Pminus
    identity = np.eye(net.dim)
    wave = P @ F.operator @ net.vacuum

    covariance = 0.0
    for x in points:
        if not F.wedge.contains(x):
            continue
        try:
            moved = apply_translation(net, F, x)
        except SupportViolationError:
            logger.debug("covariance: translate by %s wraps %s out of its wedge", x, F.label)
            continue
        shifted, _ = asymptotic_field(net, moved, kind, setup, J)
        covariance = max(covariance, float(np.abs(apply_translation(net, phi, x) - shifted).max()))

    strong_residual = 0.0
    for other in partners:
        lhs = phi @ other.operator @ net.vacuum
        strong_residual = max(strong_residual, float(np.linalg.norm(lhs - other.operator @ wave)))

    return {
        "invariance": float(np.linalg.norm((identity - P) @ phi @ P, 2)),
        "vacuum": float(np.linalg.norm(phi @ net.vacuum - wave)),
        "covariance": covariance,
        "strong_convergence": strong_residual,
        "final_residual": trace.final_residual,
        "extrapolation_shift": trace.extrapolation_shift,
    }


def pinch_levels(space, A) -> np.ndarray:
    """Part of a chiral operator that commutes with the chiral momentum."""
    return np.where(space.levels[:, None] == space.levels[None, :], np.asarray(A, dtype=complex), 0.0)


def factorization_residual(net: TwoDNet, F: WedgeElement, phi, kind, pinched: bool = False) -> float:
    """
    Distance of an asymptotic field of a simple tensor A1 x A2 from its
    chiral closed form: A1 (Omega2|A2 Omega2) for + kinds and
    (Omega1|A1 Omega1) A2 for - kinds.

    pinched=True compares with A1 x E2(A2) (resp. E1(A1) x A2) instead, E the
    pinching onto the commutant of the chiral translations. On a discrete
    momentum grid this is the exact limit; it reduces to the vacuum
    expectation form for fields linear in the averaged leg.
    """
    if F.legs is None:
        raise ValueError("closed form needs an element built from simple tensors")
    A1, A2 = F.legs
    if AsymptoticKind(kind).sign > 0:
        if pinched:
            expected = net.embed(A1, pinch_levels(net.net2, A2))
        else:
            expected = net.embed(A1 * np.vdot(net.net2.vacuum, A2 @ net.net2.vacuum), None)
    elif pinched:
        expected = net.embed(pinch_levels(net.net1, A1), A2)
    else:
        expected = net.embed(None, A2 * np.vdot(net.net1.vacuum, A1 @ net.net1.vacuum))
    return float(np.linalg.norm(phi - expected, 2))


# --- dictionaries and scattering states ---------------------------------------

@dataclass(frozen=True, eq=False)
class AsymptoticTable:
    """Asymptotic fields of a dictionary of wedge elements for one kind."""

    kind: AsymptoticKind
    elements: tuple
    fields: np.ndarray = field(repr=False)
    waves: np.ndarray = field(repr=False)
    traces: tuple = field(repr=False)

    def combine(self, coefficients) -> np.ndarray:
        return np.tensordot(coefficients, self.fields, axes=1)


def _words(letters, length):
    for n in range(length + 1):
        yield from product(range(letters), repeat=n)


def wave_dictionary(net: TwoDNet, functions: int = 3, word_length: int = 3, width: float = 0.4) -> dict:
    """
    Words in smeared fields of one chiral factor, for each wedge and lightline.

    Keys are the asymptotic kinds the family feeds:
        out+ : net-1 fields on R-  (in R)
        in-  : net-2 fields on R+  (in R)
        in+  : net-1 fields on R+  (in R')
        out- : net-2 fields on R-  (in R')
    Packet centers sit a quarter period from the origin on the required
    side of the position circle, spread by a sixteenth of the period either way.
    """
    layout = {
        AsymptoticKind.OUT_PLUS: (0, -1, Wedge.RIGHT),
        AsymptoticKind.IN_MINUS: (1, 1, Wedge.RIGHT),
        AsymptoticKind.IN_PLUS: (0, 1, Wedge.LEFT),
        AsymptoticKind.OUT_MINUS: (1, -1, Wedge.LEFT),
    }
    dictionary = {}
    for kind, (leg, side, wedge) in layout.items():
        grid = (net.net1 if leg == 0 else net.net2).grid
        quarter = grid.period / 4.0
        spread = np.linspace(-0.25, 0.25, functions) if functions > 1 else np.zeros(1)
        packets = [wave_packet(grid, side * quarter * (1.0 + s), width) for s in spread]
        pairs = [(f, None) if leg == 0 else (None, f) for f in packets]
        dictionary[kind] = tuple(
            wedge_element(net, pairs, ((1.0, word),), wedge, label=f"{kind.value}{word}")
            for word in _words(functions, word_length)
        )
    return dictionary


def asymptotic_table(net: TwoDNet, elements, kind, setup: AsymptoticsSetup,
                     J: ReflectionJ | None = None) -> AsymptoticTable:
    kind = AsymptoticKind(kind)
    fields, traces = [], []
    for element in elements:
        phi, trace = asymptotic_field(net, element, kind, setup, J)
        fields.append(phi)
        traces.append(trace)
    fields = np.array(fields)
    P = net.Pplus if kind.sign > 0 else net.Pminus
    waves = np.array([P @ element.operator @ net.vacuum for element in elements]).T
    return AsymptoticTable(kind, tuple(elements), fields, waves, tuple(traces))


@dataclass(frozen=True, eq=False)
class ScatteringContext:
    """Net, reflection, limit setup and tabulated dictionary fields."""

    net: TwoDNet
    J: ReflectionJ
    setup: AsymptoticsSetup
    tables: dict


def scattering_context(net: TwoDNet, setup: AsymptoticsSetup, dictionary: dict | None = None,
                       J: ReflectionJ | None = None) -> ScatteringContext:
    J = J or reflection(net)
    dictionary = dictionary or wave_dictionary(net)
    tables = {kind: asymptotic_table(net, elements, kind, setup, J) for kind, elements in dictionary.items()}
    logger.info("Scattering context: %s", {k.value: len(t.elements) for k, t in tables.items()})
    return ScatteringContext(net, J, setup, tables)


@dataclass(frozen=True, eq=False)
class ScatteringState:
    """A two-wave state (Psi+, Psi-) composed in one direction."""

    plus: np.ndarray = field(repr=False)
    minus: np.ndarray = field(repr=False)
    direction: str
    composed: np.ndarray = field(repr=False)
    trace: ConvergenceTrace | str
    checks: dict = field(default_factory=dict)


def _require_wave(net, vector, mask, name, tolerance):
    vector = np.asarray(vector, dtype=complex)
    leak = float(np.linalg.norm(vector[~mask]))
    if leak > tolerance * max(1.0, float(np.linalg.norm(vector))):
        raise NotAWaveError(f"{name} has {leak:.2e} outside its lightcone subspace")
    return vector


def _fit(table: AsymptoticTable, target, tolerance):
    coefficients, *_ = linalg.lstsq(table.waves, target)
    residual = float(np.linalg.norm(table.waves @ coefficients - target))
    if residual > tolerance * max(1.0, float(np.linalg.norm(target))):
        raise ApproximantError(residual, tolerance)
    return coefficients


def _worst_trace(table, coefficients):
    used = [t for c, t in zip(coefficients, table.traces) if abs(c) > 0]
    return max(used, key=lambda t: t.final_residual) if used else table.traces[0]


def exact_chiral_state(net: TwoDNet, plus, minus) -> np.ndarray:
    """(psi1 x Omega2, Omega1 x psi2) -> psi1 x psi2."""
    psi1 = np.asarray(plus).reshape(net.net1.dim, net.net2.dim)[:, net.net2.vacuum_index]
    psi2 = np.asarray(minus).reshape(net.net1.dim, net.net2.dim)[net.net1.vacuum_index, :]
    return np.kron(psi1, psi2)


def _compose(ctx, plus_kind, minus_kind, plus, minus):
    tolerance = ctx.setup.approximant_tolerance
    plus_table, minus_table = ctx.tables[plus_kind], ctx.tables[minus_kind]
    c_plus = _fit(plus_table, plus, tolerance)
    c_minus = _fit(minus_table, minus, tolerance)
    vector = plus_table.combine(c_plus) @ (minus_table.combine(c_minus) @ ctx.net.vacuum)
    trace = max(_worst_trace(plus_table, c_plus), _worst_trace(minus_table, c_minus),
                key=lambda t: t.final_residual)
    return vector, trace


def build_scattering_state(ctx: ScatteringContext, plus, minus, direction: str = "out") -> ScatteringState:
    """
    Two-wave scattering state of Psi+ in ran(P+) and Psi- in ran(P-).

    out: Phi+out(F) Phi-out(F') Omega with P+ F Omega = Psi+, P- F' Omega = Psi-,
         F and F' least-squares combinations of the dictionary.
    in:  J ((J Psi+) out (J Psi-)), cross-checked against the T -> -inf
         composition Phi+in(G') Phi-in(G) Omega.
    Both directions are compared with the chiral shortcut psi1 x psi2.
    """
    net = ctx.net
    tolerance = ctx.setup.wave_tolerance
    plus = _require_wave(net, plus, net.plus_mask, "Psi+", tolerance)
    minus = _require_wave(net, minus, net.minus_mask, "Psi-", tolerance)
    exact = exact_chiral_state(net, plus, minus)

    if direction == "out":
        composed, trace = _compose(ctx, AsymptoticKind.OUT_PLUS, AsymptoticKind.OUT_MINUS, plus, minus)
        checks = {}
    elif direction == "in":
        reflected, trace = _compose(ctx, AsymptoticKind.OUT_PLUS, AsymptoticKind.OUT_MINUS,
                                    ctx.J.apply(plus), ctx.J.apply(minus))
        composed = ctx.J.apply(reflected)
        limiting, _ = _compose(ctx, AsymptoticKind.IN_PLUS, AsymptoticKind.IN_MINUS, plus, minus)
        checks = {"in_duality": float(np.linalg.norm(composed - limiting))}
    else:
        raise ValueError(f"direction must be 'out' or 'in', got {direction!r}")

    checks["exact_chiral"] = float(np.linalg.norm(composed - exact))
    checks["norm_factorization"] = abs(
        float(np.linalg.norm(composed)) - float(np.linalg.norm(plus) * np.linalg.norm(minus))
    )
    return ScatteringState(plus, minus, direction, composed, trace, checks)


def check_clustering(ctx: ScatteringContext, F: WedgeElement, G: WedgeElement,
                     Fp: WedgeElement, Gp: WedgeElement) -> float:
    """
    |(Phi+(F) Phi-(F') Omega | Phi+(G) Phi-(G') Omega)
      - (Phi+(F) Omega | Phi+(G) Omega)(Phi-(F') Omega | Phi-(G') Omega)|
    with all fields outgoing.
    """
    net, setup, J = ctx.net, ctx.setup, ctx.J
    phi_F, _ = asymptotic_field(net, F, AsymptoticKind.OUT_PLUS, setup, J)
    phi_G, _ = asymptotic_field(net, G, AsymptoticKind.OUT_PLUS, setup, J)
    phi_Fp, _ = asymptotic_field(net, Fp, AsymptoticKind.OUT_MINUS, setup, J)
    phi_Gp, _ = asymptotic_field(net, Gp, AsymptoticKind.OUT_MINUS, setup, J)
    omega = net.vacuum
    lhs = np.vdot(phi_F @ phi_Fp @ omega, phi_G @ phi_Gp @ omega)
    rhs = np.vdot(phi_F @ omega, phi_G @ omega) * np.vdot(phi_Fp @ omega, phi_Gp @ omega)
    return float(abs(lhs - rhs))


def two_wave_basis(net: TwoDNet) -> list:
    """All pairs (e_i x Omega2, Omega1 x e_j) over the factor bases."""
    plus_vectors = [net.product_vector(np.eye(net.net1.dim)[i], net.net2.vacuum) for i in range(net.net1.dim)]
    minus_vectors = [net.product_vector(net.net1.vacuum, np.eye(net.net2.dim)[j]) for j in range(net.net2.dim)]
    return [(p, m) for p in plus_vectors for m in minus_vectors]


@dataclass(frozen=True, eq=False)
class ScatteringMatrix:
    """S on the span of the out states of a family of wave pairs."""

    matrix: np.ndarray = field(repr=False)
    out_states: np.ndarray = field(repr=False)
    in_states: np.ndarray = field(repr=False)
    rank: int
    dim: int
    checks: dict

    @property
    def span_projector(self) -> np.ndarray:
        basis = linalg.orth(self.out_states, rcond=1e-10)
        return basis @ basis.conj().T


def scattering_operator(ctx: ScatteringContext, basis_pairs=None, rng=None,
                        points=SAMPLE_POINTS, rank_tolerance: float = 1e-8) -> ScatteringMatrix:
    """
    S(Psi+ out Psi-) = Psi+ in Psi- on the span of the given pairs.

    S = I O^+ with O, I the matrices of out and in states; isometry,
    covariance and completeness are reported in checks.
    """
    net = ctx.net
    basis_pairs = two_wave_basis(net) if basis_pairs is None else list(basis_pairs)
    outs = [build_scattering_state(ctx, p, m, "out") for p, m in basis_pairs]
    ins = [build_scattering_state(ctx, p, m, "in") for p, m in basis_pairs]
    O = np.array([s.composed for s in outs]).T
    I = np.array([s.composed for s in ins]).T

    singular = linalg.svdvals(O)
    rank = int(np.sum(singular > rank_tolerance * max(1.0, singular[0])))
    if rank < net.dim:
        warnings.warn(f"out states span {rank} of {net.dim} dimensions", RankDeficiencyWarning, stacklevel=2)
    S = I @ linalg.pinv(O, rtol=rank_tolerance)
    result = ScatteringMatrix(S, O, I, rank, net.dim, {})
    projector = result.span_projector

    plus = np.array([p for p, _ in basis_pairs]).T
    minus = np.array([m for _, m in basis_pairs]).T
    tensor_gram = (plus.conj().T @ plus) * (minus.conj().T @ minus)
    checks = {
        "identity": float(np.linalg.norm((S - np.eye(net.dim)) @ projector, 2)),
        "gram_out": float(np.abs(O.conj().T @ O - tensor_gram).max()),
        "gram_in": float(np.abs(I.conj().T @ I - tensor_gram).max()),
        "unitarity": float(np.linalg.norm(S.conj().T @ S @ projector - projector, 2)),
        "vacuum": float(np.linalg.norm(S @ net.vacuum - net.vacuum)),
        "covariance": max(
            float(np.linalg.norm((translation_unitary(net, x) @ S - S @ translation_unitary(net, x)) @ projector, 2))
            for x in points
        ),
        "in_duality": max(s.checks["in_duality"] for s in ins),
        "exact_chiral": max(s.checks["exact_chiral"] for s in outs + ins),
        "norm_factorization": max(s.checks["norm_factorization"] for s in outs + ins),
        "completeness_defect": float(net.dim - rank),
    }
    if rng is not None:
        psi = O @ (rng.normal(size=O.shape[1]) + 1j * rng.normal(size=O.shape[1]))
        checks["random_isometry"] = abs(float(np.linalg.norm(S @ psi)) - float(np.linalg.norm(psi))) / float(
            np.linalg.norm(psi))
    checks.update(_covariance_of_states(ctx, basis_pairs[: min(4, len(basis_pairs))], points))
    return ScatteringMatrix(S, O, I, rank, net.dim, checks)


def _covariance_of_states(ctx, pairs, points) -> dict:
    """U(x)(Psi+ out Psi-) = (U(x) Psi+) out (U(x) Psi-) on sampled pairs and points."""
    net = ctx.net
    worst = 0.0
    for plus, minus in pairs:
        state = build_scattering_state(ctx, plus, minus, "out").composed
        for x in points:
            U = translation_unitary(net, x)
            moved = build_scattering_state(ctx, U @ plus, U @ minus, "out").composed
            worst = max(worst, float(np.linalg.norm(U @ state - moved)))
    return {"state_covariance": worst}


# --- asymptotic Borchers triple -----------------------------------------------

@dataclass(frozen=True, eq=False)
class AsymptoticTriple:
    """Generators of R^as and (R')^as on H+ x H- with their checks."""

    plus_basis: np.ndarray = field(repr=False)
    minus_basis: np.ndarray = field(repr=False)
    vacuum: np.ndarray = field(repr=False)
    generators: tuple = field(repr=False)
    primed_generators: tuple = field(repr=False)
    checks: dict = field(default_factory=dict)

    def translation(self, net: TwoDNet, x) -> np.ndarray:
        """U^as(x) = U(x)|H+ x U(x)|H-."""
        U = translation_unitary(net, x)
        return np.kron(_restrict(self.plus_basis, U), _restrict(self.minus_basis, U))


def _restrict(V, A):
    return V.conj().T @ A @ V


def _lightcone_bases(net: TwoDNet):
    identity = np.eye(net.dim, dtype=complex)
    return identity[:, net.plus_mask], identity[:, net.minus_mask]


def _vacuum_positions(net: TwoDNet):
    """Column of Omega inside the H+ and H- bases."""
    return (int(np.count_nonzero(net.plus_mask[: net.vacuum_index])),
            int(np.count_nonzero(net.minus_mask[: net.vacuum_index])))


def _asymptotic_vacuum(net: TwoDNet, Vp, Vm) -> np.ndarray:
    return np.kron(Vp.conj().T @ net.vacuum, Vm.conj().T @ net.vacuum)


def _commutator_norm(A, B):
    return float(np.linalg.norm(A @ B - B @ A, 2))


def _is_scalar(A, tolerance=1e-12):
    return float(np.abs(A - A[0, 0] * np.eye(A.shape[0])).max()) <= tolerance


def asymptotic_triple_generators(ctx: ScatteringContext, samples, primed_samples) -> AsymptoticTriple:
    """
    Generators Phi+out(F)|H+ x Phi-in(G)|H- of R^as and
    Phi+in(F')|H+ x Phi-out(G')|H- of (R')^as.

    samples are (F, G) pairs of R elements, primed_samples (F', G') pairs of
    R' elements. The full commutator between the two generator sets is a
    leakage diagnostic. Pairs where each tensor leg has a scalar side must
    commute exactly and are reported as commutator_exact_legs.
    """
    net, setup, J = ctx.net, ctx.setup, ctx.J
    Vp, Vm = _lightcone_bases(net)
    omega = net.vacuum
    vacuum = _asymptotic_vacuum(net, Vp, Vm)

    def restricted_legs(first, second, first_kind, second_kind):
        phi1, _ = asymptotic_field(net, first, first_kind, setup, J)
        phi2, _ = asymptotic_field(net, second, second_kind, setup, J)
        return _restrict(Vp, phi1), _restrict(Vm, phi2)

    legs = [restricted_legs(F, G, AsymptoticKind.OUT_PLUS, AsymptoticKind.IN_MINUS) for F, G in samples]
    primed_legs = [restricted_legs(Fp, Gp, AsymptoticKind.IN_PLUS, AsymptoticKind.OUT_MINUS)
                   for Fp, Gp in primed_samples]
    generators = [np.kron(a, b) for a, b in legs]
    primed = [np.kron(a, b) for a, b in primed_legs]

    vacuum_action = 0.0
    structure = 0.0
    for (F, G), (a, _), generator in zip(samples, legs, generators):
        expected = np.kron(Vp.conj().T @ (net.Pplus @ F.operator @ omega),
                           Vm.conj().T @ (net.Pminus @ G.operator @ omega))
        vacuum_action = max(vacuum_action, float(np.linalg.norm(generator @ vacuum - expected)))
        if F.legs is not None:
            A1, A2 = F.legs
            closed = A1 * np.vdot(net.net2.vacuum, A2 @ net.net2.vacuum)
            structure = max(structure, float(np.abs(a - closed).max()))

    leakage = max((_commutator_norm(g, h) for g in generators for h in primed), default=0.0)
    exact = 0.0
    for (a, b), g in zip(legs, generators):
        for (ap, bp), h in zip(primed_legs, primed):
            if (_is_scalar(a) or _is_scalar(ap)) and (_is_scalar(b) or _is_scalar(bp)):
                exact = max(exact, _commutator_norm(g, h))

    checks = {
        "commutator_leakage": leakage,
        "commutator_exact_legs": exact,
        "vacuum_action": vacuum_action,
        "chiral_structure": structure,
    }
    checks.update(_asymptotic_spectrum(net, Vp, Vm))
    checks["scattering_identity"] = _asymptotic_scattering(net, Vp, Vm, vacuum, generators, primed)
    return AsymptoticTriple(Vp, Vm, vacuum, tuple(generators), tuple(primed), checks)


def _asymptotic_spectrum(net, Vp, Vm) -> dict:
    """Joint spectrum of U^as lies in the forward cone with a unique vacuum."""
    Hp, Pp = np.real(np.diag(_restrict(Vp, net.H))), np.real(np.diag(_restrict(Vp, net.P)))
    Hm, Pm = np.real(np.diag(_restrict(Vm, net.H))), np.real(np.diag(_restrict(Vm, net.P)))
    energy = np.add.outer(Hp, Hm).ravel()
    momentum = np.add.outer(Pp, Pm).ravel()
    zero = np.sum((np.abs(energy) < 1e-12) & (np.abs(momentum) < 1e-12))
    return {
        "asymptotic_spectrum_in_cone": float(max(0.0, np.max(np.abs(momentum) - energy))),
        "asymptotic_vacuum_defect": float(abs(zero - 1)),
    }


def _asymptotic_scattering(net, Vp, Vm, vacuum, generators, primed) -> float:
    """
    Largest distance of an asymptotic out or in two-wave state from the
    product of its waves; zero means S^as = 1.

    Asymptotic fields on H+ x H- are pinchings in the ray frequencies of
    U^as, and the two-wave states are built from R^as and (R')^as
    generators as in the interacting construction.
    """
    plus_position, minus_position = _vacuum_positions(net)
    d_plus, d_minus = Vp.shape[1], Vm.shape[1]

    def ray_frequencies(generator):
        return np.real(np.add.outer(np.diag(_restrict(Vp, generator)), np.diag(_restrict(Vm, generator))).ravel())

    freq_plus = ray_frequencies(net.H - net.P)
    freq_minus = ray_frequencies(net.H + net.P)
    plus_waves = np.isclose(freq_plus, 0.0, atol=1e-10)
    minus_waves = np.isclose(freq_minus, 0.0, atol=1e-10)

    def pinch(A, freqs):
        return np.where(np.isclose(freqs[:, None], freqs[None, :], rtol=0.0, atol=1e-10), A, 0.0)

    def product_state(psi_plus, psi_minus):
        return np.kron(psi_plus.reshape(d_plus, d_minus)[:, minus_position],
                       psi_minus.reshape(d_plus, d_minus)[plus_position, :])

    worst = 0.0
    for X in generators:
        for Y in primed:
            out_state = pinch(X, freq_plus) @ pinch(Y, freq_minus) @ vacuum
            out_waves = (np.where(plus_waves, X @ vacuum, 0.0), np.where(minus_waves, Y @ vacuum, 0.0))
            in_state = pinch(Y, freq_plus) @ pinch(X, freq_minus) @ vacuum
            in_waves = (np.where(plus_waves, Y @ vacuum, 0.0), np.where(minus_waves, X @ vacuum, 0.0))
            worst = max(worst,
                        float(np.linalg.norm(out_state - product_state(*out_waves))),
                        float(np.linalg.norm(in_state - product_state(*in_waves))))
    return worst


def intertwiner_W(net: TwoDNet) -> np.ndarray:
    """
    Unitary W: H+ x H- -> H with W((psi1 x Omega2) x (Omega1 x psi2)) = psi1 x psi2.

    Columns are indexed by the product of the lightcone bases.
    """
    Vp, Vm = _lightcone_bases(net)
    columns = [exact_chiral_state(net, Vp[:, a], Vm[:, b])
               for a in range(Vp.shape[1]) for b in range(Vm.shape[1])]
    return np.array(columns).T


def intertwiner_report(net: TwoDNet, triple: AsymptoticTriple, samples, points=SAMPLE_POINTS) -> dict:
    """
    Unitarity, vacuum and covariance of W, and W-conjugates of R^as generators
    against (Omega1|B1 Omega1)(Omega2|A2 Omega2) A1 x B2.
    """
    W = intertwiner_W(net)
    covariance = max(
        float(np.abs(W @ triple.translation(net, x) - translation_unitary(net, x) @ W).max()) for x in points
    )
    mapping = 0.0
    for (F, G), generator in zip(samples, triple.generators):
        if F.legs is None or G.legs is None:
            continue
        A1, A2 = F.legs
        B1, B2 = G.legs
        scalar = np.vdot(net.net1.vacuum, B1 @ net.net1.vacuum) * np.vdot(net.net2.vacuum, A2 @ net.net2.vacuum)
        mapping = max(mapping, float(np.abs(W @ generator @ W.conj().T - scalar * net.embed(A1, B2)).max()))
    return {
        "unitarity": float(np.abs(W.conj().T @ W - np.eye(W.shape[1])).max()),
        "vacuum": float(np.linalg.norm(W @ triple.vacuum - net.vacuum)),
        "covariance": covariance,
        "generator_mapping": mapping,
    }


def main():
    from fock_core import ModeGrid, build_fock_space
    from spacetime_net import build_two_d_net, sample_wedge_elements

    print("🌊 Asymptotic fields and two-wave scattering")
    print("-" * 40)
    space = build_fock_space(ModeGrid(1.0, 3), per_mode_cap=2, energy_cap=4.0)
    net = build_two_d_net(space, space)
    setup = AsymptoticsSetup()
    rng = np.random.default_rng(0)

    F = sample_wedge_elements(net, Wedge.RIGHT, 1, rng)[0]
    for kind in AsymptoticKind:
        element = F if kind.wedge is Wedge.RIGHT else reflection(net).conjugate_element(F)
        phi, trace = asymptotic_field(net, element, kind, setup)
        residuals = "  ".join(f"{r:.1e}" for r in trace.residuals)
        print(f"  {kind.value:<5} residuals {residuals}  closed form {factorization_residual(net, element, phi, kind):.1e}")

    ctx = scattering_context(net, setup)
    S = scattering_operator(ctx, rng=rng)
    print(f"\nS on {S.rank}/{S.dim} dimensions")
    for name, value in S.checks.items():
        print(f"  {name:<20} {value:.2e}")


if __name__ == "__main__":
    main()
