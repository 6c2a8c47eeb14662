#!/usr/bin/env python3
"""
Truncated chiral Fock space on one lightline.

Builds the occupation-number basis of a free chiral boson on a positive
momentum grid, its ladder operators, the chiral momentum generator and the
smeared fields that generate the interval algebras.

Basis states are ordered by total chiral momentum, then lexicographically,
so every matrix built here is reproducible across runs.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.linalg import expm

from errors import DimensionOverflowError, GridMismatchError, SupportOverlapWarning

logger = logging.getLogger(__name__)

DEFAULT_LEAKAGE = 1e-3
DEFAULT_MAX_DIM = 4096
TREND_SLACK = 1e-9

# Position samples per mode when locating the bulk of a wave packet.
_POSITION_OVERSAMPLING = 64


@dataclass(frozen=True)
class ModeGrid:
    """Positive momentum grid {k * spacing | k = 1..count}."""

    spacing: float
    count: int

    def __post_init__(self):
        if not self.spacing > 0:
            raise ValueError(f"grid spacing must be positive, got {self.spacing}")
        if self.count < 1:
            raise ValueError(f"grid needs at least one mode, got {self.count}")

    @property
    def momenta(self) -> np.ndarray:
        return self.spacing * np.arange(1, self.count + 1, dtype=float)

    @property
    def period(self) -> float:
        """Spatial period 2*pi/spacing of every position profile on this grid."""
        return 2.0 * math.pi / self.spacing


@dataclass(frozen=True)
class FockSpace:
    """
    Occupation basis admitted by a per-mode cap and a total-energy cap.

    energy_cap is math.inf for an unbounded energy.
    """

    grid: ModeGrid
    per_mode_cap: int
    energy_cap: float
    basis: tuple

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def vacuum_index(self) -> int:
        return self.index[(0,) * self.grid.count]

    @cached_property
    def index(self) -> dict:
        return {state: i for i, state in enumerate(self.basis)}

    @cached_property
    def levels(self) -> np.ndarray:
        """Total chiral momentum of each basis state in units of the spacing."""
        weights = np.arange(1, self.grid.count + 1)
        return np.array([int(np.dot(state, weights)) for state in self.basis], dtype=np.int64)

    @cached_property
    def vacuum(self) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=complex)
        vec[self.vacuum_index] = 1.0
        vec.setflags(write=False)
        return vec

    def state_vector(self, occupation) -> np.ndarray:
        """Unit vector of an admitted occupation tuple."""
        occupation = tuple(occupation)
        if occupation not in self.index:
            raise ValueError(f"occupation {occupation} is not admitted by the truncation")
        vec = np.zeros(self.dim, dtype=complex)
        vec[self.index[occupation]] = 1.0
        return vec


@dataclass(frozen=True, eq=False)
class ChiralOperator:
    """Dense matrix on one FockSpace with provenance and optional localization."""

    space: FockSpace
    matrix: np.ndarray
    label: str = ""
    support: tuple | None = None

    def __post_init__(self):
        if self.matrix.shape != (self.space.dim, self.space.dim):
            raise ValueError(
                f"{self.label or 'operator'}: shape {self.matrix.shape} does not match dim {self.space.dim}"
            )
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError(f"{self.label or 'operator'}: matrix has non-finite entries")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def adjoint(self) -> ChiralOperator:
        return ChiralOperator(self.space, self.matrix.conj().T, f"({self.label})*", self.support)


@dataclass(frozen=True, eq=False)
class TestFunction:
    """
    Smearing function given by its amplitudes on the grid momenta.

    The position profile is f(x) = sum_k profile[k] * exp(i k x); it is
    periodic with period grid.period, so nominal_support never exceeds one
    period around the center.
    """

    __test__ = False

    grid: ModeGrid
    center: float
    width: float
    momentum_profile: np.ndarray
    nominal_support: tuple
    leakage: float = DEFAULT_LEAKAGE

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.momentum_profile))

    def position_profile(self, points=None):
        """Sample f on one period centred at the packet center."""
        if points is None:
            n = _POSITION_OVERSAMPLING * self.grid.count
            half = self.grid.period / 2.0
            points = self.center + np.linspace(-half, half, n, endpoint=False)
        points = np.asarray(points, dtype=float)
        values = np.exp(1j * np.outer(points, self.grid.momenta)) @ self.momentum_profile
        return points, values

    @property
    def reduced_center(self) -> float:
        """Center brought into the fundamental domain (-period/2, period/2]."""
        period = self.grid.period
        reduced = math.remainder(self.center, period)
        return period / 2.0 if math.isclose(reduced, -period / 2.0) else reduced

    def mass_on(self, lo: float, hi: float) -> float:
        """
        Fraction of the |f|^2 mass of one period lying on the arc [lo, hi].

        Exact: |f|^2 is a trigonometric polynomial in the grid momenta.
        """
        if not lo <= hi <= lo + self.grid.period:
            raise ValueError(f"arc ({lo}, {hi}) must be ordered and span at most one period")
        c = self.momentum_profile
        total = float(np.vdot(c, c).real)
        if total == 0:
            return 0.0
        k = self.grid.momenta
        gaps = k[:, None] - k[None, :]
        off = gaps != 0
        safe = np.where(off, gaps, 1.0)
        integrals = np.where(off, (np.exp(1j * safe * hi) - np.exp(1j * safe * lo)) / (1j * safe), hi - lo)
        mass = float(np.real(np.sum(np.outer(c, c.conj()) * integrals)))
        return min(max(mass / (self.grid.period * total), 0.0), 1.0)

    def side_leakage(self, side: int) -> float:
        """
        Mass on the wrong half of the circle for a function meant to live on
        (-period/2, 0) (side -1) or (0, period/2) (side +1).
        """
        half = self.grid.period / 2.0
        return self.mass_on(0.0, half) if side < 0 else self.mass_on(-half, 0.0)

    def shifted(self, s: float) -> TestFunction:
        """Translate by s in position space."""
        profile = self.momentum_profile * np.exp(-1j * self.grid.momenta * s)
        lo, hi = self.nominal_support
        return TestFunction(self.grid, self.center + s, self.width, _frozen(profile), (lo + s, hi + s), self.leakage)

    def reflected(self) -> TestFunction:
        """Image under the reflection x -> -x followed by complex conjugation."""
        lo, hi = self.nominal_support
        return TestFunction(
            self.grid, -self.center, self.width, _frozen(self.momentum_profile.conj()), (-hi, -lo), self.leakage
        )


def _frozen(array):
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


def _admitted_states(count, per_mode_cap, max_level):
    """Enumerate occupation tuples with n_k <= cap and sum_k k*n_k <= max_level."""
    states = []

    def extend(prefix, level):
        mode = len(prefix) + 1
        if mode > count:
            states.append((level, tuple(prefix)))
            return
        for n in range(per_mode_cap + 1):
            new_level = level + n * mode
            if new_level > max_level:
                break
            extend(prefix + [n], new_level)

    extend([], 0)
    states.sort()
    return tuple(state for _, state in states)


def build_fock_space(grid: ModeGrid, per_mode_cap: int, energy_cap: float = math.inf,
                     max_dim: int = DEFAULT_MAX_DIM) -> FockSpace:
    """
    Build the truncated occupation basis.

    Args:
        grid: momentum grid
        per_mode_cap: largest occupation of any single mode
        energy_cap: largest admitted total chiral momentum (math.inf for none)
        max_dim: dimension bound; exceeding it raises DimensionOverflowError

    Returns:
        FockSpace: basis ordered by total momentum, then lexicographically
    """
    if per_mode_cap < 1:
        raise ValueError(f"per_mode_cap must be positive, got {per_mode_cap}")
    if not energy_cap > 0:
        raise ValueError(f"energy_cap must be positive, got {energy_cap}")

    full_level = per_mode_cap * grid.count * (grid.count + 1) // 2
    if math.isinf(energy_cap):
        max_level = full_level
    else:
        # Tolerate float round-off in energy_cap / spacing
        max_level = min(full_level, int(math.floor(energy_cap / grid.spacing + 1e-9)))

    if math.isinf(energy_cap) and (per_mode_cap + 1) ** grid.count > max_dim:
        raise DimensionOverflowError((per_mode_cap + 1) ** grid.count, max_dim)

    basis = _admitted_states(grid.count, per_mode_cap, max_level)
    if len(basis) > max_dim:
        raise DimensionOverflowError(len(basis), max_dim)
    if len(basis) < 2:
        raise ValueError(f"energy cap {energy_cap} admits only the vacuum on spacing {grid.spacing}")

    space = FockSpace(grid, per_mode_cap, float(energy_cap), basis)
    logger.debug("Fock space: %d modes, cap %d, energy cap %s -> dim %d",
                 grid.count, per_mode_cap, energy_cap, space.dim)
    return space


@lru_cache(maxsize=256)
def _ladder_arrays(space: FockSpace, mode: int):
    annihilator = np.zeros((space.dim, space.dim), dtype=complex)
    for i, state in enumerate(space.basis):
        n = state[mode]
        if n == 0:
            continue
        lowered = state[:mode] + (n - 1,) + state[mode + 1:]
        # Lowering never leaves the admitted set
        annihilator[space.index[lowered], i] = math.sqrt(n)
    creator = annihilator.conj().T.copy()
    annihilator.setflags(write=False)
    creator.setflags(write=False)
    return annihilator, creator


def ladder_matrices(space: FockSpace, mode: int):
    """
    Annihilator and creator of one grid mode (0-based index).

    Creator transitions that would leave the truncated basis are dropped,
    so creator is exactly the conjugate transpose of annihilator.
    """
    if not 0 <= mode < space.grid.count:
        raise IndexError(f"mode {mode} outside grid of {space.grid.count} modes")
    annihilator, creator = _ladder_arrays(space, mode)
    k = mode + 1
    return (ChiralOperator(space, annihilator, f"a_{k}"),
            ChiralOperator(space, creator, f"a*_{k}"))


def chiral_momentum(space: FockSpace) -> ChiralOperator:
    """Diagonal generator with eigenvalue sum_k n_k * k * spacing."""
    return ChiralOperator(space, np.diag(space.levels * space.grid.spacing).astype(complex), "P")


def _support_radius(grid, profile, center, leakage):
    if not np.any(profile):
        return 0.0
    n = _POSITION_OVERSAMPLING * grid.count
    offsets = np.linspace(-grid.period / 2.0, grid.period / 2.0, n, endpoint=False)
    values = np.exp(1j * np.outer(center + offsets, grid.momenta)) @ profile
    density = np.abs(values) ** 2
    order = np.argsort(np.abs(offsets), kind="stable")
    distances = np.abs(offsets)[order]
    # Mass strictly outside radius distances[i]
    outside = density.sum() - np.cumsum(density[order])
    admissible = np.nonzero(outside <= leakage * density.sum())[0]
    return float(distances[admissible[0]]) if len(admissible) else grid.period / 2.0


def smearing_function(grid: ModeGrid, profile, center: float = 0.0, width: float = 1.0,
                      leakage: float = DEFAULT_LEAKAGE) -> TestFunction:
    """TestFunction from explicit grid amplitudes, localized around center."""
    profile = np.asarray(profile, dtype=complex)
    if profile.shape != (grid.count,):
        raise GridMismatchError(f"profile has {profile.shape} entries, grid has {grid.count} modes")
    if not np.all(np.isfinite(profile)):
        raise ValueError("momentum profile must be finite")
    radius = _support_radius(grid, profile, center, leakage)
    return TestFunction(grid, float(center), float(width), _frozen(profile),
                        (center - radius, center + radius), leakage)


def wave_packet(grid: ModeGrid, center: float, width: float, amplitude: complex = 1.0,
                leakage: float = DEFAULT_LEAKAGE) -> TestFunction:
    """
    Gaussian wave packet of position width `width` centred at `center`.

    Amplitudes carry the current weight sqrt(k), so commutators of packets
    with separated centers decay like a Gaussian in the separation.
    """
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")
    k = grid.momenta
    profile = amplitude * np.sqrt(k) * np.exp(-0.5 * (k * width) ** 2) * np.exp(-1j * k * center)
    return smearing_function(grid, profile, center, width, leakage)


def field_operator(space: FockSpace, f: TestFunction) -> ChiralOperator:
    """phi(f) = sum_k f(k) a_k + conj(f(k)) a*_k."""
    if f.grid != space.grid:
        raise GridMismatchError(f"test function lives on {f.grid}, space on {space.grid}")
    matrix = np.zeros((space.dim, space.dim), dtype=complex)
    for mode, amplitude in enumerate(f.momentum_profile):
        if amplitude == 0:
            continue
        annihilator, _ = _ladder_arrays(space, mode)
        matrix += amplitude * annihilator
    matrix = matrix + matrix.conj().T
    return ChiralOperator(space, matrix, f"phi(f@{f.center:+.2f})", f.nominal_support)


def weyl_operator(space: FockSpace, f: TestFunction) -> ChiralOperator:
    """Exponentiated field exp(i phi(f))."""
    phi = field_operator(space, f)
    return ChiralOperator(space, expm(1j * phi.matrix), f"W(f@{f.center:+.2f})", f.nominal_support)


def translate_chiral(A: ChiralOperator, s: float) -> ChiralOperator:
    """exp(iPs) A exp(-iPs); entry (m, n) picks up exp(i (p_m - p_n) s)."""
    if s == 0:
        return A
    phases = np.exp(1j * A.space.levels * A.space.grid.spacing * s)
    matrix = phases[:, None] * A.matrix * phases.conj()[None, :]
    support = None if A.support is None else (A.support[0] + s, A.support[1] + s)
    return ChiralOperator(A.space, matrix, A.label, support)


def _overlap(a, b):
    return a[0] < b[1] and b[0] < a[1]


def local_commutator_profile(space: FockSpace, f: TestFunction, g: TestFunction) -> float:
    """
    Operator norm of [phi(f), phi(g)].

    At finite truncation this is a leakage diagnostic: it is reported and
    never asserted to vanish.
    """
    if _overlap(f.nominal_support, g.nominal_support):
        warnings.warn(
            f"supports {f.nominal_support} and {g.nominal_support} overlap",
            SupportOverlapWarning,
            stacklevel=2,
        )
    phi_f = field_operator(space, f).matrix
    phi_g = field_operator(space, g).matrix
    return float(np.linalg.norm(phi_f @ phi_g - phi_g @ phi_f, 2))


def largest_increase(values) -> float:
    """Largest step up along a sequence, 0.0 for a non-increasing one."""
    return max([b - a for a, b in zip(values, values[1:])] + [0.0])


def trend_slack(values) -> float:
    """Rounding allowance for a trend comparison, relative to its largest value."""
    return TREND_SLACK * max(values, default=0.0) + 1e-14


def locality_trend(center_f: float, center_g: float, width: float, counts=(4, 8, 16),
                   bandwidth: float = 4.0, per_mode_cap: int = 1, energy_cap: float | None = None):
    """
    Commutator norm of two fixed packets as the mode count grows.

    The momentum window (0, bandwidth] is held fixed, so more modes mean a
    finer grid and a longer spatial period.

    Returns:
        dict: {"counts": list, "values": list, "largest_increase": float,
               "non_increasing": bool}
    """
    energy_cap = bandwidth if energy_cap is None else energy_cap
    values = []
    for count in counts:
        grid = ModeGrid(bandwidth / count, count)
        space = build_fock_space(grid, per_mode_cap, energy_cap)
        f = wave_packet(grid, center_f, width)
        g = wave_packet(grid, center_g, width)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SupportOverlapWarning)
            values.append(local_commutator_profile(space, f, g))
        logger.debug("locality trend N=%d dim=%d -> %.3e", count, space.dim, values[-1])
    increase = largest_increase(values)
    return {"counts": list(counts), "values": values, "largest_increase": increase,
            "non_increasing": increase <= trend_slack(values)}


def main():
    print("🔬 Truncated chiral Fock space")
    print("-" * 40)

    grid = ModeGrid(1.0, 3)
    space = build_fock_space(grid, per_mode_cap=2, energy_cap=4.0)
    print(f"Grid: {grid.count} modes, spacing {grid.spacing}")
    print(f"Dimension: {space.dim}")
    for state, level in zip(space.basis, space.levels):
        print(f"  {state}  P = {level * grid.spacing:g}")

    quarter = grid.period / 4.0
    f = wave_packet(grid, center=-quarter, width=0.4)
    g = wave_packet(grid, center=quarter, width=0.4)
    print(f"\nf at {f.center:+.3f}: {f.side_leakage(-1):.1%} of its mass on R+")
    print(f"g at {g.center:+.3f}: {g.side_leakage(+1):.1%} of its mass on R-")

    trend = locality_trend(-math.pi / 2.0, math.pi / 2.0, width=0.5)
    print("\nLocality leakage ||[phi(f), phi(g)]||:")
    for count, value in zip(trend["counts"], trend["values"]):
        print(f"  N = {count:>2}:  {value:.3e}")
    print(f"  Non-increasing: {'✅' if trend['non_increasing'] else '⚠️'}")


if __name__ == "__main__":
    main()
