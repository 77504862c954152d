"""Dressing-cycle schedules, the exponential reference, and the two-mode
entanglement figure of merit.

A schedule strings together full 2pi cycles.  Repeating cycles is only
meaningful when every cycle couples the target s-level to a fresh, still
unpopulated p-level: reusing a p-level carries coherence from one cycle into
the next and the per-cycle amplitudes no longer multiply independently.
make_schedule enforces that rule.
"""

import math
from dataclasses import dataclass

import numpy as np

from .atomdata import POPULATED_M, Level, RydbergChannel
from .correlation import realization_seed
from .ensemble import EnsembleGeometry, EnsembleSpec, pair_separations, sample_positions
from .pairdyn import (
    CycleSpec,
    _level_index,
    propagate,
    single_atom_dressing,
    single_atom_levels,
)


@dataclass(frozen=True)
class CycleSchedule:
    """Validated ordered cycles sharing one s-level, pairwise-distinct p-levels."""

    cycles: tuple[CycleSpec, ...]
    total_time: float  # us, sum of delta_t + 2pi/Omega over cycles

    def __len__(self) -> int:
        return len(self.cycles)


def make_schedule(specs) -> CycleSchedule:
    """Validate cycle specs into a schedule.

    Rejects an empty list, mismatched s-levels, and any repeated dressing
    (n', j) p-level, naming the offending cycle indices.
    """
    specs = tuple(specs)
    if not specs:
        raise ValueError("schedule needs at least one cycle")
    s0 = specs[0].channel.s_level
    seen: dict[tuple[int, float], int] = {}
    for i, spec in enumerate(specs):
        s = spec.channel.s_level
        if (s.n, s.j) != (s0.n, s0.j):
            raise ValueError(
                f"cycle {i} uses s-level {s.n}s, schedule started with {s0.n}s; "
                "all cycles must share the target level"
            )
        key = spec.channel.p_key
        if key in seen:
            raise ValueError(
                f"cycles {seen[key]} and {i} reuse the dressing p-level "
                f"(n'={key[0]}, j={key[1]}); every cycle must couple to a fresh "
                "unpopulated p-level"
            )
        seen[key] = i
    total = math.fsum(c.duration for c in specs)
    return CycleSchedule(specs, total)


def decay_reference(tau: float, t) -> float:
    """Exponential reference e^{-t/tau} plotted against the cycle trace."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    return np.exp(-np.asarray(t, dtype=float) / tau) if np.ndim(t) else math.exp(-t / tau)


def single_excitation_survival(schedule: CycleSchedule, initial_m: float = POPULATED_M) -> complex:
    """Amplitude for a lone excited atom to return to |s m0> through the schedule.

    Each cycle is a full single-particle 2pi rotation, so the magnitude is 1
    up to the fixed frame phase; this propagates the single-atom dynamics
    numerically rather than asserting it.
    """
    amp = 1.0 + 0.0j
    for cyc in schedule.cycles:
        spec = cyc.microwave
        h1 = single_atom_dressing(cyc.channel, spec).astype(complex)
        t_half = 0.5 * math.pi / spec.rabi
        dim = h1.shape[0]
        zero = np.zeros((dim, dim), dtype=complex)
        u = propagate([(h1, t_half), (zero, cyc.delta_t), (h1, 3.0 * t_half)])
        levels = single_atom_levels(cyc.channel)
        i_s = _level_index(levels, "s", initial_m)
        amp *= complex(u[i_s, i_s])
    return amp


# ---------------------------------------------------------------------------
# two-spin-wave entanglement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntangleSpec:
    """Two collective modes in adjacent s-levels dressed through disjoint p-levels.

    channel_a couples the (n+1)s level to n p_{1/2} with strength c3_prime;
    channel_b couples the n s level to n p_{3/2} with strength c3_second.
    """

    level_a: Level  # (n+1)s
    level_b: Level  # n s
    channel_a: RydbergChannel
    channel_b: RydbergChannel
    delta_t: float  # us

    def __post_init__(self):
        if self.level_a.l != "s" or self.level_b.l != "s":
            raise ValueError("entanglement levels must be s levels")
        if self.level_a.n != self.level_b.n + 1:
            raise ValueError("level_a must sit one principal quantum number above level_b")
        if self.channel_a.p_key == self.channel_b.p_key:
            raise ValueError("the two dressing channels must use distinct p-levels")
        if self.delta_t < 0:
            raise ValueError("delta_t must be >= 0")


def make_entangle_spec(n: int, c3_prime: float, c3_second: float, delta_t: float) -> EntangleSpec:
    """Standard construction: (n+1)s - np_{1/2} and ns - np_{3/2} channels."""
    level_a = Level(n + 1, "s", 0.5)
    level_b = Level(n, "s", 0.5)
    channel_a = RydbergChannel(level_a, Level(n, "p", 0.5), c3_prime)
    channel_b = RydbergChannel(level_b, Level(n, "p", 1.5), c3_second)
    return EntangleSpec(level_a, level_b, channel_a, channel_b, delta_t)


def entangle_amplitudes(geometry: EnsembleGeometry, spec: EntangleSpec):
    """Per-pair phases (phi_prime, phi) accumulated during the interval.

    Condensed (mu < nu) order; phi' = C3' dT / R^3 and phi = C3'' dT / R^3.
    """
    r3 = pair_separations(geometry) ** 3
    phi_prime = spec.channel_a.c3 * spec.delta_t / r3
    phi = spec.channel_b.c3 * spec.delta_t / r3
    return phi_prime, phi


def entangle_fidelity(phi_prime, phi) -> float:
    """Projection fidelity onto the phase-matched two-mode target state.

    With pair coherences m1 = <e^{i phi'}> and m2 = <e^{i phi}> over pairs,
    the cross terms carry weight |m1|^2 + |m2|^2 relative to the two target
    components, giving F = 2 / (2 + |m1|^2 + |m2|^2): 1/2 with no dephasing,
    approaching 1 when both coherences average to zero.
    """
    phi_prime = np.asarray(phi_prime, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if phi_prime.size == 0 or phi.size == 0:
        raise ValueError("entangle_fidelity needs a nonempty pair set")
    if phi_prime.shape != phi.shape:
        raise ValueError("phase sequences must cover the same pair set")
    m1 = _mean_coherence(phi_prime)
    m2 = _mean_coherence(phi)
    return 2.0 / (2.0 + abs(m1) ** 2 + abs(m2) ** 2)


def _mean_coherence(phases: np.ndarray) -> complex:
    n = phases.size
    re = math.fsum(math.cos(p) for p in phases.ravel())
    im = math.fsum(math.sin(p) for p in phases.ravel())
    return complex(re / n, im / n)


def entangle_trace(ensemble_spec, n: int, c3_prime: float, c3_second: float, grid, realizations: int = 100):
    """Fidelity and coherence magnitudes versus interval length.

    Returns (grid, F, |m1|, |m2|) averaged over position realizations.
    """
    grid = np.asarray(grid, dtype=float)
    fs = np.zeros((realizations, len(grid)))
    m1s = np.zeros((realizations, len(grid)))
    m2s = np.zeros((realizations, len(grid)))
    for r in range(realizations):
        seed = realization_seed(ensemble_spec.seed, r)
        spec_r = EnsembleSpec(
            ensemble_spec.n_atoms, ensemble_spec.box_side, seed, ensemble_spec.min_separation
        )
        geometry = sample_positions(spec_r)
        r3 = pair_separations(geometry) ** 3
        for it, t in enumerate(grid):
            phi_prime = c3_prime * t / r3
            phi = c3_second * t / r3
            m1 = _mean_coherence(phi_prime)
            m2 = _mean_coherence(phi)
            fs[r, it] = 2.0 / (2.0 + abs(m1) ** 2 + abs(m2) ** 2)
            m1s[r, it] = abs(m1)
            m2s[r, it] = abs(m2)
    return grid, fs.mean(axis=0), m1s.mean(axis=0), m2s.mean(axis=0)
