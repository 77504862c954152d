"""Second-order correlation of the retrieved collective mode from pair amplitudes.

The preparation stage leaves a coherent superposition of collective
excitations with Poissonian weights of unit mean, truncated beyond two
excitations: c_alpha = 1/sqrt(e alpha!) for alpha <= 2.  The normalized
correlation of the phase-matched mode then reduces to a functional of the
per-pair survival amplitudes A_munu:

    f = | (1/N^2) sum_mu sum_{nu != mu} A_munu |^2
    h = (1/N^3) sum_mu | sum_{nu != mu} A_munu |^2
    g2 = 4 g2(0) f / (1 + h)^2,     g2(0) = e/4

in the large-N limit (N-1)/N ~ 1.  A brute-force oracle evaluates the same
correlator exactly on the explicit truncated state vector for small N.

Summation order for f and h is fixed (ascending mu, then nu) and performed
with exact compensated summation (math.fsum), so traces are bit-reproducible
for a given seed regardless of how work was parallelized.
"""

import math
from dataclasses import dataclass

import numpy as np

from .ensemble import (
    EnsembleGeometry,
    EnsembleSpec,
    pair_index_arrays,
    pair_separations,
    sample_positions,
)
from .pairdyn import (
    NumericsError,
    analytic_pair_amplitudes,
    numeric_pair_amplitudes,
)
from .atomdata import POPULATED_M

G2_ZERO = math.e / 4.0
G2_ASYMPTOTE = G2_ZERO * 16.0 / 25.0

TRUNCATED_AMPLITUDES = (1.0 / math.sqrt(math.e), 1.0 / math.sqrt(math.e), 1.0 / math.sqrt(2.0 * math.e))


@dataclass(frozen=True)
class InitialStateSpec:
    """Truncated coherent preparation: unit mean, cut beyond two excitations."""

    mean_excitations: float = 1.0
    truncation: int = 2

    @property
    def amplitudes(self) -> tuple[float, float, float]:
        return TRUNCATED_AMPLITUDES


def g2_zero() -> float:
    """g2 of the truncated coherent preparation before any dephasing, e/4."""
    return G2_ZERO


def g2_asymptote() -> float:
    """Fully dephased limit (e/4) * 16/25, reached when pair phases randomize."""
    return G2_ASYMPTOTE


@dataclass(frozen=True, eq=False)
class AmplitudeSet:
    """Symmetric matrix of per-pair survival amplitudes A_munu, diagonal unused."""

    n_atoms: int
    values: np.ndarray  # (N, N) complex

    def __post_init__(self):
        v = self.values
        if v.shape != (self.n_atoms, self.n_atoms):
            raise ValueError(f"amplitude matrix shape {v.shape} != ({self.n_atoms}, {self.n_atoms})")
        off = ~np.eye(self.n_atoms, dtype=bool)
        if np.any(~np.isfinite(v[off])):
            raise ValueError("missing pair amplitude (non-finite off-diagonal entry)")
        if np.max(np.abs(v - v.T)) > 1e-12:
            raise ValueError("amplitude matrix must satisfy A_munu = A_numu")

    @classmethod
    def from_condensed(cls, n_atoms: int, condensed) -> "AmplitudeSet":
        """Build from amplitudes in condensed (mu < nu, row-major) pair order."""
        condensed = np.asarray(condensed)
        mu, nu = pair_index_arrays(n_atoms)
        if condensed.shape != mu.shape:
            raise ValueError(f"expected {len(mu)} pair amplitudes, got {condensed.shape}")
        values = np.zeros((n_atoms, n_atoms), dtype=complex)
        values[mu, nu] = condensed
        values[nu, mu] = condensed
        return cls(n_atoms, values)

    @classmethod
    def from_pair_amplitudes(cls, n_atoms: int, items) -> "AmplitudeSet":
        """Build from PairAmplitude records covering every mu < nu pair once."""
        values = np.full((n_atoms, n_atoms), np.nan, dtype=complex)
        np.fill_diagonal(values, 0.0)
        for item in items:
            mu, nu = item.pair
            values[mu, nu] = item.value
            values[nu, mu] = item.value
        return cls(n_atoms, values)


@dataclass(frozen=True)
class G2Point:
    time: float  # us
    g2: float
    f: float
    h: float


def _assemble_f_h(values: np.ndarray, n: int) -> tuple[float, float]:
    """f and h sums in fixed (ascending mu, then nu) compensated order.

    math.fsum is exactly rounded, so including the zeroed diagonal entries
    changes nothing while keeping the row reductions branch-free.
    """
    nodiag = values.copy()
    np.fill_diagonal(nodiag, 0.0)
    re_rows = nodiag.real
    im_rows = nodiag.imag
    row_re = [math.fsum(re_rows[mu].tolist()) for mu in range(n)]
    row_im = [math.fsum(im_rows[mu].tolist()) for mu in range(n)]
    total_re = math.fsum(row_re)
    total_im = math.fsum(row_im)
    f = (total_re * total_re + total_im * total_im) / float(n) ** 4
    h = math.fsum(re * re + im * im for re, im in zip(row_re, row_im)) / float(n) ** 3
    return f, h


def g2_from_amplitudes(amps: AmplitudeSet, n_atoms: int | None = None, time: float = 0.0) -> G2Point:
    """Assemble one correlation point from a full amplitude set."""
    if n_atoms is not None and n_atoms != amps.n_atoms:
        raise ValueError(f"n_atoms {n_atoms} disagrees with amplitude set ({amps.n_atoms})")
    n = amps.n_atoms
    f, h = _assemble_f_h(amps.values, n)
    g2 = 4.0 * G2_ZERO * f / (1.0 + h) ** 2
    return G2Point(time, g2, f, h)


@dataclass(frozen=True, eq=False)
class G2Trace:
    """Per-realization and summary correlation statistics on a time grid."""

    grid: np.ndarray  # (T,)
    g2: np.ndarray  # (R, T)
    f: np.ndarray  # (R, T)
    h: np.ndarray  # (R, T)
    seeds: tuple[int, ...]

    @property
    def realizations(self) -> int:
        return self.g2.shape[0]

    def _mean(self, a: np.ndarray) -> np.ndarray:
        return a.mean(axis=0)

    def _stderr(self, a: np.ndarray) -> np.ndarray:
        r = a.shape[0]
        if r < 2:
            return np.zeros(a.shape[1])
        return a.std(axis=0, ddof=1) / math.sqrt(r)

    @property
    def g2_mean(self) -> np.ndarray:
        return self._mean(self.g2)

    @property
    def g2_stderr(self) -> np.ndarray:
        return self._stderr(self.g2)

    @property
    def f_mean(self) -> np.ndarray:
        return self._mean(self.f)

    @property
    def h_mean(self) -> np.ndarray:
        return self._mean(self.h)


def realization_seed(base_seed: int, index: int) -> int:
    """Derived 64-bit seed of one realization, stable across platforms."""
    ss = np.random.SeedSequence([int(base_seed), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def _pair_orientation_arrays(geometry: EnsembleGeometry):
    mu, nu = pair_index_arrays(geometry.n_atoms)
    d = geometry.positions[mu] - geometry.positions[nu]
    r = np.linalg.norm(d, axis=1)
    theta = np.arccos(np.clip(d[:, 2] / r, -1.0, 1.0))
    phi = np.mod(np.arctan2(d[:, 1], d[:, 0]), 2.0 * math.pi)
    return r, theta, phi


def _amplitude_stack(
    geometry: EnsembleGeometry,
    cycles,
    grid: np.ndarray,
    mode: str,
    sweep_delta_t: bool,
    initial_m: float,
) -> np.ndarray:
    """Condensed pair amplitudes, shape (npairs, T).

    With sweep_delta_t each grid value replaces every cycle's free interval
    (single-cycle trace semantics); otherwise grid must equal each cycle's
    own delta_t sequence handled by the caller.
    """
    if mode == "analytic":
        r = pair_separations(geometry)
        out = np.empty((len(r), len(grid)), dtype=complex)
        for it, t in enumerate(grid):
            products = [c.channel.c3 * (t if sweep_delta_t else c.delta_t) for c in cycles]
            out[:, it] = analytic_pair_amplitudes(r, products)
        return out
    if mode == "multichannel":
        r, theta, phi = _pair_orientation_arrays(geometry)
        out = np.ones((len(r), len(grid)), dtype=complex)
        for q, c in enumerate(cycles):
            times = grid if sweep_delta_t else np.full(len(grid), c.delta_t)
            try:
                out *= numeric_pair_amplitudes(r, theta, phi, c, times, initial_m)
            except NumericsError as exc:
                raise NumericsError(f"cycle {q}: {exc}") from exc
        return out
    raise ValueError(f"unknown mode {mode!r}")


def _trace_single_realization(args) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ensemble, cycles, grid, mode, sweep, initial_m, index = args
    seed = realization_seed(ensemble.seed, index)
    spec_r = EnsembleSpec(ensemble.n_atoms, ensemble.box_side, seed, ensemble.min_separation)
    geometry = sample_positions(spec_r)
    try:
        amps = _amplitude_stack(geometry, cycles, grid, mode, sweep, initial_m)
    except NumericsError as exc:
        raise NumericsError(f"realization {index} (seed {seed}): {exc}") from exc
    n = ensemble.n_atoms
    g2s, fs, hs = np.empty(len(grid)), np.empty(len(grid)), np.empty(len(grid))
    for it in range(len(grid)):
        point = g2_from_amplitudes(AmplitudeSet.from_condensed(n, amps[:, it]), time=float(grid[it]))
        g2s[it], fs[it], hs[it] = point.g2, point.f, point.h
    return g2s, fs, hs


def g2_trace(
    ensemble: EnsembleSpec,
    schedule,
    grid,
    mode: str = "analytic",
    realizations: int = 100,
    initial_m: float = POPULATED_M,
    pool=None,
) -> G2Trace:
    """Correlation trace versus the free-interval length of the schedule.

    Each grid time is applied as the free interval of every cycle in the
    schedule (for a single-cycle schedule this sweeps the interval directly).
    Each realization resamples atom positions from a seed derived from the
    ensemble seed and the realization index; the schedule stays fixed.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("time grid must be nonempty")
    if np.any(np.diff(grid) <= 0) and grid.size > 1:
        raise ValueError("time grid must be strictly increasing")
    if realizations < 1:
        raise ValueError("realizations must be >= 1")
    cycles = tuple(schedule.cycles)
    tasks = [
        (ensemble, cycles, grid, mode, True, initial_m, r) for r in range(realizations)
    ]
    if pool is None:
        results = [_trace_single_realization(t) for t in tasks]
    else:
        results = list(pool.map(_trace_single_realization, tasks))
    g2s = np.stack([r[0] for r in results])
    fs = np.stack([r[1] for r in results])
    hs = np.stack([r[2] for r in results])
    seeds = tuple(realization_seed(ensemble.seed, r) for r in range(realizations))
    return G2Trace(grid, g2s, fs, hs, seeds)


def _cycles_single_realization(args) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ensemble, cycles, mode, initial_m, index = args
    seed = realization_seed(ensemble.seed, index)
    spec_r = EnsembleSpec(ensemble.n_atoms, ensemble.box_side, seed, ensemble.min_separation)
    geometry = sample_positions(spec_r)
    n = ensemble.n_atoms
    nq = len(cycles)
    try:
        stacks = []
        for c in cycles:
            stacks.append(
                _amplitude_stack(geometry, [c], np.array([c.delta_t]), mode, True, initial_m)[:, 0]
            )
        per_cycle = np.stack(stacks, axis=1)  # (npairs, nq)
    except NumericsError as exc:
        raise NumericsError(f"realization {index} (seed {seed}): {exc}") from exc
    products = np.cumprod(per_cycle, axis=1)
    g2s, fs, hs = np.empty(nq), np.empty(nq), np.empty(nq)
    for q in range(nq):
        point = g2_from_amplitudes(AmplitudeSet.from_condensed(n, products[:, q]))
        g2s[q], fs[q], hs[q] = point.g2, point.f, point.h
    return g2s, fs, hs


def g2_after_cycles(
    ensemble: EnsembleSpec,
    schedule,
    mode: str = "analytic",
    realizations: int = 100,
    initial_m: float = POPULATED_M,
    pool=None,
) -> G2Trace:
    """Correlation after each successive cycle of a fixed schedule.

    The trace grid is the cumulative wall-clock time (free intervals plus the
    2pi of pulse area per cycle).
    """
    if realizations < 1:
        raise ValueError("realizations must be >= 1")
    cycles = tuple(schedule.cycles)
    grid = np.cumsum([c.duration for c in cycles])
    tasks = [(ensemble, cycles, mode, initial_m, r) for r in range(realizations)]
    if pool is None:
        results = [_cycles_single_realization(t) for t in tasks]
    else:
        results = list(pool.map(_cycles_single_realization, tasks))
    g2s = np.stack([r[0] for r in results])
    fs = np.stack([r[1] for r in results])
    hs = np.stack([r[2] for r in results])
    seeds = tuple(realization_seed(ensemble.seed, r) for r in range(realizations))
    return G2Trace(grid, g2s, fs, hs, seeds)


DEFAULT_RETRIEVAL_K = np.array([0.0, 0.0, 7.902])  # rad/um, a typical optical k


def brute_force_g2(geometry: EnsembleGeometry, amps: AmplitudeSet, k0=None) -> float:
    """Exact correlator on the explicit truncated state, for N <= 10.

    Builds the state vector over {vacuum, single excitations, excited pairs}
    with collective-mode phase factors, applies the collective lowering
    operator as a sparse map, and evaluates <S+ S+ S S> / <S+ S>^2 directly.
    No large-N approximation is made, so this is the oracle against which the
    pair-sum formula is checked.
    """
    n = geometry.n_atoms
    if n > 10:
        raise ValueError(f"brute-force correlator limited to N <= 10, got {n}")
    if amps.n_atoms != n:
        raise ValueError("amplitude set does not match geometry")
    k0 = DEFAULT_RETRIEVAL_K if k0 is None else np.asarray(k0, dtype=float)
    c0, c1, c2 = TRUNCATED_AMPLITUDES

    phase = np.exp(1j * geometry.positions @ k0)  # e^{i k0 . r_mu}
    mu, nu = pair_index_arrays(n)
    npairs = len(mu)

    # state vector: [vacuum, singles (N), pairs (npairs)]
    psi_vac = c0
    psi_single = c1 * phase / math.sqrt(n)
    pair_amp = amps.values[mu, nu]
    psi_pair = c2 * phase[mu] * phase[nu] * pair_amp / math.sqrt(npairs)

    # S maps pairs -> singles and singles -> vacuum, with e^{-i k0 . r} factors
    s_single = np.zeros(n, dtype=complex)  # singles component of S|psi>
    np.add.at(s_single, nu, psi_pair * np.conj(phase[mu]))
    np.add.at(s_single, mu, psi_pair * np.conj(phase[nu]))
    s_single /= math.sqrt(n)
    s_vac = np.sum(psi_single * np.conj(phase)) / math.sqrt(n)

    norm_s = abs(s_vac) ** 2 + float(np.sum(np.abs(s_single) ** 2))

    ss_vac = np.sum(s_single * np.conj(phase)) / math.sqrt(n)
    norm_ss = abs(ss_vac) ** 2

    if norm_s == 0.0:
        return 0.0
    return norm_ss / norm_s**2
