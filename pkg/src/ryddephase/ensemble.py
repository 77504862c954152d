"""Frozen-gas atom configurations and pair geometry extraction.

Positions are sampled i.i.d. uniform in a cube and are immutable afterwards;
all time dependence in the simulation lives in the internal dynamics, never
in the geometry.  The random stream is PCG64 (numpy's default bit generator),
seeded directly with the 64-bit ensemble seed, so configurations are
bit-reproducible across runs and platforms.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

DEFAULT_MIN_SEPARATION = 0.1  # um; guards 1/R^3 against float blowup, not a physics cutoff


@dataclass(frozen=True)
class EnsembleSpec:
    n_atoms: int
    box_side: float  # um
    seed: int
    min_separation: float = DEFAULT_MIN_SEPARATION

    def __post_init__(self):
        if self.n_atoms < 2:
            raise ValueError(f"need at least 2 atoms, got {self.n_atoms}")
        if not self.box_side > 0:
            raise ValueError(f"box_side must be positive, got {self.box_side}")
        if not self.min_separation > 0:
            raise ValueError(f"min_separation must be positive, got {self.min_separation}")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class EnsembleGeometry:
    """N sampled positions (um) in [0, L]^3 with pairwise distances >= min_separation."""

    positions: np.ndarray  # (N, 3)
    box_side: float
    min_separation: float

    @property
    def n_atoms(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class PairGeometry:
    """Separation and interatomic-axis orientation of one atom pair.

    polar_angle is measured from the quantization (z) axis; azimuth is the
    axis azimuth in the xy plane.
    """

    separation: float  # um
    polar_angle: float  # rad, in [0, pi]
    azimuth: float  # rad, in [0, 2 pi)


def sample_positions(spec: EnsembleSpec) -> EnsembleGeometry:
    """Sample N atoms uniform in the cube, rejecting closer than min_separation.

    Sequential rejection keeps the stream deterministic for a given seed.
    Raises RuntimeError when placement stalls (density too high for the
    requested minimum separation).
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n, eps = spec.n_atoms, spec.min_separation
    max_attempts = 1000 * n
    points = np.empty((n, 3))
    placed = 0
    attempts = 0
    while placed < n:
        if attempts >= max_attempts:
            raise RuntimeError(
                f"could not place {n} atoms with min separation {eps} um in a "
                f"{spec.box_side} um cube after {attempts} draws "
                f"({placed} placed); lower the density or min_separation"
            )
        candidate = rng.uniform(0.0, spec.box_side, size=3)
        attempts += 1
        if placed:
            d2 = np.sum((points[:placed] - candidate) ** 2, axis=1)
            if d2.min() < eps * eps:
                continue
        points[placed] = candidate
        placed += 1
    return EnsembleGeometry(points, spec.box_side, eps)


def pair_geometry(a, b) -> PairGeometry:
    """Geometry of the pair (a, b): R = |a - b|, orientation of a - b."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    r = float(np.linalg.norm(d))
    if r < 1e-12:
        raise ValueError("coincident points have no pair geometry")
    theta = math.acos(max(-1.0, min(1.0, d[2] / r)))
    phi = math.atan2(d[1], d[0]) % (2.0 * math.pi)
    return PairGeometry(r, theta, phi)


def pair_separations(geometry: EnsembleGeometry) -> np.ndarray:
    """Condensed pairwise distances in canonical (mu < nu, row-major) order."""
    return pdist(geometry.positions)


def pair_index_arrays(n_atoms: int) -> tuple[np.ndarray, np.ndarray]:
    """(mu, nu) index arrays matching the condensed distance ordering."""
    mu, nu = np.triu_indices(n_atoms, k=1)
    return mu, nu


def all_pair_geometries(geometry: EnsembleGeometry) -> list[PairGeometry]:
    """PairGeometry for every mu < nu pair, in condensed order."""
    mu, nu = pair_index_arrays(geometry.n_atoms)
    pos = geometry.positions
    return [pair_geometry(pos[i], pos[k]) for i, k in zip(mu, nu)]


def save_positions_csv(path, geometry: EnsembleGeometry) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["atom_index", "x_um", "y_um", "z_um"])
        for i, (x, y, z) in enumerate(geometry.positions):
            writer.writerow([i, repr(float(x)), repr(float(y)), repr(float(z))])


def load_positions_csv(path, box_side: float, min_separation: float = DEFAULT_MIN_SEPARATION) -> EnsembleGeometry:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            rows.append((int(row["atom_index"]), float(row["x_um"]), float(row["y_um"]), float(row["z_um"])))
    rows.sort()
    positions = np.array([[x, y, z] for _, x, y, z in rows])
    return EnsembleGeometry(positions, box_side, min_separation)
