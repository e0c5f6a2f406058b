"""Point-mass configurations and the geometric primitives built on them.

Bodies are addressed with 1-based indices everywhere in the public API so
that labels such as ``f_167`` or ``r_13`` can be read off directly.
Internally positions live in an ``(N, 3)`` float64 array.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "COLLISION_RATIO",
    "Body",
    "Configuration",
    "DegenerateConfigurationError",
    "barycenter",
    "distance_matrix",
    "inverse_cube",
    "mutual_distance",
    "oriented_volume",
    "recenter",
]

# Pairs closer than this fraction of the largest separation count as a collision.
COLLISION_RATIO = 1e-9


class DegenerateConfigurationError(ValueError):
    """Raised for collisions, zero total mass and similar unusable input."""


class Body(NamedTuple):
    mass: float
    position: tuple[float, float, float]


@dataclass(frozen=True, eq=False)
class Configuration:
    """N point masses with positions in 3-space.

    The arrays are copied on construction and marked read-only.
    """

    masses: np.ndarray
    positions: np.ndarray

    def __post_init__(self) -> None:
        masses = np.array(self.masses, dtype=float).reshape(-1)
        positions = np.array(self.positions, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != 3:
            raise ValueError(f"positions must have shape (N, 3), got {positions.shape}")
        if positions.shape[0] != masses.shape[0]:
            raise ValueError(
                f"{masses.shape[0]} masses but {positions.shape[0]} positions"
            )
        if masses.shape[0] == 0:
            raise ValueError("configuration needs at least one body")
        if not np.all(np.isfinite(masses)) or not np.all(np.isfinite(positions)):
            raise ValueError("masses and positions must be finite")
        if np.any(masses < 0):
            raise ValueError("masses must be non-negative")
        n = masses.shape[0]
        if n >= 2:
            dist = _pairwise(positions)
            iu = np.triu_indices(n, k=1)
            pair = dist[iu]
            largest = pair.max()
            if largest == 0.0 or pair.min() < COLLISION_RATIO * largest:
                a, b = iu[0][pair.argmin()], iu[1][pair.argmin()]
                raise DegenerateConfigurationError(
                    f"bodies {a + 1} and {b + 1} collide (r = {pair.min():.3g})"
                )
        masses.setflags(write=False)
        positions.setflags(write=False)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "positions", positions)

    @classmethod
    def from_bodies(cls, bodies: Iterable[Body | tuple]) -> "Configuration":
        bodies = [Body(float(m), tuple(p)) for m, p in bodies]
        return cls([b.mass for b in bodies], [b.position for b in bodies])

    @property
    def n(self) -> int:
        return int(self.masses.shape[0])

    @property
    def bodies(self) -> list[Body]:
        return [Body(float(m), tuple(float(x) for x in p))
                for m, p in zip(self.masses, self.positions)]

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def with_masses(self, masses: Sequence[float]) -> "Configuration":
        return Configuration(masses, self.positions)

    def with_positions(self, positions: np.ndarray) -> "Configuration":
        return Configuration(self.masses, positions)

    def scaled(self, s: float) -> "Configuration":
        return Configuration(self.masses, s * self.positions)

    def translated(self, offset: Sequence[float]) -> "Configuration":
        return Configuration(self.masses, self.positions + np.asarray(offset, float))

    def rotated(self, rotation: np.ndarray) -> "Configuration":
        return Configuration(self.masses, self.positions @ np.asarray(rotation).T)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"Configuration(n={self.n}, total_mass={self.total_mass:g})"


def _pairwise(positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _check_index(config: Configuration, *idx: int) -> list[int]:
    out = []
    for i in idx:
        if isinstance(i, bool) or int(i) != i:
            raise TypeError(f"body index must be an integer, got {i!r}")
        i = int(i)
        if not 1 <= i <= config.n:
            raise IndexError(f"body index {i} out of range 1..{config.n}")
        out.append(i - 1)
    if len(set(out)) != len(out):
        raise ValueError(f"body indices must be distinct, got {tuple(idx)}")
    return out


def distance_matrix(config: Configuration) -> np.ndarray:
    """Symmetric ``(N, N)`` matrix of mutual distances (0-based, zero diagonal)."""
    return _pairwise(config.positions)


def mutual_distance(config: Configuration, i: int, j: int) -> float:
    a, b = _check_index(config, i, j)
    return float(np.linalg.norm(config.positions[a] - config.positions[b]))


def inverse_cube(r: float) -> float:
    if not r > 0:
        raise DegenerateConfigurationError(f"inverse cube needs r > 0, got {r}")
    return r ** -3.0


def oriented_volume(config: Configuration, i: int, j: int, h: int, k: int) -> float:
    """Triple product ``(r_i - r_j) x (r_j - r_h) . (r_h - r_k)``.

    Six times the signed volume of the tetrahedron on the four bodies.
    """
    a, b, c, e = _check_index(config, i, j, h, k)
    r = config.positions
    return float(np.dot(np.cross(r[a] - r[b], r[b] - r[c]), r[c] - r[e]))


def barycenter(config: Configuration) -> np.ndarray:
    total = config.total_mass
    if total <= 0:
        raise DegenerateConfigurationError("total mass is zero")
    return config.masses @ config.positions / total


def recenter(config: Configuration) -> Configuration:
    """Return the configuration translated so its barycenter is the origin."""
    return Configuration(config.masses, config.positions - barycenter(config))
