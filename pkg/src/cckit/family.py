"""The twisted two-triangle seven-body family.

Bodies 1-3 form an equilateral triangle of circumradius ``l`` in the plane
``z = -d``; bodies 4-6 form the same triangle rotated by pi/3 in ``z = d``;
body 7 sits at the origin.  The six outer bodies are the vertices of a
regular octahedron exactly when ``l = sqrt(2) d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import Configuration, barycenter, distance_matrix

__all__ = [
    "ANTIPODAL_PAIRS",
    "OCTAHEDRON_EDGES",
    "TwistedPrismParams",
    "build",
    "octahedron_defect",
    "is_regular_octahedron",
    "probes",
    "random_params",
    "top_view",
]

SQRT3 = math.sqrt(3.0)

# 1-based body pairs.
OCTAHEDRON_EDGES = [(1, 3), (1, 2), (2, 3), (4, 5), (5, 6), (4, 6),
                    (3, 4), (3, 5), (1, 5), (1, 6), (2, 6), (2, 4)]
ANTIPODAL_PAIRS = [(1, 4), (2, 5), (3, 6)]


@dataclass(frozen=True)
class TwistedPrismParams:
    l: float
    d: float
    masses: tuple[float, ...] = (1.0,) * 6
    m7: float = 0.0

    def __post_init__(self) -> None:
        masses = tuple(float(m) for m in self.masses)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "l", float(self.l))
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "m7", float(self.m7))
        if len(masses) != 6:
            raise ValueError(f"need 6 triangle masses, got {len(masses)}")
        if not (math.isfinite(self.l) and self.l > 0 and math.isfinite(self.d) and self.d > 0):
            raise ValueError(f"l and d must be positive, got l={self.l}, d={self.d}")
        allm = masses + (self.m7,)
        if any(not math.isfinite(m) or m < 0 for m in allm):
            raise ValueError("masses must be finite and non-negative")
        if not any(m > 0 for m in allm):
            raise ValueError("at least one mass must be positive")

    @classmethod
    def equal(cls, l: float, d: float, m: float = 1.0, m7: float = 0.0) -> "TwistedPrismParams":
        return cls(l, d, (m,) * 6, m7)

    @property
    def ratio(self) -> float:
        return self.l / self.d

    @property
    def all_masses(self) -> tuple[float, ...]:
        return self.masses + (self.m7,)


def build(params: TwistedPrismParams) -> Configuration:
    l, d = params.l, params.d
    h = SQRT3 * l / 2
    positions = [
        (l, 0.0, -d),
        (-l / 2, h, -d),
        (-l / 2, -h, -d),
        (-l, 0.0, d),
        (l / 2, -h, d),
        (l / 2, h, d),
        (0.0, 0.0, 0.0),
    ]
    return Configuration(params.all_masses, positions)


def octahedron_defect(params: TwistedPrismParams) -> float:
    """``r_13 - r_34 = sqrt(3) l - sqrt(l^2 + 4 d^2)``; zero iff ``l = sqrt(2) d``."""
    return SQRT3 * params.l - math.hypot(params.l, 2.0 * params.d)


def is_regular_octahedron(config: Configuration, tol: float = 1e-9) -> bool:
    """Check the 12 edges, the 3 diagonals (sqrt(2) x edge) and the centered body 7."""
    if config.n != 7:
        return False
    dist = distance_matrix(config)
    edges = np.array([dist[a - 1, b - 1] for a, b in OCTAHEDRON_EDGES])
    diag = np.array([dist[a - 1, b - 1] for a, b in ANTIPODAL_PAIRS])
    edge = edges.mean()
    if np.max(np.abs(edges - edge)) > tol * edge:
        return False
    if np.max(np.abs(diag - math.sqrt(2.0) * edge)) > tol * edge:
        return False
    outer = Configuration(np.ones(6), config.positions[:6])
    return bool(np.linalg.norm(config.positions[6] - barycenter(outer)) <= tol * edge)


def random_params(
    rng: np.random.Generator,
    *,
    equal_masses: bool = False,
    octahedron: bool = False,
    length_range: tuple[float, float] = (0.5, 3.0),
    mass_range: tuple[float, float] = (0.1, 10.0),
) -> TwistedPrismParams:
    """Draw ``l, d`` and masses uniformly for probing the family."""
    l, d = rng.uniform(*length_range, size=2)
    if octahedron:
        l = math.sqrt(2.0) * d
    m = rng.uniform(*mass_range, size=7)
    if equal_masses:
        m[:6] = m[0]
    return TwistedPrismParams(l, d, tuple(m[:6]), m[6])


def probes(n: int, seed: int, **kwargs) -> list[Configuration]:
    rng = np.random.default_rng(seed)
    return [build(random_params(rng, **kwargs)) for _ in range(n)]


def top_view(config: Configuration, bodies: Sequence[int]) -> np.ndarray:
    """Projection of the listed (1-based) bodies onto the ``z = 0`` plane."""
    return config.positions[[b - 1 for b in bodies], :2]
