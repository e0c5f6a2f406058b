"""Direct central-configuration test from Newton's equations.

Works with the accelerations themselves and never touches the Dziobek
residuals, so the two can be used to check each other.

Sign convention: the gravitational potential ``U = sum m_i m_j / r_ij`` is
homogeneous of degree -1, so Euler's identity gives
``sum_i m_i a_i . r_i = -U < 0``.  A central configuration therefore
satisfies ``a_i + lam * r_i = 0`` with ``lam = U / (2 I) > 0``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import Configuration, DegenerateConfigurationError, barycenter, distance_matrix

__all__ = [
    "CCDiagnostics",
    "accelerations",
    "cc_residual",
    "moment_of_inertia",
    "potential",
]


def potential(config: Configuration) -> float:
    """Sum over pairs of ``m_i m_j / r_ij``."""
    if config.n < 2:
        raise ValueError("potential needs at least two bodies")
    dist = distance_matrix(config)
    iu = np.triu_indices(config.n, k=1)
    m = config.masses
    return float(np.sum(m[iu[0]] * m[iu[1]] / dist[iu]))


def moment_of_inertia(config: Configuration) -> float:
    """``0.5 * sum m_i |r_i|^2`` about the origin (recenter first for the barycentric value)."""
    return 0.5 * float(np.sum(config.masses * np.sum(config.positions**2, axis=1)))


def pairwise_accelerations(masses: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Accelerations for raw arrays; shared by the integrator."""
    diff = positions[None, :, :] - positions[:, None, :]  # diff[i, j] = r_j - r_i
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, 1.0)
    inv3 = d2**-1.5
    np.fill_diagonal(inv3, 0.0)
    return np.einsum("ij,ijk->ik", inv3 * masses[None, :], diff)


def accelerations(config: Configuration) -> np.ndarray:
    """``(N, 3)`` array with ``a_i = sum_{j != i} m_j (r_j - r_i) / r_ij^3``."""
    return pairwise_accelerations(config.masses, config.positions)


@dataclass(frozen=True)
class CCDiagnostics:
    lam: float
    U: float
    I: float
    per_body_residual: tuple[float, ...]

    @property
    def max_residual(self) -> float:
        return max(self.per_body_residual)

    def as_dict(self) -> dict:
        out = {"lambda": self.lam, "U": self.U, "I": self.I, "max_residual": self.max_residual}
        for n, r in enumerate(self.per_body_residual, start=1):
            out[f"res_{n}"] = r
        return out


def cc_residual(config: Configuration) -> CCDiagnostics:
    """Compare each acceleration with ``-lam * r_i``.

    The per-body residual is ``|a_i + lam r_i| / (lam L)`` with ``L`` the
    largest barycentric distance, so it is dimensionless and scale-free.
    Off-center input is recentered (with a warning above round-off).
    """
    shift = barycenter(config)
    extent = float(np.max(np.linalg.norm(config.positions, axis=1)))
    if np.linalg.norm(shift) > 1e-12 * max(extent, 1e-300):
        warnings.warn(
            f"configuration recentered by {np.linalg.norm(shift):.3g}", RuntimeWarning, stacklevel=2
        )
    c = Configuration(config.masses, config.positions - shift)
    U = potential(c)
    I = moment_of_inertia(c)
    if I <= 0:
        raise DegenerateConfigurationError("moment of inertia is zero")
    lam = U / (2.0 * I)
    L = float(np.max(np.linalg.norm(c.positions, axis=1)))
    res = np.linalg.norm(accelerations(c) + lam * c.positions, axis=1) / (lam * L)
    return CCDiagnostics(lam, U, I, tuple(float(x) for x in res))
