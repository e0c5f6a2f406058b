"""Homothetic collapse of a central configuration released from rest.

A central configuration released with zero velocities shrinks without
changing shape: ``r_i(t) = phi(t) r_i(0)`` with

    phi'' = -lam / phi**2,   phi(0) = 1,   phi'(0) = 0,

which reaches ``phi = 0`` at ``t_c = pi / (2 sqrt(2 lam))``.  The full
N-body system and this scalar equation are integrated with the same
fixed-step RK4 scheme so the two trajectories can be compared directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .central import cc_residual, pairwise_accelerations
from .geometry import COLLISION_RATIO, Configuration, recenter

__all__ = [
    "TrajectoryStats",
    "collapse_time",
    "integrate_from_rest",
    "integrate_scale_ode",
    "rk4_step",
    "shape_deviation",
]

DEFAULT_DT = 5e-4
CC_TOL = 1e-10


def rk4_step(deriv: Callable[[np.ndarray], np.ndarray], y: np.ndarray, dt: float) -> np.ndarray:
    k1 = deriv(y)
    k2 = deriv(y + 0.5 * dt * k1)
    k3 = deriv(y + 0.5 * dt * k2)
    k4 = deriv(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def collapse_time(lam: float) -> float:
    return math.pi / (2.0 * math.sqrt(2.0 * lam))


def _steps(t_end: float, dt: float) -> tuple[int, float]:
    # Adjust dt slightly so that an integer number of steps lands on t_end.
    n = max(1, int(math.ceil(t_end / dt - 1e-9)))
    return n, t_end / n


def integrate_scale_ode(lam: float, t_end: float, dt: float = DEFAULT_DT) -> tuple[np.ndarray, np.ndarray]:
    """RK4 solution of ``phi'' = -lam / phi^2`` from rest at ``phi = 1``."""
    n, h = _steps(t_end, dt)

    def deriv(y):
        return np.array([y[1], -lam / y[0] ** 2])

    y = np.array([1.0, 0.0])
    phi = np.empty(n + 1)
    phi[0] = 1.0
    for s in range(n):
        y = rk4_step(deriv, y, h)
        phi[s + 1] = y[0]
    return h * np.arange(n + 1), phi


def _pair_ratios(positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return dist / dist[0, 1]


def shape_deviation(reference: Configuration, current: np.ndarray) -> float:
    """``max |(r_ij / r_12)(t) / (r_ij / r_12)(0) - 1|`` over all pairs."""
    current = np.asarray(current, dtype=float)
    if current.shape != reference.positions.shape:
        raise ValueError("current positions must match the reference body count")
    if reference.n < 2:
        raise ValueError("need at least two bodies")
    Configuration(reference.masses, current)  # collision check
    ref = _pair_ratios(reference.positions)
    cur = _pair_ratios(current)
    off = ~np.eye(reference.n, dtype=bool)
    return float(np.max(np.abs(cur[off] / ref[off] - 1.0)))


@dataclass
class TrajectoryStats:
    times: np.ndarray
    scale_factor: np.ndarray
    shape_deviation: np.ndarray
    energy_rel_drift: np.ndarray
    momentum_drift: float
    homothety_error: float
    lam: float
    collapse_time_estimate: float
    halt_reason: str = ""
    final_positions: np.ndarray = field(default=None, repr=False)

    @property
    def t_c(self) -> float:
        return collapse_time(self.lam)

    def rows(self, every: int = 1) -> list[dict]:
        idx = list(range(0, len(self.times), every))
        if idx[-1] != len(self.times) - 1:
            idx.append(len(self.times) - 1)
        return [
            {
                "t": float(self.times[k]),
                "phi": float(self.scale_factor[k]),
                "shape_deviation": float(self.shape_deviation[k]),
                "energy_rel_drift": float(self.energy_rel_drift[k]),
            }
            for k in idx
        ]


def _distances(pos: np.ndarray) -> np.ndarray:
    diff = pos[:, None, :] - pos[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def integrate_from_rest(
    config: Configuration,
    t_end: float | None = None,
    dt: float = DEFAULT_DT,
    *,
    require_cc: bool = True,
) -> TrajectoryStats:
    """Integrate the N-body system from rest with fixed-step RK4.

    ``t_end`` defaults to ``0.9 t_c`` with ``t_c`` from ``lam = U / 2I`` of
    the (recentered) start.  With ``require_cc`` the start must pass the
    direct CC test; switch it off to integrate a non-central contrast case.
    A near-collision halts the run and truncates the statistics.
    """
    c = recenter(config)
    diag = cc_residual(c)
    if require_cc and diag.max_residual >= CC_TOL:
        raise ValueError(f"start is not central (max residual {diag.max_residual:.3g})")
    lam = diag.lam
    t_c = collapse_time(lam)
    if t_end is None:
        t_end = 0.9 * t_c
    if not 0 < t_end < t_c:
        raise ValueError(f"t_end must lie in (0, t_c = {t_c:.6g})")
    r1_0 = float(np.linalg.norm(c.positions[0]))
    if r1_0 == 0.0:
        raise ValueError("body 1 sits at the barycenter; its radius cannot define phi")

    m = c.masses
    n = c.n
    nsteps, h = _steps(t_end, dt)

    def deriv(y):
        pos = y[: 3 * n].reshape(n, 3)
        acc = pairwise_accelerations(m, pos)
        return np.concatenate([y[3 * n:], acc.ravel()])

    y = np.concatenate([c.positions.ravel(), np.zeros(3 * n)])
    e0 = -diag.U
    p0 = np.zeros(3)
    scale_p = float(np.sum(m)) * math.sqrt(lam) * r1_0

    times = [0.0]
    phi = [1.0]
    dev = [0.0]
    drift = [0.0]
    mom = 0.0
    homo = 0.0
    extent0 = float(np.max(np.linalg.norm(c.positions, axis=1)))
    reason = ""
    pos = c.positions
    iu = np.triu_indices(n, k=1)
    ref_ratio = (_distances(c.positions) / _distances(c.positions)[0, 1])[iu]
    mm = m[iu[0]] * m[iu[1]]
    for s in range(nsteps):
        y_new = rk4_step(deriv, y, h)
        pos_new = y_new[: 3 * n].reshape(n, 3)
        pair = _distances(pos_new)[iu]
        if pair.min() < COLLISION_RATIO * pair.max() or not np.all(np.isfinite(pair)):
            reason = f"collision at t={(s + 1) * h:.6g}"
            break
        y = y_new
        pos = pos_new
        vel = y[3 * n:].reshape(n, 3)
        f = float(np.linalg.norm(pos[0])) / r1_0
        times.append((s + 1) * h)
        phi.append(f)
        dev.append(float(np.max(np.abs(pair / pair[0] / ref_ratio - 1.0))))
        energy = 0.5 * float(np.sum(m * np.sum(vel**2, axis=1))) - float(np.sum(mm / pair))
        drift.append(abs(energy - e0) / abs(e0))
        mom = max(mom, float(np.linalg.norm(m @ vel - p0)) / scale_p)
        homo = max(homo, float(np.max(np.linalg.norm(pos - f * c.positions, axis=1))) / extent0)

    # Energy of the scalar motion: phi'^2 / 2 = lam_est (1/phi - 1).
    phi_end = phi[-1]
    if len(phi) > 1 and phi_end < 1.0:
        vel = y[3 * n:].reshape(n, 3)
        phidot = float(np.dot(vel[0], pos[0])) / (float(np.linalg.norm(pos[0])) * r1_0)
        lam_est = 0.5 * phidot**2 / (1.0 / phi_end - 1.0)
        tc_est = collapse_time(lam_est)
    else:
        tc_est = math.nan

    return TrajectoryStats(
        times=np.array(times),
        scale_factor=np.array(phi),
        shape_deviation=np.array(dev),
        energy_rel_drift=np.array(drift),
        momentum_drift=mom,
        homothety_error=homo,
        lam=lam,
        collapse_time_estimate=tc_est,
        halt_reason=reason,
        final_positions=np.array(pos),
    )
