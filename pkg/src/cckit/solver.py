"""Shape root-finding and mass-space analysis inside the twisted-prism family."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import dziobek
from .central import cc_residual
from .dziobek import TripleIndex
from .family import TwistedPrismParams, build, octahedron_defect
from .geometry import Configuration

__all__ = [
    "BracketError",
    "MassMatrix",
    "MassSpaceResult",
    "ShapeSolveResult",
    "SweepRow",
    "bisect_secant",
    "mass_matrix",
    "mass_space",
    "ratio_grid",
    "solve_shape",
    "sweep",
]

NULLSPACE_TOL = 1e-10
SWITCH_WIDTH = 1e-6
MAX_ITER = 200


class BracketError(ValueError):
    """The bracket endpoints do not have opposite signs."""


def bisect_secant(
    g: Callable[[float], float],
    a: float,
    b: float,
    tol: float,
    switch_width: float = SWITCH_WIDTH,
    max_iter: int = MAX_ITER,
) -> tuple[float, int, tuple[float, float]]:
    """Bisect ``[a, b]`` down to ``switch_width``, then finish with secant steps.

    Secant iterates that leave the current bracket are replaced by the
    midpoint.  Returns ``(root, iterations, final_bracket)``.
    """
    ga, gb = g(a), g(b)
    if ga == 0.0:
        return a, 0, (a, b)
    if gb == 0.0:
        return b, 0, (a, b)
    if math.copysign(1.0, ga) == math.copysign(1.0, gb):
        raise BracketError(f"no sign change on [{a}, {b}]: g(a)={ga:.3g}, g(b)={gb:.3g}")

    it = 0
    while b - a > switch_width and it < max_iter:
        m = 0.5 * (a + b)
        gm = g(m)
        it += 1
        if gm == 0.0:
            return m, it, (a, b)
        if math.copysign(1.0, gm) == math.copysign(1.0, ga):
            a, ga = m, gm
        else:
            b, gb = m, gm

    x0, g0, x1, g1 = a, ga, b, gb
    while it < max_iter:
        x2 = x1 - g1 * (x1 - x0) / (g1 - g0) if g1 != g0 else 0.5 * (a + b)
        if not a < x2 < b:
            x2 = 0.5 * (a + b)
        g2 = g(x2)
        it += 1
        if g2 == 0.0 or abs(x2 - x1) < tol:
            return x2, it, (a, b)
        if math.copysign(1.0, g2) == math.copysign(1.0, ga):
            a, ga = x2, g2
        else:
            b, gb = x2, g2
        x0, g0, x1, g1 = x1, g1, x2, g2
    return x1, it, (a, b)


@dataclass(frozen=True)
class ShapeSolveResult:
    l_over_d: float
    d: float
    iterations: int
    residual_at_root: float
    bracket: tuple[float, float]
    f167_root: float

    @property
    def l(self) -> float:
        return self.l_over_d * self.d

    @property
    def roots_agree(self) -> float:
        return abs(self.l_over_d - self.f167_root)


def _f167_residual(ratio: float, d: float, m: float, m7: float) -> float:
    c = build(TwistedPrismParams.equal(ratio * d, d, m, m7))
    # f_167 is scale-invariant in positions; dividing by the mass makes it mass-free.
    return dziobek.f(c, (1, 6, 7)) / (6 * m + m7)


def solve_shape(
    d: float = 1.0,
    mass: float = 1.0,
    m7: float = 0.0,
    tol: float = 1e-12,
    bracket: tuple[float, float] = (0.5, 3.0),
) -> ShapeSolveResult:
    """Find ``l/d`` where the equal-mass twisted prism becomes an octahedron.

    The defect ``r_13 - r_34`` is solved on ``bracket`` (in units of ``l/d``);
    the residual ``f_167`` is solved independently and both roots must
    agree within ``10 * tol``.
    """
    if not d > 0:
        raise ValueError(f"d must be positive, got {d}")
    if mass <= 0:
        raise ValueError("triangle mass must be positive")
    lo, hi = bracket

    def defect(x: float) -> float:
        return octahedron_defect(TwistedPrismParams.equal(x * d, d, mass, m7)) / d

    root, it, br = bisect_secant(defect, lo, hi, tol)
    root_f, _, _ = bisect_secant(lambda x: _f167_residual(x, d, mass, m7), lo, hi, tol)
    if abs(root - root_f) > 10 * tol:
        raise ArithmeticError(
            f"defect root {root!r} and f_167 root {root_f!r} disagree by {abs(root - root_f):.3g}"
        )
    return ShapeSolveResult(root, d, it, abs(defect(root)), br, root_f)


@dataclass(frozen=True)
class MassMatrix:
    """``A[t, k]`` such that ``A @ masses`` gives every ``f_ijh``."""

    A: np.ndarray
    triples: list[TripleIndex]

    def residuals(self, masses) -> np.ndarray:
        return self.A @ np.asarray(masses, dtype=float)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


def mass_matrix(config: Configuration) -> MassMatrix:
    A, triples = dziobek.coefficient_matrix(config)
    return MassMatrix(A, triples)


@dataclass(frozen=True)
class MassSpaceResult:
    singular_values: np.ndarray
    nullspace_basis: np.ndarray  # rows, orthonormal
    tol: float = NULLSPACE_TOL

    @property
    def nullspace_dim(self) -> int:
        return int(self.nullspace_basis.shape[0])

    def projection(self) -> np.ndarray:
        """Orthogonal projector onto the nullspace."""
        B = self.nullspace_basis
        return B.T @ B

    def contains(self, v, atol: float = 1e-8) -> bool:
        v = np.asarray(v, dtype=float)
        v = v / np.linalg.norm(v)
        return bool(np.linalg.norm(v - self.projection() @ v) <= atol)


def mass_space(config: Configuration, tol: float = NULLSPACE_TOL) -> MassSpaceResult:
    """Singular values of the mass matrix and the basis of its nullspace.

    A singular value counts as zero below ``tol * sigma_max``.  Mass vectors
    that make the configuration central are the nonnegative nullspace vectors.
    """
    A = mass_matrix(config).A
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    sv = np.zeros(A.shape[1])
    sv[: s.size] = s
    null = sv < tol * sv[0] if sv[0] > 0 else np.ones_like(sv, dtype=bool)
    basis = vt[null]
    # Canonical sign for reproducible output: largest-magnitude entry positive.
    basis = np.array([b if b[np.argmax(np.abs(b))] > 0 else -b for b in basis]).reshape(-1, A.shape[1])
    return MassSpaceResult(sv, basis, tol)


@dataclass
class SweepRow:
    l: float
    d: float
    masses: tuple[float, ...]
    defect: float = math.nan
    max_dziobek: float = math.nan
    max_cc_residual: float = math.nan
    nullspace_dim: int | None = None
    error: str = ""

    @property
    def l_over_d(self) -> float:
        return self.l / self.d if self.d else math.nan

    def as_dict(self) -> dict:
        return {
            "l": self.l,
            "d": self.d,
            "l_over_d": self.l_over_d,
            "defect": self.defect,
            "max_dziobek": self.max_dziobek,
            "max_cc_residual": self.max_cc_residual,
            "nullspace_dim": "" if self.nullspace_dim is None else self.nullspace_dim,
            "error": self.error,
        }


def _sweep_row(p) -> SweepRow:
    if isinstance(p, TwistedPrismParams):
        row = SweepRow(p.l, p.d, p.all_masses)
    else:
        l, d, masses = p
        row = SweepRow(float(l), float(d), tuple(masses))
    try:
        if not isinstance(p, TwistedPrismParams):
            m = tuple(masses)
            p = TwistedPrismParams(l, d, m[:6], m[6] if len(m) > 6 else 0.0)
        c = build(p)
        row.defect = octahedron_defect(p)
        row.max_dziobek = dziobek.all_residuals(c).max_normalized
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            row.max_cc_residual = cc_residual(c).max_residual
        row.nullspace_dim = mass_space(c).nullspace_dim
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def sweep(grid: Iterable) -> list[SweepRow]:
    """Evaluate family diagnostics at each grid point; failures land in ``error``.

    Grid entries are TwistedPrismParams or ``(l, d, masses)`` tuples with
    six or seven masses.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("sweep grid is empty")
    return [_sweep_row(p) for p in grid]


def ratio_grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive arithmetic grid, robust to floating-point step accumulation."""
    if step <= 0 or stop < start:
        raise ValueError("need start <= stop and step > 0")
    n = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + k * step, 12) for k in range(n + 1)]
