"""Laura-Andoyer-Dziobek residuals for non-planar configurations.

For an ordered triple of distinct bodies ``(i, j, h)``::

    f_ijh = sum_{k != i,j,h} m_k (R_ik - R_jk) Delta_ijhk

with ``R_ab = r_ab**-3`` and ``Delta`` the triple product from
:func:`cckit.geometry.oriented_volume`.  A non-planar configuration is
central exactly when every ``f_ijh`` vanishes.

Residuals are reported raw and divided by one configuration-wide scale:
the largest sum of absolute terms over all triples.  Thresholds on the
normalized values are then independent of size and mass units.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .geometry import Configuration, DegenerateConfigurationError, distance_matrix

__all__ = [
    "AXIAL_CHAIN",
    "EQUAL_MASS_CHAIN",
    "EQUAL_MASS_ZEROS",
    "PRISM_IDENTICAL_ZEROS",
    "ChainDiscrepancy",
    "DziobekReport",
    "PlanarConfigurationError",
    "ResidualClass",
    "TripleIndex",
    "all_residuals",
    "chain_discrepancies",
    "classify_zeros",
    "coefficient_matrix",
    "enumerate_triples",
    "f",
    "measure_factors",
    "parse_chain",
    "proportionality_classes",
    "verify_proportionality",
]

ZERO_TOL = 1e-10
PROPORTIONAL_TOL = 1e-9
# Ratios accepted when grouping residuals of a single configuration.
_SIMPLE_RATIOS = (1.0, -1.0, 2.0, -2.0, 0.5, -0.5)


class PlanarConfigurationError(DegenerateConfigurationError):
    """All oriented volumes vanish, so the residuals carry no information."""


class TripleIndex(NamedTuple):
    i: int
    j: int
    h: int

    @classmethod
    def parse(cls, label: str | Sequence[int]) -> "TripleIndex":
        """Accept ``(1, 6, 7)``, ``"167"``, ``"f167"``, ``"f_167"`` or ``"1,6,7"``."""
        if not isinstance(label, str):
            i, j, h = (int(x) for x in label)
            return cls(i, j, h)
        s = label.strip().lower().removeprefix("f").lstrip("_")
        parts = s.split(",") if "," in s else list(s)
        if len(parts) != 3:
            raise ValueError(f"cannot parse triple label {label!r}")
        i, j, h = (int(p) for p in parts)
        return cls(i, j, h)

    @property
    def label(self) -> str:
        if max(self) < 10:
            return f"f_{self.i}{self.j}{self.h}"
        return f"f_{self.i},{self.j},{self.h}"

    def __str__(self) -> str:
        return self.label


def enumerate_triples(n: int) -> list[TripleIndex]:
    """All ``(i, j, h)`` with ``i < j`` and ``h`` distinct, lexicographic; n(n-1)(n-2)/2 of them."""
    return [
        TripleIndex(i, j, h)
        for i in range(1, n + 1)
        for j in range(i + 1, n + 1)
        for h in range(1, n + 1)
        if h != i and h != j
    ]


def _volume_tensor(positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]  # diff[a, b] = r_a - r_b
    # cross(r_i - r_j, r_j - r_h) for every (i, j, h)
    c = np.cross(diff[:, :, None, :], diff[None, :, :, :])
    return np.einsum("ijhx,hkx->ijhk", c, diff)


def _check_triples(n: int, triples: Iterable) -> list[TripleIndex]:
    out = []
    for t in triples:
        t = TripleIndex.parse(t)
        if len(set(t)) != 3:
            raise ValueError(f"triple indices must be distinct: {tuple(t)}")
        if min(t) < 1 or max(t) > n:
            raise IndexError(f"triple {tuple(t)} out of range 1..{n}")
        out.append(t)
    return out


def coefficient_matrix(config: Configuration, triples: Iterable | None = None):
    """Mass-free coefficients ``A[t, k] = (R_ik - R_jk) Delta_ijhk``.

    Entries with ``k`` in the triple are zero, so ``A @ masses`` gives the
    residuals.  Returns ``(A, triples)``.
    """
    n = config.n
    if n < 4:
        raise ValueError("Dziobek residuals need at least 4 bodies")
    triples = enumerate_triples(n) if triples is None else _check_triples(n, triples)
    dist = distance_matrix(config)
    with np.errstate(divide="ignore"):
        R = np.where(dist > 0, dist, np.inf) ** -3.0
    vol = _volume_tensor(config.positions)
    idx = np.array(triples, dtype=int) - 1
    i, j, h = idx[:, 0], idx[:, 1], idx[:, 2]
    A = (R[i] - R[j]) * vol[i, j, h]
    k = np.arange(n)
    mask = (k[None, :] == i[:, None]) | (k[None, :] == j[:, None]) | (k[None, :] == h[:, None])
    A[mask] = 0.0
    return A, triples


def f(config: Configuration, t) -> float:
    """Raw residual ``f_ijh`` for one triple (any ordering of distinct indices)."""
    A, _ = coefficient_matrix(config, [t])
    return float(A[0] @ config.masses)


@dataclass
class ResidualClass:
    """Triples whose residuals are proportional; ``f_t = factor * f_representative``."""

    representative: TripleIndex
    members: list[tuple[TripleIndex, float]]


@dataclass
class DziobekReport:
    triples: list[TripleIndex]
    residuals: np.ndarray
    normalization: float
    zero_tol: float = ZERO_TOL
    classes: list[ResidualClass] = field(default_factory=list)

    @property
    def normalized(self) -> np.ndarray:
        return self.residuals / self.normalization

    @property
    def max_normalized(self) -> float:
        return float(np.max(np.abs(self.normalized)))

    @property
    def zero_set(self) -> list[TripleIndex]:
        return [t for t, v in zip(self.triples, self.normalized) if abs(v) < self.zero_tol]

    def residual(self, t) -> float:
        """Raw residual by label; triples with ``i > j`` resolve through ``f_jih = f_ijh``."""
        t = TripleIndex.parse(t)
        lookup = self._lookup()
        if t in lookup:
            return float(self.residuals[lookup[t]])
        swapped = TripleIndex(t.j, t.i, t.h)
        if swapped in lookup:
            return float(self.residuals[lookup[swapped]])
        raise KeyError(t)

    def normalized_residual(self, t) -> float:
        return self.residual(t) / self.normalization

    def class_ids(self) -> list[int]:
        """0 for the zero set, otherwise the 1-based index into ``classes``."""
        ids = {}
        for n, cls in enumerate(self.classes, start=1):
            for t, _ in cls.members:
                ids[t] = n
        return [ids.get(t, 0) for t in self.triples]

    def rows(self) -> list[dict]:
        return [
            {
                "i": t.i, "j": t.j, "h": t.h,
                "residual": float(r),
                "normalized_residual": float(r / self.normalization),
                "class_id": c,
            }
            for t, r, c in zip(self.triples, self.residuals, self.class_ids())
        ]

    def _lookup(self) -> dict[TripleIndex, int]:
        return {t: n for n, t in enumerate(self.triples)}

    def __len__(self) -> int:
        return len(self.triples)


def _is_planar(config: Configuration) -> bool:
    centered = config.positions - config.positions.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    return sv[-1] <= 1e-10 * sv[0]


def _evaluate(config: Configuration, triples=None):
    A, triples = coefficient_matrix(config, triples)
    terms = A * config.masses
    scale = float(np.abs(terms).sum(axis=1).max()) if len(triples) else 0.0
    return triples, terms.sum(axis=1), (scale if scale > 0 else 1.0)


def all_residuals(config: Configuration, zero_tol: float = ZERO_TOL) -> DziobekReport:
    """Residuals for every triple under the ``i < j`` enumeration.

    Raises PlanarConfigurationError when all bodies lie in one plane.
    """
    if config.n < 4:
        raise ValueError("Dziobek residuals need at least 4 bodies")
    if _is_planar(config):
        raise PlanarConfigurationError("configuration is planar")
    triples, residuals, scale = _evaluate(config)
    report = DziobekReport(triples, residuals, scale, zero_tol)
    nonzero = [n for n, v in enumerate(residuals / scale) if abs(v) >= zero_tol]
    report.classes = _group(
        [triples[n] for n in nonzero], (residuals / scale)[nonzero][:, None], simple_only=True
    )
    return report


def _group(triples: list[TripleIndex], vectors: np.ndarray, simple_only: bool,
           tol: float = PROPORTIONAL_TOL) -> list[ResidualClass]:
    classes: list[ResidualClass] = []
    reps: list[np.ndarray] = []
    for t, v in zip(triples, vectors):
        for cls, r in zip(classes, reps):
            rho = float(v @ r / (r @ r))
            if simple_only:
                near = min(_SIMPLE_RATIOS, key=lambda q: abs(q - rho))
                if abs(near - rho) > tol * abs(near):
                    continue
                rho = near
            if np.linalg.norm(v - rho * r) <= tol * np.linalg.norm(v):
                cls.members.append((t, rho))
                break
        else:
            classes.append(ResidualClass(t, [(t, 1.0)]))
            reps.append(v)
    return classes


def _probe_matrix(probes: Sequence[Configuration]) -> tuple[list[TripleIndex], np.ndarray]:
    triples = None
    rows = []
    for c in probes:
        t, res, scale = _evaluate(c)
        if triples is None:
            triples = t
        elif t != triples:
            raise ValueError("probe configurations must have the same body count")
        rows.append(res / scale)
    return triples, np.array(rows)


def classify_zeros(probes: Sequence[Configuration], tol: float = ZERO_TOL) -> list[TripleIndex]:
    """Triples whose normalized residual is below ``tol`` on every probe."""
    if len(probes) < 3:
        raise ValueError("need at least 3 probe configurations to identify identical zeros")
    triples, V = _probe_matrix(probes)
    keep = np.all(np.abs(V) < tol, axis=0)
    return [t for t, z in zip(triples, keep) if z]


def proportionality_classes(probes: Sequence[Configuration], zero_tol: float = ZERO_TOL,
                            tol: float = PROPORTIONAL_TOL) -> list[ResidualClass]:
    """Group nonzero triples whose residual vectors over the probes are parallel.

    With a single probe only the ratios 1, 2 and 1/2 (either sign) are accepted.
    """
    triples, V = _probe_matrix(probes)
    nonzero = ~np.all(np.abs(V) < zero_tol, axis=0)
    sel = [t for t, z in zip(triples, nonzero) if z]
    return _group(sel, V[:, nonzero].T, simple_only=len(probes) == 1, tol=tol)


Chain = list[tuple[TripleIndex, float]]


def parse_chain(text: str) -> Chain:
    """Parse an equality chain such as ``"167 -157 -2*172"``.

    A token ``c*ijh`` states that ``c * f_ijh`` equals the common value, so
    the stored factor is ``1/c`` (``f_ijh = factor * common``).
    """
    chain = []
    for tok in text.split():
        coef = 1.0
        if tok.startswith("-"):
            coef, tok = -1.0, tok[1:]
        if "*" in tok:
            c, tok = tok.split("*")
            coef *= float(c)
        chain.append((TripleIndex.parse(tok), 1.0 / coef))
    return chain


def _normalized_values(config: Configuration, ts: Sequence[TripleIndex]) -> np.ndarray:
    _, _, scale = _evaluate(config)
    A, _ = coefficient_matrix(config, ts)
    return (A @ config.masses) / scale


def verify_proportionality(config: Configuration, chain: Chain, tol: float = ZERO_TOL) -> bool:
    """True iff ``res(a) * factor(b) == res(b) * factor(a)`` for every pair in the chain."""
    if not chain:
        return True
    ts = [TripleIndex.parse(t) for t, _ in chain]
    fac = np.array([c for _, c in chain], dtype=float)
    v = _normalized_values(config, ts)
    cross = np.abs(v[:, None] * fac[None, :] - v[None, :] * fac[:, None])
    return bool(np.all(cross <= tol))


def measure_factors(config: Configuration, triples: Sequence, zero_tol: float = ZERO_TOL) -> Chain:
    """Factors of each triple relative to the first: ``f_t = factor * f_first``."""
    ts = [TripleIndex.parse(t) for t in triples]
    v = _normalized_values(config, ts)
    if abs(v[0]) < zero_tol:
        raise ValueError(f"{ts[0]} vanishes here; cannot use it as the reference")
    return [(t, float(x / v[0])) for t, x in zip(ts, v)]


@dataclass(frozen=True)
class ChainDiscrepancy:
    triple: TripleIndex
    position: int
    stated: float
    measured: float
    duplicate: bool
    # For duplicates: unlisted triples one index away whose measured factor
    # matches the stated one (likely intended label).
    candidates: tuple[TripleIndex, ...] = ()


def chain_discrepancies(config: Configuration, stated: Chain,
                        tol: float = 1e-8) -> list[ChainDiscrepancy]:
    """Members whose stated factor disagrees with the measured one.

    Factors are compared after rescaling so the first member is 1.  Triples
    listed more than once are marked ``duplicate``.
    """
    listed = [t for t, _ in stated]
    others = [t for t in enumerate_triples(config.n) if t not in set(listed)]
    measured = dict(measure_factors(config, listed + others))
    base = stated[0][1]
    counts: dict[TripleIndex, int] = {}
    for t in listed:
        counts[t] = counts.get(t, 0) + 1
    out = []
    for pos, (t, c) in enumerate(stated):
        want = c / base
        got = measured[t]
        if abs(want - got) > tol * max(1.0, abs(got)):
            cands = ()
            if counts[t] > 1:
                cands = tuple(
                    o for o in others
                    if sum(a != b for a, b in zip(o, t)) == 1
                    and abs(measured[o] - want) <= tol * max(1.0, abs(want))
                )
            out.append(ChainDiscrepancy(t, pos, want, got, counts[t] > 1, cands))
    return out


# Bookkeeping for the seven-body twisted prism (two triangles rotated by pi/3
# with a seventh body midway on the axis), as published.

PRISM_IDENTICAL_ZEROS = [TripleIndex.parse(s) for s in (
    "124 125 127 134 136 137 147 174 235 236 237 257 275 367 "
    "376 451 452 457 461 463 467 471 562 563 567 572 673"
).split()]

EQUAL_MASS_ZEROS = [TripleIndex.parse(s) for s in (
    "126 135 234 453 462 561 123 456 132 465 231 564"
).split()]

# Zero only once the triangle masses are equal and the prism is an octahedron.
# f_254 is listed twice with incompatible factors.
EQUAL_MASS_CHAIN = parse_chain(
    "142 146 -143 -145 253 -251 254 -256 361 -362 -364 365 "
    "-164 -245 -356 -163 -241 -352 152 263 265 341 346 154 "
    "-2*162 2*153 -2*243 2*261 2*342 -2*351 -2*165 -2*246 -2*254 2*156 2*264 2*345"
)

# Triples involving the central body, equal triangle masses.
AXIAL_CHAIN = parse_chain(
    "167 247 357 -157 -347 -267 -2*172 -2*273 -2*475 -2*576 -2*371 -2*674 "
    "2*173 2*271 2*372 2*476 2*574 2*675 2*175 2*671 2*276 2*472 2*374 "
    "2*573 2*176 2*672 2*274 2*473 2*375 2*571"
)
