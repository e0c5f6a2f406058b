"""JSON configuration files and CSV output.

A configuration file holds exactly one of::

    {"bodies": [{"mass": 1.0, "position": [x, y, z]}, ...]}
    {"family": {"l": 1.414, "d": 1.0, "masses": [1, 1, 1, 1, 1, 1], "m7": 0.0}}

Bodies are numbered by their position in the list, starting at 1.
Floats are written with ``repr`` (shortest round-trip form), so a file
written and read back reproduces every double exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

from .family import TwistedPrismParams, build
from .geometry import Configuration

__all__ = [
    "ConfigFileError",
    "dump_config",
    "format_float",
    "load_config",
    "parse_config",
    "write_csv",
]


class ConfigFileError(ValueError):
    """Malformed or schema-violating configuration input."""


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigFileError(f"{where}: expected a number, got {value!r}")
    x = float(value)
    if not math.isfinite(x):
        raise ConfigFileError(f"{where}: must be finite")
    return x


def parse_config(data: Any) -> tuple[Configuration, TwistedPrismParams | None]:
    """Validate a decoded JSON document and build the configuration.

    Collisions surface as DegenerateConfigurationError; every other problem
    raises ConfigFileError.
    """
    if not isinstance(data, dict):
        raise ConfigFileError("top level must be a JSON object")
    has_bodies, has_family = "bodies" in data, "family" in data
    if has_bodies == has_family:
        raise ConfigFileError("exactly one of 'bodies' or 'family' must be present")

    if has_family:
        fam = data["family"]
        if not isinstance(fam, dict):
            raise ConfigFileError("'family' must be an object")
        unknown = set(fam) - {"l", "d", "masses", "m7"}
        if unknown:
            raise ConfigFileError(f"unknown family keys: {sorted(unknown)}")
        try:
            l = _number(fam["l"], "family.l")
            d = _number(fam["d"], "family.d")
        except KeyError as exc:
            raise ConfigFileError(f"family is missing {exc.args[0]!r}") from None
        masses = fam.get("masses", [1.0] * 6)
        if not isinstance(masses, list) or len(masses) != 6:
            raise ConfigFileError("family.masses must be a list of 6 numbers")
        masses = tuple(_number(m, f"family.masses[{k}]") for k, m in enumerate(masses))
        m7 = _number(fam.get("m7", 0.0), "family.m7")
        try:
            params = TwistedPrismParams(l, d, masses, m7)
        except ValueError as exc:
            raise ConfigFileError(str(exc)) from None
        return build(params), params

    bodies = data["bodies"]
    if not isinstance(bodies, list) or not bodies:
        raise ConfigFileError("'bodies' must be a non-empty list")
    masses, positions = [], []
    for k, b in enumerate(bodies, start=1):
        if not isinstance(b, dict) or "mass" not in b or "position" not in b:
            raise ConfigFileError(f"body {k}: needs 'mass' and 'position'")
        pos = b["position"]
        if not isinstance(pos, list) or len(pos) != 3:
            raise ConfigFileError(f"body {k}: position must be [x, y, z]")
        m = _number(b["mass"], f"body {k} mass")
        if m < 0:
            raise ConfigFileError(f"body {k}: mass must be non-negative")
        masses.append(m)
        positions.append([_number(x, f"body {k} position") for x in pos])
    return Configuration(masses, positions), None


def load_config(path: str | Path) -> tuple[Configuration, TwistedPrismParams | None]:
    """Read a configuration file; ``"-"`` reads standard input."""
    if str(path) == "-":
        import sys

        text = sys.stdin.read()
    else:
        text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigFileError(f"invalid JSON: {exc}") from None
    return parse_config(data)


def dump_config(config: Configuration) -> str:
    bodies = [
        {"mass": float(m), "position": [float(x) for x in p]}
        for m, p in zip(config.masses, config.positions)
    ]
    return json.dumps({"bodies": bodies}, indent=2) + "\n"


def format_float(x: Any) -> str:
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


def write_csv(rows: Iterable[dict], fieldnames: Sequence[str], out=None) -> str:
    """Write rows as CSV (to ``out`` if given) and return the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fieldnames)
    for row in rows:
        w.writerow([format_float(row[k]) for k in fieldnames])
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text
