"""Command-line interface.

Usage:
    cc-kit verify config.json          # direct CC test + Dziobek residuals
    cc-kit verify --l 1.41421356237 --d 1 --m7 2
    cc-kit solve --d 1                 # octahedron shape l/d
    cc-kit nullspace --l 2 --d 1       # admissible mass vectors
    cc-kit classify --probes 10 --seed 7
    cc-kit sweep --ratio 1.0:2.0:0.05 --d 1
    cc-kit collapse --l 1.41421356237 --d 1 --m7 1

Exit codes: 0 success / central, 1 not central, 2 usage or parse error,
3 numerical or degenerate failure.  The options --tol, --seed, --csv and
--out are accepted before or after the subcommand name.
"""

from __future__ import annotations

import functools
import math
import sys
import warnings

import click
import numpy as np

from . import dziobek, dynamics, solver
from .central import cc_residual
from .configfile import ConfigFileError, format_float, load_config, write_csv
from .family import TwistedPrismParams, build, is_regular_octahedron, octahedron_defect, probes
from .geometry import DegenerateConfigurationError

__all__ = ["main"]

EXIT_OK, EXIT_NOT_CC, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_TOL = 1e-10
DEFAULT_SEED = 0

SWEEP_FIELDS = ["l", "d", "l_over_d", "defect", "max_dziobek", "max_cc_residual",
                "nullspace_dim", "error"]
COLLAPSE_FIELDS = ["t", "phi", "shape_deviation", "energy_rel_drift"]
REPORT_FIELDS = ["i", "j", "h", "residual", "normalized_residual", "class_id"]


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _common(f):
    """Attach the shared options; subcommand values override group-level ones."""

    @click.option("--tol", type=float, default=None, help=f"Zero tolerance (default {DEFAULT_TOL:g}).")
    @click.option("--seed", type=click.IntRange(min=0), default=None, help="RNG seed.")
    @click.option("--csv", "as_csv", is_flag=True, default=None, help="Machine-readable CSV output.")
    @click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write CSV here.")
    @click.pass_context
    @functools.wraps(f)
    def wrapper(ctx, tol, seed, as_csv, out, **kwargs):
        base = ctx.obj or {}
        opts = {
            "tol": tol if tol is not None else base.get("tol", DEFAULT_TOL),
            "seed": seed if seed is not None else base.get("seed", DEFAULT_SEED),
            "as_csv": bool(as_csv) or base.get("as_csv", False),
            "out": out if out is not None else base.get("out"),
        }
        return f(opts, **kwargs)

    return wrapper


def _family_options(f):
    @click.argument("input_path", required=False, type=click.Path(allow_dash=True))
    @click.option("--l", "l", type=float, default=None, help="Triangle circumradius.")
    @click.option("--d", "d", type=float, default=None, help="Half plane separation.")
    @click.option("--mass", type=float, default=1.0, show_default=True, help="Common triangle mass.")
    @click.option("--masses", default=None, help="Six comma-separated triangle masses.")
    @click.option("--m7", type=float, default=0.0, show_default=True, help="Central mass.")
    @functools.wraps(f)
    def wrapper(opts, input_path, l, d, mass, masses, m7, **kwargs):
        config, params = _resolve_config(input_path, l, d, mass, masses, m7)
        return f(opts, config, params, **kwargs)

    return wrapper


def _parse_masses(masses: str | None, mass: float) -> tuple[float, ...]:
    if masses is None:
        return (mass,) * 6
    try:
        vals = tuple(float(x) for x in masses.split(","))
    except ValueError:
        _fail(EXIT_USAGE, f"--masses must be six comma-separated numbers, got {masses!r}")
    if len(vals) != 6:
        _fail(EXIT_USAGE, f"--masses needs 6 values, got {len(vals)}")
    return vals


def _resolve_config(input_path, l, d, mass, masses, m7):
    if input_path is not None and (l is not None or d is not None):
        _fail(EXIT_USAGE, "give either a configuration file or --l/--d, not both")
    try:
        if input_path is not None:
            return load_config(input_path)
        if l is None or d is None:
            _fail(EXIT_USAGE, "need a configuration file or both --l and --d")
        params = TwistedPrismParams(l, d, _parse_masses(masses, mass), m7)
        return build(params), params
    except DegenerateConfigurationError as exc:
        _fail(EXIT_NUMERIC, str(exc))
    except (ConfigFileError, ValueError, OSError) as exc:
        _fail(EXIT_USAGE, str(exc))


def _emit_csv(opts, rows, fields) -> None:
    text = write_csv(rows, fields, opts["out"])
    if opts["out"] is None:
        click.echo(text, nl=False)


def _kv(key: str, value) -> None:
    click.echo(f"{key}={format_float(value)}")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--tol", type=float, default=DEFAULT_TOL, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=DEFAULT_SEED, show_default=True)
@click.option("--csv", "as_csv", is_flag=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def main(ctx, tol, seed, as_csv, out):
    """Verify, classify and solve central configurations of the N-body problem."""
    ctx.obj = {"tol": tol, "seed": seed, "as_csv": as_csv, "out": out}


@main.command()
@_common
@_family_options
def verify(opts, config, params):
    """Test a configuration directly and through the Dziobek residuals."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        try:
            diag = cc_residual(config)
            report = dziobek.all_residuals(config) if config.n >= 4 else None
        except DegenerateConfigurationError as exc:
            _fail(EXIT_NUMERIC, str(exc))
    for w in caught:
        click.echo(f"warning: {w.message}", err=True)

    worst = max(diag.max_residual, report.max_normalized if report else 0.0)
    is_cc = worst < opts["tol"]
    if opts["as_csv"]:
        d = diag.as_dict()
        fields = ["lambda", "U", "I", "max_residual"] + [f"res_{k}" for k in range(1, config.n + 1)]
        click.echo(write_csv([d], fields), nl=False)
    else:
        _kv("bodies", config.n)
        for k, v in diag.as_dict().items():
            _kv(k, v)
        if report is not None:
            _kv("dziobek_equations", len(report))
            _kv("dziobek_normalization", report.normalization)
            _kv("dziobek_max_normalized", report.max_normalized)
            _kv("dziobek_zero_count", len(report.zero_set))
            _kv("dziobek_classes", len(report.classes))
        if params is not None:
            _kv("octahedron_defect", octahedron_defect(params))
        if config.n == 7:
            _kv("regular_octahedron", str(is_regular_octahedron(config)).lower())
        _kv("tol", opts["tol"])
        _kv("central", str(is_cc).lower())
    if report is not None and opts["out"] is not None:
        write_csv(report.rows(), REPORT_FIELDS, opts["out"])
    sys.exit(EXIT_OK if is_cc else EXIT_NOT_CC)


@main.command()
@_common
@click.option("--d", "d", type=float, required=True, help="Half plane separation.")
@click.option("--mass", type=float, default=1.0, show_default=True)
@click.option("--m7", type=float, default=0.0, show_default=True)
@click.option("--bracket", default="0.5,3.0", show_default=True, help="Search interval for l/d.")
def solve(opts, d, mass, m7, bracket):
    """Solve for the l/d ratio at which the equal-mass family is central."""
    if not (d > 0 and math.isfinite(d)):
        _fail(EXIT_USAGE, f"--d must be positive, got {d}")
    try:
        lo, hi = (float(x) for x in bracket.split(","))
    except ValueError:
        _fail(EXIT_USAGE, f"--bracket must be 'lo,hi', got {bracket!r}")
    try:
        res = solver.solve_shape(d, mass, m7, tol=opts["tol"], bracket=(lo, hi))
    except solver.BracketError as exc:
        _fail(EXIT_NUMERIC, str(exc))
    except ArithmeticError as exc:
        _fail(EXIT_NUMERIC, str(exc))
    except ValueError as exc:
        _fail(EXIT_USAGE, str(exc))
    row = {
        "d": res.d,
        "l": res.l,
        "l_over_d": res.l_over_d,
        "iterations": res.iterations,
        "residual": res.residual_at_root,
        "f167_root": res.f167_root,
        "bracket_lo": res.bracket[0],
        "bracket_hi": res.bracket[1],
    }
    if opts["as_csv"] or opts["out"]:
        _emit_csv(opts, [row], list(row))
    if not opts["as_csv"]:
        for k, v in row.items():
            _kv(k, v)


@main.command()
@_common
@_family_options
def nullspace(opts, config, params):
    """Singular values and nullspace of the mass matrix."""
    if config.n < 4:
        _fail(EXIT_USAGE, "nullspace analysis needs at least 4 bodies")
    try:
        res = solver.mass_space(config, tol=opts["tol"])
    except (DegenerateConfigurationError, np.linalg.LinAlgError) as exc:
        _fail(EXIT_NUMERIC, str(exc))
    if opts["as_csv"] or opts["out"]:
        rows = [{"kind": "sigma", "index": k + 1, **{f"c{j + 1}": "" for j in range(config.n)},
                 "value": float(s)} for k, s in enumerate(res.singular_values)]
        rows += [{"kind": "basis", "index": k + 1, **{f"c{j + 1}": float(x) for j, x in enumerate(b)},
                  "value": ""} for k, b in enumerate(res.nullspace_basis)]
        _emit_csv(opts, rows, ["kind", "index"] + [f"c{j + 1}" for j in range(config.n)] + ["value"])
    if not opts["as_csv"]:
        sig = res.singular_values
        _kv("singular_values", " ".join(format_float(float(s)) for s in sig))
        _kv("relative_singular_values", " ".join(format_float(float(s / sig[0])) for s in sig))
        _kv("nullspace_dim", res.nullspace_dim)
        for k, b in enumerate(res.nullspace_basis, start=1):
            _kv(f"basis_{k}", " ".join(format_float(float(x)) for x in b))


@main.command()
@_common
@click.option("--probes", "n_probes", type=int, default=10, show_default=True)
@click.option("--equal-masses", is_flag=True, help="Probe with equal triangle masses.")
@click.option("--octahedron", is_flag=True, help="Probe only the l = sqrt(2) d locus.")
def classify(opts, n_probes, equal_masses, octahedron):
    """Identify identically vanishing Dziobek equations on random family probes."""
    if n_probes < 3:
        _fail(EXIT_USAGE, "--probes must be at least 3")
    seed = opts["seed"]
    ps = probes(n_probes, seed, equal_masses=equal_masses, octahedron=octahedron)
    zeros = dziobek.classify_zeros(ps, tol=opts["tol"])
    if opts["as_csv"] or opts["out"]:
        _emit_csv(opts, [{"i": t.i, "j": t.j, "h": t.h} for t in zeros], ["i", "j", "h"])
    if opts["as_csv"]:
        return
    _kv("seed", seed)
    _kv("probes", n_probes)
    _kv("equal_masses", str(equal_masses).lower())
    _kv("octahedron", str(octahedron).lower())
    _kv("zero_count", len(zeros))
    click.echo("zeros=" + " ".join(t.label for t in zeros))
    published = set(dziobek.PRISM_IDENTICAL_ZEROS)
    if equal_masses:
        published |= set(dziobek.EQUAL_MASS_ZEROS)
    if not octahedron:
        found = set(zeros)
        _kv("missing_from_published", " ".join(t.label for t in sorted(published - found)) or "none")
        _kv("extra_vs_published", " ".join(t.label for t in sorted(found - published)) or "none")
    if equal_masses and not octahedron:
        ref = ps[0]
        for name, chain in (("equal_mass_chain", dziobek.EQUAL_MASS_CHAIN),
                            ("axial_chain", dziobek.AXIAL_CHAIN)):
            measured = dziobek.measure_factors(ref, [t for t, _ in chain])
            ok = all(dziobek.verify_proportionality(p, measured, tol=opts["tol"]) for p in ps)
            _kv(f"{name}_measured_verified", str(ok).lower())
            _kv(f"{name}_as_published_holds", str(dziobek.verify_proportionality(ref, chain)).lower())
            for disc in dziobek.chain_discrepancies(ref, chain):
                tag = " duplicate" if disc.duplicate else ""
                if disc.candidates:
                    tag += " candidate=" + ",".join(t.label for t in disc.candidates)
                click.echo(
                    f"discrepancy {name} {disc.triple.label} position={disc.position + 1} "
                    f"stated={format_float(disc.stated)} measured={disc.measured:.12g}{tag}"
                )


@main.command()
@_common
@click.option("--ratio", required=True, help="l/d grid as start:stop:step (inclusive).")
@click.option("--d", "d", type=float, default=1.0, show_default=True)
@click.option("--mass", type=float, default=1.0, show_default=True)
@click.option("--masses", default=None, help="Six comma-separated triangle masses.")
@click.option("--m7", type=float, default=0.0, show_default=True)
def sweep(opts, ratio, d, mass, masses, m7):
    """Tabulate family diagnostics over a grid of l/d values."""
    try:
        start, stop, step = (float(x) for x in ratio.split(":"))
        ratios = solver.ratio_grid(start, stop, step)
    except ValueError:
        _fail(EXIT_USAGE, f"--ratio must be start:stop:step, got {ratio!r}")
    m = _parse_masses(masses, mass)
    rows = solver.sweep([(r * d, d, m + (m7,)) for r in ratios])
    _emit_csv(opts, [r.as_dict() for r in rows], SWEEP_FIELDS)
    ok = [r for r in rows if not r.error]
    if ok:
        best = min(ok, key=lambda r: r.max_cc_residual)
        click.echo(f"grid_min_cc_residual_at={format_float(best.l_over_d)} "
                   f"value={best.max_cc_residual:.3e}", err=True)
        # Refine from the bracketing grid neighbours when the defect changes sign.
        for a, b in zip(ok, ok[1:]):
            if a.defect == 0 or a.defect * b.defect < 0:
                try:
                    root, _, _ = solver.bisect_secant(
                        lambda x: octahedron_defect(TwistedPrismParams(x * d, d, m, m7)),
                        a.l_over_d, b.l_over_d, 1e-14)
                except solver.BracketError:
                    break
                click.echo(f"refined_root_l_over_d={format_float(root)}", err=True)
                break


@main.command()
@_common
@_family_options
@click.option("--dt", type=float, default=dynamics.DEFAULT_DT, show_default=True)
@click.option("--fraction", type=float, default=0.9, show_default=True,
              help="Integrate to this fraction of the collapse time.")
@click.option("--every", type=click.IntRange(min=1), default=100, show_default=True,
              help="Emit every n-th step.")
@click.option("--allow-non-cc", is_flag=True, help="Integrate even if the start is not central.")
def collapse(opts, config, params, dt, fraction, every, allow_non_cc):
    """Integrate a homothetic collapse from rest and compare with the scalar law."""
    if not 0 < fraction < 1:
        _fail(EXIT_USAGE, "--fraction must lie in (0, 1)")
    if not dt > 0:
        _fail(EXIT_USAGE, "--dt must be positive")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            lam = cc_residual(config).lam
            stats = dynamics.integrate_from_rest(
                config, fraction * dynamics.collapse_time(lam), dt, require_cc=not allow_non_cc)
    except DegenerateConfigurationError as exc:
        _fail(EXIT_NUMERIC, str(exc))
    except ValueError as exc:
        _fail(EXIT_NOT_CC, str(exc))
    _, phi_1d = dynamics.integrate_scale_ode(stats.lam, stats.times[-1], dt)
    n = len(stats.scale_factor)
    oracle_gap = float(np.max(np.abs(stats.scale_factor - phi_1d[:n])))
    _emit_csv(opts, stats.rows(every), COLLAPSE_FIELDS)
    summary = {
        "lambda": stats.lam,
        "t_c": stats.t_c,
        "collapse_time_estimate": stats.collapse_time_estimate,
        "t_end": float(stats.times[-1]),
        "phi_end": float(stats.scale_factor[-1]),
        "max_shape_deviation": float(stats.shape_deviation.max()),
        "max_energy_rel_drift": float(stats.energy_rel_drift.max()),
        "phi_oracle_max_gap": oracle_gap,
        "halt_reason": stats.halt_reason or "none",
    }
    for k, v in summary.items():
        click.echo(f"{k}={format_float(v)}", err=True)
    if stats.halt_reason:
        sys.exit(EXIT_NUMERIC)


if __name__ == "__main__":
    main()
