import csv
import io
import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from cckit import dziobek
from cckit.cli import main
from cckit.configfile import ConfigFileError, dump_config, load_config, parse_config
from cckit.family import TwistedPrismParams, build
from cckit.geometry import DegenerateConfigurationError

from conftest import SQRT2, random_config


@pytest.fixture
def runner():
    return CliRunner()


def kv(text):
    out = {}
    for line in text.splitlines():
        if "=" in line and not line.startswith("discrepancy"):
            k, v = line.split("=", 1)
            out[k] = v
    return out


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(p)


def family_doc(l, d=1.0, masses=(1,) * 6, m7=0.0):
    return {"family": {"l": l, "d": d, "masses": list(masses), "m7": m7}}


class TestConfigFile:
    def test_round_trip_bits(self, rng):
        c = random_config(rng, 7)
        again, params = parse_config(json.loads(dump_config(c)))
        assert params is None
        np.testing.assert_array_equal(again.positions, c.positions)
        np.testing.assert_array_equal(again.masses, c.masses)
        a, b = dziobek.all_residuals(c), dziobek.all_residuals(again)
        np.testing.assert_array_equal(a.residuals, b.residuals)

    def test_family(self):
        c, p = parse_config(family_doc(SQRT2, m7=2.0))
        assert p == TwistedPrismParams.equal(SQRT2, 1.0, 1.0, 2.0)
        np.testing.assert_array_equal(c.positions, build(p).positions)

    @pytest.mark.parametrize(
        "doc",
        [
            [],
            {},
            {"bodies": [], "family": {}},
            {"bodies": []},
            {"bodies": [{"mass": 1}]},
            {"bodies": [{"mass": "x", "position": [0, 0, 0]}]},
            {"bodies": [{"mass": -1, "position": [0, 0, 0]}]},
            {"bodies": [{"mass": 1, "position": [0, 0]}]},
            {"family": {"l": 1}},
            {"family": {"l": 1, "d": 1, "masses": [1, 1]}},
            {"family": {"l": -1, "d": 1}},
            {"family": {"l": 1, "d": 1, "q": 3}},
        ],
    )
    def test_schema_errors(self, doc):
        with pytest.raises(ConfigFileError):
            parse_config(doc)

    def test_collision_is_degenerate(self):
        doc = {"bodies": [{"mass": 1, "position": [0, 0, 0]}, {"mass": 1, "position": [0, 0, 0]}]}
        with pytest.raises(DegenerateConfigurationError):
            parse_config(doc)

    def test_load_bad_json(self, tmp_path):
        with pytest.raises(ConfigFileError):
            load_config(write(tmp_path, "{not json"))


class TestVerify:
    def test_octahedron_is_central(self, runner, tmp_path):
        path = write(tmp_path, family_doc(SQRT2, m7=2.0))
        r = runner.invoke(main, ["verify", path])
        assert r.exit_code == 0, r.output
        out = kv(r.stdout)
        assert out["central"] == "true"
        assert out["regular_octahedron"] == "true"
        assert out["dziobek_equations"] == "105"
        assert float(out["max_residual"]) <= 1e-12

    def test_off_locus_not_central(self, runner, tmp_path):
        r = runner.invoke(main, ["verify", write(tmp_path, family_doc(2.0))])
        assert r.exit_code == 1
        assert kv(r.stdout)["central"] == "false"

    def test_flags_instead_of_file(self, runner):
        r = runner.invoke(main, ["verify", "--l", repr(SQRT2), "--d", "1", "--m7", "5"])
        assert r.exit_code == 0

    def test_malformed_json(self, runner, tmp_path):
        assert runner.invoke(main, ["verify", write(tmp_path, "{oops")]).exit_code == 2

    def test_missing_file(self, runner, tmp_path):
        assert runner.invoke(main, ["verify", str(tmp_path / "nope.json")]).exit_code == 2

    def test_collision_exit_3(self, runner, tmp_path):
        doc = {"bodies": [{"mass": 1, "position": [0, 0, 0]}] * 5}
        assert runner.invoke(main, ["verify", write(tmp_path, doc)]).exit_code == 3

    def test_planar_exit_3(self, runner, tmp_path):
        doc = {"bodies": [{"mass": 1, "position": p} for p in
                          ([1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0])]}
        assert runner.invoke(main, ["verify", write(tmp_path, doc)]).exit_code == 3

    def test_csv_row(self, runner, tmp_path):
        r = runner.invoke(main, ["verify", "--csv", write(tmp_path, family_doc(SQRT2))])
        rows = list(csv.DictReader(io.StringIO(r.stdout)))
        assert len(rows) == 1
        assert list(rows[0]) == ["lambda", "U", "I", "max_residual"] + [f"res_{k}" for k in range(1, 8)]

    def test_report_out(self, runner, tmp_path):
        out = tmp_path / "report.csv"
        r = runner.invoke(main, ["verify", "--out", str(out), write(tmp_path, family_doc(2.0))])
        assert r.exit_code == 1
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 105
        assert list(rows[0]) == ["i", "j", "h", "residual", "normalized_residual", "class_id"]
        assert (rows[0]["i"], rows[0]["j"], rows[0]["h"]) == ("1", "2", "3")

    def test_tol_controls_verdict(self, runner, tmp_path):
        path = write(tmp_path, family_doc(1.4142135))
        assert runner.invoke(main, ["verify", path]).exit_code == 1
        assert runner.invoke(main, ["--tol", "1e-3", "verify", path]).exit_code == 0
        assert runner.invoke(main, ["verify", "--tol", "1e-3", path]).exit_code == 0


class TestSolve:
    def test_d1(self, runner):
        r = runner.invoke(main, ["solve", "--d", "1"])
        assert r.exit_code == 0
        assert abs(float(kv(r.stdout)["l_over_d"]) - SQRT2) < 1e-10

    def test_d0_usage(self, runner):
        assert runner.invoke(main, ["solve", "--d", "0"]).exit_code == 2

    def test_csv_single_row(self, runner):
        r = runner.invoke(main, ["solve", "--d", "1", "--csv"])
        lines = r.stdout.strip().splitlines()
        assert len(lines) == 2
        row = next(csv.DictReader(io.StringIO(r.stdout)))
        assert abs(float(row["l_over_d"]) - SQRT2) < 1e-10

    def test_bracket_failure(self, runner):
        assert runner.invoke(main, ["solve", "--d", "1", "--bracket", "2,3"]).exit_code == 3


class TestNullspace:
    def test_locus(self, runner):
        r = runner.invoke(main, ["nullspace", "--l", repr(SQRT2), "--d", "1"])
        assert kv(r.stdout)["nullspace_dim"] == "2"

    def test_truncated_l_needs_looser_tol(self, runner):
        # 1.41421356 misses sqrt(2) by 2.4e-9, which lifts sigma_6 to ~4e-9 sigma_max.
        r = runner.invoke(main, ["nullspace", "--l", "1.41421356", "--d", "1"])
        assert kv(r.stdout)["nullspace_dim"] == "1"
        r = runner.invoke(main, ["nullspace", "--l", "1.41421356", "--d", "1", "--tol", "1e-8"])
        assert kv(r.stdout)["nullspace_dim"] == "2"

    def test_generic(self, runner):
        r = runner.invoke(main, ["nullspace", "--l", "2", "--d", "1"])
        out = kv(r.stdout)
        assert out["nullspace_dim"] == "1"
        assert [float(x) for x in out["basis_1"].split()] == [0, 0, 0, 0, 0, 0, 1]

    def test_csv(self, runner):
        r = runner.invoke(main, ["nullspace", "--l", "2", "--d", "1", "--csv"])
        rows = list(csv.DictReader(io.StringIO(r.stdout)))
        assert sum(row["kind"] == "sigma" for row in rows) == 7
        assert sum(row["kind"] == "basis" for row in rows) == 1


class TestClassify:
    def test_27(self, runner):
        r = runner.invoke(main, ["classify", "--probes", "10", "--seed", "7"])
        out = kv(r.stdout)
        assert out["seed"] == "7"
        assert out["zero_count"] == "27"
        assert out["missing_from_published"] == "none" and out["extra_vs_published"] == "none"

    def test_equal_masses_report(self, runner):
        r = runner.invoke(main, ["classify", "--equal-masses"])
        out = kv(r.stdout)
        assert out["zero_count"] == "39"
        assert out["equal_mass_chain_measured_verified"] == "true"
        assert out["axial_chain_measured_verified"] == "true"
        assert "f_254 position=33 stated=-0.5 measured=1 duplicate candidate=f_354" in r.stdout

    def test_seed_determinism(self, runner):
        a = runner.invoke(main, ["classify", "--seed", "3", "--equal-masses"]).stdout
        b = runner.invoke(main, ["--seed", "3", "classify", "--equal-masses"]).stdout
        assert a == b

    def test_csv(self, runner):
        r = runner.invoke(main, ["classify", "--csv"])
        rows = list(csv.DictReader(io.StringIO(r.stdout)))
        assert len(rows) == 27

    def test_too_few_probes(self, runner):
        assert runner.invoke(main, ["classify", "--probes", "2"]).exit_code == 2


class TestSweep:
    def test_grid(self, runner, tmp_path):
        out = tmp_path / "sweep.csv"
        r = runner.invoke(main, ["sweep", "--ratio", "1.0:2.0:0.05", "--d", "1", "--out", str(out)])
        assert r.exit_code == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 21
        best = min(rows, key=lambda row: float(row["max_cc_residual"]))
        assert float(best["l_over_d"]) == 1.4
        assert "refined_root_l_over_d=1.41421356237309" in r.stderr

    def test_bad_ratio(self, runner):
        assert runner.invoke(main, ["sweep", "--ratio", "1:2"]).exit_code == 2

    def test_deterministic(self, runner):
        args = ["sweep", "--ratio", "1.3:1.5:0.1"]
        assert runner.invoke(main, args).stdout == runner.invoke(main, args).stdout


class TestCollapse:
    def test_octahedron(self, runner):
        r = runner.invoke(main, ["collapse", "--l", repr(SQRT2), "--d", "1", "--m7", "1", "--every", "500"])
        assert r.exit_code == 0, r.output
        summary = kv(r.stderr)
        assert float(summary["max_shape_deviation"]) < 1e-6
        assert float(summary["phi_oracle_max_gap"]) < 1e-8
        rows = list(csv.DictReader(io.StringIO(r.stdout)))
        assert list(rows[0]) == ["t", "phi", "shape_deviation", "energy_rel_drift"]

    def test_non_cc_refused(self, runner):
        r = runner.invoke(main, ["collapse", "--l", "2", "--d", "1"])
        assert r.exit_code == 1

    def test_non_cc_allowed(self, runner):
        r = runner.invoke(main, ["collapse", "--l", "2", "--d", "1", "--allow-non-cc", "--every", "1000"])
        assert r.exit_code == 0
        assert float(kv(r.stderr)["max_shape_deviation"]) > 1e-3
