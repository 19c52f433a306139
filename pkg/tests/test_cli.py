"""End-to-end command runs: exit codes, reports, files, determinism."""

import copy
import json
import os

import pytest
import yaml

from fracturelab.cli import main

BAR = {
    "schema": "fracturelab/1",
    "mesh": {"kind": "interval", "length": 1.0, "segments": 8},
    "crack": {"nodes": [4]},
    "material": {"kind": "antiplane", "mu": 1.0},
    "surface": {"kind": "griffith", "G": 1.0},
    "boundary": {"expr": "where(x > 0.5, t, 0.0)", "breaks": True},
    "state": {"kind": "solve", "t": 1.8},
}


def write_cfg(tmp_path, doc, name="scenario.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(doc))
    return str(p)


def overdriven_tear(out_dir: str) -> dict:
    """Torn membrane pushed far past equilibrium: the bulk quotient around
    the tip then exceeds the shell quotient, so the ordering check fails."""
    ny = 33
    cols = range(17)   # crack to x = 0.5 on the resolution-32 grid
    return {
        "schema": "fracturelab/1",
        "mesh": {"kind": "rect", "width": 2.0, "height": 1.0,
                 "resolution": 32},
        "crack": {"nodes": [c * ny + 16 for c in cols]},
        "material": {"kind": "antiplane", "mu": 1.0},
        "surface": {"kind": "griffith", "G": 1.0},
        "boundary": {"expr": "t * sign(y - 0.5)", "breaks": True},
        "state": {"kind": "solve", "t": 3.0},
        "measures": {"radii": [0.225, 0.18, 0.144]},
        "output": {"dir": out_dir},
    }


class TestSolve:
    def test_bar_run_emits_report_and_artifacts(self, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = dict(BAR, output={"dir": str(out)})
        code = main(["solve", "--config", write_cfg(tmp_path, cfg)])
        assert code == 0
        stdout = capsys.readouterr().out
        assert "PASS solve.residual" in stdout
        assert "PASS solve.crack-faces" in stdout
        assert "report:" in stdout
        for name in ("report.json", "energies.csv", "state.csv",
                     "state.txt", "state.png"):
            assert (out / name).exists(), name

    def test_report_carries_energy_and_hash(self, tmp_path):
        out = tmp_path / "out"
        path = write_cfg(tmp_path, dict(BAR, output={"dir": str(out)}))
        assert main(["solve", "--config", path]) == 0
        doc = json.loads((out / "report.json").read_text())
        assert doc["command"] == "solve"
        from fracturelab.config import load_config
        assert doc["config_sha256"] == load_config(path).sha256
        energy = doc["results"]["energy"]
        # broken bar above threshold: all surface, no bulk
        assert energy["elastic"] < 1e-20
        assert energy["surface"] == 1.0
        header, row = (out / "energies.csv").read_text().splitlines()
        assert header == "elastic,surface,total"
        assert float(row.split(",")[2]) == 1.0

    def test_out_flag_overrides_the_scenario_directory(self, tmp_path):
        cfg_dir = tmp_path / "ignored"
        override = tmp_path / "chosen"
        path = write_cfg(tmp_path, dict(BAR, output={"dir": str(cfg_dir)}))
        assert main(["solve", "--config", path,
                     "--out", str(override)]) == 0
        assert (override / "report.json").exists()
        assert not cfg_dir.exists()


class TestMeasures:
    def test_overdriven_state_fails_the_ordering_check(self, tmp_path,
                                                       capsys):
        out = tmp_path / "out"
        path = write_cfg(tmp_path, overdriven_tear(str(out)))
        code = main(["measures", "--config", path])
        assert code == 1
        stdout = capsys.readouterr().out
        assert "FAIL chain.ce-le-cf" in stdout
        doc = json.loads((out / "report.json").read_text())
        verdicts = {v["name"]: v["pass"] for v in doc["verdicts"]}
        assert verdicts["chain.er-le-ce"] is True
        assert verdicts["chain.ce-le-cf"] is False
        for name in ("er_family.csv", "ce_sweep.csv", "cf_sweep.csv",
                     "measures.png"):
            assert (out / name).exists(), name

    def test_both_shell_normalizations_reported(self, tmp_path):
        out = tmp_path / "out"
        path = write_cfg(tmp_path, overdriven_tear(str(out)))
        main(["measures", "--config", path])
        doc = json.loads((out / "report.json").read_text())
        norms = doc["results"]["cf_normalizations"]
        assert norms["raw_shell_quotient"] == pytest.approx(
            2.0 * 3.141592653589793 * norms["per_tip"])
        assert "2*pi" in norms["note"]


class TestVerify:
    def test_hypotheses_suite_passes(self, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = {"schema": "fracturelab/1",
               "verify": {"suites": ["hypotheses"], "pairs": 10},
               "output": {"dir": str(out)}}
        code = main(["verify", "--config", write_cfg(tmp_path, cfg),
                     "--seed", "1"])
        assert code == 0
        stdout = capsys.readouterr().out
        assert "PASS hypotheses.subadditive" in stdout
        assert "PASS hypotheses.shell-segment" in stdout
        doc = json.loads((out / "report.json").read_text())
        assert doc["results"]["hypotheses"]["h1_failures"] == 0


class TestExitTwo:
    def test_missing_config(self, capsys):
        assert main(["solve", "--config", "/no/such.yaml"]) == 2
        assert "config error" in capsys.readouterr().err

    def test_unknown_key_names_the_field(self, tmp_path, capsys):
        bad = dict(BAR, output={"dir": str(tmp_path / "o")})
        bad["mesh"] = dict(bad["mesh"], frobnicate=1)
        assert main(["solve", "--config", write_cfg(tmp_path, bad)]) == 2
        assert "mesh.frobnicate" in capsys.readouterr().err

    def test_wrong_schema(self, tmp_path, capsys):
        bad = dict(BAR, schema="fracturelab/9")
        assert main(["solve", "--config", write_cfg(tmp_path, bad)]) == 2
        assert "schema" in capsys.readouterr().err

    def test_invalid_yaml(self, tmp_path, capsys):
        p = tmp_path / "broken.yaml"
        p.write_text("mesh: [unclosed\n  - nope")
        assert main(["solve", "--config", str(p)]) == 2
        assert "not valid YAML" in capsys.readouterr().err

    def test_hostile_expression_rejected(self, tmp_path, capsys):
        bad = copy.deepcopy(BAR)
        bad["boundary"]["expr"] = "__import__('os').system('true')"
        bad["output"] = {"dir": str(tmp_path / "o")}
        assert main(["solve", "--config", write_cfg(tmp_path, bad)]) == 2
        assert "unknown names" in capsys.readouterr().err

    def test_nonpositive_threads(self, tmp_path, capsys):
        path = write_cfg(tmp_path, dict(BAR,
                                        output={"dir": str(tmp_path / "o")}))
        assert main(["solve", "--config", path, "--threads", "0"]) == 2
        assert "--threads" in capsys.readouterr().err


class TestDeterminism:
    def _report_sans_timings(self, out):
        doc = json.loads((out / "report.json").read_text())
        doc.pop("timings", None)
        return doc

    def test_solve_outputs_are_byte_identical(self, tmp_path):
        path = write_cfg(tmp_path, dict(BAR, output={"dir": "unused"}))
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["solve", "--config", path, "--out", str(a)]) == 0
        assert main(["solve", "--config", path, "--out", str(b)]) == 0
        for name in ("energies.csv", "state.csv", "state.txt"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name
        assert self._report_sans_timings(a) == self._report_sans_timings(b)

    def test_verify_is_seed_deterministic(self, tmp_path):
        cfg = {"schema": "fracturelab/1",
               "verify": {"suites": ["hypotheses"], "pairs": 5},
               "output": {"dir": "unused"}}
        path = write_cfg(tmp_path, cfg)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["verify", "--config", path, "--out", str(a),
                     "--seed", "7"]) == 0
        assert main(["verify", "--config", path, "--out", str(b),
                     "--seed", "7"]) == 0
        assert self._report_sans_timings(a) == self._report_sans_timings(b)
