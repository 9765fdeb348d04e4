"""
End-to-end tests for the command-line interface.
"""

import csv
import json
import logging
from pathlib import Path

import pytest

from app.main import build_parser, main


def write_config(path, document: dict):
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


def read_rows(path) -> list[dict]:
    with path.open(newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


CONFIGS = Path(__file__).resolve().parent.parent / "configs"

PUMP = {
    "kind": "A",
    "f": "identity",
    "g_tau": 0.001,
    "K": 0,
    "atom": {"rho_aa": 0.5, "rho_bb": 0.5, "coh_mag": 0.5, "phi": 0.0},
    "cutoff": 16,
}


class TestStatesCommand:
    """Test tabulation of analytic states."""

    def test_writes_csv(self, output_dir):
        """Test a coherent state written to a file."""
        out = output_dir / "nlcs.csv"
        code = main(
            ["states", "--family", "nlcs", "--f", "identity", "--z", "0.5", "--cutoff", "32"]
            + ["--out", str(out)]
        )
        rows = read_rows(out)

        assert code == 0
        assert len(rows) == 33
        assert list(rows[0]) == ["n", "re", "im", "probability"]
        assert sum(float(row["probability"]) for row in rows) == pytest.approx(1.0, abs=1e-14)

    def test_stdout(self, capsys):
        """Test output to stdout when --out is omitted."""
        assert main(["states", "--family", "even_nlcs", "--z", "0", "--cutoff", "4"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "n,re,im,probability"
        assert lines[1].startswith("0,1,0,1")

    def test_divergent_series(self, capsys):
        """Test a non-normalizable state exits with status 3."""
        code = main(["states", "--family", "nlcs", "--f", "inverse_sqrt", "--z", "2", "--out", "unused.csv"])
        assert code == 3
        assert capsys.readouterr().err.startswith("error:")

    def test_bad_nonlinearity(self, capsys):
        """Test a malformed --f exits with status 2."""
        assert main(["states", "--family", "nlcs", "--f", "table:1,0,1"]) == 2
        assert "zero" in capsys.readouterr().err

    def test_bad_amplitude(self):
        """Test an unparsable --z."""
        assert main(["states", "--family", "nlcs", "--z", "big"]) == 2


class TestRunCommand:
    """Test experiment runs from JSON documents."""

    def test_no_atoms(self, tmp_path, output_dir):
        """Test K = 0 leaves the vacuum on its target."""
        config = write_config(tmp_path / "config.json", {"pump": PUMP})
        code = main(["run", "--config", str(config), "--out", str(output_dir)])
        summary = json.loads((output_dir / "summary.json").read_text(encoding="utf-8"))

        assert code == 0
        assert len(summary["runs"]) == 1
        assert summary["runs"][0]["final_fidelity"] == pytest.approx(1.0)
        assert (output_dir / "run_0000.csv").exists()
        assert (output_dir / "state_0000.csv").exists()

    def test_sweep(self, tmp_path, output_dir):
        """Test one summary entry and CSV per sweep point, in order."""
        document = {"pump": {**PUMP, "K": 20}, "sweep": {"g_tau": [0.01, 0.001], "kind": ["A", "B"]}}
        config = write_config(tmp_path / "config.json", document)
        code = main(["run", "--config", str(config), "--out", str(output_dir), "--workers", "2"])
        summary = json.loads((output_dir / "summary.json").read_text(encoding="utf-8"))

        assert code == 0
        assert [run["index"] for run in summary["runs"]] == [0, 1, 2, 3]
        assert [run["kind"] for run in summary["runs"]] == ["A", "B", "A", "B"]
        records = read_rows(output_dir / "run_0003.csv")
        assert [int(row["k"]) for row in records] == list(range(21))

    def test_coherent_limit_config(self, output_dir):
        """Test the shipped weak-coupling document reaches the coherent state -0.5i."""
        code = main(["run", "--config", str(CONFIGS / "coherent_limit.json"), "--out", str(output_dir)])
        run = json.loads((output_dir / "summary.json").read_text(encoding="utf-8"))["runs"][0]

        assert code == 0
        assert run["final_fidelity"] >= 0.999
        assert run["drive_z"] == pytest.approx([0.0, -0.5])
        assert run["weak_coupling"]["passed"]

    def test_repeat_runs_identical(self, tmp_path):
        """Test identical documents give byte-identical files."""
        config = CONFIGS / "two_photon_sweep.json"
        first, second = tmp_path / "first", tmp_path / "second"
        assert main(["run", "--config", str(config), "--out", str(first)]) == 0
        assert main(["run", "--config", str(config), "--out", str(second), "--workers", "3"]) == 0
        names = sorted(path.name for path in first.iterdir())
        assert names == sorted(path.name for path in second.iterdir())
        for name in names:
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_invalid_table(self, tmp_path, capsys):
        """Test a zero entry in a tabulated f exits with status 2."""
        document = {"pump": {**PUMP, "f": "table:1,0,1"}}
        config = write_config(tmp_path / "config.json", document)
        assert main(["run", "--config", str(config)]) == 2
        assert capsys.readouterr().err.startswith("error:")

    def test_missing_config(self, tmp_path):
        """Test an unreadable document."""
        assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2

    def test_leakage_exit_code(self, tmp_path, output_dir):
        """Test a leakage breach exits with status 4."""
        pump = {**PUMP, "g_tau": 0.3, "K": 200, "cutoff": 8, "atom": {"rho_aa": 1.0, "rho_bb": 0.0}}
        config = write_config(tmp_path / "config.json", {"pump": pump})
        assert main(["run", "--config", str(config), "--out", str(output_dir)]) == 4


class TestVerifyCommand:
    """Test the invariant suite from the command line."""

    def test_small_cutoff_passes(self, capsys):
        """Test every check passes at the smallest cutoff."""
        assert main(["verify", "--cutoff", "4"]) == 0
        assert "FAIL" not in capsys.readouterr().out

    def test_fault_injection(self, capsys):
        """Test a perturbed strength table makes the duality rows fail."""
        assert main(["verify", "--cutoff", "8", "--fault-inject"]) == 1
        failed = [line for line in capsys.readouterr().out.splitlines() if line.startswith("FAIL")]
        assert failed
        assert all("duality" in line for line in failed)

    def test_cutoff_too_small(self):
        """Test cutoffs below the two-photon minimum."""
        assert main(["verify", "--cutoff", "3"]) == 2


def test_subcommand_required():
    """Test the parser rejects a missing subcommand."""
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


class TestLogging:
    """Test the log level chosen for a command."""

    def test_default_level_is_info(self):
        """Test per-atom DEBUG lines are off unless asked for."""
        assert main(["states", "--family", "nlcs", "--z", "0", "--cutoff", "4"]) == 0
        assert logging.getLogger().level == logging.INFO

    def test_verbose_flag(self):
        """Test -v switches to DEBUG."""
        assert main(["-v", "states", "--family", "nlcs", "--z", "0", "--cutoff", "4"]) == 0
        assert logging.getLogger().level == logging.DEBUG
