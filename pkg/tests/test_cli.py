"""CLI behavior: outputs, formats, exit codes, and failure cleanup."""

import pytest

from hodsim.cli import main

SCENARIO = """\
topology:
  rings: 1
  sensors_per_cell: 2
workload:
  sensors_enabled: false
sim:
  horizon_windows: 3
seed: 7
attacks:
  - kind: SlotSpoof
    start_us: 0
    end_us: 2000000
    cell: [0, 0]
    packet_count: 2
"""

DISCLAIMER = (
    "# detection thresholds, radio constants, and scenario parameters are "
    "simulator design choices"
)


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "scenario.yaml"
    p.write_text(SCENARIO, encoding="utf-8")
    return str(p)


def run_cli(cfg, out, *extra):
    return main(["--config", cfg, "--out", str(out), *extra])


class TestHappyPath:
    def test_hod_run_writes_trace_summary_metrics(self, cfg, tmp_path, capsys):
        out = tmp_path / "out"
        assert run_cli(cfg, out, "--mode", "hod", "--seed", "3") == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["metrics_hod.csv", "summary_hod_3.txt", "trace_hod_3.csv"]
        trace = (out / "trace_hod_3.csv").read_text()
        assert trace.startswith("# hodsim run\n")
        assert "# mode: hod  seed: 3  windows: 3" in trace
        assert "# scenario_hash: " in trace
        assert DISCLAIMER in trace
        assert "time_us,event,src,dst,cell,outcome" in trace
        summary = (out / "summary_hod_3.txt").read_text()
        assert DISCLAIMER in summary
        assert "alerts received at base station:" in summary
        assert "SlotViolation" in summary
        metrics = (out / "metrics_hod.csv").read_text()
        assert metrics.count("\n") == 2  # header + one seed row
        assert ",hod," not in metrics.splitlines()[0]
        stdout = capsys.readouterr().out
        assert "ran hod seed=3" in stdout
        assert "wrote 3 files" in stdout

    def test_seed_defaults_to_scenario(self, cfg, tmp_path):
        out = tmp_path / "out"
        assert run_cli(cfg, out, "--mode", "hod") == 0
        assert (out / "trace_hod_7.csv").exists()

    def test_compare_mode(self, cfg, tmp_path):
        out = tmp_path / "out"
        assert run_cli(cfg, out, "--mode", "compare", "--seed", "3") == 0
        names = {p.name for p in out.iterdir()}
        assert names == {
            "trace_hod_3.csv",
            "trace_flat_3.csv",
            "summary_hod_3.txt",
            "summary_flat_3.txt",
            "metrics_hod.csv",
            "metrics_flat.csv",
            "comparison.csv",
            "comparison.txt",
        }
        text = (out / "comparison.txt").read_text()
        assert "IDS control messages" in text
        assert "detection parity" in text
        flat_summary = (out / "summary_flat_3.txt").read_text()
        assert "local anomaly records:" in flat_summary

    def test_seed_range(self, cfg, tmp_path):
        out = tmp_path / "out"
        assert run_cli(cfg, out, "--mode", "hod", "--seeds", "4..6", "--format", "csv") == 0
        names = {p.name for p in out.iterdir()}
        assert names == {
            "trace_hod_4.csv",
            "trace_hod_5.csv",
            "trace_hod_6.csv",
            "metrics_hod.csv",
        }
        metrics = (out / "metrics_hod.csv").read_text()
        assert metrics.count("\n") == 4  # header + three seeds


class TestFormats:
    def test_csv_only(self, cfg, tmp_path):
        out = tmp_path / "out"
        assert run_cli(cfg, out, "--format", "csv", "--seed", "1") == 0
        assert all(p.suffix == ".csv" for p in out.iterdir())

    def test_text_only(self, cfg, tmp_path):
        out = tmp_path / "out"
        assert run_cli(cfg, out, "--format", "text", "--seed", "1") == 0
        assert {p.name for p in out.iterdir()} == {"summary_hod_1.txt"}


class TestExitCodes:
    def test_unknown_config_key_is_usage_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("topolgy: {}\n", encoding="utf-8")
        out = tmp_path / "out"
        assert run_cli(str(bad), out) == 2
        assert "error:" in capsys.readouterr().err
        assert not out.exists()

    def test_missing_config_file(self, tmp_path, capsys):
        assert run_cli(str(tmp_path / "absent.yaml"), tmp_path / "out") == 2
        assert "error:" in capsys.readouterr().err

    def test_bad_seed_arguments(self, cfg, tmp_path, capsys):
        out = tmp_path / "out"
        assert run_cli(cfg, out, "--seeds", "5..x") == 2
        assert run_cli(cfg, out, "--seeds", "9..5") == 2
        assert run_cli(cfg, out, "--seed", "1", "--seeds", "1..2") == 2
        capsys.readouterr()

    def test_argparse_rejections(self, cfg, tmp_path, capsys):
        assert main(["--config", cfg, "--mode", "bogus"]) == 2
        capsys.readouterr()

    def test_runtime_failure_returns_3(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        # parses cleanly, but the attack targets a cell outside the grid
        bad.write_text(
            SCENARIO.replace("cell: [0, 0]", "cell: [5, 5]"), encoding="utf-8"
        )
        out = tmp_path / "out"
        assert run_cli(str(bad), out, "--seed", "1") == 3
        assert "not in the grid" in capsys.readouterr().err
        assert not out.exists() or list(out.iterdir()) == []

    def test_partial_outputs_removed_on_failure(self, cfg, tmp_path, capsys):
        out = tmp_path / "out"
        # a directory squatting on the metrics path makes the last write fail
        (out / "metrics_hod.csv").mkdir(parents=True)
        assert run_cli(cfg, out, "--seed", "3") == 3
        assert "error:" in capsys.readouterr().err
        # the trace and summary written before the failure were cleaned up
        assert not (out / "trace_hod_3.csv").exists()
        assert not (out / "summary_hod_3.txt").exists()


class TestDeterminism:
    def test_reruns_are_byte_identical(self, cfg, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_cli(cfg, a, "--mode", "compare", "--seed", "5") == 0
        assert run_cli(cfg, b, "--mode", "compare", "--seed", "5") == 0
        for p in sorted(a.iterdir()):
            assert (b / p.name).read_bytes() == p.read_bytes(), p.name
