"""End-to-end tests for the command-line interface.

Runs main() in-process with temporary output directories; simulation
durations are shortened via --set overrides to keep the suite quick.
"""

import json

import pytest

import vo2osc.cli as cli
from vo2osc.analysis import Regime
from vo2osc.circuit import CouplingKind
from vo2osc.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_RUNTIME,
    UsageError,
    _parse_coupling_flag,
    _parse_range,
    main,
    parse_si,
)
from vo2osc.sweep import SweepPoint, SweepResult


class TestParseSi:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("42", 42.0),
            ("2.4k", 2400.0),
            ("100n", 1e-7),
            ("1u", 1e-6),
            ("1μ", 1e-6),
            ("5p", 5e-12),
            ("-1.5m", -1.5e-3),
            ("3M", 3e6),
            ("2G", 2e9),
            ("1e3", 1000.0),
            ("1.2e-7", 1.2e-7),
            (" 10k ", 1e4),
        ],
    )
    def test_values(self, text, expected):
        assert parse_si(text) == pytest.approx(expected)

    @pytest.mark.parametrize("text", ["abc", "1q", "", "k", "1 2"])
    def test_rejects_garbage(self, text):
        with pytest.raises(UsageError):
            parse_si(text)


class TestParseRange:
    def test_log(self):
        vals = _parse_range("1k:10k:log3")
        assert vals == pytest.approx([1e3, 10 ** 3.5, 1e4])

    def test_lin(self):
        assert _parse_range("1:3:lin3") == pytest.approx([1.0, 2.0, 3.0])

    def test_comma_list_with_suffixes(self):
        assert _parse_range("2.4k,10k") == pytest.approx([2400.0, 10000.0])

    @pytest.mark.parametrize(
        "spec", ["1k:10k:geo3", "10k:1k:log3", "0:1:lin3", "1:2:log0", ",", ""]
    )
    def test_rejects_bad_specs(self, spec):
        with pytest.raises(UsageError):
            _parse_range(spec)


class TestParseCoupling:
    def test_resistive(self):
        kind, value = _parse_coupling_flag("r:2.4k")
        assert kind is CouplingKind.RESISTIVE and value == 2400.0

    def test_capacitive(self):
        kind, value = _parse_coupling_flag("c:100n")
        assert kind is CouplingKind.CAPACITIVE and value == pytest.approx(1e-7)

    @pytest.mark.parametrize("text", ["x:1k", "r=2k", "2.4k"])
    def test_rejects(self, text):
        with pytest.raises(UsageError):
            _parse_coupling_flag(text)


class TestConfigErrors:
    def test_no_source(self, tmp_path):
        assert main(["single", "--out-dir", str(tmp_path)]) == EXIT_CONFIG

    def test_both_sources(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text("{}")
        rc = main(["single", "--preset", "paper-calibrated",
                   "--config", str(cfg), "--out-dir", str(tmp_path)])
        assert rc == EXIT_CONFIG

    def test_unknown_preset(self, tmp_path):
        rc = main(["single", "--preset", "nope", "--out-dir", str(tmp_path)])
        assert rc == EXIT_CONFIG

    def test_missing_config_file(self, tmp_path):
        rc = main(["single", "--config", str(tmp_path / "absent.json"),
                   "--out-dir", str(tmp_path)])
        assert rc == EXIT_CONFIG

    def test_single_rejects_pair_config(self, tmp_path):
        rc = main(["single", "--preset", "paper-pair", "--out-dir", str(tmp_path)])
        assert rc == EXIT_CONFIG

    def test_coupled_rejects_single_config(self, tmp_path):
        rc = main(["coupled", "--preset", "paper-calibrated",
                   "--out-dir", str(tmp_path)])
        assert rc == EXIT_CONFIG

    def test_unknown_gait(self, tmp_path):
        assert main(["cpg", "gallop", "--out-dir", str(tmp_path)]) == EXIT_CONFIG

    def test_bad_range(self, tmp_path):
        rc = main(["sweep", "r", "10k:1k:log3", "--preset", "paper-pair",
                   "--out-dir", str(tmp_path)])
        assert rc == EXIT_CONFIG

    def test_bad_set_syntax(self, tmp_path):
        rc = main(["single", "--preset", "paper-calibrated",
                   "--set", "sim.duration", "--out-dir", str(tmp_path)])
        assert rc == EXIT_CONFIG

    def test_bad_seed_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("VO2_OSC_SEED", "not-a-number")
        rc = main(["single", "--preset", "paper-calibrated",
                   "--set", "sim.duration=0.03", "--out-dir", str(tmp_path)])
        assert rc == EXIT_CONFIG

    def test_unknown_subcommand(self):
        assert main(["frobnicate"]) == EXIT_CONFIG

    def test_version_exits_zero(self):
        assert main(["--version"]) == 0


def run_single(out_dir, extra=()):
    return main([
        "single", "--preset", "paper-calibrated",
        "--set", "sim.duration=0.03", "--out-dir", str(out_dir), *extra,
    ])


SINGLE_ARTIFACTS = [
    "waveform.csv", "events.csv", "spectrum.csv",
    "peak_metrics.json", "dynamic_iv.csv", "manifest.json",
]


class TestSingle:
    def test_artifacts_and_manifest(self, tmp_path):
        assert run_single(tmp_path) == EXIT_OK
        for name in SINGLE_ARTIFACTS:
            assert (tmp_path / name).exists(), name
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["command"] == "single"
        assert sorted(manifest["outputs"]) == sorted(SINGLE_ARTIFACTS[:-1])
        for name in manifest["outputs"]:
            assert (tmp_path / name).exists()
        assert manifest["config"]["sim"]["duration"] == 0.03

    def test_peak_metrics_sane(self, tmp_path):
        run_single(tmp_path)
        pm = json.loads((tmp_path / "peak_metrics.json").read_text())
        assert 5000.0 < pm["f1_hz"] < 9000.0
        assert pm["rel_fluct"] == pytest.approx(pm["delta_f1_hz"] / pm["f1_hz"])

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_single(a) == EXIT_OK
        assert run_single(b) == EXIT_OK
        for name in SINGLE_ARTIFACTS[:-1]:  # manifest carries wall-clock time
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_seed_env_changes_output(self, tmp_path, monkeypatch):
        a, b = tmp_path / "a", tmp_path / "b"
        run_single(a)
        monkeypatch.setenv("VO2_OSC_SEED", "99")
        run_single(b)
        assert json.loads((b / "manifest.json").read_text())["seed"] == 99
        assert (a / "waveform.csv").read_bytes() != (b / "waveform.csv").read_bytes()

    def test_set_override_echoed(self, tmp_path):
        assert run_single(tmp_path, extra=["--set", "r_s=49k"]) == EXIT_OK
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["config"]["oscillators"][0]["r_s"] == 49000.0


@pytest.fixture(scope="module")
def coupled_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("coupled")
    rc = main([
        "coupled", "--preset", "paper-pair", "--coupling", "r:2.4k",
        "--set", "sim.duration=0.06", "--out-dir", str(out),
    ])
    assert rc == EXIT_OK
    return out


class TestCoupledAndAnalyze:
    def test_artifacts(self, coupled_dir):
        for name in ["waveform.csv", "events.csv", "spectrum_osc0.csv",
                     "spectrum_osc1.csv", "sync_report.json",
                     "phase_difference.csv", "phase_portrait.csv",
                     "manifest.json"]:
            assert (coupled_dir / name).exists(), name

    def test_strong_resistive_coupling_synchronizes(self, coupled_dir):
        report = json.loads((coupled_dir / "sync_report.json").read_text())
        assert report["regime"] == Regime.SYNCHRONIZED.name
        assert len(report["f1_per_osc"]) == 2

    def test_two_coupling_flags_rejected(self, tmp_path):
        rc = main([
            "coupled", "--preset", "paper-pair",
            "--coupling", "r:2.4k", "--coupling", "c:100n",
            "--out-dir", str(tmp_path),
        ])
        assert rc == EXIT_CONFIG

    def test_analyze_round_trip(self, coupled_dir, tmp_path):
        rc = main([
            "analyze", str(coupled_dir / "waveform.csv"),
            "--events", str(coupled_dir / "events.csv"),
            "--out-dir", str(tmp_path),
        ])
        assert rc == EXIT_OK
        report = json.loads((tmp_path / "sync_report.json").read_text())
        original = json.loads((coupled_dir / "sync_report.json").read_text())
        assert report["regime"] == original["regime"]
        pm = json.loads((tmp_path / "peak_metrics_osc0.json").read_text())
        assert 5000.0 < pm["f1_hz"] < 9000.0

    def test_analyze_missing_file(self, tmp_path):
        rc = main(["analyze", str(tmp_path / "absent.csv"),
                   "--out-dir", str(tmp_path)])
        assert rc == EXIT_CONFIG


class TestSweepCommand:
    def test_mostly_failed_points_exit_runtime(self, tmp_path, monkeypatch):
        def fake_sweep(net, values, sim, jobs=None):
            pts = [
                SweepPoint(v, [0.0, 0.0], 0.0, None, error="boom")
                for v in values
            ]
            return SweepResult(CouplingKind.RESISTIVE, list(values), pts, {})

        monkeypatch.setattr(cli, "sweep_r", fake_sweep)
        rc = main(["sweep", "r", "1k,2k,3k", "--preset", "paper-pair",
                   "--out-dir", str(tmp_path)])
        assert rc == EXIT_RUNTIME
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert len(manifest["warnings"]) == 3

    def test_real_short_sweep(self, tmp_path):
        rc = main([
            "sweep", "r", "2.4k,10k", "--preset", "paper-pair",
            "--set", "sim.duration=0.05", "--jobs", "2",
            "--out-dir", str(tmp_path),
        ])
        assert rc == EXIT_OK
        lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
        assert len(lines) == 3
        bounds = json.loads((tmp_path / "boundaries.json").read_text())
        assert bounds["kind"] == "resistive"
        assert bounds["zone_boundaries"]["sync_onset"] == pytest.approx(2400.0)


class TestCpgCommand:
    def test_trot_run(self, tmp_path):
        rc = main(["cpg", "trot", "--set", "sim.duration=0.15",
                   "--out-dir", str(tmp_path)])
        assert rc == EXIT_OK
        report = json.loads((tmp_path / "gait_report.json").read_text())
        assert report["requested"] == "trot"
        assert report["classified"] == "trot"
        assert report["max_error_deg"] <= 20.0
        header = (tmp_path / "waveform.csv").read_text().splitlines()[0]
        assert header == "t,v_sense_0,v_sense_1,v_sense_2,v_sense_3"
