import json
import math
from pathlib import Path

import numpy as np
import pytest

from ryddephase.cli import ConfigError, main, parse_config

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

MINIMAL = {
    "ensemble": {"n_atoms": 20, "box_side_um": 60.0, "seed": 7},
    "schedule": {
        "cycles": [
            {"s_n": 100, "p_n": 100, "p_j": 0.5, "delta_t_us": 1.0, "c3": 2.0e5}
        ]
    },
    "grid": {"start_us": 0.0, "stop_us": 2.0, "points": 5},
}


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def test_minimal_config_fills_defaults():
    cfg = parse_config(json.dumps(MINIMAL))
    assert cfg.ensemble.min_separation == 0.1
    assert cfg.realizations == 100
    assert cfg.mode == "analytic"
    assert cfg.output_format == "csv"
    cyc = cfg.schedule.cycles[0]
    assert cyc.microwave.rabi == 10.0
    assert cyc.microwave.polarization == "pi"
    assert cyc.microwave.pulse_model == "instantaneous"
    assert cyc.channel.c3 == 2.0e5


def test_unknown_keys_rejected_with_path():
    bad = dict(MINIMAL)
    bad["extra_knob"] = 1
    with pytest.raises(ConfigError, match="config.extra_knob"):
        parse_config(json.dumps(bad))
    bad = json.loads(json.dumps(MINIMAL))
    bad["ensemble"]["typo"] = 2
    with pytest.raises(ConfigError, match="ensemble.typo"):
        parse_config(json.dumps(bad))


def test_invalid_json_rejected():
    with pytest.raises(ConfigError, match="invalid JSON"):
        parse_config("{not json")


def test_duplicate_p_level_rejected_with_cycle_indices():
    bad = json.loads(json.dumps(MINIMAL))
    bad["schedule"]["cycles"].append(dict(bad["schedule"]["cycles"][0]))
    with pytest.raises(ConfigError, match="cycles 0 and 1"):
        parse_config(json.dumps(bad))


def test_unresolvable_channel_rejected():
    bad = json.loads(json.dumps(MINIMAL))
    del bad["schedule"]["cycles"][0]["c3"]
    with pytest.raises(ConfigError, match="no C3"):
        parse_config(json.dumps(bad))


def test_c3_resolution_order_table_beats_model():
    cfg = json.loads(json.dumps(MINIMAL))
    del cfg["schedule"]["cycles"][0]["c3"]
    cfg["interaction"] = {
        "model": {"reference_c3": 1.0e4, "reference_n": 60},
        "table": [{"s_n": 100, "p_n": 100, "p_j": 0.5, "c3": 3.3e5}],
    }
    parsed = parse_config(json.dumps(cfg))
    assert parsed.schedule.cycles[0].channel.c3 == 3.3e5


def test_shipped_fig2_config_echoes_expected_parameters():
    cfg = parse_config((CONFIG_DIR / "fig2.json").read_text())
    assert cfg.ensemble.n_atoms == 100
    assert cfg.ensemble.box_side == 60.0
    assert cfg.scan_n == (60, 79, 100)
    assert cfg.mode == "analytic"
    # scaling model: c3(100)/c3(60) = (100/60)^4
    s60 = cfg.schedule_for_n(60).cycles[0].channel.c3
    s100 = cfg.schedule_for_n(100).cycles[0].channel.c3
    assert s100 / s60 == pytest.approx((100.0 / 60.0) ** 4, rel=1e-12)


def test_shipped_cycles_config_is_four_distinct_channels():
    text = (CONFIG_DIR / "cycles.json").read_text()
    cfg = parse_config(text, subcommand="cycles")
    keys = [c.channel.p_key for c in cfg.schedule.cycles]
    assert keys == [(100, 0.5), (99, 0.5), (100, 1.5), (99, 1.5)]
    assert all(c.delta_t == 1.0 for c in cfg.schedule.cycles)
    assert all(c.microwave.rabi == 10.0 for c in cfg.schedule.cycles)
    assert cfg.schedule.total_time == pytest.approx(4.0 * (1.0 + 0.2 * math.pi))


def test_log_grid_requires_positive_start():
    bad = json.loads(json.dumps(MINIMAL))
    bad["grid"] = {"start_us": 0.0, "stop_us": 2.0, "points": 5, "spacing": "log"}
    with pytest.raises(ConfigError, match="start_us"):
        parse_config(json.dumps(bad))


# ---------------------------------------------------------------------------
# end-to-end runs
# ---------------------------------------------------------------------------


def test_g2_trace_run_writes_csv_and_manifest(tmp_path):
    cfg = json.loads(json.dumps(MINIMAL))
    cfg["realizations"] = 3
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["g2-trace", "--config", str(path), "--out", str(out)]) == 0
    csv_path = out / "g2_trace.csv"
    assert csv_path.exists()
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "t_us,g2_mean,g2_stderr,f_mean,h_mean,n_realizations"
    assert len(lines) == 6
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == "g2-trace"
    assert len(manifest["seeds"]) == 3
    assert manifest["outputs"][0]["path"] == "g2_trace.csv"
    assert len(manifest["config_sha256"]) == 64


def test_rerun_is_byte_identical_and_respects_force(tmp_path):
    cfg = json.loads(json.dumps(MINIMAL))
    cfg["realizations"] = 2
    path = write_config(tmp_path, cfg)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["g2-trace", "--config", str(path), "--out", str(out1)]) == 0
    assert main(["g2-trace", "--config", str(path), "--out", str(out2)]) == 0
    assert (out1 / "g2_trace.csv").read_bytes() == (out2 / "g2_trace.csv").read_bytes()
    # refuse silent overwrite, then allow with --force
    assert main(["g2-trace", "--config", str(path), "--out", str(out1)]) == 1
    assert main(["g2-trace", "--config", str(path), "--out", str(out1), "--force"]) == 0


def test_threaded_run_matches_serial(tmp_path):
    cfg = json.loads(json.dumps(MINIMAL))
    cfg["realizations"] = 4
    path = write_config(tmp_path, cfg)
    out1, out2 = tmp_path / "serial", tmp_path / "par"
    assert main(["g2-trace", "--config", str(path), "--out", str(out1), "--threads", "1"]) == 0
    assert main(["g2-trace", "--config", str(path), "--out", str(out2), "--threads", "3"]) == 0
    assert (out1 / "g2_trace.csv").read_bytes() == (out2 / "g2_trace.csv").read_bytes()


def test_thread_env_variable(tmp_path, monkeypatch):
    cfg = json.loads(json.dumps(MINIMAL))
    cfg["realizations"] = 3
    path = write_config(tmp_path, cfg)
    out1, out2 = tmp_path / "env", tmp_path / "flag"
    monkeypatch.setenv("RYDDEPHASE_THREADS", "2")
    assert main(["g2-trace", "--config", str(path), "--out", str(out1)]) == 0
    monkeypatch.delenv("RYDDEPHASE_THREADS")
    assert main(["g2-trace", "--config", str(path), "--out", str(out2)]) == 0
    assert (out1 / "g2_trace.csv").read_bytes() == (out2 / "g2_trace.csv").read_bytes()


def test_seed_override_changes_data(tmp_path):
    cfg = json.loads(json.dumps(MINIMAL))
    cfg["realizations"] = 2
    path = write_config(tmp_path, cfg)
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert main(["g2-trace", "--config", str(path), "--out", str(out1)]) == 0
    assert main(["g2-trace", "--config", str(path), "--out", str(out2), "--seed", "12345"]) == 0
    assert (out1 / "g2_trace.csv").read_bytes() != (out2 / "g2_trace.csv").read_bytes()
    manifest = json.loads((out2 / "manifest.json").read_text())
    assert manifest["config"]["ensemble"]["seed"] == 12345


def test_scan_n_emits_one_trace_per_n(tmp_path):
    cfg = json.loads(json.dumps(MINIMAL))
    cfg["realizations"] = 2
    del cfg["schedule"]["cycles"][0]["c3"]
    cfg["interaction"] = {"model": {"reference_c3": 2.6e4, "reference_n": 60}}
    cfg["scan_n"] = [60, 100]
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["g2-trace", "--config", str(path), "--out", str(out)]) == 0
    assert (out / "g2_trace_n60.csv").exists()
    assert (out / "g2_trace_n100.csv").exists()


def test_json_output_mirrors_csv_columns(tmp_path):
    cfg = json.loads(json.dumps(MINIMAL))
    cfg["realizations"] = 2
    cfg["output"] = {"format": "json"}
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["g2-trace", "--config", str(path), "--out", str(out)]) == 0
    payload = json.loads((out / "g2_trace.json").read_text())
    for key in ("t_us", "g2_mean", "g2_stderr", "f_mean", "h_mean", "n_realizations"):
        assert key in payload
    assert np.array(payload["per_realization"]["g2"]).shape == (2, 5)


def test_config_error_exit_code(tmp_path):
    path = write_config(tmp_path, {"ensemble": {}})
    assert main(["g2-trace", "--config", str(path)]) == 1
    assert main(["g2-trace", "--config", str(tmp_path / "missing.json")]) == 1


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    import ryddephase.cli as cli
    from ryddephase.pairdyn import NumericsError

    def synthetic_failure(*args, **kwargs):
        raise NumericsError("synthetic propagator drift")

    monkeypatch.setattr(cli, "g2_trace", synthetic_failure)
    path = write_config(tmp_path, MINIMAL)
    assert main(["g2-trace", "--config", str(path), "--out", str(tmp_path / "o")]) == 2


def test_cycles_run_includes_reference_column(tmp_path):
    cfg = {
        "ensemble": {"n_atoms": 20, "box_side_um": 60.0, "seed": 3},
        "schedule": {
            "cycles": [
                {"s_n": 100, "p_n": 100, "p_j": 0.5, "delta_t_us": 1.0, "c3": 2.0e5},
                {"s_n": 100, "p_n": 99, "p_j": 0.5, "delta_t_us": 1.0, "c3": 1.9e5},
            ]
        },
        "realizations": 2,
    }
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["cycles", "--config", str(path), "--out", str(out)]) == 0
    lines = (out / "cycles.csv").read_text().splitlines()
    assert lines[0] == "cycle,t_us,g2_mean,g2_stderr,f_mean,h_mean,reference"
    assert len(lines) == 4  # header + cycle 0 + 2 cycles
    tau = 1.0 + 0.2 * math.pi
    last = lines[-1].split(",")
    assert float(last[1]) == pytest.approx(2 * tau)
    assert float(last[6]) == pytest.approx(math.exp(-2.0), rel=1e-12)


def test_entangle_run_csv_contract(tmp_path):
    cfg = {
        "ensemble": {"n_atoms": 15, "box_side_um": 60.0, "seed": 5},
        "entangle": {"n": 99, "c3_prime": 2.0e5, "c3_second": 1.6e5},
        "grid": {"start_us": 0.0, "stop_us": 2.0, "points": 3},
        "realizations": 2,
    }
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["entangle", "--config", str(path), "--out", str(out)]) == 0
    lines = (out / "entangle.csv").read_text().splitlines()
    assert lines[0] == "t_us,F,abs_m1,abs_m2"
    first = lines[1].split(",")
    assert float(first[1]) == pytest.approx(0.5)
    assert float(first[2]) == pytest.approx(1.0)


def test_phasematch_run_json_contract(tmp_path):
    out = tmp_path / "out"
    rc = main([
        "phasematch", "--config", str(CONFIG_DIR / "fourphoton.json"), "--out", str(out)
    ])
    assert rc == 0
    payload = json.loads((out / "phasematch.json").read_text())
    assert set(payload) >= {"dk_rad_per_um", "period_um", "coherence_time_us", "angles_deg"}
    assert payload["period_um"] == pytest.approx(48.099, abs=1e-3)
    assert payload["offaxis"]["period_um"] == "inf"
    assert payload["offaxis"]["coherence_time_us"] == "inf"
    assert np.linalg.norm(payload["offaxis"]["dk_rad_per_um"]) <= 1e-9


def test_oracle_run_report(tmp_path):
    cfg = {"n_atoms": 6, "draws": 10, "seed": 21}
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["oracle", "--config", str(path), "--out", str(out)]) == 0
    payload = json.loads((out / "oracle.json").read_text())
    assert payload["pass"] is True
    assert payload["max_rel_deviation"] <= payload["bound"] == 0.5
    assert len(payload["cases"]) == 10


def test_sweep_runs_cartesian_product(tmp_path):
    base = json.loads(json.dumps(MINIMAL))
    base["realizations"] = 2
    sweep = {
        "subcommand": "g2-trace",
        "base": base,
        "axes": [
            {"path": "ensemble.n_atoms", "values": [10, 20]},
            {"path": "schedule.cycles.0.delta_t_us", "values": [0.5]},
        ],
    }
    path = write_config(tmp_path, sweep)
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(path), "--out", str(out)]) == 0
    assert (out / "n_atoms=10__delta_t_us=0.5" / "g2_trace.csv").exists()
    assert (out / "n_atoms=20__delta_t_us=0.5" / "g2_trace.csv").exists()
    top = json.loads((out / "manifest.json").read_text())
    assert len(top["outputs"]) == 4  # two traces + two sub-manifests


def test_sweep_over_entangle(tmp_path):
    sweep = {
        "subcommand": "entangle",
        "base": {
            "ensemble": {"n_atoms": 12, "box_side_um": 60.0, "seed": 5},
            "entangle": {"n": 99, "c3_prime": 2.0e5, "c3_second": 1.6e5},
            "grid": {"start_us": 0.0, "stop_us": 1.0, "points": 2},
            "realizations": 2,
        },
        "axes": [{"path": "entangle.c3_prime", "values": [100000.0, 200000.0]}],
    }
    path = write_config(tmp_path, sweep)
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(path), "--out", str(out)]) == 0
    assert (out / "c3_prime=100000.0" / "entangle.csv").exists()
    assert (out / "c3_prime=200000.0" / "entangle.csv").exists()


def test_rerun_from_manifest_config_reproduces_outputs(tmp_path):
    cfg = json.loads(json.dumps(MINIMAL))
    cfg["realizations"] = 2
    path = write_config(tmp_path, cfg)
    out1 = tmp_path / "a"
    assert main(["g2-trace", "--config", str(path), "--out", str(out1)]) == 0
    manifest = json.loads((out1 / "manifest.json").read_text())
    replay = write_config(tmp_path, manifest["config"], name="replay.json")
    out2 = tmp_path / "b"
    assert main(["g2-trace", "--config", str(replay), "--out", str(out2)]) == 0
    assert (out1 / "g2_trace.csv").read_bytes() == (out2 / "g2_trace.csv").read_bytes()
    m2 = json.loads((out2 / "manifest.json").read_text())
    assert m2["config_sha256"] == manifest["config_sha256"]
    assert m2["outputs"][0]["sha256"] == manifest["outputs"][0]["sha256"]


def test_sweep_rejects_unknown_path(tmp_path):
    sweep = {
        "subcommand": "g2-trace",
        "base": json.loads(json.dumps(MINIMAL)),
        "axes": [{"path": "no.such.knob", "values": [1]}],
    }
    path = write_config(tmp_path, sweep)
    assert main(["sweep", "--config", str(path), "--out", str(tmp_path / "o")]) == 1
