import json
import os

import pandas as pd
import pytest
from loguru import logger

import vlcsim.main as cli
from vlcsim.constants import DEFAULT_CONFIG
from vlcsim.errors import ConfigError
from vlcsim.main import run_command
from vlcsim.scene import default_scene
from vlcsim.simconfig import config_from_dict, parse_config, serialize_config


def _small_config(tmp_path, **sections):
    data = {
        "scene": {"leds": {"grid_n": 2}, "pds": {"grid_n": 2}},
        "trace": {"ray_budget": 400, "batch_size": 200, "spot_hits_per_led": 50, "workers": 1},
        "sweeps": [
            {
                "name": "tiny",
                "target": "rx",
                "motion": "translate-x",
                "start": -0.2,
                "stop": 0.2,
                "step": 0.2,
            }
        ],
    }
    data.update(sections)
    path = tmp_path / "small.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def _read_csv(path):
    return pd.read_csv(path, comment="#")


def test_default_config_is_the_reference_link():
    config = parse_config(DEFAULT_CONFIG)

    assert config.scene.digest() == default_scene().digest()
    assert config.trace.seed == 2023
    assert config.noise.variance is None
    assert [s.name for s in config.sweeps] == [
        "rx-horizontal",
        "rx-vertical",
        "rx-rotation",
        "tx-rotation",
    ]


def test_config_load_echoes_the_half_power_angle():
    messages = []
    sink = logger.add(messages.append, level="INFO")
    try:
        parse_config(DEFAULT_CONFIG)
    finally:
        logger.remove(sink)

    assert any("half-power angle 21.1 deg" in m for m in messages)


def test_default_config_round_trips():
    with open(DEFAULT_CONFIG, "r", encoding="utf-8") as f:
        raw = json.load(f)
    assert serialize_config(parse_config(DEFAULT_CONFIG)) == raw

    empty = serialize_config(config_from_dict({}))
    assert empty == dict(raw, sweeps=[])


def test_empty_file_reports_the_position(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("", encoding="utf-8")
    with pytest.raises(ConfigError) as e:
        parse_config(str(path))
    assert (e.value.line, e.value.column) == (1, 1)

    path.write_text('{\n  "trace": {,\n}', encoding="utf-8")
    with pytest.raises(ConfigError) as e:
        parse_config(str(path))
    assert e.value.line == 2


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(str(tmp_path / "nope.json"))


@pytest.mark.parametrize(
    "data, key_path",
    [
        ({"scene": {"leds": {"size": 3}}}, "scene.leds.size"),
        ({"tracing": {}}, "tracing"),
        ({"scene": {"pds": {"element_size": -0.6}}}, "scene.pds.element_size"),
        ({"scene": {"leds": {"lambertian_exponent": 0.5}}}, "scene.leds.lambertian_exponent"),
        ({"noise": {"variance": 0.0}}, "noise.variance"),
        ({"optimizer": {"scan_span": 1.0}}, "optimizer.scan_span"),
        ({"noise": {"variance": -1e-12}}, "noise.variance"),
        ({"trace": {"ray_budget": "many"}}, "trace.ray_budget"),
        ({"processing": {"modes": ["zero_forcing"]}}, "processing.modes[0]"),
        ({"scene": {"lenses": [{"front_vertex_z": 30.0}]}}, "scene.lenses[0].center_thickness"),
        (
            {
                "scene": {
                    "lenses": [
                        {
                            "front_vertex_z": 60.0,
                            "center_thickness": 6.875,
                            "aperture_diameter": 15.0,
                            "alpha_front": 0.2,
                            "alpha_back": -0.2,
                        }
                    ]
                }
            },
            "scene.lenses[0]",
        ),
        (
            {"sweeps": [{"target": "rx", "motion": "rotate-x", "start": 1, "stop": 0, "step": 1}]},
            "sweeps[0].start",
        ),
    ],
)
def test_invalid_config_names_the_key(data, key_path):
    with pytest.raises(ConfigError) as e:
        config_from_dict(data)
    assert e.value.key_path == key_path


def test_overrides():
    config = parse_config(DEFAULT_CONFIG).override(seed=7, ray_budget=10, output_dir="elsewhere")
    assert (config.trace.seed, config.trace.ray_budget, config.output_dir) == (7, 10, "elsewhere")
    assert config.optimizer.seed == 7

    with pytest.raises(ConfigError):
        config.override(ray_budget=0)


def test_usage_errors_exit_with_one(tmp_path):
    assert run_command([]) == 1
    assert run_command(["teleport"]) == 1
    assert run_command(["trace", "--rays", "lots"]) == 1
    assert run_command(["trace", "--no_log_file", "--config", str(tmp_path / "nope.json")]) == 1


def test_run_failures_exit_with_two(monkeypatch, tmp_path):
    def boom(cfg, args):
        raise RuntimeError("tracer fell over")

    monkeypatch.setitem(cli.COMMANDS, "trace", boom)
    config = _small_config(tmp_path)
    assert run_command(["trace", "--no_log_file", "--quiet", "--config", config]) == 2


def test_trace_writes_reproducible_results(tmp_path):
    config = _small_config(tmp_path)

    def trace(out, *extra):
        argv = ["trace", "--no_log_file", "--quiet", "--config", config, "--out", str(out)]
        return run_command(argv + list(extra))

    assert trace(tmp_path / "a") == 0
    assert trace(tmp_path / "b") == 0
    assert trace(tmp_path / "c", "--workers", "2") == 0

    for name in ("H.csv", "spots.csv"):
        first = (tmp_path / "a" / name).read_bytes()
        assert first.startswith(b"# seed: 2023\n# ray_budget: 400\n# scene_digest: ")
        assert first == (tmp_path / "b" / name).read_bytes()
        assert first == (tmp_path / "c" / name).read_bytes()

    H = _read_csv(tmp_path / "a" / "H.csv")
    assert list(H.columns) == ["led", "pd0", "pd1", "pd2", "pd3"]
    assert len(H) == 4

    with open(tmp_path / "a" / "metrics.json", "r", encoding="utf-8") as f:
        metrics = json.load(f)
    assert metrics["_meta"]["seed"] == 2023
    assert metrics["config"]["trace"]["ray_budget"] == 400
    assert 0.0 <= metrics["loss_ratio"] <= 1.0


def test_seed_flag_changes_the_matrix(tmp_path):
    config = _small_config(tmp_path)
    base = ["trace", "--no_log_file", "--quiet", "--config", config]

    assert run_command(base + ["--out", str(tmp_path / "a")]) == 0
    assert run_command(base + ["--out", str(tmp_path / "b"), "--seed", "5"]) == 0

    assert (tmp_path / "b" / "H.csv").read_text().startswith("# seed: 5\n")
    assert not _read_csv(tmp_path / "a" / "H.csv").equals(_read_csv(tmp_path / "b" / "H.csv"))


def test_capacity_table_on_the_reference_link(tmp_path):
    argv = [
        "capacity",
        "--no_log_file",
        "--quiet",
        "--offset",
        "rotate-rx:0",
        "--modes",
        "all",
        "--noise_variance",
        "1e-12",
        "--rays",
        "2000",
        "--workers",
        "1",
        "--out",
        str(tmp_path),
    ]
    assert run_command(argv) == 0

    table = _read_csv(tmp_path / "capacity.csv")
    assert table.shape == (4, 18)
    assert list(table["mode"]) == [
        "no_processing",
        "combine_only",
        "sic_only",
        "combine_and_sic",
    ]
    assert set(table["offset"]) == {"rotate-rx:0"}


def test_bad_offset_is_a_usage_error(tmp_path):
    config = _small_config(tmp_path)
    argv = ["capacity", "--no_log_file", "--quiet", "--config", config, "--offset", "twist:3"]
    assert run_command(argv + ["--noise_variance", "1e-12"]) == 1
    no_noise = ["capacity", "--no_log_file", "--config", config, "--noise_variance", "0"]
    assert run_command(no_noise) == 1


def test_symbols_write_ber(tmp_path):
    config = _small_config(tmp_path)
    argv = [
        "symbols",
        "--no_log_file",
        "--quiet",
        "--config",
        config,
        "--noise_variance",
        "1e-14",
        "--n_symbols",
        "2000",
        "--out",
        str(tmp_path / "sym"),
    ]
    assert run_command(argv) == 0

    ber = _read_csv(tmp_path / "sym" / "ber.csv")
    assert list(ber.columns) == ["transmitter", "mode", "ber", "realized_sinr", "model_sinr"]
    assert list(ber["transmitter"]) == [0, 1, 2, 3]
    assert set(ber["mode"]) == {"combine_and_sic"}
    assert ber["ber"].between(0.0, 1.0).all()


def test_named_sweep(tmp_path):
    config = _small_config(tmp_path)
    base = ["sweep", "--no_log_file", "--quiet", "--config", config, "--out", str(tmp_path / "sw")]

    assert run_command(base + ["--name", "tiny"]) == 0
    frame = _read_csv(tmp_path / "sw" / "sweep.csv")
    assert len(frame) == 3
    assert set(frame["sweep"]) == {"tiny"}

    with open(tmp_path / "sw" / "sweep_summary.json", "r", encoding="utf-8") as f:
        summary = json.load(f)
    assert "tiny" in summary["sweeps"]
    assert summary["threshold"] == 10.0

    assert run_command(base + ["--name", "missing"]) == 1
    assert os.path.exists(tmp_path / "sw" / "sweep.csv")
