# -*- coding: utf-8 -*-

import json
import pathlib

import pytest

import context

import dsmve.config as m
from dsmve.errors import ConfigError, UnknownKeysError, UsageError
from dsmve.models.model_spec import OpinionParams
from dsmve.models.noise import GeneratorMethod

CONFIGS_DIR = pathlib.Path(__file__).parent.parent.parent / "configs"

SHIPPED_CONFIGS = {
    "chaos.json": "chaos",
    "custom_linear_delay.json": "simulate",
    "desk_convergence.json": "convergence",
    "reference_convergence.json": "convergence",
    "probe_maximal.json": "probe-maximal",
    "probe_moments.json": "probe-moments",
    "probe_moments_present_cubic.json": "probe-moments",
    "rough_convergence.json": "convergence",
    "simulate_opinion.json": "simulate",
}

OPINION = {"id": "opinion"}
CUSTOM_MEASURE_DIFFUSION = {
    "id": "custom",
    "terms": [{"kind": "linear", "coef": -1}],
    "diffusion": {"kind": "mean_cosine", "base": 1.0, "scale": 0.25},
}


def write_config(tmp_path, data):
    path = tmp_path / "config.json"
    path.write_text(data if isinstance(data, str) else json.dumps(data), encoding="utf-8")
    return str(path)


@pytest.mark.parametrize("name,command", sorted(SHIPPED_CONFIGS.items()))
def test_shipped_configs_parse(name, command):
    config = m.parse_config(str(CONFIGS_DIR / name), command)
    assert config.options.seed == m.DEFAULT_SEED


def test_every_shipped_config_is_listed():
    assert sorted(p.name for p in CONFIGS_DIR.glob("*.json")) == sorted(SHIPPED_CONFIGS)


def test_minimal_convergence_config_defaults(tmp_path):
    config = m.parse_config(write_config(tmp_path, {"model": OPINION}), "convergence")
    study = config.study
    assert study.model.params == OpinionParams().to_dict()
    assert study.model.delay == 0.125
    assert study.horizon == 1.0
    assert study.particles == 200
    assert study.hurst_list == (0.6, 0.7, 0.8, 0.9)
    assert (study.fine_level, study.coarse_levels, study.repeats) == (14, (7, 8, 9, 10), 8)
    assert study.error_mode == "terminal"
    assert config.options == m.RunOptions()


@pytest.mark.parametrize("command", ["simulate", "convergence", "chaos", "probe-moments"])
def test_empty_file_is_missing_model_block(tmp_path, command):
    with pytest.raises(ConfigError) as excinfo:
        m.parse_config(write_config(tmp_path, ""), command)
    assert "missing model block" in str(excinfo.value)
    assert excinfo.value.field == "model"


def test_unknown_keys_are_listed(tmp_path):
    path = write_config(tmp_path, {"model": OPINION, "hurst": 0.7, "partciles": 10, "zeta": 1})
    with pytest.raises(UnknownKeysError) as excinfo:
        m.parse_config(path, "simulate")
    assert excinfo.value.keys == ["partciles", "zeta"]
    assert "partciles" in str(excinfo.value)


@pytest.mark.parametrize(
    "data,error",
    [
        pytest.param("{not json", "invalid JSON", id="syntax"),
        pytest.param("[1, 2]", "top level", id="list"),
    ],
)
def test_malformed_files(tmp_path, data, error):
    with pytest.raises(ConfigError) as excinfo:
        m.parse_config(write_config(tmp_path, data), "simulate")
    assert error in str(excinfo.value)


def test_brownian_hurst_needs_override(tmp_path):
    path = write_config(tmp_path, {"model": OPINION, "hurst": 0.5})
    with pytest.raises(ConfigError) as excinfo:
        m.parse_config(path, "simulate")
    assert excinfo.value.field == "hurst"
    assert "--allow-brownian" in str(excinfo.value)
    config = m.parse_config(path, "simulate", dict(allow_brownian=True))
    assert config.hurst.is_brownian


@pytest.mark.parametrize("hurst", [0.0, 1.0, 1.2])
def test_hurst_outside_unit_interval(tmp_path, hurst):
    with pytest.raises(ConfigError) as excinfo:
        m.parse_config(write_config(tmp_path, {"model": OPINION, "hurst": hurst}), "simulate")
    assert excinfo.value.field == "hurst"


def test_rough_noise_needs_constant_diffusion(tmp_path):
    path = write_config(tmp_path, {"model": CUSTOM_MEASURE_DIFFUSION, "hurst": [0.7, 0.3]})
    with pytest.raises(ConfigError) as excinfo:
        m.parse_config(path, "convergence")
    assert excinfo.value.field == "hurst[1]"
    assert "constant" in str(excinfo.value)


def test_sup_mode_needs_smooth_noise(tmp_path):
    path = write_config(tmp_path, {"model": OPINION, "hurst": [0.3], "error_mode": "sup"})
    with pytest.raises(ConfigError) as excinfo:
        m.parse_config(path, "convergence")
    assert excinfo.value.field == "error_mode"


@pytest.mark.parametrize(
    "data,field",
    [
        pytest.param(
            {"model": OPINION, "hurst": 0.7, "horizon": 0.3, "delay_steps": 1}, "horizon", id="horizon-off-grid"
        ),
        pytest.param({"model": OPINION, "hurst": 0.7, "particles": 0}, "particles", id="particles"),
        pytest.param({"model": OPINION, "hurst": 0.7, "method": "fft"}, "method", id="method"),
        pytest.param({"model": OPINION, "hurst": 0.7, "seed": -1}, "seed", id="seed"),
        pytest.param({"model": OPINION, "hurst": "0.7"}, "hurst", id="hurst-type"),
        pytest.param({"model": {"id": "opinion", "params": {"a3": None}}, "hurst": 0.7}, "model.params.a3", id="param"),
        pytest.param(
            {"model": OPINION, "hurst": 0.7, "horizon": 64.0, "method": "cholesky"}, "method", id="cholesky-length"
        ),
    ],
)
def test_simulate_field_errors(tmp_path, data, field):
    with pytest.raises(ConfigError) as excinfo:
        m.parse_config(write_config(tmp_path, data), "simulate")
    assert excinfo.value.field == field


@pytest.mark.parametrize(
    "data,field",
    [
        pytest.param({"model": OPINION, "coarse_levels": [7, 14]}, "coarse_levels", id="coarse-at-fine"),
        pytest.param({"model": OPINION, "fine_level": 2, "coarse_levels": [1]}, "fine_level", id="fine-off-delay"),
        pytest.param({"model": OPINION, "horizon": 0.3}, "horizon", id="horizon-off-grid"),
        pytest.param({"model": OPINION, "fine_level": 21}, "fine_level", id="fine-too-deep"),
        pytest.param({"model": OPINION, "p": 0.5}, "p", id="p"),
        pytest.param({"model": OPINION, "method": "cholesky"}, "method", id="cholesky-length"),
    ],
)
def test_convergence_field_errors(tmp_path, data, field):
    with pytest.raises(ConfigError) as excinfo:
        m.parse_config(write_config(tmp_path, data), "convergence")
    assert excinfo.value.field == field


def test_cli_overrides(tmp_path):
    path = write_config(tmp_path, {"model": OPINION, "hurst": 0.7, "seed": 1, "threads": 2})
    config = m.parse_config(path, "simulate", dict(seed=99, threads=None))
    assert (config.options.seed, config.options.threads) == (99, 2)
    with pytest.raises(ConfigError) as excinfo:
        m.parse_config(path, "simulate", dict(threads=0))
    assert excinfo.value.field == "--threads"


def test_method_names_are_normalized(tmp_path):
    config = m.parse_config(write_config(tmp_path, {"model": OPINION, "hurst": 0.7, "method": "Cholesky"}), "simulate")
    assert config.options.method == GeneratorMethod.CHOLESKY


def test_chaos_reference_size(tmp_path):
    data = {"model": OPINION, "hurst": 0.7, "particle_counts": [8, 16], "reference_particles": 31}
    path = write_config(tmp_path, data)
    with pytest.raises(ConfigError) as excinfo:
        m.parse_config(path, "chaos")
    assert excinfo.value.field == "reference_particles"


def test_chaos_counts_ascending(tmp_path):
    path = write_config(tmp_path, {"model": OPINION, "hurst": 0.7, "particle_counts": [16, 8]})
    with pytest.raises(ConfigError) as excinfo:
        m.parse_config(path, "chaos")
    assert excinfo.value.field == "particle_counts"


@pytest.mark.parametrize(
    "data,field",
    [
        pytest.param({"model": OPINION, "hurst": 0.7}, "model", id="no-model"),
        pytest.param({"hurst": 0.7, "paths": 100}, "paths", id="paths"),
        pytest.param({"hurst": 0.7, "horizons": [0.5, 1.0]}, "horizons", id="horizons"),
        pytest.param({"hurst": 0.7, "p": 0}, "p", id="p"),
    ],
)
def test_probe_maximal_field_errors(tmp_path, data, field):
    with pytest.raises(ConfigError) as excinfo:
        m.parse_config(write_config(tmp_path, data), "probe-maximal")
    assert excinfo.value.field == field


def test_probe_moments_levels(tmp_path):
    config = m.parse_config(write_config(tmp_path, {"model": OPINION, "hurst": 0.7, "levels": [3, 5]}), "probe-moments")
    assert [grid.dt for grid in config.grids] == [0.125, 0.03125]
    with pytest.raises(ConfigError) as excinfo:
        m.parse_config(write_config(tmp_path, {"model": OPINION, "hurst": 0.7, "levels": [5, 2]}), "probe-moments")
    assert excinfo.value.field == "levels[1]"


def test_unknown_command():
    with pytest.raises(UsageError):
        m.parse_data({}, "weak-error")


def test_to_dict_is_json_serializable(tmp_path):
    config = m.parse_config(str(CONFIGS_DIR / "custom_linear_delay.json"), "simulate")
    d = config.to_dict()
    assert json.loads(json.dumps(d))["model"]["params"]["diffusion"]["kind"] == "mean_cosine"
    assert d["grid"]["M"] == 16


@pytest.mark.parametrize(
    "command,data,field",
    [
        pytest.param("simulate", {"horizon": 1e308}, "horizon", id="simulate-horizon-overflow"),
        pytest.param("simulate", {"horizon": 1e6}, "horizon", id="simulate-horizon-steps"),
        pytest.param("simulate", {"delay_steps": 2 ** 40}, "delay_steps", id="simulate-delay-steps"),
        pytest.param("simulate", {"particles": 10 ** 9}, "particles", id="simulate-particles"),
        pytest.param("convergence", {"horizon": 1e308}, "horizon", id="convergence-horizon"),
        pytest.param("convergence", {"fine_level": 2000}, "fine_level", id="convergence-fine-level"),
        pytest.param("convergence", {"particles": 10 ** 6}, "particles", id="convergence-particles"),
        pytest.param("chaos", {"horizon": 1e308}, "horizon", id="chaos-horizon"),
        pytest.param("chaos", {"reference_particles": 10 ** 9}, "reference_particles", id="chaos-reference"),
        pytest.param("probe-moments", {"levels": [2000]}, "levels[0]", id="moments-level-overflow"),
        pytest.param("probe-moments", {"levels": [5, 40]}, "levels[1]", id="moments-level-too-deep"),
        pytest.param("probe-moments", {"levels": [-1]}, "levels[0]", id="moments-negative-level"),
        pytest.param("probe-moments", {"horizon": 1e308}, "horizon", id="moments-horizon"),
        pytest.param("probe-moments", {"particles": 10 ** 9}, "particles", id="moments-particles"),
    ],
)
def test_out_of_range_sizes_name_the_field(tmp_path, command, data, field):
    path = write_config(tmp_path, dict({"model": OPINION, "hurst": 0.7}, **data))
    with pytest.raises(ConfigError) as excinfo:
        m.parse_config(path, command)
    assert excinfo.value.field == field


@pytest.mark.parametrize("grid_points", [1, 10 ** 9])
def test_probe_maximal_grid_points_range(tmp_path, grid_points):
    path = write_config(tmp_path, {"hurst": 0.7, "grid_points": grid_points})
    with pytest.raises(ConfigError) as excinfo:
        m.parse_config(path, "probe-maximal")
    assert excinfo.value.field == "grid_points"


def test_largest_levels_within_limits_parse(tmp_path):
    data = {"model": OPINION, "hurst": 0.7, "levels": [19, m.MAX_LEVEL], "particles": 2}
    config = m.parse_config(write_config(tmp_path, data), "probe-moments")
    assert config.grids[-1].dt == 2.0 ** -m.MAX_LEVEL
