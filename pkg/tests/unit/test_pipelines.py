# -*- coding: utf-8 -*-

import argparse
import importlib
import json
import math

import pytest

import context

import dsmve.run_pipeline as m
from dsmve import plot_util
from dsmve.errors import ConfigError, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, UsageError
from dsmve.io_util import manifest_path, read_manifest, sha256_file
from dsmve.pipelines import pipelines
# dsmve.pipelines rebinds the name fbm to the Pipeline object; load the module itself
fbm = importlib.import_module("dsmve.pipelines.fbm")
from dsmve.serialize_util import parse_csv

OPINION = {"id": "opinion"}

SMALL_CONFIGS = {
    "simulate": {"model": OPINION, "hurst": 0.7, "particles": 3, "delay_steps": 2, "horizon": 0.5},
    "convergence": {
        "model": OPINION,
        "hurst": [0.7],
        "particles": 6,
        "repeats": 2,
        "fine_level": 6,
        "coarse_levels": [3, 4],
        "horizon": 0.25,
    },
    "chaos": {
        "model": OPINION,
        "hurst": 0.7,
        "particle_counts": [2, 4],
        "reference_particles": 8,
        "repeats": 2,
        "delay_steps": 2,
        "horizon": 0.25,
    },
    "probe-maximal": {"hurst": 0.7, "horizons": [0.1, 1.0], "grid_points": 8},
    "probe-moments": {"model": OPINION, "hurst": 0.7, "particles": 4, "levels": [3, 4], "horizon": 0.25},
}


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def read_rows(path):
    with open(path, "r", encoding="utf-8") as fin:
        return parse_csv(fin)


def test_pipeline_names_are_unique():
    names = [p.name for p in pipelines]
    assert names == ["fbm", "simulate", "convergence", "chaos", "probe-maximal", "probe-moments"]


@pytest.mark.parametrize("pipeline", [p for p in pipelines if p.name != "fbm"], ids=lambda p: p.name)
def test_config_pipeline_default_args(pipeline):
    args = pipeline.argparser(argparse.ArgumentParser()).parse_args(["-c", "run.json"])
    assert args.config == "run.json"
    assert args.out == "-"
    assert (args.svg, args.seed, args.threads, args.allow_brownian) == (None, None, None, False)


def test_fbm_default_args():
    args = fbm.pipeline.argparser(argparse.ArgumentParser()).parse_args(["--n", "8", "--dt", "0.5", "--hurst", "0.7"])
    assert (args.seed, args.streams, args.threads, args.method) == (20200415, 1, 1, "davies-harte")


@pytest.mark.parametrize(
    "argv,field",
    [
        pytest.param(["--n", "0", "--dt", "1", "--hurst", "0.7"], "--n", id="n"),
        pytest.param(["--n", "4", "--dt", "0", "--hurst", "0.7"], "--dt", id="dt"),
        pytest.param(["--n", "4", "--dt", "1", "--hurst", "0.5"], "--hurst", id="brownian"),
        pytest.param(["--n", "4", "--dt", "1", "--hurst", "0.7", "--streams", "0"], "--streams", id="streams"),
        pytest.param(["--n", str(2 ** 40), "--dt", "1", "--hurst", "0.7"], "--n", id="n-too-large"),
        pytest.param(["--n", "4", "--dt", "inf", "--hurst", "0.7"], "--dt", id="dt-infinite"),
    ],
)
def test_fbm_request_errors(argv, field):
    args = fbm.pipeline.argparser(argparse.ArgumentParser()).parse_args(argv)
    with pytest.raises(ConfigError) as excinfo:
        fbm.read_request(args)
    assert excinfo.value.field == field


@pytest.mark.asyncio
async def test_fbm_runner_yields_one_block_per_stream():
    args = fbm.pipeline.argparser(argparse.ArgumentParser()).parse_args(
        ["--n", "16", "--dt", "0.25", "--hurst", "0.3", "--streams", "3"]
    )
    request = fbm.read_request(args)
    results = [blocks async for blocks in fbm.run_pipeline(request, args)]
    assert len(results) == 1
    assert [block.stream_id for block in results[0]] == [0, 1, 2]
    table = fbm.serialize(args, results[0])
    # one origin row plus 16 increments per stream
    assert len(table.rows) == 3 * 17
    assert table.rows[0] == (0, 0, 0.0, 0.0, 0.0)
    assert table.rows[1][:3] == (0, 1, 0.25)
    assert [row[1] for row in table.rows if row[0] == 2] == list(range(17))
    assert "3 stream(s) of 16 increments" in table.summary[0]


def test_fbm_writes_csv_and_manifest(workdir):
    out = str(workdir / "fbm.csv")
    argv = ["-q", "fbm", "--n", "8", "--dt", "0.125", "--hurst", "0.7", "--streams", "2", "-o", out]
    assert m.main(argv) == EXIT_OK
    rows = read_rows(out)
    assert len(rows) == 2 * 9
    assert list(rows[0]) == list(fbm.FIELDS)
    first = [row for row in rows if row["stream_id"] == 0]
    assert (first[0]["k"], first[0]["t_k"], first[0]["cumulative"]) == (0, 0.0, 0.0)
    assert first[-1]["cumulative"] == pytest.approx(sum(row["increment"] for row in first), abs=1e-12)

    manifest = read_manifest(manifest_path(out))
    assert manifest.command == "fbm"
    assert manifest.seed == 20200415
    assert manifest.config_path is None
    assert manifest.outputs == {out: sha256_file(out)}
    assert manifest.parameters["hurst"] == 0.7


def test_simulate_does_not_depend_on_threads(workdir):
    path = write_config(workdir, SMALL_CONFIGS["simulate"])
    outs = []
    for threads in ("1", "2"):
        out = str(workdir / f"simulate_{threads}.csv")
        assert m.main(["-q", "simulate", "-c", path, "--threads", threads, "-o", out]) == EXIT_OK
        outs.append(out)
    with open(outs[0], "rb") as a, open(outs[1], "rb") as b:
        assert a.read() == b.read()


def test_simulate_csv_layout(workdir, capsys):
    out = str(workdir / "simulate.csv")
    path = write_config(workdir, SMALL_CONFIGS["simulate"])
    assert m.main(["-q", "simulate", "-c", path, "-o", out]) == EXIT_OK
    rows = read_rows(out)
    # 3 particles x (M + T/dt + 1) grid points
    assert len(rows) == 3 * (2 + 8 + 1)
    assert list(rows[0]) == ["particle", "k", "t_k", "x0"]
    assert (rows[0]["k"], rows[0]["t_k"]) == (-2, -0.125)
    assert "opinion: N=3" in capsys.readouterr().out

    manifest = read_manifest(manifest_path(out))
    assert manifest.config_sha256 == sha256_file(path)
    assert manifest.parameters["particles"] == 3


@pytest.mark.parametrize("command", sorted(SMALL_CONFIGS))
def test_config_pipelines_run(workdir, command):
    out = str(workdir / "out.csv")
    path = write_config(workdir, SMALL_CONFIGS[command])
    assert m.main(["-q", command, "-c", path, "-o", out]) == EXIT_OK
    pipeline = next(p for p in pipelines if p.name == command)
    rows = read_rows(out)
    assert rows
    assert set(pipeline.fields) <= set(rows[0])


def test_convergence_rows_and_svg(workdir):
    out = str(workdir / "convergence.csv")
    svg = str(workdir / "convergence.svg")
    path = write_config(workdir, SMALL_CONFIGS["convergence"])
    assert m.main(["-q", "convergence", "-c", path, "-o", out, "--svg", svg]) == EXIT_OK
    rows = read_rows(out)
    assert [(row["hurst"], row["level"], row["dt"]) for row in rows] == [(0.7, 3, 0.125), (0.7, 4, 0.0625)]
    assert all(row["repeats"] == 2 for row in rows)
    with open(svg, "r", encoding="utf-8") as fin:
        assert "<svg" in fin.read()
    assert read_manifest(manifest_path(out)).outputs == {svg: sha256_file(svg), out: sha256_file(out)}


def test_svg_output_is_reproducible(workdir):
    path = write_config(workdir, SMALL_CONFIGS["probe-moments"])
    digests = []
    for i in range(2):
        svg = str(workdir / f"moments_{i}.svg")
        argv = ["-q", "probe-moments", "-c", path, "-o", str(workdir / f"moments_{i}.csv"), "--svg", svg]
        assert m.main(argv) == EXIT_OK
        digests.append(sha256_file(svg))
    assert digests[0] == digests[1]


def test_probe_moments_reports_blow_up_rows(workdir):
    out = str(workdir / "cubic.csv")
    data = {
        "model": {"id": "present_cubic", "params": {"beta": 0}},
        "hurst": 0.7,
        "particles": 2,
        "levels": [3, 5],
    }
    assert m.main(["-q", "probe-moments", "-c", write_config(workdir, data), "-o", out]) == EXIT_OK
    rows = read_rows(out)
    assert [row["blow_up"] for row in rows] == [True, False]
    assert math.isinf(rows[0]["estimate"])


@pytest.mark.parametrize(
    "data",
    [
        pytest.param({"model": OPINION, "hurst": 0.7, "partciles": 3}, id="unknown-key"),
        pytest.param({"model": OPINION, "hurst": 0.5}, id="brownian"),
        pytest.param({"hurst": 0.7}, id="no-model"),
    ],
)
def test_config_errors_exit_2(workdir, data):
    out = str(workdir / "out.csv")
    assert m.main(["-q", "simulate", "-c", write_config(workdir, data), "-o", out]) == EXIT_CONFIG
    assert not (workdir / "out.csv").exists()


def test_missing_config_file_exits_4(workdir):
    assert m.main(["-q", "simulate", "-c", str(workdir / "missing.json")]) == EXIT_IO


def test_blow_up_exits_3(workdir):
    data = {
        "model": {"id": "present_cubic", "params": {"beta": 0}},
        "hurst": 0.7,
        "particles": 2,
        "delay_steps": 1,
        "horizon": 8.0,
    }
    out = str(workdir / "out.csv")
    assert m.main(["-q", "simulate", "-c", write_config(workdir, data), "-o", out]) == EXIT_NUMERICAL
    assert not (workdir / "out.csv").exists()


def test_unwritable_output_exits_4(workdir):
    path = write_config(workdir, SMALL_CONFIGS["simulate"])
    out = str(workdir / "no-such-dir" / "out.csv")
    assert m.main(["-q", "simulate", "-c", path, "-o", out]) == EXIT_IO


@pytest.mark.parametrize("results", [pytest.param([], id="empty"), pytest.param([object()], id="unknown-type")])
def test_emit_svg_errors(tmp_path, results):
    with pytest.raises(UsageError):
        plot_util.emit_svg(results, str(tmp_path / "out.svg"))
    assert not (tmp_path / "out.svg").exists()
