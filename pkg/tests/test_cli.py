"""Command-line interface: exit codes, error strings, file outputs."""

import numpy as np
import pytest

from patchmatte import cli, imaging
from patchmatte.cli import EVAL_DEFAULT_RESIZE, _build_config, build_parser, main
from patchmatte.evaluation import BENCH_HEADER, SWEEP_HEADER, write_synthetic_dataset


@pytest.fixture()
def dataset(tmp_path):
    root = tmp_path / "data"
    write_synthetic_dataset(root, seeds=(0, 1), h=16, w=16)
    return root


FAST_FLAGS = ["--method", "pca", "--iters", "5"]


# ---------------------------------------------------------------------------
# matte

def test_matte_writes_outputs(dataset, tmp_path):
    out = tmp_path / "out.png"
    trace = tmp_path / "trace.csv"
    mtx = tmp_path / "alignment.mtx"
    rc = main(["matte", str(dataset / "input" / "synthetic000.png"),
               str(dataset / "trimap" / "synthetic000.png"),
               *FAST_FLAGS, "--out", str(out),
               "--trace-csv", str(trace), "--dump-matrix", str(mtx)])
    assert rc == 0
    matte = imaging.load_alpha(out)
    assert matte.shape == (16, 16)
    assert matte.min() >= 0.0 and matte.max() <= 1.0
    assert trace.read_text().splitlines()[0] == "iteration,objective,step_c"
    assert mtx.stat().st_size > 0


def test_matte_missing_trimap_exit_code(dataset, tmp_path, capsys):
    rc = main(["matte", str(dataset / "input" / "synthetic000.png"),
               str(tmp_path / "nope.png"), *FAST_FLAGS])
    assert rc == 2
    assert "error: trimap not found" in capsys.readouterr().err


def test_matte_missing_image_exit_code(tmp_path, capsys):
    rc = main(["matte", str(tmp_path / "a.png"), str(tmp_path / "b.png")])
    assert rc == 2
    assert "error: image not found" in capsys.readouterr().err


def test_matte_bad_dims_flag(dataset, capsys):
    rc = main(["matte", str(dataset / "input" / "synthetic000.png"),
               str(dataset / "trimap" / "synthetic000.png"),
               "--method", "pca", "--dims", "frog"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_matte_internal_failure_exit_code(dataset, tmp_path, monkeypatch, capsys):
    def boom(image, trimap, config, matrix_out=None):
        raise RuntimeError("solver blew up")

    monkeypatch.setattr(cli, "compute_matte", boom)
    rc = main(["matte", str(dataset / "input" / "synthetic000.png"),
               str(dataset / "trimap" / "synthetic000.png"),
               *FAST_FLAGS, "--out", str(tmp_path / "o.png")])
    assert rc == 1
    assert "solver blew up" in capsys.readouterr().err


def test_unknown_method_choice_is_usage_error(dataset):
    with pytest.raises(SystemExit) as exc:
        main(["matte", "x.png", "y.png", "--method", "umap"])
    assert exc.value.code == 2


# ---------------------------------------------------------------------------
# composite

def test_composite_opaque_matte_reproduces_image(dataset, tmp_path):
    image_path = dataset / "input" / "synthetic000.png"
    matte_path = tmp_path / "matte.png"
    bg_path = tmp_path / "bg.png"
    imaging.save_alpha(np.ones((16, 16)), matte_path)
    imaging.save_image(np.zeros((16, 16, 3)), bg_path)
    out = tmp_path / "comp.png"
    fg_out = tmp_path / "fg.png"
    rc = main(["composite", str(image_path), str(matte_path), str(bg_path),
               "--out", str(out), "--fg-out", str(fg_out)])
    assert rc == 0
    original = imaging.load_image(image_path)
    rebuilt = imaging.load_image(out)
    assert np.abs(rebuilt - original).max() <= 2.0 / 255.0
    assert fg_out.stat().st_size > 0


def test_composite_missing_background(dataset, tmp_path, capsys):
    matte_path = tmp_path / "matte.png"
    imaging.save_alpha(np.ones((16, 16)), matte_path)
    rc = main(["composite", str(dataset / "input" / "synthetic000.png"),
               str(matte_path), str(tmp_path / "missing.png")])
    assert rc == 2
    assert "error: background not found" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# eval

def test_eval_writes_metrics_csv(dataset, tmp_path):
    out = tmp_path / "metrics.csv"
    rc = main(["eval", str(dataset), *FAST_FLAGS, "--resize", "none",
               "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == BENCH_HEADER
    assert len(lines) == 4          # two images + average
    assert lines[-1].startswith("average,")


def test_eval_default_output_name(dataset, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    rc = main(["eval", str(dataset), *FAST_FLAGS, "--resize", "none"])
    assert rc == 0
    assert (tmp_path / "metrics.csv").is_file()


def test_eval_missing_dataset(tmp_path, capsys):
    rc = main(["eval", str(tmp_path / "nothing")])
    assert rc == 2
    assert "error: dataset not found" in capsys.readouterr().err


def test_eval_missing_config_file(dataset, capsys):
    rc = main(["eval", str(dataset), "--config", "missing.cfg"])
    assert rc == 2
    assert "error: config not found" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# sweep

def test_sweep_iterations_axis(dataset, tmp_path):
    out = tmp_path / "sweep.csv"
    rc = main(["sweep", str(dataset), "--axis", "iterations",
               "--values", "4,8", *FAST_FLAGS, "--resize", "none",
               "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == SWEEP_HEADER
    assert [ln.split(",")[0] for ln in lines[1:]] == ["4", "8"]


def test_sweep_dims_schedule_axis(dataset, tmp_path):
    out = tmp_path / "sweep.csv"
    rc = main(["sweep", str(dataset), "--axis", "dims_schedule",
               "--values", "3-3-3,3-4-2", "--method", "casiso",
               "--iters", "5", "--resize", "none", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert [ln.split(",")[0] for ln in lines[1:]] == ["3-3-3", "3-4-2"]


def test_sweep_rejects_unknown_axis(dataset):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", str(dataset), "--axis", "window", "--values", "3"])
    assert exc.value.code == 2


# ---------------------------------------------------------------------------
# configuration layering

def test_eval_resize_default_and_overrides(tmp_path):
    parser = build_parser()

    args = parser.parse_args(["eval", "data"])
    cfg = _build_config(args, resize_default=EVAL_DEFAULT_RESIZE)
    assert cfg.resize == (120, 160)

    args = parser.parse_args(["eval", "data", "--resize", "none"])
    cfg = _build_config(args, resize_default=EVAL_DEFAULT_RESIZE)
    assert cfg.resize is None

    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("resize=32x40\n")
    args = parser.parse_args(["eval", "data", "--config", str(cfg_file)])
    cfg = _build_config(args, resize_default=EVAL_DEFAULT_RESIZE)
    assert cfg.resize == (32, 40)

    args = parser.parse_args(["eval", "data", "--config", str(cfg_file),
                              "--resize", "48x56"])
    cfg = _build_config(args, resize_default=EVAL_DEFAULT_RESIZE)
    assert cfg.resize == (48, 56)


def test_flags_override_config_file(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("method=pca\niters=40\nlambda=10\n")
    parser = build_parser()
    args = parser.parse_args(["matte", "a.png", "b.png",
                              "--config", str(cfg_file),
                              "--iters", "7", "--lambda", "99"])
    cfg = _build_config(args)
    assert cfg.method == "pca"
    assert cfg.iters == 7
    assert cfg.lam == 99.0


def test_matte_defaults_match_run_config(tmp_path):
    parser = build_parser()
    args = parser.parse_args(["matte", "a.png", "b.png"])
    cfg = _build_config(args)
    assert cfg.method == "casiso" and cfg.dims == (3, 3)
    assert cfg.resize is None
