"""Metric arithmetic, the synthetic fixture's guarantees, and benchmark CSVs."""

import numpy as np
import pytest

from patchmatte import evaluation, imaging
from patchmatte.evaluation import (BENCH_HEADER, SWEEP_HEADER, MetricRecord,
                                   SweepSpec, make_synthetic_case, mse,
                                   run_benchmark, run_sweep, sad,
                                   write_benchmark_csv,
                                   write_synthetic_dataset)
from patchmatte.pipeline import RunConfig


FAST = dict(method="pca", iters=30, window=3, stride=1)


# ---------------------------------------------------------------------------
# metrics

def test_metrics_identical_mattes_are_zero(rng):
    a = rng.random((5, 4))
    assert mse(a, a) == 0.0
    assert sad(a, a) == 0.0


def test_metrics_maximal_case():
    ones = np.ones((2, 2))
    zeros = np.zeros((2, 2))
    assert mse(ones, zeros) == pytest.approx(1.0, abs=1e-12)
    assert sad(ones, zeros) == pytest.approx(4.0, abs=1e-12)


def test_metrics_hand_case():
    m = np.array([[0.2, 0.8]])
    g = np.array([[0.0, 1.0]])
    assert mse(m, g) == pytest.approx(0.04, abs=1e-12)
    assert sad(m, g) == pytest.approx(0.4, abs=1e-12)


def test_metrics_symmetric_and_definite(rng):
    a, b = rng.random((6, 6)), rng.random((6, 6))
    assert mse(a, b) == mse(b, a)
    assert sad(a, b) == sad(b, a)
    assert mse(a, b) > 0 and sad(a, b) > 0


def test_sad_bounded_by_cauchy_schwarz(rng):
    a, b = rng.random((7, 5)), rng.random((7, 5))
    hw = a.size
    assert sad(a, b) <= hw * np.sqrt(mse(a, b)) + 1e-9


def test_metrics_reject_shape_mismatch():
    with pytest.raises(ValueError):
        mse(np.zeros((2, 2)), np.zeros((2, 3)))
    with pytest.raises(ValueError):
        sad(np.zeros((2, 2)), np.zeros((3, 2)))


def test_metric_record_row_formatting():
    rec = MetricRecord("img.png", "pca(d=2,k=4)", 0.00123456789, 156.703456,
                       250, 1.23456789)
    assert rec.row() == "img.png,pca(d=2,k=4),0.00123457,156.703,250,1.23457"


# ---------------------------------------------------------------------------
# synthetic fixture

def test_fixture_alpha_geometry():
    image, trimap, gt = make_synthetic_case(0, 32, 32)
    assert gt[16, 16] == 1.0          # disk center
    assert gt[0, 0] == 0.0            # far corner
    assert image.shape == (32, 32, 3)
    assert image.min() >= 0.0 and image.max() <= 1.0


def test_fixture_composite_obeys_matting_equation():
    image, _, gt, fg, bg = make_synthetic_case(3, 32, 40, return_fields=True)
    a = gt[:, :, None]
    assert np.allclose(image, np.clip(a * fg + (1 - a) * bg, 0, 1), atol=1e-12)


def test_blend_arithmetic_half_red_over_blue():
    blended = 0.5 * np.array([1.0, 0.0, 0.0]) + 0.5 * np.array([0.0, 0.0, 1.0])
    assert np.allclose(blended, [0.5, 0.0, 0.5])


def test_fixture_trimap_labels_and_margins():
    _, trimap, gt = make_synthetic_case(1, 48, 48)
    assert set(np.unique(trimap)) <= {imaging.BACKGROUND, imaging.FOREGROUND,
                                      imaging.UNKNOWN}
    # eroded labels never cross the feathered edge
    assert (gt[trimap == imaging.FOREGROUND] == 1.0).all()
    assert (gt[trimap == imaging.BACKGROUND] == 0.0).all()
    assert (trimap == imaging.UNKNOWN).sum() > 0


def test_fixture_reproducible_and_seed_sensitive():
    a1 = make_synthetic_case(7, 32, 32)[0]
    a2 = make_synthetic_case(7, 32, 32)[0]
    b = make_synthetic_case(8, 32, 32)[0]
    assert np.array_equal(a1, a2)
    assert not np.array_equal(a1, b)


def test_fixture_rejects_tiny_sizes():
    with pytest.raises(ValueError):
        make_synthetic_case(0, 8, 32)


def test_write_synthetic_dataset_round_trip(tmp_path):
    names = write_synthetic_dataset(tmp_path, seeds=(0, 1), h=24, w=24)
    assert names == ["synthetic000.png", "synthetic001.png"]
    for sub in ("input", "trimap", "gt"):
        assert sorted(p.name for p in (tmp_path / sub).iterdir()) == names
    image, trimap, gt = make_synthetic_case(0, 24, 24)
    loaded_tri = imaging.load_trimap(tmp_path / "trimap" / names[0])
    assert np.array_equal(loaded_tri, trimap)
    loaded_gt = imaging.load_alpha(tmp_path / "gt" / names[0])
    assert np.abs(loaded_gt - gt).max() <= 2.0 / 255.0
    loaded_img = imaging.load_image(tmp_path / "input" / names[0])
    assert np.abs(loaded_img - image).max() <= 2.0 / 255.0


# ---------------------------------------------------------------------------
# benchmark runs

@pytest.fixture()
def tiny_dataset(tmp_path):
    root = tmp_path / "data"
    write_synthetic_dataset(root, seeds=(0, 1), h=16, w=16)
    return root


def test_benchmark_structure_and_average(tiny_dataset, tmp_path):
    out = tmp_path / "bench.csv"
    config = RunConfig(**FAST)
    records, skipped, failures = run_benchmark(tiny_dataset, config, out)
    assert skipped == [] and failures == 0
    ids = [r.image_id for r in records]
    assert ids == ["synthetic000.png", "synthetic001.png", "average"]
    avg = records[-1]
    assert avg.mse == pytest.approx(np.mean([r.mse for r in records[:2]]))
    assert avg.sad == pytest.approx(np.mean([r.sad for r in records[:2]]))
    text = out.read_bytes().decode()
    lines = text.splitlines()
    assert lines[0] == BENCH_HEADER
    assert len(lines) == 4
    assert "\r" not in text
    for rec, line in zip(records, lines[1:]):
        assert line == rec.row()


def test_benchmark_deterministic_modulo_wall_time(tiny_dataset):
    config = RunConfig(**FAST)
    first, _, _ = run_benchmark(tiny_dataset, config)
    second, _, _ = run_benchmark(tiny_dataset, config)

    def strip_wall(rec):
        parts = rec.row().split(",")
        return parts[:5]

    assert [strip_wall(r) for r in first] == [strip_wall(r) for r in second]


def test_benchmark_empty_dataset(tmp_path):
    root = tmp_path / "data"
    (root / "input").mkdir(parents=True)
    out = tmp_path / "bench.csv"
    records, skipped, failures = run_benchmark(root, RunConfig(**FAST), out)
    assert records == [] and skipped == [] and failures == 0
    assert out.read_text() == BENCH_HEADER + "\n"


def test_benchmark_skips_missing_ground_truth(tiny_dataset):
    (tiny_dataset / "gt" / "synthetic001.png").unlink()
    records, skipped, failures = run_benchmark(tiny_dataset, RunConfig(**FAST))
    assert skipped == ["synthetic001.png"]
    assert [r.image_id for r in records] == ["synthetic000.png", "average"]
    assert failures == 0


def test_benchmark_failure_yields_nan_record(tiny_dataset, monkeypatch):
    def boom(image, trimap, config):
        raise RuntimeError("forced failure")

    monkeypatch.setattr(evaluation, "compute_matte", boom)
    records, _, failures = run_benchmark(tiny_dataset, RunConfig(**FAST))
    assert failures == 2
    assert np.isnan(records[0].mse) and np.isnan(records[0].sad)
    assert records[-1].image_id == "average"
    assert np.isnan(records[-1].mse)


def test_benchmark_missing_input_dir(tmp_path):
    with pytest.raises(FileNotFoundError):
        run_benchmark(tmp_path / "nope", RunConfig(**FAST))


def test_write_benchmark_csv_formats(tmp_path):
    rec = MetricRecord("a.png", "pca(d=2,k=4)", 0.5, 2.0, 10, 0.25)
    path = tmp_path / "out.csv"
    write_benchmark_csv([rec], path)
    assert path.read_text() == BENCH_HEADER + "\na.png,pca(d=2,k=4),0.5,2,10,0.25\n"


# ---------------------------------------------------------------------------
# sweeps

def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(axis="window", values=[3])
    with pytest.raises(ValueError):
        SweepSpec(axis="stride", values=[])


def test_sweep_spec_builds_configs():
    base = RunConfig(method="casiso")
    spec = SweepSpec(axis="stride", values=[1, 2], base=base)
    assert [c.stride for c in spec.configs()] == [1, 2]
    spec = SweepSpec(axis="iterations", values=[50, 250], base=base)
    assert [c.iters for c in spec.configs()] == [50, 250]
    spec = SweepSpec(axis="patch_size", values=[3, 5], base=base)
    assert [c.window for c in spec.configs()] == [3, 5]
    spec = SweepSpec(axis="dims_schedule", values=["3-4-2", "3-3-3"], base=base)
    assert [c.dims for c in spec.configs()] == [(4, 2), (3, 3)]


def test_sweep_rows_and_csv(tiny_dataset, tmp_path):
    base = RunConfig(**FAST)
    spec = SweepSpec(axis="iterations", values=[5, 40], base=base)
    out = tmp_path / "sweep.csv"
    rows = run_sweep(spec, tiny_dataset, out)
    assert [r[0] for r in rows] == ["5", "40"]
    assert all(np.isfinite(r[1]) and np.isfinite(r[2]) for r in rows)
    lines = out.read_text().splitlines()
    assert lines[0] == SWEEP_HEADER
    assert len(lines) == 3
    for (label, m, s), line in zip(rows, lines[1:]):
        assert line == f"{label},{m:.6g},{s:.6g}"
