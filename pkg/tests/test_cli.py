import json
import subprocess
import sys

import numpy as np
import pytest

from voxflow import Volume
from voxflow.cli import main
from voxflow.formats import (read_predictions, read_tmap, read_vox1,
                             write_png_stack, write_predictions, write_tmap,
                             write_vox1, write_vox1_array)
from voxflow.metrics import Prediction, PredictionSet


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def small_volume(seed=0, shape=(8, 16, 16, 1)):
    rng = np.random.default_rng(seed)
    return Volume(rng.integers(0, 256, size=shape, dtype=np.uint8))


def resize_pipeline(tmp_path, seed=0, extra=()):
    doc = {"seed": seed,
           "steps": [{"op": "gaussian_noise", "p": 1.0,
                      "params": {"sigma_max": 20.0}},
                     *extra,
                     {"op": "resize", "p": 1.0,
                      "params": {"target": [4, 8, 8], "mode": "trilinear"}}]}
    p = tmp_path / "pipe.json"
    p.write_text(json.dumps(doc))
    return p


# --- augment -----------------------------------------------------------------

def test_augment_single_file(tmp_path, capsys):
    src = tmp_path / "in.vox"
    write_vox1(src, small_volume())
    pipe = resize_pipeline(tmp_path)
    out = tmp_path / "out.vox"
    code, text = run(capsys, "augment", "--pipeline", str(pipe),
                     "--in", str(src), "--out", str(out))
    assert code == 0
    doc = json.loads(text)
    assert doc["out_shape"] == [4, 8, 8, 1]
    assert [f["op"] for f in doc["fired"]] == ["gaussian_noise", "resize"]
    assert read_vox1(out).shape == (4, 8, 8, 1)


def test_augment_deterministic_and_index_sensitive(tmp_path, capsys):
    src = tmp_path / "in.vox"
    write_vox1(src, small_volume())
    pipe = resize_pipeline(tmp_path)
    outs = []
    for name, index in (("a.vox", "0"), ("b.vox", "0"), ("c.vox", "1")):
        out = tmp_path / name
        code, _ = run(capsys, "augment", "--pipeline", str(pipe),
                      "--in", str(src), "--out", str(out), "--index", index)
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0] != outs[2]


def test_augment_seed_flag_overrides_file_seed(tmp_path, capsys):
    src = tmp_path / "in.vox"
    write_vox1(src, small_volume())
    out_a, out_b = tmp_path / "a.vox", tmp_path / "b.vox"
    run(capsys, "augment", "--pipeline", str(resize_pipeline(tmp_path, seed=5)),
        "--in", str(src), "--out", str(out_a))
    run(capsys, "augment", "--pipeline", str(resize_pipeline(tmp_path, seed=0)),
        "--in", str(src), "--out", str(out_b), "--seed", "5")
    assert out_a.read_bytes() == out_b.read_bytes()


def test_augment_preset_and_png_stack_input(tmp_path, capsys):
    stack = tmp_path / "stack"
    write_png_stack(stack, small_volume(shape=(6, 16, 16, 3)))
    out = tmp_path / "out.vox"
    code, text = run(capsys, "augment", "--preset", "mirror3",
                     "--target", "6,8,8", "--in", str(stack),
                     "--out", str(out))
    assert code == 0
    assert json.loads(text)["out_shape"] == [6, 8, 8, 3]


def test_augment_batch_directory(tmp_path, capsys):
    src = tmp_path / "batch"
    src.mkdir()
    for i, name in enumerate(("a.vox", "b.vox", "c.vox")):
        write_vox1(src / name, small_volume(seed=i))
    pipe = resize_pipeline(tmp_path)
    out_dir = tmp_path / "out"
    code, text = run(capsys, "augment", "--pipeline", str(pipe),
                     "--in", str(src), "--out", str(out_dir), "--threads", "2")
    assert code == 0
    doc = json.loads(text)
    assert list(doc) == ["a.vox", "b.vox", "c.vox"]
    # per-file index equals its lexicographic rank
    single = tmp_path / "single.vox"
    run(capsys, "augment", "--pipeline", str(pipe),
        "--in", str(src / "b.vox"), "--out", str(single), "--index", "1")
    assert single.read_bytes() == (out_dir / "b.vox").read_bytes()


def test_augment_missing_input_exit_2(tmp_path, capsys):
    code, _ = run(capsys, "augment", "--preset", "heavy",
                  "--in", str(tmp_path / "nope.vox"),
                  "--out", str(tmp_path / "out.vox"))
    assert code == 2


def test_augment_bad_pipeline_exit_3(tmp_path, capsys):
    src = tmp_path / "in.vox"
    write_vox1(src, small_volume())
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"seed": 0, "steps": [
        {"op": "blur2d", "p": 0.5, "params": {}}]}))
    code, _ = run(capsys, "augment", "--pipeline", str(bad),
                  "--in", str(src), "--out", str(tmp_path / "o.vox"))
    assert code == 3


# --- inflate -----------------------------------------------------------------

def test_inflate_center(tmp_path, capsys):
    rng = np.random.default_rng(0)
    w = rng.normal(size=(3, 3, 2, 4)).astype(np.float32)
    bias = rng.normal(size=(4,)).astype(np.float32)
    src = tmp_path / "in.tmap"
    write_tmap(src, {"conv.weight": w, "conv.bias": bias})
    rules = tmp_path / "rules.json"
    rules.write_text(json.dumps(
        [{"pattern": "*.weight", "depth": 3, "mode": "center"}]))
    out = tmp_path / "out.tmap"
    code, text = run(capsys, "inflate", "--in", str(src), "--out", str(out),
                     "--rules", str(rules))
    assert code == 0
    lines = text.splitlines()
    assert lines[0] == "tensor,old_shape,new_shape"
    assert "conv.weight,3x3x2x4,3x3x3x2x4" in lines
    assert "conv.bias,4,4" in lines
    back = read_tmap(out)
    assert back["conv.weight"].shape == (3, 3, 3, 2, 4)
    assert np.array_equal(back["conv.weight"][1], w)
    assert not back["conv.weight"][0].any()
    assert np.array_equal(back["conv.bias"], bias)


def test_inflate_default_rule_matches_everything(tmp_path, capsys):
    w = np.ones((3, 3, 1, 2), dtype=np.float32)
    src = tmp_path / "in.tmap"
    write_tmap(src, {"conv.weight": w})
    out = tmp_path / "out.tmap"
    code, _ = run(capsys, "inflate", "--in", str(src), "--out", str(out),
                  "--depth", "3", "--mode", "center")
    assert code == 0
    assert read_tmap(out)["conv.weight"].shape == (3, 3, 3, 1, 2)
    # the default "*" rule also matches non-kernel tensors, which is an error
    write_tmap(src, {"conv.weight": w, "conv.bias": np.ones(2, np.float32)})
    code, _ = run(capsys, "inflate", "--in", str(src), "--out", str(out),
                  "--depth", "3", "--mode", "center")
    assert code == 4


def test_inflate_rules_file(tmp_path, capsys):
    w = np.ones((3, 3, 1, 1), dtype=np.float32)
    src = tmp_path / "in.tmap"
    write_tmap(src, {"a.weight": w, "b.weight": w})
    rules = tmp_path / "rules.json"
    rules.write_text(json.dumps([
        {"pattern": "a.*", "depth": 5, "mode": "average"},
        {"pattern": "*", "depth": 3, "mode": "center"}]))
    out = tmp_path / "out.tmap"
    code, _ = run(capsys, "inflate", "--in", str(src), "--out", str(out),
                  "--rules", str(rules))
    assert code == 0
    back = read_tmap(out)
    assert back["a.weight"].shape == (5, 3, 3, 1, 1)
    assert np.allclose(back["a.weight"], 1.0 / 5)
    assert back["b.weight"].shape == (3, 3, 3, 1, 1)


def test_inflate_even_depth_exit_4(tmp_path, capsys):
    src = tmp_path / "in.tmap"
    write_tmap(src, {"w": np.ones((3, 3, 1, 1), dtype=np.float32)})
    code, _ = run(capsys, "inflate", "--in", str(src),
                  "--out", str(tmp_path / "o.tmap"), "--depth", "4")
    assert code == 4


def test_inflate_missing_depth_exit_3(tmp_path, capsys):
    src = tmp_path / "in.tmap"
    write_tmap(src, {"w": np.ones((3, 3, 1, 1), dtype=np.float32)})
    code, _ = run(capsys, "inflate", "--in", str(src),
                  "--out", str(tmp_path / "o.tmap"))
    assert code == 3


# --- eval --------------------------------------------------------------------

def eval_fixture(tmp_path, with_fold=False):
    rows = [("a", 0.9, 1), ("b", 0.8, 1), ("c", 0.7, 0),
            ("d", 0.3, 0), ("e", 0.2, 0), ("f", 0.1, 0)]
    recs = tuple(Prediction(sid, s, y, 0 if with_fold else None)
                 for sid, s, y in rows)
    p = tmp_path / "pred.csv"
    write_predictions(p, PredictionSet(recs))
    return p


def test_eval_worked_values(tmp_path, capsys):
    p = eval_fixture(tmp_path)
    code, text = run(capsys, "eval", "--pred", str(p))
    assert code == 0
    doc = json.loads(text)
    assert doc["confusion"] == {"tp": 2, "fp": 1, "tn": 3, "fn": 0}
    assert abs(doc["mcc"] - 6 / np.sqrt(72)) < 1e-12
    assert doc["auc"] == 1.0  # all positives outrank all negatives
    assert abs(doc["tpr"] - 1.0) < 1e-12
    assert abs(doc["fpr"] - 0.25) < 1e-12


def test_eval_folds(tmp_path, capsys):
    p = eval_fixture(tmp_path, with_fold=True)
    code, text = run(capsys, "eval", "--pred", str(p), "--folds")
    assert code == 0
    assert json.loads(text)["confusion"] == {"tp": 2, "fp": 1, "tn": 3, "fn": 0}


def test_eval_folds_without_column_exit_3(tmp_path, capsys):
    p = eval_fixture(tmp_path)
    code, _ = run(capsys, "eval", "--pred", str(p), "--folds")
    assert code == 3


def test_eval_bad_csv_exit_3(tmp_path, capsys):
    p = tmp_path / "pred.csv"
    p.write_text("sample_id,score,label\na,1.3,1\n")
    code, _ = run(capsys, "eval", "--pred", str(p))
    assert code == 3


def test_eval_missing_file_exit_2(tmp_path, capsys):
    code, _ = run(capsys, "eval", "--pred", str(tmp_path / "nope.csv"))
    assert code == 2


# --- calibrate ----------------------------------------------------------------

def test_calibrate_outputs(tmp_path, capsys):
    rng = np.random.default_rng(0)
    n = 400
    true_p = rng.uniform(0.2, 0.8, size=n)
    labels = (rng.random(n) < true_p).astype(int)
    scores = np.clip(0.5 + (true_p - 0.5) * 3.0, 0, 1)
    recs = tuple(Prediction(f"s{i}", float(s), int(y))
                 for i, (s, y) in enumerate(zip(scores, labels)))
    src = tmp_path / "pred.csv"
    write_predictions(src, PredictionSet(recs))
    out_pred = tmp_path / "cal.csv"
    out_rel = tmp_path / "rel.csv"
    code, text = run(capsys, "calibrate", "--pred", str(src),
                     "--out-pred", str(out_pred),
                     "--out-reliability", str(out_rel), "--seed", "1")
    assert code == 0
    doc = json.loads(text)
    assert doc["n_calibrated"] == 200
    assert doc["error_after"] < doc["error_before"]
    assert len(read_predictions(out_pred)) == 200
    lines = out_rel.read_text().splitlines()
    assert lines[0] == "bin_lo,bin_hi,mean_pred,pos_rate,count"
    assert sum(int(l.split(",")[4]) for l in lines[1:]) == 200
    assert (tmp_path / "rel.png").exists()  # figure rendered alongside


def test_calibrate_infeasible_exit_5(tmp_path, capsys):
    recs = tuple(Prediction(f"s{i}", 0.5, 1 if i == 0 else 0)
                 for i in range(8))
    src = tmp_path / "pred.csv"
    write_predictions(src, PredictionSet(recs))
    code, _ = run(capsys, "calibrate", "--pred", str(src),
                  "--out-pred", str(tmp_path / "c.csv"),
                  "--out-reliability", str(tmp_path / "r.csv"))
    assert code == 5


# --- uncertainty ----------------------------------------------------------------

def test_uncertainty_outputs(tmp_path, capsys):
    src = tmp_path / "probmat.csv"
    src.write_text("sample_id,label,p_0,p_1,p_2\n"
                   "a,0,0.1,0.2,0.3\n"
                   "b,1,0.8,0.8,0.8\n")
    out = tmp_path / "unc.csv"
    code, text = run(capsys, "uncertainty", "--probmat", str(src),
                     "--out", str(out))
    assert code == 0
    doc = json.loads(text)
    assert doc["n_samples"] == 2 and doc["n_draws"] == 3
    assert abs(doc["class0"]["mean_spread"]
               - np.std([0.1, 0.2, 0.3])) < 1e-12
    lines = out.read_text().splitlines()
    assert lines[0] == "sample_id,label,mean,std,spread"
    assert len(lines) == 3
    # cells must be plain repr floats, not numpy scalar reprs
    row_a = lines[1].split(",")
    assert row_a[0] == "a" and row_a[1] == "0"
    assert float(row_a[2]) == pytest.approx(np.mean([0.1, 0.2, 0.3]))
    assert "np.float" not in out.read_text()
    assert (tmp_path / "unc.png").exists()


def test_uncertainty_range_spread(tmp_path, capsys):
    src = tmp_path / "probmat.csv"
    src.write_text("sample_id,label,p_0,p_1\na,0,0.2,0.6\nb,1,0.5,0.5\n")
    out = tmp_path / "unc.csv"
    code, text = run(capsys, "uncertainty", "--probmat", str(src),
                     "--out", str(out), "--spread", "range")
    assert code == 0
    assert abs(json.loads(text)["class0"]["mean_spread"] - 0.4) < 1e-12


# --- roi -----------------------------------------------------------------------

def roi_stack(tmp_path):
    img = np.full((5, 40, 60, 3), 120, dtype=np.uint8)
    rr, cc = np.mgrid[0:40, 0:60]
    disk = (rr - 20) ** 2 + (cc - 30) ** 2 <= 64
    img[:, disk] = (255, 140, 0)
    d = tmp_path / "frames"
    write_png_stack(d, Volume(img))
    return d


def test_roi_crop_and_json(tmp_path, capsys):
    frames = roi_stack(tmp_path)
    out = tmp_path / "roi.vox"
    code, text = run(capsys, "roi", "--frames", str(frames),
                     "--out", str(out), "--pad", "0")
    assert code == 0
    doc = json.loads(text)
    assert doc == {"f0": 0, "f1": 5, "r0": 12, "r1": 29, "c0": 22, "c1": 39}
    assert read_vox1(out).shape == (5, 17, 17, 3)


def test_roi_no_contour_exit_5(tmp_path, capsys):
    d = tmp_path / "frames"
    write_png_stack(d, Volume(np.full((2, 8, 8, 3), 90, dtype=np.uint8)))
    code, _ = run(capsys, "roi", "--frames", str(d),
                  "--out", str(tmp_path / "o.vox"))
    assert code == 5


def test_roi_stats_outputs(tmp_path, capsys):
    cuboids = [{"f0": 0, "f1": 10, "r0": 0, "r1": 20, "c0": 0, "c1": 30},
               {"f0": 2, "f1": 14, "r0": 1, "r1": 25, "c0": 3, "c1": 33}]
    src = tmp_path / "cuboids.json"
    src.write_text(json.dumps(cuboids))
    out = tmp_path / "stats.csv"
    code, text = run(capsys, "roi-stats", "--cuboids", str(src),
                     "--out", str(out))
    assert code == 0
    doc = json.loads(text)
    assert doc["frames"]["mean"] == 11.0
    assert doc["rows"]["mean"] == 22.0
    assert doc["cols"]["mean"] == 30.0
    lines = out.read_text().splitlines()
    assert lines[0] == "axis,mean,p5,p25,p50,p75,p95"
    assert len(lines) == 4
    assert (tmp_path / "stats.png").exists()


def test_roi_stats_bad_json_exit_3(tmp_path, capsys):
    src = tmp_path / "cuboids.json"
    src.write_text("nope")
    code, _ = run(capsys, "roi-stats", "--cuboids", str(src),
                  "--out", str(tmp_path / "s.csv"))
    assert code == 3
    src.write_text("[]")
    code, _ = run(capsys, "roi-stats", "--cuboids", str(src),
                  "--out", str(tmp_path / "s.csv"))
    assert code == 3


# --- heatmap --------------------------------------------------------------------

def test_heatmap_vox_output(tmp_path, capsys):
    rng = np.random.default_rng(0)
    feats = tmp_path / "f.vox"
    write_vox1_array(feats, rng.normal(size=(2, 2, 2, 8)).astype(np.float32))
    src = tmp_path / "in.vox"
    write_vox1(src, small_volume(shape=(4, 4, 4, 1)))
    out = tmp_path / "overlay.vox"
    hm_out = tmp_path / "hm.vox"
    code, text = run(capsys, "heatmap", "--features", str(feats),
                     "--input", str(src), "--out", str(out),
                     "--out-heatmap", str(hm_out), "--factor", "2")
    assert code == 0
    doc = json.loads(text)
    assert doc["heatmap_shape"] == [2, 2, 2, 3]
    assert doc["overlay_shape"] == [4, 4, 4, 3]
    assert read_vox1(out).shape == (4, 4, 4, 3)
    assert read_vox1(hm_out).shape == (2, 2, 2, 3)


def test_heatmap_png_output(tmp_path, capsys):
    rng = np.random.default_rng(1)
    feats = tmp_path / "f.vox"
    write_vox1_array(feats, rng.normal(size=(2, 2, 2, 4)).astype(np.float32))
    src = tmp_path / "in.vox"
    write_vox1(src, small_volume(shape=(4, 4, 4, 3)))
    out = tmp_path / "overlay_stack"
    code, _ = run(capsys, "heatmap", "--features", str(feats),
                  "--input", str(src), "--out", str(out), "--factor", "2")
    assert code == 0
    assert sorted(p.name for p in out.iterdir()) == [
        f"frame_{i:05d}.png" for i in range(4)]


def test_heatmap_grid_mismatch_exit_4(tmp_path, capsys):
    rng = np.random.default_rng(2)
    feats = tmp_path / "f.vox"
    write_vox1_array(feats, rng.normal(size=(3, 3, 3, 4)).astype(np.float32))
    src = tmp_path / "in.vox"
    write_vox1(src, small_volume(shape=(4, 4, 4, 1)))
    code, _ = run(capsys, "heatmap", "--features", str(feats),
                  "--input", str(src), "--out", str(tmp_path / "o.vox"),
                  "--factor", "2")
    assert code == 4


# --- sample ---------------------------------------------------------------------

def labels_csv(tmp_path, labels):
    p = tmp_path / "labels.csv"
    p.write_text("sample_id,label\n" +
                 "".join(f"s{i},{y}\n" for i, y in enumerate(labels)))
    return p


def test_sample_batches(tmp_path, capsys):
    p = labels_csv(tmp_path, [1, 1, 1, 0, 0, 0, 0, 0])
    code, text = run(capsys, "sample", "--labels", str(p),
                     "--batch-size", "4", "--pos-frac", "0.5", "--n", "3",
                     "--seed", "0")
    assert code == 0
    lines = text.splitlines()
    assert len(lines) == 3
    labels = [1, 1, 1, 0, 0, 0, 0, 0]
    for line in lines:
        batch = [int(x) for x in line.split(",")]
        assert len(batch) == 4
        assert sum(labels[i] for i in batch) == 2
    code2, text2 = run(capsys, "sample", "--labels", str(p),
                       "--batch-size", "4", "--pos-frac", "0.5", "--n", "3",
                       "--seed", "0")
    assert text2 == text


def test_sample_infeasible_exit_5(tmp_path, capsys):
    p = labels_csv(tmp_path, [1, 0, 0, 0, 0, 0, 0, 0])
    code, _ = run(capsys, "sample", "--labels", str(p),
                  "--batch-size", "4", "--pos-frac", "0.5", "--n", "1")
    assert code == 5


def test_sample_bad_labels_exit_3(tmp_path, capsys):
    p = tmp_path / "labels.csv"
    p.write_text("sample_id,label\na,2\n")
    code, _ = run(capsys, "sample", "--labels", str(p),
                  "--batch-size", "4", "--pos-frac", "0.5", "--n", "1")
    assert code == 3


# --- bench ----------------------------------------------------------------------

def test_bench_json(tmp_path, capsys):
    code, text = run(capsys, "bench", "--shape", "4,8,8,1",
                     "--target", "4,8,8", "--runs", "3", "--seed", "0")
    assert code == 0
    doc = json.loads(text)
    assert set(doc) >= {"mean_ms", "median_ms", "min_ms", "max_ms", "runs_ms"}
    assert len(doc["runs_ms"]) == 3


def test_bench_bad_shape_exit_3(tmp_path, capsys):
    code, _ = run(capsys, "bench", "--shape", "4,8,8")
    assert code == 3


# --- parser level -----------------------------------------------------------------

def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_version_flag(capsys):
    import voxflow
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip() == f"voxflow {voxflow.__version__}"


def test_console_script_smoke(tmp_path):
    src = tmp_path / "in.vox"
    write_vox1(src, small_volume())
    out = tmp_path / "out.vox"
    proc = subprocess.run(
        [sys.executable, "-m", "voxflow", "augment", "--preset", "mirror3",
         "--target", "4,8,8", "--in", str(src), "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["out_shape"] == [4, 8, 8, 1]
    assert out.exists()
