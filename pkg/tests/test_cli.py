import json

import numpy as np
import pytest
from PIL import Image as PILImage

from gtsal import cli, synth
from gtsal.evaluation import adaptive_f_measure, auc
from gtsal.imgio import load_gray, load_image, read_ftns, save_gray_png
from gtsal.pipeline import PipelineConfig, run_multiscale

FAST_ARGS = ["--scales", "80", "--T", "5"]


@pytest.fixture(scope="module")
def scene_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("scenes")
    synth.write_corpus(out, size=64, seed=3)
    return out


def test_detect_writes_expected_png(tmp_path, scene_dir):
    out = tmp_path / "map.png"
    code = cli.main(
        ["detect", str(scene_dir / "centered-square.png"), "--out", str(out), *FAST_ARGS]
    )
    assert code == 0
    with PILImage.open(out) as im:
        assert im.mode == "L"
        assert im.size == (64, 64)


def test_detect_matches_library_bytes(tmp_path, scene_dir):
    image_path = scene_dir / "centered-square.png"
    cli_out = tmp_path / "cli.png"
    assert cli.main(["detect", str(image_path), "--out", str(cli_out), *FAST_ARGS]) == 0
    lib_out = tmp_path / "lib.png"
    cfg = PipelineConfig(scales=(80,), T=5)
    save_gray_png(lib_out, run_multiscale(load_image(image_path), cfg).values)
    assert cli_out.read_bytes() == lib_out.read_bytes()


def test_detect_accepts_binary_ppm(tmp_path):
    img, _ = synth.make_scene("centered-square", size=32, seed=2)
    ppm = tmp_path / "scene.ppm"
    PILImage.fromarray(img, mode="RGB").save(ppm, format="PPM")
    assert ppm.read_bytes().startswith(b"P6")
    out = tmp_path / "map.png"
    assert cli.main(["detect", str(ppm), "--out", str(out), "--scales", "40", "--T", "3"]) == 0
    with PILImage.open(out) as im:
        assert im.size == (32, 32)


def test_detect_missing_file_exits_two(tmp_path, capsys):
    code = cli.main(["detect", str(tmp_path / "nope.png"), "--out", str(tmp_path / "o.png")])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_detect_bad_config_exits_two(tmp_path, scene_dir):
    bad = tmp_path / "cfg.json"
    bad.write_text("{broken")
    code = cli.main(
        [
            "detect",
            str(scene_dir / "centered-square.png"),
            "--config",
            str(bad),
            "--out",
            str(tmp_path / "o.png"),
        ]
    )
    assert code == 2


def test_detect_float_out_round_trips(tmp_path, scene_dir):
    out = tmp_path / "map.png"
    fout = tmp_path / "map.ftns"
    code = cli.main(
        [
            "detect",
            str(scene_dir / "centered-square.png"),
            "--out",
            str(out),
            "--float-out",
            str(fout),
            *FAST_ARGS,
        ]
    )
    assert code == 0
    tensor = read_ftns(fout)
    assert tensor.shape == (64, 64, 1)
    assert tensor.min() >= 0.0 and tensor.max() <= 1.0


def test_detect_parallel_matches_sequential(tmp_path, scene_dir):
    images = [str(scene_dir / "centered-square.png"), str(scene_dir / "two-object.png")]
    seq = tmp_path / "seq"
    par = tmp_path / "par"
    assert cli.main(["detect", *images, "--out-dir", str(seq), *FAST_ARGS]) == 0
    assert cli.main(["detect", *images, "--out-dir", str(par), "--jobs", "2", *FAST_ARGS]) == 0
    for name in ("centered-square.png", "two-object.png"):
        assert (seq / name).read_bytes() == (par / name).read_bytes()


def test_synth_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert cli.main(["synth", "--kind", "all", "--out", str(a), "--seed", "7"]) == 0
    assert cli.main(["synth", "--kind", "all", "--out", str(b), "--seed", "7"]) == 0
    for path in sorted(a.iterdir()):
        assert path.read_bytes() == (b / path.name).read_bytes()


def test_synth_ground_truth_exact(tmp_path):
    assert cli.main(["synth", "--kind", "centered-square", "--out", str(tmp_path), "--seed", "5"]) == 0
    _, gt = synth.make_scene("centered-square", size=64, seed=5)
    written = load_gray(tmp_path / "centered-square_gt.png") != 0
    assert np.array_equal(written, gt)
    ys, xs = np.nonzero(gt)
    assert (ys.max() - ys.min() + 1) * (xs.max() - xs.min() + 1) == gt.sum()


def test_synth_boundary_touching_hits_border(tmp_path):
    assert cli.main(["synth", "--kind", "boundary-touching", "--out", str(tmp_path)]) == 0
    gt = load_gray(tmp_path / "boundary-touching_gt.png") != 0
    border = np.zeros_like(gt)
    border[0, :] = border[-1, :] = True
    border[:, 0] = border[:, -1] = True
    assert (gt & border).any()


def test_eval_perfect_maps(tmp_path, capsys):
    maps = tmp_path / "maps"
    gts = tmp_path / "gts"
    maps.mkdir()
    gts.mkdir()
    for i, kind in enumerate(synth.KINDS[:3]):
        _, gt = synth.make_scene(kind, size=32, seed=i)
        save_gray_png(maps / f"{kind}.png", gt.astype(np.float64))
        save_gray_png(gts / f"{kind}.png", gt.astype(np.float64))
    out = tmp_path / "report"
    code = cli.main(["eval", str(maps), str(gts), "--out-dir", str(out)])
    assert code == 0
    captured = capsys.readouterr().out
    assert "mean F (adaptive): 1.0000" in captured
    assert "mean AUC: 1.0000" in captured
    assert (out / "metrics.csv").exists()
    assert (out / "curves.json").exists()
    assert (out / "pr_curves.png").exists()
    assert (out / "f_curves.png").exists()


def test_eval_means_match_per_image_oracle(tmp_path, capsys, rng):
    maps = tmp_path / "maps"
    gts = tmp_path / "gts"
    maps.mkdir()
    gts.mkdir()
    expected_f, expected_auc = [], []
    for i in range(3):
        gt = rng.random((24, 24)) < 0.4
        gt[0, 0] = True
        gt[1, 1] = False
        saliency = np.clip(gt * 0.8 + rng.uniform(0, 0.3, size=gt.shape), 0, 1)
        save_gray_png(maps / f"img{i}.png", saliency)
        save_gray_png(gts / f"img{i}.png", gt.astype(np.float64))
        # The oracle reloads what was written so quantization matches.
        stored = load_gray(maps / f"img{i}.png").astype(np.float64) / 255.0
        stored_gt = load_gray(gts / f"img{i}.png") != 0
        expected_f.append(adaptive_f_measure(stored, stored_gt))
        expected_auc.append(auc(stored, stored_gt))
    out = tmp_path / "report"
    assert cli.main(["eval", str(maps), str(gts), "--out-dir", str(out), "--no-plots"]) == 0
    captured = capsys.readouterr().out
    assert f"mean F (adaptive): {np.mean(expected_f):.4f}" in captured
    assert f"mean AUC: {np.mean(expected_auc):.4f}" in captured
    assert not (out / "pr_curves.png").exists()
    rows = (out / "metrics.csv").read_text().strip().splitlines()
    assert rows[0] == "image,f_adaptive,auc"
    assert len(rows) == 4


def test_eval_missing_gt_exits_two(tmp_path, capsys):
    maps = tmp_path / "maps"
    gts = tmp_path / "gts"
    maps.mkdir()
    gts.mkdir()
    save_gray_png(maps / "a.png", np.zeros((8, 8)))
    save_gray_png(maps / "b.png", np.zeros((8, 8)))
    save_gray_png(gts / "a.png", np.ones((8, 8)))
    code = cli.main(["eval", str(maps), str(gts), "--out-dir", str(tmp_path / "r")])
    assert code == 2
    assert "b.png" in capsys.readouterr().err


def test_bench_runs(tmp_path, scene_dir, capsys):
    code = cli.main(["bench", str(scene_dir / "centered-square.png"), "--scales", "80"])
    assert code == 0
    assert "total=" in capsys.readouterr().out


def test_invalid_log_level_exits_two(monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("SG_LOG", "loud")
    code = cli.main(["synth", "--out", str(tmp_path)])
    assert code == 2
    assert "SG_LOG" in capsys.readouterr().err


def test_config_file_plus_flag_override(tmp_path, scene_dir):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"scales": [80], "T": 5, "rho1": 0.5, "rho2": 0.5}))
    flagged = tmp_path / "flagged.png"
    code = cli.main(
        [
            "detect",
            str(scene_dir / "centered-square.png"),
            "--config",
            str(cfg_path),
            "--T",
            "2",
            "--out",
            str(flagged),
        ]
    )
    assert code == 0
    direct = tmp_path / "direct.png"
    cfg = PipelineConfig(scales=(80,), T=2, rho1=0.5, rho2=0.5)
    save_gray_png(direct, run_multiscale(load_image(scene_dir / "centered-square.png"), cfg).values)
    assert flagged.read_bytes() == direct.read_bytes()
