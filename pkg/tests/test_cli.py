import csv
import subprocess
import sys

import numpy as np
import pytest

from conftest import make_disc_scene
from framelet_restore.cli import main, parse_config, resolve_params
from framelet_restore.degrade import PeriodicBlur, matlab_gaussian_kernel
from framelet_restore.grid_image import load_image, save_image
from framelet_restore.solver import PRESETS


@pytest.fixture
def scene_path(tmp_path):
    path = tmp_path / "scene.pgm"
    save_image(str(path), make_disc_scene(32))
    return str(path)


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def test_eval_identical_images_prints_inf(scene_path, capsys):
    assert main(["eval", "--ref", scene_path, "--test", scene_path]) == 0
    assert capsys.readouterr().out.strip() == "inf"


def test_eval_csv_appends_with_single_header(scene_path, tmp_path, capsys):
    noisy = tmp_path / "noisy.pgm"
    save_image(str(noisy), make_disc_scene(32) + 8.0)
    out = tmp_path / "log.csv"
    assert main(["eval", "--ref", scene_path, "--test", scene_path,
                 "--out", str(out)]) == 0
    assert main(["eval", "--ref", scene_path, "--test", str(noisy),
                 "--out", str(out)]) == 0
    capsys.readouterr()
    rows = _read_csv(out)
    assert rows[0] == ["ref", "test", "psnr", "psnr_clamped"]
    assert len(rows) == 3
    assert rows[1][2] == "inf"
    assert float(rows[2][2]) == pytest.approx(float(rows[2][3]))


def test_eval_write_failure_is_runtime_error(scene_path, tmp_path, capsys):
    rc = main(["eval", "--ref", scene_path, "--test", scene_path,
               "--out", str(tmp_path)])  # a directory, not a file
    assert rc == 3
    capsys.readouterr()


def test_eval_missing_file_is_usage_error(scene_path, tmp_path, capsys):
    rc = main(["eval", "--ref", scene_path, "--test", str(tmp_path / "nope.pgm")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# degrade
# ---------------------------------------------------------------------------

def test_degrade_identity_roundtrip(scene_path, tmp_path, capsys):
    out = tmp_path / "copy.pgm"
    assert main(["degrade", scene_path, str(out)]) == 0
    capsys.readouterr()
    assert np.array_equal(load_image(str(out)), load_image(scene_path))


def test_degrade_inpaint_writes_mask_and_zeros(scene_path, tmp_path, capsys):
    out = tmp_path / "holes.pgm"
    mask_out = tmp_path / "mask.pgm"
    assert main(["degrade", scene_path, str(out), "--op", "inpaint",
                 "--mask-fraction", "0.3", "--seed", "5",
                 "--mask-out", str(mask_out)]) == 0
    capsys.readouterr()
    mask = load_image(str(mask_out))
    assert set(np.unique(mask)) == {0.0, 255.0}
    lost = mask == 0.0
    assert 0.2 < lost.mean() < 0.4
    measured = load_image(str(out))
    assert np.all(measured[lost] == 0.0)
    clean = load_image(scene_path)
    assert np.array_equal(measured[~lost], clean[~lost])


def test_degrade_inpaint_requires_a_mask_source(scene_path, tmp_path, capsys):
    rc = main(["degrade", scene_path, str(tmp_path / "x.pgm"), "--op", "inpaint"])
    assert rc == 2
    assert "mask" in capsys.readouterr().err


def test_degrade_rect_mask(scene_path, tmp_path, capsys):
    out = tmp_path / "rect.pgm"
    mask_out = tmp_path / "rect_mask.pgm"
    assert main(["degrade", scene_path, str(out), "--op", "inpaint",
                 "--mask-rects", "4,6,3,5; 20,20,2,2",
                 "--mask-out", str(mask_out)]) == 0
    capsys.readouterr()
    mask = load_image(str(mask_out))
    assert np.all(mask[4:7, 6:11] == 0.0)
    assert np.all(mask[20:22, 20:22] == 0.0)
    assert mask.sum() == 255.0 * (32 * 32 - 15 - 4)


def test_degrade_malformed_rects(scene_path, tmp_path, capsys):
    rc = main(["degrade", scene_path, str(tmp_path / "x.pgm"), "--op", "inpaint",
               "--mask-rects", "1,2,3"])
    assert rc == 2
    capsys.readouterr()


def test_degrade_blur_matches_operator(scene_path, tmp_path, capsys):
    out = tmp_path / "blurred.pgm"
    assert main(["degrade", scene_path, str(out), "--op", "blur",
                 "--hsize", "5", "--sigma-blur", "1.5"]) == 0
    capsys.readouterr()
    op = PeriodicBlur(matlab_gaussian_kernel(5, 1.5))
    expect = np.clip(np.rint(op.apply(load_image(scene_path))), 0, 255)
    assert np.array_equal(load_image(str(out)), expect)


def test_degrade_noise_is_seed_reproducible(scene_path, tmp_path, capsys):
    a, b = tmp_path / "a.pgm", tmp_path / "b.pgm"
    for out in (a, b):
        assert main(["degrade", scene_path, str(out),
                     "--noise-sigma", "10", "--seed", "3"]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()


# ---------------------------------------------------------------------------
# restore
# ---------------------------------------------------------------------------

def test_restore_denoise_writes_trace(scene_path, tmp_path, capsys):
    noisy = tmp_path / "noisy.pgm"
    save_image(str(noisy), make_disc_scene(32))
    main(["degrade", scene_path, str(noisy), "--noise-sigma", "4", "--seed", "1"])
    out = tmp_path / "restored.pgm"
    trace = tmp_path / "trace.csv"
    rc = main(["restore", str(noisy), str(out), "--task", "denoise",
               "--ref", scene_path, "--trace", str(trace),
               "--outer", "3", "--inner-u", "5", "--inner-v", "5"])
    capsys.readouterr()
    assert rc == 0
    rows = _read_csv(trace)
    assert rows[0] == ["round", "energy", "psnr", "psnr_clamped"]
    energies = [float(r[1]) for r in rows[1:]]
    assert len(energies) >= 2
    for prev, cur in zip(energies, energies[1:]):
        assert cur <= prev + 1e-6 * abs(prev)
    assert np.isfinite([float(r[2]) for r in rows[2:]]).all()
    assert load_image(str(out)).shape == (32, 32)


def test_restore_inpaint_requires_mask_flag(scene_path, tmp_path, capsys):
    rc = main(["restore", scene_path, str(tmp_path / "x.pgm"),
               "--task", "inpaint"])
    assert rc == 2
    assert "--mask" in capsys.readouterr().err


def test_restore_dump_v_writes_edge_planes(scene_path, tmp_path, capsys):
    out = tmp_path / "restored.pgm"
    prefix = tmp_path / "edges"
    rc = main(["restore", scene_path, str(out), "--task", "denoise",
               "--levels", "1", "--outer", "2", "--inner-u", "3",
               "--inner-v", "3", "--dump-v", str(prefix)])
    capsys.readouterr()
    assert rc == 0
    plane = load_image(str(prefix) + "_l0.pgm")
    assert plane.shape == (32, 32)
    assert plane.min() >= 0.0 and plane.max() <= 255.0


def test_restore_baseline_model_runs(scene_path, tmp_path, capsys):
    out = tmp_path / "base.pgm"
    rc = main(["restore", scene_path, str(out), "--task", "denoise",
               "--model", "l1-baseline", "--outer", "2",
               "--inner-u", "3", "--inner-v", "3"])
    capsys.readouterr()
    assert rc == 0


# ---------------------------------------------------------------------------
# parameter resolution
# ---------------------------------------------------------------------------

def test_parse_config_roundtrip(tmp_path):
    cfg = tmp_path / "params.cfg"
    cfg.write_text(
        "# solver knobs\n"
        "lam = 2.5\n"
        "levels = 2   # two decomposition scales\n"
        "smooth_bank = cubic\n"
        "\n"
    )
    values = parse_config(str(cfg))
    assert values == {"lam": 2.5, "levels": 2, "smooth_bank": "cubic"}


def test_parse_config_rejects_unknown_keys_and_junk(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("volume = 11\n")
    with pytest.raises(ValueError, match="unknown parameter"):
        parse_config(str(bad))
    bad.write_text("just words\n")
    with pytest.raises(ValueError, match="key = value"):
        parse_config(str(bad))
    with pytest.raises(FileNotFoundError):
        parse_config(str(tmp_path / "absent.cfg"))


def test_resolve_params_layering(tmp_path):
    cfg = tmp_path / "params.cfg"
    cfg.write_text("lam = 7\ngamma = 9\n")
    base = PRESETS["inpaint-default"]
    params = resolve_params("inpaint-default", str(cfg), {"gamma": 11.0, "rho": None})
    assert params.lam == 7.0          # config overrides the preset
    assert params.gamma == 11.0       # flag overrides the config
    assert params.rho == base.rho     # None flags fall through
    assert params.levels == base.levels
    with pytest.raises(ValueError, match="unknown preset"):
        resolve_params("sharpen", None, {})


def test_restore_config_file_flag(scene_path, tmp_path, capsys):
    cfg = tmp_path / "params.cfg"
    cfg.write_text("outer = 2\ninner_u = 3\ninner_v = 3\n")
    rc = main(["restore", scene_path, str(tmp_path / "o.pgm"),
               "--task", "denoise", "--config", str(cfg)])
    capsys.readouterr()
    assert rc == 0
    cfg.write_text("sharpness = 3\n")
    rc = main(["restore", scene_path, str(tmp_path / "o.pgm"),
               "--task", "denoise", "--config", str(cfg)])
    assert rc == 2
    capsys.readouterr()


# ---------------------------------------------------------------------------
# filters / convergence-test
# ---------------------------------------------------------------------------

def test_filters_dump_taps_and_deviations(tmp_path, capsys):
    out = tmp_path / "filters.csv"
    assert main(["filters", "dump", "--out", str(out)]) == 0
    capsys.readouterr()
    rows = _read_csv(out)
    assert rows[0] == ["bank", "band", "offset", "value"]
    blank = rows.index([])
    taps = {(r[0], int(r[1]), int(r[2])): float(r[3]) for r in rows[1:blank]}
    assert taps[("linear", 0, 0)] == 0.5
    assert taps[("linear", 0, -1)] == 0.25
    assert taps[("linear", 1, -1)] == pytest.approx(np.sqrt(2) / 4)
    assert taps[("cubic", 0, 0)] == 0.375
    assert taps[("cubic", 4, 0)] == 0.375
    dev_header = rows.index(["bank", "n_freq", "partition_deviation", "shift_deviation"])
    for r in rows[dev_header + 1:]:
        assert float(r[2]) < 1e-12 and float(r[3]) < 1e-12


def test_convergence_csv_constant_pair(tmp_path, capsys):
    out = tmp_path / "rows.csv"
    rc = main(["convergence-test", "--test-fn", "constant",
               "--n-list", "3,4", "--out", str(out)])
    printed = capsys.readouterr().out
    assert rc == 0
    assert "n=3" in printed and "n=4" in printed
    rows = _read_csv(out)
    assert rows[0] == ["n", "E_n", "E", "rel_err"]
    assert float(rows[1][1]) == pytest.approx(0.3828125, abs=1e-12)
    assert float(rows[2][1]) == pytest.approx(0.439453125, abs=1e-12)
    assert float(rows[1][2]) == pytest.approx(0.5, abs=1e-8)
    assert float(rows[2][3]) < float(rows[1][3])


def test_module_entry_point(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "framelet_restore", "filters", "dump"],
        capture_output=True, text=True,
    )
    assert result.returncode == 0
    assert "linear" in result.stdout and "cubic" in result.stdout
