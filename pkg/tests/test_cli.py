import numpy as np
import pytest

from sandr.cli import main
from sandr.fileio import read_image, write_image
from sandr.grid import relative_rms
from sandr.simulate import bandlimited_random


def write_truth(tmp_path, size=64, seed=1):
    truth = bandlimited_random(size, seed=seed)
    path = tmp_path / "truth.pgm"
    write_image(path, truth, bit_depth=16)
    return path, read_image(path)  # quantized truth, what the CLI actually sees


def simulate_args(tmp_path, truth_path, outdir, extra=()):
    return [
        "simulate",
        "--truth", str(truth_path),
        "--outdir", str(outdir),
        "--tau", "2", "--frames", "4", "--zones", "8",
        "--psf-size", "7", "--pupil-grid", "32",
        "--dmax", "0.05", "--seed", "9",
        *extra,
    ]


def test_simulate_reconstruct_evaluate_pipeline(tmp_path, capsys):
    truth_path, truth = write_truth(tmp_path)
    data_dir = tmp_path / "data"
    assert main(simulate_args(tmp_path, truth_path, data_dir)) == 0
    manifest = data_dir / "manifest.txt"
    assert manifest.exists()
    frames = sorted(data_dir.glob("frame_*.pgm"))
    assert len(frames) == 4
    for frame in frames:
        assert read_image(frame).shape == (32, 32)

    out_dir = tmp_path / "out"
    code = main([
        "reconstruct", "--manifest", str(manifest), "--outdir", str(out_dir),
        "--solver", "sandr", "--iterations", "60",
        "--truth", str(truth_path),
    ])
    assert code == 0
    sr = read_image(out_dir / "sr_sandr.pgm")
    assert sr.shape == (64, 64)
    assert relative_rms(sr, truth) < 0.05
    trace = (out_dir / "trace_sandr.csv").read_text().splitlines()
    assert trace[0] == "# sandr.trace.v1"
    assert trace[1] == "iteration,grad_norm_sum,rms"
    assert len(trace) == 2 + 61

    assert main(["evaluate", str(out_dir / "sr_sandr.pgm"), str(truth_path)]) == 0
    printed = capsys.readouterr().out.strip().splitlines()[-1]
    assert float(printed) == pytest.approx(relative_rms(sr, truth), abs=1e-7)


def test_simulate_deterministic_rerun(tmp_path):
    truth_path, _ = write_truth(tmp_path)
    dir_a, dir_b = tmp_path / "a", tmp_path / "b"
    assert main(simulate_args(tmp_path, truth_path, dir_a)) == 0
    assert main(simulate_args(tmp_path, truth_path, dir_b)) == 0
    for name in ["manifest.txt"] + [f"frame_{m:03d}.pgm" for m in range(4)]:
        assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes()


def test_reconstruct_deterministic_and_solver_variants(tmp_path):
    truth_path, _ = write_truth(tmp_path)
    data_dir = tmp_path / "data"
    main(simulate_args(tmp_path, truth_path, data_dir))
    manifest = str(data_dir / "manifest.txt")
    out_a, out_b = tmp_path / "ra", tmp_path / "rb"
    base = ["reconstruct", "--manifest", manifest, "--iterations", "10"]
    for out in (out_a, out_b):
        assert main(base + ["--outdir", str(out), "--solver", "pg"]) == 0
    assert (out_a / "sr_pg.pgm").read_bytes() == (out_b / "sr_pg.pgm").read_bytes()
    assert (out_a / "trace_pg.csv").read_bytes() == (out_b / "trace_pg.csv").read_bytes()
    # trace has no RMS column without --truth and no wall time without --timing
    header = (out_a / "trace_pg.csv").read_text().splitlines()[1]
    assert header == "iteration,grad_norm_sum"
    # remaining solvers run end to end on the same manifest
    for solver in ("sm", "l1btv", "l1btvl", "l2btv"):
        out = tmp_path / f"r_{solver}"
        assert main(base + ["--outdir", str(out), "--solver", solver]) == 0
        assert (out / f"sr_{solver}.pgm").exists()


def test_missing_truth_is_io_error(tmp_path, capsys):
    code = main([
        "simulate", "--truth", str(tmp_path / "absent.pgm"),
        "--outdir", str(tmp_path / "data"),
    ])
    assert code == 2
    assert "absent.pgm" in capsys.readouterr().err
    assert not (tmp_path / "data").exists()  # no partial output


def test_unknown_solver_is_usage_error(tmp_path):
    assert main(["reconstruct", "--manifest", "x", "--solver", "magic"]) == 1


def test_malformed_config_names_field(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("zones = many\n")
    truth_path, _ = write_truth(tmp_path)
    code = main([
        "simulate", "--config", str(cfg),
        "--truth", str(truth_path), "--outdir", str(tmp_path / "d"),
    ])
    assert code == 1
    assert "zones" in capsys.readouterr().err


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("zoness = 4\n")
    assert main(["sweep", "--kind", "convergence", "--config", str(cfg)]) == 1
    assert "zoness" in capsys.readouterr().err


def test_manifest_frame_mismatch_is_io_error(tmp_path, capsys):
    truth_path, _ = write_truth(tmp_path)
    data_dir = tmp_path / "data"
    main(simulate_args(tmp_path, truth_path, data_dir))
    # overwrite one frame with wrong dimensions
    write_image(data_dir / "frame_000.pgm", np.zeros((8, 8)), bit_depth=16)
    code = main([
        "reconstruct", "--manifest", str(data_dir / "manifest.txt"),
        "--outdir", str(tmp_path / "o"), "--solver", "pg",
    ])
    assert code == 2


def test_sweep_convergence_and_counting(tmp_path):
    out = tmp_path / "sw"
    code = main([
        "sweep", "--kind", "convergence", "--outdir", str(out),
        "--lr-size", "32", "--zones", "8", "--psf-size", "7",
        "--pupil-grid", "32", "--iterations", "4",
        "--deblur-iterations", "4",
    ])
    assert code == 0
    for solver in ("pg", "sm", "sandr"):
        lines = (out / f"convergence_{solver}.csv").read_text().splitlines()
        assert len(lines) == 2 + 5  # schema + header + init + 4 iterations

    code = main([
        "sweep", "--kind", "solvability", "--outdir", str(out),
        "--lr-size", "32", "--zones", "8", "--psf-size", "7",
        "--pupil-grid", "32", "--iterations", "3", "--deblur-iterations", "3",
        "--trials", "2", "--dmax-list", "0.06,0.12",
    ])
    assert code == 0
    raw = (out / "solvability_raw.csv").read_text().splitlines()
    assert len(raw) == 2 + 2 * 2 * 3  # values x trials x solvers


def test_sweep_noise_frames_cropping_kinds(tmp_path):
    out = tmp_path / "sw"
    tiny = [
        "--lr-size", "32", "--zones", "8", "--psf-size", "7",
        "--pupil-grid", "32", "--iterations", "3", "--deblur-iterations", "3",
        "--trials", "1", "--outdir", str(out),
    ]
    assert main(["sweep", "--kind", "noise", "--snr-list", "50", *tiny]) == 0
    assert (out / "noise_raw.csv").exists()
    assert main(["sweep", "--kind", "frames", "--counts", "2,4", "--tau", "2", *tiny]) == 0
    raw = (out / "frames_raw.csv").read_text().splitlines()
    assert len(raw) == 2 + 2 * 1 * 3
    assert main(["sweep", "--kind", "cropping", *tiny]) == 0
    assert (out / "cropping_summary.csv").exists()
    assert (out / "cropping_sandr.pgm").exists()


def test_sweep_unknown_kind(tmp_path):
    assert main(["sweep", "--kind", "everything"]) == 1


def test_preset_table1_full_geometry(tmp_path):
    # table1 preset on a 330x330 truth: four 165x165 frames
    from sandr.simulate import resolution_target

    truth_path = tmp_path / "truth330.pgm"
    write_image(truth_path, resolution_target(330), bit_depth=16)
    out = tmp_path / "p"
    code = main([
        "simulate", "--preset", "table1", "--truth", str(truth_path),
        "--outdir", str(out),
    ])
    assert code == 0
    frames = sorted(out.glob("frame_*.pgm"))
    assert len(frames) == 4
    assert all(read_image(f).shape == (165, 165) for f in frames)


def test_outdir_env_var(tmp_path, monkeypatch):
    truth_path, _ = write_truth(tmp_path)
    env_dir = tmp_path / "from_env"
    monkeypatch.setenv("SANDR_OUTDIR", str(env_dir))
    code = main([
        "simulate", "--truth", str(truth_path),
        "--tau", "2", "--frames", "4", "--zones", "8",
        "--psf-size", "7", "--pupil-grid", "32",
    ])
    assert code == 0
    assert (env_dir / "manifest.txt").exists()


def test_config_file_with_preset_and_overrides(tmp_path):
    truth_path, _ = write_truth(tmp_path)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("preset = table1\nzones = 8\npsf_size = 7\npupil_grid = 32\nseed = 4\n")
    out = tmp_path / "cfgout"
    code = main([
        "simulate", "--config", str(cfg), "--truth", str(truth_path),
        "--outdir", str(out), "--seed", "5",
    ])
    assert code == 0
    text = (out / "manifest.txt").read_text()
    assert "seed = 5" in text  # CLI flag wins over config file
