"""Command-line interface: simulate, reconstruct, sweep, evaluate.

Commands are pure functions of their input files, flags and the master
seed; rerunning with identical inputs produces bitwise-identical output
files. Timing columns are therefore opt-in (--timing).

Exit codes: 0 success, 1 usage or configuration error, 2 IO error,
3 numeric failure (non-finite iterate). The default output directory can
be set through the SANDR_OUTDIR environment variable.

Parameter presets named table1/table2/table3 mirror the reference
experiment parameter sets (common, solvability-scale, cropping-scale);
a config file overrides a preset and explicit flags override both.
"""

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .fileio import (
    FrameEntry,
    Manifest,
    read_config_file,
    read_image,
    read_manifest,
    write_csv,
    write_image,
    write_manifest,
)
from .grid import relative_rms
from .operators import BlurOperator, FrameModel
from .optics import build_psf_stack, build_zone_masks
from .simulate import (
    NoiseSpec,
    apply_noise,
    generate_frames,
    make_scene,
    shift_grid_order,
)
from .solvers import (
    BASELINE_METHODS,
    BtvConfig,
    NumericError,
    SolverConfig,
    baseline_solve,
    pg,
    sandr,
    sm,
)
from .sweeps import (
    ExperimentConfig,
    run_convergence_trace,
    run_cropping_study,
    run_frame_count_study,
    run_noise_sweep,
    run_solvability_sweep,
    summarize,
)

SOLVER_CHOICES = ("sandr", "pg", "sm") + BASELINE_METHODS
SWEEP_KINDS = ("solvability", "noise", "frames", "cropping", "convergence")

PRESETS = {
    # common parameters: 4 frames, tau 2, 11-pixel PSFs, unit step
    "table1": {"frames": 4, "tau": 2, "psf_size": 11, "step": 1.0, "t0": 1.0},
    # solvability-analysis scale: 165x165 LR, 55 zones, focal zone 28
    "table2": {
        "frames": 4, "tau": 2, "psf_size": 11, "step": 1.0, "t0": 1.0,
        "zones": 55, "focal": 28, "lr_size": 165, "iterations": 50, "dmax": 0.06,
    },
    # cropping-analysis scale: 255x255 LR, 85 zones, focal zone 43
    "table3": {
        "frames": 4, "tau": 2, "psf_size": 11, "step": 1.0, "t0": 1.0,
        "zones": 85, "focal": 43, "lr_size": 255, "iterations": 50, "dmax": 0.09,
    },
}


class UsageError(Exception):
    """Bad flags or configuration (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="sandr",
        description="Multi-frame superresolution with nonuniform defocus removal",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--outdir", help="output directory (default $SANDR_OUTDIR or .)")
        p.add_argument("--seed", type=int)

    p_sim = sub.add_parser("simulate", help="synthesize LR frames from a truth image")
    common(p_sim)
    p_sim.add_argument("--truth", help="path to the SR ground-truth image")
    p_sim.add_argument("--frames", type=int, help="number of LR frames")
    p_sim.add_argument("--tau", type=int, help="superresolution factor")
    p_sim.add_argument("--zones", type=int, help="defocus zones per frame")
    p_sim.add_argument("--focal", type=int, help="in-focus zone index (1-based)")
    p_sim.add_argument("--dmax", type=float, help="upper bound of blur coefficients")
    p_sim.add_argument("--psf-size", dest="psf_size", type=int)
    p_sim.add_argument("--pupil-grid", dest="pupil_grid", type=int)
    p_sim.add_argument("--noise", choices=("none", "poisson", "gaussian_snr"))
    p_sim.add_argument("--photon-budget", dest="photon_budget", type=float)
    p_sim.add_argument("--snr-db", dest="snr_db", type=float)
    p_sim.add_argument("--bit-depth", dest="bit_depth", type=int, choices=(8, 16))
    p_sim.add_argument(
        "--shifts", help="semicolon-separated row,col shifts in LR pixels"
    )

    p_rec = sub.add_parser("reconstruct", help="reconstruct the SR image from frames")
    common(p_rec)
    p_rec.add_argument("--manifest", help="manifest written by simulate")
    p_rec.add_argument("--solver", choices=SOLVER_CHOICES)
    p_rec.add_argument("--truth", help="optional truth image enabling RMS tracing")
    p_rec.add_argument("--iterations", type=int)
    p_rec.add_argument("--deblur-iterations", dest="deblur_iterations", type=int)
    p_rec.add_argument("--step", type=float)
    p_rec.add_argument("--t0", type=float)
    p_rec.add_argument("--stop-eps", dest="stop_eps", type=float)
    p_rec.add_argument("--btv-reg", dest="btv_reg", type=float)
    p_rec.add_argument("--btv-decay", dest="btv_decay", type=float)
    p_rec.add_argument("--btv-window", dest="btv_window", type=int)
    p_rec.add_argument("--btv-laplace", dest="btv_laplace", type=float)
    p_rec.add_argument("--bit-depth", dest="bit_depth", type=int, choices=(8, 16))
    p_rec.add_argument("--timing", action="store_true",
                       help="include wall-time column in the trace CSV")

    p_swp = sub.add_parser("sweep", help="run an experiment sweep, emit CSV")
    common(p_swp)
    p_swp.add_argument("--kind", choices=SWEEP_KINDS)
    p_swp.add_argument("--truth", help="optional truth image (default: synthetic target)")
    p_swp.add_argument("--lr-size", dest="lr_size", type=int)
    p_swp.add_argument("--frames", type=int)
    p_swp.add_argument("--tau", type=int)
    p_swp.add_argument("--zones", type=int)
    p_swp.add_argument("--focal", type=int)
    p_swp.add_argument("--dmax", type=float)
    p_swp.add_argument("--psf-size", dest="psf_size", type=int)
    p_swp.add_argument("--pupil-grid", dest="pupil_grid", type=int)
    p_swp.add_argument("--noise", choices=("none", "poisson", "gaussian_snr"))
    p_swp.add_argument("--photon-budget", dest="photon_budget", type=float)
    p_swp.add_argument("--iterations", type=int)
    p_swp.add_argument("--deblur-iterations", dest="deblur_iterations", type=int)
    p_swp.add_argument("--step", type=float)
    p_swp.add_argument("--t0", type=float)
    p_swp.add_argument("--trials", type=int)
    p_swp.add_argument("--workers", type=int)
    p_swp.add_argument("--dmax-list", dest="dmax_list", help="comma-separated values")
    p_swp.add_argument("--snr-list", dest="snr_list", help="comma-separated dB values")
    p_swp.add_argument("--counts", help="comma-separated frame counts")

    p_eval = sub.add_parser("evaluate", help="relative RMS between two images")
    p_eval.add_argument("estimate")
    p_eval.add_argument("reference")
    return parser


DEFAULTS = {
    "frames": 4, "tau": 2, "zones": 55, "focal": None, "dmax": 0.06,
    "psf_size": 11, "pupil_grid": 64, "noise": "poisson",
    "photon_budget": 1e12, "snr_db": 45.0, "seed": 0, "bit_depth": 16,
    "solver": "sandr", "iterations": 50, "deblur_iterations": 50,
    "step": 1.0, "t0": 1.0, "stop_eps": None,
    "btv_reg": 5e-4, "btv_decay": 0.7, "btv_window": 2, "btv_laplace": 5e-4,
    "kind": "convergence", "lr_size": 165, "trials": 20, "workers": 1,
    "dmax_list": "0.06,0.12,0.24", "snr_list": "45,55,65", "counts": "2,4,8,16",
    "shifts": None, "truth": None, "manifest": None, "timing": False,
}

_COERCE = {
    "frames": int, "tau": int, "zones": int, "focal": int, "psf_size": int,
    "pupil_grid": int, "seed": int, "bit_depth": int, "iterations": int,
    "deblur_iterations": int, "btv_window": int, "lr_size": int,
    "trials": int, "workers": int,
    "dmax": float, "photon_budget": float, "snr_db": float, "step": float,
    "t0": float, "stop_eps": float, "btv_reg": float, "btv_decay": float,
    "btv_laplace": float, "timing": lambda v: v.lower() in ("1", "true", "yes"),
}


def _resolve_settings(args: argparse.Namespace) -> dict:
    """Merge defaults < preset < config file < explicit flags."""
    settings = dict(DEFAULTS)
    file_entries = {}
    if getattr(args, "config", None):
        try:
            file_entries = read_config_file(args.config)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    preset_name = getattr(args, "preset", None) or file_entries.pop("preset", None)
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise UsageError(f"unknown preset {preset_name!r}")
        settings.update(PRESETS[preset_name])
    for key, raw in file_entries.items():
        if key not in DEFAULTS:
            raise UsageError(f"unknown config key {key!r}")
        try:
            settings[key] = _COERCE.get(key, str)(raw)
        except ValueError as exc:
            raise UsageError(f"config key {key!r}: {exc}") from exc
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            settings[key] = value
    outdir = getattr(args, "outdir", None) or os.environ.get("SANDR_OUTDIR") or "."
    settings["outdir"] = Path(outdir)
    return settings


def _parse_float_list(text: str, field: str):
    try:
        return [float(part) for part in str(text).split(",") if part.strip()]
    except ValueError as exc:
        raise UsageError(f"{field}: expected comma-separated numbers") from exc


def _parse_shifts(text: str):
    shifts = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise UsageError(f"shifts: expected 'row,col' pairs, got {chunk!r}")
        shifts.append((float(parts[0]), float(parts[1])))
    if not shifts:
        raise UsageError("shifts: no pairs given")
    return shifts


def cmd_simulate(settings: dict) -> int:
    if not settings.get("truth"):
        raise UsageError("simulate requires --truth (path to the SR truth image)")
    truth = read_image(settings["truth"])  # FileNotFoundError -> exit 2
    tau = settings["tau"]
    n_frames = settings["frames"]
    if settings["shifts"] is not None:
        shifts = _parse_shifts(settings["shifts"])
        if len(shifts) != n_frames:
            raise UsageError(
                f"shifts: got {len(shifts)} pairs for frames = {n_frames}"
            )
    else:
        grid = shift_grid_order(tau)
        if n_frames > len(grid):
            raise UsageError(f"frames: at most {len(grid)} distinct shifts at tau={tau}")
        shifts = grid[:n_frames]
    try:
        scene = make_scene(
            truth, tau, shifts,
            n_zones=settings["zones"],
            d_max=settings["dmax"],
            focal_index=settings["focal"],
            psf_size=settings["psf_size"],
            pupil_grid=settings["pupil_grid"],
            seed=settings["seed"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    noise = NoiseSpec(
        kind=settings["noise"],
        photon_budget=settings["photon_budget"],
        snr_db=settings["snr_db"],
        seed=settings["seed"],
    )
    outdir = settings["outdir"]
    outdir.mkdir(parents=True, exist_ok=True)
    entries = []
    for m, (fm, frame) in enumerate(generate_frames(scene)):
        noisy = apply_noise(frame, noise, m)
        filename = f"frame_{m:03d}.pgm"
        write_image(outdir / filename, noisy, settings["bit_depth"])
        entries.append(
            FrameEntry(
                filename=filename,
                shift=scene.shifts[m],
                defocus=scene.defocus[m],
                noise_stream=m,
            )
        )
    manifest = Manifest(
        tau=tau,
        lr_shape=scene.lr_shape,
        seed=settings["seed"],
        noise=noise,
        frames=tuple(entries),
    )
    write_manifest(outdir / "manifest.txt", manifest)
    print(f"wrote {len(entries)} frames and manifest.txt to {outdir}")
    return 0


def _load_frames(manifest: Manifest, manifest_dir: Path):
    frames = []
    for entry in manifest.frames:
        frame = read_image(manifest_dir / entry.filename)
        if frame.shape != manifest.lr_shape:
            raise OSError(
                f"frame {entry.filename} has shape {frame.shape}, "
                f"manifest says {manifest.lr_shape}"
            )
        spec = entry.defocus
        blur = BlurOperator(
            build_psf_stack(spec), build_zone_masks(*manifest.lr_shape, spec)
        )
        frames.append((FrameModel(blur, entry.shift, manifest.tau), frame))
    return frames


def cmd_reconstruct(settings: dict) -> int:
    if not settings.get("manifest"):
        raise UsageError("reconstruct requires --manifest")
    try:
        manifest = read_manifest(settings["manifest"])
    except ValueError as exc:
        raise OSError(str(exc)) from exc
    frames = _load_frames(manifest, Path(settings["manifest"]).parent)
    truth = read_image(settings["truth"]) if settings.get("truth") else None
    solver = settings["solver"]
    cfg = SolverConfig(
        step=settings["step"],
        t0=settings["t0"],
        iterations=settings["iterations"],
        stop_eps=settings["stop_eps"],
    )
    if solver == "sandr":
        estimate, trace = sandr(frames, cfg, truth=truth)
    elif solver == "pg":
        estimate, trace = pg(frames, cfg, truth=truth)
    elif solver == "sm":
        deblur_cfg = replace(cfg, iterations=settings["deblur_iterations"])
        estimate, trace = sm(frames, deblur_cfg, cfg, truth=truth)
    else:
        btv = BtvConfig(
            reg_weight=settings["btv_reg"],
            decay=settings["btv_decay"],
            window=settings["btv_window"],
            laplace_weight=settings["btv_laplace"],
        )
        estimate, trace = baseline_solve(frames, solver, cfg, btv, truth=truth)
    outdir = settings["outdir"]
    outdir.mkdir(parents=True, exist_ok=True)
    image_path = outdir / f"sr_{solver}.pgm"
    write_image(image_path, estimate, settings["bit_depth"])
    header = ["iteration", "grad_norm_sum"]
    columns = [trace.iteration, trace.grad_norm_sum]
    if trace.rms is not None:
        header.append("rms")
        columns.append(trace.rms)
    if settings["timing"]:
        header.append("wall_s")
        columns.append(trace.wall_s)
    rows = [[repr(v) for v in row] for row in zip(*columns)]
    write_csv(outdir / f"trace_{solver}.csv", "sandr.trace.v1", header, rows)
    print(f"wrote {image_path} and trace_{solver}.csv")
    return 0


def _sweep_config(settings: dict) -> ExperimentConfig:
    truth = read_image(settings["truth"]) if settings.get("truth") else None
    noise = NoiseSpec(
        kind=settings["noise"],
        photon_budget=settings["photon_budget"],
        snr_db=settings["snr_db"],
    )
    return ExperimentConfig(
        lr_size=settings["lr_size"],
        tau=settings["tau"],
        n_frames=settings["frames"],
        n_zones=settings["zones"],
        focal_index=settings["focal"],
        psf_size=settings["psf_size"],
        pupil_grid=settings["pupil_grid"],
        d_max=settings["dmax"],
        noise=noise,
        iterations=settings["iterations"],
        deblur_iterations=settings["deblur_iterations"],
        step=settings["step"],
        t0=settings["t0"],
        seed=settings["seed"],
        workers=settings["workers"],
        truth=truth,
    )


RAW_HEADER = ["sweep_value", "trial", "solver", "rms", "iterations", "wall_s"]
SUMMARY_HEADER = [
    "sweep_value", "solver", "count", "min", "q1", "median", "q3", "max", "mean", "std",
]


def _write_sweep_outputs(result, outdir: Path, kind: str) -> None:
    raw_rows = [
        [repr(r.sweep_value), r.trial, r.solver, repr(r.rms), r.iterations, repr(r.wall_s)]
        for r in result.records
    ]
    write_csv(outdir / f"{kind}_raw.csv", "sandr.sweep-raw.v1", RAW_HEADER, raw_rows)
    summary_rows = [
        [repr(s.sweep_value), s.solver, s.count, repr(s.minimum), repr(s.q1),
         repr(s.median), repr(s.q3), repr(s.maximum), repr(s.mean), repr(s.std)]
        for s in summarize(result)
    ]
    write_csv(
        outdir / f"{kind}_summary.csv", "sandr.sweep-summary.v1",
        SUMMARY_HEADER, summary_rows,
    )


def cmd_sweep(settings: dict) -> int:
    kind = settings["kind"]
    if kind not in SWEEP_KINDS:
        raise UsageError(f"unknown sweep kind {kind!r}")
    cfg = _sweep_config(settings)
    outdir = settings["outdir"]
    outdir.mkdir(parents=True, exist_ok=True)
    if kind == "convergence":
        traces = run_convergence_trace(cfg)
        for name, trace in traces.items():
            rows = [
                [k, repr(g), repr(r), repr(w)]
                for k, g, r, w in zip(
                    trace.iteration, trace.grad_norm_sum, trace.rms, trace.wall_s
                )
            ]
            write_csv(
                outdir / f"convergence_{name}.csv", "sandr.trace.v1",
                ["iteration", "grad_norm_sum", "rms", "wall_s"], rows,
            )
        print(f"wrote convergence_<solver>.csv to {outdir}")
        return 0
    if kind == "cropping":
        res = run_cropping_study(cfg)
        rows = [
            [name, repr(res.full_rms[name]), repr(res.central_rms[name])]
            for name in sorted(res.images)
        ]
        write_csv(
            outdir / "cropping_summary.csv", "sandr.cropping.v1",
            ["solver", "full_rms", "central_rms"], rows,
        )
        for name, image in res.images.items():
            write_image(outdir / f"cropping_{name}.pgm", image, settings["bit_depth"])
        print(f"wrote cropping study outputs to {outdir}")
        return 0
    if kind == "solvability":
        values = _parse_float_list(settings["dmax_list"], "dmax-list")
        result = run_solvability_sweep(values, settings["trials"], cfg)
    elif kind == "noise":
        values = _parse_float_list(settings["snr_list"], "snr-list")
        result = run_noise_sweep(values, settings["dmax"], settings["trials"], cfg)
    else:  # frames
        counts = [int(c) for c in _parse_float_list(settings["counts"], "counts")]
        try:
            result = run_frame_count_study(counts, settings["tau"], settings["trials"], cfg)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    _write_sweep_outputs(result, outdir, kind)
    print(f"wrote {kind}_raw.csv and {kind}_summary.csv to {outdir}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    estimate = read_image(args.estimate)
    reference = read_image(args.reference)
    print(f"{relative_rms(estimate, reference):.8f}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "evaluate":
            return cmd_evaluate(args)
        settings = _resolve_settings(args)
        if args.command == "simulate":
            return cmd_simulate(settings)
        if args.command == "reconstruct":
            return cmd_reconstruct(settings)
        return cmd_sweep(settings)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, FileNotFoundError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
