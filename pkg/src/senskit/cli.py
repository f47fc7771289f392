"""``senskit`` command line: simulate, estimate, compare and bench.

Exit codes: 0 success, 2 bad flags, 3 I/O or file-format errors, 4 empty
nullspace, 5 dimension mismatch, 6 memory cap refusal, 1 anything else.
Every invocation writes ``<output>_provenance.json`` holding the fully
expanded argument list, so ``senskit <argv from the file>`` repeats the run.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from dataclasses import replace
from importlib import metadata
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .bench import run_benchmark
from .eigensolve import DEFAULT_POWER_ITERS, phase_align
from .errors import DimensionMismatchError, SenskitError, StackFormatError
from .grid import ComplexImageStack, extract_calibration
from .io import load_stack, save_stack, write_pgm
from .maps import REDUCED_GRID_PAD, dice
from .metrics import projection_residual
from .nullspace import DEFAULT_THRESHOLD, spectrum_csv
from .pipeline import PRESETS, PipelineConfig, estimate_maps
from .synthetic import forward_kspace, make_scene

PIPELINE_FLAGS = ("kernel", "tau", "gram", "nullspace_threshold", "grid", "grid_pad", "field", "eig",
                  "power_iters", "method", "mask_threshold", "apod_width", "dense_backend")


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return vals


def _positive_int(text: str) -> int:
    v = _int_list(text)
    if len(v) != 1:
        raise argparse.ArgumentTypeError(f"expected one positive integer, got {text!r}")
    return v[0]


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return v


def _ratio(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {text!r}")
    return v


def _nonneg_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if v < 0 or not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a finite non-negative number, got {text!r}")
    return v


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline (unset flags take the preset's value)")
    g.add_argument("--preset", choices=sorted(PRESETS), default="baseline",
                   help="baseline = rect/explicit/full/dense; pisco = ellipsoid/fft/reduced/power (default: %(default)s)")
    g.add_argument("--kernel", choices=["rect", "ellipsoid"], help="kernel support shape")
    g.add_argument("--tau", type=_nonneg_int, help="kernel radius (preset default 3)")
    g.add_argument("--gram", choices=["explicit", "fft"], help="calibration Gram path")
    g.add_argument("--nullspace-threshold", type=_ratio,
                   help=f"keep singular values below this fraction of the largest (default {DEFAULT_THRESHOLD})")
    g.add_argument("--grid", choices=["full", "reduced"], help="estimation grid")
    g.add_argument("--grid-pad", type=_nonneg_int, help=f"reduced grid = calib + pad (default {REDUCED_GRID_PAD})")
    g.add_argument("--field", choices=["naive", "fast"], help="per-voxel Gram field path (default fast)")
    g.add_argument("--eig", choices=["dense", "power"], help="per-voxel eigensolver")
    g.add_argument("--power-iters", type=_positive_int, help=f"power iterations (default {DEFAULT_POWER_ITERS})")
    g.add_argument("--method", choices=["nullspace", "espirit"],
                   help="dense solver target: smallest of G or largest of I - G/|L| (default nullspace)")
    g.add_argument("--mask-threshold", type=_nonneg_float, help="support mask cut on the lambda map (default 0.05)")
    g.add_argument("--apod-width", type=_nonneg_float,
                   help="Gaussian sigma for the phase reference, in k-space samples (default calib/4)")
    g.add_argument("--dense-backend", choices=["lapack", "jacobi"], help="dense eigensolver backend (default lapack)")


def _add_scene_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q", type=_positive_int, default=8, help="channels (default %(default)s)")
    p.add_argument("--dims", type=_int_list, default=[256, 256], help="grid, e.g. 256,256 (default 256,256)")
    p.add_argument("--tau-gen", type=_nonneg_int, default=2, help="map bandlimit radius (default %(default)s)")
    p.add_argument("--phantom", choices=["disk", "shepp"], default="disk", help="(default %(default)s)")
    p.add_argument("--noise", type=_nonneg_float, default=0.01, help="noise std per real/imag part (default %(default)s)")
    p.add_argument("--seed", type=int, default=7, help="(default %(default)s)")
    p.add_argument("--window", action="store_true", help="apply a spatial window so maps are only approximately bandlimited")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="senskit", description="Coil sensitivity estimation from calibration k-space.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic k-space stack with its true maps and mask")
    _add_scene_flags(p)
    p.add_argument("--output", required=True, help="output prefix")

    p = sub.add_parser("estimate", help="estimate sensitivity maps from a k-space stack")
    p.add_argument("--input", required=True, help="k-space CStack")
    p.add_argument("--calib", type=_int_list, required=True, help="calibration extent per axis, e.g. 24,24")
    _add_pipeline_flags(p)
    p.add_argument("--threads", type=_positive_int, help="cap on BLAS/FFT threads")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    p.add_argument("--output", required=True, help="output prefix")

    p = sub.add_parser("compare", help="compare two estimate outputs")
    p.add_argument("run_a", help="output prefix of the first estimate run")
    p.add_argument("run_b", help="output prefix of the second estimate run")
    p.add_argument("--output", required=True, help="output prefix")

    p = sub.add_parser("bench", help="time two presets over calibration sizes")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="k-space CStack")
    src.add_argument("--simulate", action="store_true", help="benchmark a synthetic scene (scene flags below)")
    _add_scene_flags(p)
    p.add_argument("--arms", default="baseline,pisco", help="two or more presets (default %(default)s)")
    p.add_argument("--calib-sizes", type=_int_list, default=[24, 48, 96], help="(default 24,48,96)")
    p.add_argument("--reps", type=_positive_int, default=5, help="measured repetitions, at least 5 (default %(default)s)")
    p.add_argument("--threads", type=_positive_int, help="cap on BLAS/FFT threads")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    p.add_argument("--output", required=True, help="report prefix")
    return parser


def _expanded_argv(parser: argparse.ArgumentParser, args: argparse.Namespace) -> list[str]:
    """Argument list naming every effective option value explicitly."""
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices[args.command]
    out = [args.command]
    positionals = []
    for action in sub._actions:
        if action.dest == "help":
            continue
        value = getattr(args, action.dest, None)
        if not action.option_strings:
            positionals.append(str(value))
            continue
        flag = action.option_strings[-1]
        if isinstance(action, argparse._StoreTrueAction):
            if value:
                out.append(flag)
        elif value is not None:
            out += [flag, ",".join(map(str, value)) if isinstance(value, list) else str(value)]
    return out + positionals


def _provenance(parser, args, **extra) -> dict:
    try:
        version = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        version = "unknown"
    return {
        "argv": _expanded_argv(parser, args),
        "invoked_as": sys.argv[1:],
        "command": args.command,
        "package_version": version,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "created_unix": time.time(),
        **extra,
    }


def _write_json(path, obj) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(obj, indent=2, default=_json_default) + "\n")
    except OSError as exc:
        raise StackFormatError(f"cannot write {path}: {exc}") from exc


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    cfg = PRESETS[args.preset]
    overrides = {f: getattr(args, f) for f in PIPELINE_FLAGS if getattr(args, f, None) is not None}
    return replace(cfg, **overrides)


def _scene_from_args(args):
    scene = make_scene(args.q, args.dims, tau_gen=args.tau_gen, seed=args.seed, phantom_kind=args.phantom,
                       window=args.window)
    return scene, forward_kspace(scene, args.noise)


def cmd_simulate(parser, args) -> dict:
    scene, ksp = _scene_from_args(args)
    prefix = args.output
    save_stack(ksp, f"{prefix}_kspace")
    save_stack(scene.true_maps, f"{prefix}_truemaps")
    save_stack(ComplexImageStack(scene.support_mask_true[None].astype(np.complex128), "image"), f"{prefix}_truemask")
    return {"outputs": [f"{prefix}_kspace", f"{prefix}_truemaps", f"{prefix}_truemask"],
            "bandlimited": scene.bandlimited}


def cmd_estimate(parser, args) -> dict:
    data = load_stack(args.input)
    if data.domain != "kspace":
        raise DimensionMismatchError("estimate expects a k-space stack")
    if len(args.calib) != len(data.dims):
        raise DimensionMismatchError(f"--calib has {len(args.calib)} axes but the data have {len(data.dims)}")
    cfg = config_from_args(args)
    for f in PIPELINE_FLAGS:  # pin effective values so the provenance argv does not depend on preset defaults
        setattr(args, f, getattr(cfg, f))
    calib = extract_calibration(data, args.calib)
    with threadpool_limits(limits=args.threads):
        result = estimate_maps(calib, data.dims, cfg)
    residual = projection_residual(data, result, dataset=str(args.input)).value

    prefix = args.output
    save_stack(result.maps, f"{prefix}_maps")
    save_stack(ComplexImageStack(result.support_mask[None].astype(np.complex128), "image"), f"{prefix}_mask")
    save_stack(ComplexImageStack(result.lambda_min_map[None], "image"), f"{prefix}_lambda")
    for q in range(result.maps.channels):
        write_pgm(f"{prefix}_ch{q}.pgm", np.abs(result.maps.data[q]))
    try:
        Path(f"{prefix}_spectrum.csv").write_text(spectrum_csv(result.stats["spectrum"]))
    except OSError as exc:
        raise StackFormatError(f"cannot write spectrum: {exc}") from exc
    if not args.no_figures:
        from .plotting import plot_maps, plot_spectrum

        plot_maps(result, f"{prefix}_maps.png")
        plot_spectrum(result.stats["spectrum"], cfg.nullspace_threshold, f"{prefix}_spectrum.png")

    stats = {k: v for k, v in result.stats.items() if k != "spectrum"}
    return {"config": cfg.to_dict(), "residual": residual, "normalization": result.normalization,
            "stats": stats, "mask_fraction": float(result.support_mask.mean())}


def _load_run(prefix: str):
    maps = load_stack(f"{prefix}_maps")
    mask = load_stack(f"{prefix}_mask").data[0].real > 0.5
    prov_path = Path(f"{prefix}_provenance.json")
    residual = None
    if prov_path.is_file():
        try:
            residual = json.loads(prov_path.read_text()).get("residual")
        except (OSError, json.JSONDecodeError) as exc:
            raise StackFormatError(f"unreadable provenance {prov_path}: {exc}") from exc
    return maps, mask, residual


def compare_runs(maps_a: ComplexImageStack, maps_b: ComplexImageStack, mask_a, mask_b) -> dict:
    if maps_a.dims != maps_b.dims or maps_a.channels != maps_b.channels:
        raise DimensionMismatchError(f"runs differ in shape: {maps_a.channels}x{maps_a.dims} "
                                     f"vs {maps_b.channels}x{maps_b.dims}")
    a = np.moveaxis(maps_a.data, 0, -1)
    b = phase_align(np.moveaxis(maps_b.data, 0, -1), a)
    diff = np.abs(b - a)
    # Outside the object the maps are not identifiable, so the masked figure is the meaningful one.
    both = np.asarray(mask_a, bool) & np.asarray(mask_b, bool)
    in_mask = float(diff[both].max()) if both.any() else 0.0
    return {"max_abs_difference": float(diff.max()), "max_abs_difference_in_mask": in_mask,
            "difference": np.moveaxis(diff, -1, 0), "dice": dice(mask_a, mask_b)}


def cmd_compare(parser, args) -> dict:
    maps_a, mask_a, res_a = _load_run(args.run_a)
    maps_b, mask_b, res_b = _load_run(args.run_b)
    out = compare_runs(maps_a, maps_b, mask_a, mask_b)
    for q, d in enumerate(out.pop("difference")):
        write_pgm(f"{args.output}_diff_ch{q}.pgm", d)
    out["residual_a"], out["residual_b"] = res_a, res_b
    out["residual_difference"] = None if res_a is None or res_b is None else abs(res_a - res_b)
    _write_json(f"{args.output}.json", out)
    print(json.dumps(out))
    return out


def cmd_bench(parser, args) -> dict:
    names = [a for a in args.arms.split(",") if a]
    unknown = [a for a in names if a not in PRESETS]
    if unknown or len(names) < 2:
        parser.error(f"--arms needs two or more of {sorted(PRESETS)}, got {args.arms!r}")
    if args.reps < 5:
        parser.error("--reps must be at least 5")
    if args.input:
        data, dataset = load_stack(args.input), str(args.input)
    else:
        _, data = _scene_from_args(args)
        dataset = f"synthetic q={args.q} dims={args.dims} seed={args.seed} noise={args.noise}"
    for c in args.calib_sizes:
        if c > min(data.dims):
            raise DimensionMismatchError(f"calibration size {c} exceeds data dims {data.dims}")
    report = run_benchmark(data, {n: PRESETS[n] for n in names}, args.calib_sizes, args.reps, args.threads, dataset)
    report.write_csv(f"{args.output}.csv")
    report.write_json(f"{args.output}.json")
    if not args.no_figures:
        from .plotting import plot_benchmark

        plot_benchmark(report, f"{args.output}.png")
    for key, val in report.speedups.items():
        print(f"speedup {key}: {val:.2f}x")
    return {"speedups": report.speedups, "failures": report.failures}


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "compare": cmd_compare, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    provenance_path = f"{args.output}_provenance.json"
    try:
        summary = COMMANDS[args.command](parser, args)
        _write_json(provenance_path, _provenance(parser, args, exit_code=0, **summary))
        return 0
    except (SenskitError, OSError) as exc:
        code = exc.exit_code if isinstance(exc, SenskitError) else StackFormatError.exit_code
        message = str(exc)
        print(f"senskit: error: {message}", file=sys.stderr)
    try:  # failed runs still leave a record of what was attempted
        _write_json(provenance_path, _provenance(parser, args, exit_code=code, error=message))
    except SenskitError:
        pass
    return code


if __name__ == "__main__":
    sys.exit(main())
