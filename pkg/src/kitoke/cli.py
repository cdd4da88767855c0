"""Command-line frontend.

Subcommands: ``compress`` (full pipeline on one tensor), ``calibrate``
(percentile-based threshold suggestions over a directory of tensors),
``cost`` (transformer FLOPs for a token count), ``gen`` (synthetic scene
tensors with ground truth), and ``dump-trace`` (difference/deviation CSV).

stdout carries only result-path echoes or the result JSON; diagnostics and
machine-readable error objects go to stderr.  Exit codes: 0 success, 2 bad
flags, 3 I/O errors, 4 numeric-stage errors.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys

from . import __version__
from .costmodel import available_presets, flops, load_preset, per_layer_flops, tflops
from .diversity import estimate_diversity, save_profile
from .merging import save_result
from .pipeline import StageError, compress
from .segmentation import calibrate_thresholds, frame_diff, write_trace_csv
from .synth import generate_scenes, random_scene_script
from .tensor import (
    FormatError,
    RetentionConfig,
    load_sidecar,
    load_tensor,
    save_sidecar,
    save_tensor,
)

_HELP_FMT = argparse.ArgumentDefaultsHelpFormatter

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_MATH = 4


class UsageError(ValueError):
    """A flag value failed domain validation before any work started."""


def _fail(code: int, kind: str, message: str) -> int:
    json.dump({"error": kind, "message": message}, sys.stderr)
    sys.stderr.write("\n")
    return code


def _config_from_flags(args) -> RetentionConfig:
    try:
        return RetentionConfig(
            gamma=args.gamma,
            alpha=args.alpha,
            tau_diff=args.tau_diff,
            tau_dev=args.tau_dev,
            tau_rel=args.tau_rel,
            selection_mode=args.mode,
            merge_mode=args.merge,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _add_retention_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=float, required=True, help="retention ratio in (0, 1]")
    p.add_argument("--alpha", type=float, default=800.0, help="Gaussian kernel bandwidth")
    p.add_argument("--tau-diff", type=float, default=110.0, help="boundary magnitude threshold")
    p.add_argument("--tau-dev", type=float, default=70.0, help="boundary deviation threshold")
    p.add_argument("--tau-rel", type=float, default=0.40, help="boundary relative-deviation threshold")
    p.add_argument(
        "--mode",
        choices=("pivotal", "multinomial", "topk"),
        default="pivotal",
        help="token selection mode",
    )
    p.add_argument(
        "--merge",
        choices=("none", "uniform", "weighted"),
        default="weighted",
        help="token merge mode",
    )
    p.add_argument("--seed", type=int, default=0, help="RNG seed (u64)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kitoke",
        description="Kernel-based interval-aware compression of video token tensors.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="compress one token tensor", formatter_class=_HELP_FMT)
    p.add_argument("--input", required=True, help="input .ktk1 tensor")
    _add_retention_flags(p)
    p.add_argument("--out", required=True, help="output .ktk1 merged embeddings")
    p.add_argument("--report", default=None, help="output JSON run report")
    p.add_argument(
        "--dump-profile", default=None, help="optional density/score table dump (.ktk1)"
    )
    p.add_argument(
        "--dump-trace", dest="dump_trace", default=None, help="optional trace CSV dump"
    )

    p = sub.add_parser("calibrate", help="suggest thresholds from a tensor directory", formatter_class=_HELP_FMT)
    p.add_argument("--inputs", required=True, help="directory of .ktk1 tensors")
    p.add_argument("--percentile", type=float, default=80.0, help="pooled percentile")

    p = sub.add_parser("cost", help="transformer FLOPs for a token count", formatter_class=_HELP_FMT)
    p.add_argument("--tokens", type=int, required=True, help="number of visual tokens")
    p.add_argument(
        "--preset",
        default="qwen2-7b",
        help=f"backbone preset, one of {available_presets()}",
    )

    p = sub.add_parser("gen", help="generate a synthetic scene tensor", formatter_class=_HELP_FMT)
    p.add_argument("--scenes", type=int, default=3, help="number of scenes")
    p.add_argument("--frames-per-scene", type=int, default=5, help="frames per scene")
    p.add_argument("--tokens", type=int, default=24, help="tokens per frame")
    p.add_argument("--dims", type=int, default=32, help="embedding dimensions")
    p.add_argument("--center-scale", type=float, default=1.0, help="inter-scene jump size")
    p.add_argument("--noise", type=float, default=0.05, help="intra-scene noise sigma")
    p.add_argument("--drift", type=float, default=0.0, help="per-frame drift magnitude")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--out", required=True, help="output .ktk1 tensor")
    p.add_argument("--truth", default=None, help="output ground-truth boundary JSON")

    p = sub.add_parser("dump-trace", help="write the difference/deviation trace as CSV", formatter_class=_HELP_FMT)
    p.add_argument("--input", required=True, help="input .ktk1 tensor")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--tau-diff", type=float, default=110.0, help="boundary magnitude threshold")
    p.add_argument("--tau-dev", type=float, default=70.0, help="boundary deviation threshold")
    p.add_argument("--tau-rel", type=float, default=0.40, help="boundary relative-deviation threshold")

    return parser


def _cmd_compress(args) -> int:
    cfg = _config_from_flags(args)
    tensor = load_tensor(args.input)
    layout = load_sidecar(args.input)
    result = compress(tensor, cfg, layout)
    save_result(result, args.out, args.report)
    if args.dump_profile:
        save_profile(estimate_diversity(tensor, cfg.alpha), args.dump_profile)
    if args.dump_trace:
        if tensor.frames < 2:
            print("single frame; no trace to dump", file=sys.stderr)
        else:
            write_trace_csv(frame_diff(tensor), args.dump_trace, cfg)
    print(args.out)
    if args.report:
        print(args.report)
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    paths = sorted(glob.glob(os.path.join(args.inputs, "*.ktk1")))
    if not paths:
        raise FileNotFoundError(f"no .ktk1 tensors under {args.inputs}")
    traces = []
    for path in paths:
        tensor = load_tensor(path)
        if tensor.frames >= 2:
            traces.append(frame_diff(tensor))
    if not traces:
        raise ValueError("no multi-frame tensors to calibrate on")
    suggestion = calibrate_thresholds(traces, args.percentile)
    suggestion["n_videos"] = len(traces)
    print(json.dumps(suggestion, indent=2))
    return EXIT_OK


def _cmd_cost(args) -> int:
    try:
        spec = load_preset(args.preset)
    except KeyError as exc:
        raise UsageError(str(exc)) from exc
    if args.tokens < 0:
        raise UsageError("--tokens must be >= 0")
    print(
        json.dumps(
            {
                "tokens": args.tokens,
                "preset": args.preset,
                "per_layer": per_layer_flops(args.tokens, spec),
                "total": flops(args.tokens, spec),
                "tflops": tflops(args.tokens, spec),
            },
            indent=2,
        )
    )
    return EXIT_OK


def _cmd_gen(args) -> int:
    if min(args.scenes, args.frames_per_scene, args.tokens, args.dims) < 1:
        raise UsageError("scene, frame, token, and dim counts must be >= 1")
    script = random_scene_script(
        n_scenes=args.scenes,
        frames_per_scene=args.frames_per_scene,
        m_tokens=args.tokens,
        dims=args.dims,
        center_scale=args.center_scale,
        noise_sigma=args.noise,
        drift_scale=args.drift,
        seed=args.seed,
    )
    tensor, truth = generate_scenes(script)
    save_tensor(tensor, args.out)
    save_sidecar(args.out, provenance={"generator": "kitoke gen", "seed": str(args.seed)})
    if args.truth:
        with open(args.truth, "w", encoding="utf-8") as f:
            json.dump(
                {
                    "scene_starts": truth,
                    "frames": tensor.frames,
                    "tokens_per_frame": tensor.tokens_per_frame,
                    "dims": tensor.dims,
                },
                f,
                indent=2,
            )
            f.write("\n")
    print(args.out)
    return EXIT_OK


def _cmd_dump_trace(args) -> int:
    try:
        cfg = RetentionConfig(
            gamma=1.0, tau_diff=args.tau_diff, tau_dev=args.tau_dev, tau_rel=args.tau_rel
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    tensor = load_tensor(args.input)
    if tensor.frames < 2:
        raise ValueError("single-frame tensor has no trace")
    write_trace_csv(frame_diff(tensor), args.out, cfg)
    print(args.out)
    return EXIT_OK


_COMMANDS = {
    "compress": _cmd_compress,
    "calibrate": _cmd_calibrate,
    "cost": _cmd_cost,
    "gen": _cmd_gen,
    "dump-trace": _cmd_dump_trace,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = _COMMANDS[args.command]
    try:
        return handler(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    except FormatError as exc:
        return _fail(EXIT_IO, "format", str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, "io", str(exc))
    except StageError as exc:
        return _fail(EXIT_MATH, exc.stage, str(exc))
    except (ValueError, KeyError, AssertionError, ArithmeticError) as exc:
        return _fail(EXIT_MATH, "math", str(exc))


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
