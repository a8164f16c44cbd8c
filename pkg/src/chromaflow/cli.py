"""Command-line interface.

Subcommands: colorize (run the pipeline), evaluate (score a result
directory against ground truth), detect-scenes (emit a JSON cut list),
flow (precompute .flo files). Every subcommand takes --config pointing at
a JSON object whose keys are the subcommand's option names (underscored);
explicit flags override config values.

Exit codes: 0 success, 1 validation error (bad flags, missing or
malformed inputs), 2 runtime failure (provider or mid-run errors).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .colorizers import ColorizerError
from .flow import FlowFormatError, FlowParams
from .frameio import FrameFormatError
from .metrics import MetricsReport
from .pipeline import PipelineConfig, evaluate_dirs, precompute_flow, run
from .prompts import GENERIC_PROMPT
from .scenedetect import SceneParams, detect_cuts, save_cuts
from . import frameio


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; the contract here is exit 1
    def error(self, message):
        raise CliError(message)


def _flow_params(args) -> FlowParams:
    return FlowParams(
        pyramid_levels=args.flow_levels,
        window_radius=args.flow_radius,
        iterations=args.flow_iters,
    )


def _add_flow_options(p):
    p.add_argument("--flow-levels", type=int, default=4, help="pyramid levels")
    p.add_argument("--flow-radius", type=int, default=7, help="window radius, px")
    p.add_argument("--flow-iters", type=int, default=4, help="iterations per level")


def _add_scene_options(p):
    p.add_argument("--scene-bins", type=int, default=64, help="histogram bins")
    p.add_argument(
        "--scene-threshold", type=float, default=0.5, help="histogram L1 cut threshold"
    )


def build_parser() -> tuple[_Parser, dict[str, _Parser]]:
    parser = _Parser(prog="chromaflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    parsers: dict[str, _Parser] = {}

    p = sub.add_parser("colorize", help="colorize a grayscale frame directory")
    parsers["colorize"] = p
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--input", help="grayscale input frame directory")
    p.add_argument("--output", help="output frame directory")
    p.add_argument(
        "--colorizer",
        help="provider spec: oracle:<gt dir> | palette:<json> | external:<command>",
    )
    p.add_argument("--fps", type=float, default=24.0)
    p.add_argument("--tau", type=float, default=25.0, help="correction PSNR threshold, dB")
    p.add_argument(
        "--flow",
        default="builtin",
        help="'builtin' or 'flo:<dir>' with precomputed backward flow",
    )
    p.add_argument("--prompt-mode", choices=["generic", "detailed"], default="generic")
    p.add_argument("--prompts", help="JSON prompt entries (detailed mode)")
    p.add_argument("--generic-text", default=GENERIC_PROMPT)
    p.add_argument(
        "--scenes", default="detect", help="'detect' or a JSON cut-list file"
    )
    p.add_argument("--masks", help="directory of 16-bit label-map PNGs")
    p.add_argument("--no-correction", action="store_true")
    p.add_argument("--no-warp", action="store_true")
    p.add_argument("--fixed-prompt", action="store_true")
    p.add_argument(
        "--lazy", action="store_true", help="skip colorizer calls when the mask is empty"
    )
    p.add_argument("--mask-channels", choices=["chroma", "lab"], default="chroma")
    p.add_argument("--fixed-peak", type=float, default=None)
    _add_flow_options(p)
    _add_scene_options(p)

    p = sub.add_parser("evaluate", help="score a result directory against ground truth")
    parsers["evaluate"] = p
    p.add_argument("--config")
    p.add_argument("--result", help="colorized frame directory")
    p.add_argument("--gt", help="ground-truth frame directory")
    p.add_argument("--report", help="write the full JSON report here")
    p.add_argument("--csv", help="write the one-row CSV summary here")

    p = sub.add_parser("detect-scenes", help="emit a JSON cut list for a frame directory")
    parsers["detect-scenes"] = p
    p.add_argument("--config")
    p.add_argument("--input", help="frame directory")
    p.add_argument("--output", help="cut list JSON path")
    _add_scene_options(p)

    p = sub.add_parser("flow", help="precompute .flo files for a frame directory")
    parsers["flow"] = p
    p.add_argument("--config")
    p.add_argument("--input", help="frame directory")
    p.add_argument("--output", help="directory for .flo files")
    _add_flow_options(p)

    return parser, parsers


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise CliError(f"--{name.replace('_', '-')} is required")


def _cmd_colorize(args) -> int:
    _require(args, "input", "output", "colorizer")
    flow_source, flo_dir = "builtin", None
    if args.flow != "builtin":
        kind, _, arg = args.flow.partition(":")
        if kind != "flo" or not arg:
            raise CliError(f"--flow must be 'builtin' or 'flo:<dir>', got {args.flow!r}")
        flow_source, flo_dir = "flo_dir", Path(arg)
    scene_source, scene_file = "detect", None
    if args.scenes != "detect":
        scene_source, scene_file = "file", Path(args.scenes)

    config = PipelineConfig(
        input_dir=Path(args.input),
        output_dir=Path(args.output),
        colorizer=args.colorizer,
        fps=args.fps,
        tau_db=args.tau,
        flow_source=flow_source,
        flo_dir=flo_dir,
        flow_params=_flow_params(args),
        prompt_mode=args.prompt_mode,
        prompt_file=Path(args.prompts) if args.prompts else None,
        generic_text=args.generic_text,
        scene_source=scene_source,
        scene_file=scene_file,
        scene_params=SceneParams(args.scene_bins, args.scene_threshold),
        masks_dir=Path(args.masks) if args.masks else None,
        no_correction=args.no_correction,
        no_warp=args.no_warp,
        fixed_prompt=args.fixed_prompt,
        lazy_colorize=args.lazy,
        mask_channels=args.mask_channels,
        fixed_peak=args.fixed_peak,
    )
    manifest = run(config)
    print(f"colorized {len(manifest.records)} frames -> {manifest.output_dir}")
    return 0


def _print_report(report: MetricsReport) -> None:
    def fmt(v):
        return "n/a" if v is None else f"{v:.4f}"

    print(f"psnr_db             {report.psnr_db:.4f}")
    print(f"colorfulness        {report.colorfulness:.4f}")
    print(f"colorfulness_ratio  {fmt(report.colorfulness_ratio)}")
    print(f"cdc                 {report.cdc:.6f}")
    print(f"cdc_ratio           {fmt(report.cdc_ratio)}")


def _cmd_evaluate(args) -> int:
    _require(args, "result", "gt")
    report = evaluate_dirs(args.result, args.gt)
    _print_report(report)
    if args.report:
        report.save_json(args.report)
    if args.csv:
        report.save_csv(args.csv)
    return 0


def _cmd_detect_scenes(args) -> int:
    _require(args, "input", "output")
    lumas = [frameio.read_luma(p) for p in frameio.list_frames(args.input)]
    cuts = detect_cuts(lumas, SceneParams(args.scene_bins, args.scene_threshold))
    save_cuts(cuts, args.output)
    print(f"{len(cuts)} cuts -> {args.output}")
    return 0


def _cmd_flow(args) -> int:
    _require(args, "input", "output")
    written = precompute_flow(args.input, args.output, _flow_params(args))
    print(f"{len(written)} flow fields -> {args.output}")
    return 0


_COMMANDS = {
    "colorize": _cmd_colorize,
    "evaluate": _cmd_evaluate,
    "detect-scenes": _cmd_detect_scenes,
    "flow": _cmd_flow,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, parsers = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            overrides = json.loads(Path(args.config).read_text())
            if not isinstance(overrides, dict):
                raise CliError(f"{args.config}: config must be a JSON object")
            known = set(vars(args))
            unknown = set(overrides) - known
            if unknown:
                raise CliError(f"{args.config}: unknown keys {sorted(unknown)}")
            parsers[args.command].set_defaults(**overrides)
            args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except (CliError, ValueError, FrameFormatError, FlowFormatError, OSError, json.JSONDecodeError) as exc:
        print(f"chromaflow: error: {exc}", file=sys.stderr)
        return 1
    except ColorizerError as exc:
        frame = "" if exc.frame_index is None else f" (frame {exc.frame_index})"
        print(f"chromaflow: provider failure{frame}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures keep a distinct exit code
        print(f"chromaflow: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
