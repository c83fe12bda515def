"""Command-line interface.

Subcommands: match, filter, distill, holefill, eval, colorize, manifest.
Exit codes: 0 ok, 1 configuration error, 2 one or more frames failed.
Environment overrides: STEREOPROXY_OUTPUT_DIR, STEREOPROXY_THREADS.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import pipeline
from .pipeline import ConfigError, PipelineConfig


def _add_common(parser):
    parser.add_argument("--config", help="INI config file; flags override its values")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--threads", type=int, help="frame-level worker count")
    parser.add_argument("--seed", type=int, help="global random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stereoproxy",
        description="Disparity proxy labels from rectified stereo pairs",
    )
    parser.add_argument("--dump-config", action="store_true",
                        help="print the full default configuration and exit")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("match", help="compute left/right disparity maps")
    p.add_argument("manifest")
    _add_common(p)
    p.add_argument("--matcher", choices=["bm", "sgm"])
    p.add_argument("--d-max", type=int, dest="d_max")

    p = sub.add_parser("filter", help="extract reliable sparse seeds")
    p.add_argument("manifest")
    _add_common(p)
    p.add_argument("--matcher", choices=["bm", "sgm"])
    p.add_argument("--filter", choices=["lrc", "confidence"], dest="filter_mode")
    p.add_argument("--target-density", type=float, dest="target_density")
    p.add_argument("--d-max", type=int, dest="d_max")

    p = sub.add_parser("distill", help="consensus-distill proxy labels from seeds")
    p.add_argument("manifest")
    _add_common(p)
    p.add_argument("--n", type=int, help="number of completions per frame")
    p.add_argument("--gamma", type=float, help="variance acceptance threshold")
    p.add_argument("--p-sample", type=float, dest="p_sample")
    p.add_argument("--flip-prob", type=float, dest="flip_prob")
    p.add_argument("--completer", choices=["reference", "external"])
    p.add_argument("--completer-command", dest="completer_command")

    p = sub.add_parser("holefill", help="fill disparity maps to 100%% density")
    p.add_argument("pred_dir")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int)

    p = sub.add_parser("eval", help="evaluate predictions against ground truth")
    p.add_argument("manifest")
    p.add_argument("pred_dir")
    _add_common(p)
    p.add_argument("--invalid-pred", choices=["error", "exclude"], dest="invalid_pred")

    p = sub.add_parser("colorize", help="render disparity maps as RGB images")
    p.add_argument("pred_dir")
    p.add_argument("--out", required=True)
    p.add_argument("--d-max", type=float, dest="d_max", default=192.0)

    p = sub.add_parser("manifest", help="manifest helpers")
    msub = p.add_subparsers(dest="manifest_command", required=True)
    g = msub.add_parser("gen", help="scan a raw dataset layout into a manifest")
    g.add_argument("raw_root")
    g.add_argument("--out", required=True)
    g.add_argument("--exclude", action="append", default=[],
                   help="drive directory name to skip (repeatable)")
    g.add_argument("--exclude-file", help="file with one drive name per line")
    return parser


def _config_from_args(args) -> PipelineConfig:
    cfg = pipeline.load_config(args.config) if args.config else PipelineConfig()

    if getattr(args, "out", None):
        cfg.output_dir = args.out
    elif os.environ.get("STEREOPROXY_OUTPUT_DIR"):
        cfg.output_dir = os.environ["STEREOPROXY_OUTPUT_DIR"]
    if getattr(args, "threads", None):
        cfg.threads = args.threads
    elif os.environ.get("STEREOPROXY_THREADS"):
        try:
            cfg.threads = int(os.environ["STEREOPROXY_THREADS"])
        except ValueError as exc:
            raise ConfigError(f"bad STEREOPROXY_THREADS: {exc}") from exc
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed

    simple = {
        "matcher": "matcher",
        "d_max": "d_max",
        "n": "n",
        "gamma": "gamma",
        "p_sample": "p_sample",
        "flip_prob": "flip_prob",
        "invalid_pred": "invalid_pred",
    }
    for arg_name, cfg_name in simple.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            setattr(cfg, cfg_name, value)
    if getattr(args, "filter_mode", None):
        cfg.filter_cfg.mode = args.filter_mode
    if getattr(args, "target_density", None) is not None:
        cfg.filter_cfg.target_density = args.target_density
    if getattr(args, "completer", None):
        cfg.completer_cfg.mode = args.completer
    if getattr(args, "completer_command", None):
        cfg.completer_cfg.command = args.completer_command
    if cfg.completer_cfg.mode == "external" and not cfg.completer_cfg.command:
        raise ConfigError("external completer needs --completer-command or config")
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.dump_config:
        sys.stdout.write(pipeline.dump_config(PipelineConfig()))
        return 0
    if args.command is None:
        parser.print_help()
        return 1

    try:
        if args.command == "manifest":
            exclude = list(args.exclude)
            if args.exclude_file:
                with open(args.exclude_file) as f:
                    exclude += [line.strip() for line in f if line.strip()]
            frames = pipeline.generate_manifest(args.raw_root, exclude)
            pipeline.save_manifest(frames, args.out)
            print(f"manifest: {len(frames)} frames -> {args.out}")
            return 0

        if args.command == "holefill":
            threads = args.threads or int(os.environ.get("STEREOPROXY_THREADS", "1"))
            failures = pipeline.run_holefill(args.pred_dir, args.out, threads)
            return 2 if failures else 0

        if args.command == "colorize":
            failures = pipeline.run_colorize(args.pred_dir, args.out, args.d_max)
            return 2 if failures else 0

        cfg = _config_from_args(args)
        frames = pipeline.load_manifest(args.manifest)
        if args.command == "match":
            failures = pipeline.run_match(frames, cfg)
        elif args.command == "filter":
            failures = pipeline.run_filter(frames, cfg)
        elif args.command == "distill":
            failures = pipeline.run_distill(frames, cfg)
        elif args.command == "eval":
            failures = pipeline.run_eval(frames, args.pred_dir, cfg)
        else:   # pragma: no cover - argparse restricts the choices
            raise ConfigError(f"unknown command {args.command}")
        return 2 if failures else 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
