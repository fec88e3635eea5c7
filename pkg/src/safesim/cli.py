"""Command-line front end.

Subcommands: sine-sweep, vep, analyze, report. Exit codes: 0 on success,
2 for configuration errors, 3 for I/O errors, 4 for analysis errors.
"""

from __future__ import annotations

import argparse
import sys

from .analysis import DegenerateDataError, EmptyResultError
from .experiments import (
    AnalysisInputError,
    ConfigError,
    ExperimentConfig,
    analyze,
    render_report_summary,
    run_sine_experiment,
    run_vep_experiment,
)
from .recorder import RecordingFormatError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_ANALYSIS = 4


def _load_config(args: argparse.Namespace, experiment: str | None) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_file(args.config, experiment=experiment, seed=args.seed)
    else:
        if experiment is None:
            cfg = ExperimentConfig(experiment="sine_sweep", seed=0)
        else:
            if args.seed is None:
                raise ConfigError("seed is required: pass --seed or a config file with a seed key")
            cfg = ExperimentConfig(experiment=experiment, seed=args.seed)
    if getattr(args, "preset", None):
        cfg.presets = (args.preset,)
    return cfg


def _cmd_sine_sweep(args: argparse.Namespace) -> int:
    cfg = _load_config(args, "sine_sweep")
    rows = run_sine_experiment(cfg, args.out)
    print(f"sine sweep complete: {len(rows)} condition runs written to {args.out}")
    return EXIT_OK


def _cmd_vep(args: argparse.Namespace) -> int:
    cfg = _load_config(args, "vep")
    if getattr(args, "preset", None):
        raise ConfigError("the vep experiment always runs both arms; --preset is not applicable")
    run_vep_experiment(cfg, args.out)
    print(f"vep comparison complete: reports written to {args.out}")
    return EXIT_OK


def _cmd_analyze(args: argparse.Namespace) -> int:
    cfg = None
    if args.config:
        cfg = ExperimentConfig.from_file(args.config, seed=args.seed, for_analysis=True)
    analyze(args.path, args.out, cfg)
    print(f"analysis reports written to {args.out}")
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    print(render_report_summary(args.path), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="safesim",
        description="Simulate and validate a wireless multichannel EEG acquisition chain.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", metavar="FILE", help="key=value configuration file")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        p.add_argument("--out", metavar="DIR", default="safesim_out", help="output directory")

    p_sine = sub.add_parser("sine-sweep", help="run the sinusoid sweep experiment")
    add_common(p_sine)
    p_sine.add_argument("--preset", choices=("safe", "reference"), help="restrict to one device preset")
    p_sine.set_defaults(func=_cmd_sine_sweep)

    p_vep = sub.add_parser("vep", help="run the two-arm flash-response comparison")
    add_common(p_vep)
    p_vep.set_defaults(func=_cmd_vep, preset=None)

    p_an = sub.add_parser("analyze", help="re-analyze stored recordings")
    p_an.add_argument("path", help="recording file or directory of recordings")
    add_common(p_an)
    p_an.set_defaults(func=_cmd_analyze)

    p_rep = sub.add_parser("report", help="print the summary for an output directory")
    p_rep.add_argument("path", help="directory containing report files")
    p_rep.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (AnalysisInputError, RecordingFormatError, DegenerateDataError, EmptyResultError, ValueError) as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    raise SystemExit(main())
