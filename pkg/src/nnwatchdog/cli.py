"""Command-line experiment harness.

One subcommand per pipeline stage plus a single-image diagnostic:

    nnwatchdog synth-data --config cfg.ini --out runs/demo
    nnwatchdog train-ae / calibrate / gen-boundary / train-binary / train-core
    nnwatchdog evaluate --config cfg.ini --out runs/demo
    nnwatchdog score --config cfg.ini --out runs/demo image.pgm

Exit codes: 0 success, 2 config or environment error, 3 missing stage
dependency, 4 unreadable input data.  A lock file serializes commands per
output directory, and --seed overrides every seed in the config.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .data.dataset import DataError
from .data.netpbm import NetpbmError, read_image
from .experiment import (
    DEFAULT_CONFIG,
    STAGE_RUNNERS,
    ConfigError,
    MissingDependencyError,
    build_pipeline,
    load_config,
)
from .generator import GenerationError
from .pipeline import CLASSIFIED, guard

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEPENDENCY = 3
EXIT_BAD_INPUT = 4


class _Lock:
    def __init__(self, out: Path):
        self.path = out / ".lock"
        self.acquired = False

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ConfigError(
                f"output directory is locked by another run ({self.path}); "
                f"remove the lock file if that run is dead"
            )
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        self.acquired = True
        return self

    def __exit__(self, *exc):
        if self.acquired:
            self.path.unlink(missing_ok=True)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nnwatchdog",
        description="train and evaluate a multi-tier out-of-distribution "
        "watchdog on synthetic image data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="experiment config (INI)")
        p.add_argument("--out", required=True, help="run output directory")
        p.add_argument("--seed", type=int, default=None, help="override every seed")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    for stage in STAGE_RUNNERS:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        common(p)

    p = sub.add_parser("score", help="score one image through the pipeline")
    common(p)
    p.add_argument("image", help="PGM/PPM image to score")

    p = sub.add_parser("print-config", help="print the default experiment config")
    return parser


def _run_stage(args) -> int:
    config = load_config(args.config, seed_override=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    with _Lock(out):
        if not args.quiet:
            print(f"[{args.command}] running in {out}", flush=True)
        STAGE_RUNNERS[args.command](config, out)
    if not args.quiet:
        print(f"[{args.command}] done", flush=True)
    return EXIT_OK


def _run_score(args) -> int:
    config = load_config(args.config, seed_override=args.seed)
    try:
        image = read_image(args.image)
    except (OSError, NetpbmError) as exc:
        print(f"cannot read image: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    pipeline = build_pipeline(config, args.out, stage="score")
    expected = (
        config.dataset.image_size,
        config.dataset.image_size,
        1,
    )
    if image.shape != expected:
        print(
            f"image shape {image.shape} does not match pipeline input {expected}",
            file=sys.stderr,
        )
        return EXIT_BAD_INPUT
    verdict = guard(pipeline, image)
    payload = {
        "verdict": verdict.outcome,
        "tier1_score": verdict.tier1_score,
        "tier2_p_in": verdict.tier2_p_in,
    }
    if verdict.outcome == CLASSIFIED:
        payload["class"] = verdict.predicted_class
        payload["probabilities"] = [float(p) for p in np.asarray(verdict.class_probs)]
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "print-config":
            print(DEFAULT_CONFIG, end="")
            return EXIT_OK
        if args.command == "score":
            return _run_score(args)
        return _run_stage(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingDependencyError as exc:
        print(f"missing dependency: {exc}", file=sys.stderr)
        return EXIT_DEPENDENCY
    except (NetpbmError, DataError) as exc:
        print(f"bad input data: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except GenerationError as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"environment error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
