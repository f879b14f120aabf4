"""Command-line entry point: ``pcritical <subcommand> [options]``.

Every experiment subcommand takes ``--config`` (TOML), ``--output``,
``--seeds`` and ``--mode``; command-line flags override the config file.
``gen-events`` writes a synthetic labelled event-stream file.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .config import KINDS, ExperimentConfig
from .events import save_events, synthetic_task
from .plasticity import FIXED8, FLOAT

log = logging.getLogger("pcritical")


def _seeds(text: str) -> list[int]:
    """``"0,1,2"`` or a range ``"0-4"``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1) if not part.startswith("-") else (part, part)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty seed list")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcritical", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--output", help="output directory")
        p.add_argument("--seeds", type=_seeds, help="comma list or range, e.g. 0,1,2 or 0-4")
        p.add_argument("--mode", choices=(FLOAT, FIXED8), help="weight arithmetic")
        p.add_argument("--workers", type=int, help="worker processes for seeds")
        p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    g = sub.add_parser("gen-events", help="write a synthetic labelled event-stream file")
    g.add_argument("path")
    g.add_argument("--classes", type=int, default=4)
    g.add_argument("--per-class", type=int, default=60)
    g.add_argument("--inputs", type=int, default=64)
    g.add_argument("--duration", type=int, default=300, help="sample length in ms")
    g.add_argument("--base-rate", type=float, default=5.0)
    g.add_argument("--peak-rate", type=float, default=25.0)
    g.add_argument("--seed", type=int, default=1000)
    return parser


def resolve_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config, kind=args.command)
    else:
        cfg = ExperimentConfig.default(args.command)
    if args.output:
        cfg.output_dir = args.output
    if args.seeds:
        cfg.seeds = args.seeds
    if args.workers:
        cfg.workers = args.workers
    if args.mode:
        cfg.plasticity = replace(cfg.plasticity, mode=args.mode)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "gen-events":
            stream = synthetic_task(args.classes, args.per_class, args.inputs, args.duration,
                                    seed=args.seed, base_rate=args.base_rate,
                                    peak_rate=args.peak_rate)
            save_events(args.path, stream)
            print(f"wrote {len(stream)} samples to {args.path}")
            return 0
        from .experiments import run
        cfg = resolve_config(args)
        run(cfg)
        print(f"{cfg.kind}: results in {cfg.output_dir}")
        return 0
    except (OSError, ValueError, FloatingPointError) as err:
        print(f"pcritical: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
