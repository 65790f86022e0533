"""
Command-Line Interface

    head-avatar gen-synth --out data/synth
    head-avatar train --manifest data/synth --out runs/train --set train.total_steps=2000
    head-avatar eval --manifest data/synth --checkpoint runs/train/checkpoint.bin --split test
    head-avatar render --manifest data/synth --checkpoint runs/train/checkpoint.bin \\
        --sequence poses.json --frame 0
    head-avatar viz-parts --manifest data/synth --checkpoint runs/train/checkpoint.bin
    head-avatar ablate --manifest data/synth --seeds 0 1 2

Exit codes: 0 success, 1 invalid input (usage, configuration, dataset or
missing file), 2 runtime failure.
"""

import argparse
import sys
from pathlib import Path

from core.config import ProjectConfig, config_manager
from core.data import load_checkpoint
from core.errors import ConfigError, DatasetError

from .runner import AvatarPipeline

COMMANDS = ("gen-synth", "train", "render", "eval", "viz-parts", "ablate")
EXIT_OK, EXIT_INVALID, EXIT_FAILURE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=str, help="YAML or JSON project file (default: configs/default.yaml)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="Override a configuration value on a dotted path (repeatable)")
    common.add_argument("--out", type=str, help="Output directory (default: runs/<command>)")
    common.add_argument("--workers", type=int, help="Worker threads (1 = fully deterministic)")
    common.add_argument("--seed", type=int, help="Random seed")

    parser = _Parser(prog="head-avatar", description="Part-based deformable head avatar pipeline")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("gen-synth", parents=[common], help="Generate a synthetic dataset")

    train = sub.add_parser("train", parents=[common], help="Train an avatar on a dataset")
    train.add_argument("--manifest", required=True, help="Dataset manifest or directory")
    train.add_argument("--resume", help="Checkpoint to continue from")

    render = sub.add_parser("render", parents=[common], help="Render a pose/expression sequence")
    render.add_argument("--manifest", required=True, help="Dataset manifest or directory")
    render.add_argument("--checkpoint", required=True)
    render.add_argument("--sequence", required=True, help="JSON list of {theta, psi} rows")
    render.add_argument("--frame", type=int, default=0, help="Frame whose camera is used")

    evaluate = sub.add_parser("eval", parents=[common], help="Evaluate a checkpoint on a split")
    evaluate.add_argument("--manifest", required=True, help="Dataset manifest or directory")
    evaluate.add_argument("--checkpoint", required=True)
    evaluate.add_argument("--split", choices=["train", "test"])

    viz = sub.add_parser("viz-parts", parents=[common], help="Visualize part assignment of a frame")
    viz.add_argument("--manifest", required=True, help="Dataset manifest or directory")
    viz.add_argument("--checkpoint", required=True)
    viz.add_argument("--frame", type=int, default=0)

    ablate = sub.add_parser("ablate", parents=[common],
                            help="Compare part-based and global deformation over several seeds")
    ablate.add_argument("--manifest", required=True, help="Dataset manifest or directory")
    ablate.add_argument("--seeds", type=int, nargs="+", help="Training seeds (default: three from --seed)")
    return parser


def resolve_config(args: argparse.Namespace) -> ProjectConfig:
    """
    Project file (or the checkpoint's stored configuration when no file is
    given), then environment variables, then ``--set`` and flag overrides.
    """
    overrides = list(args.overrides)
    if args.workers is not None:
        overrides.append(f"workers={args.workers}")
    if args.seed is not None:
        key = "synthetic.seed" if args.command == "gen-synth" else "seed"
        overrides.append(f"{key}={args.seed}")

    checkpoint = getattr(args, "checkpoint", None) or getattr(args, "resume", None)
    if args.config is None and checkpoint is not None:
        return config_manager.resolve(load_checkpoint(checkpoint).config, overrides)
    return config_manager.parse_config(args.config, overrides)


def execute(args: argparse.Namespace) -> None:
    config = resolve_config(args)
    out_dir = Path(args.out) if args.out else Path("runs") / args.command
    pipeline = AvatarPipeline(config, out_dir)

    if args.command == "gen-synth":
        dataset = pipeline.gen_synth()
        print(f"Wrote {len(dataset)} frames to {out_dir}")
    elif args.command == "train":
        result = pipeline.train(args.manifest, args.resume)
        print(f"Trained {result.steps} steps, final loss {result.final_loss:.5f}; "
              f"checkpoint {result.checkpoint}")
    elif args.command == "render":
        paths = pipeline.render(args.manifest, args.checkpoint, args.sequence, args.frame)
        print(f"Rendered {len(paths)} frames to {out_dir}")
    elif args.command == "eval":
        report = pipeline.evaluate(args.manifest, args.checkpoint, args.split)
        mean = report["mean"]
        if mean:
            print(f"{report['split']}: PSNR {mean['psnr']:.2f} dB, SSIM {mean['ssim']:.4f}, "
                  f"L1 {mean['l1']:.4f} over {len(report['frames'])} frames")
        else:
            print(f"{report['split']}: no frames")
    elif args.command == "viz-parts":
        print(f"Wrote {pipeline.viz_parts(args.manifest, args.checkpoint, args.frame)}")
    elif args.command == "ablate":
        report = pipeline.ablate(args.manifest, args.seeds)
        for other, gap in report["psnr_gap"].items():
            print(f"part_based vs {other}: held-out PSNR gap {gap:+.2f} dB over seeds {report['seeds']}")


def run(argv: list[str] | None = None) -> int:
    """Parse arguments, run one command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as e:
        return int(e.code or 0)

    try:
        execute(args)
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (DatasetError, FileNotFoundError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:
        print(f"Error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
