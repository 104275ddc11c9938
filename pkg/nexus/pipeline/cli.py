# nexus/pipeline/cli.py
#
# Command-line surface. Every stage subcommand runs the pipeline up to and
# including that stage; `run` runs all of it; `synth` writes a synthetic
# cohort with a ready-to-run config.

from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import List, Optional

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from core.errors import ConfigError, CultureCoreError
from nexus.association.synthetic import synthetic_cohort, write_cohort
from nexus.pipeline.config import load_config
from nexus.pipeline.pipeline_loop import PipelineLoop
from nexus.pipeline.stages import STAGE_NAMES, RunState


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CULTURE_ERROR = 2


def setup_logging(verbose: bool = False) -> None:
    console = Console(stderr=True)
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False, rich_tracebacks=True)],
        force=True,
    )


def _global_flags(parser: argparse.ArgumentParser, default) -> None:
    parser.add_argument("--config", type=Path, default=default, help="pipeline config (JSON or YAML)")
    parser.add_argument("--seed", type=int, default=default, help="override the config seed")
    parser.add_argument("--out", type=Path, default=default, help="override the output directory")
    parser.add_argument("--verbose", "-v", action="store_true", default=default, help="debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="culture", description="Cultural association of survey candidates")
    _global_flags(parser, None)
    parser.set_defaults(verbose=False)

    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, argparse.SUPPRESS)

    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGE_NAMES[1:]:
        sub.add_parser(name, parents=[common], help=f"run the pipeline up to '{name}'")
    sub.add_parser("run", parents=[common], help="run the full pipeline")

    synth = sub.add_parser("synth", parents=[common], help="write a synthetic cohort and its config")
    synth.add_argument("--n", type=int, default=100, help="number of candidates")
    synth.add_argument("--prototypes", type=int, default=3)
    synth.add_argument("--noise", type=float, default=0.10)
    return parser


# ---------------------------------------------------------
# Console summary
# ---------------------------------------------------------

def render_summary(loop: PipelineLoop, state: Optional[RunState], console: Console) -> None:
    table = Table(title="Pipeline stages")
    table.add_column("stage")
    table.add_column("status")
    table.add_column("detail", overflow="fold")
    colours = {"ok": "green", "failed": "red", "skipped": "dim"}
    for r in loop.records:
        table.add_row(r.name, f"[{colours[r.status]}]{r.status}[/]", r.error or "")
    console.print(table)

    if state is None:
        return
    summary = state.summary()
    facts = Table(show_header=False)
    for key in ("candidates", "k", "team_sizes", "accuracy"):
        if key in summary:
            facts.add_row(key, str(summary[key]))
    for pair, value in summary.get("rand_index", {}).items():
        facts.add_row(f"rand {pair}", f"{value:.4f}")
    if state.team_names:
        facts.add_row("team names", ", ".join(state.team_names[t] for t in sorted(state.team_names)))
    console.print(facts)


# ---------------------------------------------------------
# Commands
# ---------------------------------------------------------

def _cmd_synth(args: argparse.Namespace, console: Console) -> int:
    out = args.out or Path("synthetic")
    cohort = synthetic_cohort(n=args.n, prototypes=args.prototypes, noise=args.noise, seed=args.seed or 0)
    path = write_cohort(cohort, out)
    console.print(f"Synthetic cohort written; run it with [bold]--config {path}[/]")
    return EXIT_OK


def _cmd_pipeline(args: argparse.Namespace, console: Console) -> int:
    if args.config is None:
        raise ConfigError("--config is required")
    cfg = load_config(args.config).with_overrides(
        seed=args.seed,
        output_dir=args.out.resolve() if args.out is not None else None,
    )
    until = None if args.command == "run" else args.command

    loop = PipelineLoop(cfg)
    try:
        loop.run(until=until)
    finally:
        render_summary(loop, loop.state, console)
    logger.info("Outputs in %s", cfg.output_dir)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    console = Console()

    try:
        if args.command == "synth":
            return _cmd_synth(args, console)
        return _cmd_pipeline(args, console)
    except CultureCoreError as exc:
        logger.error("%s", exc)
        return EXIT_CULTURE_ERROR
    except Exception:
        logger.exception("Unexpected failure")
        return EXIT_UNEXPECTED
