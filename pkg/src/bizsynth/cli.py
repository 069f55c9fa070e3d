"""Command line entry point: ``bizsynth <subcommand> --config run.yaml``.

Exit codes: 0 success, 1 stage failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from .config import load_config
from .errors import BizSynthError, ConfigError

EXIT_OK = 0
EXIT_STAGE_FAILURE = 1
EXIT_CONFIG_ERROR = 2

log = logging.getLogger("bizsynth")


def _common(p: argparse.ArgumentParser, *, config_required: bool = True) -> None:
    p.add_argument("--config", required=config_required, type=Path, help="run configuration (YAML)")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--workers", type=int, help="override the configured worker count")
    p.add_argument("--force", action="store_true", help="rerun stages even if their outputs exist")
    p.add_argument("--out-dir", type=Path, help="override the configured output directory")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bizsynth", description="Business-logic-grounded Text-to-SQL data synthesis.")
    sub = parser.add_subparsers(dest="command", required=True)

    _common(sub.add_parser("model-logic", help="generate personas, scenarios, workflows and logic instances"))
    _common(sub.add_parser("synthesize", help="score schema, draft and repair SQL, write dataset.jsonl"))
    for name, text in (("judge", "rate samples on the quality rubrics"), ("bench", "score candidate models by execution accuracy")):
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--dataset", type=Path, help="dataset to read (default: <out-dir>/dataset.jsonl)")
    _common(sub.add_parser("report", help="print and write plain-text summary tables"))
    _common(sub.add_parser("all", help="run every stage in order, then report"))

    p = sub.add_parser("review", help="approve or reject logic instances before synthesis")
    _common(p)
    p.add_argument("--approve", nargs="*", default=[], metavar="ID")
    p.add_argument("--reject", nargs="*", default=[], metavar="ID")

    p = sub.add_parser("demo", help="write the bundled retail demo pack (database, fixtures, config)")
    p.add_argument("--out", type=Path, required=True, help="directory to create the pack in")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def run(args: argparse.Namespace) -> int:
    from .pipeline import Pipeline

    if args.command == "demo":
        from .demo import build_demo_pack

        config_path = build_demo_pack(args.out)
        print(f"demo pack written; run: bizsynth all --config {config_path}")
        return EXIT_OK

    config = load_config(args.config, seed=args.seed, workers=args.workers, out_dir=args.out_dir)
    pipe = Pipeline(config)
    cmd = args.command
    if cmd == "model-logic":
        instances = pipe.model_logic(args.force)
        print(f"{len(instances)} logic instances in {pipe.out}")
    elif cmd == "synthesize":
        samples = pipe.synthesize(args.force)
        c = pipe.manifest.counts
        print(f"{len(samples)} samples written ({c['drafts']} drafts, {c['dropped']} dropped)")
    elif cmd == "judge":
        pipe.judge(args.dataset, args.force)
        print(pipe.path("quality_summary.txt").read_text(encoding="utf-8"), end="")
    elif cmd == "bench":
        pipe.bench(args.dataset, args.force)
        print(pipe.path("bench_summary.txt").read_text(encoding="utf-8"), end="")
    elif cmd == "report":
        print(pipe.report(), end="")
    elif cmd == "all":
        print(pipe.run_all(args.force), end="")
    elif cmd == "review":
        instances = pipe.review(args.approve, args.reject)
        for inst in instances:
            mark = "x" if inst.approved else " "
            print(f"[{mark}] {inst.id}  {inst.persona.name} / {inst.scenario.name}")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except BizSynthError as exc:
        print(f"stage failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_STAGE_FAILURE
    except OSError as exc:
        print(f"stage failed: {exc}", file=sys.stderr)
        return EXIT_STAGE_FAILURE


if __name__ == "__main__":
    sys.exit(main())
