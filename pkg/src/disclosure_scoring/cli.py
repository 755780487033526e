"""Command-line entry point.

    disclosure-scoring run --config configs/synthetic.yaml --backend mock:7 --svg

Exit codes: 0 success, 1 partial (flagged scores, skipped groups, failed stages that can be
resumed from cache), 2 configuration or input error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import pipeline
from .config import ConfigError, PipelineConfig, load_config, parse_backend, parse_years, validate
from .corpus import CorpusError
from .gateway import CredentialMissing, GatewayError

log = logging.getLogger("disclosure_scoring")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML config file (defaults to built-in synthetic setup)")
    common.add_argument("--years", metavar="A..B", help="restrict to a year range")
    common.add_argument("--backend", metavar="SPEC", help="mock:SEED, mock:SEED:echo or live")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="disclosure-scoring", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    ing = sub.add_parser("ingest", parents=[common], help="load corpus, write summaries and rejects")
    ing.add_argument("--words-k", type=int, metavar="N", help="top-N words per (country, year)")
    sub.add_parser("rubrics", parents=[common], help="induce yearly rubrics and aggregate the master rubric")
    sc = sub.add_parser("score", parents=[common], help="score every company-year")
    sc.add_argument("--rubric", choices=("yearly", "master", "both"), default="both")
    nv = sub.add_parser("naive", parents=[common], help="whole-history baseline scoring for one company")
    nv.add_argument("--company", required=True, metavar="ID")
    an = sub.add_parser("analyze", parents=[common], help="write analytics tables")
    an.add_argument("--svg", action="store_true", default=None, help="also write SVG charts")
    run = sub.add_parser("run", parents=[common], help="ingest, rubrics, score and analyze")
    run.add_argument("--svg", action="store_true", default=None)
    run.add_argument("--words-k", type=int, metavar="N")
    return p


def apply_overrides(cfg: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    if args.years:
        cfg = replace(cfg, years=parse_years(args.years))
    if args.backend:
        cfg = replace(cfg, backend=replace(cfg.backend, **parse_backend(args.backend)))
    if getattr(args, "words_k", None) is not None:
        cfg = replace(cfg, report=replace(cfg.report, words_k=args.words_k))
    if getattr(args, "svg", None):
        cfg = replace(cfg, report=replace(cfg.report, svg=True))
    if args.out:
        cfg = replace(cfg, output=replace(cfg.output, dir=args.out))
    return validate(cfg)


def execute(cfg: PipelineConfig, args: argparse.Namespace) -> list[pipeline.StageResult]:
    cmd = args.command
    if cmd == "ingest":
        return [pipeline.timed(pipeline.cmd_ingest, cfg)]
    if cmd == "rubrics":
        return [pipeline.timed(pipeline.cmd_rubrics, cfg)]
    if cmd == "score":
        return [pipeline.timed(pipeline.cmd_score, cfg, args.rubric)]
    if cmd == "naive":
        return [pipeline.timed(pipeline.cmd_naive, cfg, args.company)]
    if cmd == "analyze":
        return [pipeline.timed(pipeline.cmd_analyze, cfg)]
    return pipeline.cmd_run(cfg)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = apply_overrides(load_config(args.config), args)
        results = execute(cfg, args)
    except CredentialMissing as exc:
        print(f"error: {exc}", file=sys.stderr)
        return pipeline.EXIT_INPUT
    except GatewayError as exc:
        print(f"error: {exc} (rerun to resume from cache)", file=sys.stderr)
        return pipeline.EXIT_PARTIAL
    except (ConfigError, CorpusError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return pipeline.EXIT_INPUT
    pipeline.write_manifest(cfg, results, pipeline.load(cfg))
    for r in results:
        for msg in r.notices:
            print(f"notice [{r.stage}]: {msg}", file=sys.stderr)
    code = max((r.exit_code for r in results), default=pipeline.EXIT_OK)
    print(f"{args.command}: exit {code}, outputs in {cfg.output_dir}")
    return code


if __name__ == "__main__":
    sys.exit(main())
