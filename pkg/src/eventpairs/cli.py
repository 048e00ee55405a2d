"""Command-line entry point wiring the pipeline stages."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import evaluate, extract, measures, pipeline, refine
from .artifacts import ArtifactError, check_upstream
from .ingest import DocumentError, iter_corpus
from .pipeline import PipelineError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eventpairs",
        description=(
            "Mine contingent event pairs from genre-partitioned narrative "
            "corpora, refine them with web-search hit counts, and build "
            "forced-choice evaluation tasks."
        ),
    )
    parser.add_argument("--config", help="JSON config file (used by `run`)")
    parser.add_argument("--seed", type=int, default=None, help="global random seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="excise dialog from raw screenplays")
    p_ingest.add_argument("--raw", required=True, help="directory of .txt screenplays")
    p_ingest.add_argument("--out", required=True, help="output JSONL of excised text")

    p_validate = sub.add_parser("validate", help="validate an annotated corpus file")
    p_validate.add_argument("--annotated", required=True)

    p_extract = sub.add_parser("extract", help="build event and pair statistics")
    p_extract.add_argument("--annotated", required=True)
    p_extract.add_argument("--genre", required=True)
    p_extract.add_argument("--out", required=True, help="output stats file")
    p_extract.add_argument(
        "--protagonist", action="store_true", help="pair events sharing a protagonist"
    )
    p_extract.add_argument(
        "--min-pair-freq",
        type=int,
        default=extract.DEFAULT_MIN_PAIR_FREQ,
        help="drop protagonist pairs rarer than this (protagonist mode only)",
    )

    p_score = sub.add_parser("score", help="score and rank event pairs")
    p_score.add_argument("--stats", required=True)
    p_score.add_argument("--measure", required=True, choices=measures.MEASURES)
    p_score.add_argument("--top", type=int, default=measures.DEFAULT_TOP_K)
    p_score.add_argument(
        "--min-joint", type=int, default=measures.DEFAULT_BIGRAM_MIN_JOINT,
        help="minimum directional count for the bigram measure",
    )
    p_score.add_argument("--out", required=True)

    p_refine = sub.add_parser("refine", help="apply web-count refinement to scored pairs")
    p_refine.add_argument("--pairs", required=True, help="scored-pairs file")
    p_refine.add_argument("--genre-pool", required=True, help="stats file for REP sampling")
    p_refine.add_argument("--cache", required=True, help="hit-count cache file")
    p_refine.add_argument("--live", action="store_true", help="query a live search endpoint")
    p_refine.add_argument("--live-url", help="endpoint template with {query} placeholder")
    p_refine.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p_refine.add_argument("--min-pcep-hits", type=int, default=refine.DEFAULT_MIN_PCEP_HITS)
    p_refine.add_argument("--max-rep-hits", type=int, default=refine.DEFAULT_MAX_REP_HITS)
    p_refine.add_argument("--out", required=True)

    p_gen = sub.add_parser("eval-gen", help="generate forced-choice evaluation tasks")
    p_gen.add_argument("--kept", required=True, help="refined-pairs file")
    p_gen.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p_gen.add_argument("--show-args", action="store_true", help="display event arguments")
    p_gen.add_argument(
        "--order-matters", action="store_true", help="instruct raters that order matters"
    )
    p_gen.add_argument("--out", required=True, help="output directory")

    p_eval = sub.add_parser("eval-score", help="score collected rater responses")
    p_eval.add_argument("--tasks", required=True, help="task directory from eval-gen")
    p_eval.add_argument("--responses", required=True)
    p_eval.add_argument("--drop", type=int, default=evaluate.DEFAULT_DROP_COUNT)
    p_eval.add_argument("--out", required=True, help="output report path (JSON)")

    p_run = sub.add_parser("run", help="run the full pipeline from a config")
    # --config/--seed are also accepted globally; SUPPRESS keeps the
    # subparser from clobbering a globally supplied value with a default.
    p_run.add_argument("--config", default=argparse.SUPPRESS)
    p_run.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p_run.add_argument("--genre")
    p_run.add_argument("--measure", choices=measures.MEASURES)
    p_run.add_argument("--annotated")
    p_run.add_argument("--raw", dest="raw_dir")
    p_run.add_argument("--cache")
    p_run.add_argument("--out")
    p_run.add_argument("--top", type=int, dest="top_k")
    p_run.add_argument("--live", action="store_true", default=None)
    p_run.add_argument("--show-args", action="store_true", default=None, dest="show_arguments")

    return parser


def _seed(args: argparse.Namespace, default: int = 0) -> int:
    local = getattr(args, "seed", None)
    if local is not None:
        return local
    return default


def cmd_ingest(args: argparse.Namespace) -> int:
    count = pipeline.excise_raw_dir(args.raw, args.out)
    print(f"excised {count} screenplays -> {args.out}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    count = 0
    for _doc in iter_corpus(args.annotated):
        count += 1
    print(f"{args.annotated}: {count} documents OK")
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    docs = list(iter_corpus(args.annotated))
    docs = [d for d in docs if d.genre == args.genre]
    if not docs:
        raise ValueError(f"no documents with genre '{args.genre}' in {args.annotated}")
    mode = extract.PROTAGONIST if args.protagonist else extract.ADJACENCY
    stats = extract.build_genre_stats(
        docs, args.genre, mode=mode, min_pair_freq=args.min_pair_freq
    )
    extract.write_stats(stats, args.out)
    print(
        f"{len(docs)} documents, {len(stats.event_types)} event types, "
        f"{len(stats.pairs.counts)} pair keys -> {args.out}"
    )
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    stats = extract.read_stats(args.stats)
    needs_protag = args.measure == measures.PROTAG_CP
    if needs_protag and stats.mode != extract.PROTAGONIST:
        raise ValueError("protag-cp needs protagonist-mode stats (extract --protagonist)")
    if not needs_protag and stats.mode != extract.ADJACENCY:
        raise ValueError(f"measure '{args.measure}' needs adjacency-mode stats")
    counts = measures.CorpusCounts.from_stats(stats)
    scored = measures.score_pairs(
        args.measure,
        counts,
        min_joint=args.min_joint,
        protag_stats=stats.pairs if needs_protag else None,
    )
    ranked = measures.rank_top_k(scored, args.top)
    min_joint = args.min_joint if args.measure == measures.BIGRAM else None
    measures.write_scored(
        args.out,
        ranked,
        stats.event_types,
        genre=stats.genre,
        stats_hash=stats.stats_hash,
        measure=args.measure,
        top_k=args.top,
        min_joint=min_joint,
    )
    print(f"{len(scored)} scoreable pairs, wrote top {len(ranked)} -> {args.out}")
    return 0


def cmd_refine(args: argparse.Namespace) -> int:
    scored_meta, ranked_rows = measures.read_scored(args.pairs)
    pool_stats = extract.read_stats(args.genre_pool)
    check_upstream(args.pairs, scored_meta["upstream"], pool_stats.stats_hash, "scored pairs")
    seed = _seed(args)
    config = pipeline.PipelineConfig(
        genre=scored_meta["genre"],
        measure=scored_meta["measure"],
        seed=seed,
        cache=args.cache,
        live=args.live,
        live_url=args.live_url,
    )
    provider = pipeline.make_provider(config)
    pool = sorted(pool_stats.event_types)
    records = refine.build_refinement_records(
        ranked_rows, pool, seed, pool_stats.event_types
    )
    patterns = [r.pcep_pattern for r in records] + [r.rep_pattern for r in records]
    hit_counts = refine.fetch_hit_counts(patterns, provider)
    records = refine.attach_hit_counts(records, hit_counts)
    decided = refine.refine(records, args.min_pcep_hits, args.max_rep_hits)
    refine.write_refined(
        args.out,
        decided,
        [row.rank for row in ranked_rows],
        genre=scored_meta["genre"],
        measure=scored_meta["measure"],
        scored_hash=scored_meta["hash"],
        seed=seed,
        min_pcep_hits=args.min_pcep_hits,
        max_rep_hits=args.max_rep_hits,
    )
    kept = len(evaluate.keep_records(decided))
    print(f"{kept} kept, {len(decided) - kept} dropped -> {args.out}")
    return 0


def cmd_eval_gen(args: argparse.Namespace) -> int:
    meta, records = refine.read_refined(args.kept)
    kept = evaluate.keep_records(records)
    seed = _seed(args)
    batches = evaluate.generate_choice_tasks(
        kept,
        seed,
        order_matters=bool(args.order_matters),
        show_arguments=bool(args.show_args),
    )
    evaluate.write_task_files(batches, args.out, refined_hash=meta["hash"], seed=seed)
    total = sum(len(b.tasks) for b in batches)
    print(f"{total} tasks in {len(batches)} batches -> {args.out}")
    return 0


def cmd_eval_score(args: argparse.Namespace) -> int:
    _, tasks = evaluate.read_task_files(args.tasks)
    responses = evaluate.read_responses(args.responses)
    result = evaluate.filter_raters(responses, tasks, args.drop)
    result = evaluate.compute_accuracy(result, tasks, responses)
    evaluate.write_eval_report(result, args.out, args.drop)

    from .report import save_rater_figure

    figure_path = Path(args.out).parent / "rater_correlations.png"
    save_rater_figure(result, figure_path)
    print(
        f"accuracy {evaluate.format_percent(result.accuracy)} "
        f"({result.correct_answers}/{result.total_answers} answers, "
        f"{len(result.retained_raters)} raters retained) -> {args.out}"
    )
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    overrides = {
        name: getattr(args, name, None)
        for name in (
            "genre",
            "measure",
            "annotated",
            "raw_dir",
            "cache",
            "out",
            "top_k",
            "live",
            "show_arguments",
            "seed",
        )
    }
    config = pipeline.load_config(args.config, overrides)
    if not config.out:
        raise ValueError("run needs an output directory (config key 'out' or --out)")
    result = pipeline.run_pipeline(config)
    print(
        "pipeline done: "
        + ", ".join(f"{key}={value}" for key, value in sorted(result.counts.items()))
    )
    print(f"report -> {Path(config.out) / 'report.json'}")
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "validate": cmd_validate,
    "extract": cmd_extract,
    "score": cmd_score,
    "refine": cmd_refine,
    "eval-gen": cmd_eval_gen,
    "eval-score": cmd_eval_score,
    "run": cmd_run,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = _COMMANDS[args.command]
    try:
        return handler(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        ArtifactError,
        DocumentError,
        refine.HitCountFetchError,
        FileNotFoundError,
        ValueError,
    ) as exc:
        print(f"error: [{args.command}] {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
