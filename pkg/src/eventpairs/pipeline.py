"""End-to-end pipeline: load, extract, score, refine, generate tasks.

Every threshold surfaces as a named configuration field whose default
is the published value; artifacts embed hashes of the parameters that
produced them so stages reject inputs from a different configuration.
Given fixed inputs and seed, re-running reproduces identical artifacts.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from . import evaluate, extract, measures, refine, report
from .artifacts import check_upstream, params_hash
from .ingest import excise_dialog, load_corpus

logger = logging.getLogger("eventpairs.pipeline")

DEFAULT_LIVE_DELAY = 1.0
LIVE_URL_ENV = "EVENTPAIRS_SEARCH_URL"


class PipelineError(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class PipelineConfig:
    """Pipeline settings; count defaults follow the published method."""

    genre: str = "action"
    measure: str = measures.CP
    top_k: int = measures.DEFAULT_TOP_K
    min_pcep_hits: int = refine.DEFAULT_MIN_PCEP_HITS
    max_rep_hits: int = refine.DEFAULT_MAX_REP_HITS
    bigram_min_joint: int = measures.DEFAULT_BIGRAM_MIN_JOINT
    protag_min_pair_freq: int = extract.DEFAULT_MIN_PAIR_FREQ
    seed: int = 0
    show_arguments: bool = False
    annotated: str = ""
    raw_dir: str | None = None
    cache: str = ""
    out: str = ""
    live: bool = False
    live_url: str | None = None
    live_delay: float = DEFAULT_LIVE_DELAY

    def __post_init__(self) -> None:
        for name in (
            "top_k",
            "min_pcep_hits",
            "max_rep_hits",
            "bigram_min_joint",
            "protag_min_pair_freq",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"config field {name} must be >= 0")
        if self.measure not in measures.MEASURES:
            raise ValueError(
                f"unknown measure {self.measure!r}, expected one of {measures.MEASURES}"
            )

    @property
    def order_matters(self) -> bool:
        # Only the symmetric measure ignores pair order.
        return self.measure != measures.PMI

    def echo(self) -> dict:
        # The report lives inside the output directory, so the output
        # path itself is not echoed.
        values = dataclasses.asdict(self)
        values.pop("out")
        return {_FIELD_TO_KEY[key]: value for key, value in values.items()}


_FIELD_TO_KEY = {
    "genre": "genre",
    "measure": "measure",
    "top_k": "topK",
    "min_pcep_hits": "minPcepHits",
    "max_rep_hits": "maxRepHits",
    "bigram_min_joint": "bigramMinJoint",
    "protag_min_pair_freq": "protagMinPairFreq",
    "seed": "seed",
    "show_arguments": "showArguments",
    "annotated": "annotated",
    "raw_dir": "rawDir",
    "cache": "cache",
    "out": "out",
    "live": "live",
    "live_url": "liveUrl",
    "live_delay": "liveDelay",
}
_KEY_TO_FIELD = {key: name for name, key in _FIELD_TO_KEY.items()}


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Build a config from an optional JSON file plus flag overrides."""
    values: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        for key, value in raw.items():
            if key not in _KEY_TO_FIELD:
                raise ValueError(f"{path}: unknown config key {key!r}")
            values[_KEY_TO_FIELD[key]] = value
    for name, value in (overrides or {}).items():
        if value is not None:
            values[name] = value
    return PipelineConfig(**values)


@dataclass
class PipelineReport:
    config: dict
    counts: dict[str, int] = field(default_factory=dict)
    hashes: dict[str, str] = field(default_factory=dict)
    artifacts: dict[str, str] = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "format": "eventpairs-report/1",
            "config": self.config,
            "configHash": params_hash(self.config),
            "counts": self.counts,
            "hashes": self.hashes,
            "artifacts": self.artifacts,
        }


def write_report(pipeline_report: PipelineReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(pipeline_report.to_record(), handle, ensure_ascii=False, sort_keys=True, indent=1)
        handle.write("\n")


def excise_raw_dir(raw_dir: str | Path, out_path: str | Path) -> int:
    """Excise dialog from every .txt screenplay in a directory; one JSON
    record per file, keyed by file stem."""
    raw_dir = Path(raw_dir)
    files = sorted(raw_dir.glob("*.txt"))
    if not files:
        raise FileNotFoundError(f"no .txt screenplays found in {raw_dir}")
    with open(out_path, "w", encoding="utf-8") as handle:
        for file in files:
            text = excise_dialog(file.read_text(encoding="utf-8"))
            record = {"docId": file.stem, "text": text}
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
    return len(files)


def make_provider(config: PipelineConfig) -> refine.HitCountProvider:
    cache_path = Path(config.cache)
    if config.live:
        cache = (
            refine.HitCountCache.load(cache_path)
            if cache_path.exists()
            else refine.HitCountCache(path=cache_path)
        )
        url = config.live_url or os.environ.get(LIVE_URL_ENV)
        if not url:
            raise ValueError(
                f"live mode needs a search endpoint (liveUrl or ${LIVE_URL_ENV})"
            )
        backend = refine.http_hit_count_backend(url)
        return refine.WriteThroughHitCounts(backend, cache, min_delay=config.live_delay)
    if not cache_path.exists():
        raise FileNotFoundError(f"hit-count cache not found: {cache_path}")
    return refine.CachedHitCounts(refine.HitCountCache.load(cache_path))


class _stage:
    """Tag exceptions raised inside a stage with the stage name."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self) -> "_stage":
        return self

    def __exit__(self, exc_type, exc, _tb) -> None:
        if exc is not None and not isinstance(exc, PipelineError):
            raise PipelineError(self.name, str(exc)) from exc


def run_pipeline(config: PipelineConfig) -> PipelineReport:
    """Run all stages in order, writing each stage's artifact.

    A stage failure aborts with the stage name attached; artifacts
    written by earlier stages stay on disk and stay valid.
    """
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    figures_dir = out / "figures"
    figures_dir.mkdir(exist_ok=True)
    pipeline_report = PipelineReport(config=config.echo())
    counts = pipeline_report.counts

    if config.raw_dir:
        with _stage("ingest"):
            excised_path = out / "excised.jsonl"
            counts["rawDocuments"] = excise_raw_dir(config.raw_dir, excised_path)
            pipeline_report.artifacts["excised"] = excised_path.name
            logger.info("ingest: excised %d raw screenplays", counts["rawDocuments"])

    with _stage("load"):
        if not config.annotated:
            raise ValueError("config has no annotated corpus path")
        docs = load_corpus(config.annotated, genre=config.genre)
        if not docs:
            raise ValueError(
                f"no documents with genre '{config.genre}' in {config.annotated}"
            )
        counts["documents"] = len(docs)
        logger.info("load: %d documents in genre '%s'", len(docs), config.genre)

    with _stage("extract"):
        mode = (
            extract.PROTAGONIST
            if config.measure == measures.PROTAG_CP
            else extract.ADJACENCY
        )
        stats = extract.build_genre_stats(
            docs, config.genre, mode=mode, min_pair_freq=config.protag_min_pair_freq
        )
        stats_path = out / "stats.json"
        extract.write_stats(stats, stats_path)
        counts["mentions"] = sum(t.frequency for t in stats.event_types.values())
        counts["eventTypes"] = len(stats.event_types)
        counts["pairKeys"] = len(stats.pairs.counts)
        counts["pairTokens"] = stats.pairs.total_pair_tokens
        pipeline_report.hashes["stats"] = stats.stats_hash
        pipeline_report.artifacts["stats"] = stats_path.name
        logger.info(
            "extract: %d mentions, %d event types, %d pair keys",
            counts["mentions"],
            counts["eventTypes"],
            counts["pairKeys"],
        )

    with _stage("score"):
        corpus_counts = measures.CorpusCounts.from_stats(stats)
        protag_stats = stats.pairs if mode == extract.PROTAGONIST else None
        scored = measures.score_pairs(
            config.measure,
            corpus_counts,
            min_joint=config.bigram_min_joint,
            protag_stats=protag_stats,
        )
        ranked = measures.rank_top_k(scored, config.top_k)
        scored_path = out / "scored.tsv"
        min_joint = config.bigram_min_joint if config.measure == measures.BIGRAM else None
        measures.write_scored(
            scored_path,
            ranked,
            stats.event_types,
            genre=config.genre,
            stats_hash=stats.stats_hash,
            measure=config.measure,
            top_k=config.top_k,
            min_joint=min_joint,
        )
        counts["scored"] = len(scored)
        counts["ranked"] = len(ranked)
        scored_meta, ranked_rows = measures.read_scored(scored_path)
        pipeline_report.hashes["scored"] = scored_meta["hash"]
        pipeline_report.artifacts["scored"] = scored_path.name
        if ranked:
            report.save_score_figure(
                ranked,
                figures_dir / "scores.png",
                measure=config.measure,
                genre=config.genre,
            )
            pipeline_report.artifacts["scoresFigure"] = "figures/scores.png"
        logger.info("score: %d scoreable pairs, kept top %d", len(scored), len(ranked))

    with _stage("refine"):
        check_upstream(scored_path, scored_meta["upstream"], stats.stats_hash, "scored pairs")
        refined_path = out / "refined.tsv"
        if ranked_rows:
            provider = make_provider(config)
            pool = sorted(stats.event_types)
            records = refine.build_refinement_records(
                ranked_rows, pool, config.seed, stats.event_types
            )
            patterns = [r.pcep_pattern for r in records] + [r.rep_pattern for r in records]
            try:
                hit_counts = refine.fetch_hit_counts(patterns, provider)
            except refine.HitCountFetchError as exc:
                raise ValueError(str(exc)) from exc
            records = refine.attach_hit_counts(records, hit_counts)
            decided = refine.refine(records, config.min_pcep_hits, config.max_rep_hits)
        else:
            decided = []
        refine.write_refined(
            refined_path,
            decided,
            [row.rank for row in ranked_rows],
            genre=config.genre,
            measure=config.measure,
            scored_hash=scored_meta["hash"],
            seed=config.seed,
            min_pcep_hits=config.min_pcep_hits,
            max_rep_hits=config.max_rep_hits,
        )
        kept = evaluate.keep_records(decided)
        counts["kept"] = len(kept)
        counts["droppedLowPcep"] = sum(
            1 for r in decided if r.decision == refine.DROP_LOW_PCEP
        )
        counts["droppedHighRep"] = sum(
            1 for r in decided if r.decision == refine.DROP_HIGH_REP
        )
        refined_meta, _ = refine.read_refined(refined_path)
        pipeline_report.hashes["refined"] = refined_meta["hash"]
        pipeline_report.artifacts["refined"] = refined_path.name
        if decided:
            report.save_hits_figure(
                decided,
                figures_dir / "hits.png",
                min_pcep_hits=config.min_pcep_hits,
                max_rep_hits=config.max_rep_hits,
            )
            pipeline_report.artifacts["hitsFigure"] = "figures/hits.png"
        logger.info(
            "refine: %d kept, %d dropped", counts["kept"], len(decided) - counts["kept"]
        )

    with _stage("eval-gen"):
        if kept:
            batches = evaluate.generate_choice_tasks(
                kept,
                config.seed,
                order_matters=config.order_matters,
                show_arguments=config.show_arguments,
            )
            tasks_dir = out / "tasks"
            evaluate.write_task_files(
                batches,
                tasks_dir,
                refined_hash=refined_meta["hash"],
                seed=config.seed,
            )
            counts["tasks"] = sum(len(b.tasks) for b in batches)
            counts["batches"] = len(batches)
            tasks_meta, _ = evaluate.read_task_files(tasks_dir)
            pipeline_report.hashes["tasks"] = tasks_meta["hash"]
            pipeline_report.artifacts["tasks"] = "tasks"
        else:
            counts["tasks"] = 0
            counts["batches"] = 0
        logger.info("eval-gen: %d tasks in %d batches", counts["tasks"], counts["batches"])

    with _stage("report"):
        report.save_stage_counts_figure(counts, figures_dir / "stages.png")
        pipeline_report.artifacts["stagesFigure"] = "figures/stages.png"
        pipeline_report.artifacts["report"] = "report.json"
        write_report(pipeline_report, out / "report.json")

    return pipeline_report
