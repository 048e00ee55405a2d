#!/usr/bin/env python3
"""Regenerate the bundled mini corpus, its hit-count cache, and the
golden pipeline outputs under tests/golden/.

The corpus is scripted, not sampled: every document below is a fixed
sequence of (subject, verb, object) events, so regeneration is
reproducible byte for byte.  Cache counts are derived from a hash of
each search pattern, giving a stable mix of large and small counts and
therefore a mix of keep/drop decisions.
"""

from __future__ import annotations

import hashlib
import json
import shutil
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from eventpairs.extract import build_genre_stats
from eventpairs.ingest import (
    AnnotatedDocument,
    CorefChain,
    DependencyEdge,
    Sentence,
    Token,
    load_corpus,
    serialize_document,
)
from eventpairs.measures import CorpusCounts, RankedPair, rank_top_k, score_pairs
from eventpairs.pipeline import PipelineConfig, run_pipeline
from eventpairs.refine import HitCountCache, build_refinement_records

MINI = ROOT / "data" / "mini"
GOLDEN = ROOT / "tests" / "golden"
SEED = 7

PERSONS = {"Rex", "Mara", "Cole", "Anna", "Ben", "Ivy"}

# (subject, verb, object); subjects double as coreference entities.
ACTION_DOCS = {
    "act-01": [
        ("Rex", "draw", "gun"), ("Rex", "aim", "gun"), ("Rex", "fire", "gun"),
        ("guard", "stagger", None), ("guard", "drop", "rifle"),
        ("Rex", "run", None), ("Rex", "leap", "wall"), ("Rex", "roll", None),
    ],
    "act-02": [
        ("Mara", "chase", "car"), ("Mara", "catch", "thief"),
        ("thief", "slam", "door"), ("thief", "shut", "gate"),
        ("Mara", "draw", "gun"), ("Mara", "aim", "gun"), ("Mara", "fire", "gun"),
        ("thief", "fall", None),
    ],
    "act-03": [
        ("Rex", "shoot", "lock"), ("lock", "fall", None),
        ("Rex", "dive", "river"), ("Rex", "swim", "shore"),
        ("Rex", "climb", "bank"), ("Rex", "run", None),
        ("Rex", "draw", "gun"), ("Rex", "aim", "gun"),
    ],
    "act-04": [
        ("Cole", "chase", "train"), ("Cole", "catch", "rail"),
        ("Cole", "swing", "door"), ("Cole", "slam", "door"), ("Cole", "shut", "hatch"),
        ("guard", "shoot", "shadow"), ("shadow", "fall", None),
        ("Cole", "duck", None),
    ],
    "act-05": [
        ("Mara", "shoot", "tire"), ("car", "crash", "wall"), ("driver", "fall", None),
        ("Mara", "run", None), ("Mara", "dive", "canal"), ("Mara", "swim", "dock"),
        ("Mara", "stagger", None), ("Mara", "drop", "radio"),
    ],
    "act-06": [
        ("Rex", "shoot", "drone"), ("drone", "fall", "roof"),
        ("Rex", "chase", "van"), ("Rex", "catch", "ladder"),
        ("Rex", "slam", "hatch"), ("Rex", "shut", "valve"),
        ("Cole", "shoot", "cable"), ("cable", "fall", None),
        ("Rex", "draw", "knife"), ("Rex", "aim", "knife"),
    ],
}

ROMANCE_DOCS = {
    "rom-01": [
        ("Anna", "meet", "Ben"), ("Anna", "smile", None), ("Ben", "blush", None),
        ("Ben", "offer", "rose"), ("Anna", "laugh", None),
        ("Anna", "dance", None), ("Ben", "dance", None),
    ],
    "rom-02": [
        ("Ben", "write", "letter"), ("Ben", "send", "letter"),
        ("Anna", "read", "letter"), ("Anna", "cry", None), ("Anna", "smile", None),
        ("Anna", "meet", "Ben"), ("Anna", "kiss", "Ben"),
    ],
    "rom-03": [
        ("Ivy", "meet", "stranger"), ("Ivy", "smile", None), ("stranger", "blush", None),
        ("Ivy", "whisper", "name"), ("stranger", "lean", None),
        ("Ivy", "kiss", "stranger"), ("Ivy", "blush", None),
    ],
    "rom-04": [
        ("Ben", "propose", None), ("Anna", "cry", None), ("Anna", "accept", "ring"),
        ("Ben", "marry", "Anna"), ("Anna", "dance", None), ("Ben", "dance", None),
        ("Ben", "smile", None),
    ],
    "rom-05": [
        ("Ivy", "write", "letter"), ("Ivy", "send", "letter"),
        ("Cole", "read", "letter"), ("Cole", "smile", None),
        ("Cole", "meet", "Ivy"), ("Cole", "kiss", "Ivy"), ("Ivy", "blush", None),
    ],
    "rom-06": [
        ("Anna", "stroll", "shore"), ("Ben", "wave", None), ("Anna", "meet", "Ben"),
        ("Anna", "smile", None), ("Ben", "whisper", "promise"), ("Anna", "lean", None),
        ("Ben", "propose", None), ("Anna", "marry", "Ben"),
    ],
}

RAW_SCREENPLAYS = {
    "alley_chase": """\
EXT. ALLEY -- NIGHT

Rex rounds the corner at a dead sprint. A chain-link gate blocks
the far end of the alley.

          REX
                    (breathless)
          Not tonight.

He leaps, catches the top rail, and rolls over the gate. Somewhere
behind him a whistle blows.

          DISPATCHER (V.O.)Suspect heading north on Fifth.

Rex drops into the shadows and waits.
""",
    "harbor_meeting": """\
EXT. HARBOR -- DUSK

Anna stands at the rail, watching the ferry lights. Ben approaches
with two paper cups.

          BEN
          I guessed you'd still be here.

          ANNA
                    (smiling)
          You guessed right.

They lean on the rail together. The ferry horn sounds across the
water.
""",
}


def make_doc(doc_id: str, genre: str, events) -> AnnotatedDocument:
    sentences = []
    chain_mentions: dict[str, list[tuple[int, int]]] = {}
    for s_idx, (subject, verb, obj) in enumerate(events):
        tokens = []
        deps = []
        subject_index = None
        if subject is not None:
            ner = "PERSON" if subject in PERSONS else ""
            subject_index = len(tokens)
            tokens.append(
                Token(subject_index, subject, subject.lower(), "NNP" if ner else "NN", ner)
            )
        verb_index = len(tokens)
        tokens.append(Token(verb_index, verb, verb, "VBD"))
        if obj is not None:
            ner = "PERSON" if obj in PERSONS else ""
            object_index = len(tokens)
            tokens.append(
                Token(object_index, obj, obj.lower(), "NNP" if ner else "NN", ner)
            )
            deps.append(DependencyEdge(verb_index, object_index, "dobj"))
        if subject_index is not None:
            deps.append(DependencyEdge(verb_index, subject_index, "nsubj"))
            chain_mentions.setdefault(subject.lower(), []).append((s_idx, subject_index))
        sentences.append(Sentence(tuple(tokens), tuple(deps)))
    chains = tuple(
        CorefChain(entity, tuple(mentions))
        for entity, mentions in sorted(chain_mentions.items())
    )
    return AnnotatedDocument(doc_id, genre, tuple(sentences), chains)


def synth_count(pattern: str) -> int:
    digest = int.from_bytes(hashlib.sha256(pattern.encode()).digest()[:8], "big")
    bucket = digest % 3
    if bucket == 0:
        return digest % 95  # tens or less
    if bucket == 1:
        return 100 + digest % 400  # around the threshold
    return 1_000_000 + digest % 900_000_000  # millions


def genre_patterns(corpus_path: Path, genre: str, measure: str) -> list[str]:
    docs = load_corpus(corpus_path, genre=genre)
    stats = build_genre_stats(docs, genre)
    counts = CorpusCounts.from_stats(stats)
    ranked = rank_top_k(score_pairs(measure, counts), 100)
    rows = [RankedPair(i + 1, pair) for i, pair in enumerate(ranked)]
    records = build_refinement_records(rows, sorted(stats.event_types), SEED, stats.event_types)
    patterns = []
    for record in records:
        patterns.append(str(record.pcep_pattern))
        patterns.append(str(record.rep_pattern))
    return patterns


def build_corpus() -> Path:
    MINI.mkdir(parents=True, exist_ok=True)
    corpus_path = MINI / "corpus.jsonl"
    with open(corpus_path, "w", encoding="utf-8") as handle:
        for doc_id, events in sorted(ACTION_DOCS.items()):
            handle.write(serialize_document(make_doc(doc_id, "action", events)) + "\n")
        for doc_id, events in sorted(ROMANCE_DOCS.items()):
            handle.write(serialize_document(make_doc(doc_id, "romance", events)) + "\n")
    return corpus_path


def build_raw() -> None:
    raw_dir = MINI / "raw"
    raw_dir.mkdir(parents=True, exist_ok=True)
    for name, text in RAW_SCREENPLAYS.items():
        (raw_dir / f"{name}.txt").write_text(text, encoding="utf-8")


def build_cache(corpus_path: Path) -> None:
    # the bigram and protag-cp defaults score nothing on a corpus this
    # small, so only cp and pmi runs ever reach the provider
    patterns = []
    for genre in ("action", "romance"):
        for measure in ("cp", "pmi"):
            patterns.extend(genre_patterns(corpus_path, genre, measure))
    cache = HitCountCache(counts={p: synth_count(p) for p in patterns})
    cache.save(MINI / "hits_cache.tsv")


def write_configs() -> None:
    base = {
        "measure": "cp",
        "seed": SEED,
        "annotated": "data/mini/corpus.jsonl",
        "cache": "data/mini/hits_cache.tsv",
    }
    action = dict(base, genre="action", rawDir="data/mini/raw")
    romance = dict(base, genre="romance")
    for name, config in (("config_action.json", action), ("config_romance.json", romance)):
        with open(MINI / name, "w", encoding="utf-8") as handle:
            json.dump(config, handle, indent=1, sort_keys=True)
            handle.write("\n")


def build_goldens() -> None:
    import os

    os.chdir(ROOT)  # configs use repo-relative paths
    for genre in ("action", "romance"):
        out = GOLDEN / genre
        if out.exists():
            shutil.rmtree(out)
        config = PipelineConfig(
            genre=genre,
            measure="cp",
            seed=SEED,
            annotated="data/mini/corpus.jsonl",
            raw_dir="data/mini/raw" if genre == "action" else None,
            cache="data/mini/hits_cache.tsv",
            out=str(out),
        )
        result = run_pipeline(config)
        # goldens pin the text artifacts; figures are only compared
        # between same-environment runs
        shutil.rmtree(out / "figures")
        print(genre, result.counts)
        if result.counts["kept"] < 2:
            raise SystemExit(f"{genre}: expected at least 2 kept pairs, tune the cache")
        if result.counts["kept"] == result.counts["ranked"]:
            raise SystemExit(f"{genre}: expected at least one dropped pair")


def main() -> None:
    corpus_path = build_corpus()
    build_raw()
    build_cache(corpus_path)
    write_configs()
    build_goldens()
    print("fixtures written to", MINI, "and", GOLDEN)


if __name__ == "__main__":
    main()
