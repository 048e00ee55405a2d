"""Turn annotated documents into events, event types and pair statistics.

An event is a verb token plus the subject/object found through its
dependency edges.  Events are keyed by verb lemma alone; arguments are
generalized (NER label if present, lemma otherwise) and only ride along
for representative-argument selection and display.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .artifacts import ArtifactError, params_hash
from .ingest import AnnotatedDocument, Token

SUBJECT_RELATIONS = frozenset({"nsubj", "agent"})
OBJECT_RELATIONS = frozenset({"dobj", "iobj", "nsubjpass"})

ADJACENCY = "adjacency"
PROTAGONIST = "protagonist"

DEFAULT_MIN_PAIR_FREQ = 5


@dataclass(frozen=True)
class EventMention:
    verb_lemma: str
    subject_text: str | None
    object_text: str | None
    subject_gen: str | None
    object_gen: str | None
    # (docId, sentence index, token index)
    position: tuple[str, int, int]
    protagonist_chains: frozenset[str] = frozenset()


@dataclass
class EventType:
    verb_lemma: str
    subject_dist: dict[str, int] = field(default_factory=dict)
    object_dist: dict[str, int] = field(default_factory=dict)
    rep_subject: str | None = None
    rep_object: str | None = None
    frequency: int = 0


@dataclass
class EventPairStats:
    genre: str
    counts: dict[tuple[str, str], int]
    total_pair_tokens: int

    def directional(self, first: str, second: str) -> int:
        return self.counts.get((first, second), 0)

    def joint(self, first: str, second: str) -> int:
        """Order-ignoring joint count; a self pair has a single order."""
        if first == second:
            return self.directional(first, first)
        return self.directional(first, second) + self.directional(second, first)


def generalize_argument(tokens: Sequence[Token]) -> str | None:
    """Generalize an argument span: NER label if any token has one, else
    the head token's lemma (head first in `tokens`), lowercased."""
    if not tokens:
        return None
    for token in tokens:
        if token.ner:
            return token.ner.lower()
    return tokens[0].lemma.lower()


def extract_event_mentions(doc: AnnotatedDocument) -> list[EventMention]:
    """One mention per VB-prefixed token, in document order.

    The subject is the lowest-indexed nsubj/agent dependent of the verb,
    the object the lowest-indexed dobj/iobj/nsubjpass dependent; either
    may be absent.  Coreference chains containing the subject token are
    recorded as the mention's protagonist chains.
    """
    chain_index: dict[tuple[int, int], set[str]] = {}
    for chain in doc.coref_chains:
        for mention in chain.mentions:
            chain_index.setdefault(mention, set()).add(chain.chain_id)

    mentions = []
    for s_idx, sentence in enumerate(doc.sentences):
        by_head: dict[int, list] = {}
        for dep in sentence.deps:
            by_head.setdefault(dep.head, []).append(dep)
        for token in sentence.tokens:
            if not token.pos.startswith("VB"):
                continue
            subject = object_ = None
            for dep in by_head.get(token.index, ()):
                dependent = sentence.tokens[dep.dependent]
                if dep.relation in SUBJECT_RELATIONS:
                    if subject is None or dependent.index < subject.index:
                        subject = dependent
                elif dep.relation in OBJECT_RELATIONS:
                    if object_ is None or dependent.index < object_.index:
                        object_ = dependent
            chains = frozenset()
            if subject is not None:
                chains = frozenset(chain_index.get((s_idx, subject.index), ()))
            mentions.append(
                EventMention(
                    verb_lemma=token.lemma.lower(),
                    subject_text=subject.surface if subject else None,
                    object_text=object_.surface if object_ else None,
                    subject_gen=generalize_argument([subject]) if subject else None,
                    object_gen=generalize_argument([object_]) if object_ else None,
                    position=(doc.doc_id, s_idx, token.index),
                    protagonist_chains=chains,
                )
            )
    return mentions


def _representative(dist: Mapping[str, int]) -> str | None:
    # Highest count wins; ties break to the lexicographically smaller key.
    if not dist:
        return None
    return min(dist.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def aggregate_event_types(mentions: Iterable[EventMention]) -> dict[str, EventType]:
    """Aggregate one genre's mentions into per-verb event types."""
    types: dict[str, EventType] = {}
    for mention in mentions:
        event = types.setdefault(mention.verb_lemma, EventType(mention.verb_lemma))
        event.frequency += 1
        if mention.subject_gen is not None:
            event.subject_dist[mention.subject_gen] = (
                event.subject_dist.get(mention.subject_gen, 0) + 1
            )
        if mention.object_gen is not None:
            event.object_dist[mention.object_gen] = (
                event.object_dist.get(mention.object_gen, 0) + 1
            )
    for event in types.values():
        event.rep_subject = _representative(event.subject_dist)
        event.rep_object = _representative(event.object_dist)
    return types


def adjacent_pairs_from_mentions(
    mention_lists: Iterable[Sequence[EventMention]], genre: str
) -> EventPairStats:
    """Count consecutive mention pairs; pairing never crosses documents."""
    counts: Counter[tuple[str, str]] = Counter()
    for mentions in mention_lists:
        for left, right in zip(mentions, mentions[1:]):
            counts[(left.verb_lemma, right.verb_lemma)] += 1
    return EventPairStats(genre=genre, counts=dict(counts), total_pair_tokens=sum(counts.values()))


def collect_adjacent_pairs(docs: Iterable[AnnotatedDocument], genre: str) -> EventPairStats:
    return adjacent_pairs_from_mentions((extract_event_mentions(d) for d in docs), genre)


def protagonist_pairs_from_mentions(
    mention_lists: Iterable[Sequence[EventMention]],
    genre: str,
    min_pair_freq: int = DEFAULT_MIN_PAIR_FREQ,
) -> EventPairStats:
    """Pair consecutive events that share a protagonist chain.

    Within each document the events are partitioned by the coref chain
    of their subject; consecutive events of one chain (in textual order)
    form ordered pairs.  After genre-wide aggregation, pairs rarer than
    `min_pair_freq` are removed.
    """
    counts: Counter[tuple[str, str]] = Counter()
    for mentions in mention_lists:
        chain_ids = sorted({cid for m in mentions for cid in m.protagonist_chains})
        for chain_id in chain_ids:
            shared = [m for m in mentions if chain_id in m.protagonist_chains]
            for left, right in zip(shared, shared[1:]):
                counts[(left.verb_lemma, right.verb_lemma)] += 1
    kept = {pair: n for pair, n in counts.items() if n >= min_pair_freq}
    return EventPairStats(genre=genre, counts=kept, total_pair_tokens=sum(kept.values()))


def collect_protagonist_pairs(
    docs: Iterable[AnnotatedDocument],
    genre: str,
    min_pair_freq: int = DEFAULT_MIN_PAIR_FREQ,
) -> EventPairStats:
    return protagonist_pairs_from_mentions(
        (extract_event_mentions(d) for d in docs), genre, min_pair_freq
    )


@dataclass
class GenreStats:
    """The extract stage artifact: event types plus pair statistics."""

    genre: str
    mode: str
    min_pair_freq: int | None
    event_types: dict[str, EventType]
    pairs: EventPairStats

    def params(self) -> dict:
        return {
            "genre": self.genre,
            "mode": self.mode,
            "minPairFreq": self.min_pair_freq,
        }

    @property
    def stats_hash(self) -> str:
        return params_hash(self.params())


def build_genre_stats(
    docs: Sequence[AnnotatedDocument],
    genre: str,
    mode: str = ADJACENCY,
    min_pair_freq: int = DEFAULT_MIN_PAIR_FREQ,
) -> GenreStats:
    if mode not in (ADJACENCY, PROTAGONIST):
        raise ValueError(f"unknown pairing mode: {mode!r}")
    mention_lists = [extract_event_mentions(d) for d in docs]
    event_types = aggregate_event_types(m for mentions in mention_lists for m in mentions)
    if mode == ADJACENCY:
        pairs = adjacent_pairs_from_mentions(mention_lists, genre)
        freq = None
    else:
        pairs = protagonist_pairs_from_mentions(mention_lists, genre, min_pair_freq)
        freq = min_pair_freq
    return GenreStats(
        genre=genre, mode=mode, min_pair_freq=freq, event_types=event_types, pairs=pairs
    )


def write_stats(stats: GenreStats, path: str | Path) -> None:
    pairs_nested: dict[str, dict[str, int]] = {}
    for (first, second), count in stats.pairs.counts.items():
        pairs_nested.setdefault(first, {})[second] = count
    record = {
        "format": "eventpairs-stats/1",
        "statsHash": stats.stats_hash,
        "genre": stats.genre,
        "mode": stats.mode,
        "minPairFreq": stats.min_pair_freq,
        "totalEvents": sum(t.frequency for t in stats.event_types.values()),
        "totalPairTokens": stats.pairs.total_pair_tokens,
        "eventTypes": {
            lemma: {
                "frequency": event.frequency,
                "repSubject": event.rep_subject,
                "repObject": event.rep_object,
                "subjectDist": event.subject_dist,
                "objectDist": event.object_dist,
            }
            for lemma, event in stats.event_types.items()
        },
        "pairs": pairs_nested,
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(record, handle, ensure_ascii=False, sort_keys=True, indent=1)
        handle.write("\n")


def read_stats(path: str | Path) -> GenreStats:
    with open(path, encoding="utf-8") as handle:
        record = json.load(handle)
    if record.get("format") != "eventpairs-stats/1":
        raise ArtifactError(f"{path}: not an eventpairs stats file")
    event_types = {}
    for lemma, raw in record["eventTypes"].items():
        event_types[lemma] = EventType(
            verb_lemma=lemma,
            subject_dist=dict(raw["subjectDist"]),
            object_dist=dict(raw["objectDist"]),
            rep_subject=raw["repSubject"],
            rep_object=raw["repObject"],
            frequency=raw["frequency"],
        )
    counts = {
        (first, second): count
        for first, successors in record["pairs"].items()
        for second, count in successors.items()
    }
    pairs = EventPairStats(
        genre=record["genre"],
        counts=counts,
        total_pair_tokens=record["totalPairTokens"],
    )
    stats = GenreStats(
        genre=record["genre"],
        mode=record["mode"],
        min_pair_freq=record["minPairFreq"],
        event_types=event_types,
        pairs=pairs,
    )
    if record["statsHash"] != stats.stats_hash:
        raise ArtifactError(f"{path}: stats hash does not match file parameters")
    if pairs.total_pair_tokens != sum(counts.values()):
        raise ArtifactError(f"{path}: totalPairTokens does not match pair counts")
    return stats
