"""Distributional contingency measures over genre pair statistics.

Four measures are provided: pointwise mutual information, causal
potential (PMI plus a directional ordering term), bigram successor
probability, and causal potential over protagonist-sharing pairs.  All
logarithms are natural; rankings are invariant to the base.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .artifacts import ArtifactError, params_hash, read_tsv, write_tsv
from .extract import EventPairStats, EventType, GenreStats

PMI = "pmi"
CP = "cp"
BIGRAM = "bigram"
PROTAG_CP = "protag-cp"
MEASURES = (PMI, CP, BIGRAM, PROTAG_CP)

DEFAULT_TOP_K = 100
DEFAULT_BIGRAM_MIN_JOINT = 20

# Reserved successor marking the end of a document's verb sequence; it
# carries the probability mass of document-final events so that each
# verb's successor distribution sums to one.
END_OF_DOC = "</s>"


@dataclass(frozen=True)
class ScoredPair:
    first: str
    second: str
    measure: str
    score: float
    ordered: bool = True

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValueError(
                f"non-finite score for pair ({self.first}, {self.second})"
            )
        if not self.ordered and self.measure != PMI:
            raise ValueError("only pmi scores an unordered pair")


@dataclass(frozen=True)
class CorpusCounts:
    event_freq: Mapping[str, int]
    total_events: int
    pair_stats: EventPairStats

    @classmethod
    def from_stats(cls, stats: GenreStats) -> "CorpusCounts":
        freq = {lemma: t.frequency for lemma, t in stats.event_types.items()}
        return cls(
            event_freq=freq,
            total_events=sum(freq.values()),
            pair_stats=stats.pairs,
        )


def _event_probability(event: str, counts: CorpusCounts) -> float:
    freq = counts.event_freq.get(event, 0)
    if freq < 1:
        raise ValueError(f"event '{event}' has zero frequency")
    return freq / counts.total_events


def pmi(e1: str, e2: str, counts: CorpusCounts) -> float:
    """log of joint pair probability over the product of event
    probabilities; joint counts ignore pair order."""
    joint = counts.pair_stats.joint(e1, e2)
    if joint < 1:
        raise ValueError(f"pair ({e1}, {e2}) has zero joint count")
    p_joint = joint / counts.pair_stats.total_pair_tokens
    return math.log(p_joint / (_event_probability(e1, counts) * _event_probability(e2, counts)))


def _ordering_term(first: str, second: str, stats: EventPairStats) -> float:
    # Unseen directions are smoothed to frequency 1; the pair-token
    # denominators cancel in the ratio.
    forward = stats.directional(first, second) or 1
    backward = stats.directional(second, first) or 1
    return math.log(forward / backward)


def causal_potential(e1: str, e2: str, counts: CorpusCounts) -> float:
    """PMI plus the log ratio of directional adjacency probabilities."""
    return pmi(e1, e2, counts) + _ordering_term(e1, e2, counts.pair_stats)


def bigram_probability(
    w1: str,
    w2: str,
    counts: CorpusCounts,
    min_joint: int = DEFAULT_BIGRAM_MIN_JOINT,
) -> float | None:
    """Successor probability count(w1 -> w2) / count(w1), or None when
    the directional count falls below `min_joint` or w1 is unseen."""
    freq = counts.event_freq.get(w1, 0)
    if freq < 1:
        return None
    observed = counts.pair_stats.directional(w1, w2)
    if observed < min_joint:
        return None
    return observed / freq


def successor_distribution(
    w1: str, counts: CorpusCounts, min_joint: int = 1
) -> dict[str, float]:
    """All successor probabilities of w1, including the end-of-document
    successor for occurrences that close a verb sequence."""
    freq = counts.event_freq.get(w1, 0)
    if freq < 1:
        return {}
    dist = {}
    outgoing = 0
    for (first, second), count in counts.pair_stats.counts.items():
        if first != w1:
            continue
        outgoing += count
        if count >= min_joint:
            dist[second] = count / freq
    final = freq - outgoing
    if final >= min_joint:
        dist[END_OF_DOC] = final / freq
    return dist


def protagonist_cp(
    e1: str, e2: str, protag_stats: EventPairStats, counts: CorpusCounts
) -> float:
    """Causal potential computed over protagonist-sharing pair counts;
    event probabilities still come from the whole genre corpus."""
    joint = protag_stats.joint(e1, e2)
    if joint < 1:
        raise ValueError(f"pair ({e1}, {e2}) has zero protagonist joint count")
    p_joint = joint / protag_stats.total_pair_tokens
    pmi_part = math.log(
        p_joint / (_event_probability(e1, counts) * _event_probability(e2, counts))
    )
    return pmi_part + _ordering_term(e1, e2, protag_stats)


def score_pairs(
    measure: str,
    counts: CorpusCounts,
    *,
    min_joint: int = DEFAULT_BIGRAM_MIN_JOINT,
    protag_stats: EventPairStats | None = None,
) -> list[ScoredPair]:
    """Score every scoreable pair under one measure.

    PMI emits each unordered pair once (first <= second); the ordered
    measures emit one entry per observed direction.  Pairs that cannot
    be scored (zero joint count, sub-threshold bigrams) are absent from
    the output rather than scored at -inf.
    """
    scored: list[ScoredPair] = []
    if measure == PMI:
        unordered = sorted({tuple(sorted(pair)) for pair in counts.pair_stats.counts})
        for first, second in unordered:
            scored.append(
                ScoredPair(first, second, PMI, pmi(first, second, counts), ordered=False)
            )
    elif measure == CP:
        for first, second in sorted(counts.pair_stats.counts):
            scored.append(
                ScoredPair(first, second, CP, causal_potential(first, second, counts))
            )
    elif measure == BIGRAM:
        for first, second in sorted(counts.pair_stats.counts):
            probability = bigram_probability(first, second, counts, min_joint)
            if probability is not None:
                scored.append(ScoredPair(first, second, BIGRAM, probability))
    elif measure == PROTAG_CP:
        if protag_stats is None:
            raise ValueError("protagonist pair statistics are required for protag-cp")
        for first, second in sorted(protag_stats.counts):
            scored.append(
                ScoredPair(
                    first, second, PROTAG_CP, protagonist_cp(first, second, protag_stats, counts)
                )
            )
    else:
        raise ValueError(f"unknown measure: {measure!r}")
    return scored


def rank_top_k(scored: Sequence[ScoredPair], k: int = DEFAULT_TOP_K) -> list[ScoredPair]:
    """Descending by score, ties broken by (first, second); length min(k, n)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    measures = {pair.measure for pair in scored}
    if len(measures) > 1:
        raise ValueError(f"cannot rank pairs from mixed measures: {sorted(measures)}")
    ranked = sorted(scored, key=lambda p: (-p.score, p.first, p.second))
    return ranked[:k]


@dataclass(frozen=True)
class RankedPair:
    """One row of the scored-pairs artifact, with display arguments."""

    rank: int
    pair: ScoredPair
    first_subject: str = ""
    first_object: str = ""
    second_subject: str = ""
    second_object: str = ""


def scored_params(stats_hash: str, measure: str, top_k: int, min_joint: int | None) -> dict:
    return {
        "upstream": stats_hash,
        "measure": measure,
        "topK": top_k,
        "minJoint": min_joint if measure == BIGRAM else None,
    }


_SCORED_COLUMNS = (
    "rank",
    "first",
    "repSubject1",
    "repObject1",
    "second",
    "repSubject2",
    "repObject2",
    "score",
)


def write_scored(
    path: str | Path,
    ranked: Sequence[ScoredPair],
    event_types: Mapping[str, EventType],
    *,
    genre: str,
    stats_hash: str,
    measure: str,
    top_k: int,
    min_joint: int | None = None,
) -> None:
    def rep(verb: str, which: str) -> str:
        event = event_types.get(verb)
        if event is None:
            return ""
        value = event.rep_subject if which == "subject" else event.rep_object
        return value or ""

    params = scored_params(stats_hash, measure, top_k, min_joint)
    meta = {
        "hash": params_hash(params),
        "upstream": stats_hash,
        "measure": measure,
        "genre": genre,
        "topK": str(top_k),
    }
    if measure == BIGRAM:
        meta["minJoint"] = str(min_joint)
    rows = []
    for position, pair in enumerate(ranked, start=1):
        rows.append(
            (
                str(position),
                pair.first,
                rep(pair.first, "subject"),
                rep(pair.first, "object"),
                pair.second,
                rep(pair.second, "subject"),
                rep(pair.second, "object"),
                f"{pair.score:.6f}",
            )
        )
    write_tsv(path, "scored", meta, _SCORED_COLUMNS, rows)


def read_scored(path: str | Path) -> tuple[dict[str, str], list[RankedPair]]:
    meta, columns, rows = read_tsv(path, "scored")
    if list(columns) != list(_SCORED_COLUMNS):
        raise ArtifactError(f"{path}: unexpected scored-pair columns {columns}")
    measure = meta["measure"]
    ranked = []
    for row in rows:
        ranked.append(
            RankedPair(
                rank=int(row[0]),
                pair=ScoredPair(
                    first=row[1],
                    second=row[4],
                    measure=measure,
                    score=float(row[7]),
                    ordered=measure != PMI,
                ),
                first_subject=row[2],
                first_object=row[3],
                second_subject=row[5],
                second_object=row[6],
            )
        )
    return meta, ranked
