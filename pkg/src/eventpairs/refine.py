"""Web-search refinement of top-ranked candidate pairs.

Each predicted contingent event pair (PCEP) becomes an exact-phrase
wildcard query in the historical present ("he unlocks * enters"), and a
random event pair (REP) keeping the first verb is built as its control.
Hit counts come from a pluggable provider; the reproducible default is
a read-only cache file, with an optional rate-limited live client that
writes new counts through to the cache.  Pairs are kept when the PCEP
query is frequent on the web and the REP query is not.
"""

from __future__ import annotations

import json
import random
import time
import urllib.parse
import urllib.request
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Protocol, Sequence

from .artifacts import ArtifactError, params_hash, read_tsv, write_tsv
from .extract import EventType
from .measures import RankedPair, ScoredPair

DEFAULT_MIN_PCEP_HITS = 100
DEFAULT_MAX_REP_HITS = 100

KEEP = "KEEP"
DROP_LOW_PCEP = "DROP_LOW_PCEP"
DROP_HIGH_REP = "DROP_HIGH_REP"
DECISIONS = (KEEP, DROP_LOW_PCEP, DROP_HIGH_REP)

_IRREGULAR_3SG = {"be": "is", "have": "has", "do": "does", "go": "goes"}
_VOWELS = "aeiou"


def third_person_singular(lemma: str) -> str:
    """Inflect a lowercase verb lemma to third person singular."""
    if not lemma:
        raise ValueError("cannot inflect an empty lemma")
    if lemma in _IRREGULAR_3SG:
        return _IRREGULAR_3SG[lemma]
    if lemma.endswith(("s", "x", "z", "ch", "sh")):
        return lemma + "es"
    if lemma.endswith("y") and len(lemma) > 1 and lemma[-2] not in _VOWELS:
        return lemma[:-1] + "ies"
    return lemma + "s"


@dataclass(frozen=True)
class SearchPattern:
    """Exact-phrase wildcard query of the form `he <v1-3sg> * <v2-3sg>`."""

    text: str

    def __post_init__(self) -> None:
        tokens = self.text.split(" ")
        if len(tokens) != 4 or tokens[0] != "he" or tokens[2] != "*":
            raise ValueError(f"malformed search pattern: {self.text!r}")
        if self.text.count("*") != 1:
            raise ValueError(f"search pattern needs exactly one wildcard: {self.text!r}")

    def __str__(self) -> str:
        return self.text


def build_search_pattern(pair: tuple[str, str] | ScoredPair) -> SearchPattern:
    """`he <3sg(first)> * <3sg(second)>`; arguments are never included."""
    if isinstance(pair, ScoredPair):
        first, second = pair.first, pair.second
    else:
        first, second = pair
    return SearchPattern(f"he {third_person_singular(first)} * {third_person_singular(second)}")


def generate_rep(
    pcep: ScoredPair, event_pool: Sequence[str], seed: int
) -> tuple[str, str]:
    """Random event pair preserving the PCEP's first verb.

    The second verb is drawn uniformly from the distinct pool verbs,
    excluding the PCEP's own second verb; a fixed seed fixes the draw.
    """
    if len(set(event_pool)) < 2:
        raise ValueError("event pool must contain at least two distinct verbs")
    candidates = sorted(set(event_pool) - {pcep.second})
    if not candidates:
        raise ValueError(
            f"event pool offers no replacement for second verb '{pcep.second}'"
        )
    rng = random.Random(seed)
    return (pcep.first, rng.choice(candidates))


@dataclass(frozen=True)
class RefinementRecord:
    pcep: ScoredPair
    rep_first: str
    rep_second: str
    pcep_pattern: SearchPattern
    rep_pattern: SearchPattern
    pcep_hits: int | None = None
    rep_hits: int | None = None
    decision: str | None = None
    # representative arguments, for display in evaluation tasks
    first_subject: str = ""
    first_object: str = ""
    second_subject: str = ""
    second_object: str = ""
    rep_second_subject: str = ""
    rep_second_object: str = ""

    def __post_init__(self) -> None:
        if self.rep_first != self.pcep.first:
            raise ValueError("REP must preserve the PCEP's first verb")
        if self.rep_second == self.pcep.second:
            raise ValueError("REP second verb must differ from the PCEP's")


def _record_seed(seed: int, index: int) -> int:
    # Independent, reproducible stream per record.
    return seed * 1_000_003 + index


def build_refinement_records(
    ranked: Sequence[RankedPair],
    event_pool: Sequence[str],
    seed: int,
    event_types: Mapping[str, EventType] | None = None,
) -> list[RefinementRecord]:
    """Attach a seeded REP and both search patterns to each ranked pair."""
    records = []
    for index, row in enumerate(ranked):
        rep_first, rep_second = generate_rep(row.pair, event_pool, _record_seed(seed, index))
        rep_type = (event_types or {}).get(rep_second)
        records.append(
            RefinementRecord(
                pcep=row.pair,
                rep_first=rep_first,
                rep_second=rep_second,
                pcep_pattern=build_search_pattern(row.pair),
                rep_pattern=build_search_pattern((rep_first, rep_second)),
                first_subject=row.first_subject,
                first_object=row.first_object,
                second_subject=row.second_subject,
                second_object=row.second_object,
                rep_second_subject=(rep_type.rep_subject or "") if rep_type else "",
                rep_second_object=(rep_type.rep_object or "") if rep_type else "",
            )
        )
    return records


def parse_hit_count(text: str) -> int:
    """Parse a hit count, accepting K/M/B magnitude suffixes ("415M")."""
    cleaned = text.strip().replace(",", "")
    if not cleaned:
        raise ValueError("empty hit count")
    suffix = cleaned[-1].upper()
    multipliers = {"K": 1_000, "M": 1_000_000, "B": 1_000_000_000}
    if suffix in multipliers:
        value = float(cleaned[:-1]) * multipliers[suffix]
        rounded = round(value)
        if abs(value - rounded) > 1e-6:
            raise ValueError(f"hit count is not integral: {text!r}")
        value = rounded
    else:
        value = int(cleaned)
    if value < 0:
        raise ValueError(f"hit count must be non-negative: {text!r}")
    return int(value)


class UnresolvedPatternError(Exception):
    """A provider cannot answer one pattern (permanent, no retry)."""

    def __init__(self, pattern: str):
        super().__init__(f"no hit count available for pattern: {pattern!r}")
        self.pattern = pattern


class HitCountFetchError(Exception):
    """Some patterns stayed unresolved; resolved counts are attached."""

    def __init__(self, unresolved: Sequence[str], resolved: Mapping[str, int]):
        listing = ", ".join(repr(p) for p in unresolved)
        super().__init__(f"unresolved search patterns: {listing}")
        self.unresolved = list(unresolved)
        self.resolved = dict(resolved)


class HitCountProvider(Protocol):
    def query(self, pattern: str) -> int: ...


class HitCountCache:
    """Tab-separated pattern/count store; counts may use K/M/B suffixes."""

    def __init__(self, path: str | Path | None = None, counts: dict[str, int] | None = None):
        self.path = Path(path) if path is not None else None
        self.counts: dict[str, int] = dict(counts or {})

    @classmethod
    def load(cls, path: str | Path) -> "HitCountCache":
        counts: dict[str, int] = {}
        with open(path, encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                stripped = line.rstrip("\n")
                if not stripped.strip() or stripped.startswith("#"):
                    continue
                if "\t" not in stripped:
                    raise ArtifactError(f"{path} line {line_no}: expected <pattern>\\t<count>")
                pattern, _, count = stripped.partition("\t")
                try:
                    counts[pattern] = parse_hit_count(count)
                except ValueError as exc:
                    raise ArtifactError(f"{path} line {line_no}: {exc}") from exc
        return cls(path=path, counts=counts)

    def get(self, pattern: str) -> int | None:
        return self.counts.get(pattern)

    def add(self, pattern: str, count: int, persist: bool = True) -> None:
        self.counts[pattern] = count
        if persist and self.path is not None:
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(f"{pattern}\t{count}\n")

    def save(self, path: str | Path | None = None) -> None:
        """Rewrite the whole cache in sorted, canonical form."""
        target = Path(path) if path is not None else self.path
        if target is None:
            raise ValueError("no cache path to save to")
        with open(target, "w", encoding="utf-8") as handle:
            for pattern in sorted(self.counts):
                handle.write(f"{pattern}\t{self.counts[pattern]}\n")


class CachedHitCounts:
    """Read-only provider over a recorded cache; misses fail loudly."""

    def __init__(self, cache: HitCountCache):
        self.cache = cache

    def query(self, pattern: str) -> int:
        count = self.cache.get(pattern)
        if count is None:
            raise UnresolvedPatternError(pattern)
        return count


class WriteThroughHitCounts:
    """Live provider: one in-flight query at a time, a minimum delay
    between backend calls, and every new count persisted to the cache."""

    def __init__(
        self,
        backend: Callable[[str], int],
        cache: HitCountCache,
        min_delay: float = 1.0,
    ):
        self.backend = backend
        self.cache = cache
        self.min_delay = min_delay
        self._last_query = 0.0

    def query(self, pattern: str) -> int:
        cached = self.cache.get(pattern)
        if cached is not None:
            return cached
        wait = self.min_delay - (time.monotonic() - self._last_query)
        if wait > 0:
            time.sleep(wait)
        try:
            count = self.backend(pattern)
        finally:
            self._last_query = time.monotonic()
        if not isinstance(count, int) or count < 0:
            raise ValueError(f"backend returned invalid count for {pattern!r}: {count!r}")
        self.cache.add(pattern, count)
        return count


def http_hit_count_backend(url_template: str) -> Callable[[str], int]:
    """Backend querying an HTTP endpoint; `{query}` in the template is
    replaced with the URL-encoded pattern.  The response body must be a
    bare integer or a JSON object with a `count` field."""

    def query(pattern: str) -> int:
        url = url_template.format(query=urllib.parse.quote(pattern))
        with urllib.request.urlopen(url, timeout=30) as response:
            body = response.read().decode("utf-8").strip()
        try:
            return int(body)
        except ValueError:
            payload = json.loads(body)
            return int(payload["count"])

    return query


def fetch_hit_counts(
    patterns: Iterable[SearchPattern | str],
    provider: HitCountProvider,
    retries: int = 3,
) -> dict[str, int]:
    """Resolve every pattern to a count, sequentially and deduplicated.

    Transient provider failures are retried up to `retries` times; cache
    misses are permanent.  If any pattern stays unresolved the error
    lists them all, with already-resolved counts attached (write-through
    providers have persisted those by then).
    """
    unique: list[str] = []
    seen = set()
    for pattern in patterns:
        text = str(pattern)
        if text not in seen:
            seen.add(text)
            unique.append(text)
    resolved: dict[str, int] = {}
    unresolvable: list[str] = []
    for text in unique:
        try:
            resolved[text] = provider.query(text)
            continue
        except UnresolvedPatternError:
            unresolvable.append(text)
            continue
        except Exception:
            pass
        for attempt in range(retries - 1):
            try:
                resolved[text] = provider.query(text)
                break
            except UnresolvedPatternError:
                break
            except Exception:
                continue
        if text not in resolved:
            unresolvable.append(text)
    if unresolvable:
        raise HitCountFetchError(unresolvable, resolved)
    return resolved


def attach_hit_counts(
    records: Sequence[RefinementRecord], counts: Mapping[str, int]
) -> list[RefinementRecord]:
    attached = []
    for record in records:
        for pattern in (record.pcep_pattern, record.rep_pattern):
            if str(pattern) not in counts:
                raise ValueError(f"missing hit count for pattern: {pattern}")
        attached.append(
            replace(
                record,
                pcep_hits=counts[str(record.pcep_pattern)],
                rep_hits=counts[str(record.rep_pattern)],
            )
        )
    return attached


def refine(
    records: Sequence[RefinementRecord],
    min_pcep_hits: int = DEFAULT_MIN_PCEP_HITS,
    max_rep_hits: int = DEFAULT_MAX_REP_HITS,
) -> list[RefinementRecord]:
    """Apply keep/drop thresholds; every record comes back with a decision.

    A pair is dropped when its own query is rare (strictly below
    `min_pcep_hits`) or its random control is common (strictly above
    `max_rep_hits`); counts exactly at a threshold are kept.
    """
    decided = []
    for record in records:
        if record.pcep_hits is None:
            raise ValueError(f"missing hit count for pattern: {record.pcep_pattern}")
        if record.rep_hits is None:
            raise ValueError(f"missing hit count for pattern: {record.rep_pattern}")
        if record.pcep_hits < min_pcep_hits:
            decision = DROP_LOW_PCEP
        elif record.rep_hits > max_rep_hits:
            decision = DROP_HIGH_REP
        else:
            decision = KEEP
        decided.append(replace(record, decision=decision))
    return decided


def refined_params(
    scored_hash: str, seed: int, min_pcep_hits: int, max_rep_hits: int
) -> dict:
    return {
        "upstream": scored_hash,
        "seed": seed,
        "minPcepHits": min_pcep_hits,
        "maxRepHits": max_rep_hits,
    }


_REFINED_COLUMNS = (
    "rank",
    "first",
    "repSubject1",
    "repObject1",
    "second",
    "repSubject2",
    "repObject2",
    "score",
    "repSecond",
    "repSecondSubject",
    "repSecondObject",
    "pcepPattern",
    "repPattern",
    "pcepHits",
    "repHits",
    "decision",
)


def write_refined(
    path: str | Path,
    records: Sequence[RefinementRecord],
    ranks: Sequence[int],
    *,
    genre: str,
    measure: str,
    scored_hash: str,
    seed: int,
    min_pcep_hits: int,
    max_rep_hits: int,
) -> None:
    params = refined_params(scored_hash, seed, min_pcep_hits, max_rep_hits)
    meta = {
        "hash": params_hash(params),
        "upstream": scored_hash,
        "measure": measure,
        "genre": genre,
        "seed": str(seed),
        "minPcepHits": str(min_pcep_hits),
        "maxRepHits": str(max_rep_hits),
    }
    rows = []
    for rank, record in zip(ranks, records):
        if record.decision is None:
            raise ValueError("refusing to write a record without a decision")
        rows.append(
            (
                str(rank),
                record.pcep.first,
                record.first_subject,
                record.first_object,
                record.pcep.second,
                record.second_subject,
                record.second_object,
                f"{record.pcep.score:.6f}",
                record.rep_second,
                record.rep_second_subject,
                record.rep_second_object,
                str(record.pcep_pattern),
                str(record.rep_pattern),
                str(record.pcep_hits),
                str(record.rep_hits),
                record.decision,
            )
        )
    write_tsv(path, "refined", meta, _REFINED_COLUMNS, rows)


def read_refined(path: str | Path) -> tuple[dict[str, str], list[RefinementRecord]]:
    meta, columns, rows = read_tsv(path, "refined")
    if list(columns) != list(_REFINED_COLUMNS):
        raise ArtifactError(f"{path}: unexpected refined columns {columns}")
    measure = meta["measure"]
    records = []
    for row in rows:
        records.append(
            RefinementRecord(
                pcep=ScoredPair(
                    first=row[1],
                    second=row[4],
                    measure=measure,
                    score=float(row[7]),
                    ordered=measure != "pmi",
                ),
                rep_first=row[1],
                rep_second=row[8],
                pcep_pattern=SearchPattern(row[11]),
                rep_pattern=SearchPattern(row[12]),
                pcep_hits=int(row[13]),
                rep_hits=int(row[14]),
                decision=row[15],
                first_subject=row[2],
                first_object=row[3],
                second_subject=row[5],
                second_object=row[6],
                rep_second_subject=row[9],
                rep_second_object=row[10],
            )
        )
    return meta, records
