"""Load raw screenplays and pre-annotated documents.

Raw screenplays only pass through dialog excision here; everything else
in the toolkit consumes documents that were annotated upstream (tokens,
lemmas, POS tags, dependencies, NER, coreference) and serialized in the
JSON-lines schema described in `load_document`.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator


class DocumentError(Exception):
    """Raised when a serialized document violates the annotation schema."""


@dataclass(frozen=True)
class Token:
    index: int
    surface: str
    lemma: str
    pos: str
    ner: str = ""


@dataclass(frozen=True)
class DependencyEdge:
    head: int
    dependent: int
    relation: str


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    deps: tuple[DependencyEdge, ...] = ()


@dataclass(frozen=True)
class CorefChain:
    chain_id: str
    # (sentence index, head token index) per mention
    mentions: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class AnnotatedDocument:
    doc_id: str
    genre: str
    sentences: tuple[Sentence, ...]
    coref_chains: tuple[CorefChain, ...] = field(default_factory=tuple)


# A speaker cue is an all-caps name, optionally followed by a parenthetical
# (which may run straight into dialog text, as in "CLOCK (continuing)Tick,
# tock --.").  Without a parenthetical the whole line must be caps.
_CUE_RE = re.compile(r"[A-Z0-9][A-Z0-9 .,:'\-]*(?:\(.*)?")


def _indent(line: str) -> int:
    expanded = line.expandtabs(4)
    return len(expanded) - len(expanded.lstrip(" "))


def excise_dialog(raw_screenplay: str) -> str:
    """Strip dialogue blocks from a plain-text screenplay.

    Scene description sits at the smallest indentation in the file.  A
    dialogue block starts at a more-indented line whose content is an
    all-caps speaker cue (optionally followed by a parenthetical) and
    runs through the following more-indented lines; a blank line or a
    return to the description margin ends it.  Retained lines keep
    their original order and spelling, so the operation is idempotent.
    """
    if not raw_screenplay:
        return ""
    lines = raw_screenplay.splitlines()
    nonblank = [ln for ln in lines if ln.strip()]
    if not nonblank:
        return raw_screenplay
    baseline = min(_indent(ln) for ln in nonblank)

    kept: list[str] = []
    in_block = False
    for line in lines:
        if not line.strip():
            in_block = False
            kept.append(line)
            continue
        if _indent(line) <= baseline:
            in_block = False
            kept.append(line)
            continue
        if _CUE_RE.fullmatch(line.strip()):
            in_block = True
            continue
        if in_block:
            continue
        kept.append(line)
    out = "\n".join(kept)
    if raw_screenplay.endswith("\n") and not out.endswith("\n"):
        out += "\n"
    return out


def _require(record: dict, key: str, context: str) -> object:
    if key not in record:
        raise DocumentError(f"{context}: missing field '{key}'")
    return record[key]


def _require_int(record: dict, key: str, context: str) -> int:
    value = _require(record, key, context)
    if isinstance(value, bool) or not isinstance(value, int):
        raise DocumentError(f"{context}: field '{key}' must be an integer")
    return value


def _require_str(record: dict, key: str, context: str, allow_empty: bool = False) -> str:
    value = _require(record, key, context)
    if not isinstance(value, str):
        raise DocumentError(f"{context}: field '{key}' must be a string")
    if not value and not allow_empty:
        raise DocumentError(f"{context}: field '{key}' must be non-empty")
    return value


def document_from_record(record: dict) -> AnnotatedDocument:
    """Build and validate an AnnotatedDocument from a decoded JSON record."""
    if not isinstance(record, dict):
        raise DocumentError("document record must be an object")
    doc_id = _require_str(record, "docId", "document")
    ctx = f"document '{doc_id}'"
    genre = _require_str(record, "genre", ctx)

    raw_sentences = _require(record, "sentences", ctx)
    if not isinstance(raw_sentences, list):
        raise DocumentError(f"{ctx}: field 'sentences' must be a list")
    sentences = []
    for s_idx, raw_sentence in enumerate(raw_sentences):
        s_ctx = f"{ctx} sentence {s_idx}"
        raw_tokens = _require(raw_sentence, "tokens", s_ctx)
        tokens = []
        for t_idx, raw_token in enumerate(raw_tokens):
            t_ctx = f"{s_ctx} token {t_idx}"
            index = _require_int(raw_token, "index", t_ctx)
            if index != t_idx:
                raise DocumentError(
                    f"{t_ctx}: field 'index' is {index}, expected contiguous indices from 0"
                )
            tokens.append(
                Token(
                    index=index,
                    surface=_require_str(raw_token, "surface", t_ctx),
                    lemma=_require_str(raw_token, "lemma", t_ctx),
                    pos=_require_str(raw_token, "pos", t_ctx, allow_empty=True),
                    ner=_require_str(raw_token, "ner", t_ctx, allow_empty=True),
                )
            )
        deps = []
        for d_idx, raw_dep in enumerate(_require(raw_sentence, "deps", s_ctx)):
            d_ctx = f"{s_ctx} dep {d_idx}"
            head = _require_int(raw_dep, "head", d_ctx)
            dependent = _require_int(raw_dep, "dependent", d_ctx)
            relation = _require_str(raw_dep, "relation", d_ctx)
            if head == dependent:
                raise DocumentError(f"{d_ctx}: field 'head' equals 'dependent' ({head})")
            for name, value in (("head", head), ("dependent", dependent)):
                if not 0 <= value < len(tokens):
                    raise DocumentError(
                        f"{d_ctx}: field '{name}' index {value} out of range "
                        f"for {len(tokens)} tokens"
                    )
            deps.append(DependencyEdge(head=head, dependent=dependent, relation=relation))
        sentences.append(Sentence(tokens=tuple(tokens), deps=tuple(deps)))

    raw_chains = _require(record, "coref", ctx)
    if not isinstance(raw_chains, list):
        raise DocumentError(f"{ctx}: field 'coref' must be a list")
    chains = []
    seen_ids: set[str] = set()
    for c_idx, raw_chain in enumerate(raw_chains):
        c_ctx = f"{ctx} coref chain {c_idx}"
        chain_id = _require_str(raw_chain, "chainId", c_ctx)
        if chain_id in seen_ids:
            raise DocumentError(f"{c_ctx}: duplicate field 'chainId' value '{chain_id}'")
        seen_ids.add(chain_id)
        raw_mentions = _require(raw_chain, "mentions", c_ctx)
        if not raw_mentions:
            raise DocumentError(f"{c_ctx}: field 'mentions' must have at least one entry")
        mentions = []
        for m_idx, raw_mention in enumerate(raw_mentions):
            m_ctx = f"{c_ctx} mention {m_idx}"
            sentence = _require_int(raw_mention, "sentence", m_ctx)
            token = _require_int(raw_mention, "token", m_ctx)
            if not 0 <= sentence < len(sentences):
                raise DocumentError(f"{m_ctx}: field 'sentence' index {sentence} out of range")
            if not 0 <= token < len(sentences[sentence].tokens):
                raise DocumentError(
                    f"{m_ctx}: field 'token' index {token} out of range "
                    f"in sentence {sentence}"
                )
            mentions.append((sentence, token))
        chains.append(CorefChain(chain_id=chain_id, mentions=tuple(mentions)))

    return AnnotatedDocument(
        doc_id=doc_id,
        genre=genre,
        sentences=tuple(sentences),
        coref_chains=tuple(chains),
    )


def load_document(data: bytes | str) -> AnnotatedDocument:
    """Deserialize and validate one document record (UTF-8 JSON)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        record = json.loads(data)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"document is not valid JSON: {exc}") from exc
    return document_from_record(record)


def document_to_record(doc: AnnotatedDocument) -> dict:
    return {
        "docId": doc.doc_id,
        "genre": doc.genre,
        "sentences": [
            {
                "tokens": [
                    {
                        "index": t.index,
                        "surface": t.surface,
                        "lemma": t.lemma,
                        "pos": t.pos,
                        "ner": t.ner,
                    }
                    for t in sentence.tokens
                ],
                "deps": [
                    {"head": d.head, "dependent": d.dependent, "relation": d.relation}
                    for d in sentence.deps
                ],
            }
            for sentence in doc.sentences
        ],
        "coref": [
            {
                "chainId": chain.chain_id,
                "mentions": [{"sentence": s, "token": t} for s, t in chain.mentions],
            }
            for chain in doc.coref_chains
        ],
    }


def serialize_document(doc: AnnotatedDocument) -> str:
    """Inverse of load_document: one compact JSON record."""
    return json.dumps(document_to_record(doc), ensure_ascii=False, sort_keys=True)


def iter_corpus(path: str | Path) -> Iterator[AnnotatedDocument]:
    """Yield validated documents from a JSON-lines corpus file."""
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                doc = load_document(line)
            except DocumentError as exc:
                raise DocumentError(f"{path} line {line_no}: {exc}") from exc
            if doc.doc_id in seen:
                raise DocumentError(
                    f"{path} line {line_no}: duplicate docId '{doc.doc_id}'"
                )
            seen.add(doc.doc_id)
            yield doc


def load_corpus(path: str | Path, genre: str | None = None) -> list[AnnotatedDocument]:
    """Load a corpus file, optionally keeping only one genre."""
    docs = list(iter_corpus(path))
    if genre is not None:
        docs = [d for d in docs if d.genre == genre]
    return docs


def write_corpus(docs: Iterable[AnnotatedDocument], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for doc in docs:
            handle.write(serialize_document(doc) + "\n")
