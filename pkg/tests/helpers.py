"""Builders for synthetic annotated documents used across the tests."""

from __future__ import annotations

from dataclasses import dataclass

from eventpairs.ingest import (
    AnnotatedDocument,
    CorefChain,
    DependencyEdge,
    Sentence,
    Token,
)


@dataclass
class Ev:
    """One scripted event: a verb with optional subject/object tokens.

    `entity` names the coreference chain the subject belongs to; it
    defaults to the subject itself so repeated subjects chain up.
    """

    verb: str
    subject: str | None = None
    object: str | None = None
    entity: str | None = None
    subject_ner: str = ""
    object_ner: str = ""

    def chain_entity(self) -> str | None:
        if self.entity is not None:
            return self.entity
        return self.subject


def make_doc(doc_id: str, genre: str, events: list[Ev]) -> AnnotatedDocument:
    """One sentence per event: [subject] verb [object] with nsubj/dobj edges."""
    sentences = []
    chain_mentions: dict[str, list[tuple[int, int]]] = {}
    for s_idx, event in enumerate(events):
        tokens = []
        deps = []
        subject_index = None
        if event.subject is not None:
            subject_index = len(tokens)
            tokens.append(
                Token(
                    index=subject_index,
                    surface=event.subject,
                    lemma=event.subject.lower(),
                    pos="NNP" if event.subject_ner else "NN",
                    ner=event.subject_ner,
                )
            )
        verb_index = len(tokens)
        tokens.append(
            Token(index=verb_index, surface=event.verb, lemma=event.verb, pos="VBD")
        )
        if event.object is not None:
            object_index = len(tokens)
            tokens.append(
                Token(
                    index=object_index,
                    surface=event.object,
                    lemma=event.object.lower(),
                    pos="NN",
                    ner=event.object_ner,
                )
            )
            deps.append(DependencyEdge(head=verb_index, dependent=object_index, relation="dobj"))
        if subject_index is not None:
            deps.append(DependencyEdge(head=verb_index, dependent=subject_index, relation="nsubj"))
            entity = event.chain_entity()
            if entity is not None:
                chain_mentions.setdefault(entity, []).append((s_idx, subject_index))
        sentences.append(Sentence(tokens=tuple(tokens), deps=tuple(deps)))
    chains = tuple(
        CorefChain(chain_id=entity, mentions=tuple(mentions))
        for entity, mentions in sorted(chain_mentions.items())
    )
    return AnnotatedDocument(
        doc_id=doc_id, genre=genre, sentences=tuple(sentences), coref_chains=chains
    )


def verbs_doc(doc_id: str, genre: str, verbs: list[str]) -> AnnotatedDocument:
    """Bare verb sequence, no arguments or chains."""
    return make_doc(doc_id, genre, [Ev(verb=v) for v in verbs])
