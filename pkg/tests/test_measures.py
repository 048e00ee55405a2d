import math
import random

import pytest

import oracle
from eventpairs.extract import (
    ADJACENCY,
    PROTAGONIST,
    EventPairStats,
    build_genre_stats,
)
from eventpairs.measures import (
    BIGRAM,
    CP,
    END_OF_DOC,
    PMI,
    PROTAG_CP,
    CorpusCounts,
    ScoredPair,
    bigram_probability,
    causal_potential,
    pmi,
    protagonist_cp,
    rank_top_k,
    read_scored,
    score_pairs,
    successor_distribution,
    write_scored,
)
from helpers import Ev, make_doc, verbs_doc


def counts_for(sequences: list[list[str]]) -> CorpusCounts:
    docs = [verbs_doc(f"d{i}", "g", seq) for i, seq in enumerate(sequences)]
    return CorpusCounts.from_stats(build_genre_stats(docs, "g"))


ABAB = counts_for([["a", "b", "a", "b"]])


class TestPmi:
    def test_abab_value(self):
        # P(a)=P(b)=1/2, unordered joint 3 of 3 pair tokens -> ln 4
        assert pmi("a", "b", ABAB) == pytest.approx(math.log(4), abs=1e-12)

    def test_independence_scores_zero(self):
        counts = CorpusCounts(
            event_freq={"a": 4, "b": 4, "c": 8},
            total_events=16,
            pair_stats=EventPairStats(
                "g", {("a", "b"): 1, ("c", "c"): 15}, total_pair_tokens=16
            ),
        )
        assert pmi("a", "b", counts) == pytest.approx(0.0, abs=1e-12)

    def test_symmetric(self):
        assert pmi("a", "b", ABAB) == pmi("b", "a", ABAB)

    def test_zero_joint_never_scored(self):
        counts = counts_for([["a", "b"], ["c", "d"]])
        with pytest.raises(ValueError, match="zero joint"):
            pmi("a", "c", counts)
        scored = {(p.first, p.second) for p in score_pairs(PMI, counts)}
        assert ("a", "c") not in scored
        assert all(math.isfinite(p.score) for p in score_pairs(PMI, counts))

    def test_unordered_pair_emitted_once(self):
        scored = score_pairs(PMI, ABAB)
        assert [(p.first, p.second) for p in scored] == [("a", "b")]
        assert scored[0].ordered is False


class TestCausalPotential:
    def test_symmetric_directions_reduce_to_pmi(self):
        counts = counts_for([["a", "b"], ["b", "a"]])
        assert causal_potential("a", "b", counts) == pytest.approx(
            pmi("a", "b", counts), abs=1e-12
        )

    def test_abab_value(self):
        # forward 2, backward 1 -> ln 4 + ln 2
        assert causal_potential("a", "b", ABAB) == pytest.approx(
            math.log(4) + math.log(2), abs=1e-12
        )

    def test_unseen_direction_smoothed_to_one(self):
        counts = counts_for([["a", "b"], ["a", "b"], ["a", "b"]])
        ordering = causal_potential("a", "b", counts) - pmi("a", "b", counts)
        assert ordering == pytest.approx(math.log(3), abs=1e-12)

    def test_identity_with_pmi(self):
        counts = counts_for([["a", "b", "a", "b", "c", "a"], ["b", "c", "b"]])
        for first, second in counts.pair_stats.counts:
            both = causal_potential(first, second, counts) + causal_potential(
                second, first, counts
            )
            assert both == pytest.approx(2 * pmi(first, second, counts), abs=1e-12)

    def test_self_pair_equals_pmi(self):
        counts = counts_for([["a", "a", "a", "b"]])
        assert causal_potential("a", "a", counts) == pytest.approx(
            pmi("a", "a", counts), abs=1e-12
        )


class TestBigram:
    def test_deterministic_successor(self):
        counts = counts_for([["a", "b"], ["a", "b"], ["c", "a", "b"]])
        assert bigram_probability("a", "b", counts, min_joint=1) == pytest.approx(1.0)

    def test_abab_probabilities(self):
        assert bigram_probability("a", "b", ABAB, min_joint=1) == pytest.approx(1.0)
        assert bigram_probability("b", "a", ABAB, min_joint=1) == pytest.approx(0.5)

    def test_threshold_boundary(self):
        sequences = [["w1", "w2"] for _ in range(19)]
        counts = counts_for(sequences)
        assert bigram_probability("w1", "w2", counts, min_joint=20) is None
        assert bigram_probability("w1", "w2", counts, min_joint=19) is not None

    def test_unseen_first_word(self):
        assert bigram_probability("zz", "a", ABAB, min_joint=1) is None

    def test_successors_sum_to_one(self):
        counts = counts_for([["a", "b", "a", "b"], ["b", "c"], ["a"]])
        for verb in ("a", "b", "c"):
            dist = successor_distribution(verb, counts, min_joint=1)
            assert sum(dist.values()) == pytest.approx(1.0, abs=1e-9)

    def test_document_final_mass_is_explicit(self):
        dist = successor_distribution("b", ABAB, min_joint=1)
        # the final b closes the document: half of b's mass
        assert dist[END_OF_DOC] == pytest.approx(0.5)
        assert dist["a"] == pytest.approx(0.5)

    def test_end_marker_never_ranked(self):
        counts = counts_for([["a", "b"], ["a", "b"]])
        scored = score_pairs(BIGRAM, counts, min_joint=1)
        assert all(END_OF_DOC not in (p.first, p.second) for p in scored)


class TestProtagonistCp:
    def protag_counts(self):
        counts = CorpusCounts(
            event_freq={"run": 10, "jump": 10, "walk": 20},
            total_events=40,
            pair_stats=EventPairStats("g", {}, 0),
        )
        stats = EventPairStats("g", {("run", "jump"): 6, ("jump", "run"): 2}, 8)
        return counts, stats

    def test_ordering_term(self):
        counts, stats = self.protag_counts()
        pmi_part = math.log((8 / 8) / ((10 / 40) * (10 / 40)))
        score = protagonist_cp("run", "jump", stats, counts)
        assert score - pmi_part == pytest.approx(math.log(3), abs=1e-12)

    def test_symmetric_counts_reduce_to_pmi_part(self):
        counts, _ = self.protag_counts()
        stats = EventPairStats("g", {("run", "jump"): 4, ("jump", "run"): 4}, 8)
        pmi_part = math.log((8 / 8) / ((10 / 40) * (10 / 40)))
        assert protagonist_cp("run", "jump", stats, counts) == pytest.approx(
            pmi_part, abs=1e-12
        )

    def test_absent_pair_not_scored(self):
        counts, stats = self.protag_counts()
        with pytest.raises(ValueError, match="zero protagonist joint"):
            protagonist_cp("run", "walk", stats, counts)
        scored = score_pairs(PROTAG_CP, counts, protag_stats=stats)
        assert {(p.first, p.second) for p in scored} == {("run", "jump"), ("jump", "run")}

    def test_protag_stats_required(self):
        counts, _ = self.protag_counts()
        with pytest.raises(ValueError, match="protagonist"):
            score_pairs(PROTAG_CP, counts)


class TestRankTopK:
    def pairs(self, *scores):
        return [
            ScoredPair(f"v{i}", f"w{i}", CP, score) for i, score in enumerate(scores)
        ]

    def test_takes_top_k_in_order(self):
        ranked = rank_top_k(self.pairs(2.12, 2.18, 2.11), k=2)
        assert [p.score for p in ranked] == [2.18, 2.12]

    def test_k_larger_than_input(self):
        ranked = rank_top_k(self.pairs(1.0, 3.0), k=100)
        assert [p.score for p in ranked] == [3.0, 1.0]

    def test_ties_break_lexicographically(self):
        pairs = [
            ScoredPair("b", "x", CP, 1.5),
            ScoredPair("a", "z", CP, 1.5),
            ScoredPair("a", "y", CP, 1.5),
        ]
        ranked = rank_top_k(pairs, k=3)
        assert [(p.first, p.second) for p in ranked] == [
            ("a", "y"),
            ("a", "z"),
            ("b", "x"),
        ]

    def test_k_zero(self):
        assert rank_top_k(self.pairs(1.0), k=0) == []

    def test_mixed_measures_rejected(self):
        pairs = [ScoredPair("a", "b", CP, 1.0), ScoredPair("a", "b", PMI, 1.0, False)]
        with pytest.raises(ValueError, match="mixed"):
            rank_top_k(pairs, k=2)


class TestScoredPairInvariants:
    def test_score_must_be_finite(self):
        with pytest.raises(ValueError, match="finite"):
            ScoredPair("a", "b", CP, float("inf"))
        with pytest.raises(ValueError, match="finite"):
            ScoredPair("a", "b", CP, float("nan"))

    def test_only_pmi_may_be_unordered(self):
        ScoredPair("a", "b", PMI, 1.0, ordered=False)
        with pytest.raises(ValueError, match="unordered"):
            ScoredPair("a", "b", CP, 1.0, ordered=False)


def production_scores(docs, measure, min_joint=1, min_pair_freq=1):
    annotated = [
        make_doc(
            f"d{i}",
            "g",
            [
                Ev(verb=verb, subject=entity, entity=entity)
                for verb, entity in doc
            ],
        )
        for i, doc in enumerate(docs)
    ]
    adj = build_genre_stats(annotated, "g", mode=ADJACENCY)
    counts = CorpusCounts.from_stats(adj)
    protag_stats = None
    if measure == PROTAG_CP:
        protag_stats = build_genre_stats(
            annotated, "g", mode=PROTAGONIST, min_pair_freq=min_pair_freq
        ).pairs
    scored = score_pairs(measure, counts, min_joint=min_joint, protag_stats=protag_stats)
    return {(p.first, p.second): p.score for p in scored}


class TestOracleEquivalence:
    @pytest.mark.parametrize("measure", [PMI, CP, BIGRAM, PROTAG_CP])
    def test_matches_brute_force(self, measure):
        rng = random.Random(1234)
        for _ in range(8):
            docs = oracle.random_corpus(rng)
            min_joint = rng.randint(1, 3)
            min_pair_freq = rng.randint(1, 2)
            expected = oracle.brute_score_all(
                docs, measure, min_joint=min_joint, min_pair_freq=min_pair_freq
            )
            actual = production_scores(
                docs, measure, min_joint=min_joint, min_pair_freq=min_pair_freq
            )
            assert set(actual) == set(expected)
            for pair, score in expected.items():
                assert actual[pair] == pytest.approx(score, abs=1e-12)


class TestScoredFile:
    def test_round_trip_with_display_arguments(self, tmp_path):
        docs = [
            make_doc(
                "d0",
                "g",
                [Ev("shoot", "Rex", "gun", subject_ner="PERSON"), Ev("fall", "Rex")],
            )
        ]
        stats = build_genre_stats(docs, "g")
        counts = CorpusCounts.from_stats(stats)
        ranked = rank_top_k(score_pairs(CP, counts), k=10)
        path = tmp_path / "scored.tsv"
        write_scored(
            path,
            ranked,
            stats.event_types,
            genre="g",
            stats_hash=stats.stats_hash,
            measure=CP,
            top_k=10,
        )
        meta, rows = read_scored(path)
        assert meta["measure"] == CP
        assert meta["upstream"] == stats.stats_hash
        assert [(r.pair.first, r.pair.second) for r in rows] == [
            (p.first, p.second) for p in ranked
        ]
        for row, pair in zip(rows, ranked):
            assert row.pair.score == pytest.approx(pair.score, abs=5e-7)
        assert rows[0].first_subject == "person"
        assert rows[0].first_object == "gun"
        assert rows[0].rank == 1

    def test_score_formatted_to_six_decimals(self, tmp_path):
        path = tmp_path / "scored.tsv"
        write_scored(
            path,
            [ScoredPair("a", "b", CP, math.log(8))],
            {},
            genre="g",
            stats_hash="x",
            measure=CP,
            top_k=1,
        )
        body = [
            line for line in path.read_text().splitlines() if not line.startswith("#")
        ]
        assert body[0].split("\t")[7] == "2.079442"

    def test_byte_identical_output(self, tmp_path):
        counts = ABAB
        ranked = rank_top_k(score_pairs(CP, counts), k=5)
        one, two = tmp_path / "one.tsv", tmp_path / "two.tsv"
        for path in (one, two):
            write_scored(
                path, ranked, {}, genre="g", stats_hash="x", measure=CP, top_k=5
            )
        assert one.read_bytes() == two.read_bytes()
