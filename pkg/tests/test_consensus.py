import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from defconsensus.consensus import (
    average_similarity,
    evaluate_new,
    evaluation_to_json,
    pairwise_table,
    pairwise_to_markdown,
    rank,
    report_to_json,
    report_to_markdown,
)
from defconsensus.corpus import Corpus, Definition
from defconsensus.embedding import EmbeddingSet, EmbeddingVector, ProviderConfig, embed_corpus
from defconsensus.errors import EmptyReferenceSet, UnknownCandidate, UnknownId
from defconsensus.similarity import SimilarityMatrix


def square_matrix(ids, rng):
    scores = tuple(
        tuple(rng.uniform(-1, 1) if i != j else 1.0 for j in range(len(ids)))
        for i in range(len(ids))
    )
    return SimilarityMatrix(
        candidate_ids=tuple(ids), reference_ids=tuple(ids),
        scores=scores, model_id="m",
    )


def rect_matrix(cand_ids, ref_ids, rng):
    scores = tuple(
        tuple(rng.uniform(-1, 1) for _ in ref_ids) for _ in cand_ids
    )
    return SimilarityMatrix(
        candidate_ids=tuple(cand_ids), reference_ids=tuple(ref_ids),
        scores=scores, model_id="m",
    )


class TestAverageSimilarity:
    def test_exclude_self_drops_own_column(self):
        m = square_matrix(["a", "b", "c"], random.Random(0))
        avg, n = average_similarity("a", m, exclude_self=True)
        row = m.row("a")
        assert n == 2
        assert avg == pytest.approx(math.fsum(row[1:]) / 2, abs=1e-15)

    def test_include_self_uses_all_columns(self):
        m = square_matrix(["a", "b", "c"], random.Random(0))
        avg, n = average_similarity("a", m, exclude_self=False)
        assert n == 3
        assert avg == pytest.approx(math.fsum(m.row("a")) / 3, abs=1e-15)

    def test_alias_column_also_dropped(self):
        m = rect_matrix(["base"], ["base", "alias", "other"], random.Random(1))
        avg, n = average_similarity(
            "base", m, exclude_self=True, aliases={"base": ("alias",)}
        )
        assert n == 1
        assert avg == m.score("base", "other")

    def test_unknown_candidate(self):
        m = square_matrix(["a", "b"], random.Random(0))
        with pytest.raises(UnknownCandidate):
            average_similarity("zz", m)

    def test_only_self_reference_raises(self):
        m = SimilarityMatrix(
            candidate_ids=("a",), reference_ids=("a",),
            scores=((1.0,),), model_id="m",
        )
        with pytest.raises(EmptyReferenceSet):
            average_similarity("a", m, exclude_self=True)

    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=100)
    def test_with_without_self_algebra(self, seed):
        rng = random.Random(seed)
        n_ids = rng.randint(2, 12)
        ids = [f"d-{i}" for i in range(n_ids)]
        m = square_matrix(ids, rng)
        cid = rng.choice(ids)
        with_self, n_with = average_similarity(cid, m, exclude_self=False, aliases={})
        without, n_without = average_similarity(cid, m, exclude_self=True, aliases={})
        self_score = m.score(cid, cid)
        assert n_with == n_without + 1
        assert with_self == pytest.approx(
            (without * n_without + self_score) / n_with, abs=1e-12
        )

    def test_self_inclusion_pulls_average_up(self):
        # self-score 1 with a sub-1 average must raise the mean
        m = square_matrix([f"d-{i}" for i in range(6)], random.Random(3))
        for cid in m.candidate_ids:
            without, _ = average_similarity(cid, m, exclude_self=True, aliases={})
            with_self, _ = average_similarity(cid, m, exclude_self=False, aliases={})
            if without < 1.0:
                assert with_self > without


def brute_force_rank(m, exclude_self, aliases):
    rows = []
    for cid in m.candidate_ids:
        skip = {cid} | set(aliases.get(cid, ())) if exclude_self else set()
        used = [
            v for rid, v in zip(m.reference_ids, m.row(cid)) if rid not in skip
        ]
        rows.append((cid, math.fsum(used) / len(used), len(used)))
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows


class TestRank:
    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=100, deadline=None)
    def test_matches_brute_force_oracle(self, seed):
        rng = random.Random(seed)
        n_cand = rng.randint(1, 15)
        n_ref = rng.randint(1, 30)
        cand_ids = [f"c-{i}" for i in range(n_cand)]
        ref_ids = [f"r-{i}" for i in range(n_ref)]
        m = rect_matrix(cand_ids, ref_ids, rng)
        report = rank(m, exclude_self=True)
        expected = brute_force_rank(m, True, {})
        assert [r.candidate_id for r in report.rows] == [e[0] for e in expected]
        assert [r.average_score for r in report.rows] == [e[1] for e in expected]
        assert [r.rank for r in report.rows] == list(range(1, n_cand + 1))

    def test_tie_break_id_ascending(self):
        # identical rows -> identical averages; order must follow ids
        scores = ((0.5, 0.4), (0.5, 0.4), (0.1, 0.2))
        m = SimilarityMatrix(
            candidate_ids=("zz", "aa", "mm"), reference_ids=("r1", "r2"),
            scores=scores, model_id="m",
        )
        report = rank(m, exclude_self=False)
        assert [r.candidate_id for r in report.rows] == ["aa", "zz", "mm"]
        assert [r.rank for r in report.rows] == [1, 2, 3]

    def test_permutation_invariance(self):
        rng = random.Random(5)
        ids = [f"c-{i}" for i in range(8)]
        refs = [f"r-{i}" for i in range(10)]
        m = rect_matrix(ids, refs, rng)
        report = rank(m, exclude_self=False)

        perm = ids[::-1]
        permuted = SimilarityMatrix(
            candidate_ids=tuple(perm), reference_ids=m.reference_ids,
            scores=tuple(m.row(c) for c in perm), model_id="m",
        )
        assert rank(permuted, exclude_self=False).rows == report.rows

    def test_single_candidate(self):
        m = rect_matrix(["only"], ["r1", "r2"], random.Random(0))
        report = rank(m, exclude_self=True)
        assert len(report.rows) == 1
        assert report.rows[0].rank == 1

    @given(st.integers(min_value=0, max_value=1000))
    @settings(max_examples=50)
    def test_average_bounded_by_row_extremes(self, seed):
        rng = random.Random(seed)
        m = rect_matrix(
            [f"c-{i}" for i in range(5)], [f"r-{i}" for i in range(9)], rng
        )
        for r in rank(m, exclude_self=False).rows:
            row = m.row(r.candidate_id)
            assert min(row) - 1e-12 <= r.average_score <= max(row) + 1e-12


class TestPairwiseTable:
    def test_square_symmetric_unit_diagonal(self, composite_20, local_config):
        s = embed_corpus(composite_20, local_config)
        m = pairwise_table(["comp-1", "comp-2", "comp-3"], s)
        assert m.shape == (3, 3)
        for i in range(3):
            assert m.scores[i][i] == pytest.approx(1.0, abs=1e-9)
            for j in range(3):
                assert m.scores[i][j] == m.scores[j][i]

    def test_unknown_id(self, composite_20, local_config):
        s = embed_corpus(composite_20, local_config)
        with pytest.raises(UnknownId):
            pairwise_table(["comp-1", "nope"], s)

    def test_needs_two_ids(self, composite_20, local_config):
        s = embed_corpus(composite_20, local_config)
        with pytest.raises(ValueError):
            pairwise_table(["comp-1"], s)


class TestEvaluateNew:
    def candidate(self, text="A city using sensors and data to improve services."):
        return Definition(id="new-1", text=text, kind="external")

    def test_threshold_minus_one_always_admits(self, individual_60, local_config):
        result = evaluate_new(
            self.candidate(), individual_60, config=local_config, threshold=-1.0
        )
        assert result.admitted

    def test_threshold_above_one_never_admits(self, individual_60, local_config):
        result = evaluate_new(
            self.candidate(), individual_60, config=local_config, threshold=1.5
        )
        assert not result.admitted

    def test_identical_text_scores_one_against_its_twin(self, local_config):
        twin_text = "A city using sensors and data to improve services."
        corpus = Corpus(
            name="t",
            definitions=(
                Definition(id="old-1", text=twin_text, kind="individual"),
                Definition(id="old-2", text="Something about parks and trees only.", kind="individual"),
            ),
        )
        result = evaluate_new(
            self.candidate(twin_text), corpus,
            anchors=["old-1"], config=local_config, threshold=-1.0,
        )
        assert result.vs_anchors["old-1"] == pytest.approx(1.0, abs=1e-9)

    def test_self_excluded_by_id_when_present(self, local_config):
        corpus = Corpus(
            name="t",
            definitions=(
                Definition(id="new-1", text="identical text here.", kind="individual"),
                Definition(id="other", text="different words entirely now.", kind="individual"),
            ),
        )
        result = evaluate_new(
            Definition(id="new-1", text="identical text here.", kind="external"),
            corpus, config=local_config, threshold=-1.0,
        )
        assert result.n_references_used == 1

    def test_unknown_anchor(self, individual_60, local_config):
        with pytest.raises(UnknownId):
            evaluate_new(
                self.candidate(), individual_60,
                anchors=["nope"], config=local_config,
            )

    def test_admitted_iff_average_meets_threshold(self, individual_60, local_config):
        result = evaluate_new(
            self.candidate(), individual_60, config=local_config, threshold=0.0
        )
        assert result.admitted == (result.vs_corpus_average >= 0.0)


class TestReportFormats:
    def make_report(self):
        m = rect_matrix(["c-1", "c-2"], ["r-1", "r-2", "r-3"], random.Random(9))
        return rank(m, exclude_self=False, reference_corpus="refs")

    def test_json_has_full_precision(self):
        import json

        report = self.make_report()
        payload = json.loads(report_to_json(report))
        assert payload["rows"][0]["average_score"] == report.rows[0].average_score
        assert payload["reference_corpus"] == "refs"

    def test_markdown_three_decimals(self):
        report = self.make_report()
        md = report_to_markdown(report)
        assert f"{report.rows[0].average_score:.3f}" in md
        assert md.count("|") >= 4 * (len(report.rows) + 2)

    def test_pairwise_markdown(self, composite_20, local_config):
        s = embed_corpus(composite_20, local_config)
        m = pairwise_table(["comp-1", "comp-2"], s)
        md = pairwise_to_markdown(m)
        assert "comp-1" in md and "comp-2" in md
        assert "1.000" in md

    def test_evaluation_json(self, individual_60, local_config):
        result = evaluate_new(
            Definition(id="x", text="sensors and data for cities.", kind="external"),
            individual_60, config=local_config, threshold=0.5,
        )
        import json

        payload = json.loads(evaluation_to_json(result))
        assert payload["candidate_id"] == "x"
        assert payload["admitted"] == result.admitted
