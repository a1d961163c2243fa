import math

import pytest
from hypothesis import given, settings, strategies as st

from defconsensus.embedding import EmbeddingSet, EmbeddingVector
from defconsensus.errors import DimensionMismatch, EmptySet, ModelMismatch
from defconsensus.similarity import (
    SimilarityMatrix,
    cosine,
    from_json,
    matrix,
    to_csv,
    to_json,
)


def vec(*values, model_id="m"):
    return EmbeddingVector(values=tuple(float(v) for v in values), model_id=model_id)


def finite_vectors(dim):
    component = st.floats(
        min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False
    )
    return st.lists(component, min_size=dim, max_size=dim).filter(
        lambda vs: math.sqrt(math.fsum(v * v for v in vs)) > 1e-6
    )


vector_pairs = st.integers(min_value=2, max_value=768).flatmap(
    lambda d: st.tuples(finite_vectors(d), finite_vectors(d))
)


class TestCosine:
    def test_identical_unit_vectors(self):
        assert cosine(vec(1, 0, 0), vec(1, 0, 0)) == 1.0

    def test_orthogonal(self):
        assert cosine(vec(1, 0), vec(0, 1)) == 0.0

    def test_antiparallel(self):
        assert cosine(vec(1, 2), vec(-1, -2)) == pytest.approx(-1.0, abs=1e-12)

    def test_hand_computed_45_degrees(self):
        # dot = 1, norms 1 and sqrt(2)
        assert cosine(vec(1, 0), vec(1, 1)) == pytest.approx(
            0.7071067811865475, abs=1e-15
        )

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cosine(vec(1, 0), vec(1, 0, 0))

    @given(vector_pairs)
    @settings(max_examples=300, deadline=None)
    def test_symmetry_exact(self, pair):
        a, b = vec(*pair[0]), vec(*pair[1])
        assert cosine(a, b) == cosine(b, a)

    @given(vector_pairs)
    @settings(max_examples=300, deadline=None)
    def test_range_clamped(self, pair):
        value = cosine(vec(*pair[0]), vec(*pair[1]))
        assert -1.0 <= value <= 1.0

    @given(vector_pairs, st.floats(min_value=1e-3, max_value=1e3))
    @settings(max_examples=300, deadline=None)
    def test_positive_scale_invariance(self, pair, scale):
        a, b = vec(*pair[0]), vec(*pair[1])
        scaled = vec(*(scale * x for x in pair[0]))
        assert cosine(scaled, b) == pytest.approx(cosine(a, b), abs=1e-9)

    @given(vector_pairs)
    @settings(max_examples=300, deadline=None)
    def test_self_similarity_is_one(self, pair):
        a = vec(*pair[0])
        assert cosine(a, a) == pytest.approx(1.0, abs=1e-9)


def random_set(rng, n, dim, prefix, model_id="m"):
    vectors = {}
    for i in range(n):
        values = [rng.uniform(-1, 1) for _ in range(dim)]
        while math.sqrt(math.fsum(v * v for v in values)) < 1e-6:
            values = [rng.uniform(-1, 1) for _ in range(dim)]
        vectors[f"{prefix}-{i}"] = EmbeddingVector(
            values=tuple(values), model_id=model_id
        )
    return EmbeddingSet(model_id=model_id, dim=dim, vectors=vectors)


class TestMatrix:
    def test_self_comparison_symmetric_unit_diagonal(self, local_config):
        import random

        s = random_set(random.Random(0), 8, 16, "a")
        m = matrix(s, s)
        n = len(s)
        for i in range(n):
            assert m.scores[i][i] == pytest.approx(1.0, abs=1e-9)
            for j in range(n):
                assert m.scores[i][j] == pytest.approx(m.scores[j][i], abs=1e-9)

    def test_equals_naive_double_loop(self):
        import random

        rng = random.Random(42)
        cands = random_set(rng, 3, 5, "c")
        refs = random_set(rng, 5, 5, "r")
        m = matrix(cands, refs)
        for i, cid in enumerate(m.candidate_ids):
            for j, rid in enumerate(m.reference_ids):
                a = cands.vectors[cid]
                b = refs.vectors[rid]
                dot = math.fsum(x * y for x, y in zip(a.values, b.values))
                naive = max(-1.0, min(1.0, dot / (a.norm * b.norm)))
                assert m.scores[i][j] == naive

    def test_parallel_bit_identical_to_serial(self):
        import random

        rng = random.Random(7)
        cands = random_set(rng, 20, 32, "c")
        refs = random_set(rng, 30, 32, "r")
        assert matrix(cands, refs, parallel=True) == matrix(cands, refs)

    def test_model_mismatch(self):
        import random

        rng = random.Random(1)
        a = random_set(rng, 2, 4, "a", model_id="m1")
        b = random_set(rng, 2, 4, "b", model_id="m2")
        with pytest.raises(ModelMismatch):
            matrix(a, b)

    def test_dim_mismatch(self):
        import random

        rng = random.Random(1)
        a = random_set(rng, 2, 4, "a")
        b = random_set(rng, 2, 5, "b")
        with pytest.raises(DimensionMismatch):
            matrix(a, b)

    def test_empty_set(self):
        import random

        s = random_set(random.Random(1), 2, 4, "a")
        empty = EmbeddingSet(model_id="m", dim=4, vectors={})
        with pytest.raises(EmptySet):
            matrix(s, empty)

    def test_min_max_entry(self):
        m = SimilarityMatrix(
            candidate_ids=("a", "b"),
            reference_ids=("x", "y"),
            scores=((0.2, 0.9), (0.5, -0.3)),
            model_id="m",
        )
        assert m.min_entry() == ("b", "y", -0.3)
        assert m.max_entry() == ("a", "y", 0.9)


class TestExports:
    def make(self):
        return SimilarityMatrix(
            candidate_ids=("a", "b"),
            reference_ids=("x", "y", "z"),
            scores=((0.123456789, 1.0, -0.5), (0.0, 0.25, 0.987654321)),
            model_id="m",
        )

    def test_csv_layout_and_precision(self):
        lines = to_csv(self.make()).splitlines()
        assert lines[0] == "candidate_id,x,y,z"
        assert lines[1] == "a,0.123457,1.000000,-0.500000"
        assert lines[2] == "b,0.000000,0.250000,0.987654"

    def test_json_round_trip_full_precision(self):
        m = self.make()
        assert from_json(to_json(m)) == m
