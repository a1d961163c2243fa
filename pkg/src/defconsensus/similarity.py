"""Cosine similarity and candidate-vs-reference similarity matrices.

Scores are accumulated in double precision in ascending index order, so
cosine(a, b) == cosine(b, a) bit-for-bit and parallel row computation
cannot change results.  Values are clamped to [-1, 1]; near-duplicate
texts legitimately produce 1 + epsilon from rounding.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .embedding import EmbeddingSet, EmbeddingVector
from .errors import DimensionMismatch, EmptySet, ModelMismatch, UnknownId

SYMMETRY_TOL = 1e-9


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Dot product over the product of Euclidean norms, clamped to [-1, 1]."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"cosine of dims {a.dim} and {b.dim}")
    dot = math.fsum(x * y for x, y in zip(a.values, b.values))
    return max(-1.0, min(1.0, dot / (a.norm * b.norm)))


@dataclass(frozen=True)
class SimilarityMatrix:
    """Dense row-major matrix: rows = candidates, columns = references."""

    candidate_ids: tuple[str, ...]
    reference_ids: tuple[str, ...]
    scores: tuple[tuple[float, ...], ...]
    model_id: str

    def __post_init__(self):
        object.__setattr__(self, "candidate_ids", tuple(self.candidate_ids))
        object.__setattr__(self, "reference_ids", tuple(self.reference_ids))
        object.__setattr__(
            self, "scores", tuple(tuple(row) for row in self.scores)
        )
        if len(self.scores) != len(self.candidate_ids):
            raise ValueError("row count must equal candidate count")
        for row in self.scores:
            if len(row) != len(self.reference_ids):
                raise ValueError("column count must equal reference count")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.candidate_ids), len(self.reference_ids)

    def row(self, candidate_id: str) -> tuple[float, ...]:
        try:
            return self.scores[self.candidate_ids.index(candidate_id)]
        except ValueError:
            raise UnknownId(candidate_id) from None

    def score(self, candidate_id: str, reference_id: str) -> float:
        row = self.row(candidate_id)
        try:
            return row[self.reference_ids.index(reference_id)]
        except ValueError:
            raise UnknownId(reference_id) from None

    def min_entry(self) -> tuple[str, str, float]:
        return self._extreme(min)

    def max_entry(self) -> tuple[str, str, float]:
        return self._extreme(max)

    def _extreme(self, pick) -> tuple[str, str, float]:
        best = None
        for cid, row in zip(self.candidate_ids, self.scores):
            for rid, value in zip(self.reference_ids, row):
                if best is None or pick(best[2], value) == value:
                    best = (cid, rid, value)
        if best is None:
            raise EmptySet("matrix has no entries")
        return best


def matrix(
    candidates: EmbeddingSet, references: EmbeddingSet, parallel: bool = False
) -> SimilarityMatrix:
    """Full candidate-vs-reference cosine matrix, row order = insertion order.

    With ``parallel=True`` rows are computed across a thread pool; output
    is assembled by row index, so results are bit-identical to a serial run.
    """
    if not candidates.vectors or not references.vectors:
        raise EmptySet("both embedding sets must be non-empty")
    if candidates.dim != references.dim:
        raise DimensionMismatch(
            f"candidate dim {candidates.dim} != reference dim {references.dim}"
        )
    if candidates.model_id != references.model_id:
        raise ModelMismatch(
            f"{candidates.model_id!r} vs {references.model_id!r}"
        )
    candidate_ids = tuple(candidates.vectors)
    reference_ids = tuple(references.vectors)
    ref_vecs = [references.vectors[r] for r in reference_ids]

    def compute_row(cid: str) -> tuple[float, ...]:
        cv = candidates.vectors[cid]
        return tuple(cosine(cv, rv) for rv in ref_vecs)

    if parallel:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor() as pool:
            scores = tuple(pool.map(compute_row, candidate_ids))
    else:
        scores = tuple(compute_row(c) for c in candidate_ids)
    return SimilarityMatrix(
        candidate_ids=candidate_ids,
        reference_ids=reference_ids,
        scores=scores,
        model_id=candidates.model_id,
    )


def to_csv(m: SimilarityMatrix) -> str:
    """Header row of reference ids, first column of candidate ids, scores
    to 6 decimal places."""
    lines = ["candidate_id," + ",".join(m.reference_ids)]
    for cid, row in zip(m.candidate_ids, m.scores):
        lines.append(cid + "," + ",".join(f"{v:.6f}" for v in row))
    return "\n".join(lines) + "\n"


def to_json(m: SimilarityMatrix) -> str:
    return json.dumps(
        {
            "model_id": m.model_id,
            "candidate_ids": list(m.candidate_ids),
            "reference_ids": list(m.reference_ids),
            "scores": [list(row) for row in m.scores],
        },
        ensure_ascii=False,
    )


def from_json(text: str) -> SimilarityMatrix:
    obj = json.loads(text)
    return SimilarityMatrix(
        candidate_ids=tuple(obj["candidate_ids"]),
        reference_ids=tuple(obj["reference_ids"]),
        scores=tuple(tuple(row) for row in obj["scores"]),
        model_id=obj["model_id"],
    )
