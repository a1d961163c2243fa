"""Average-similarity consensus: scoring, ranking, pairwise tables, and
evaluation of newly proposed definitions against an accumulated corpus.

Self-exclusion is id-based with a configurable alias map (the baseline
definition appears in the reference corpus under a different id), never
by text equality.  Ties rank by candidate id ascending, so reports are
reproducible regardless of input order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .corpus import Corpus, Definition
from .embedding import EmbeddingSet, ProviderConfig, embed_corpus
from .errors import EmptyReferenceSet, EmptySet, UnknownCandidate, UnknownId
from .similarity import SimilarityMatrix, cosine, matrix

# base-0.1 is restated inside the 60-definition reference corpus as ind-58;
# excluding "self" must drop that column too.
DEFAULT_SELF_ALIASES = {"base-0.1": ("ind-58",), "ind-58": ("base-0.1",)}

DEFAULT_ADMISSION_THRESHOLD = 0.80


@dataclass(frozen=True)
class ReportRow:
    candidate_id: str
    average_score: float
    rank: int
    n_references_used: int
    excluded_self: bool


@dataclass(frozen=True)
class ConsensusReport:
    model_id: str
    reference_corpus: str
    rows: tuple[ReportRow, ...]

    def row(self, candidate_id: str) -> ReportRow:
        for r in self.rows:
            if r.candidate_id == candidate_id:
                return r
        raise UnknownCandidate(candidate_id)

    def top(self, k: int) -> tuple[ReportRow, ...]:
        return self.rows[:k]


@dataclass(frozen=True)
class EvaluationResult:
    candidate_id: str
    vs_corpus_average: float
    vs_anchors: dict[str, float]
    verdict_threshold: float
    admitted: bool
    n_references_used: int = 0


def _self_columns(candidate_id: str, aliases: dict) -> set[str]:
    cols = {candidate_id}
    cols.update(aliases.get(candidate_id, ()))
    return cols


def average_similarity(
    candidate_id: str,
    m: SimilarityMatrix,
    exclude_self: bool = True,
    aliases: dict | None = None,
) -> tuple[float, int]:
    """Arithmetic mean of a candidate's row, optionally dropping its own
    column (and alias columns).  Returns (average, n_references_used)."""
    if candidate_id not in m.candidate_ids:
        raise UnknownCandidate(candidate_id)
    aliases = DEFAULT_SELF_ALIASES if aliases is None else aliases
    row = m.row(candidate_id)
    skip = _self_columns(candidate_id, aliases) if exclude_self else set()
    used = [v for rid, v in zip(m.reference_ids, row) if rid not in skip]
    if not used:
        raise EmptyReferenceSet(
            f"self-exclusion leaves no reference columns for {candidate_id!r}"
        )
    return math.fsum(used) / len(used), len(used)


def rank(
    m: SimilarityMatrix,
    exclude_self: bool = True,
    aliases: dict | None = None,
    reference_corpus: str = "",
) -> ConsensusReport:
    """One row per candidate, sorted by average descending then id
    ascending; ranks are dense 1..N with no sharing."""
    if not m.candidate_ids:
        raise EmptySet("matrix has no candidates")
    entries = []
    for cid in m.candidate_ids:
        avg, n_used = average_similarity(cid, m, exclude_self, aliases)
        excluded = exclude_self and n_used < len(m.reference_ids)
        entries.append((cid, avg, n_used, excluded))
    entries.sort(key=lambda e: (-e[1], e[0]))
    rows = tuple(
        ReportRow(
            candidate_id=cid,
            average_score=avg,
            rank=i,
            n_references_used=n_used,
            excluded_self=excluded,
        )
        for i, (cid, avg, n_used, excluded) in enumerate(entries, start=1)
    )
    return ConsensusReport(
        model_id=m.model_id, reference_corpus=reference_corpus, rows=rows
    )


def pairwise_table(ids: list[str], s: EmbeddingSet) -> SimilarityMatrix:
    """Square symmetric similarity table over the given ids."""
    if len(ids) < 2:
        raise ValueError("pairwise table needs at least 2 ids")
    for i in ids:
        if i not in s:
            raise UnknownId(i)
    sub = EmbeddingSet(
        model_id=s.model_id,
        dim=s.dim,
        vectors={i: s.vectors[i] for i in ids},
    )
    return matrix(sub, sub)


def evaluate_new(
    candidate: Definition,
    corpus: Corpus,
    anchors: list[str] | None = None,
    config: ProviderConfig | None = None,
    threshold: float = DEFAULT_ADMISSION_THRESHOLD,
    anchor_set: EmbeddingSet | None = None,
    aliases: dict | None = None,
) -> EvaluationResult:
    """Score a newly proposed definition against the accumulated corpus.

    Embeds the candidate and the corpus, averages the candidate's cosine
    scores over the corpus (excluding the candidate's own id if present),
    scores each anchor individually, and admits when the corpus average
    meets the threshold.  ``anchor_set`` may supply precomputed vectors
    for anchors outside the corpus.
    """
    config = config or ProviderConfig(kind="local_deterministic")
    anchors = anchors or []

    candidate_corpus = Corpus(name="candidate", definitions=(candidate,))
    cand_set = embed_corpus(candidate_corpus, config)
    ref_set = embed_corpus(corpus, config)
    m = matrix(cand_set, ref_set)
    avg, n_used = average_similarity(
        candidate.id, m, exclude_self=True, aliases=aliases
    )

    vs_anchors: dict[str, float] = {}
    cand_vec = cand_set.get(candidate.id)
    for anchor_id in anchors:
        if anchor_id in ref_set:
            anchor_vec = ref_set.get(anchor_id)
        elif anchor_set is not None and anchor_id in anchor_set:
            anchor_vec = anchor_set.get(anchor_id)
        else:
            raise UnknownId(anchor_id)
        vs_anchors[anchor_id] = cosine(cand_vec, anchor_vec)

    return EvaluationResult(
        candidate_id=candidate.id,
        vs_corpus_average=avg,
        vs_anchors=vs_anchors,
        verdict_threshold=threshold,
        admitted=avg >= threshold,
        n_references_used=n_used,
    )


# ---------------------------------------------------------------------------
# report serialization


def report_to_json(report: ConsensusReport) -> str:
    return json.dumps(
        {
            "model_id": report.model_id,
            "reference_corpus": report.reference_corpus,
            "rows": [
                {
                    "candidate_id": r.candidate_id,
                    "average_score": r.average_score,
                    "rank": r.rank,
                    "n_references_used": r.n_references_used,
                    "excluded_self": r.excluded_self,
                }
                for r in report.rows
            ],
        },
        ensure_ascii=False,
        indent=2,
    )


def report_to_markdown(report: ConsensusReport) -> str:
    """Ranking table, scores displayed to 3 decimals (full precision in JSON)."""
    lines = [
        f"# Consensus ranking ({report.model_id})",
        "",
        "| rank | candidate | average similarity | references used |",
        "|-----:|-----------|-------------------:|----------------:|",
    ]
    for r in report.rows:
        lines.append(
            f"| {r.rank} | {r.candidate_id} | {r.average_score:.3f} "
            f"| {r.n_references_used} |"
        )
    return "\n".join(lines) + "\n"


def pairwise_to_markdown(m: SimilarityMatrix) -> str:
    lines = [
        "| definition | " + " | ".join(m.reference_ids) + " |",
        "|---" * (len(m.reference_ids) + 1) + "|",
    ]
    for cid, row in zip(m.candidate_ids, m.scores):
        lines.append(
            f"| {cid} | " + " | ".join(f"{v:.3f}" for v in row) + " |"
        )
    return "\n".join(lines) + "\n"


def evaluation_to_json(result: EvaluationResult) -> str:
    return json.dumps(
        {
            "candidate_id": result.candidate_id,
            "vs_corpus_average": result.vs_corpus_average,
            "vs_anchors": result.vs_anchors,
            "verdict_threshold": result.verdict_threshold,
            "admitted": result.admitted,
            "n_references_used": result.n_references_used,
        },
        ensure_ascii=False,
        indent=2,
    )
