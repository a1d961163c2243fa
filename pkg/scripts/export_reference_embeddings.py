#!/usr/bin/env python3
"""One-time export of reference-model vectors for every bundled definition.

Writes data/mpnet-embeddings.json (a single embedding file covering the
individual, composite, baseline, and external fixtures), which unlocks the
reproduction tier of tests/test_acceptance.py.

Two ways to produce the vectors:
  * default: in-process sentence-transformers (downloads all-mpnet-base-v2
    on first use; needs network),
  * --endpoint URL: the remote embedding service wire contract instead.
"""

import argparse
import sys
from pathlib import Path

from defconsensus.corpus import Corpus, load_fixture
from defconsensus.embedding import (
    EmbeddingSet,
    EmbeddingVector,
    ProviderConfig,
    embed_corpus,
    save_embeddings,
)

MODEL_ID = "all-mpnet-base-v2"
FIXTURES = (
    "individual-60.jsonl",
    "composite-20.jsonl",
    "baseline.jsonl",
    "external-candidates.jsonl",
)


def combined_corpus() -> Corpus:
    definitions = []
    for name in FIXTURES:
        definitions.extend(load_fixture(name).definitions)
    return Corpus(name="all-fixtures", definitions=tuple(definitions))


def embed_in_process(corpus: Corpus) -> EmbeddingSet:
    from sentence_transformers import SentenceTransformer

    model = SentenceTransformer(f"sentence-transformers/{MODEL_ID}")
    texts = [d.text for d in corpus]
    raw = model.encode(texts, convert_to_numpy=True, show_progress_bar=True)
    vectors = {
        d.id: EmbeddingVector(values=tuple(float(x) for x in row), model_id=MODEL_ID)
        for d, row in zip(corpus, raw)
    }
    return EmbeddingSet(model_id=MODEL_ID, dim=raw.shape[1], vectors=vectors)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--endpoint", help="remote embedding service URL")
    parser.add_argument(
        "-o", "--output",
        default=str(Path(__file__).resolve().parent.parent / "data" / "mpnet-embeddings.json"),
    )
    args = parser.parse_args()

    corpus = combined_corpus()
    if args.endpoint:
        config = ProviderConfig(kind="remote", endpoint=args.endpoint, model_id=MODEL_ID)
        embedding_set = embed_corpus(corpus, config)
    else:
        embedding_set = embed_in_process(corpus)

    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_embeddings(embedding_set, out)
    print(f"wrote {len(embedding_set)} vectors (dim {embedding_set.dim}) to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
