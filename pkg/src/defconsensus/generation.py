"""Composite-definition generation.

A remote chat-completion service produces abstractive summaries of the
corpus (POST {endpoint}/chat); a deterministic seeded mock substitutes
for it offline.  Generation is a single sequential conversation: the
initial prompt yields one definition, the continuation prompt yields the
rest.  Word-limit breaches are recorded as warnings, not rejected —
generated text limits are soft.
"""

from __future__ import annotations

import datetime
import hashlib
import logging
import os
import random
import re
import time
from dataclasses import dataclass, field

import requests

from .corpus import Corpus, Definition, normalize_text
from .errors import MalformedResponse, ProviderUnavailable

log = logging.getLogger(__name__)

DEFAULT_INITIAL_PROMPT = (
    "Produce one complete definition of a smart city using various definitions "
    "mentioned below. Only include technology-related characteristics mentioned "
    "in these definitions. Write in one paragraph, shorten as much as possible. "
    "Limit to 35 words."
)
DEFAULT_CONTINUATION_PROMPT = (
    "Produce another 19 different definitions, limit each to 35 words."
)


@dataclass(frozen=True)
class GenerationConfig:
    endpoint: str = ""  # empty -> deterministic mock
    model_id: str = "gpt-4"
    temperature: float = 0.7
    n_definitions: int = 20
    max_words_per_definition: int = 35
    seed: int | None = None  # mock only
    max_retries: int = 3
    timeout: float = 120.0

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be within [0, 2]")
        if self.n_definitions < 1:
            raise ValueError("n_definitions must be >= 1")
        if self.max_words_per_definition < 1:
            raise ValueError("max_words_per_definition must be >= 1")

    @property
    def use_mock(self) -> bool:
        return not self.endpoint


def default_prompts(corpus: Corpus, n_definitions: int = 20) -> "PromptBundle":
    continuation = re.sub(
        r"\b19\b", str(n_definitions - 1), DEFAULT_CONTINUATION_PROMPT
    )
    return PromptBundle(
        initial_prompt=DEFAULT_INITIAL_PROMPT,
        continuation_prompt=continuation,
        context="\n".join(
            f"{i}. {d.text}" for i, d in enumerate(corpus, start=1)
        ),
    )


@dataclass(frozen=True)
class PromptBundle:
    initial_prompt: str = DEFAULT_INITIAL_PROMPT
    continuation_prompt: str = DEFAULT_CONTINUATION_PROMPT
    context: str = ""


@dataclass(frozen=True)
class ProvenanceRecord:
    definition_id: str
    prompt: str
    model_id: str
    temperature: float
    timestamp: str
    over_word_limit: bool


@dataclass(frozen=True)
class GenerationResult:
    corpus: Corpus
    provenance: tuple[ProvenanceRecord, ...]


# ---------------------------------------------------------------------------
# deterministic mock

_MOCK_TEMPLATES = (
    "A smart city uses {0} and {1} to improve {2}, {3} and {4} for its {5}.",
    "In a smart city, {0} and {1} support {2} and {3}, enhancing {4} and {5}.",
    "A smart city integrates {0}, {1} and {2} to deliver {3} and sustainable {4}.",
    "Smart cities employ {0} and {1} to optimize {2}, {3} and the {4} of {5}.",
    "It is an urban area where {0} and {1} enable {2}, {3} and better {4}.",
)


def corpus_content_hash(corpus: Corpus) -> str:
    h = hashlib.sha256()
    for d in corpus:
        h.update(d.id.encode("utf-8"))
        h.update(b"\x00")
        h.update(d.text.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


def mock_generate(corpus: Corpus, seed: int, n: int) -> list[str]:
    """Deterministic stand-in for the summarization service: samples corpus
    vocabulary with a seeded PRNG into short template sentences.  Output
    depends only on (corpus content hash, seed, n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    vocabulary = sorted(
        {
            token
            for d in corpus
            for token in re.findall(r"[a-z]{4,}", d.text.lower())
        }
    )
    if not vocabulary:
        raise ValueError("corpus vocabulary is empty")
    rng = random.Random(f"{corpus_content_hash(corpus)}:{seed}")
    texts = []
    for i in range(n):
        template = _MOCK_TEMPLATES[i % len(_MOCK_TEMPLATES)]
        slots = template.count("{")
        words = [rng.choice(vocabulary) for _ in range(slots)]
        texts.append(template.format(*words))
    return texts


# ---------------------------------------------------------------------------
# remote chat client

def _post_chat(config: GenerationConfig, messages: list[dict]) -> str:
    url = config.endpoint.rstrip("/") + "/chat"
    headers = {}
    token = os.environ.get("GEN_API_TOKEN")
    if token:
        headers["Authorization"] = f"Bearer {token}"
    payload = {
        "model_id": config.model_id,
        "temperature": config.temperature,
        "messages": messages,
    }
    last_error: Exception | None = None
    for attempt in range(config.max_retries + 1):
        if attempt:
            time.sleep(min(2 ** (attempt - 1) * 0.1, 5.0))
        try:
            resp = requests.post(
                url, json=payload, headers=headers, timeout=config.timeout
            )
        except requests.RequestException as e:
            last_error = e
            continue
        if resp.status_code // 100 != 2:
            last_error = ProviderUnavailable(f"{url} returned HTTP {resp.status_code}")
            continue
        try:
            return str(resp.json()["content"])
        except (ValueError, KeyError, TypeError) as e:
            raise ProviderUnavailable(f"malformed response from {url}: {e}") from e
    raise ProviderUnavailable(
        f"generation service unreachable after {config.max_retries + 1} attempts: "
        f"{last_error}"
    )


_LIST_PREFIX = re.compile(r"^\s*(?:\d+[.)]\s*|[-*•]\s*)")


def split_definitions(response: str, expected: int) -> list[str]:
    """Split a service response into individual definitions: one per
    paragraph or numbered line, list numbering stripped."""
    chunks = [
        normalize_text(_LIST_PREFIX.sub("", line))
        for line in response.splitlines()
    ]
    chunks = [c for c in chunks if c]
    if len(chunks) != expected:
        raise MalformedResponse(
            f"expected {expected} definitions, response split into {len(chunks)}"
        )
    return chunks


def generate_composites(
    corpus: Corpus,
    config: GenerationConfig,
    prompts: PromptBundle | None = None,
) -> GenerationResult:
    """Generate n new composite definitions with ids gen-1..gen-N and a
    provenance record per definition."""
    if len(corpus) == 0:
        raise ValueError("source corpus is empty")
    n = config.n_definitions
    if prompts is None:
        prompts = default_prompts(corpus, n)

    if config.use_mock:
        texts = mock_generate(corpus, config.seed or 0, n)
        prompts_used = [prompts.initial_prompt] + [prompts.continuation_prompt] * (n - 1)
    else:
        first_message = prompts.initial_prompt + "\n\n" + prompts.context
        messages = [{"role": "user", "content": first_message}]
        first = _post_chat(config, messages)
        texts = split_definitions(first, 1)
        prompts_used = [prompts.initial_prompt]
        if n > 1:
            messages.append({"role": "assistant", "content": first})
            messages.append({"role": "user", "content": prompts.continuation_prompt})
            rest = _post_chat(config, messages)
            texts.extend(split_definitions(rest, n - 1))
            prompts_used.extend([prompts.continuation_prompt] * (n - 1))

    timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat(
        timespec="seconds"
    )
    definitions = []
    provenance = []
    existing = set(corpus.ids)
    for i, (text, prompt) in enumerate(zip(texts, prompts_used), start=1):
        gen_id = f"gen-{i}"
        while gen_id in existing:
            gen_id = f"gen-{i}b"
        definition = Definition(
            id=gen_id,
            text=text,
            kind="composite",
            source=f"generated by {config.model_id}",
        )
        over = definition.word_count > config.max_words_per_definition
        if over:
            log.warning(
                "generated definition %s has %d words (limit %d)",
                gen_id,
                definition.word_count,
                config.max_words_per_definition,
            )
        definitions.append(definition)
        provenance.append(
            ProvenanceRecord(
                definition_id=gen_id,
                prompt=prompt,
                model_id=config.model_id if not config.use_mock else "mock",
                temperature=config.temperature,
                timestamp=timestamp,
                over_word_limit=over,
            )
        )
    return GenerationResult(
        corpus=Corpus(name="generated-composites", definitions=tuple(definitions)),
        provenance=tuple(provenance),
    )
