"""Contextual-understanding MCQs with semantically-near distractors.

For a case annotated with the asked-about CI parameter (sender, recipient,
subject, or attribute), the generator picks the three candidate-pool entries
whose embeddings are closest (cosine) to the correct answer, breaking ties
lexicographically, and shuffles the four options under a seed. Only the
option ORDER depends on the seed; the option SET never does.

Embedding providers are pluggable; the in-repo fallback is a deterministic
character-trigram hashed bag-of-features vector (dimension 256, L2
normalized), so tests and desk runs need no external model.
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .cases import LegalCase
from .errors import AnnotationMissingError, PoolTooSmallError

__all__ = [
    "McqCategory",
    "McqItem",
    "EmbeddingProvider",
    "TrigramHashEmbedding",
    "cosine_similarity",
    "rank_distractors",
    "generate",
    "grade",
    "GradeReport",
    "render_mcq_prompt",
    "MCQ_PROMPT_TEMPLATE",
]


class McqCategory(str, Enum):
    SENDER = "SENDER"
    RECIPIENT = "RECIPIENT"
    SUBJECT = "SUBJECT"
    ATTRIBUTE = "ATTRIBUTE"

    @property
    def annotation_field(self) -> str:
        return {"SENDER": "sender", "RECIPIENT": "recipient",
                "SUBJECT": "subject", "ATTRIBUTE": "attributes"}[self.value]

    @property
    def question_word(self) -> str:
        return self.value.lower()


MCQ_PROMPT_TEMPLATE = (
    "Given the following question and four candidate answers (A, B, C and D), "
    "choose the best answer.\n"
    "\n"
    "Question: {question}\n"
    "\n"
    "A. {option_a}\n"
    "B. {option_b}\n"
    "C. {option_c}\n"
    "D. {option_d}\n"
    "\n"
    "Output Format:\n"
    "Choice: [ A | B | C | D ]"
)

_LETTERS = ("A", "B", "C", "D")


@dataclass(frozen=True)
class McqItem:
    id: str
    case_id: str
    category: McqCategory
    question: str  # question sentence plus the case narrative
    options: tuple[str, str, str, str]
    answer_index: int

    def __post_init__(self) -> None:
        if len(set(self.options)) != 4:
            raise ValueError("options must be pairwise distinct")
        if not 0 <= self.answer_index <= 3:
            raise ValueError("answer_index must be in 0..3")

    @property
    def answer_letter(self) -> str:
        return _LETTERS[self.answer_index]

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "case_id": self.case_id,
            "category": self.category.value,
            "question": self.question,
            "options": list(self.options),
            "answer_index": self.answer_index,
        }


class EmbeddingProvider(Protocol):
    """Deterministic text embedder: same text, same vector; fixed dimension."""

    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


_WS_RE = re.compile(r"\s+")


def _fold(text: str) -> str:
    return _WS_RE.sub(" ", text).strip()


class TrigramHashEmbedding:
    """Character-trigram hashed bag vector, L2 normalized.

    Trigrams are taken over the case-folded, whitespace-folded text and
    hashed with blake2s (stable across processes and platforms). Texts
    shorter than three characters hash as a single token; the empty text
    embeds to the zero vector.
    """

    def __init__(self, dimension: int = 256):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.dimension = dimension

    def _bucket(self, token: str) -> int:
        digest = hashlib.blake2s(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % self.dimension

    def embed(self, text: str) -> np.ndarray:
        vector = np.zeros(self.dimension, dtype=np.float64)
        folded = _fold(text).casefold()
        if not folded:
            return vector
        tokens = [folded] if len(folded) < 3 else [folded[i:i + 3] for i in range(len(folded) - 2)]
        for token in tokens:
            vector[self._bucket(token)] += 1.0
        norm = float(np.linalg.norm(vector))
        if norm > 0:
            vector /= norm
        return vector


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(a)) * float(np.linalg.norm(b))
    if denom == 0.0:
        return 0.0
    return float(np.dot(a, b)) / denom


def rank_distractors(
    correct: str,
    pool: Sequence[str],
    provider: EmbeddingProvider,
) -> list[str]:
    """Top-3 pool candidates by cosine similarity to the correct answer.

    Exact matches of the correct answer (after whitespace folding) are
    excluded; duplicate candidates collapse to their lexicographically
    smallest spelling; similarity ties break lexicographically.
    """
    correct_key = _fold(correct)
    by_key: dict[str, str] = {}
    for candidate in pool:
        key = _fold(candidate)
        if not key or key == correct_key:
            continue
        if key not in by_key or candidate < by_key[key]:
            by_key[key] = candidate
    candidates = list(by_key.values())
    if len(candidates) < 3:
        raise PoolTooSmallError(
            f"need at least 3 distinct distractor candidates, got {len(candidates)}"
        )
    target = provider.embed(correct)
    # similarities are quantized so mathematically tied candidates reach the
    # lexicographic tie-break regardless of float summation order
    scored = sorted(
        candidates,
        key=lambda c: (-round(cosine_similarity(provider.embed(c), target), 12), c),
    )
    return scored[:3]


def generate(
    case: LegalCase,
    category: McqCategory,
    pool: Sequence[str],
    provider: EmbeddingProvider,
    seed: int,
) -> McqItem:
    """Build one MCQ for the case; see module docstring for the contract."""
    labels = case.annotation.labels(category.annotation_field)
    if not labels:
        raise AnnotationMissingError(
            f"case {case.id!r} has no {category.annotation_field} annotation"
        )
    correct = labels[0]
    distractors = rank_distractors(correct, pool, provider)

    options = [correct] + distractors
    rng = random.Random(seed)
    rng.shuffle(options)
    question = f"What is the {category.question_word} in the event?\n\n{case.narrative}"
    return McqItem(
        id=f"{case.id}:{category.value.lower()}",
        case_id=case.id,
        category=category,
        question=question,
        options=tuple(options),
        answer_index=options.index(correct),
    )


def render_mcq_prompt(item: McqItem) -> str:
    return MCQ_PROMPT_TEMPLATE.format(
        question=item.question,
        option_a=item.options[0],
        option_b=item.options[1],
        option_c=item.options[2],
        option_d=item.options[3],
    )


@dataclass(frozen=True)
class CategoryScore:
    correct: int
    total: int

    @property
    def accuracy(self) -> float | None:
        return self.correct / self.total if self.total else None


@dataclass(frozen=True)
class GradeReport:
    accuracy: float
    per_category: Mapping[McqCategory, CategoryScore]

    def to_json(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_category": {
                cat.value: {"correct": s.correct, "total": s.total, "accuracy": s.accuracy}
                for cat, s in self.per_category.items()
            },
        }


def grade(items: Iterable[McqItem], answers: Mapping[str, str]) -> GradeReport:
    """Score an answer sheet (item id -> letter). Unanswered items count wrong."""
    items = list(items)
    known = {item.id for item in items}
    for answer_id in answers:
        if answer_id not in known:
            raise ValueError(f"unknown item id {answer_id!r} in answer sheet")
    if not items:
        raise ValueError("no items to grade")

    correct_total = 0
    tally: dict[McqCategory, list[int]] = {cat: [0, 0] for cat in McqCategory}
    for item in items:
        tally[item.category][1] += 1
        if answers.get(item.id) == item.answer_letter:
            tally[item.category][0] += 1
            correct_total += 1
    return GradeReport(
        accuracy=correct_total / len(items),
        per_category={cat: CategoryScore(c, t) for cat, (c, t) in tally.items()},
    )
