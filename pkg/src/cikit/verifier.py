"""Compliance questions, response verification, and the binary reward.

A compliance question renders a case narrative into the fixed three-option
template (A. Prohibited | B. Permitted | C. Not related). Verification
extracts the committed choice (last ``Choice:`` occurrence in the response)
and compares it to the gold verdict; the reward is the 0/1 indicator of a
correct, well-formed answer.

Two verification modes:

* strict  - the response must be a full reasoning trajectory (all delimiter
            blocks present, in order) on top of an extractable choice;
* lenient - only an extractable choice is required. CI parameters are still
            pulled out opportunistically when a CI block is present.

Strict-mode reward is therefore never above lenient-mode reward for the
same input. Unparseable responses earn reward 0.0 rather than raising, so
rollout loops always receive a scalar.

The optional case-relevance check compares the response's CI block against
the case annotation (case-insensitively, whitespace folded). By default a
contradiction only flips ``ci_consistent``; with ``ci_gate=True`` it also
zeroes the reward.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .cases import CaseAnnotation, LegalCase
from .ci import ComplianceVerdict, Domain
from .trajectory import (
    COMPLIANCE_OPTIONS,
    ChoiceNotFound,
    ErrorKind,
    FormatError,
    LetterOutsideOptionSet,
    ParsedChoice,
    ReasoningTrajectory,
    extract_choice,
    extract_ci_block,
    parse,
)

__all__ = [
    "COMPLIANCE_QUESTION_TEMPLATE",
    "ComplianceQuestion",
    "VerificationReport",
    "build_compliance_question",
    "verify",
    "reward",
    "batch_reward",
    "BatchRewardSummary",
]

COMPLIANCE_QUESTION_TEMPLATE = (
    "Determine the relationship between the provided event and the {domain} regulations. "
    "You have three options for your conclusion:\n"
    "(A) The event is prohibited by {domain}.\n"
    "(B) The event is permitted by {domain}.\n"
    "(C) The event is not related to {domain}.\n"
    "\n"
    "Event:\n"
    "\n"
    "{event}\n"
    "\n"
    "Output Format:\n"
    "\n"
    "Choice: [A. Prohibited | B. Permitted | C. Not related ]"
)


@dataclass(frozen=True)
class ComplianceQuestion:
    case_id: str
    domain: Domain
    prompt: str
    gold: ComplianceVerdict
    option_set: frozenset[str] = COMPLIANCE_OPTIONS


def build_compliance_question(case: LegalCase) -> ComplianceQuestion:
    """Render the case into the fixed question template."""
    if not case.narrative.strip():
        raise ValueError("empty event")
    prompt = COMPLIANCE_QUESTION_TEMPLATE.format(domain=case.domain.display, event=case.narrative)
    return ComplianceQuestion(case_id=case.id, domain=case.domain, prompt=prompt, gold=case.gold)


@dataclass(frozen=True)
class VerificationReport:
    format_ok: bool
    errors: tuple[FormatError, ...]
    choice: ParsedChoice | None
    ci_extracted: dict[str, list[str]] | None
    ci_consistent: bool | None
    correct: bool
    reward: float

    def error_strings(self) -> list[str]:
        return [str(e) for e in self.errors]


_WS_RE = re.compile(r"\s+")


def _fold(value: str) -> str:
    return _WS_RE.sub(" ", value).strip().casefold()


def _ci_consistency(ci_block: dict[str, list[str]] | None,
                    annotation: CaseAnnotation | None) -> bool | None:
    """None when no CI parameter overlaps the annotation; else the AND over
    overlapping sender/subject/recipient keys of folded-set intersection."""
    if not ci_block or annotation is None:
        return None
    verdicts: list[bool] = []
    for key in ("sender", "subject", "recipient"):
        annotated = annotation.labels(key)
        claimed = ci_block.get(key)
        if not annotated or not claimed:
            continue
        annotated_set = {_fold(v) for v in annotated}
        claimed_set = {_fold(v) for v in claimed}
        verdicts.append(bool(annotated_set & claimed_set))
    if not verdicts:
        return None
    return all(verdicts)


def verify(
    response_text: str,
    question: ComplianceQuestion,
    strict_ci: bool = False,
    *,
    annotation: CaseAnnotation | None = None,
    ci_gate: bool = False,
) -> VerificationReport:
    """Check a response against a question; all failures are report content."""
    errors: list[FormatError] = []
    ci_extracted: dict[str, list[str]] | None = None
    structure_ok = True

    if strict_ci:
        parsed = parse(response_text, require_ci=True)
        if isinstance(parsed, ReasoningTrajectory):
            ci_extracted = parsed.ci_block or None
        else:
            structure_ok = False
            errors.extend(parsed)
    else:
        ci_extracted = extract_ci_block(response_text)

    choice: ParsedChoice | None = None
    try:
        choice = extract_choice(response_text, question.option_set)
    except ChoiceNotFound:
        errors.append(FormatError(ErrorKind.CHOICE_NOT_FOUND, "no 'Choice: <letter>' found"))
    except LetterOutsideOptionSet as exc:
        errors.append(FormatError(ErrorKind.CHOICE_OUTSIDE_OPTIONS, exc.letter))

    format_ok = structure_ok and choice is not None
    ci_consistent = _ci_consistency(ci_extracted, annotation)
    correct = bool(format_ok and choice is not None and choice.verdict == question.gold)
    if ci_gate and ci_consistent is False:
        correct = False
    return VerificationReport(
        format_ok=format_ok,
        errors=tuple(errors),
        choice=choice,
        ci_extracted=ci_extracted,
        ci_consistent=ci_consistent,
        correct=correct,
        reward=1.0 if correct else 0.0,
    )


def reward(case: LegalCase, response_text: str, *, ci_gate: bool = False) -> float:
    """Binary compliance reward: 1.0 iff the extracted choice matches gold."""
    question = build_compliance_question(case)
    report = verify(response_text, question, strict_ci=False,
                    annotation=case.annotation, ci_gate=ci_gate)
    return report.reward


@dataclass(frozen=True)
class BatchRewardSummary:
    mean_reward: float | None
    format_failures: int

    def to_json(self) -> dict:
        return {"mean_reward": self.mean_reward, "format_failures": self.format_failures}


def batch_reward(
    cases: list[LegalCase],
    responses: list[str],
    *,
    strict_ci: bool = False,
    ci_gate: bool = False,
) -> tuple[list[float], BatchRewardSummary]:
    """Element-wise rewards plus summary (exact mean, format-failure count)."""
    if len(cases) != len(responses):
        raise ValueError(f"length mismatch: {len(cases)} cases vs {len(responses)} responses")
    rewards: list[float] = []
    failures = 0
    for case, response in zip(cases, responses):
        question = build_compliance_question(case)
        report = verify(response, question, strict_ci=strict_ci,
                        annotation=case.annotation, ci_gate=ci_gate)
        rewards.append(report.reward)
        if not report.format_ok:
            failures += 1
    mean = sum(rewards) / len(rewards) if rewards else None
    return rewards, BatchRewardSummary(mean_reward=mean, format_failures=failures)
