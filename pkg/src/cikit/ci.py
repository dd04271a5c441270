"""Contextual-integrity calculus.

Models a context as vocabularies of roles and information types plus an
ordered list of permit/prohibit transmission principles, and evaluates
concrete information flows against it. A flow is a list of
(sender, subject, recipient, information) tuples, each carrying its own set
of condition tags (e.g. "consent", "anonymized").

Verdicts are three-way. The decision rule, applied in priority order:

1. PROHIBITED  - some tuple is matched by a PROHIBIT principle whose
                 conditions are satisfied;
2. PERMITTED   - every tuple is covered by a satisfied PERMIT principle
                 (vacuously true for the empty flow);
3. NOT_APPLICABLE - otherwise, if no principle's matchers touch any tuple
                 at all (the flow is outside the context's scope);
4. PROHIBITED  - otherwise (scope matched, but no permitting norm applies).

All types are immutable after construction; evaluation is pure and safe for
concurrent readers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import SchemaError, VocabularyError

__all__ = [
    "Domain",
    "Effect",
    "ComplianceVerdict",
    "Role",
    "InformationType",
    "FlowTuple",
    "Matcher",
    "MatchKind",
    "TransmissionPrinciple",
    "Context",
    "InformationFlow",
    "check_tuple",
    "evaluate_flow",
    "verdict_to_choice",
    "choice_to_verdict",
    "context_to_json",
    "context_from_json",
    "principle_to_json",
    "principle_from_json",
    "flow_to_json",
    "flow_from_json",
]


class Domain(str, Enum):
    """Regulatory domain a context or case belongs to."""

    GDPR = "GDPR"
    HIPAA = "HIPAA"
    AI_ACT = "AI_ACT"
    OTHER = "OTHER"

    @property
    def display(self) -> str:
        """Human-readable name as used inside rendered question text."""
        return "AI ACT" if self is Domain.AI_ACT else self.value


class Effect(str, Enum):
    PERMIT = "PERMIT"
    PROHIBIT = "PROHIBIT"


class ComplianceVerdict(str, Enum):
    PERMITTED = "PERMITTED"
    PROHIBITED = "PROHIBITED"
    NOT_APPLICABLE = "NOT_APPLICABLE"


# Choice letters follow the compliance question's option order:
# A. Prohibited | B. Permitted | C. Not related
_VERDICT_TO_CHOICE = {
    ComplianceVerdict.PROHIBITED: "A",
    ComplianceVerdict.PERMITTED: "B",
    ComplianceVerdict.NOT_APPLICABLE: "C",
}
_CHOICE_TO_VERDICT = {v: k for k, v in _VERDICT_TO_CHOICE.items()}


def verdict_to_choice(verdict: ComplianceVerdict) -> str:
    """Map a verdict to its choice letter (A/B/C)."""
    return _VERDICT_TO_CHOICE[verdict]


def choice_to_verdict(letter: str) -> ComplianceVerdict:
    """Inverse of :func:`verdict_to_choice`; total on {A, B, C}."""
    try:
        return _CHOICE_TO_VERDICT[letter]
    except KeyError:
        raise ValueError(f"no verdict for choice letter {letter!r}") from None


@dataclass(frozen=True)
class Role:
    """An actor vocabulary entry: id, label, and attribute tags."""

    id: str
    label: str = ""
    attributes: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("role id must be non-empty")
        object.__setattr__(self, "attributes", frozenset(self.attributes))


@dataclass(frozen=True)
class InformationType:
    """An information vocabulary entry: id, label, and sensitivity tags."""

    id: str
    label: str = ""
    sensitivity_tags: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("information type id must be non-empty")
        object.__setattr__(self, "sensitivity_tags", frozenset(self.sensitivity_tags))


@dataclass(frozen=True)
class FlowTuple:
    """One concrete transfer: sender sends subject's information to recipient."""

    sender: Role
    subject: Role
    recipient: Role
    info: InformationType


class MatchKind(str, Enum):
    ANY = "any"
    ID = "id"
    TAG = "tag"


@dataclass(frozen=True)
class Matcher:
    """Pattern over a role or information type: wildcard, exact id, or tag.

    Compact string syntax (used in JSON): ``"*"``, ``"id:hospital"``,
    ``"tag:covered-entity"``.
    """

    kind: MatchKind = MatchKind.ANY
    value: str | None = None

    def __post_init__(self) -> None:
        if self.kind is MatchKind.ANY:
            if self.value is not None:
                raise ValueError("wildcard matcher takes no value")
        elif not self.value:
            raise ValueError(f"{self.kind.value} matcher requires a value")

    @property
    def is_wildcard(self) -> bool:
        return self.kind is MatchKind.ANY

    def matches_role(self, role: Role) -> bool:
        if self.kind is MatchKind.ANY:
            return True
        if self.kind is MatchKind.ID:
            return role.id == self.value
        return self.value in role.attributes

    def matches_info(self, info: InformationType) -> bool:
        if self.kind is MatchKind.ANY:
            return True
        if self.kind is MatchKind.ID:
            return info.id == self.value
        return self.value in info.sensitivity_tags

    def to_string(self) -> str:
        if self.kind is MatchKind.ANY:
            return "*"
        return f"{self.kind.value}:{self.value}"

    @classmethod
    def parse(cls, pattern: str) -> "Matcher":
        if pattern == "*":
            return cls(MatchKind.ANY)
        for kind in (MatchKind.ID, MatchKind.TAG):
            prefix = kind.value + ":"
            if pattern.startswith(prefix):
                return cls(kind, pattern[len(prefix):])
        raise SchemaError(f"bad matcher pattern {pattern!r} (expected '*', 'id:...' or 'tag:...')")


ANY = Matcher(MatchKind.ANY)


@dataclass(frozen=True)
class TransmissionPrinciple:
    """A permit or prohibit norm over flow tuples.

    The principle fires on a tuple when all four matchers match; it *applies*
    when additionally its condition tags are a subset of the tuple's
    condition tags. Vacuous universal rules (all matchers wildcard and no
    conditions) are rejected.
    """

    id: str
    effect: Effect
    sender_matcher: Matcher = ANY
    subject_matcher: Matcher = ANY
    recipient_matcher: Matcher = ANY
    info_matcher: Matcher = ANY
    conditions: frozenset[str] = frozenset()
    provenance: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("principle id must be non-empty")
        object.__setattr__(self, "conditions", frozenset(self.conditions))
        if self.provenance is not None:
            object.__setattr__(self, "provenance", tuple(self.provenance))
        all_wild = all(
            m.is_wildcard
            for m in (
                self.sender_matcher,
                self.subject_matcher,
                self.recipient_matcher,
                self.info_matcher,
            )
        )
        if all_wild and not self.conditions:
            raise ValueError(f"principle {self.id!r} is vacuous: all matchers wildcard and no conditions")

    def matches(self, flow_tuple: FlowTuple) -> bool:
        """True when all four matchers match the tuple (conditions ignored)."""
        return (
            self.sender_matcher.matches_role(flow_tuple.sender)
            and self.subject_matcher.matches_role(flow_tuple.subject)
            and self.recipient_matcher.matches_role(flow_tuple.recipient)
            and self.info_matcher.matches_info(flow_tuple.info)
        )

    def conditions_met(self, conditions: frozenset[str]) -> bool:
        return self.conditions <= conditions

    def applies(self, flow_tuple: FlowTuple, conditions: frozenset[str]) -> bool:
        return self.matches(flow_tuple) and self.conditions_met(conditions)


class Context:
    """A regulatory context: role/info vocabularies plus ordered principles."""

    def __init__(
        self,
        id: str,
        domain: Domain,
        roles: Iterable[Role] = (),
        info_types: Iterable[InformationType] = (),
        principles: Iterable[TransmissionPrinciple] = (),
    ):
        self.id = id
        self.domain = domain
        self.roles: Mapping[str, Role] = {r.id: r for r in roles}
        self.info_types: Mapping[str, InformationType] = {t.id: t for t in info_types}
        self.principles: tuple[TransmissionPrinciple, ...] = tuple(principles)
        seen: set[str] = set()
        for p in self.principles:
            if p.id in seen:
                raise ValueError(f"duplicate principle id {p.id!r} in context {id!r}")
            seen.add(p.id)

    def role(self, role_id: str) -> Role:
        try:
            return self.roles[role_id]
        except KeyError:
            raise VocabularyError("role", role_id) from None

    def info_type(self, info_id: str) -> InformationType:
        try:
            return self.info_types[info_id]
        except KeyError:
            raise VocabularyError("information type", info_id) from None


@dataclass(frozen=True)
class InformationFlow:
    """A set of concrete transfers, each with its own condition tags.

    ``tuples`` is a sequence of (FlowTuple, frozenset-of-condition-tags)
    pairs. May be empty (the vacuous flow); entries need not be unique.
    """

    tuples: tuple[tuple[FlowTuple, frozenset[str]], ...] = ()

    def __post_init__(self) -> None:
        normalized = tuple((ft, frozenset(conds)) for ft, conds in self.tuples)
        object.__setattr__(self, "tuples", normalized)


def check_tuple(
    flow_tuple: FlowTuple,
    conditions: frozenset[str],
    principles: Sequence[TransmissionPrinciple],
) -> bool:
    """Permit test for one tuple: does some PERMIT principle apply?

    PROHIBIT principles are ignored here; they are consumed by
    :func:`evaluate_flow`. Empty principle list returns False.
    """
    conditions = frozenset(conditions)
    return any(
        p.effect is Effect.PERMIT and p.applies(flow_tuple, conditions)
        for p in principles
    )


def _validate_refs(flow: InformationFlow, context: Context) -> None:
    for ft, _ in flow.tuples:
        for role in (ft.sender, ft.subject, ft.recipient):
            if role.id not in context.roles:
                raise VocabularyError("role", role.id)
        if ft.info.id not in context.info_types:
            raise VocabularyError("information type", ft.info.id)


def evaluate_flow(flow: InformationFlow, context: Context) -> ComplianceVerdict:
    """Evaluate a whole flow against a context's principles.

    Deterministic and order-independent with respect to tuple ordering.
    Raises VocabularyError when a tuple references an id outside the
    context's vocabularies.
    """
    _validate_refs(flow, context)

    for ft, conds in flow.tuples:
        for p in context.principles:
            if p.effect is Effect.PROHIBIT and p.applies(ft, conds):
                return ComplianceVerdict.PROHIBITED

    if all(check_tuple(ft, conds, context.principles) for ft, conds in flow.tuples):
        return ComplianceVerdict.PERMITTED

    scope_touched = any(
        p.matches(ft) for ft, _ in flow.tuples for p in context.principles
    )
    if not scope_touched:
        return ComplianceVerdict.NOT_APPLICABLE
    return ComplianceVerdict.PROHIBITED


# ---------------------------------------------------------------------------
# JSON (de)serialization. Field names mirror the type definitions, snake_case.
# ---------------------------------------------------------------------------

def _role_to_json(role: Role) -> dict:
    return {"id": role.id, "label": role.label, "attributes": sorted(role.attributes)}


def _info_to_json(info: InformationType) -> dict:
    return {"id": info.id, "label": info.label, "sensitivity_tags": sorted(info.sensitivity_tags)}


def principle_to_json(p: TransmissionPrinciple) -> dict:
    data = {
        "id": p.id,
        "effect": p.effect.value,
        "sender_matcher": p.sender_matcher.to_string(),
        "subject_matcher": p.subject_matcher.to_string(),
        "recipient_matcher": p.recipient_matcher.to_string(),
        "info_matcher": p.info_matcher.to_string(),
        "conditions": sorted(p.conditions),
    }
    if p.provenance is not None:
        data["provenance"] = list(p.provenance)
    return data


def principle_from_json(data: Mapping) -> TransmissionPrinciple:
    try:
        provenance = data.get("provenance")
        return TransmissionPrinciple(
            id=data["id"],
            effect=Effect(data["effect"]),
            sender_matcher=Matcher.parse(data.get("sender_matcher", "*")),
            subject_matcher=Matcher.parse(data.get("subject_matcher", "*")),
            recipient_matcher=Matcher.parse(data.get("recipient_matcher", "*")),
            info_matcher=Matcher.parse(data.get("info_matcher", "*")),
            conditions=frozenset(data.get("conditions", ())),
            provenance=tuple(provenance) if provenance is not None else None,
        )
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"bad principle record: {exc}") from exc


def context_to_json(context: Context) -> dict:
    return {
        "id": context.id,
        "domain": context.domain.value,
        "roles": [_role_to_json(r) for r in context.roles.values()],
        "info_types": [_info_to_json(t) for t in context.info_types.values()],
        "principles": [principle_to_json(p) for p in context.principles],
    }


def context_from_json(data: Mapping) -> Context:
    try:
        roles = [
            Role(r["id"], r.get("label", ""), frozenset(r.get("attributes", ())))
            for r in data.get("roles", ())
        ]
        info_types = [
            InformationType(t["id"], t.get("label", ""), frozenset(t.get("sensitivity_tags", ())))
            for t in data.get("info_types", ())
        ]
        principles = [principle_from_json(p) for p in data.get("principles", ())]
        return Context(
            id=data["id"],
            domain=Domain(data.get("domain", "OTHER")),
            roles=roles,
            info_types=info_types,
            principles=principles,
        )
    except (KeyError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"bad context record: {exc}") from exc


def flow_to_json(flow: InformationFlow) -> dict:
    return {
        "tuples": [
            {
                "sender": ft.sender.id,
                "subject": ft.subject.id,
                "recipient": ft.recipient.id,
                "info": ft.info.id,
                "conditions": sorted(conds),
            }
            for ft, conds in flow.tuples
        ]
    }


def flow_from_json(data: Mapping, context: Context) -> InformationFlow:
    """Resolve a flow document against a context's vocabularies.

    Raises VocabularyError naming the first missing role/info id.
    """
    entries = []
    for rec in data.get("tuples", ()):
        try:
            ft = FlowTuple(
                sender=context.role(rec["sender"]),
                subject=context.role(rec["subject"]),
                recipient=context.role(rec["recipient"]),
                info=context.info_type(rec["info"]),
            )
        except KeyError as exc:
            raise SchemaError(f"flow tuple missing field: {exc}") from exc
        entries.append((ft, frozenset(rec.get("conditions", ()))))
    return InformationFlow(tuple(entries))


def dump_context(context: Context) -> str:
    """Canonical JSON text for a context (stable key order, trailing newline)."""
    return json.dumps(context_to_json(context), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
