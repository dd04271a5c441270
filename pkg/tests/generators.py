"""Randomized instance builders shared by property and acceptance tests."""

from __future__ import annotations

import random

from cikit.ci import (
    ANY,
    Context,
    Domain,
    Effect,
    FlowTuple,
    InformationFlow,
    InformationType,
    Matcher,
    MatchKind,
    Role,
    TransmissionPrinciple,
)

_ROLE_IDS = ["hospital", "researcher", "patient", "broker", "employer", "vendor"]
_INFO_IDS = ["health-record", "payroll", "biometric", "contact", "schedule"]
_TAGS = ["covered-entity", "data-controller", "third-party", "public-body"]
_INFO_TAGS = ["sensitive", "anonymized", "identifiable"]
_CONDITIONS = ["consent", "anonymized", "contract", "notice"]


def random_context(rng: random.Random, max_principles: int = 5) -> Context:
    roles = [
        Role(rid, rid.title(), frozenset(rng.sample(_TAGS, rng.randint(0, 2))))
        for rid in _ROLE_IDS
    ]
    infos = [
        InformationType(iid, iid.title(), frozenset(rng.sample(_INFO_TAGS, rng.randint(0, 2))))
        for iid in _INFO_IDS
    ]

    def role_matcher() -> Matcher:
        kind = rng.choice(["any", "any", "id", "tag"])
        if kind == "any":
            return ANY
        if kind == "id":
            return Matcher(MatchKind.ID, rng.choice(_ROLE_IDS))
        return Matcher(MatchKind.TAG, rng.choice(_TAGS))

    def info_matcher() -> Matcher:
        kind = rng.choice(["any", "any", "id", "tag"])
        if kind == "any":
            return ANY
        if kind == "id":
            return Matcher(MatchKind.ID, rng.choice(_INFO_IDS))
        return Matcher(MatchKind.TAG, rng.choice(_INFO_TAGS))

    principles = []
    for i in range(rng.randint(0, max_principles)):
        matchers = {
            "sender_matcher": role_matcher(),
            "subject_matcher": role_matcher(),
            "recipient_matcher": role_matcher(),
            "info_matcher": info_matcher(),
        }
        conditions = frozenset(rng.sample(_CONDITIONS, rng.randint(0, 2)))
        if all(m.is_wildcard for m in matchers.values()) and not conditions:
            conditions = frozenset({rng.choice(_CONDITIONS)})  # avoid vacuous rules
        principles.append(TransmissionPrinciple(
            id=f"p{i}",
            effect=rng.choice([Effect.PERMIT, Effect.PERMIT, Effect.PROHIBIT]),
            conditions=conditions,
            **matchers,
        ))
    return Context(
        id="ctx",
        domain=rng.choice(list(Domain)),
        roles=roles,
        info_types=infos,
        principles=principles,
    )


def random_flow(rng: random.Random, context: Context, max_tuples: int = 5) -> InformationFlow:
    roles = list(context.roles.values())
    infos = list(context.info_types.values())
    entries = []
    for _ in range(rng.randint(0, max_tuples)):
        ft = FlowTuple(
            sender=rng.choice(roles),
            subject=rng.choice(roles),
            recipient=rng.choice(roles),
            info=rng.choice(infos),
        )
        conds = frozenset(rng.sample(_CONDITIONS, rng.randint(0, 3)))
        entries.append((ft, conds))
    return InformationFlow(tuple(entries))
