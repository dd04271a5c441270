"""Contextual-integrity basics: build a context, evaluate information flows.

A context holds vocabularies of roles and information types plus an ordered
list of permit/prohibit principles. Flows are concrete
(sender, subject, recipient, information) tuples, each with condition tags.
Run: python3 demos/01_compliance_basics.py
"""

from cikit import (
    Context,
    Domain,
    Effect,
    FlowTuple,
    InformationFlow,
    InformationType,
    Matcher,
    Role,
    TransmissionPrinciple,
    check_tuple,
    evaluate_flow,
    verdict_to_choice,
)
from cikit.ci import MatchKind

# vocabularies: who can act, and what kind of information moves
hospital = Role("hospital", "Teaching hospital", {"covered-entity"})
researcher = Role("researcher", "University research group", {"third-party"})
patient = Role("patient", "Patient")
anon_record = InformationType("anonymized-record", "Anonymized patient record", {"anonymized"})
raw_record = InformationType("raw-record", "Identifiable record", {"identifiable"})

# one permitting norm: hospitals may share anonymized records with
# researchers, provided the patient consented
permit_research = TransmissionPrinciple(
    id="permit-anon-research",
    effect=Effect.PERMIT,
    sender_matcher=Matcher(MatchKind.ID, "hospital"),
    recipient_matcher=Matcher(MatchKind.ID, "researcher"),
    info_matcher=Matcher(MatchKind.ID, "anonymized-record"),
    conditions={"consent"},
)
# and one prohibition: identifiable records never leave the hospital
prohibit_raw = TransmissionPrinciple(
    id="prohibit-identifiable",
    effect=Effect.PROHIBIT,
    sender_matcher=Matcher(MatchKind.TAG, "covered-entity"),
    info_matcher=Matcher(MatchKind.TAG, "identifiable"),
)

clinic = Context(
    id="clinical-research",
    domain=Domain.HIPAA,
    roles=[hospital, researcher, patient],
    info_types=[anon_record, raw_record],
    principles=[permit_research, prohibit_raw],
)

share_anon = FlowTuple(sender=hospital, subject=patient, recipient=researcher, info=anon_record)
share_raw = FlowTuple(sender=hospital, subject=patient, recipient=researcher, info=raw_record)

# the per-tuple permit test: does some PERMIT principle apply?
print("anonymized + consent :", check_tuple(share_anon, frozenset({"consent"}), clinic.principles))
print("anonymized, no consent:", check_tuple(share_anon, frozenset(), clinic.principles))

# whole-flow verdicts are three-way, prohibitions first
for name, flow in [
    ("consented anonymized transfer", InformationFlow(((share_anon, frozenset({"consent"})),))),
    ("missing consent", InformationFlow(((share_anon, frozenset()),))),
    ("identifiable record", InformationFlow(((share_raw, frozenset({"consent"})),))),
    ("empty flow", InformationFlow()),
]:
    verdict = evaluate_flow(flow, clinic)
    print(f"{name:30s} -> {verdict.value:15s} (choice {verdict_to_choice(verdict)})")
