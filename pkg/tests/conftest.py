from __future__ import annotations

import json
from pathlib import Path

import pytest

from cikit.cases import CaseStore, load_cases
from cikit.ci import ComplianceVerdict, Domain

FIXTURES = Path(__file__).parent / "fixtures"
DATA = Path(__file__).parent.parent / "data"

REAL_ESTATE_NARRATIVE = (
    "A real estate company collected personal data from individuals for its operations. "
    "However, the company did not establish a joint controllership agreement with other "
    "entities involved in processing the data. Additionally, the company collected personal "
    "data without a legal basis and failed to comply with a request from an individual to "
    "delete their personal data in a timely manner."
)

# Domain-by-verdict counts of the full-scale benchmark statistics grid.
FULL_SCALE_COUNTS = {
    (Domain.HIPAA, ComplianceVerdict.PERMITTED): 86,
    (Domain.HIPAA, ComplianceVerdict.PROHIBITED): 19,
    (Domain.HIPAA, ComplianceVerdict.NOT_APPLICABLE): 106,
    (Domain.GDPR, ComplianceVerdict.PERMITTED): 675,
    (Domain.GDPR, ComplianceVerdict.PROHIBITED): 2462,
    (Domain.GDPR, ComplianceVerdict.NOT_APPLICABLE): 0,
    (Domain.AI_ACT, ComplianceVerdict.PERMITTED): 1029,
    (Domain.AI_ACT, ComplianceVerdict.PROHIBITED): 971,
    (Domain.AI_ACT, ComplianceVerdict.NOT_APPLICABLE): 1000,
}


def make_full_scale_document() -> dict:
    """Synthesize a case document with the full-scale per-cell counts."""
    records = []
    for (domain, verdict), count in FULL_SCALE_COUNTS.items():
        for i in range(count):
            records.append({
                "id": f"{domain.value.lower()}-{verdict.value.lower()}-{i:04d}",
                "domain": domain.value,
                "narrative": f"Synthetic {domain.display} case {i} with gold {verdict.value}.",
                "gold": verdict.value,
            })
    return {"cases": records}


@pytest.fixture(scope="session")
def full_scale_store() -> CaseStore:
    return load_cases(make_full_scale_document()).store


@pytest.fixture(scope="session")
def demo_store() -> CaseStore:
    document = json.loads((DATA / "cases_demo.json").read_text(encoding="utf-8"))
    result = load_cases(document)
    assert not result.skipped
    return result.store


@pytest.fixture(scope="session")
def real_estate_case(demo_store):
    return demo_store.get("gdpr-real-estate-001")


@pytest.fixture(scope="session")
def real_estate_response() -> str:
    return (FIXTURES / "real_estate_response.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def real_estate_mcq_response() -> str:
    return (FIXTURES / "real_estate_mcq_response.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def real_estate_question_text() -> str:
    # the canonical question block, without the file's trailing newline
    return (FIXTURES / "real_estate_question.txt").read_text(encoding="utf-8").rstrip("\n")
