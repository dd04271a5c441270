"""cikit: contextual-integrity legal-compliance toolkit.

Submodules:

- ci            contextual-integrity calculus (contexts, flows, verdicts)
- regulations   hierarchical regulation store with path addressing
- cases         legal-case database, stats grid, split, KG triple store
- trajectory    reasoning-trajectory parser/serializer, choice extraction
- verifier      compliance questions, verification, binary reward
- mcq           contextual-understanding MCQ generation and grading
- metrics       accuracy, balanced accuracy, macro-F1, normalized log distance
- ppo           desk-scale PPO trainer against the compliance reward
- service       HTTP reward service
- cli           command-line entry point
"""

from .ci import (
    ComplianceVerdict,
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
    choice_to_verdict,
    evaluate_flow,
    verdict_to_choice,
)
from .cases import (
    CaseAnnotation,
    CaseStore,
    KgTriple,
    LegalCase,
    SplitAssignment,
    StatsTable,
    TripleStore,
    ingest_cases,
    split,
)
from .errors import (
    AnnotationMissingError,
    CikitError,
    PathNotFoundError,
    PoolTooSmallError,
    SchemaError,
    VocabularyError,
)
from .regulations import RegulationNode, RegulationStore, ingest_regulations
from .trajectory import ReasoningTrajectory, extract_choice, parse, serialize
from .verifier import batch_reward, build_compliance_question, reward, verify

__version__ = "0.1.0"

__all__ = [
    "AnnotationMissingError",
    "CaseAnnotation",
    "CaseStore",
    "CikitError",
    "ComplianceVerdict",
    "Context",
    "Domain",
    "Effect",
    "FlowTuple",
    "InformationFlow",
    "InformationType",
    "KgTriple",
    "LegalCase",
    "Matcher",
    "PathNotFoundError",
    "PoolTooSmallError",
    "ReasoningTrajectory",
    "RegulationNode",
    "RegulationStore",
    "Role",
    "SchemaError",
    "SplitAssignment",
    "StatsTable",
    "TransmissionPrinciple",
    "TripleStore",
    "VocabularyError",
    "batch_reward",
    "build_compliance_question",
    "check_tuple",
    "choice_to_verdict",
    "evaluate_flow",
    "extract_choice",
    "ingest_cases",
    "ingest_regulations",
    "parse",
    "reward",
    "serialize",
    "split",
    "verdict_to_choice",
    "verify",
]
