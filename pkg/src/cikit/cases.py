"""Legal-case database and sender-subject-recipient knowledge graph.

Cases carry a narrative, a partial CI annotation (free-form role and
attribute strings; absent parameters are None, never empty strings), a gold
verdict, and optionally the regulation paths they cite. Ingest produces the
domain-by-verdict statistics grid and skips records without a gold verdict,
reporting them.

Splitting is stratified per (domain, verdict) cell: train gets
floor(cell_size * ratio), the remainder goes to test, deterministically
under a fixed seed.

The triple store is an in-memory indexed store with flat-file persistence
(one tab-separated triple per line). Both stores are build-then-freeze.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .ci import ComplianceVerdict, Domain
from .errors import SchemaError

__all__ = [
    "CaseAnnotation",
    "LegalCase",
    "CaseStore",
    "CaseIngestResult",
    "StatsTable",
    "SplitAssignment",
    "KgTriple",
    "TripleStore",
    "ingest_cases",
    "load_cases",
    "split",
]

_CASE_DOMAINS = (Domain.HIPAA, Domain.GDPR, Domain.AI_ACT)  # stats column order
_VERDICT_ROWS = (
    ComplianceVerdict.PERMITTED,
    ComplianceVerdict.PROHIBITED,
    ComplianceVerdict.NOT_APPLICABLE,
)


@dataclass(frozen=True)
class CaseAnnotation:
    """Partial CI annotation; each field is a value tuple or None when absent."""

    sender: tuple[str, ...] | None = None
    subject: tuple[str, ...] | None = None
    recipient: tuple[str, ...] | None = None
    information_type: tuple[str, ...] | None = None
    attributes: tuple[str, ...] | None = None
    purpose: tuple[str, ...] | None = None

    def labels(self, parameter: str) -> tuple[str, ...] | None:
        value = getattr(self, parameter)
        return tuple(value) if value is not None else None

    def to_json(self) -> dict:
        out = {}
        for name in ("sender", "subject", "recipient", "information_type", "attributes", "purpose"):
            value = getattr(self, name)
            if value is not None:
                out[name] = list(value)
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "CaseAnnotation":
        def pick(name: str) -> tuple[str, ...] | None:
            if name not in data or data[name] is None:
                return None
            value = data[name]
            if isinstance(value, str):
                value = [value]
            return tuple(str(v) for v in value)

        return cls(
            sender=pick("sender"),
            subject=pick("subject"),
            recipient=pick("recipient"),
            information_type=pick("information_type"),
            attributes=pick("attributes"),
            purpose=pick("purpose"),
        )


@dataclass(frozen=True)
class LegalCase:
    id: str
    domain: Domain
    narrative: str
    gold: ComplianceVerdict
    annotation: CaseAnnotation = CaseAnnotation()
    cited_paths: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("case id must be non-empty")
        if not self.narrative:
            raise ValueError("case narrative must be non-empty")
        object.__setattr__(self, "cited_paths", tuple(tuple(p) for p in self.cited_paths))

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "domain": self.domain.value,
            "narrative": self.narrative,
            "annotation": self.annotation.to_json(),
            "gold": self.gold.value,
            "cited_paths": [list(p) for p in self.cited_paths],
        }


class CaseStore:
    """Ordered, id-addressable collection of cases; read-only after build."""

    def __init__(self, cases: Iterable[LegalCase] = ()):
        self._cases: dict[str, LegalCase] = {}
        for case in cases:
            if case.id in self._cases:
                raise SchemaError(f"duplicate case id {case.id!r}")
            self._cases[case.id] = case

    def __len__(self) -> int:
        return len(self._cases)

    def __iter__(self) -> Iterator[LegalCase]:
        return iter(self._cases.values())

    def __contains__(self, case_id: str) -> bool:
        return case_id in self._cases

    def get(self, case_id: str) -> LegalCase:
        try:
            return self._cases[case_id]
        except KeyError:
            raise KeyError(f"unknown case id {case_id!r}") from None

    def ids(self) -> tuple[str, ...]:
        return tuple(self._cases)

    def stats(self) -> "StatsTable":
        counts: dict[tuple[Domain, ComplianceVerdict], int] = {}
        for case in self:
            key = (case.domain, case.gold)
            counts[key] = counts.get(key, 0) + 1
        return StatsTable(counts)


@dataclass(frozen=True)
class StatsTable:
    """Verdict-by-domain counts in the statistics-grid layout.

    Rows: Permitted / Prohibited / Not Applicable (+ Total); columns:
    HIPAA / GDPR / AI ACT (+ Total). Cell sums equal row and column totals
    by construction.
    """

    counts: Mapping[tuple[Domain, ComplianceVerdict], int]

    def cell(self, domain: Domain, verdict: ComplianceVerdict) -> int:
        return self.counts.get((domain, verdict), 0)

    def row_total(self, verdict: ComplianceVerdict) -> int:
        return sum(self.cell(d, verdict) for d in _CASE_DOMAINS)

    def column_total(self, domain: Domain) -> int:
        return sum(self.cell(domain, v) for v in _VERDICT_ROWS)

    @property
    def grand_total(self) -> int:
        return sum(self.counts.values())

    def to_json(self) -> dict:
        rows = {}
        for verdict in _VERDICT_ROWS:
            rows[verdict.value] = {
                **{d.display: self.cell(d, verdict) for d in _CASE_DOMAINS},
                "Total": self.row_total(verdict),
            }
        rows["Total"] = {
            **{d.display: self.column_total(d) for d in _CASE_DOMAINS},
            "Total": self.grand_total,
        }
        return rows

    def render_grid(self) -> str:
        """Plain-text grid; zero cells render as "-" like the published table."""
        row_names = {
            ComplianceVerdict.PERMITTED: "Permitted",
            ComplianceVerdict.PROHIBITED: "Prohibited",
            ComplianceVerdict.NOT_APPLICABLE: "Not Applicable",
        }

        def fmt(n: int) -> str:
            return f"{n:,}" if n else "-"

        header = ["Category"] + [d.display for d in _CASE_DOMAINS] + ["Total"]
        lines = [header]
        for verdict in _VERDICT_ROWS:
            lines.append(
                [row_names[verdict]]
                + [fmt(self.cell(d, verdict)) for d in _CASE_DOMAINS]
                + [fmt(self.row_total(verdict))]
            )
        lines.append(
            ["Total"]
            + [f"{self.column_total(d):,}" for d in _CASE_DOMAINS]
            + [f"{self.grand_total:,}"]
        )
        widths = [max(len(row[i]) for row in lines) for i in range(len(header))]
        out = []
        for row in lines:
            out.append("  ".join(cell.rjust(w) if i else cell.ljust(w)
                                 for i, (cell, w) in enumerate(zip(row, widths))))
        return "\n".join(out)


@dataclass(frozen=True)
class CaseIngestResult:
    store: CaseStore
    stats: StatsTable
    skipped: tuple[tuple[str, str], ...]  # (record id or index, reason)


def load_cases(document: Mapping) -> CaseIngestResult:
    """Build a case store from a case document ({"cases": [...]}).

    Records without a usable gold verdict (or otherwise invalid) are skipped
    and reported, never fatal; a malformed document is.
    """
    if not isinstance(document, Mapping) or "cases" not in document:
        raise SchemaError('case document must be an object with a "cases" list')
    records = document["cases"]
    if not isinstance(records, list):
        raise SchemaError('"cases" must be a list')

    cases: list[LegalCase] = []
    skipped: list[tuple[str, str]] = []
    for index, rec in enumerate(records):
        label = str(rec.get("id", f"#{index}")) if isinstance(rec, Mapping) else f"#{index}"
        if not isinstance(rec, Mapping):
            skipped.append((label, "record is not an object"))
            continue
        if "gold" not in rec or rec["gold"] in (None, ""):
            skipped.append((label, "missing gold verdict"))
            continue
        try:
            case = LegalCase(
                id=str(rec.get("id", "")),
                domain=Domain(rec["domain"]),
                narrative=rec.get("narrative", ""),
                gold=ComplianceVerdict(rec["gold"]),
                annotation=CaseAnnotation.from_json(rec.get("annotation", {})),
                cited_paths=tuple(tuple(p) for p in rec.get("cited_paths", ())),
            )
        except (KeyError, ValueError) as exc:
            skipped.append((label, str(exc)))
            continue
        cases.append(case)

    store = CaseStore(cases)
    return CaseIngestResult(store=store, stats=store.stats(), skipped=tuple(skipped))


def ingest_cases(path) -> CaseIngestResult:
    """Load a case JSON file from disk."""
    import json

    with open(path, encoding="utf-8") as fh:
        try:
            document = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid case file {path}: {exc}") from exc
    return load_cases(document)


@dataclass(frozen=True)
class SplitAssignment:
    train_ids: frozenset[str]
    test_ids: frozenset[str]
    ratio: float
    seed: int

    def to_json(self) -> dict:
        return {
            "ratio": self.ratio,
            "seed": self.seed,
            "train_ids": sorted(self.train_ids),
            "test_ids": sorted(self.test_ids),
        }


def split(store: CaseStore, ratio: float, seed: int) -> SplitAssignment:
    """Stratified train/test partition per (domain, verdict) cell.

    Train gets floor(cell_size * ratio) of each cell, the remainder goes to
    test. Deterministic for a given seed regardless of ingestion order.
    """
    if not (0.0 < ratio < 1.0):
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")

    cells: dict[tuple[str, str], list[str]] = {}
    for case in store:
        cells.setdefault((case.domain.value, case.gold.value), []).append(case.id)

    rng = random.Random(seed)
    train: set[str] = set()
    test: set[str] = set()
    for key in sorted(cells):
        ids = sorted(cells[key])
        rng.shuffle(ids)
        # epsilon guards IEEE products like 5*0.2 landing a hair off the integer
        n_train = math.floor(len(ids) * ratio + 1e-9)
        train.update(ids[:n_train])
        test.update(ids[n_train:])
    return SplitAssignment(frozenset(train), frozenset(test), ratio, seed)


@dataclass(frozen=True)
class KgTriple:
    """One sender-subject-recipient edge, with optional attribute tags."""

    sender: str
    subject: str
    recipient: str
    attributes: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        for name in ("sender", "subject", "recipient"):
            if not getattr(self, name):
                raise ValueError(f"triple {name} label must be non-empty")
        object.__setattr__(self, "attributes", frozenset(self.attributes))


class TripleStore:
    """Insertion-ordered triple store with per-position indexes."""

    def __init__(self) -> None:
        self._triples: list[KgTriple] = []
        self._index: dict[str, dict[str, list[int]]] = {
            "sender": {}, "subject": {}, "recipient": {},
        }
        self._frozen = False

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[KgTriple]:
        return iter(self._triples)

    def add(self, triple: KgTriple) -> None:
        if self._frozen:
            raise RuntimeError("triple store is frozen")
        idx = len(self._triples)
        self._triples.append(triple)
        for position in ("sender", "subject", "recipient"):
            self._index[position].setdefault(getattr(triple, position), []).append(idx)

    def freeze(self) -> "TripleStore":
        self._frozen = True
        return self

    def query(
        self,
        sender: str | None = None,
        subject: str | None = None,
        recipient: str | None = None,
    ) -> list[KgTriple]:
        """All triples matching every non-None position, in insertion order."""
        constraints = [
            (pos, value)
            for pos, value in (("sender", sender), ("subject", subject), ("recipient", recipient))
            if value is not None
        ]
        if not constraints:
            return list(self._triples)
        candidate_lists = []
        for pos, value in constraints:
            hits = self._index[pos].get(value)
            if not hits:
                return []
            candidate_lists.append(hits)
        candidate_lists.sort(key=len)
        result = set(candidate_lists[0])
        for hits in candidate_lists[1:]:
            result &= set(hits)
        return [self._triples[i] for i in sorted(result)]

    def role_labels(self, position: str | None = None) -> tuple[str, ...]:
        """Distinct labels seen at a position (or at any position), sorted."""
        if position is not None:
            if position not in self._index:
                raise ValueError(f"unknown position {position!r}")
            return tuple(sorted(self._index[position]))
        labels: set[str] = set()
        for pos_index in self._index.values():
            labels.update(pos_index)
        return tuple(sorted(labels))

    # -- flat file -----------------------------------------------------------

    def save_tsv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for t in self._triples:
                fh.write(f"{t.sender}\t{t.subject}\t{t.recipient}\t{','.join(sorted(t.attributes))}\n")

    @classmethod
    def load_tsv(cls, path) -> "TripleStore":
        store = cls()
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) not in (3, 4):
                    raise SchemaError(f"{path}:{line_no}: expected 3 or 4 tab-separated fields")
                attrs = frozenset(a for a in parts[3].split(",") if a) if len(parts) == 4 else frozenset()
                store.add(KgTriple(parts[0], parts[1], parts[2], attrs))
        return store
