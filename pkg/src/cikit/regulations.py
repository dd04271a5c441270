"""Hierarchical regulation store: law -> chapter -> article -> point.

Regulations load from a JSON tree document (one per law) into a single
store addressable by paths of identifiers, e.g.
``["GDPR", "Chapter III", "Article 17"]``. Nodes carry the provision text;
transmission principles can be attached to nodes during the build phase and
gathered per subtree when assembling contexts.

The store is build-then-freeze: ingest and attach_norms mutate only before
:meth:`RegulationStore.freeze`; afterwards it is read-only and safe to share.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, Sequence

from .ci import Domain, TransmissionPrinciple, principle_to_json
from .errors import PathNotFoundError, SchemaError

__all__ = [
    "Level",
    "RegulationNode",
    "RegulationPath",
    "IngestReport",
    "RegulationStore",
    "ingest_regulations",
]


class Level(str, Enum):
    LAW = "LAW"
    CHAPTER = "CHAPTER"
    ARTICLE = "ARTICLE"
    POINT = "POINT"
    OTHER = "OTHER"


# Depth rank for the inversion check; OTHER is exempt (fits anywhere).
_LEVEL_RANK = {Level.LAW: 0, Level.CHAPTER: 1, Level.ARTICLE: 2, Level.POINT: 3}


RegulationPath = tuple[str, ...]


@dataclass
class RegulationNode:
    law: Domain
    level: Level
    identifier: str
    title: str = ""
    text: str = ""
    children: list["RegulationNode"] = field(default_factory=list)

    def child(self, identifier: str) -> "RegulationNode | None":
        for node in self.children:
            if node.identifier == identifier:
                return node
        return None


@dataclass(frozen=True)
class IngestReport:
    """Node counts per level for one ingested document."""

    counts: Mapping[str, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def _node_from_json(data: Mapping, law: Domain, sibling_path: RegulationPath,
                    parent_level: Level | None) -> RegulationNode:
    try:
        level = Level(data["level"])
        identifier = data["identifier"]
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"bad regulation node at {list(sibling_path)!r}: {exc}") from exc
    if not identifier:
        raise SchemaError(f"empty identifier under {list(sibling_path)!r}")

    path = sibling_path + (identifier,)
    if parent_level is not None and level in _LEVEL_RANK and parent_level in _LEVEL_RANK:
        if _LEVEL_RANK[level] < _LEVEL_RANK[parent_level]:
            raise SchemaError(
                f"level inversion at {list(path)!r}: {level.value} under {parent_level.value}"
            )

    node = RegulationNode(
        law=law,
        level=level,
        identifier=identifier,
        title=data.get("title", ""),
        text=data.get("text", ""),
    )
    seen: set[str] = set()
    for child_data in data.get("children", ()):
        child = _node_from_json(child_data, law, path, level)
        if child.identifier in seen:
            raise SchemaError(f"duplicate sibling identifier {child.identifier!r} at {list(path)!r}")
        seen.add(child.identifier)
        node.children.append(child)
    return node


def _node_to_json(node: RegulationNode) -> dict:
    data: dict = {
        "level": node.level.value,
        "identifier": node.identifier,
        "title": node.title,
        "text": node.text,
    }
    if node.children:
        data["children"] = [_node_to_json(c) for c in node.children]
    return data


class RegulationStore:
    """Multiple law trees, addressable by identifier paths."""

    def __init__(self) -> None:
        self._roots: dict[str, RegulationNode] = {}
        self._norms: dict[RegulationPath, list[TransmissionPrinciple]] = {}
        self._frozen = False

    # -- build phase --------------------------------------------------------

    def ingest_document(self, document: Mapping) -> IngestReport:
        """Add one law tree; the document is the root node plus a "law" field."""
        self._check_writable()
        if not document or "law" not in document or "identifier" not in document:
            raise SchemaError("no root law node")
        try:
            law = Domain(document["law"])
        except ValueError as exc:
            raise SchemaError(f"unknown law {document['law']!r}") from exc
        root = _node_from_json(document, law, (), None)
        if root.level is not Level.LAW:
            raise SchemaError(f"root node must have level LAW, got {root.level.value}")
        if root.identifier in self._roots:
            raise SchemaError(f"law root {root.identifier!r} already ingested")
        self._roots[root.identifier] = root

        counts: dict[str, int] = {}
        for _, node in self.walk(root.identifier):
            counts[node.level.value] = counts.get(node.level.value, 0) + 1
        return IngestReport(counts)

    def attach_norms(self, path: Sequence[str], principles: Iterable[TransmissionPrinciple]) -> None:
        """Attach principles to the node at ``path`` (build phase only).

        Each principle's provenance must equal the path; unset provenance is
        stamped with it.
        """
        self._check_writable()
        path = tuple(path)
        self.get(path)  # raises PathNotFoundError
        bucket = self._norms.setdefault(path, [])
        for p in principles:
            if p.provenance is None:
                p = TransmissionPrinciple(
                    id=p.id, effect=p.effect,
                    sender_matcher=p.sender_matcher, subject_matcher=p.subject_matcher,
                    recipient_matcher=p.recipient_matcher, info_matcher=p.info_matcher,
                    conditions=p.conditions, provenance=path,
                )
            elif tuple(p.provenance) != path:
                raise ValueError(
                    f"principle {p.id!r} provenance {list(p.provenance)!r} does not match {list(path)!r}"
                )
            bucket.append(p)

    def freeze(self) -> "RegulationStore":
        self._frozen = True
        return self

    def _check_writable(self) -> None:
        if self._frozen:
            raise RuntimeError("store is frozen; mutation only allowed during the build phase")

    # -- read phase ----------------------------------------------------------

    @property
    def laws(self) -> tuple[str, ...]:
        return tuple(sorted(self._roots))

    def get(self, path: Sequence[str]) -> RegulationNode:
        path = tuple(path)
        if not path:
            raise PathNotFoundError((), ())
        node = self._roots.get(path[0])
        if node is None:
            raise PathNotFoundError(path, ())
        resolved = (path[0],)
        for segment in path[1:]:
            child = node.child(segment)
            if child is None:
                raise PathNotFoundError(path, resolved)
            node = child
            resolved = resolved + (segment,)
        return node

    def walk(self, law: str | None = None) -> Iterator[tuple[RegulationPath, RegulationNode]]:
        """Pre-order traversal of (path, node); roots in sorted identifier order."""
        roots = [law] if law is not None else list(self.laws)
        for root_id in roots:
            root = self._roots.get(root_id)
            if root is None:
                raise PathNotFoundError((root_id,), ())
            stack: list[tuple[RegulationPath, RegulationNode]] = [((root_id,), root)]
            while stack:
                path, node = stack.pop()
                yield path, node
                for child in reversed(node.children):
                    stack.append((path + (child.identifier,), child))

    def search(self, keyword: str, law: str | None = None) -> list[tuple[RegulationPath, str]]:
        """Case-insensitive substring search over title+text.

        Returns (path, snippet) pairs in traversal order; snippet surrounds
        the first match. Empty keyword is an error; no match yields [].
        """
        if not keyword:
            raise ValueError("empty query")
        needle = keyword.casefold()
        results: list[tuple[RegulationPath, str]] = []
        for path, node in self.walk(law):
            haystack = f"{node.title}\n{node.text}"
            idx = haystack.casefold().find(needle)
            if idx < 0:
                continue
            lo = max(0, idx - 40)
            hi = min(len(haystack), idx + len(keyword) + 40)
            snippet = haystack[lo:hi].replace("\n", " ").strip()
            results.append((path, snippet))
        return results

    def norms_at(self, path: Sequence[str]) -> tuple[TransmissionPrinciple, ...]:
        return tuple(self._norms.get(tuple(path), ()))

    def gather_norms(self, path: Sequence[str]) -> tuple[TransmissionPrinciple, ...]:
        """All principles attached anywhere in the subtree rooted at ``path``.

        Traversal order, then insertion order within a node.
        """
        root_path = tuple(path)
        self.get(root_path)
        gathered: list[TransmissionPrinciple] = []
        law = root_path[0]
        for node_path, _ in self.walk(law):
            if node_path[:len(root_path)] == root_path:
                gathered.extend(self._norms.get(node_path, ()))
        return tuple(gathered)

    # -- export --------------------------------------------------------------

    def export_document(self, law: str) -> dict:
        root = self.get((law,))
        data = _node_to_json(root)
        data["law"] = root.law.value
        return data

    def export_text(self, law: str) -> str:
        """Canonical JSON text; ingest(export_text) -> export_text is byte-identical."""
        return json.dumps(self.export_document(law), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def export_norms(self, law: str) -> list[dict]:
        out = []
        for path, _ in self.walk(law):
            for p in self._norms.get(path, ()):
                out.append(principle_to_json(p))
        return out


def ingest_regulations(document: Mapping) -> tuple[RegulationStore, IngestReport]:
    """Build a fresh store from one regulation document."""
    store = RegulationStore()
    report = store.ingest_document(document)
    return store, report
