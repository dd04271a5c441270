"""Exception types shared across the toolkit."""

from __future__ import annotations


class CikitError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(CikitError):
    """A document does not satisfy its JSON schema (bad shape, duplicate
    sibling identifier, level inversion, missing root, ...)."""


class VocabularyError(CikitError):
    """A flow references a role or information-type id that is not part of
    the enclosing context's vocabulary."""

    def __init__(self, kind: str, missing_id: str):
        self.kind = kind
        self.missing_id = missing_id
        super().__init__(f"unknown {kind} id: {missing_id!r}")


class PathNotFoundError(CikitError):
    """A regulation path does not resolve; carries the deepest prefix that did."""

    def __init__(self, path: tuple[str, ...], resolved_prefix: tuple[str, ...]):
        self.path = path
        self.resolved_prefix = resolved_prefix
        super().__init__(
            f"path {list(path)!r} not found; deepest resolvable prefix: {list(resolved_prefix)!r}"
        )


class PoolTooSmallError(CikitError):
    """The distractor candidate pool has fewer than three usable entries."""


class AnnotationMissingError(CikitError):
    """The case annotation lacks the label required for the requested category."""
