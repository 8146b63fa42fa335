"""Exception types shared across the package.

Every error carries the module it originated from and a stable machine
code so the command-line layer can emit structured diagnostics.
"""

from __future__ import annotations


class NormforgeError(Exception):
    """Base class; `module` and `code` are stable identifiers."""

    module = "normforge"
    code = "ERROR"

    def __init__(self, message: str, *, module: str | None = None, code: str | None = None):
        super().__init__(message)
        if module is not None:
            self.module = module
        if code is not None:
            self.code = code


class ShapeError(NormforgeError):
    """Operand shapes are incompatible."""

    module = "numerics"
    code = "SHAPE_MISMATCH"


class ContractError(NormforgeError):
    """An operation was called outside its contract (bad argument, bad state)."""

    module = "numerics"
    code = "CONTRACT"


class TreeValidationError(NormforgeError):
    """One or more structural violations in a raw comment list.

    `violations` is a list of (code, comment_id, message) triples covering
    every problem found, not just the first.
    """

    module = "trees"
    code = "TREE_INVALID"

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(f"{code}[{cid}]: {msg}" for code, cid, msg in self.violations)
        super().__init__(f"invalid discussion tree: {lines}")


class CorpusFormatError(NormforgeError):
    """Malformed corpus / grouping / checkpoint file."""

    module = "trees"
    code = "CORPUS_FORMAT"

    def __init__(self, message, *, line: int | None = None, offset: int | None = None, code=None):
        detail = message
        if line is not None:
            detail = f"line {line}: {detail}"
        if offset is not None:
            detail = f"{detail} (byte offset {offset})"
        super().__init__(detail, code=code)
        self.line = line
        self.offset = offset


class ConfigError(NormforgeError):
    """Invalid or inconsistent run configuration."""

    module = "config"
    code = "CONFIG"
