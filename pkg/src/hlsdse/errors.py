"""Exception types shared across the toolkit.

Every error carries a short ``code`` used in diagnostics and run manifests,
e.g. ``aes.c:12:5: SyntaxError: expected ';'``.
"""

from __future__ import annotations


class ForgeError(Exception):
    code = "Error"

    def __init__(self, message: str = "", *, file: str | None = None,
                 line: int | None = None, col: int | None = None):
        super().__init__(message)
        self.message = message
        self.file = file
        self.line = line
        self.col = col

    def diagnostic(self) -> str:
        """Render as ``file:line:col: code: message``."""
        file = self.file or "<unit>"
        line = self.line if self.line is not None else 0
        col = self.col if self.col is not None else 0
        return f"{file}:{line}:{col}: {self.code}: {self.message}"

    def __str__(self) -> str:
        return self.message


# kernel analysis

class KernelSyntaxError(ForgeError):
    code = "SyntaxError"


class UnsupportedConstruct(ForgeError):
    code = "UnsupportedConstruct"

    def __init__(self, construct: str, **kw):
        super().__init__(f"unsupported construct: {construct}", **kw)
        self.construct = construct


class AmbiguousTop(ForgeError):
    code = "AmbiguousTop"


class MissingTop(ForgeError):
    code = "MissingTop"


# pragma model

class InvalidConfig(ForgeError):
    code = "InvalidConfig"


class InsertionConflict(ForgeError):
    code = "InsertionConflict"


# QoR evaluation

class InvalidReport(ForgeError):
    code = "InvalidReport"


class NoResources(ForgeError):
    code = "NoResources"


class MalformedReport(ForgeError):
    code = "MalformedReport"

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class BackendUnavailable(ForgeError):
    code = "BackendUnavailable"


class UnknownPart(ForgeError):
    code = "UnknownPart"


# exploration

class SpaceExhausted(ForgeError):
    code = "SpaceExhausted"


class DegenerateFit(UserWarning):
    """All observed costs are identical; the surrogate is a constant mean."""


# metrics

class EmptyInput(ForgeError):
    code = "EmptyInput"


class EmptySet(ForgeError):
    code = "EmptySet"


class ZeroDenominator(ForgeError):
    code = "ZeroDenominator"


class LengthMismatch(ForgeError):
    code = "LengthMismatch"


class ZeroActual(ForgeError):
    code = "ZeroActual"


# dataset records

class IncompleteMeta(ForgeError):
    code = "IncompleteMeta"


class SchemaViolation(ForgeError):
    code = "SchemaViolation"

    def __init__(self, key: str, message: str | None = None):
        super().__init__(message or key)
        self.key = key


class RecordParseError(ForgeError):
    code = "ParseError"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class UnlabeledFront(ForgeError):
    code = "UnlabeledFront"


# orchestration

class NoKernels(ForgeError):
    code = "NoKernels"
