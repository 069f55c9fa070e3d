"""Exception hierarchy shared by every pipeline stage."""

from __future__ import annotations


class BizSynthError(Exception):
    """Base class for all package errors."""


class ConfigError(BizSynthError):
    pass


class UnknownSeniority(BizSynthError, ValueError):
    pass


class UnknownLevel(BizSynthError, ValueError):
    pass


class TransportError(BizSynthError):
    pass


class FixtureMissing(BizSynthError):
    def __init__(self, key: str, tag: str | None = None):
        self.key = key
        self.tag = tag
        detail = f"no fixture for request key {key}"
        if tag:
            detail += f" (tag {tag!r})"
        super().__init__(detail)


class NoJsonFound(BizSynthError, ValueError):
    pass


class MalformedJson(BizSynthError, ValueError):
    pass


class MissingBinding(BizSynthError, KeyError):
    def __init__(self, names: list[str]):
        self.names = list(names)
        super().__init__(f"unbound placeholders: {', '.join(self.names)}")

    def __str__(self) -> str:
        return self.args[0]


class GenerationFailed(BizSynthError):
    """Raised when an LLM stage cannot produce valid content within its retry budget."""

    def __init__(self, stage: str, reason: str, attempts: int = 1):
        self.stage = stage
        self.reason = reason
        self.attempts = attempts
        super().__init__(f"{stage}: {reason} (after {attempts} attempt(s))")


class DbUnavailable(BizSynthError):
    pass


class EmptySubset(BizSynthError):
    pass


class EmptyInput(BizSynthError, ValueError):
    pass


class IoError(BizSynthError, OSError):
    pass


class ParseError(BizSynthError, ValueError):
    def __init__(self, line: int, reason: str, field: str | None = None):
        self.line = line
        self.reason = reason
        self.field = field
        super().__init__(f"line {line}: {reason}")


class InsufficientLevel(BizSynthError):
    def __init__(self, level: str, available: int, wanted: int):
        self.level = level
        self.available = available
        self.wanted = wanted
        super().__init__(f"level {level} has {available} candidates, {wanted} requested")


class MissingPrediction(BizSynthError, KeyError):
    def __init__(self, sample_id: str):
        self.sample_id = sample_id
        super().__init__(f"no prediction for sample {sample_id}")

    def __str__(self) -> str:
        return self.args[0]
