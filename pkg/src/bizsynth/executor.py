"""Read-only SQL execution against an embedded SQLite file, plus a scripted fake."""

from __future__ import annotations

import json
import sqlite3
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterator, Protocol, Sequence

from .errors import DbUnavailable

OK = "ok"
ERROR = "error"
TIMEOUT_MESSAGE = "timeout"

DEFAULT_ROW_LIMIT = 1000
DEFAULT_TIMEOUT = 30.0


@dataclass(frozen=True)
class ExecutionOutcome:
    status: str
    rows: tuple[tuple[Any, ...], ...] | None = None
    columns: tuple[str, ...] = ()
    error_message: str | None = None
    elapsed: float = 0.0
    truncated: bool = False

    def __post_init__(self) -> None:
        if self.status == OK and self.rows is None:
            raise ValueError("ok outcome requires rows")
        if self.status == ERROR and not self.error_message:
            raise ValueError("error outcome requires error_message")
        if self.status not in (OK, ERROR):
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def ok(self) -> bool:
        return self.status == OK

    @classmethod
    def success(cls, rows: Sequence[Sequence[Any]], columns: Sequence[str] = (), elapsed: float = 0.0) -> ExecutionOutcome:
        return cls(OK, tuple(tuple(r) for r in rows), tuple(columns), None, elapsed)

    @classmethod
    def failure(cls, message: str, elapsed: float = 0.0) -> ExecutionOutcome:
        return cls(ERROR, None, (), message, elapsed)

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "columns": list(self.columns),
            "rows": None if self.rows is None else [list(r) for r in self.rows],
            "error_message": self.error_message,
            "truncated": self.truncated,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExecutionOutcome:
        rows = data.get("rows")
        return cls(
            status=data["status"],
            rows=None if rows is None else tuple(tuple(r) for r in rows),
            columns=tuple(data.get("columns") or ()),
            error_message=data.get("error_message"),
            truncated=bool(data.get("truncated", False)),
        )


class Executor(Protocol):
    def execute(self, sql: str, row_limit: int = DEFAULT_ROW_LIMIT, timeout: float = DEFAULT_TIMEOUT) -> ExecutionOutcome: ...


def _cell(value: Any) -> Any:
    if isinstance(value, (bytes, bytearray, memoryview)):
        return bytes(value).hex()
    return value


class SqliteExecutor:
    """Opens a fresh read-only connection per call, so instances are safe to share across threads."""

    engine_name = "SQLite"

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.closed = False

    def close(self) -> None:
        self.closed = True

    @contextmanager
    def connect(self) -> Iterator[sqlite3.Connection]:
        if self.closed:
            raise DbUnavailable(f"executor for {self.path} is closed")
        if not self.path.is_file():
            raise DbUnavailable(f"database file not found: {self.path}")
        try:
            conn = sqlite3.connect(self.path.resolve().as_uri() + "?mode=ro", uri=True, check_same_thread=False)
        except sqlite3.Error as exc:
            raise DbUnavailable(str(exc)) from exc
        try:
            conn.execute("PRAGMA query_only = 1")
            yield conn
        finally:
            conn.close()

    def execute(self, sql: str, row_limit: int = DEFAULT_ROW_LIMIT, timeout: float = DEFAULT_TIMEOUT) -> ExecutionOutcome:
        started = time.perf_counter()
        try:
            with self.connect() as conn:
                deadline = started + timeout
                conn.set_progress_handler(lambda: int(time.perf_counter() > deadline), 1000)
                try:
                    cursor = conn.execute(sql)
                    rows = cursor.fetchmany(row_limit + 1)
                except sqlite3.OperationalError as exc:
                    if "interrupted" in str(exc) and time.perf_counter() > deadline:
                        return ExecutionOutcome.failure(TIMEOUT_MESSAGE, time.perf_counter() - started)
                    return ExecutionOutcome.failure(str(exc), time.perf_counter() - started)
                except (sqlite3.Error, sqlite3.Warning, ValueError) as exc:
                    return ExecutionOutcome.failure(str(exc), time.perf_counter() - started)
                columns = tuple(d[0] for d in cursor.description or ())
        except DbUnavailable as exc:
            return ExecutionOutcome.failure(f"database unavailable: {exc}", time.perf_counter() - started)
        truncated = len(rows) > row_limit
        rows = rows[:row_limit]
        return ExecutionOutcome(
            OK,
            tuple(tuple(_cell(v) for v in r) for r in rows),
            columns,
            None,
            time.perf_counter() - started,
            truncated,
        )


@dataclass
class ScriptedExecutor:
    """Fake executor driven by a script.

    ``script`` is either a list of outcomes consumed in order (the last one repeats)
    or a callable ``sql -> ExecutionOutcome``. An optional ``delay`` simulates slow
    queries; calls slower than the timeout produce a timeout outcome.
    """

    script: list[ExecutionOutcome] | Callable[[str], ExecutionOutcome]
    delay: float = 0.0
    calls: list[str] = field(default_factory=list)
    engine_name: str = "SQLite"

    def __post_init__(self) -> None:
        self._lock = threading.Lock()

    def execute(self, sql: str, row_limit: int = DEFAULT_ROW_LIMIT, timeout: float = DEFAULT_TIMEOUT) -> ExecutionOutcome:
        with self._lock:
            index = len(self.calls)
            self.calls.append(sql)
        if self.delay:
            if self.delay > timeout:
                time.sleep(timeout)
                return ExecutionOutcome.failure(TIMEOUT_MESSAGE, timeout)
            time.sleep(self.delay)
        if callable(self.script):
            outcome = self.script(sql)
        else:
            outcome = self.script[min(index, len(self.script) - 1)]
        if outcome.ok and outcome.rows is not None and len(outcome.rows) > row_limit:
            return ExecutionOutcome(OK, outcome.rows[:row_limit], outcome.columns, None, outcome.elapsed, True)
        return outcome


def render_outcome(outcome: ExecutionOutcome, max_rows: int = 20) -> str:
    """Deterministic text rendering used as agent observations."""
    if not outcome.ok:
        return f"ERROR: {outcome.error_message}"
    rows = outcome.rows or ()
    lines = []
    if outcome.columns:
        lines.append(" | ".join(outcome.columns))
    for row in rows[:max_rows]:
        lines.append(" | ".join(json.dumps(v, ensure_ascii=False) for v in row))
    hidden = len(rows) - min(len(rows), max_rows)
    if hidden:
        lines.append(f"... {hidden} more row(s)")
    suffix = ", truncated at row limit" if outcome.truncated else ""
    lines.append(f"({len(rows)} row{'s' if len(rows) != 1 else ''}{suffix})")
    return "\n".join(lines)
