"""Chat-completion providers (OpenAI-compatible HTTP, fixture replay, scripted) and JSON helpers."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Protocol

import httpx

from .errors import (
    ConfigError,
    FixtureMissing,
    GenerationFailed,
    MalformedJson,
    MissingBinding,
    NoJsonFound,
    TransportError,
)

logger = logging.getLogger(__name__)

HTTP_KIND = "http_openai_compatible"
MOCK_KIND = "mock_fixture"
INDEX_FILE = "index.json"

GENERATION_TEMPERATURE = 0.7
JUDGE_TEMPERATURE = 0.0


@dataclass(frozen=True)
class ChatRequest:
    model_name: str
    system_prompt: str
    user_prompt: str
    temperature: float = GENERATION_TEMPERATURE
    max_output_tokens: int = 4096
    seed: int | None = None
    # Fallback lookup name for fixture replay; ignored by HTTP providers.
    tag: str | None = None

    def __post_init__(self) -> None:
        if not self.system_prompt or not self.user_prompt:
            raise ValueError("system_prompt and user_prompt must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be > 0")

    @property
    def key(self) -> str:
        return request_key(self.system_prompt, self.user_prompt)


@dataclass(frozen=True)
class ChatResponse:
    raw_text: str
    provider_name: str
    latency: float = 0.0
    input_tokens: int = 0
    output_tokens: int = 0


@dataclass(frozen=True)
class ProviderConfig:
    kind: str
    name: str = "default"
    model_name: str = "default"
    endpoint_url: str = ""
    api_key_env_var: str = ""
    fixture_directory: Path | None = None
    retry_limit: int = 3
    backoff_base: float = 1.0
    timeout: float = 120.0
    temperature: float | None = None
    max_output_tokens: int = 4096
    seed: int | None = None
    max_in_flight: int | None = None

    def __post_init__(self) -> None:
        if self.kind == HTTP_KIND:
            if not self.endpoint_url:
                raise ConfigError(f"provider {self.name!r}: http kind requires endpoint_url")
        elif self.kind == MOCK_KIND:
            if self.fixture_directory is None:
                raise ConfigError(f"provider {self.name!r}: mock kind requires fixture_directory")
            object.__setattr__(self, "fixture_directory", Path(self.fixture_directory))
        else:
            raise ConfigError(f"provider {self.name!r}: unknown kind {self.kind!r}")
        if self.retry_limit < 0:
            raise ConfigError(f"provider {self.name!r}: retry_limit must be >= 0")


def request_key(system_prompt: str, user_prompt: str) -> str:
    digest = hashlib.sha256()
    digest.update(system_prompt.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(user_prompt.encode("utf-8"))
    return digest.hexdigest()


class Provider(Protocol):
    name: str
    model_name: str

    def complete(self, request: ChatRequest) -> ChatResponse: ...


class _InFlight:
    def __init__(self, limit: int | None):
        self._sem = threading.BoundedSemaphore(limit) if limit else None

    def __enter__(self) -> None:
        if self._sem:
            self._sem.acquire()

    def __exit__(self, *exc: object) -> None:
        if self._sem:
            self._sem.release()


class HttpProvider:
    """OpenAI-compatible ``/chat/completions`` client with transport-level retries."""

    def __init__(self, config: ProviderConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self.name = config.name
        self.model_name = config.model_name
        self._client = httpx.Client(timeout=config.timeout, transport=transport)
        self._gate = _InFlight(config.max_in_flight)
        self.sleep = time.sleep

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.api_key_env_var:
            token = os.environ.get(self.config.api_key_env_var, "")
            if token:
                headers["Authorization"] = f"Bearer {token}"
        return headers

    def payload(self, request: ChatRequest) -> dict[str, Any]:
        body: dict[str, Any] = {
            "model": request.model_name,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        if request.seed is not None:
            body["seed"] = request.seed
        return body

    def complete(self, request: ChatRequest) -> ChatResponse:
        body = self.payload(request)
        last_error = ""
        attempts = self.config.retry_limit + 1
        for attempt in range(attempts):
            if attempt:
                self.sleep(self.config.backoff_base * (2 ** (attempt - 1)))
            started = time.perf_counter()
            try:
                with self._gate:
                    resp = self._client.post(self.config.endpoint_url, json=body, headers=self._headers())
            except httpx.TransportError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                logger.warning("provider %s attempt %d failed: %s", self.name, attempt + 1, last_error)
                continue
            if resp.status_code >= 500 or resp.status_code == 429:
                last_error = f"HTTP {resp.status_code}"
                logger.warning("provider %s attempt %d got %s", self.name, attempt + 1, last_error)
                continue
            if resp.status_code >= 400:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:500]}")
            try:
                data = resp.json()
            except ValueError as exc:
                raise TransportError(f"non-JSON response body: {exc}") from exc
            choices = data.get("choices") or []
            message = (choices[0].get("message") or {}) if choices else {}
            usage = data.get("usage") or {}
            return ChatResponse(
                raw_text=str(message.get("content") or ""),
                provider_name=self.name,
                latency=time.perf_counter() - started,
                input_tokens=int(usage.get("prompt_tokens") or 0),
                output_tokens=int(usage.get("completion_tokens") or 0),
            )
        raise TransportError(f"provider {self.name}: gave up after {attempts} attempt(s): {last_error}")


class MockProvider:
    """Replays fixture files.

    ``index.json`` maps request keys (see :func:`request_key`) or fixture names to
    file names inside the fixture directory. Lookup tries the key first, then the
    request tag.
    """

    def __init__(self, config: ProviderConfig):
        self.config = config
        self.name = config.name
        self.model_name = config.model_name
        self.directory = Path(config.fixture_directory or ".")
        index_path = self.directory / INDEX_FILE
        if index_path.exists():
            self.index: dict[str, str] = json.loads(index_path.read_text(encoding="utf-8"))
        else:
            self.index = {}

    def lookup(self, key: str, tag: str | None = None) -> str:
        filename = self.index.get(key)
        if filename is None and tag is not None:
            filename = self.index.get(tag)
        if filename is None:
            raise FixtureMissing(key, tag)
        return (self.directory / filename).read_text(encoding="utf-8")

    def complete(self, request: ChatRequest) -> ChatResponse:
        text = self.lookup(request.key, request.tag)
        return ChatResponse(raw_text=text, provider_name=self.name)


class ScriptedProvider:
    """Provider backed by a Python callable; used in tests and the demo author."""

    def __init__(self, respond: Callable[[ChatRequest], str], name: str = "scripted", model_name: str = "scripted"):
        self.respond = respond
        self.name = name
        self.model_name = model_name
        self.calls: list[ChatRequest] = []
        self._lock = threading.Lock()

    def complete(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            self.calls.append(request)
        return ChatResponse(raw_text=self.respond(request), provider_name=self.name)


class RecordingProvider:
    """Wraps another provider and writes every response as a replayable fixture."""

    def __init__(self, inner: Provider, directory: Path):
        self.inner = inner
        self.name = inner.name
        self.model_name = inner.model_name
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.index: dict[str, str] = {}
        self._lock = threading.Lock()

    def complete(self, request: ChatRequest) -> ChatResponse:
        response = self.inner.complete(request)
        key = request.key
        filename = f"{key[:24]}.txt"
        with self._lock:
            (self.directory / filename).write_text(response.raw_text, encoding="utf-8")
            self.index[key] = filename
        return response

    def save_index(self) -> Path:
        path = self.directory / INDEX_FILE
        path.write_text(json.dumps(dict(sorted(self.index.items())), indent=1) + "\n", encoding="utf-8")
        return path


def make_provider(config: ProviderConfig) -> Provider:
    if config.kind == HTTP_KIND:
        return HttpProvider(config)
    return MockProvider(config)


def complete(config: ProviderConfig, request: ChatRequest) -> ChatResponse:
    return make_provider(config).complete(request)


# --- JSON extraction -----------------------------------------------------------

_DECODER = json.JSONDecoder()


def extract_json(raw_text: str) -> Any:
    """Parse ``raw_text`` as JSON, falling back to the first decodable ``{...}`` object.

    Markdown fences and surrounding prose are tolerated.
    """
    text = (raw_text or "").strip()
    try:
        return json.loads(text)
    except ValueError:
        pass
    starts = [m.start() for m in re.finditer(r"\{", text)]
    if not starts:
        raise NoJsonFound("no JSON object in response")
    for start in starts:
        try:
            value, _ = _DECODER.raw_decode(text, start)
        except ValueError:
            continue
        return value
    raise MalformedJson("response contains braces but no parseable JSON object")


# --- templates -----------------------------------------------------------------

PLACEHOLDER = re.compile(r"\{\{([A-Za-z_][A-Za-z0-9_]*)\}\}")


def placeholders(template: str) -> list[str]:
    seen: list[str] = []
    for name in PLACEHOLDER.findall(template):
        if name not in seen:
            seen.append(name)
    return seen


def render_template(template: str, bindings: dict[str, str]) -> str:
    missing = [name for name in placeholders(template) if name not in bindings]
    if missing:
        raise MissingBinding(missing)
    return PLACEHOLDER.sub(lambda m: str(bindings[m.group(1)]), template)


def split_prompt(rendered: str) -> tuple[str, str]:
    """Split a rendered template into (system, user) at the first blank line.

    Joining the parts with a blank line restores the rendered text exactly.
    """
    head, sep, tail = rendered.partition("\n\n")
    if not sep or not tail.strip():
        return head, rendered
    return head, tail


# --- stage-level structured requests ---------------------------------------------


@dataclass
class Asker:
    """Sends a prompt, parses JSON and validates it, re-prompting within a budget.

    ``validate`` returns the parsed domain value or raises ``ValueError``/``KeyError``/
    ``TypeError`` describing what is wrong with the content.
    """

    provider: Provider
    temperature: float = GENERATION_TEMPERATURE
    max_output_tokens: int = 4096
    attempts: int = 3
    seed: int | None = None

    def ask(self, stage: str, rendered: str, validate: Callable[[Any], Any], tag: str | None = None) -> Any:
        if self.attempts < 1:
            raise ValueError("attempts must be >= 1")
        system, user = split_prompt(rendered)
        reason = ""
        for attempt in range(1, self.attempts + 1):
            request = ChatRequest(
                model_name=self.provider.model_name,
                system_prompt=system,
                user_prompt=user,
                temperature=self.temperature,
                max_output_tokens=self.max_output_tokens,
                seed=None if self.seed is None else self.seed + attempt - 1,
                tag=tag,
            )
            response = self.provider.complete(request)
            try:
                return validate(extract_json(response.raw_text))
            except (NoJsonFound, MalformedJson, ValueError, KeyError, TypeError, AttributeError) as exc:
                reason = f"{type(exc).__name__}: {exc}"
                logger.info("%s attempt %d rejected: %s", stage, attempt, reason)
        raise GenerationFailed(stage, reason, self.attempts)
