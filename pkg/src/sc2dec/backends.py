"""Text-generation backends: a chat-completions client plus deterministic stand-ins."""

from __future__ import annotations

import logging
import os
import random
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Protocol

import httpx

from .errors import BackendMisconfigured, NetworkError

log = logging.getLogger(__name__)

DEFAULT_MAX_NEW_TOKENS = 2048
DEFAULT_API_KEY_ENV = "SC2DEC_API_KEY"


@dataclass
class GenerationRequest:
    prompt: str
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS
    decoding: str = "greedy"
    stop_sequences: list[str] = field(default_factory=list)
    # carries sample_id for the deterministic backends
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.decoding != "greedy":
            raise ValueError("only greedy decoding is supported")
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be positive")


class Backend(Protocol):
    name: str

    def generate(self, req: GenerationRequest) -> str: ...


def _require_prompt(req: GenerationRequest) -> None:
    if not req.prompt:
        raise ValueError("prompt must be nonempty")


class NullModel:
    name = "null"

    def generate(self, req: GenerationRequest) -> str:
        _require_prompt(req)
        return ""


class EchoOracle:
    """Returns the reference source for the request's sample id."""

    name = "echo"

    def __init__(self, answer_map: Mapping[str, str]):
        self.answer_map = dict(answer_map)

    def generate(self, req: GenerationRequest) -> str:
        _require_prompt(req)
        sample_id = req.metadata.get("sample_id")
        if sample_id not in self.answer_map:
            raise BackendMisconfigured(f"echo oracle has no answer for sample {sample_id!r}")
        return self.answer_map[sample_id]


_DECL = re.compile(
    r"^\s*(?:(?:const|static|unsigned|signed|long|short|volatile|register|struct\s+\w+|enum\s+\w+)\s+)*"
    r"(?:int|char|long|short|float|double|void|bool|_Bool|size_t|int\d+_t|uint\d+_t|unsigned|signed)\b"
)


def statement_lines(source: str) -> list[int]:
    """Indices of lines that hold one complete, deletable statement.

    A candidate sits inside a function body, ends with ``;`` and is not a
    declaration or a ``for`` header, so dropping it leaves the code compilable.
    """
    candidates = []
    depth = 0
    for i, line in enumerate(source.splitlines()):
        stripped = line.strip()
        if (
            depth > 0
            and stripped.endswith(";")
            and "{" not in stripped
            and "}" not in stripped
            and not stripped.startswith(("for", "#", "//", "/*"))
            and not _DECL.match(stripped)
        ):
            candidates.append(i)
        depth += line.count("{") - line.count("}")
    return candidates


def drop_statement(source: str, seed: int, salt: str = "") -> str:
    lines = source.splitlines(keepends=True)
    candidates = statement_lines(source)
    if not candidates:
        return source
    rng = random.Random(f"{seed}:{salt}")
    victim = rng.choice(candidates)
    return "".join(line for i, line in enumerate(lines) if i != victim)


class Mutator:
    """Reference source with one statement removed, chosen by seed and sample id."""

    name = "mutator"

    def __init__(self, answer_map: Mapping[str, str], seed: int = 0):
        self.answer_map = dict(answer_map)
        self.seed = seed

    def generate(self, req: GenerationRequest) -> str:
        _require_prompt(req)
        sample_id = req.metadata.get("sample_id")
        if sample_id not in self.answer_map:
            raise BackendMisconfigured(f"mutator has no reference for sample {sample_id!r}")
        return drop_statement(self.answer_map[sample_id], self.seed, str(sample_id))


class RemoteChat:
    """Chat-completions client with temperature 0, retries and an in-flight cap."""

    name = "remote"

    def __init__(
        self,
        endpoint_url: str,
        model_name: str,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        max_in_flight: int = 4,
        attempts: int = 3,
        backoff_s: float = 1.0,
        timeout_s: float = 120.0,
        client: Optional[httpx.Client] = None,
    ):
        if not endpoint_url or not model_name:
            raise BackendMisconfigured("remote backend needs an endpoint and a model name")
        url = endpoint_url.rstrip("/")
        if not url.endswith("/chat/completions"):
            url += "/chat/completions"
        self.url = url
        self.model_name = model_name
        self.api_key_env = api_key_env
        self.attempts = attempts
        self.backoff_s = backoff_s
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._client = client or httpx.Client(timeout=timeout_s)

    def payload(self, req: GenerationRequest) -> dict:
        body = {
            "model": self.model_name,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": 0,
            "max_tokens": req.max_new_tokens,
        }
        if req.stop_sequences:
            body["stop"] = list(req.stop_sequences)
        return body

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def generate(self, req: GenerationRequest) -> str:
        _require_prompt(req)
        body = self.payload(req)
        last_error: Exception | None = None
        with self._slots:
            for attempt in range(self.attempts):
                try:
                    resp = self._client.post(self.url, json=body, headers=self._headers())
                    resp.raise_for_status()
                    data = resp.json()
                    return data["choices"][0]["message"]["content"] or ""
                except (httpx.HTTPError, ValueError, KeyError, IndexError) as exc:
                    last_error = exc
                    log.warning("chat request failed (attempt %d/%d): %s", attempt + 1, self.attempts, exc)
                    if attempt + 1 < self.attempts:
                        time.sleep(self.backoff_s * 2**attempt)
        raise NetworkError(f"chat completion failed: {last_error}", attempts=self.attempts)


_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


def extract_code(model_output: str) -> str:
    """Contents of the first fenced block, or the whole output trimmed."""
    m = _FENCE.search(model_output)
    if m:
        return m.group(1).strip()
    return model_output.strip()


def make_backend(kind: str, *, answer_map: Mapping[str, str] | None = None, seed: int = 0,
                 endpoint: str | None = None, model: str | None = None,
                 api_key_env: str = DEFAULT_API_KEY_ENV, max_in_flight: int = 4) -> Backend:
    if kind in ("null", "null_model"):
        return NullModel()
    if kind in ("echo", "echo_oracle"):
        if answer_map is None:
            raise BackendMisconfigured("echo backend needs reference sources")
        return EchoOracle(answer_map)
    if kind == "mutator":
        if answer_map is None:
            raise BackendMisconfigured("mutator backend needs reference sources")
        return Mutator(answer_map, seed)
    if kind == "remote":
        return RemoteChat(endpoint or "", model or "", api_key_env, max_in_flight=max_in_flight)
    raise BackendMisconfigured(f"unknown backend {kind!r}")
