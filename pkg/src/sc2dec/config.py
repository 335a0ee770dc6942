"""Declarative run configuration: a YAML/JSON file with per-flag overrides."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

import yaml

from .backends import DEFAULT_API_KEY_ENV, DEFAULT_MAX_NEW_TOKENS
from .prompting import PromptStrategy
from .toolchain import OPT_LEVELS, CompilerConfig, check_opt_level


@dataclass
class RunConfig:
    # backend
    backend: str = "null"
    endpoint: Optional[str] = None
    model: Optional[str] = None
    api_key_env: str = DEFAULT_API_KEY_ENV
    seed: int = 0
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS
    max_in_flight: int = 4
    # toolchain
    compiler: str = "gcc"
    opt_level: str = "O0"
    extra_flags: list[str] = field(default_factory=list)
    timeout: Optional[float] = None
    # strategy
    strategy: str = "sc2dec"
    template_family: str = "decompile_style"
    context_level: Optional[str] = None
    extra_rounds: int = 1
    levels: list[str] = field(default_factory=lambda: list(OPT_LEVELS))
    # paths
    corpus: Optional[str] = None
    benchmark: Optional[str] = None
    tasks: Optional[str] = None
    records: Optional[str] = None
    index: Optional[str] = None
    run_dir: Optional[str] = None
    # execution
    parallelism: int = 1
    force: bool = False
    # synthesize
    max_samples: Optional[int] = None
    reject_identifiers: list[str] = field(default_factory=list)
    # retrieval
    top_k: int = 1
    k1: float = 1.5
    b: float = 0.75
    # matrix
    context_levels: list[str] = field(default_factory=lambda: list(OPT_LEVELS))
    compilers: list[str] = field(default_factory=lambda: ["gcc"])

    def __post_init__(self):
        for lv in [self.opt_level, *self.levels, *self.context_levels]:
            check_opt_level(lv)
        if self.context_level is not None:
            check_opt_level(self.context_level)
        if self.parallelism < 1:
            raise ValueError("parallelism must be positive")

    @property
    def toolchain(self) -> CompilerConfig:
        return CompilerConfig(self.compiler, self.opt_level, False, tuple(self.extra_flags))

    @property
    def prompt_strategy(self) -> PromptStrategy:
        return PromptStrategy(self.strategy, self.template_family)

    def to_dict(self) -> dict:
        return asdict(self)

    def dump(self, path: Path | str) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


_LIST_FIELDS = {f.name for f in fields(RunConfig) if f.name in
                ("extra_flags", "levels", "reject_identifiers", "context_levels", "compilers")}


def _coerce(name: str, value: Any) -> Any:
    if name in _LIST_FIELDS and isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return value


def load_config(path: Optional[Path | str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """File values first, then every non-None override on top."""
    known = {f.name for f in fields(RunConfig)}
    values: dict[str, Any] = {}
    if path:
        data = yaml.safe_load(Path(path).read_text()) or {}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(data)
    for key, value in (overrides or {}).items():
        if key in known and value is not None:
            values[key] = value
    return RunConfig(**{k: _coerce(k, v) for k, v in values.items()})
