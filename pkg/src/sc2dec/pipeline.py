"""The self-constructed-context decompilation loop.

Round one decompiles the target with the strategy's prompt. If that output
compiles, it is compiled and disassembled again to get an (asm, source) pair
that is placed in front of the original target for another decompilation.
"""

from __future__ import annotations

import logging
import re
import tempfile
from dataclasses import dataclass, field
from typing import Optional

from . import disasm, toolchain
from .backends import Backend, GenerationRequest, extract_code, DEFAULT_MAX_NEW_TOKENS
from .errors import DisassemblyFailed, ToolTimeout
from .prompting import (
    ContextExample,
    PromptStrategy,
    Provenance,
    StrategyKind,
    fixed_one_shot_example,
    render_vanilla,
    render_with_context,
)
from .retrieval import AsmIndex, query
from .toolchain import CompilerConfig, OutputKind, check_opt_level

log = logging.getLogger(__name__)

STANDARD_PRELUDE = """#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <math.h>
#include <ctype.h>
#include <stdbool.h>
#include <stdint.h>
"""

_INCLUDE = re.compile(r"^\s*#\s*include\b", re.MULTILINE)

# crt stubs gcc links into every shared object
_RUNTIME_SYMBOLS = frozenset({
    "deregister_tm_clones", "register_tm_clones", "__do_global_dtors_aux",
    "frame_dummy", "_start", "_init", "_fini",
})


def wrap_translation_unit(decompiled: str) -> str:
    if _INCLUDE.search(decompiled):
        return decompiled
    return STANDARD_PRELUDE + "\n" + decompiled + ("" if decompiled.endswith("\n") else "\n")


@dataclass
class DecompilationTask:
    sample_id: str
    target_asm: str
    opt_level: str
    strategy: PromptStrategy = field(default_factory=PromptStrategy)
    context_compiler: CompilerConfig = field(default_factory=CompilerConfig)
    context_opt_level_override: Optional[str] = None

    def __post_init__(self):
        check_opt_level(self.opt_level)
        if self.context_opt_level_override is not None:
            check_opt_level(self.context_opt_level_override)

    @property
    def key(self) -> tuple[str, str]:
        return (self.sample_id, self.opt_level)

    @property
    def context_level(self) -> str:
        return self.context_opt_level_override or self.opt_level

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "target_asm": self.target_asm,
            "opt_level": self.opt_level,
            "strategy": self.strategy.to_dict(),
            "context_compiler": self.context_compiler.to_dict(),
            "context_opt_level_override": self.context_opt_level_override,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DecompilationTask":
        strategy = data.get("strategy") or {}
        return cls(
            sample_id=str(data["sample_id"]),
            target_asm=data["target_asm"],
            opt_level=data["opt_level"],
            strategy=PromptStrategy(**strategy) if strategy else PromptStrategy(),
            context_compiler=CompilerConfig.from_dict(data.get("context_compiler") or {}),
            context_opt_level_override=data.get("context_opt_level_override"),
        )


@dataclass
class DecompilationRecord:
    sample_id: str
    opt_level: str
    strategy: str
    initial_output: str
    initial_compilable: bool
    context: Optional[ContextExample]
    final_output: str
    rounds: int
    diagnostics: str = ""
    initial_prompt: str = ""
    final_prompt: str = ""
    context_opt_level: Optional[str] = None
    context_compiler_id: Optional[str] = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.sample_id, self.opt_level)

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "opt_level": self.opt_level,
            "strategy": self.strategy,
            "initial_output": self.initial_output,
            "initial_compilable": self.initial_compilable,
            "context": self.context.to_dict() if self.context else None,
            "final_output": self.final_output,
            "rounds": self.rounds,
            "diagnostics": self.diagnostics,
            "initial_prompt": self.initial_prompt,
            "final_prompt": self.final_prompt,
            "context_opt_level": self.context_opt_level,
            "context_compiler_id": self.context_compiler_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DecompilationRecord":
        ctx = data.get("context")
        return cls(
            sample_id=str(data["sample_id"]),
            opt_level=data["opt_level"],
            strategy=data.get("strategy", ""),
            initial_output=data["initial_output"],
            initial_compilable=bool(data["initial_compilable"]),
            context=ContextExample.from_dict(ctx) if ctx else None,
            final_output=data["final_output"],
            rounds=int(data["rounds"]),
            diagnostics=data.get("diagnostics", ""),
            initial_prompt=data.get("initial_prompt", ""),
            final_prompt=data.get("final_prompt", ""),
            context_opt_level=data.get("context_opt_level"),
            context_compiler_id=data.get("context_compiler_id"),
        )


@dataclass
class SelfContext:
    """Result of recompiling a candidate decompilation."""

    compilable: bool
    asm: str = ""
    diagnostics: str = ""
    command_line: str = ""


def _defined_functions(raw: str, source: str) -> list[str]:
    names = []
    for name in disasm.list_functions(raw, ".text"):
        if name in _RUNTIME_SYMBOLS:
            continue
        if re.search(rf"\b{re.escape(name)}\b", source):
            names.append(name)
    return names


def self_construct(code: str, cfg: CompilerConfig, timeout_s: Optional[float] = None) -> SelfContext:
    """Compile ``code`` as a shared library and return the cleaned asm of what it defines."""
    if not code.strip():
        return SelfContext(False, diagnostics="empty decompilation output")
    probe_cfg = cfg.with_flags("-lm")
    with tempfile.TemporaryDirectory(prefix="sc2dec-ctx-") as work:
        try:
            outcome = toolchain.compile_source(
                wrap_translation_unit(code), "candidate", probe_cfg,
                OutputKind.SHARED_LIBRARY, work, timeout_s,
            )
        except ToolTimeout as exc:
            return SelfContext(False, diagnostics=str(exc))
        if not outcome.success:
            return SelfContext(False, diagnostics=outcome.diagnostics, command_line=outcome.command_line)
        try:
            raw = toolchain.disassemble(outcome.artifact_path, timeout_s=timeout_s)
        except (DisassemblyFailed, ToolTimeout) as exc:
            return SelfContext(False, diagnostics=str(exc), command_line=outcome.command_line)
    names = _defined_functions(raw, code)
    if not names:
        return SelfContext(False, diagnostics="output defines no functions", command_line=outcome.command_line)
    if len(names) == 1:
        asm = disasm.extract_function(raw, names[0]).text
    else:
        asm = "\n".join(f"{n}:\n{disasm.extract_function(raw, n).text}" for n in names)
    return SelfContext(True, asm=asm, diagnostics=outcome.diagnostics, command_line=outcome.command_line)


class Sc2decPipeline:
    """Runs decompilation tasks against one backend.

    ``extra_rounds`` counts the self-constructed-context rounds after the
    first decompilation; the default is one.
    """

    def __init__(
        self,
        backend: Backend,
        index: Optional[AsmIndex] = None,
        max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS,
        extra_rounds: int = 1,
        timeout_s: Optional[float] = None,
    ):
        self.backend = backend
        self.index = index
        self.max_new_tokens = max_new_tokens
        self.extra_rounds = extra_rounds
        self.timeout_s = timeout_s

    def _generate(self, prompt: str, task: DecompilationTask) -> str:
        req = GenerationRequest(
            prompt=prompt,
            max_new_tokens=self.max_new_tokens,
            metadata={"sample_id": task.sample_id, "opt_level": task.opt_level},
        )
        return extract_code(self.backend.generate(req))

    def initial_prompt(self, task: DecompilationTask) -> str:
        family = task.strategy.template_family
        kind = task.strategy.kind
        if task.strategy.uses_one_shot:
            example = fixed_one_shot_example(task.context_level, task.context_compiler)
            return render_with_context(example, task.target_asm, family)
        if kind is StrategyKind.RETRIEVAL:
            if self.index is None:
                raise ValueError("retrieval strategy needs a BM25 index")
            doc_id, _ = query(self.index, task.target_asm, top_k=1)[0]
            doc = self.index.get(doc_id)
            example = ContextExample(doc.asm, doc.source, doc.opt_level or task.opt_level, Provenance.RETRIEVED)
            return render_with_context(example, task.target_asm, family)
        return render_vanilla(task.target_asm, family)

    def run(self, task: DecompilationTask) -> DecompilationRecord:
        family = task.strategy.template_family
        ctx_cfg = task.context_compiler.replace(opt_level=task.context_level)

        prompt = self.initial_prompt(task)
        initial = self._generate(prompt, task)
        probe = self_construct(initial, ctx_cfg, self.timeout_s)

        record = DecompilationRecord(
            sample_id=task.sample_id,
            opt_level=task.opt_level,
            strategy=task.strategy.kind.value,
            initial_output=initial,
            initial_compilable=probe.compilable,
            context=None,
            final_output=initial,
            rounds=1,
            diagnostics=probe.diagnostics,
            initial_prompt=prompt,
            final_prompt=prompt,
            context_opt_level=task.context_level,
            context_compiler_id=ctx_cfg.compiler_id,
        )
        if not (task.strategy.uses_sc2dec and probe.compilable):
            return record

        current, current_probe = initial, probe
        for _ in range(self.extra_rounds):
            if not current_probe.compilable:
                break
            context = ContextExample(current_probe.asm, current, task.context_level, Provenance.SELF_CONSTRUCTED)
            # the fixed shot is never carried into these rounds
            prompt = render_with_context(context, task.target_asm, family)
            current = self._generate(prompt, task)
            record.context = context
            record.final_prompt = prompt
            record.rounds += 1
            if record.rounds <= self.extra_rounds:
                current_probe = self_construct(current, ctx_cfg, self.timeout_s)
        record.final_output = current
        return record


def run_sc2dec(task: DecompilationTask, backend: Backend, **kwargs) -> DecompilationRecord:
    return Sc2decPipeline(backend, **kwargs).run(task)
