"""Prompt rendering for the vanilla, 1-shot, retrieval and self-constructed-context strategies."""

from __future__ import annotations

import enum
import functools
import tempfile
from dataclasses import dataclass
from importlib import resources

from . import disasm, toolchain
from .toolchain import CompilerConfig, OutputKind, check_opt_level


class StrategyKind(str, enum.Enum):
    VANILLA = "vanilla"
    ONE_SHOT = "one_shot"
    RETRIEVAL = "retrieval"
    SC2DEC = "sc2dec"
    ONE_SHOT_THEN_SC2DEC = "one_shot_then_sc2dec"


class TemplateFamily(str, enum.Enum):
    CHAT_STYLE = "chat_style"
    DECOMPILE_STYLE = "decompile_style"


class Provenance(str, enum.Enum):
    FIXED_ONE_SHOT = "fixed_one_shot"
    RETRIEVED = "retrieved"
    SELF_CONSTRUCTED = "self_constructed"


@dataclass(frozen=True)
class PromptStrategy:
    kind: StrategyKind = StrategyKind.SC2DEC
    template_family: TemplateFamily = TemplateFamily.DECOMPILE_STYLE

    def __post_init__(self):
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        object.__setattr__(self, "template_family", TemplateFamily(self.template_family))

    @property
    def uses_sc2dec(self) -> bool:
        return self.kind in (StrategyKind.SC2DEC, StrategyKind.ONE_SHOT_THEN_SC2DEC)

    @property
    def uses_one_shot(self) -> bool:
        return self.kind in (StrategyKind.ONE_SHOT, StrategyKind.ONE_SHOT_THEN_SC2DEC)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "template_family": self.template_family.value}


@dataclass(frozen=True)
class ContextExample:
    asm: str
    source: str
    opt_level: str
    provenance: Provenance

    def to_dict(self) -> dict:
        return {
            "asm": self.asm,
            "source": self.source,
            "opt_level": self.opt_level,
            "provenance": Provenance(self.provenance).value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ContextExample":
        return cls(data["asm"], data["source"], data["opt_level"], Provenance(data["provenance"]))


CHAT_TEMPLATE = "What is the C source code of the assembly code below:\n```asm\n{asm}\n```\n"
DECOMPILE_TEMPLATE = "# This is the assembly code: \n{asm}\n\n# What is the source code?\n"

_TEMPLATES = {
    TemplateFamily.CHAT_STYLE: CHAT_TEMPLATE,
    TemplateFamily.DECOMPILE_STYLE: DECOMPILE_TEMPLATE,
}


def render_vanilla(asm: str, family: TemplateFamily | str = TemplateFamily.DECOMPILE_STYLE) -> str:
    if not asm:
        raise ValueError("assembly must be nonempty")
    # str.format would choke on braces inside asm, so substitute directly
    return _TEMPLATES[TemplateFamily(family)].replace("{asm}", asm)


def _render_answer(source: str, family: TemplateFamily) -> str:
    source = source.rstrip("\n")
    if family is TemplateFamily.CHAT_STYLE:
        return f"```c\n{source}\n```\n"
    return f"{source}\n"


def render_with_context(
    example: ContextExample,
    target_asm: str,
    family: TemplateFamily | str = TemplateFamily.DECOMPILE_STYLE,
) -> str:
    """The example as a solved question, one blank line, then the target question."""
    family = TemplateFamily(family)
    if not target_asm:
        raise ValueError("target assembly must be nonempty")
    shot = render_vanilla(example.asm, family) + _render_answer(example.source, family)
    return shot + "\n" + render_vanilla(target_asm, family)


def one_shot_source() -> str:
    return resources.files("sc2dec").joinpath("data/one_shot_example.c").read_text()


ONE_SHOT_ENTRY = "count_in_range"


@functools.lru_cache(maxsize=None)
def _one_shot_cached(opt_level: str, cfg: CompilerConfig) -> ContextExample:
    source = one_shot_source()
    build_cfg = cfg.replace(opt_level=opt_level, debug_info=False)
    with tempfile.TemporaryDirectory(prefix="sc2dec-shot-") as work:
        outcome = toolchain.compile_source(source, "one_shot", build_cfg, OutputKind.SHARED_LIBRARY, work)
        if not outcome.success:
            raise RuntimeError(f"fixed 1-shot example failed to compile:\n{outcome.diagnostics}")
        raw = toolchain.disassemble(outcome.artifact_path)
    listing = disasm.extract_function(raw, ONE_SHOT_ENTRY, opt_level, cfg.compiler_id)
    return ContextExample(listing.text, source, opt_level, Provenance.FIXED_ONE_SHOT)


def fixed_one_shot_example(opt_level: str, cfg: CompilerConfig | None = None) -> ContextExample:
    """The shipped example compiled at ``opt_level``; memoized per (level, compiler config)."""
    check_opt_level(opt_level)
    return _one_shot_cached(opt_level, cfg or CompilerConfig())
