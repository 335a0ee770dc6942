"""Fine-grained alignment training data: end-to-end and step-by-step examples.

Each corpus function is compiled with debug info at every configured level,
disassembled with interleaved source comments, split into aligned blocks and
written out with each asm block ahead of the source it implements.
"""

from __future__ import annotations

import json
import logging
import re
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional, Sequence

from . import disasm, toolchain
from .disasm import AlignedSequence
from .errors import EmptySequence, FunctionNotFound, NoDebugInfo, Sc2decError, ToolNotFound
from .prompting import TemplateFamily, render_vanilla
from .toolchain import CompilerConfig, OutputKind, SourceFunction

log = logging.getLogger(__name__)

END_TO_END = "end_to_end"
STEP_BY_STEP = "step_by_step"
KINDS = (END_TO_END, STEP_BY_STEP)

SOURCE_COMMENT = ";"
FULL_SOURCE_MARKER = "# The complete source code:"


@dataclass
class TrainingExample:
    kind: str
    sample_id: str
    opt_level: str
    prompt: str
    completion: str
    asm: str = ""
    compiler_id: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SkipRecord:
    sample_id: str
    level: str
    reason: str

    def to_dict(self) -> dict:
        return asdict(self)


def serialize_step_by_step(seq: AlignedSequence, full_source: str) -> str:
    """Render blocks as asm lines then ``;``-prefixed source lines, then the whole function.

    Blocks without source lines have their asm folded into the neighbouring
    block (the previous one, or the next one for a leading block) so that no
    instruction is lost.
    """
    if not seq.blocks:
        raise EmptySequence(seq.function_name)
    merged: list[tuple[list[str], list[str]]] = []
    carry: list[str] = []
    for block in seq.blocks:
        if block.source_lines:
            merged.append((carry + list(block.asm_lines), list(block.source_lines)))
            carry = []
        elif merged:
            merged[-1][0].extend(block.asm_lines)
        else:
            carry.extend(block.asm_lines)
    if carry:
        merged.append((carry, []))

    out: list[str] = []
    for asm_lines, source_lines in merged:
        out.extend(asm_lines)
        out.extend(SOURCE_COMMENT + line for line in source_lines)
    out.append(FULL_SOURCE_MARKER)
    return "\n".join(out) + "\n" + full_source


def parse_step_by_step(completion: str) -> tuple[list[tuple[list[str], list[str]]], str]:
    """Inverse of :func:`serialize_step_by_step`: ``([(asm_lines, source_lines), ...], full_source)``."""
    head, sep, full_source = completion.partition("\n" + FULL_SOURCE_MARKER + "\n")
    if not sep:
        raise ValueError("completion has no full-source section")
    segments: list[tuple[list[str], list[str]]] = []
    for line in head.split("\n"):
        is_source = line.startswith(SOURCE_COMMENT)
        if not segments or (not is_source and segments[-1][1]):
            segments.append(([], []))
        if is_source:
            segments[-1][1].append(line[len(SOURCE_COMMENT):])
        else:
            segments[-1][0].append(line)
    return segments, full_source


def _identifier_pattern(names: Iterable[str]) -> Optional[re.Pattern]:
    names = [n for n in names if n]
    if not names:
        return None
    return re.compile(r"\b(?:" + "|".join(re.escape(n) for n in sorted(names)) + r")\b")


def filter_corpus(
    corpus: Iterable[SourceFunction],
    max_samples: Optional[int] = None,
    reject_identifiers: Sequence[str] = (),
    on_skip: Optional[Callable[[SkipRecord], None]] = None,
) -> Iterator[SourceFunction]:
    """Drop functions that mention a rejected identifier and cap the sample count."""
    pattern = _identifier_pattern(reject_identifiers)
    kept = 0
    for fn in corpus:
        if max_samples is not None and kept >= max_samples:
            break
        if pattern is not None:
            hit = pattern.search(fn.prelude + "\n" + fn.body)
            if hit:
                if on_skip:
                    on_skip(SkipRecord(fn.id, "*", f"rejected identifier {hit.group(0)!r}"))
                continue
        kept += 1
        yield fn


def synthesize_one(fn: SourceFunction, cfg: CompilerConfig) -> list[TrainingExample] | SkipRecord:
    """Both training examples for one function at one configuration, or why it was skipped."""
    level = cfg.opt_level
    with tempfile.TemporaryDirectory(prefix="sc2dec-fae-") as work:
        outcome = toolchain.compile_function(fn, cfg, OutputKind.SHARED_LIBRARY, work)
        if not outcome.success:
            return SkipRecord(fn.id, level, "compile failed: " + outcome.diagnostics.strip()[:500])
        raw = toolchain.disassemble(outcome.artifact_path, with_source=True)
    try:
        seq = disasm.parse_interleaved(raw, fn.entry_name, level)
        listing = disasm.extract_function(raw, fn.entry_name, level, cfg.compiler_id)
    except (FunctionNotFound, NoDebugInfo) as exc:
        return SkipRecord(fn.id, level, f"{type(exc).__name__}: {exc}")
    if not seq.blocks:
        return SkipRecord(fn.id, level, "no aligned blocks")
    prompt = render_vanilla(listing.text, TemplateFamily.DECOMPILE_STYLE)
    common = dict(sample_id=fn.id, opt_level=level, prompt=prompt, asm=listing.text, compiler_id=cfg.compiler_id)
    return [
        TrainingExample(kind=END_TO_END, completion=fn.body, **common),
        TrainingExample(kind=STEP_BY_STEP, completion=serialize_step_by_step(seq, fn.body), **common),
    ]


def synthesize(
    corpus: Iterable[SourceFunction],
    compilers: Sequence[CompilerConfig],
    on_skip: Optional[Callable[[SkipRecord], None]] = None,
    parallelism: int = 1,
    done: Optional[set[tuple[str, str]]] = None,
) -> Iterator[TrainingExample]:
    """Yield training examples in (function, config) input order.

    Per-sample failures go to ``on_skip``; only a missing tool aborts.
    ``done`` holds ``(sample_id, level)`` pairs to leave out (resumed runs).
    """
    for cfg in compilers:
        if not cfg.debug_info:
            raise ValueError("FAE synthesis needs debug_info=True on every compiler config")
    done = done or set()
    jobs = ((fn, cfg) for fn in corpus for cfg in compilers if (fn.id, cfg.opt_level) not in done)

    def work(job):
        fn, cfg = job
        try:
            return synthesize_one(fn, cfg)
        except ToolNotFound:
            raise
        except Sc2decError as exc:
            return SkipRecord(fn.id, cfg.opt_level, f"{type(exc).__name__}: {exc}")

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        for result in pool.map(work, jobs):
            if isinstance(result, SkipRecord):
                log.info("skip %s at %s: %s", result.sample_id, result.level, result.reason)
                if on_skip:
                    on_skip(result)
                continue
            yield from result


def output_name(kind: str, level: str) -> str:
    return f"fae_{kind}_{level}.jsonl"


def completed_keys(outdir: Path) -> set[tuple[str, str]]:
    """(sample_id, level) pairs already present in every kind's output file."""
    per_kind = []
    for kind in KINDS:
        keys = set()
        for path in sorted(Path(outdir).glob(f"fae_{kind}_*.jsonl")):
            for line in path.read_text().splitlines():
                if line.strip():
                    row = json.loads(line)
                    keys.add((row["sample_id"], row["opt_level"]))
        per_kind.append(keys)
    return set.intersection(*per_kind) if per_kind else set()


def write_examples(examples: Iterable[TrainingExample], outdir: Path, append: bool = False) -> dict[str, int]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    handles = {}
    counts: dict[str, int] = {}
    try:
        for ex in examples:
            name = output_name(ex.kind, ex.opt_level)
            if name not in handles:
                handles[name] = open(outdir / name, "a" if append else "w", encoding="utf-8")
            handles[name].write(json.dumps(ex.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
            counts[name] = counts.get(name, 0) + 1
    finally:
        for fh in handles.values():
            fh.close()
    return counts
