"""Parsing of objdump text: function extraction, cleaning, and source/asm alignment."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator

from .errors import FunctionNotFound, NoDebugInfo

# "0000000000001129 <f0>:"
_FUNC_HEADER = re.compile(r"^[0-9a-fA-F]+ <(?P<name>[^>]+)>:\s*$")
# "    1129:\t55      \tpush   %rbp"
_INSN_LINE = re.compile(r"^\s*[0-9a-fA-F]+:\t")
_SECTION_LINE = re.compile(r"^Disassembly of section ")
_FORMAT_LINE = re.compile(r"file format ")
# "jns 112b <g+0x1f>" -> "jns <g>"
_TARGET = re.compile(r"(?:(?<=\s)[0-9a-fA-F]+\s+)?<([^<>+\s]+)(?:[+-]0x[0-9a-fA-F]+)?>")
_PADDING = re.compile(
    r"^(?:(?:data16|cs|ds|rex\.?\w*)\s+)*(?:nop[lwq]?\b.*|xchg\s+%ax,%ax)$"
)


@dataclass
class AssemblyListing:
    function_name: str
    text: str
    raw: str
    opt_level: str = ""
    compiler_id: str = ""

    @property
    def lines(self) -> list[str]:
        return self.text.splitlines()


@dataclass
class Block:
    source_lines: list[str] = field(default_factory=list)
    asm_lines: list[str] = field(default_factory=list)


@dataclass
class AlignedSequence:
    function_name: str
    blocks: list[Block]
    opt_level: str = ""

    def asm_lines(self) -> list[str]:
        return [line for block in self.blocks for line in block.asm_lines]

    def source_lines(self) -> list[str]:
        return [line for block in self.blocks for line in block.source_lines]


def _clean_line(line: str) -> str | None:
    """Normalize one objdump line; None means the line is dropped."""
    line = line.rstrip()
    if not line.strip():
        return ""
    if line.startswith(";"):
        return None
    header = _FUNC_HEADER.match(line)
    if header:
        return f"{header.group('name')}:"
    if _SECTION_LINE.match(line) or _FORMAT_LINE.search(line):
        return None
    if _INSN_LINE.match(line):
        fields = line.split("\t")
        # address + opcode bytes only: continuation of a long encoding
        if len(fields) < 3 or not fields[2].strip():
            return None
        insn = "\t".join(fields[2:])
    else:
        insn = line
    insn = insn.split("#", 1)[0]
    insn = " ".join(insn.split())
    if not insn:
        return None
    if insn.endswith(":") and " " not in insn:
        return insn
    insn = _TARGET.sub(r"<\1>", insn)
    if _PADDING.match(insn):
        return None
    return insn


def clean_asm(raw_region: str) -> str:
    """Turn raw objdump lines into address-free ``mnemonic operands`` text.

    Drops address and opcode-byte columns, ``#`` annotations, alignment
    padding and source-comment lines; rewrites ``<sym+0x1f>`` style targets
    to ``<sym>``; keeps labels and collapses blank-line runs.
    """
    out: list[str] = []
    for line in raw_region.splitlines():
        cleaned = _clean_line(line)
        if cleaned is None:
            continue
        if cleaned == "" and (not out or out[-1] == ""):
            continue
        out.append(cleaned)
    while out and out[-1] == "":
        out.pop()
    return "\n".join(out)


def _function_region(raw_objdump: str, name: str) -> list[str]:
    lines = raw_objdump.splitlines()
    start = None
    for i, line in enumerate(lines):
        m = _FUNC_HEADER.match(line)
        if m and m.group("name") == name:
            start = i + 1
            break
    if start is None:
        raise FunctionNotFound(name)
    region = []
    for line in lines[start:]:
        if _FUNC_HEADER.match(line) or _SECTION_LINE.match(line):
            break
        region.append(line)
    # a blank line precedes the next header; source comments just before it
    # belong to the next function
    while region and (not region[-1].strip() or region[-1].startswith(";")):
        region.pop()
    return region


def list_functions(raw_objdump: str, section: str | None = ".text") -> list[str]:
    """Function labels in address order, optionally limited to one section."""
    names = []
    current = None
    for line in raw_objdump.splitlines():
        if _SECTION_LINE.match(line):
            current = line[len("Disassembly of section "):].rstrip(":").strip()
            continue
        m = _FUNC_HEADER.match(line)
        if m and (section is None or current == section):
            names.append(m.group("name"))
    return names


def extract_function(raw_objdump: str, name: str, opt_level: str = "", compiler_id: str = "") -> AssemblyListing:
    region = _function_region(raw_objdump, name)
    raw = "\n".join(region)
    return AssemblyListing(
        function_name=name,
        text=_strip_blank(clean_asm(raw)),
        raw=raw,
        opt_level=opt_level,
        compiler_id=compiler_id,
    )


def _strip_blank(text: str) -> str:
    return "\n".join(line for line in text.splitlines() if line)


def parse_interleaved(raw_objdump_S: str, name: str, opt_level: str = "") -> AlignedSequence:
    """Group a function's ``;``-commented source lines with the asm that follows them.

    Each run of source comments opens a block; the asm lines after it fill
    that block. Asm that appears before any comment gets a block with no
    source. Trailing comments with no asm after them join the last block.
    """
    region = _function_region(raw_objdump_S, name)
    blocks: list[Block] = []
    pending_src: list[str] = []
    saw_source = False
    for line in region:
        if line.startswith(";"):
            saw_source = True
            pending_src.append(line[1:])
            continue
        cleaned = _clean_line(line)
        if not cleaned or cleaned.endswith(":"):
            continue
        if pending_src or not blocks:
            blocks.append(Block(source_lines=pending_src, asm_lines=[]))
            pending_src = []
        blocks[-1].asm_lines.append(cleaned)
    if not saw_source:
        raise NoDebugInfo(f"no source-comment lines for {name!r}")
    if pending_src and blocks:
        blocks[-1].source_lines.extend(pending_src)
    blocks = [b for b in blocks if b.asm_lines]
    return AlignedSequence(function_name=name, blocks=blocks, opt_level=opt_level)


def normalized_source(lines: list[str]) -> Iterator[str]:
    """Whitespace-normalized source lines with consecutive repeats removed."""
    previous = None
    for line in lines:
        norm = " ".join(line.split())
        if not norm or norm == previous:
            continue
        previous = norm
        yield norm
