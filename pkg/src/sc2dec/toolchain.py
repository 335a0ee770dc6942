"""Thin subprocess wrappers around the C compiler, objdump and compiled programs.

Every wrapper runs inside a caller-supplied working directory and uses paths
relative to it, so the recorded command lines are reproducible across runs.
"""

from __future__ import annotations

import enum
import os
import re
import shlex
import shutil
import signal
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .errors import DisassemblyFailed, ToolNotFound, ToolTimeout

OPT_LEVELS = ("O0", "O1", "O2", "O3")

DEFAULT_COMPILE_TIMEOUT_S = 30.0
DEFAULT_RUN_TIMEOUT_S = 10.0
TIMEOUT_ENV = "SC2DEC_TOOL_TIMEOUT_S"


class OutputKind(str, enum.Enum):
    SHARED_LIBRARY = "shared_library"
    OBJECT = "object"
    EXECUTABLE = "executable"


_SUFFIX = {
    OutputKind.SHARED_LIBRARY: ".so",
    OutputKind.OBJECT: ".o",
    OutputKind.EXECUTABLE: ".bin",
}
_KIND_FLAGS = {
    OutputKind.SHARED_LIBRARY: ("-shared", "-fPIC"),
    OutputKind.OBJECT: ("-c",),
    OutputKind.EXECUTABLE: (),
}


def check_opt_level(level: str) -> str:
    if level not in OPT_LEVELS:
        raise ValueError(f"optimization level must be one of {OPT_LEVELS}, got {level!r}")
    return level


def tool_timeout(default: float) -> float:
    value = os.environ.get(TIMEOUT_ENV)
    if not value:
        return default
    return float(value)


@dataclass(frozen=True)
class CompilerConfig:
    compiler_id: str = "gcc"
    opt_level: str = "O0"
    debug_info: bool = False
    extra_flags: tuple[str, ...] = ()

    def __post_init__(self):
        check_opt_level(self.opt_level)
        object.__setattr__(self, "extra_flags", tuple(self.extra_flags))

    def replace(self, **changes) -> "CompilerConfig":
        values = {
            "compiler_id": self.compiler_id,
            "opt_level": self.opt_level,
            "debug_info": self.debug_info,
            "extra_flags": self.extra_flags,
        }
        values.update(changes)
        return CompilerConfig(**values)

    def with_flags(self, *flags: str) -> "CompilerConfig":
        missing = tuple(f for f in flags if f not in self.extra_flags)
        return self.replace(extra_flags=self.extra_flags + missing)

    def to_dict(self) -> dict:
        return {
            "compiler_id": self.compiler_id,
            "opt_level": self.opt_level,
            "debug_info": self.debug_info,
            "extra_flags": list(self.extra_flags),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CompilerConfig":
        return cls(
            compiler_id=data.get("compiler_id", "gcc"),
            opt_level=data.get("opt_level", "O0"),
            debug_info=bool(data.get("debug_info", False)),
            extra_flags=tuple(data.get("extra_flags", ())),
        )


@dataclass(frozen=True)
class SourceFunction:
    id: str
    body: str
    entry_name: str
    prelude: str = ""

    def translation_unit(self) -> str:
        if not self.prelude:
            return self.body if self.body.endswith("\n") else self.body + "\n"
        parts = [self.prelude.rstrip("\n"), self.body.rstrip("\n")]
        return "\n".join(parts) + "\n"

    def to_dict(self) -> dict:
        return {"id": self.id, "prelude": self.prelude, "body": self.body, "entry_name": self.entry_name}

    @classmethod
    def from_dict(cls, data: dict) -> "SourceFunction":
        return cls(
            id=str(data["id"]),
            prelude=data.get("prelude", ""),
            body=data["body"],
            entry_name=data["entry_name"],
        )


@dataclass
class CompileOutcome:
    success: bool
    artifact_path: Optional[Path]
    diagnostics: str
    command_line: str


@dataclass
class RunVerdict:
    status: str  # "pass" | "fail" | "timeout" | "crash"
    exit_code: Optional[int] = None
    signal: Optional[int] = None
    stdout: str = ""
    stderr: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def describe(self) -> str:
        if self.status == "fail":
            return f"Fail({self.exit_code})"
        if self.status == "crash":
            try:
                name = signal.Signals(self.signal).name
            except ValueError:
                name = str(self.signal)
            return f"Crash({name})"
        return self.status.capitalize()


def resolve_tool(name: str) -> str:
    path = shutil.which(name)
    if path is None:
        raise ToolNotFound(f"{name!r} not found on PATH")
    return path


_UNSAFE = re.compile(r"[^A-Za-z0-9_.-]+")


def safe_stem(identifier: str) -> str:
    stem = _UNSAFE.sub("_", identifier).strip("._")
    return stem or "unit"


def build_command(cfg: CompilerConfig, output_kind: OutputKind, output: str, source: str) -> list[str]:
    cmd = [cfg.compiler_id, f"-{cfg.opt_level}"]
    if cfg.debug_info:
        cmd.append("-g")
    cmd.extend(_KIND_FLAGS[OutputKind(output_kind)])
    cmd.extend(["-o", output, source])
    cmd.extend(cfg.extra_flags)
    return cmd


def compile_source(
    source_text: str,
    stem: str,
    cfg: CompilerConfig,
    output_kind: OutputKind | str,
    workdir: Path | str,
    timeout_s: Optional[float] = None,
) -> CompileOutcome:
    """Write ``source_text`` to ``<stem>.c`` in ``workdir`` and compile it."""
    output_kind = OutputKind(output_kind)
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    resolve_tool(cfg.compiler_id)

    stem = safe_stem(stem)
    src_name = f"{stem}.c"
    out_name = stem + _SUFFIX[output_kind]
    (workdir / src_name).write_text(source_text)
    out_path = workdir / out_name
    if out_path.exists():
        out_path.unlink()

    cmd = build_command(cfg, output_kind, out_name, src_name)
    timeout_s = tool_timeout(DEFAULT_COMPILE_TIMEOUT_S) if timeout_s is None else timeout_s
    try:
        proc = subprocess.run(cmd, cwd=workdir, capture_output=True, text=True, timeout=timeout_s)
    except subprocess.TimeoutExpired as exc:
        raise ToolTimeout(f"compile exceeded {timeout_s}s: {shlex.join(cmd)}") from exc

    success = proc.returncode == 0 and out_path.exists()
    return CompileOutcome(
        success=success,
        artifact_path=out_path if success else None,
        diagnostics=proc.stderr,
        command_line=shlex.join(cmd),
    )


def compile_function(
    fn: SourceFunction,
    cfg: CompilerConfig,
    output_kind: OutputKind | str,
    workdir: Path | str,
    timeout_s: Optional[float] = None,
) -> CompileOutcome:
    return compile_source(fn.translation_unit(), fn.id, cfg, output_kind, workdir, timeout_s)


def disassemble(artifact: Path | str, with_source: bool = False, timeout_s: Optional[float] = None) -> str:
    """Return objdump's stdout for ``artifact``, interleaving source when asked."""
    objdump = resolve_tool("objdump")
    artifact = Path(artifact)
    cmd: list[str] = [objdump, "-d"]
    if with_source:
        cmd += ["-S", "--source-comment=;"]
    cmd.append(artifact.name)
    timeout_s = tool_timeout(DEFAULT_COMPILE_TIMEOUT_S) if timeout_s is None else timeout_s
    if not artifact.exists():
        raise DisassemblyFailed(f"{artifact}: no such file")
    try:
        proc = subprocess.run(
            cmd, cwd=artifact.parent, capture_output=True, text=True,
            errors="replace", timeout=timeout_s,
        )
    except subprocess.TimeoutExpired as exc:
        raise ToolTimeout(f"objdump exceeded {timeout_s}s on {artifact}") from exc
    if proc.returncode != 0:
        raise DisassemblyFailed(f"objdump exited {proc.returncode}: {proc.stderr.strip()}")
    return proc.stdout


def run_executable(artifact: Path | str, timeout_s: Optional[float] = None, args: Sequence[str] = ()) -> RunVerdict:
    artifact = Path(artifact).resolve()
    timeout_s = tool_timeout(DEFAULT_RUN_TIMEOUT_S) if timeout_s is None else timeout_s
    try:
        proc = subprocess.run(
            [str(artifact), *args], cwd=artifact.parent, capture_output=True,
            text=True, errors="replace", timeout=timeout_s,
        )
    except subprocess.TimeoutExpired as exc:
        return RunVerdict("timeout", stdout=_text(exc.stdout), stderr=_text(exc.stderr))
    except OSError as exc:
        return RunVerdict("fail", exit_code=None, stderr=str(exc))
    if proc.returncode == 0:
        return RunVerdict("pass", exit_code=0, stdout=proc.stdout, stderr=proc.stderr)
    if proc.returncode < 0:
        return RunVerdict("crash", signal=-proc.returncode, stdout=proc.stdout, stderr=proc.stderr)
    return RunVerdict("fail", exit_code=proc.returncode, stdout=proc.stdout, stderr=proc.stderr)


def _text(data) -> str:
    if data is None:
        return ""
    if isinstance(data, bytes):
        return data.decode("utf-8", "replace")
    return data
