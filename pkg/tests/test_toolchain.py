import signal

import pytest

from sc2dec import toolchain
from sc2dec.errors import DisassemblyFailed, ToolNotFound
from sc2dec.toolchain import CompilerConfig, OutputKind, SourceFunction

from conftest import F0, build, needs_gcc


def test_opt_level_must_be_one_of_four():
    with pytest.raises(ValueError):
        CompilerConfig("gcc", "Os")


def test_shared_library_command_line_layout():
    cfg = CompilerConfig("gcc", "O2", True, ("-lm", "-Wall"))
    cmd = toolchain.build_command(cfg, OutputKind.SHARED_LIBRARY, "f0.so", "f0.c")
    assert cmd == ["gcc", "-O2", "-g", "-shared", "-fPIC", "-o", "f0.so", "f0.c", "-lm", "-Wall"]


def test_no_debug_flag_without_debug_info():
    cmd = toolchain.build_command(CompilerConfig("clang", "O0"), OutputKind.OBJECT, "x.o", "x.c")
    assert cmd == ["clang", "-O0", "-c", "-o", "x.o", "x.c"]


def test_missing_compiler_raises(tmp_path):
    with pytest.raises(ToolNotFound):
        toolchain.compile_function(F0, CompilerConfig("no-such-cc-xyz"), OutputKind.OBJECT, tmp_path)


@needs_gcc
def test_compile_f0_shared_library(tmp_path):
    outcome = build(F0, tmp_path)
    assert outcome.success
    assert outcome.artifact_path.exists()
    assert outcome.artifact_path.suffix == ".so"
    assert outcome.command_line == "gcc -O0 -g -shared -fPIC -o f0.so f0.c"


@needs_gcc
def test_truncated_source_fails_with_diagnostics(tmp_path):
    bad = SourceFunction(id="bad", body="int f(){return", entry_name="f")
    outcome = build(bad, tmp_path)
    assert not outcome.success
    assert outcome.artifact_path is None
    assert outcome.diagnostics.strip()
    assert not (tmp_path / "bad.so").exists()


@needs_gcc
def test_command_line_is_deterministic_across_workdirs(tmp_path):
    cfg = CompilerConfig("gcc", "O1", True)
    a = toolchain.compile_function(F0, cfg, OutputKind.SHARED_LIBRARY, tmp_path / "a")
    b = toolchain.compile_function(F0, cfg, OutputKind.SHARED_LIBRARY, tmp_path / "b")
    assert a.command_line == b.command_line


@needs_gcc
def test_disassemble_with_source_has_comment_lines(f0_objdump):
    assert any(line.startswith(";") for line in f0_objdump["S"].splitlines())
    assert not any(line.startswith(";") for line in f0_objdump["d"].splitlines())


@needs_gcc
def test_non_debug_build_has_no_source_lines(f0_objdump):
    assert not any(line.startswith(";") for line in f0_objdump["nodebug_S"].splitlines())


@needs_gcc
def test_disassemble_missing_file(tmp_path):
    with pytest.raises((DisassemblyFailed, ToolNotFound)):
        toolchain.disassemble(tmp_path / "nope.so", with_source=True)


def _exe(tmp_path, body, name="prog"):
    fn = SourceFunction(id=name, body=body, entry_name="main", prelude="#include <stdlib.h>")
    outcome = build(fn, tmp_path, debug=False, kind=OutputKind.EXECUTABLE)
    assert outcome.success, outcome.diagnostics
    return outcome.artifact_path


@needs_gcc
def test_run_pass(tmp_path):
    verdict = toolchain.run_executable(_exe(tmp_path, "int main(void){return 0;}"), 5)
    assert verdict.status == "pass"
    assert verdict.describe() == "Pass"


@needs_gcc
def test_run_nonzero_exit(tmp_path):
    verdict = toolchain.run_executable(_exe(tmp_path, "int main(void){return 3;}"), 5)
    assert verdict.status == "fail" and verdict.exit_code == 3


@needs_gcc
def test_run_abort_is_sigabrt(tmp_path):
    verdict = toolchain.run_executable(_exe(tmp_path, "int main(void){abort();}"), 5)
    assert verdict.status == "crash"
    assert verdict.signal == signal.SIGABRT
    assert verdict.describe() == "Crash(SIGABRT)"


@needs_gcc
def test_run_infinite_loop_times_out(tmp_path):
    verdict = toolchain.run_executable(_exe(tmp_path, "int main(void){for(;;);}"), 1)
    assert verdict.status == "timeout"


def test_timeout_env_override(monkeypatch):
    monkeypatch.setenv(toolchain.TIMEOUT_ENV, "2.5")
    assert toolchain.tool_timeout(30) == 2.5
    monkeypatch.delenv(toolchain.TIMEOUT_ENV)
    assert toolchain.tool_timeout(30) == 30
