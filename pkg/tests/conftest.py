import shutil
from pathlib import Path

import pytest

from sc2dec import toolchain
from sc2dec.cli import _data_path, read_jsonl
from sc2dec.evaluation import load_benchmark
from sc2dec.toolchain import CompilerConfig, OutputKind, SourceFunction

HAVE_GCC = shutil.which("gcc") is not None and shutil.which("objdump") is not None

needs_gcc = pytest.mark.skipif(not HAVE_GCC, reason="gcc/objdump not available")

F0 = SourceFunction(id="f0", body="int f0(int a){return a+1;}\n", entry_name="f0")

BRANCHY = SourceFunction(
    id="branchy",
    entry_name="g",
    body=(
        "int g(int n)\n"
        "{\n"
        "    int s = 0;\n"
        "    if (n < 0) {\n"
        "        s = -1;\n"
        "    } else {\n"
        "        s = n * 2;\n"
        "    }\n"
        "    return s;\n"
        "}\n"
    ),
)


@pytest.fixture(scope="session")
def toy_benchmark_path() -> Path:
    return _data_path("toy_benchmark.jsonl")


@pytest.fixture
def toy_benchmark(toy_benchmark_path):
    return load_benchmark(toy_benchmark_path)


@pytest.fixture(scope="session")
def toy_corpus():
    return [SourceFunction.from_dict(row) for row in read_jsonl(_data_path("toy_corpus.jsonl"))]


def build(fn: SourceFunction, workdir: Path, level: str = "O0", debug: bool = True,
          kind=OutputKind.SHARED_LIBRARY, compiler: str = "gcc"):
    return toolchain.compile_function(fn, CompilerConfig(compiler, level, debug), kind, workdir)


@pytest.fixture(scope="session")
def f0_objdump(tmp_path_factory):
    """Raw objdump text of f0 built at O0: (with -S, without source, non-debug -S)."""
    if not HAVE_GCC:
        pytest.skip("gcc/objdump not available")
    debug_dir = tmp_path_factory.mktemp("f0dbg")
    plain_dir = tmp_path_factory.mktemp("f0plain")
    dbg = build(F0, debug_dir)
    plain = build(F0, plain_dir, debug=False)
    return {
        "S": toolchain.disassemble(dbg.artifact_path, with_source=True),
        "d": toolchain.disassemble(dbg.artifact_path),
        "nodebug_S": toolchain.disassemble(plain.artifact_path, with_source=True),
    }


# criterion number -> (verdict, title, detail), filled by test_acceptance
ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        verdict, title, detail = ACCEPTANCE[n]
        line = f"[{verdict}] criterion {n}: {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
