"""Self-constructed context decompilation (sc2dec) toolkit.

Compiles and disassembles C with gcc/clang and objdump, runs the
decompile / recompile / decompile-again loop against a pluggable model
backend, synthesizes statement-aligned training data, and scores outputs
for re-compilability and re-executability.
"""

from .backends import EchoOracle, GenerationRequest, Mutator, NullModel, RemoteChat, extract_code, make_backend
from .disasm import AlignedSequence, AssemblyListing, Block, clean_asm, extract_function, parse_interleaved
from .evaluation import (
    EvalReport,
    EvalSample,
    evaluate_run,
    load_benchmark,
    render_table,
    score_recompilability,
    score_reexecutability,
)
from .fae import TrainingExample, serialize_step_by_step, synthesize
from .pipeline import DecompilationRecord, DecompilationTask, Sc2decPipeline, run_sc2dec, wrap_translation_unit
from .prompting import ContextExample, PromptStrategy, fixed_one_shot_example, render_vanilla, render_with_context
from .retrieval import AsmIndex, build_index, query, tokenize_asm
from .toolchain import CompilerConfig, SourceFunction, compile_function, disassemble, run_executable

__version__ = "0.1.0"
