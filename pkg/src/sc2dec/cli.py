"""Command-line entry point: ``sc2dec <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Optional

from . import fae, report
from .backends import make_backend
from .config import RunConfig, load_config
from .evaluation import (
    EvalReport,
    SampleVerdict,
    aggregate,
    check_benchmark,
    evaluate_run,
    load_benchmark,
    materialize_asm,
    save_benchmark,
)
from .pipeline import DecompilationRecord, DecompilationTask, Sc2decPipeline
from .retrieval import AsmIndex, build_index, query
from .toolchain import CompilerConfig, SourceFunction

log = logging.getLogger("sc2dec")

TOY_BENCHMARK = "toy"
TOY_CORPUS = "toy"


def _data_path(name: str) -> Path:
    return Path(str(resources.files("sc2dec") / "data" / name))


def benchmark_path(ref: Optional[str]) -> Path:
    if ref is None:
        raise SystemExit("--benchmark is required")
    return _data_path("toy_benchmark.jsonl") if ref == TOY_BENCHMARK else Path(ref)


def corpus_path(ref: Optional[str]) -> Path:
    if ref is None:
        raise SystemExit("--corpus is required")
    return _data_path("toy_corpus.jsonl") if ref == TOY_CORPUS else Path(ref)


def read_jsonl(path: Path | str) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)


def append_jsonl(path: Path, rows: Iterable[dict]) -> int:
    n = 0
    with open(path, "a", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
            fh.flush()
            n += 1
    return n


def prepare_run_dir(cfg: RunConfig) -> Path:
    run_dir = Path(cfg.run_dir) if cfg.run_dir else Path("runs") / time.strftime("%Y%m%d-%H%M%S")
    run_dir.mkdir(parents=True, exist_ok=True)
    cfg.run_dir = str(run_dir)
    cfg.dump(run_dir / "config.json")
    return run_dir


def build_tasks(cfg: RunConfig, samples, context_compiler: Optional[str] = None,
                context_level: Optional[str] = None) -> list[DecompilationTask]:
    ctx = CompilerConfig(context_compiler or cfg.compiler, "O0", False, tuple(cfg.extra_flags))
    missing = [lv for lv in cfg.levels for s in samples if lv not in s.asm_by_level]
    if missing:
        materialize_asm(samples, cfg.toolchain, cfg.levels)
    return [
        DecompilationTask(
            sample_id=s.sample_id,
            target_asm=s.asm_by_level[lv],
            opt_level=lv,
            strategy=cfg.prompt_strategy,
            context_compiler=ctx,
            context_opt_level_override=context_level if context_level is not None else cfg.context_level,
        )
        for lv in cfg.levels
        for s in samples
    ]


def make_cfg_backend(cfg: RunConfig, answers: Optional[dict[str, str]]):
    return make_backend(
        cfg.backend, answer_map=answers, seed=cfg.seed, endpoint=cfg.endpoint,
        model=cfg.model, api_key_env=cfg.api_key_env, max_in_flight=cfg.max_in_flight,
    )


def run_tasks(cfg: RunConfig, tasks: list[DecompilationTask], answers, out_path: Path,
              force: bool) -> list[DecompilationRecord]:
    """Decompile every task not already in ``out_path``; return all records in task order."""
    if force and out_path.exists():
        out_path.unlink()
    existing = {}
    if out_path.exists():
        for row in read_jsonl(out_path):
            rec = DecompilationRecord.from_dict(row)
            existing[rec.key] = rec
    todo = [t for t in tasks if t.key not in existing]
    if existing:
        log.info("resuming: %d records present, %d to do", len(existing), len(todo))

    index = AsmIndex.load(cfg.index) if cfg.index else None
    pipeline = Sc2decPipeline(
        make_cfg_backend(cfg, answers), index=index, max_new_tokens=cfg.max_new_tokens,
        extra_rounds=cfg.extra_rounds, timeout_s=cfg.timeout,
    )
    with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool, open(out_path, "a", encoding="utf-8") as fh:
        for rec in pool.map(pipeline.run, todo):
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
            fh.flush()
            existing[rec.key] = rec
    return [existing[t.key] for t in tasks]


def evaluate_records(cfg: RunConfig, records: list[DecompilationRecord], samples, out_dir: Path,
                     label: str, force: bool, meta: Optional[dict] = None) -> EvalReport:
    """Score records with a per-sample verdict cache under ``out_dir``."""
    cache = out_dir / "verdicts.jsonl"
    if force and cache.exists():
        cache.unlink()
    done = {}
    if cache.exists():
        for row in read_jsonl(cache):
            v = SampleVerdict(**row)
            done[(v.sample_id, v.opt_level)] = v
    todo = [r for r in records if r.key not in done]
    fresh = evaluate_run(todo, samples, cfg.toolchain, cfg.timeout, cfg.parallelism)
    append_jsonl(cache, (v.to_dict() for v in fresh.rows))
    for v in fresh.rows:
        done[(v.sample_id, v.opt_level)] = v
    wanted = {r.key for r in records}
    rows = [v for k, v in done.items() if k in wanted]
    result = aggregate(rows, label, meta)
    report.write_report(result, out_dir)
    return result


def cmd_synthesize(cfg: RunConfig) -> int:
    run_dir = prepare_run_dir(cfg)
    skip_path = run_dir / "skips.jsonl"
    if cfg.force:
        for p in list(run_dir.glob("fae_*.jsonl")) + [skip_path]:
            if p.exists():
                p.unlink()
    done = fae.completed_keys(run_dir)
    if skip_path.exists():
        done |= {(r["sample_id"], r["level"]) for r in read_jsonl(skip_path)}
        done |= {(r["sample_id"], lv) for r in read_jsonl(skip_path) if r["level"] == "*" for lv in cfg.levels}

    corpus = (SourceFunction.from_dict(row) for row in read_jsonl(corpus_path(cfg.corpus)))
    skips: list[fae.SkipRecord] = []
    kept = fae.filter_corpus(corpus, cfg.max_samples, cfg.reject_identifiers, on_skip=skips.append)
    compilers = [CompilerConfig(cfg.compiler, lv, True, tuple(cfg.extra_flags)) for lv in cfg.levels]
    examples = fae.synthesize(kept, compilers, on_skip=skips.append, parallelism=cfg.parallelism, done=done)
    counts = fae.write_examples(examples, run_dir, append=True)
    fresh_skips = [s for s in skips if (s.sample_id, s.level) not in done]
    append_jsonl(skip_path, (s.to_dict() for s in fresh_skips))
    for name, n in sorted(counts.items()):
        print(f"{name}\t{n}")
    print(f"skipped\t{len(fresh_skips)}")
    return 0


def _answers(samples) -> dict[str, str]:
    return {s.sample_id: s.reference_source for s in samples}


def cmd_decompile(cfg: RunConfig) -> int:
    run_dir = prepare_run_dir(cfg)
    samples = load_benchmark(benchmark_path(cfg.benchmark)) if cfg.benchmark else []
    if cfg.tasks:
        tasks = [DecompilationTask.from_dict(row) for row in read_jsonl(cfg.tasks)]
    else:
        tasks = build_tasks(cfg, samples)
    records = run_tasks(cfg, tasks, _answers(samples) if samples else None, run_dir / "records.jsonl", cfg.force)
    two = sum(r.rounds >= 2 for r in records)
    print(f"records\t{len(records)}\nrounds>=2\t{two}\nout\t{run_dir / 'records.jsonl'}")
    return 0


def cmd_evaluate(cfg: RunConfig) -> int:
    run_dir = prepare_run_dir(cfg)
    samples = load_benchmark(benchmark_path(cfg.benchmark))
    records_path = Path(cfg.records) if cfg.records else run_dir / "records.jsonl"
    records = [DecompilationRecord.from_dict(row) for row in read_jsonl(records_path)]
    label = records[0].strategy if records else ""
    result = evaluate_records(cfg, records, samples, run_dir, label, cfg.force)
    print(report.render_table([result]), end="")
    return 0


def cmd_check_benchmark(cfg: RunConfig) -> int:
    samples = load_benchmark(benchmark_path(cfg.benchmark))
    problems = check_benchmark(samples, cfg.toolchain, cfg.levels, cfg.timeout, cfg.parallelism)
    for sample_id, level, problem in problems:
        print(f"{sample_id}\t{level}\t{problem}")
    print(f"{len(samples)} samples, {len(problems)} failures")
    return 1 if problems else 0


def cmd_build_benchmark(cfg: RunConfig) -> int:
    run_dir = prepare_run_dir(cfg)
    samples = load_benchmark(benchmark_path(cfg.benchmark))
    materialize_asm(samples, cfg.toolchain, cfg.levels, force=True)
    out = run_dir / "benchmark.jsonl"
    save_benchmark(samples, out)
    print(out)
    return 0


def _index_rows(path: Path) -> Iterator[tuple]:
    for row in read_jsonl(path):
        if "asm" in row and ("source" in row or "completion" in row):
            if row.get("kind", fae.END_TO_END) != fae.END_TO_END:
                continue
            doc_id = row.get("doc_id") or f"{row['sample_id']}:{row.get('opt_level', '')}"
            yield doc_id, row["asm"], row.get("source", row.get("completion")), row.get("opt_level", "")
        elif "asm_by_level" in row:
            for lv, asm in sorted(row["asm_by_level"].items()):
                yield f"{row['sample_id']}:{lv}", asm, row["reference_source"], lv
        else:
            raise SystemExit(f"unrecognized index corpus row keys: {sorted(row)}")


def cmd_index(cfg: RunConfig) -> int:
    run_dir = prepare_run_dir(cfg)
    out = run_dir / "index.json"
    if out.exists() and not cfg.force:
        print(f"exists\t{out}")
        return 0
    rows = []
    for ref in (cfg.corpus or "").split(","):
        if ref:
            rows.extend(_index_rows(corpus_path(ref) if ref == TOY_CORPUS else Path(ref)))
    index = build_index(rows, cfg.k1, cfg.b)
    index.save(out)
    print(f"documents\t{len(index.documents)}\nout\t{out}")
    return 0


def cmd_retrieve(cfg: RunConfig) -> int:
    run_dir = prepare_run_dir(cfg)
    if not cfg.index:
        raise SystemExit("--index is required")
    index = AsmIndex.load(cfg.index)
    samples = load_benchmark(benchmark_path(cfg.benchmark))
    out = run_dir / "retrieval.jsonl"
    rows = []
    for lv in cfg.levels:
        for s in samples:
            hits = query(index, s.asm_by_level[lv], cfg.top_k)
            rows.append({"sample_id": s.sample_id, "opt_level": lv,
                         "hits": [{"doc_id": d, "score": sc} for d, sc in hits]})
    out.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in rows))
    print(f"queries\t{len(rows)}\nout\t{out}")
    return 0


def cmd_matrix(cfg: RunConfig) -> int:
    """One decompile+evaluate cell per (context compiler, context level)."""
    run_dir = prepare_run_dir(cfg)
    samples = load_benchmark(benchmark_path(cfg.benchmark))
    answers = _answers(samples)
    cells: dict[tuple[str, str], EvalReport] = {}
    for compiler in cfg.compilers:
        for level in cfg.context_levels:
            cell_dir = run_dir / "matrix" / f"{compiler}_{level}"
            cell_dir.mkdir(parents=True, exist_ok=True)
            report_path = cell_dir / "report.json"
            label = f"{cfg.strategy} ({compiler} {level})"
            if report_path.exists() and not cfg.force:
                cells[(compiler, level)] = EvalReport.from_dict(json.loads(report_path.read_text()))
                continue
            tasks = build_tasks(cfg, samples, context_compiler=compiler, context_level=level)
            records = run_tasks(cfg, tasks, answers, cell_dir / "records.jsonl", cfg.force)
            meta = {"context_compiler": compiler, "context_level": level, "strategy": cfg.strategy}
            cells[(compiler, level)] = evaluate_records(cfg, records, samples, cell_dir, label, cfg.force, meta)
    ordered = [cells[k] for k in sorted(cells)]
    report.write_summary(ordered, run_dir / "matrix_summary.txt")
    report.plot_matrix(cells, run_dir / "matrix_reexecutability.png")
    print(report.render_table(ordered), end="")
    return 0


COMMANDS = {
    "synthesize": (cmd_synthesize, "build FAE training data from a C-function corpus"),
    "decompile": (cmd_decompile, "run the decompilation pipeline over a benchmark or task file"),
    "evaluate": (cmd_evaluate, "score decompilation records for re-compilability/re-executability"),
    "index": (cmd_index, "build a BM25 index over an assembly corpus"),
    "retrieve": (cmd_retrieve, "query a BM25 index with benchmark assembly"),
    "matrix": (cmd_matrix, "sweep context optimization levels and compilers"),
    "check-benchmark": (cmd_check_benchmark, "verify every reference passes its own harness"),
    "build-benchmark": (cmd_build_benchmark, "recompute a benchmark's per-level target assembly"),
}


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML/JSON run configuration")
    p.add_argument("--run-dir", dest="run_dir", help="output directory (default runs/<timestamp>)")
    p.add_argument("--backend", choices=["remote", "echo", "null", "mutator"])
    p.add_argument("--endpoint")
    p.add_argument("--model")
    p.add_argument("--api-key-env", dest="api_key_env")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-new-tokens", dest="max_new_tokens", type=int)
    p.add_argument("--compiler")
    p.add_argument("--opt-level", dest="opt_level", choices=["O0", "O1", "O2", "O3"])
    p.add_argument("--levels", help="comma-separated target levels")
    p.add_argument("--strategy", choices=["vanilla", "one_shot", "retrieval", "sc2dec", "one_shot_then_sc2dec"])
    p.add_argument("--template", dest="template_family", choices=["chat_style", "decompile_style"])
    p.add_argument("--context-level", dest="context_level", choices=["O0", "O1", "O2", "O3"])
    p.add_argument("--context-levels", dest="context_levels", help="matrix: comma-separated context levels")
    p.add_argument("--compilers", help="matrix: comma-separated compiler ids")
    p.add_argument("--extra-rounds", dest="extra_rounds", type=int)
    p.add_argument("--timeout", type=float)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--force", action="store_true", default=None)
    p.add_argument("--corpus")
    p.add_argument("--benchmark", help="benchmark JSONL, or 'toy' for the shipped one")
    p.add_argument("--tasks")
    p.add_argument("--records")
    p.add_argument("--index")
    p.add_argument("--max-samples", dest="max_samples", type=int)
    p.add_argument("--reject-identifiers", dest="reject_identifiers")
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--k1", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sc2dec", description="Self-constructed context decompilation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        _common_flags(sub.add_parser(name, help=help_text))
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: v for k, v in vars(args).items() if k not in ("config", "command", "verbose")}
    cfg = load_config(args.config, overrides)
    handler, _ = COMMANDS[args.command]
    return handler(cfg)


if __name__ == "__main__":
    sys.exit(main())
