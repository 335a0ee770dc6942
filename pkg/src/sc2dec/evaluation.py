"""Re-compilability / re-executability scoring per optimization level."""

from __future__ import annotations

import json
import logging
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import disasm, toolchain
from .errors import ToolTimeout, UnknownSample
from .pipeline import DecompilationRecord, wrap_translation_unit
from .toolchain import OPT_LEVELS, CompilerConfig, OutputKind

log = logging.getLogger(__name__)


@dataclass
class EvalSample:
    sample_id: str
    reference_source: str
    test_harness: str
    entry_name: str
    asm_by_level: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "reference_source": self.reference_source,
            "test_harness": self.test_harness,
            "entry_name": self.entry_name,
            "asm_by_level": dict(self.asm_by_level),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalSample":
        return cls(
            sample_id=str(data["sample_id"]),
            reference_source=data["reference_source"],
            test_harness=data["test_harness"],
            entry_name=data["entry_name"],
            asm_by_level=dict(data.get("asm_by_level") or {}),
        )


def load_benchmark(path: Path | str) -> list[EvalSample]:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                samples.append(EvalSample.from_dict(json.loads(line)))
    return samples


def save_benchmark(samples: Iterable[EvalSample], path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(s.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def target_asm(sample: EvalSample, level: str, cfg: CompilerConfig) -> str:
    """Cleaned asm of the sample's entry function compiled at ``level``."""
    build = cfg.replace(opt_level=level, debug_info=False).with_flags("-lm")
    with tempfile.TemporaryDirectory(prefix="sc2dec-bench-") as work:
        outcome = toolchain.compile_source(
            sample.reference_source, sample.sample_id, build, OutputKind.SHARED_LIBRARY, work
        )
        if not outcome.success:
            raise RuntimeError(f"reference for {sample.sample_id} does not compile:\n{outcome.diagnostics}")
        raw = toolchain.disassemble(outcome.artifact_path)
    return disasm.extract_function(raw, sample.entry_name, level, cfg.compiler_id).text


def materialize_asm(samples: Sequence[EvalSample], cfg: CompilerConfig, levels: Sequence[str] = OPT_LEVELS,
                    force: bool = False) -> list[EvalSample]:
    for sample in samples:
        for level in levels:
            if force or level not in sample.asm_by_level:
                sample.asm_by_level[level] = target_asm(sample, level, cfg)
    return list(samples)


def _compile_program(decompiled: str, harness: str | None, cfg: CompilerConfig, kind: OutputKind, work: str):
    unit = wrap_translation_unit(decompiled)
    if harness:
        unit = unit + "\n" + harness + ("" if harness.endswith("\n") else "\n")
    try:
        return toolchain.compile_source(unit, "decompiled", cfg.with_flags("-lm"), kind, work)
    except ToolTimeout as exc:
        log.info("compile timed out: %s", exc)
        return None


def score_recompilability(decompiled: str, cfg: CompilerConfig) -> bool:
    """Compile-stage check only: the wrapped output must build as a shared library."""
    if not decompiled.strip():
        return False
    with tempfile.TemporaryDirectory(prefix="sc2dec-rc-") as work:
        outcome = _compile_program(decompiled, None, cfg, OutputKind.SHARED_LIBRARY, work)
        return bool(outcome and outcome.success)


def execute_with_harness(decompiled: str, sample: EvalSample, cfg: CompilerConfig,
                         timeout_s: Optional[float] = None) -> toolchain.RunVerdict:
    if not decompiled.strip():
        return toolchain.RunVerdict("fail", stderr="empty output")
    with tempfile.TemporaryDirectory(prefix="sc2dec-rx-") as work:
        outcome = _compile_program(decompiled, sample.test_harness, cfg, OutputKind.EXECUTABLE, work)
        if outcome is None or not outcome.success:
            return toolchain.RunVerdict("fail", stderr=outcome.diagnostics if outcome else "compile timeout")
        return toolchain.run_executable(outcome.artifact_path, timeout_s)


def score_reexecutability(decompiled: str, sample: EvalSample, cfg: CompilerConfig,
                          timeout_s: Optional[float] = None) -> bool:
    return execute_with_harness(decompiled, sample, cfg, timeout_s).passed


@dataclass
class LevelStats:
    total: int = 0
    recompilable: int = 0
    reexecutable: int = 0

    @property
    def recompilable_pct(self) -> float:
        return 100.0 * self.recompilable / self.total if self.total else 0.0

    @property
    def reexecutable_pct(self) -> float:
        return 100.0 * self.reexecutable / self.total if self.total else 0.0


@dataclass
class SampleVerdict:
    sample_id: str
    opt_level: str
    recompilable: bool
    reexecutable: bool
    run_status: str

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "opt_level": self.opt_level,
            "recompilable": self.recompilable,
            "reexecutable": self.reexecutable,
            "run_status": self.run_status,
        }


@dataclass
class EvalReport:
    levels: dict[str, LevelStats]
    rows: list[SampleVerdict]
    label: str = ""
    meta: dict = field(default_factory=dict)

    def _present(self) -> list[str]:
        return [lv for lv in OPT_LEVELS if self.levels.get(lv) and self.levels[lv].total]

    @property
    def recompilable_avg(self) -> float:
        present = self._present()
        return sum(self.levels[lv].recompilable_pct for lv in present) / len(present) if present else 0.0

    @property
    def reexecutable_avg(self) -> float:
        present = self._present()
        return sum(self.levels[lv].reexecutable_pct for lv in present) / len(present) if present else 0.0

    def to_dict(self) -> dict:
        levels = {}
        for lv in OPT_LEVELS:
            st = self.levels.get(lv, LevelStats())
            levels[lv] = {
                "total": st.total,
                "recompilable_count": st.recompilable,
                "reexecutable_count": st.reexecutable,
                "recompilable_pct": st.recompilable_pct,
                "reexecutable_pct": st.reexecutable_pct,
            }
        return {
            "label": self.label,
            "meta": self.meta,
            "levels": levels,
            "avg": {"recompilable_pct": self.recompilable_avg, "reexecutable_pct": self.reexecutable_avg},
            "rows": [r.to_dict() for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        levels = {
            lv: LevelStats(v["total"], v["recompilable_count"], v["reexecutable_count"])
            for lv, v in data["levels"].items()
        }
        rows = [SampleVerdict(**r) for r in data.get("rows", [])]
        return cls(levels, rows, data.get("label", ""), data.get("meta", {}))


def evaluate_run(
    records: Iterable[DecompilationRecord],
    benchmark: Sequence[EvalSample],
    cfg: CompilerConfig,
    timeout_s: Optional[float] = None,
    parallelism: int = 1,
    label: str = "",
) -> EvalReport:
    by_id = {s.sample_id: s for s in benchmark}
    records = list(records)
    for rec in records:
        if rec.sample_id not in by_id:
            raise UnknownSample(rec.sample_id)

    def score(rec: DecompilationRecord) -> SampleVerdict:
        code = rec.final_output
        recompilable = score_recompilability(code, cfg)
        status = "skipped"
        reexecutable = False
        # execution is only attempted for code that recompiles
        if recompilable:
            verdict = execute_with_harness(code, by_id[rec.sample_id], cfg, timeout_s)
            status = verdict.describe()
            reexecutable = verdict.passed
        return SampleVerdict(rec.sample_id, rec.opt_level, recompilable, reexecutable, status)

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        rows = list(pool.map(score, records))
    return aggregate(rows, label)


def aggregate(rows: Iterable[SampleVerdict], label: str = "", meta: Optional[dict] = None) -> EvalReport:
    order = {lv: i for i, lv in enumerate(OPT_LEVELS)}
    rows = sorted(rows, key=lambda r: (order.get(r.opt_level, 99), r.sample_id))
    levels = {lv: LevelStats() for lv in OPT_LEVELS}
    for r in rows:
        st = levels.setdefault(r.opt_level, LevelStats())
        st.total += 1
        st.recompilable += r.recompilable
        st.reexecutable += r.reexecutable
    return EvalReport(levels, rows, label, meta or {})


def check_benchmark(benchmark: Sequence[EvalSample], cfg: CompilerConfig,
                    levels: Sequence[str] = OPT_LEVELS, timeout_s: Optional[float] = None,
                    parallelism: int = 1) -> list[tuple[str, str, str]]:
    """(sample_id, level, problem) for every reference that fails its own harness."""
    jobs = [(s, lv) for s in benchmark for lv in levels]

    def check(job):
        sample, level = job
        verdict = execute_with_harness(sample.reference_source, sample, cfg.replace(opt_level=level), timeout_s)
        return None if verdict.passed else (sample.sample_id, level, verdict.describe())

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        return [r for r in pool.map(check, jobs) if r is not None]


def render_table(reports: Sequence[EvalReport]) -> str:
    """Aligned text table: one row per report, O0-O3 and AVG for both metrics."""
    label_w = max([len("Method")] + [len(r.label) for r in reports])
    cols = list(OPT_LEVELS) + ["AVG"]
    cell = 7
    block = len(cols) * (cell + 1) - 1
    lines = [
        f"{'':<{label_w}}  {'Re-Compilability':^{block}}  {'Re-Executability':^{block}}",
        f"{'Method':<{label_w}}  " + " ".join(f"{c:>{cell}}" for c in cols)
        + "  " + " ".join(f"{c:>{cell}}" for c in cols),
    ]
    def fmt(v):
        # levels that were not run print as "-" rather than 0.00
        return f"{'-':>{cell}}" if v is None else f"{v:>{cell}.2f}"

    for r in reports:
        present = [r.levels.get(lv, LevelStats()) for lv in OPT_LEVELS]
        rc = [st.recompilable_pct if st.total else None for st in present] + [r.recompilable_avg]
        rx = [st.reexecutable_pct if st.total else None for st in present] + [r.reexecutable_avg]
        lines.append(
            f"{r.label:<{label_w}}  " + " ".join(fmt(v) for v in rc)
            + "  " + " ".join(fmt(v) for v in rx)
        )
    return "\n".join(lines) + "\n"
