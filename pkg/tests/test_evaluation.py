import json

import pytest
from hypothesis import given, strategies as st

from sc2dec.backends import drop_statement
from sc2dec.errors import UnknownSample
from sc2dec.evaluation import (
    EvalReport,
    EvalSample,
    LevelStats,
    SampleVerdict,
    aggregate,
    evaluate_run,
    load_benchmark,
    render_table,
    save_benchmark,
    score_recompilability,
    score_reexecutability,
)
from sc2dec.pipeline import DecompilationRecord
from sc2dec.toolchain import CompilerConfig, OPT_LEVELS

from conftest import needs_gcc

CFG = CompilerConfig()


def _sample(benchmark, sample_id):
    return next(s for s in benchmark if s.sample_id == sample_id)


def _record(sample_id, level, code):
    return DecompilationRecord(sample_id, level, "vanilla", code, True, None, code, 1)


@needs_gcc
def test_reference_recompiles_and_empty_does_not(toy_benchmark):
    s = _sample(toy_benchmark, "factorial")
    assert score_recompilability(s.reference_source, CFG)
    assert not score_recompilability("", CFG)
    assert not score_recompilability("   \n", CFG)


@needs_gcc
def test_recompilability_is_compile_only():
    # g is never defined; a shared library leaves it unresolved
    assert score_recompilability("int f(){return g();}", CFG)


@needs_gcc
def test_wrong_constant_compiles_but_fails(toy_benchmark):
    s = _sample(toy_benchmark, "add_one")
    wrong = s.reference_source.replace("+ 1", "+ 2").replace("+1", "+2")
    assert wrong != s.reference_source
    assert score_recompilability(wrong, CFG)
    assert not score_reexecutability(wrong, s, CFG)
    assert score_reexecutability(s.reference_source, s, CFG)


@needs_gcc
def test_dropped_guard_fails_harness(toy_benchmark):
    s = _sample(toy_benchmark, "scaled_abs")
    seed = next(i for i in range(200) if "n == 0" not in drop_statement(s.reference_source, i, "x"))
    broken = drop_statement(s.reference_source, seed, "x")
    assert score_recompilability(broken, CFG)
    assert not score_reexecutability(broken, s, CFG)


def test_percentages_and_average():
    rows = [SampleVerdict(f"s{i}", "O0", i < 3, i < 2, "x") for i in range(10)]
    report = aggregate(rows, "toy")
    assert report.levels["O0"].recompilable_pct == 30.0
    assert report.levels["O0"].reexecutable_pct == 20.0
    # only O0 has samples, so it is the average
    assert report.recompilable_avg == 30.0
    row = render_table([report]).splitlines()[2].split()
    assert row == ["toy", "30.00", "-", "-", "-", "30.00", "20.00", "-", "-", "-", "20.00"]


def test_average_is_mean_of_levels():
    rows = []
    for lv, hits in zip(OPT_LEVELS, (3, 1, 1, 0)):
        rows += [SampleVerdict(f"s{i}", lv, i < hits, i < hits, "x") for i in range(3)]
    report = aggregate(rows)
    pcts = [report.levels[lv].reexecutable_pct for lv in OPT_LEVELS]
    assert report.reexecutable_avg == pytest.approx(sum(pcts) / 4)
    assert round(report.reexecutable_avg, 2) == 41.67


def test_empty_level_is_zero_not_error():
    assert LevelStats().recompilable_pct == 0.0


@given(st.lists(st.tuples(st.sampled_from(OPT_LEVELS), st.booleans(), st.booleans()), max_size=40))
def test_report_json_round_trip(items):
    rows = [SampleVerdict(f"s{i}", lv, rc or rx, rx, "x") for i, (lv, rc, rx) in enumerate(items)]
    report = aggregate(rows, "r")
    back = EvalReport.from_dict(json.loads(report.to_json()))
    assert back.to_json() == report.to_json()
    for st_ in report.levels.values():
        assert st_.reexecutable <= st_.recompilable <= st_.total


def test_render_table_layout():
    a = aggregate([SampleVerdict("s", lv, True, lv == "O0", "x") for lv in OPT_LEVELS], "echo")
    lines = render_table([a]).splitlines()
    assert "Re-Compilability" in lines[0] and "Re-Executability" in lines[0]
    assert lines[1].split() == ["Method"] + (list(OPT_LEVELS) + ["AVG"]) * 2
    assert lines[2].split() == ["echo"] + ["100.00"] * 5 + ["100.00", "0.00", "0.00", "0.00", "25.00"]


def test_unknown_sample_rejected(toy_benchmark):
    with pytest.raises(UnknownSample):
        evaluate_run([_record("nope", "O0", "")], toy_benchmark, CFG)


@needs_gcc
def test_evaluate_run_is_deterministic_and_ordered(toy_benchmark):
    bench = toy_benchmark[:3]
    recs = [_record(s.sample_id, lv, s.reference_source if lv == "O0" else "")
            for s in bench for lv in ("O1", "O0")]
    a = evaluate_run(recs, bench, CFG, label="x")
    b = evaluate_run(list(reversed(recs)), bench, CFG, parallelism=2, label="x")
    assert a.to_json() == b.to_json()
    assert a.levels["O0"].reexecutable_pct == 100.0 and a.levels["O1"].recompilable_pct == 0.0
    assert all(r.run_status == "skipped" for r in a.rows if not r.recompilable)
    assert all(r.recompilable for r in a.rows if r.reexecutable)


def test_benchmark_round_trip(tmp_path, toy_benchmark):
    path = tmp_path / "bench.jsonl"
    save_benchmark(toy_benchmark, path)
    back = load_benchmark(path)
    assert [s.to_dict() for s in back] == [s.to_dict() for s in toy_benchmark]
    assert len(back) >= 10 and all(set(s.asm_by_level) == set(OPT_LEVELS) for s in back)
    assert isinstance(back[0], EvalSample)
