import json

import pytest

from sc2dec.cli import main, read_jsonl
from sc2dec.config import load_config
from sc2dec.evaluation import save_benchmark
from sc2dec.pipeline import DecompilationTask
from sc2dec.prompting import PromptStrategy

from conftest import needs_gcc


@pytest.fixture
def small_bench(tmp_path, toy_benchmark):
    path = tmp_path / "bench.jsonl"
    save_benchmark(toy_benchmark[:2], path)
    return path


def run(*argv):
    return main([str(a) for a in argv])


@needs_gcc
def test_decompile_null_from_task_file(tmp_path, toy_benchmark, capsys):
    tasks = tmp_path / "tasks.jsonl"
    with open(tasks, "w") as fh:
        for s in toy_benchmark[:2]:
            for lv in ("O0", "O3"):
                task = DecompilationTask(s.sample_id, s.asm_by_level[lv], lv, PromptStrategy("sc2dec"))
                fh.write(json.dumps(task.to_dict()) + "\n")
    out = tmp_path / "run"
    assert run("decompile", "--backend", "null", "--tasks", tasks, "--run-dir", out) == 0
    records = list(read_jsonl(out / "records.jsonl"))
    assert len(records) == 4
    assert all(r["rounds"] == 1 and r["final_output"] == r["initial_output"] for r in records)
    assert (out / "config.json").exists()
    assert "records\t4" in capsys.readouterr().out


@needs_gcc
def test_decompile_then_evaluate_echo(tmp_path, small_bench, capsys):
    out = tmp_path / "run"
    assert run("decompile", "--backend", "echo", "--benchmark", small_bench, "--run-dir", out) == 0
    records = list(read_jsonl(out / "records.jsonl"))
    assert len(records) == 8 and all(r["rounds"] == 2 for r in records)
    capsys.readouterr()
    assert run("evaluate", "--benchmark", small_bench, "--run-dir", out) == 0
    table = capsys.readouterr().out
    assert table.splitlines()[2].split()[1:] == ["100.00"] * 10
    rep = json.loads((out / "report.json").read_text())
    assert rep["avg"] == {"recompilable_pct": 100.0, "reexecutable_pct": 100.0}
    assert (out / "report.png").stat().st_size > 0
    assert (out / "report.txt").read_text() == table


@needs_gcc
def test_decompile_resumes_and_force_redoes(tmp_path, small_bench):
    out = tmp_path / "run"
    args = ["decompile", "--backend", "null", "--benchmark", small_bench, "--run-dir", out, "--levels", "O0"]
    run(*args)
    path = out / "records.jsonl"
    lines = path.read_text().splitlines()
    path.write_text(lines[0] + "\n")
    run(*args)
    assert sorted(path.read_text().splitlines()) == sorted(lines)
    run(*args)
    assert len(path.read_text().splitlines()) == 2
    run(*args, "--force")
    assert len(path.read_text().splitlines()) == 2


@needs_gcc
def test_matrix_four_levels(tmp_path, small_bench, capsys):
    out = tmp_path / "m"
    rc = run("matrix", "--backend", "echo", "--benchmark", small_bench, "--levels", "O0",
             "--context-levels", "O0,O1,O2,O3", "--compilers", "gcc", "--run-dir", out)
    assert rc == 0
    reports = sorted((out / "matrix").glob("*/report.json"))
    assert [p.parent.name for p in reports] == ["gcc_O0", "gcc_O1", "gcc_O2", "gcc_O3"]
    for p in reports:
        data = json.loads(p.read_text())
        assert data["meta"]["context_level"] == p.parent.name.split("_")[1]
        recs = list(read_jsonl(p.parent / "records.jsonl"))
        assert all(r["context_opt_level"] == data["meta"]["context_level"] for r in recs)
    assert (out / "matrix_reexecutability.png").exists()
    assert len((out / "matrix_summary.txt").read_text().splitlines()) == 2 + 4


@needs_gcc
def test_synthesize_and_index(tmp_path, capsys):
    out = tmp_path / "fae"
    assert run("synthesize", "--corpus", "toy", "--max-samples", 2, "--levels", "O0,O2", "--run-dir", out) == 0
    assert sorted(p.name for p in out.glob("fae_*.jsonl")) == [
        "fae_end_to_end_O0.jsonl", "fae_end_to_end_O2.jsonl",
        "fae_step_by_step_O0.jsonl", "fae_step_by_step_O2.jsonl",
    ]
    assert "skipped\t0" in capsys.readouterr().out
    # second run finds everything done
    run("synthesize", "--corpus", "toy", "--max-samples", 2, "--levels", "O0,O2", "--run-dir", out)
    assert len((out / "fae_end_to_end_O0.jsonl").read_text().splitlines()) == 2

    idx_dir = tmp_path / "idx"
    corpora = f"{out / 'fae_end_to_end_O0.jsonl'},{out / 'fae_end_to_end_O2.jsonl'}"
    assert run("index", "--corpus", corpora, "--run-dir", idx_dir) == 0
    index = json.loads((idx_dir / "index.json").read_text())
    assert len(index["documents"]) == 4


@needs_gcc
def test_retrieve_self_hit(tmp_path, small_bench):
    idx_dir = tmp_path / "idx"
    run("index", "--corpus", small_bench, "--run-dir", idx_dir)
    out = tmp_path / "ret"
    run("retrieve", "--index", idx_dir / "index.json", "--benchmark", small_bench, "--levels", "O1",
        "--top-k", 2, "--run-dir", out)
    for row in read_jsonl(out / "retrieval.jsonl"):
        assert row["hits"][0]["doc_id"] == f"{row['sample_id']}:O1"
        assert len(row["hits"]) == 2


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("backend: mutator\nseed: 4\nlevels: O1,O3\nstrategy: one_shot\n")
    cfg = load_config(path, {"seed": 9, "backend": None})
    assert cfg.backend == "mutator" and cfg.seed == 9
    assert cfg.levels == ["O1", "O3"]
    assert cfg.prompt_strategy.uses_one_shot
    path.write_text("bogus_key: 1\n")
    with pytest.raises((ValueError, SystemExit)):
        load_config(path, {})


@needs_gcc
def test_check_benchmark_passes(small_bench, capsys):
    assert run("check-benchmark", "--benchmark", small_bench, "--levels", "O0,O3") == 0
    assert "0 failures" in capsys.readouterr().out


def test_bad_subcommand():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
