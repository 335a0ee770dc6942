import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from sc2dec.errors import EmptyCorpus
from sc2dec.retrieval import AsmIndex, build_index, query, tokenize_asm

VOCAB = ["mov", "add", "sub", "ret", "push", "pop", "lea", "cmp", "jne", "%eax", "%rdi", "$<num>", "call", "imul"]


def naive_bm25(docs: dict[str, list[str]], q: list[str], k1=1.5, b=0.75) -> dict[str, float]:
    """Straight per-document BM25, written independently of the indexed version."""
    n = len(docs)
    avgdl = sum(len(t) for t in docs.values()) / n
    out = {}
    for doc_id, toks in docs.items():
        score = 0.0
        for term in q:
            df = sum(1 for t in docs.values() if term in t)
            if df == 0:
                continue
            idf = math.log(1 + (n - df + 0.5) / (df + 0.5))
            tf = toks.count(term)
            score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(toks) / avgdl))
        out[doc_id] = score
    return out


def naive_ranking(scores):
    return sorted(scores.items(), key=lambda p: (-p[1], p[0]))


def test_tokenizer_examples():
    assert tokenize_asm("mov $0x1,%eax") == ["mov", "$<num>", "%eax"]
    assert tokenize_asm("") == []
    assert tokenize_asm("call <printf>") == ["call", "printf"]
    assert tokenize_asm("LEA 0x10(%RSP),%rdi") == ["lea", "<num>", "%rsp", "%rdi"]


def test_doc_freqs_and_average_length():
    idx = build_index([("a", "mov ret", ""), ("b", "mov mov add ret", ""), ("c", "mov", "")])
    assert idx.doc_freqs["mov"] == 3
    assert idx.doc_freqs["ret"] == 2
    two = build_index([("a", "mov ret", ""), ("b", "add sub mul push", "")])
    assert two.avg_doc_len == 3.0


def test_frozen_two_document_score():
    # df(mov)=1, N=2 -> idf=ln 2; |d|=2, avgdl=3 -> norm = 1.5*(0.25+0.5) = 1.125
    idx = build_index([("a", "mov ret", ""), ("b", "add sub mul push", "")])
    (top, score), (other, zero) = query(idx, "mov", top_k=2)
    assert top == "a" and other == "b"
    assert score == pytest.approx(math.log(2) * 2.5 / 2.125, abs=1e-12)
    assert zero == 0.0


def test_empty_corpus():
    with pytest.raises(EmptyCorpus):
        build_index([])


def test_out_of_vocabulary_and_empty_query():
    idx = build_index([("b", "mov ret", ""), ("a", "add", "")])
    assert query(idx, "vfmadd231ps", top_k=5) == [("a", 0.0), ("b", 0.0)]
    assert query(idx, "", top_k=5) == [("a", 0.0), ("b", 0.0)]
    with pytest.raises(ValueError):
        query(idx, "mov", top_k=0)


def _corpus(n, seed):
    rng = random.Random(seed)
    return {f"d{i:02d}": [rng.choice(VOCAB) for _ in range(rng.randint(1, 12))] for i in range(n)}


@pytest.mark.parametrize("n,seed", [(5, 0), (20, 1), (20, 2)])
def test_matches_naive_scorer(n, seed):
    docs = _corpus(n, seed)
    idx = build_index((d, " ".join(t), f"src {d}") for d, t in docs.items())
    q = " ".join(random.Random(seed + 100).choices(VOCAB, k=6))
    got = query(idx, q, top_k=n)
    want = naive_ranking(naive_bm25(docs, tokenize_asm(q)))
    assert [d for d, _ in got] == [d for d, _ in want]
    for (_, a), (_, b) in zip(got, want):
        assert abs(a - b) <= 1e-9


def test_self_query_ranks_first():
    docs = _corpus(20, 7)
    idx = build_index((d, " ".join(t), "") for d, t in docs.items())
    for d, toks in docs.items():
        if len(set(toks)) < 3 or any(set(o) == set(toks) for k, o in docs.items() if k != d):
            continue
        assert query(idx, " ".join(toks))[0][0] == d


def test_save_load_round_trip(tmp_path):
    idx = build_index([("a", "mov $0x1,%eax\nret", "int a;", "O1"), ("b", "add %edi,%eax", "int b;", "O1")])
    path = tmp_path / "index.json"
    idx.save(path)
    back = AsmIndex.load(path)
    assert back == idx
    assert query(back, "mov %eax", 2) == query(idx, "mov %eax", 2)
    assert back.get("a").opt_level == "O1"


@settings(max_examples=50)
@given(st.lists(st.sampled_from(VOCAB), min_size=1, max_size=8), st.sampled_from(VOCAB))
def test_adding_a_matching_term_never_lowers_score(doc, term):
    others = [("x", "push pop", ""), ("y", "imul lea cmp", "")]
    idx = build_index([("t", " ".join(doc), "")] + others)
    q = " ".join(doc[:2])
    s0 = dict(query(idx, q, 3))["t"]
    s1 = dict(query(idx, q + " " + term, 3))["t"]
    assert s1 >= s0 - 1e-12


def test_short_document_can_lose_its_own_query():
    # a short listing whose every token occurs more often in a longer one is
    # outscored by it; the naive scorer agrees, so this is BM25 behaviour
    short = "endbr64\nlea 0x1(%rdi),%eax\nret"
    dense = "endbr64\nlea 0x1(%rdi),%eax\nlea 0x2(%rdi),%eax\nret\nret"
    filler = [(f"f{i}", "push %rbp\nmov %rsp,%rbp\npop %rbp", "") for i in range(3)]
    idx = build_index([("short", short, ""), ("dense", dense, "")] + filler)
    got = query(idx, short, top_k=2)
    docs = {d: tokenize_asm(a) for d, a in [("short", short), ("dense", dense)] + [(f, a) for f, a, _ in filler]}
    want = naive_ranking(naive_bm25(docs, tokenize_asm(short)))[:2]
    assert [d for d, _ in got] == [d for d, _ in want] == ["dense", "short"]
