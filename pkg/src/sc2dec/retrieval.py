"""BM25 over cleaned assembly, used to pick the retrieval baseline's context example."""

from __future__ import annotations

import json
import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import EmptyCorpus

_TOKEN = re.compile(r"[%$]?[a-z0-9_]+")
_NUMBER = re.compile(r"0x[0-9a-f]+|\d+")


def tokenize_asm(asm: str) -> list[str]:
    """Lowercase tokens; ``%``/``$`` stay attached and numeric literals become ``<num>``."""
    tokens = []
    for tok in _TOKEN.findall(asm.lower()):
        prefix = tok[0] if tok[0] in "%$" else ""
        body = tok[len(prefix):]
        if _NUMBER.fullmatch(body):
            tok = prefix + "<num>"
        tokens.append(tok)
    return tokens


@dataclass
class Document:
    doc_id: str
    tokens: list[str]
    source: str
    asm: str = ""
    opt_level: str = ""

    def to_dict(self) -> dict:
        return {"doc_id": self.doc_id, "tokens": self.tokens, "source": self.source,
                "asm": self.asm, "opt_level": self.opt_level}


@dataclass
class AsmIndex:
    documents: list[Document]
    doc_freqs: dict[str, int]
    avg_doc_len: float
    k1: float = 1.5
    b: float = 0.75
    _postings: dict[str, list[tuple[int, int]]] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        postings: dict[str, list[tuple[int, int]]] = defaultdict(list)
        for i, doc in enumerate(self.documents):
            for term, tf in Counter(doc.tokens).items():
                postings[term].append((i, tf))
        self._postings = dict(postings)

    def idf(self, term: str) -> float:
        n = len(self.documents)
        df = self.doc_freqs.get(term, 0)
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def get(self, doc_id: str) -> Document:
        for doc in self.documents:
            if doc.doc_id == doc_id:
                return doc
        raise KeyError(doc_id)

    def to_json(self) -> str:
        return json.dumps({
            "k1": self.k1,
            "b": self.b,
            "avg_doc_len": self.avg_doc_len,
            "doc_freqs": dict(sorted(self.doc_freqs.items())),
            "documents": [d.to_dict() for d in self.documents],
        }, sort_keys=True)

    def save(self, path: Path | str) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: Path | str) -> "AsmIndex":
        data = json.loads(Path(path).read_text())
        docs = [Document(**d) for d in data["documents"]]
        return cls(docs, data["doc_freqs"], data["avg_doc_len"], data["k1"], data["b"])


def build_index(corpus: Iterable[tuple[str, str, str]], k1: float = 1.5, b: float = 0.75) -> AsmIndex:
    """Index ``(doc_id, asm, source)`` triples (an optional fourth item is the opt level)."""
    documents = []
    for item in corpus:
        doc_id, asm, source = item[:3]
        level = item[3] if len(item) > 3 else ""
        documents.append(Document(str(doc_id), tokenize_asm(asm), source, asm, level))
    if not documents:
        raise EmptyCorpus("cannot index an empty corpus")
    doc_freqs: Counter[str] = Counter()
    for doc in documents:
        doc_freqs.update(set(doc.tokens))
    avg = sum(len(d.tokens) for d in documents) / len(documents)
    return AsmIndex(documents, dict(doc_freqs), avg, k1, b)


def query(index: AsmIndex, asm: str, top_k: int = 1) -> list[tuple[str, float]]:
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    docs = index.documents
    scores = [0.0] * len(docs)
    avgdl = index.avg_doc_len or 1.0
    for term in tokenize_asm(asm):
        postings = index._postings.get(term)
        if not postings:
            continue
        idf = index.idf(term)
        for i, tf in postings:
            norm = index.k1 * (1.0 - index.b + index.b * len(docs[i].tokens) / avgdl)
            scores[i] += idf * tf * (index.k1 + 1.0) / (tf + norm)
    ranked = sorted(((docs[i].doc_id, s) for i, s in enumerate(scores)), key=lambda p: (-p[1], p[0]))
    return ranked[:top_k]
