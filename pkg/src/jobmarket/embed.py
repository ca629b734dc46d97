"""Tokenization, embedding lookup, and Word Mover's Distance between titles.

WMD is solved exactly as a small transport linear program (titles rarely
exceed ~10 tokens), with Euclidean distance between token embeddings as the
ground cost and nBOW (normalized bag-of-words) weights as supplies/demands.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import DataError

# Strip boundary punctuation but keep technical tokens intact:
# leading "." survives (.net), trailing "+" and "#" survive (c++, c#).
_LSTRIP = string.punctuation.replace(".", "")
_RSTRIP = string.punctuation.replace("+", "").replace("#", "")


def tokenize(text, stopwords=frozenset()):
    """Casefold, split on whitespace, strip boundary punctuation, drop stop-words."""
    out = []
    for raw in text.casefold().split():
        tok = raw.lstrip(_LSTRIP).rstrip(_RSTRIP)
        if tok and not all(c in string.punctuation for c in tok) and tok not in stopwords:
            out.append(tok)
    return out


def load_stopwords(path):
    with open(path, encoding="utf-8") as f:
        return frozenset(line.strip().casefold() for line in f if line.strip())


class EmbeddingStore:
    """Immutable token -> vector table; shareable across threads."""

    def __init__(self, table, dim):
        self.dim = dim
        self._table = {}
        for token, vec in table.items():
            v = np.asarray(vec, dtype=np.float64)
            if v.shape != (dim,) or not np.all(np.isfinite(v)):
                raise DataError(f"embedding for {token!r} is not a finite {dim}-vector")
            self._table[token] = v

    def __contains__(self, token):
        return token in self._table

    def __len__(self):
        return len(self._table)

    def vector(self, token):
        return self._table[token]


def load_embeddings(path):
    """Load a word2vec-format embedding file (text or little-endian binary)."""
    with open(path, "rb") as f:
        data = f.read()
    header_end = data.index(b"\n")
    try:
        vocab_size, dim = map(int, data[:header_end].split())
    except ValueError:
        raise DataError(f"bad word2vec header in {path}")

    table = {}
    body = data[header_end + 1:]
    if _looks_binary(body, dim):
        offset = 0
        vec_bytes = 4 * dim
        for _ in range(vocab_size):
            space = body.index(b" ", offset)
            token = body[offset:space].decode("utf-8").lstrip("\n")
            vec = np.frombuffer(body[space + 1:space + 1 + vec_bytes], dtype="<f4")
            table[token] = vec.astype(np.float64)
            offset = space + 1 + vec_bytes
    else:
        for line in body.decode("utf-8").splitlines():
            if not line.strip():
                continue
            parts = line.rstrip().split(" ")
            table[parts[0]] = np.array([float(x) for x in parts[1:]], dtype=np.float64)
    if len(table) != vocab_size:
        raise DataError(f"header promises {vocab_size} vectors, file has {len(table)}")
    return EmbeddingStore(table, dim)


def _looks_binary(body, dim):
    # text bodies are valid UTF-8 lines of "token float ..."; binary bodies
    # contain raw float32 payloads that almost never decode cleanly
    probe = body[:200 + 4 * dim]
    try:
        probe.decode("utf-8")
        return False
    except UnicodeDecodeError:
        return True


def save_embeddings_text(store, path, tokens=None):
    """Write the store in word2vec text format (used for fixtures/audit)."""
    tokens = list(tokens) if tokens is not None else sorted(store._table)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{len(tokens)} {store.dim}\n")
        for t in tokens:
            f.write(t + " " + " ".join(repr(float(x)) for x in store.vector(t)) + "\n")


@dataclass(frozen=True)
class WeightedDoc:
    """nBOW document: unique in-vocabulary tokens with weights summing to 1."""
    tokens: tuple
    weights: tuple

    @property
    def is_empty(self):
        return not self.tokens


EMPTY_DOC = WeightedDoc((), ())


def to_weighted_doc(tokens, store):
    """Count tokens, drop OOV, renormalize. Returns (doc, oov_list)."""
    counts = {}
    oov = []
    for t in tokens:
        if t in store:
            counts[t] = counts.get(t, 0) + 1
        else:
            oov.append(t)
    if not counts:
        return EMPTY_DOC, oov
    total = sum(counts.values())
    toks = tuple(counts)
    return WeightedDoc(toks, tuple(counts[t] / total for t in toks)), oov


def _ground_costs(a, b, store):
    va = np.stack([store.vector(t) for t in a.tokens])
    vb = np.stack([store.vector(t) for t in b.tokens])
    diff = va[:, None, :] - vb[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=2))


def wmd(a, b, store):
    """Exact WMD: minimum-cost transport of a's nBOW mass onto b's."""
    if a.is_empty or b.is_empty:
        raise DataError("wmd requires non-empty docs; use the string-equality fallback")
    if (b.tokens, b.weights) < (a.tokens, a.weights):  # canonical order makes wmd symmetric bit-for-bit
        a, b = b, a
    if a.tokens == b.tokens and a.weights == b.weights:
        return 0.0
    cost = _ground_costs(a, b, store)
    n, m = cost.shape
    # transport LP: rows ship exactly a's weights, columns receive b's
    A_eq = np.zeros((n + m, n * m))
    for i in range(n):
        A_eq[i, i * m:(i + 1) * m] = 1.0
    for j in range(m):
        A_eq[n + j, j::m] = 1.0
    b_eq = np.concatenate([a.weights, b.weights])
    res = linprog(cost.ravel(), A_eq=A_eq, b_eq=b_eq, method="highs")
    if not res.success:
        raise DataError(f"transport LP failed: {res.message}")
    return float(res.fun)


@dataclass
class DistanceMatrix:
    labels: list
    values: np.ndarray
    flagged: set = field(default_factory=set)  # (i, j) filled by the fallback rule
    sentinel: float | None = None
    oov: dict = field(default_factory=dict)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write("," + ",".join(f'"{l}"' for l in self.labels) + "\n")
            for label, row in zip(self.labels, self.values):
                f.write(f'"{label}",' + ",".join(repr(float(x)) for x in row) + "\n")


def pairwise_distances(values, store, stopwords=frozenset()):
    """WMD matrix over the unique strings in `values` (insertion order kept).

    All-OOV strings fall back to exact string equality: 0 against an equal
    string, the max-distance sentinel (1 + max finite entry) otherwise; such
    cells are flagged.
    """
    labels = list(dict.fromkeys(values))
    n = len(labels)
    docs = []
    oov_report = {}
    for label in labels:
        doc, oov = to_weighted_doc(tokenize(label, stopwords), store)
        docs.append(doc)
        if oov:
            oov_report[label] = oov

    dist = np.zeros((n, n))
    flagged = set()
    for i in range(n):
        for j in range(i + 1, n):
            if docs[i].is_empty or docs[j].is_empty:
                flagged.add((i, j))
                flagged.add((j, i))
                dist[i, j] = dist[j, i] = 0.0 if labels[i] == labels[j] else np.nan
            else:
                d = wmd(docs[i], docs[j], store)
                dist[i, j] = dist[j, i] = d

    sentinel = None
    if np.isnan(dist).any():
        finite_max = np.nanmax(np.where(np.isnan(dist), 0.0, dist))
        sentinel = 1.0 + float(finite_max)
        dist = np.where(np.isnan(dist), sentinel, dist)
    return DistanceMatrix(labels, dist, flagged, sentinel, oov_report)
