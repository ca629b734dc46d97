"""Job-skill incidence matrix, skill-skill cosine similarity, skill clusters.

The incidence matrix is binary (an ad either lists a skill or it doesn't).
Rows are L2-normalized per the stated normalization; the similarity matrix
is the cosine between skill occurrence profiles, which for binary incidence
equals c_jk / sqrt(c_jj * c_kk) over co-occurrence counts c.
Skill clusters come from resolution-parameterized local moving: maximize
Q = sum over same-cluster pairs of (similarity - gamma).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import ConfigError, DataError


@dataclass
class SkillVocab:
    skills: list                # sorted, unique, normalized
    occurrence: dict            # skill -> number of distinct ads listing it
    min_occurrence: int

    def index(self):
        return {s: j for j, s in enumerate(self.skills)}


@dataclass
class JobSkillMatrix:
    n_jobs: int
    vocab: SkillVocab
    entries: sparse.csr_matrix  # binary incidence, jobs x skills
    zero_rows: list = field(default_factory=list)  # ads with no retained skill


@dataclass
class SkillSimilarity:
    vocab: SkillVocab
    matrix: np.ndarray
    zero_diag: list = field(default_factory=list)  # skills absent from the matrix

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write("," + ",".join(f'"{s}"' for s in self.vocab.skills) + "\n")
            for s, row in zip(self.vocab.skills, self.matrix):
                f.write(f'"{s}",' + ",".join(repr(float(x)) for x in row) + "\n")

    def to_edge_list(self, cutoff=0.0):
        """(skill_a, skill_b, similarity) triples for j < k, above cutoff."""
        edges = []
        m = len(self.vocab.skills)
        for j in range(m):
            for k in range(j + 1, m):
                w = float(self.matrix[j, k])
                if w > cutoff:
                    edges.append((self.vocab.skills[j], self.vocab.skills[k], w))
        return edges


@dataclass
class SkillClusterSet:
    clusters: list              # of {"id": int, "members": [skill], "name": str|None}
    resolution: float
    seed: int
    quality: float = 0.0
    quality_history: list = field(default_factory=list)  # per local-moving pass

    def member_map(self):
        return {s: c["id"] for c in self.clusters for s in c["members"]}

    def to_json(self):
        return json.dumps(self.clusters, sort_keys=True, ensure_ascii=False, indent=2)

    def to_csv(self):
        lines = ["skill,cluster_id,cluster_name"]
        for c in self.clusters:
            for s in c["members"]:
                lines.append(f'"{s}",{c["id"]},"{c["name"] or ""}"')
        return "\n".join(lines) + "\n"


def filter_skills(corpus, min_occurrence):
    """Retain skills listed in at least min_occurrence distinct ads."""
    if min_occurrence < 1:
        raise ConfigError("min_occurrence must be >= 1")
    counts = {}
    for ad in corpus:
        for s in set(ad.key_skills):
            counts[s] = counts.get(s, 0) + 1
    kept = sorted(s for s, c in counts.items() if c >= min_occurrence)
    if not kept:
        raise DataError(
            f"no skill appears in {min_occurrence}+ ads; lower the threshold "
            f"(max observed count is {max(counts.values(), default=0)})"
        )
    return SkillVocab(kept, {s: counts[s] for s in kept}, min_occurrence)


def build_matrix(corpus, vocab):
    col = vocab.index()
    rows, cols = [], []
    zero_rows = []
    for i, ad in enumerate(corpus):
        hit = False
        for s in ad.key_skills:
            j = col.get(s)
            if j is not None:
                rows.append(i)
                cols.append(j)
                hit = True
        if not hit:
            zero_rows.append(i)
    entries = sparse.csr_matrix(
        (np.ones(len(rows)), (rows, cols)),
        shape=(len(corpus), len(vocab.skills)),
    )
    return JobSkillMatrix(len(corpus), vocab, entries, zero_rows)


def normalize_rows(m):
    """Divide each row by its L2 norm; zero rows stay zero."""
    entries = m.entries.tocsr().astype(np.float64)
    norms = np.sqrt(np.asarray(entries.multiply(entries).sum(axis=1)).ravel())
    inv = np.where(norms > 0, 1.0 / np.where(norms > 0, norms, 1.0), 0.0)
    return sparse.diags(inv) @ entries


def cosine_matrix(n, vocab):
    """Skill-skill cosine similarity between skill occurrence profiles.

    Equals c_jk / sqrt(c_jj * c_kk) over co-occurrence counts c. The binary
    incidence pattern is recovered from the normalized matrix's sparsity
    structure, so the row normalization step cannot distort the cosine.
    """
    if sparse.issparse(n):
        binary = (n != 0).astype(np.float64)
        co = np.asarray((binary.T @ binary).todense())
    else:
        binary = (np.asarray(n) != 0).astype(np.float64)
        co = binary.T @ binary
    d = np.sqrt(np.diag(co))
    denom = np.outer(d, d)
    with np.errstate(invalid="ignore", divide="ignore"):
        m = np.where(denom > 0, co / np.where(denom > 0, denom, 1.0), 0.0)
    m = np.clip((m + m.T) / 2.0, 0.0, 1.0)
    zero_diag = [vocab.skills[j] for j in np.flatnonzero(np.diag(m) == 0)]
    return SkillSimilarity(vocab, m, zero_diag)


def _local_moving(w, order, rng):
    """One restart of iterated local moving. Returns (membership, q_history)."""
    n = w.shape[0]
    membership = list(range(n))
    q_history = [_quality_from(w, membership)]
    improved = True
    while improved:
        improved = False
        rng.shuffle(order)
        for v in order:
            # gain of v against every cluster = sum of w[v, u] over members
            gains = {}
            for u in range(n):
                if u == v:
                    continue
                c = membership[u]
                gains[c] = gains.get(c, 0.0) + w[v, u]
            own = membership[v]
            stay = gains.get(own, 0.0)
            # candidate moves scored by their exact change in Q
            best_delta, best_c = 0.0, own
            for c, g in sorted(gains.items()):
                if c != own and g - stay > best_delta + 1e-12:
                    best_delta, best_c = g - stay, c
            if -stay > best_delta + 1e-12:  # leaving for a fresh singleton
                best_delta, best_c = -stay, _fresh_cluster(membership, v)
            if best_c != own:
                membership[v] = best_c
                improved = True
        q_history.append(_quality_from(w, membership))
    return membership, q_history


def _fresh_cluster(membership, v):
    if sum(1 for c in membership if c == membership[v]) == 1:
        return membership[v]  # already a singleton
    used = set(membership)
    c = 0
    while c in used:
        c += 1
    return c


def _quality_from(w, membership):
    q = 0.0
    n = len(membership)
    for j in range(n):
        for k in range(j + 1, n):
            if membership[j] == membership[k]:
                q += w[j, k]
    return q


def _canonical(membership, skills):
    groups = {}
    for s, c in zip(skills, membership):
        groups.setdefault(c, []).append(s)
    return tuple(sorted(tuple(sorted(g)) for g in groups.values()))


def cluster_skills(s, resolution=None, seed=0, restarts=10):
    """Best-of-restarts local moving on the similarity graph.

    resolution (gamma) defaults to the mean off-diagonal similarity; pairs
    with similarity above gamma attract, below gamma repel.
    """
    if restarts < 1:
        raise ConfigError("restarts must be >= 1")
    skills = list(s.vocab.skills)
    m = len(skills)
    if m == 0:
        raise DataError("empty skill vocabulary")
    active = [j for j in range(m) if skills[j] not in s.zero_diag]
    sim = s.matrix[np.ix_(active, active)]
    if resolution is None:
        off = sim[~np.eye(len(active), dtype=bool)]
        resolution = float(off.mean()) if off.size else 0.0
    w = sim - resolution
    np.fill_diagonal(w, 0.0)

    best = None
    for r in range(restarts):
        rng = random.Random(seed + r)
        membership, q_history = _local_moving(w, list(range(len(active))), rng)
        q = q_history[-1]
        canon = _canonical(membership, [skills[j] for j in active])
        key = (-q, canon)
        if best is None or key < best[0]:
            best = (key, canon, q, q_history)

    _, canon, q, q_history = best
    clusters = [{"id": i, "members": list(members), "name": None}
                for i, members in enumerate(canon)]
    # zero-occurrence skills are excluded from the graph but still need a home
    next_id = len(clusters)
    for skill in s.zero_diag:
        clusters.append({"id": next_id, "members": [skill], "name": None})
        next_id += 1
    return SkillClusterSet(clusters, resolution, seed, q, q_history)


def apply_names(clusters, names=None):
    """Attach supplied cluster names; unnamed clusters get 'cluster-<id>'."""
    names = names or {}
    known = {c["id"] for c in clusters.clusters}
    warnings = [f"no cluster with id {i}" for i in names if i not in known]
    for c in clusters.clusters:
        c["name"] = names.get(c["id"], f"cluster-{c['id']}")
    return clusters, warnings
