"""Affinity propagation over title distances, leader election, count folding.

Similarity is the negated distance. Message updates are the standard
responsibility/availability sweeps with damping; there is no random jitter —
symmetry is broken by a deterministic index-based perturbation so identical
inputs always produce identical clusterings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError


@dataclass
class APConfig:
    damping: float = 0.5
    max_iterations: int = 200
    convergence_window: int = 15
    preference: float | str = "median"  # "median" or a fixed real

    def validate(self):
        if not 0.5 <= self.damping < 1:
            raise ConfigError(f"damping must be in [0.5, 1), got {self.damping}")
        if self.convergence_window >= self.max_iterations:
            raise ConfigError("convergence_window must be < max_iterations")
        if self.max_iterations < 1 or self.convergence_window < 1:
            raise ConfigError("iteration counts must be positive")


@dataclass
class Cluster:
    exemplar: str
    members: list
    leader: str | None = None


@dataclass
class SemanticClustering:
    clusters: list
    assignments: dict  # label -> cluster index
    converged: bool = True

    def to_json(self):
        return json.dumps(
            [{"exemplar": c.exemplar, "leader": c.leader, "members": list(c.members)}
             for c in self.clusters],
            sort_keys=True, ensure_ascii=False, indent=2)

    def to_csv(self):
        lines = ["value,leader"]
        for label, idx in sorted(self.assignments.items()):
            lines.append(f'"{label}","{self.clusters[idx].leader or ""}"')
        return "\n".join(lines) + "\n"


def affinity_propagation(d, config=None):
    """Cluster the labels of a DistanceMatrix; exemplars chosen by AP.

    If message passing oscillates at the configured damping (the classic AP
    failure mode on highly symmetric inputs), the sweep is retried with the
    damping raised in fixed steps up to 0.9. The retry ladder is
    deterministic, so identical inputs still give identical clusterings.
    """
    config = config or APConfig()
    config.validate()
    result = _affinity_propagation_once(d, config)
    damping = config.damping
    while not result.converged and damping < 0.9 - 1e-9:
        damping = min(0.9, damping + 0.15)
        retry = APConfig(damping, config.max_iterations,
                         config.convergence_window, config.preference)
        result = _affinity_propagation_once(d, retry)
    return result


def _affinity_propagation_once(d, config):
    labels = list(d.labels)
    n = len(labels)
    if n == 0:
        return SemanticClustering([], {})
    if n == 1:
        return SemanticClustering([Cluster(labels[0], [labels[0]])], {labels[0]: 0})
    dist = np.asarray(d.values, dtype=np.float64)
    if np.isnan(dist).any():
        raise DataError("distance matrix contains NaN")

    S = -dist
    off = S[~np.eye(n, dtype=bool)]
    if np.allclose(off, off[0], rtol=0, atol=0):
        # all points mutually indistinguishable: a single cluster, anchored
        # on the lexicographically smallest label instead of oscillating
        exemplar = min(labels)
        members = sorted(labels)
        return SemanticClustering([Cluster(exemplar, members)],
                                  {l: 0 for l in labels})

    if config.preference == "median":
        pref = float(np.median(off))
    else:
        pref = float(config.preference)
    np.fill_diagonal(S, pref)

    # deterministic tie-breaking: a tiny index ramp, orders of magnitude
    # below the smallest similarity gap that matters
    scale = max(np.abs(off).max(), abs(pref), 1.0)
    ramp = np.arange(n * n, dtype=np.float64).reshape(n, n)
    S = S + (1e-10 * scale / (n * n)) * ramp

    A = np.zeros((n, n))
    R = np.zeros((n, n))
    lam = config.damping
    idx = np.arange(n)
    exemplar_history = []
    converged = False

    for _ in range(config.max_iterations):
        # responsibilities
        AS = A + S
        max1_idx = AS.argmax(axis=1)
        max1 = AS[idx, max1_idx]
        AS[idx, max1_idx] = -np.inf
        max2 = AS.max(axis=1)
        Rnew = S - max1[:, None]
        Rnew[idx, max1_idx] = S[idx, max1_idx] - max2
        R = lam * R + (1 - lam) * Rnew

        # availabilities
        Rp = np.maximum(R, 0)
        Rp[idx, idx] = R[idx, idx]
        col = Rp.sum(axis=0)
        Anew = col[None, :] - Rp
        dA = np.diag(Anew).copy()
        Anew = np.minimum(Anew, 0)
        Anew[idx, idx] = dA
        A = lam * A + (1 - lam) * Anew

        if not (np.isfinite(A).all() and np.isfinite(R).all()):
            raise DataError("affinity propagation messages diverged")

        # converged = exemplar set stable over the window AND the messages
        # themselves settled; the latter rejects slow transients that can
        # hold a wrong exemplar set steady for a while under heavy damping
        delta = max(np.abs(A - Aprev).max(), np.abs(R - Rprev).max()) \
            if exemplar_history else np.inf
        Aprev, Rprev = A.copy(), R.copy()
        exemplars = frozenset(np.flatnonzero(np.diag(A) + np.diag(R) > 0))
        exemplar_history.append(exemplars)
        if len(exemplar_history) >= config.convergence_window and exemplars:
            window = exemplar_history[-config.convergence_window:]
            if all(e == exemplars for e in window) and delta < 1e-6 * scale:
                converged = True
                break

    E = sorted(exemplar_history[-1]) if exemplar_history[-1] else []
    if not E:
        E = [int(np.argmax(np.diag(A) + np.diag(R)))]

    crit = (A + R)[:, E]
    assign = np.array(E)[crit.argmax(axis=1)]
    for k in E:
        assign[k] = k

    clusters = []
    cluster_of = {}
    for k in E:
        cluster_of[k] = len(clusters)
        clusters.append(Cluster(labels[k], []))
    assignments = {}
    for i in range(n):
        ci = cluster_of[int(assign[i])]
        clusters[ci].members.append(labels[i])
        assignments[labels[i]] = ci
    return SemanticClustering(clusters, assignments, converged)


def elect_leader(members, frequency):
    """Member with the highest corpus count; ties go to the smallest label."""
    if not members:
        raise DataError("cannot elect a leader for an empty cluster")
    return min(members, key=lambda m: (-frequency[m], m))


def assign_leaders(clustering, frequency):
    for c in clustering.clusters:
        c.leader = elect_leader(c.members, frequency)
    return clustering


def fold_counts(values, clustering):
    """Fold raw occurrences onto each value's cluster leader."""
    counts = {}
    for v in values:
        idx = clustering.assignments.get(v)
        if idx is None:
            raise DataError(f"value {v!r} not present in the clustering")
        leader = clustering.clusters[idx].leader
        if leader is None:
            raise DataError("clustering has no leaders; call assign_leaders first")
        counts[leader] = counts.get(leader, 0) + 1
    return counts
