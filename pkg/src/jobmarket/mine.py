"""Apriori mining over per-ad skill sets and lift-ranked recommendations.

Supports are exact: every itemset carries its integer transaction count, and
support/confidence/lift are derived from counts so the downward-closure and
lift-symmetry identities hold to rounding error only at output time.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .errors import ConfigError, DataError


@dataclass
class TransactionSet:
    transactions: list          # of frozensets of skill strings
    universe: list              # sorted skill vocabulary

    def __post_init__(self):
        allowed = set(self.universe)
        for t in self.transactions:
            extra = t - allowed
            if extra:
                raise DataError(f"transaction items outside the universe: {sorted(extra)}")


@dataclass(frozen=True)
class FrequentItemset:
    items: frozenset
    count: int
    total: int

    @property
    def support(self):
        return self.count / self.total


@dataclass(frozen=True)
class AssociationRule:
    antecedent: frozenset
    consequent: frozenset
    support: float              # of antecedent | consequent together
    confidence: float
    lift: float
    count: int                  # joint transaction count
    total: int


def transactions_from_corpus(corpus, vocab=None):
    """One transaction per ad; optionally restricted to a SkillVocab."""
    keep = set(vocab.skills) if vocab is not None else None
    txns = []
    universe = set()
    for ad in corpus:
        items = set(ad.key_skills)
        if keep is not None:
            items &= keep
        txns.append(frozenset(items))
        universe |= items
    return TransactionSet(txns, sorted(universe))


def _meets_support(count, total, min_support):
    return Fraction(count, total) >= Fraction(min_support)


def apriori(t, min_support, max_len=4):
    """Level-wise frequent itemset search with downward-closure pruning."""
    if not 0 < min_support <= 1:
        raise ConfigError(f"min_support must be in (0, 1], got {min_support}")
    if max_len < 1:
        raise ConfigError("max_len must be >= 1")
    total = len(t.transactions)
    if total == 0:
        raise DataError("empty transaction set")

    counts = {}
    for txn in t.transactions:
        for item in txn:
            key = frozenset((item,))
            counts[key] = counts.get(key, 0) + 1
    level = {s for s, c in counts.items() if _meets_support(c, total, min_support)}
    frequent = {s: counts[s] for s in level}

    k = 2
    while level and k <= max_len:
        candidates = set()
        ordered = sorted(level, key=lambda s: tuple(sorted(s)))
        for i in range(len(ordered)):
            for j in range(i + 1, len(ordered)):
                union = ordered[i] | ordered[j]
                if len(union) == k and all(
                        frozenset(sub) in frequent for sub in combinations(union, k - 1)):
                    candidates.add(union)
        if not candidates:
            break
        cand_counts = dict.fromkeys(candidates, 0)
        for txn in t.transactions:
            if len(txn) < k:
                continue
            for cand in candidates:
                if cand <= txn:
                    cand_counts[cand] += 1
        level = {c for c, n in cand_counts.items()
                 if _meets_support(n, total, min_support)}
        frequent.update({c: cand_counts[c] for c in level})
        k += 1

    out = [FrequentItemset(items, c, total) for items, c in frequent.items()]
    out.sort(key=lambda f: (len(f.items), -f.count, tuple(sorted(f.items))))
    return out


def generate_rules(itemsets, t, min_lift=0.0):
    """All rules X -> Z\\X over frequent Z with lift >= min_lift."""
    total = len(t.transactions)
    count_of = {f.items: f.count for f in itemsets}
    rules = []
    for f in itemsets:
        if len(f.items) < 2:
            continue
        items = sorted(f.items)
        for r in range(1, len(items)):
            for ante in combinations(items, r):
                antecedent = frozenset(ante)
                consequent = f.items - antecedent
                ca = count_of.get(antecedent)
                cc = count_of.get(consequent)
                if ca is None or cc is None:
                    # cannot happen for true Apriori output (downward closure)
                    raise DataError("itemset list is not closed under subsets")
                confidence = Fraction(f.count, ca)
                lift = confidence / Fraction(cc, total)
                if float(lift) >= min_lift:
                    rules.append(AssociationRule(
                        antecedent, consequent,
                        support=f.count / total,
                        confidence=float(confidence),
                        lift=float(lift),
                        count=f.count, total=total,
                    ))
    rules.sort(key=lambda r: (-r.lift, -r.support,
                              tuple(sorted(r.antecedent)), tuple(sorted(r.consequent))))
    return rules


def top_recommendations(rules, k=2):
    """Per distinct antecedent, the k rules with the highest lift."""
    if k < 1:
        raise ConfigError("k must be >= 1")
    by_ante = {}
    for r in rules:
        by_ante.setdefault(tuple(sorted(r.antecedent)), []).append(r)
    top = {}
    for ante, rs in sorted(by_ante.items()):
        rs.sort(key=lambda r: (-r.lift, -r.support, tuple(sorted(r.consequent))))
        top[ante] = rs[:k]
    return top


def format_rule(rule):
    """Render a rule the way the recommendation tables display them."""
    ante = ", ".join(sorted(rule.antecedent))
    cons = ", ".join(sorted(rule.consequent))
    return f"{ante} → {{{cons}}} {rule.lift:.3f}"


def segment_baskets(corpus, segment, vocab=None, high_application_percentile=90):
    """Transactions restricted to one ad segment.

    high_vacancy: vacancy > 4; fresher: min_experience == 0;
    experienced: min_experience > corpus mean of min_experience;
    high_application: apply_count at or above the configured percentile.
    """
    if segment == "high_vacancy":
        ads = [ad for ad in corpus if (ad.vacancy or 0) > 4]
    elif segment == "fresher":
        ads = [ad for ad in corpus if ad.min_experience == 0]
    elif segment == "experienced":
        known = [ad.min_experience for ad in corpus if ad.min_experience is not None]
        if not known:
            ads = []
        else:
            mean_exp = statistics.fmean(known)
            ads = [ad for ad in corpus
                   if ad.min_experience is not None and ad.min_experience > mean_exp]
    elif segment == "high_application":
        known = sorted(ad.apply_count for ad in corpus if ad.apply_count is not None)
        if not known:
            ads = []
        else:
            cut = known[min(len(known) - 1,
                            int(len(known) * high_application_percentile / 100))]
            ads = [ad for ad in corpus
                   if ad.apply_count is not None and ad.apply_count >= cut]
    else:
        raise ConfigError(f"unknown segment '{segment}'")

    from .corpus import Corpus
    return transactions_from_corpus(Corpus(tuple(ads)), vocab)
