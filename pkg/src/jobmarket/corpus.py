"""Advertisement data model, corpus parsing/serialization, and synthetic corpora.

A corpus is an immutable, ordered list of JobAd records. Input formats are
JSON-lines (one object per line) and CSV with the same column names
(list-valued columns pipe-delimited). Output is a canonical JSON-lines
re-serialization with sorted keys, so parse -> serialize -> parse is stable.
"""

from __future__ import annotations

import csv
import io
import json
import random
import re
from dataclasses import dataclass, field
from datetime import date, datetime

from .errors import ConfigError, DataError

_WS = re.compile(r"\s+")

LIST_FIELDS = ("education", "locations", "key_skills", "salary")
INT_FIELDS = ("apply_count", "view_count", "min_experience", "max_experience", "vacancy")
TEXT_FIELDS = (
    "job_name", "company_name", "role_category", "industry",
    "employment_type", "functional_area", "description",
)
ALL_FIELDS = ("id", "advertisement_date") + TEXT_FIELDS + INT_FIELDS + LIST_FIELDS


def normalize_skill(s):
    """Casefold, trim, and collapse internal whitespace. No alias merging."""
    return _WS.sub(" ", s.strip().casefold())


def _parse_date(value):
    if value is None or value == "":
        return None
    if isinstance(value, date):
        return value
    text = str(value).strip()
    try:
        return date.fromisoformat(text)
    except ValueError:
        pass
    # day-month-year fallback; unparseable dates stay null (temporal analysis
    # is out of scope, so this is informational only)
    for fmt in ("%d-%m-%Y", "%d/%m/%Y", "%d.%m.%Y"):
        try:
            return datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    return None


@dataclass(frozen=True)
class JobAd:
    id: str
    job_name: str
    key_skills: tuple
    company_name: str = ""
    advertisement_date: date | None = None
    apply_count: int | None = None
    view_count: int | None = None
    role_category: str = ""
    education: tuple = ()
    industry: str = ""
    min_experience: int | None = None
    max_experience: int | None = None
    employment_type: str = ""
    functional_area: str = ""
    locations: tuple = ()
    vacancy: int | None = None
    salary: tuple = ()
    description: str = ""

    def to_dict(self):
        d = {}
        for name in ALL_FIELDS:
            v = getattr(self, name)
            if isinstance(v, tuple):
                v = list(v)
            elif isinstance(v, date):
                v = v.isoformat()
            d[name] = v
        return d


@dataclass(frozen=True)
class Corpus:
    ads: tuple
    source_tag: str = ""

    def __len__(self):
        return len(self.ads)

    def __iter__(self):
        return iter(self.ads)


@dataclass
class ParseReport:
    corpus: Corpus
    skipped: list = field(default_factory=list)  # (record ref, reason)
    n_read: int = 0


def _validate_record(raw, seen_ids):
    """Turn one raw dict into a JobAd or raise DataError with a diagnostic."""
    for mandatory in ("id", "job_name", "key_skills"):
        if raw.get(mandatory) in (None, "", []):
            raise DataError(f"missing mandatory field '{mandatory}'")
    ad_id = str(raw["id"])
    if ad_id in seen_ids:
        raise DataError(f"duplicate id '{ad_id}'")

    skills = raw["key_skills"]
    if isinstance(skills, str):
        skills = [skills]
    normalized = []
    for s in skills:
        ns = normalize_skill(str(s))
        if ns and ns not in normalized:  # incidence semantics: dedupe within an ad
            normalized.append(ns)
    if not normalized:
        raise DataError("no usable key_skills after normalization")

    ints = {}
    for name in INT_FIELDS:
        v = raw.get(name)
        if v in (None, ""):
            ints[name] = None
        else:
            try:
                n = int(v)
            except (TypeError, ValueError):
                raise DataError(f"field '{name}' not an integer: {v!r}")
            if n < 0:
                raise DataError(f"field '{name}' negative: {n}")
            ints[name] = n
    lo, hi = ints["min_experience"], ints["max_experience"]
    if lo is not None and hi is not None and lo > hi:
        raise DataError("experience range inverted")

    def listify(name):
        v = raw.get(name) or []
        if isinstance(v, str):
            v = [v]
        return tuple(str(x).strip() for x in v if str(x).strip())

    return JobAd(
        id=ad_id,
        job_name=str(raw["job_name"]).strip(),
        key_skills=tuple(normalized),
        company_name=str(raw.get("company_name") or "").strip(),
        advertisement_date=_parse_date(raw.get("advertisement_date")),
        role_category=str(raw.get("role_category") or "").strip(),
        education=listify("education"),
        industry=str(raw.get("industry") or "").strip(),
        employment_type=str(raw.get("employment_type") or "").strip(),
        functional_area=str(raw.get("functional_area") or "").strip(),
        locations=listify("locations"),
        salary=listify("salary"),
        description=str(raw.get("description") or ""),
        **ints,
    )


def _iter_jsonlines(text):
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            yield lineno, json.loads(line), None
        except json.JSONDecodeError as e:
            yield lineno, None, f"bad json: {e}"


def _iter_csv(text):
    reader = csv.DictReader(io.StringIO(text))
    for lineno, row in enumerate(reader, 2):
        raw = {}
        for k, v in row.items():
            if k is None:
                continue
            if k in LIST_FIELDS:
                raw[k] = [p for p in (v or "").split("|") if p.strip()]
            else:
                raw[k] = v
        yield lineno, raw, None


def parse_corpus(stream, format="jsonlines", source_tag=""):
    """Parse a byte stream or path into a Corpus, skipping malformed records.

    Raises DataError if more than half the records are malformed (almost
    certainly the wrong input file) and OSError if the stream is unreadable.
    """
    if isinstance(stream, str):
        with open(stream, "rb") as f:
            data = f.read()
    elif isinstance(stream, bytes):
        data = stream
    else:
        data = stream.read()
        if isinstance(data, str):
            data = data.encode("utf-8")
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise DataError(f"input is not UTF-8: {e}")

    if format == "jsonlines":
        records = _iter_jsonlines(text)
    elif format == "csv":
        records = _iter_csv(text)
    else:
        raise ConfigError(f"unknown corpus format '{format}'")

    ads = []
    skipped = []
    seen = set()
    n_read = 0
    for lineno, raw, err in records:
        n_read += 1
        if err is not None:
            skipped.append((lineno, err))
            continue
        try:
            ad = _validate_record(raw, seen)
        except DataError as e:
            skipped.append((lineno, str(e)))
            continue
        seen.add(ad.id)
        ads.append(ad)

    if n_read > 0 and len(skipped) * 2 > n_read:
        raise DataError(
            f"{len(skipped)} of {n_read} records malformed; "
            "input is probably not a job-ad corpus"
        )
    return ParseReport(Corpus(tuple(ads), source_tag), skipped, n_read)


def to_jsonlines(corpus):
    """Canonical re-serialization: sorted keys, one record per line."""
    lines = [json.dumps(ad.to_dict(), sort_keys=True, ensure_ascii=False)
             for ad in corpus]
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Synthetic corpora with planted structure
# ---------------------------------------------------------------------------

@dataclass
class SynthSpec:
    """Planted structure for a generated corpus.

    skill_marginals: per-skill probability of appearing in an ad.
    pairs: (a, b, joint) forcing P(a and b) = joint; a, b must also be in
        skill_marginals and appear in at most one pair.
    title_groups: each group is a set of near-duplicate title strings; an ad
        draws a group (by weight) and then a variant uniformly.
    city_weights: relative weights for the single location drawn per ad.
    """
    n_ads: int
    skill_marginals: dict = field(default_factory=dict)
    pairs: list = field(default_factory=list)
    title_groups: list = field(default_factory=lambda: [["software engineer"]])
    title_group_weights: list | None = None
    city_weights: dict = field(default_factory=lambda: {"bangalore": 1.0})
    industries: list = field(default_factory=lambda: ["IT-Software", "Recruitment"])


def _check_feasible(spec):
    paired = set()
    for a, b, joint in spec.pairs:
        for s in (a, b):
            if s not in spec.skill_marginals:
                raise ConfigError(f"pair skill '{s}' has no marginal")
            if s in paired:
                raise ConfigError(f"skill '{s}' appears in more than one pair")
            paired.add(s)
        pa, pb = spec.skill_marginals[a], spec.skill_marginals[b]
        if joint > min(pa, pb) + 1e-12:
            raise ConfigError(
                f"joint probability {joint} for ({a},{b}) exceeds a marginal "
                f"({pa}, {pb})"
            )
        if 1 - pa - pb + joint < -1e-12:
            raise ConfigError(
                f"pair ({a},{b}): P(neither) = {1 - pa - pb + joint:.4f} < 0"
            )
    for s, p in spec.skill_marginals.items():
        if not 0 <= p <= 1:
            raise ConfigError(f"marginal for '{s}' out of [0,1]: {p}")
    return paired


def synth_corpus(spec, seed):
    """Generate a corpus matching the planted structure, deterministically."""
    paired = _check_feasible(spec)
    rng = random.Random(seed)
    free_skills = [s for s in spec.skill_marginals if s not in paired]
    group_weights = spec.title_group_weights or [1.0] * len(spec.title_groups)
    cities = list(spec.city_weights)
    city_w = list(spec.city_weights.values())

    ads = []
    for i in range(spec.n_ads):
        skills = []
        for a, b, joint in spec.pairs:
            pa, pb = spec.skill_marginals[a], spec.skill_marginals[b]
            u = rng.random()
            # cells of the 2x2 joint table: (a&b), (a only), (b only)
            if u < joint:
                skills += [a, b]
            elif u < pa:
                skills.append(a)
            elif u < pa + (pb - joint):
                skills.append(b)
        for s in free_skills:
            if rng.random() < spec.skill_marginals[s]:
                skills.append(s)
        if not skills:
            skills.append("misc")

        group = rng.choices(range(len(spec.title_groups)), group_weights)[0]
        title = spec.title_groups[group][rng.randrange(len(spec.title_groups[group]))]
        min_exp = rng.randint(0, 10)
        ads.append(JobAd(
            id=f"synth-{i:06d}",
            job_name=title,
            key_skills=tuple(dict.fromkeys(normalize_skill(s) for s in skills)),
            company_name=f"company-{rng.randrange(40):02d}",
            advertisement_date=date(2021, 8, 1 + rng.randrange(28)),
            apply_count=rng.randrange(200),
            view_count=rng.randrange(2000),
            role_category="Programming & Design",
            education=("B.Tech",),
            industry=spec.industries[rng.randrange(len(spec.industries))],
            min_experience=min_exp,
            max_experience=min_exp + rng.randint(0, 5),
            employment_type="Full Time",
            functional_area="IT Software",
            locations=(rng.choices(cities, city_w)[0],),
            vacancy=rng.randint(1, 8),
            salary=("Not Disclosed",),
            description="",
        ))
    return Corpus(tuple(ads), source_tag=f"synth(seed={seed})")
