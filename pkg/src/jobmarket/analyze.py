"""Content analysis and offline geospatial aggregation.

Frequency tables are ad-level counts (a skill counted once per ad), sorted by
count descending and label ascending on ties. Geocoding is a lookup into an
offline gazetteer CSV; nothing touches the network.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field

from . import semgroup
from .errors import ConfigError, DataError

_SPLIT = re.compile(r"[,/&]")


@dataclass
class FrequencyTable:
    field: str
    rows: list                  # of (label, count, share)
    total: int

    def to_csv(self):
        lines = ["rank,label,count,share"]
        for rank, (label, count, share) in enumerate(self.rows, 1):
            lines.append(f'{rank},"{label}",{count},{repr(share)}')
        return "\n".join(lines) + "\n"

    def to_json(self):
        return json.dumps(
            {"field": self.field, "total": self.total,
             "rows": [{"rank": i + 1, "label": l, "count": c, "share": s}
                      for i, (l, c, s) in enumerate(self.rows)]},
            sort_keys=True, ensure_ascii=False, indent=2)


@dataclass
class Gazetteer:
    entries: dict               # normalized city -> (lat, lon, region)

    @classmethod
    def from_csv(cls, path):
        entries = {}
        with open(path, encoding="utf-8") as f:
            for row in csv.DictReader(f):
                lat, lon = float(row["lat"]), float(row["lon"])
                if not (-90 <= lat <= 90 and -180 <= lon <= 180):
                    raise DataError(f"gazetteer row {row['name']!r}: bad coordinates")
                entries[_norm_place(row["name"])] = (lat, lon, row.get("region", ""))
        return cls(entries)


@dataclass
class GeoBucket:
    city: str
    point: tuple                # (lat, lon)
    ad_count: int = 0           # distinct ads naming the city
    location_count: int = 0     # location mentions resolved to the city
    cluster_distribution: dict = field(default_factory=dict)
    segment: str | None = None


@dataclass
class GeoAggregate:
    buckets: list
    unresolved: dict            # verbatim name -> mention count
    ads_with_location: int
    location_mentions: int

    def to_geojson(self):
        features = []
        for b in sorted(self.buckets, key=lambda b: b.city):
            features.append({
                "type": "Feature",
                "geometry": {"type": "Point",
                             "coordinates": [b.point[1], b.point[0]]},
                "properties": {
                    "city": b.city,
                    "ad_count": b.ad_count,
                    "location_count": b.location_count,
                    "cluster_distribution": b.cluster_distribution,
                    "segment": b.segment,
                },
            })
        return json.dumps({"type": "FeatureCollection", "features": features},
                          sort_keys=True, ensure_ascii=False, indent=2)


def _norm_place(name):
    name = name.split("(", 1)[0]  # "Bangalore(Whitefield)" -> "Bangalore"
    return re.sub(r"\s+", " ", name.strip().casefold())


def _sorted_rows(counts, total):
    rows = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(label, count, count / total if total else 0.0)
            for label, count in rows]


def frequency_table(corpus, field, clustering=None):
    """Ranked ad-level counts for one parameter of the corpus."""
    if field == "job_leader":
        if clustering is None:
            raise ConfigError("job_leader tables need a SemanticClustering")
        titles = [ad.job_name for ad in corpus]
        counts = semgroup.fold_counts(titles, clustering)
        total = len(titles)
    elif field == "skill":
        counts = {}
        for ad in corpus:
            for s in set(ad.key_skills):
                counts[s] = counts.get(s, 0) + 1
        total = sum(counts.values())
    elif field in ("industry", "role_category"):
        counts = {}
        for ad in corpus:
            label = getattr(ad, field)
            if label:
                counts[label] = counts.get(label, 0) + 1
        total = sum(counts.values())
    else:
        raise ConfigError(f"unknown frequency field '{field}'")
    return FrequencyTable(field, _sorted_rows(counts, total), total)


def cluster_distribution(corpus, clusters, segment_ads=None):
    """Share of ads touching each skill cluster (an ad may touch several)."""
    named = {c["id"]: (c["name"] or f"cluster-{c['id']}") for c in clusters.clusters}
    of_skill = clusters.member_map()
    counts = dict.fromkeys(named.values(), 0)
    ads = segment_ads if segment_ads is not None else list(corpus)
    contributions = 0
    for ad in ads:
        touched = {of_skill[s] for s in ad.key_skills if s in of_skill}
        for cid in touched:
            counts[named[cid]] += 1
            contributions += 1
    return {name: (count, count / contributions if contributions else 0.0)
            for name, count in counts.items()}


def geocode(locations, g):
    """Resolve location strings against the gazetteer.

    Multi-city strings are split on , / & and truncated at the first
    parenthesis before lookup. Unresolved names are kept verbatim.
    """
    resolved, unresolved = [], []
    for raw in locations:
        for part in _SPLIT.split(raw):
            if not part.strip():
                continue
            key = _norm_place(part)
            hit = g.entries.get(key)
            if hit is not None:
                resolved.append((key, (hit[0], hit[1])))
            else:
                unresolved.append(part.strip())
    return resolved, unresolved


def geo_aggregate(corpus, g, clusters=None, segment_ads=None, segment_tag=None):
    """One GeoBucket per resolved city; multi-location ads count in each."""
    of_skill = clusters.member_map() if clusters is not None else {}
    named = ({c["id"]: (c["name"] or f"cluster-{c['id']}") for c in clusters.clusters}
             if clusters is not None else {})
    buckets = {}
    unresolved = {}
    ads_with_location = 0
    mentions = 0
    ads = segment_ads if segment_ads is not None else list(corpus)
    for ad in ads:
        if not ad.locations:
            continue
        ads_with_location += 1
        res, unres = geocode(ad.locations, g)
        mentions += len(res) + len(unres)
        for name in unres:
            unresolved[name] = unresolved.get(name, 0) + 1
        cities = dict(res)  # dedupe a city repeated inside one ad
        for city, point in cities.items():
            b = buckets.get(city)
            if b is None:
                b = buckets[city] = GeoBucket(city, point, segment=segment_tag)
            b.ad_count += 1
            touched = {of_skill[s] for s in ad.key_skills if s in of_skill}
            for cid in touched:
                nm = named[cid]
                b.cluster_distribution[nm] = b.cluster_distribution.get(nm, 0) + 1
        for city, _ in res:
            buckets[city].location_count += 1
    return GeoAggregate(sorted(buckets.values(), key=lambda b: b.city),
                        unresolved, ads_with_location, mentions)
