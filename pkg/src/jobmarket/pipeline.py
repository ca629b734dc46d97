"""Orchestrates ingest -> preprocess -> analyze -> report from one config.

Every stage writes its intermediate artifact into the output directory for
audit. The expensive title stage (WMD matrix + affinity propagation) is
cached under a key derived from everything that feeds it, so re-running with
only downstream thresholds changed reuses the artifact and still produces
byte-identical results to a cold run.
"""

from __future__ import annotations

import hashlib
import json
import statistics
from pathlib import Path

from . import analyze, embed, mine, semgroup, skillnet
from .config import PipelineConfig
from .corpus import Corpus, parse_corpus, to_jsonlines
from .errors import DataError, StageError

VERSION = "0.1.0"


def _canon(obj):
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def _sha(*chunks):
    h = hashlib.sha256()
    for c in chunks:
        h.update(c if isinstance(c, bytes) else str(c).encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()[:16]


def _stage(name):
    class _Guard:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, StageError):
                raise StageError(name, exc) from exc
    return _Guard()


def run(config: PipelineConfig):
    """Execute the full pipeline. Returns the report dict; writes artifacts."""
    problems = config.validate()
    if problems:
        from .errors import ConfigError
        raise ConfigError("; ".join(problems))

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "cache").mkdir(exist_ok=True)

    # ingest ---------------------------------------------------------------
    with _stage("ingest"):
        if config.input_path is None:
            raise DataError("run requires input.path (use the harvest subcommand "
                            "to produce a corpus first)")
        report_in = parse_corpus(config.input_path, config.input_format,
                                 source_tag=config.input_path)
        corpus = report_in.corpus
        if len(corpus) == 0:
            raise DataError("corpus is empty after validation")
        corpus_canon = to_jsonlines(corpus)
        (out / "corpus.jsonl").write_text(corpus_canon, encoding="utf-8")

    # titles: WMD distances + affinity propagation + leaders ----------------
    with _stage("titles"):
        emb_bytes = Path(config.embeddings).read_bytes()
        stop_bytes = Path(config.stopwords).read_bytes() if config.stopwords else b""
        cache_key = _sha(corpus_canon, emb_bytes, stop_bytes, config.ap)
        cache_file = out / "cache" / f"titles-{cache_key}.json"
        titles = [ad.job_name for ad in corpus]
        if cache_file.exists():
            cached = json.loads(cache_file.read_text(encoding="utf-8"))
            clustering = _clustering_from_dict(cached["clustering"])
        else:
            store = embed.load_embeddings(config.embeddings)
            stopwords = (embed.load_stopwords(config.stopwords)
                         if config.stopwords else frozenset())
            dmat = embed.pairwise_distances(titles, store, stopwords)
            dmat.to_csv(out / "distance_matrix.csv")
            clustering = semgroup.affinity_propagation(dmat, config.ap)
            freq = {}
            for t in titles:
                freq[t] = freq.get(t, 0) + 1
            semgroup.assign_leaders(clustering, freq)
            cache_file.write_text(
                _canon({"clustering": _clustering_to_dict(clustering)}),
                encoding="utf-8")
        (out / "title_clusters.json").write_text(clustering.to_json() + "\n",
                                                 encoding="utf-8")
        (out / "title_leaders.csv").write_text(clustering.to_csv(), encoding="utf-8")
        leader_counts = semgroup.fold_counts(titles, clustering)

    # skills: incidence matrix, cosine similarity, clusters ------------------
    with _stage("skills"):
        vocab = skillnet.filter_skills(corpus, config.min_occurrence)
        jsm = skillnet.build_matrix(corpus, vocab)
        njs = skillnet.normalize_rows(jsm)
        mss = skillnet.cosine_matrix(njs, vocab)
        mss.to_csv(out / "skill_similarity.csv")
        _write_edges(out / "skill_edges.csv", mss)
        clusters = skillnet.cluster_skills(
            mss, config.resolution, config.skill_seed, config.restarts)
        names = {}
        if config.names_file:
            names = {int(k): v for k, v in
                     json.loads(Path(config.names_file).read_text(encoding="utf-8")).items()}
        clusters, name_warnings = skillnet.apply_names(clusters, names)
        (out / "skill_clusters.json").write_text(clusters.to_json() + "\n",
                                                 encoding="utf-8")
        (out / "skill_clusters.csv").write_text(clusters.to_csv(), encoding="utf-8")

    # analyze ----------------------------------------------------------------
    with _stage("analyze"):
        tables = {}
        tables["job_leader"] = analyze.frequency_table(corpus, "job_leader", clustering)
        for f in ("skill", "industry", "role_category"):
            tables[f] = analyze.frequency_table(corpus, f)
        for name, table in tables.items():
            (out / f"table_{name}.csv").write_text(table.to_csv(), encoding="utf-8")

        distributions = {"all": analyze.cluster_distribution(corpus, clusters)}
        segments = ("fresher", "experienced", "high_vacancy", "high_application")
        segment_ads = {}
        for seg in segments:
            ads = _segment_ads(corpus, seg, config.high_application_percentile)
            segment_ads[seg] = ads
            distributions[seg] = analyze.cluster_distribution(corpus, clusters, ads)

        geo = None
        if config.gazetteer:
            gaz = analyze.Gazetteer.from_csv(config.gazetteer)
            geo = analyze.geo_aggregate(corpus, gaz, clusters)
            (out / "geo.geojson").write_text(geo.to_geojson() + "\n", encoding="utf-8")

    # mine ---------------------------------------------------------------------
    with _stage("mine"):
        txns = mine.transactions_from_corpus(corpus, vocab)
        itemsets = mine.apriori(txns, config.min_support, config.max_len)
        (out / "itemsets.json").write_text(_canon(
            [{"items": sorted(f.items), "count": f.count, "support": f.support}
             for f in itemsets]), encoding="utf-8")
        rules = mine.generate_rules(itemsets, txns, config.min_lift)
        _write_rules(out / "rules.csv", rules)
        top = mine.top_recommendations(rules, config.top_k)
        segment_top = {}
        for seg, ads in segment_ads.items():
            if not ads:
                segment_top[seg] = {}
                continue
            seg_txns = mine.transactions_from_corpus(Corpus(tuple(ads)), vocab)
            try:
                seg_sets = mine.apriori(seg_txns, config.min_support, config.max_len)
            except DataError:
                segment_top[seg] = {}
                continue
            seg_rules = mine.generate_rules(seg_sets, seg_txns, config.min_lift)
            segment_top[seg] = mine.top_recommendations(seg_rules, config.top_k)

    # report --------------------------------------------------------------------
    with _stage("report"):
        report = {
            "metadata": {
                "tool_version": VERSION,
                "config_hash": _sha(repr(config)),
                "corpus": {
                    "size": len(corpus),
                    "source": corpus.source_tag,
                    "skipped_records": len(report_in.skipped),
                    "unique_titles": len(set(titles)),
                    "vocabulary_size": len(vocab.skills),
                    "min_occurrence": vocab.min_occurrence,
                },
                "counting_rules": {
                    "cluster_distribution": "an ad counts once per cluster touched",
                    "skill_counts": "ad-level incidence (once per ad)",
                },
                "ap_converged": clustering.converged,
                "skill_cluster_quality": clusters.quality,
                "resolution": clusters.resolution,
                "name_warnings": name_warnings,
            },
            "title_groups": [
                {"exemplar": c.exemplar, "leader": c.leader,
                 "members": sorted(c.members),
                 "folded_count": leader_counts.get(c.leader, 0)}
                for c in clustering.clusters
            ],
            "skill_clusters": clusters.clusters,
            "frequency_tables": {
                name: json.loads(t.to_json()) for name, t in tables.items()
            },
            "segment_distributions": {
                seg: {k: {"count": v[0], "share": v[1]} for k, v in dist.items()}
                for seg, dist in distributions.items()
            },
            "geo": json.loads(geo.to_geojson()) if geo else None,
            "rules": [
                {"antecedent": sorted(r.antecedent), "consequent": sorted(r.consequent),
                 "support": r.support, "confidence": r.confidence, "lift": r.lift}
                for r in rules
            ],
            "recommendations": {
                ", ".join(ante): [mine.format_rule(r) for r in rs]
                for ante, rs in top.items()
            },
            "segment_recommendations": {
                seg: {", ".join(ante): [mine.format_rule(r) for r in rs]
                      for ante, rs in seg_top.items()}
                for seg, seg_top in segment_top.items()
            },
        }
        (out / "report.json").write_text(_canon(report), encoding="utf-8")
        (out / "report.txt").write_text(_render_text(report), encoding="utf-8")
    return report


def _segment_ads(corpus, segment, percentile):
    if segment == "high_vacancy":
        return [ad for ad in corpus if (ad.vacancy or 0) > 4]
    if segment == "fresher":
        return [ad for ad in corpus if ad.min_experience == 0]
    if segment == "experienced":
        known = [ad.min_experience for ad in corpus if ad.min_experience is not None]
        if not known:
            return []
        mean_exp = statistics.fmean(known)
        return [ad for ad in corpus
                if ad.min_experience is not None and ad.min_experience > mean_exp]
    if segment == "high_application":
        known = sorted(ad.apply_count for ad in corpus if ad.apply_count is not None)
        if not known:
            return []
        cut = known[min(len(known) - 1, int(len(known) * percentile / 100))]
        return [ad for ad in corpus
                if ad.apply_count is not None and ad.apply_count >= cut]
    raise DataError(f"unknown segment '{segment}'")


def _write_edges(path, mss):
    lines = ["skill_a,skill_b,similarity"]
    for a, b, w in mss.to_edge_list():
        lines.append(f'"{a}","{b}",{w!r}')
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_rules(path, rules):
    lines = ["antecedent,consequent,support,confidence,lift"]
    for r in rules:
        lines.append('"%s","%s",%r,%r,%r' % (
            "|".join(sorted(r.antecedent)), "|".join(sorted(r.consequent)),
            r.support, r.confidence, r.lift))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _clustering_to_dict(c):
    return {
        "clusters": [{"exemplar": x.exemplar, "leader": x.leader,
                      "members": list(x.members)} for x in c.clusters],
        "assignments": c.assignments,
        "converged": c.converged,
    }


def _clustering_from_dict(d):
    clusters = [semgroup.Cluster(x["exemplar"], list(x["members"]), x["leader"])
                for x in d["clusters"]]
    return semgroup.SemanticClustering(clusters, dict(d["assignments"]),
                                       d["converged"])


def _render_text(report):
    out = []
    md = report["metadata"]
    out.append(f"jobmarket report (tool {md['tool_version']}, "
               f"corpus size {md['corpus']['size']})")
    out.append("")
    for name, table in sorted(report["frequency_tables"].items()):
        out.append(f"== {name} (total {table['total']}) ==")
        out.append(f"{'rank':>4}  {'label':<40} {'count':>8}  share")
        for row in table["rows"][:25]:
            out.append(f"{row['rank']:>4}  {row['label']:<40} "
                       f"{row['count']:>8}  {row['share']:.4f}")
        out.append("")
    out.append("== top recommendations ==")
    for ante in sorted(report["recommendations"]):
        for line in report["recommendations"][ante]:
            out.append(line)
    out.append("")
    return "\n".join(out) + "\n"
