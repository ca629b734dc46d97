"""Command-line entry point.

Subcommands mirror the pipeline stages; `run` executes everything. Exit
codes: 0 ok, 2 config problem, 3 bad input data, 4 stage failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analyze, embed, harvest, mine, semgroup, skillnet
from .config import DEFAULTS_TOML, PipelineConfig
from .corpus import parse_corpus, to_jsonlines
from .errors import ConfigError, DataError, StageError
from .pipeline import run as run_pipeline


def _load_config(args):
    cfg = PipelineConfig.load(args.config)
    if args.out:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.skill_seed = args.seed
    return cfg


def _outdir(cfg):
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _ingest(cfg):
    if cfg.input_path is None:
        raise ConfigError("input.path is required for this subcommand")
    report = parse_corpus(cfg.input_path, cfg.input_format, source_tag=cfg.input_path)
    if len(report.corpus) == 0:
        raise DataError("corpus is empty after validation")
    return report


def cmd_validate(args):
    cfg = _load_config(args)
    problems = cfg.validate()
    for p in problems:
        print(p)
    return 2 if problems else 0


def cmd_harvest(args):
    cfg = _load_config(args)
    if args.root:
        cfg.harvest_root = args.root
    if args.key_phrase:
        cfg.harvest_key_phrase = args.key_phrase
    if args.workers:
        cfg.harvest_workers = args.workers
    if args.rate:
        cfg.harvest_rate = args.rate
    if args.max_pages:
        cfg.harvest_max_pages = args.max_pages
    if not cfg.harvest_root:
        raise ConfigError("harvest.root (or --root) is required")
    crawl_cfg = harvest.CrawlConfig(
        root_url=cfg.harvest_root,
        key_phrase=cfg.harvest_key_phrase,
        max_workers=cfg.harvest_workers,
        max_requests_per_worker_per_sec=cfg.harvest_rate,
        max_pages=cfg.harvest_max_pages,
    )
    docs, stats = harvest.crawl(crawl_cfg)
    out = _outdir(cfg)
    lines = [json.dumps(d, sort_keys=True, ensure_ascii=False) for d in docs]
    (out / "harvested.jsonl").write_text("\n".join(lines) + ("\n" if lines else ""),
                                         encoding="utf-8")
    print(f"harvested {len(docs)} documents "
          f"({stats.discovered} discovered, {len(stats.skipped)} skipped, "
          f"{len(stats.requests)} requests)")
    return 0


def cmd_ingest(args):
    cfg = _load_config(args)
    report = _ingest(cfg)
    out = _outdir(cfg)
    (out / "corpus.jsonl").write_text(to_jsonlines(report.corpus), encoding="utf-8")
    for ref, reason in report.skipped:
        print(f"skipped record {ref}: {reason}", file=sys.stderr)
    print(f"ingested {len(report.corpus)} ads ({len(report.skipped)} skipped)")
    return 0


def cmd_cluster_titles(args):
    cfg = _load_config(args)
    if cfg.embeddings is None:
        raise ConfigError("embed.embeddings is required")
    corpus = _ingest(cfg).corpus
    out = _outdir(cfg)
    store = embed.load_embeddings(cfg.embeddings)
    stopwords = embed.load_stopwords(cfg.stopwords) if cfg.stopwords else frozenset()
    titles = [ad.job_name for ad in corpus]
    dmat = embed.pairwise_distances(titles, store, stopwords)
    dmat.to_csv(out / "distance_matrix.csv")
    clustering = semgroup.affinity_propagation(dmat, cfg.ap)
    freq = {}
    for t in titles:
        freq[t] = freq.get(t, 0) + 1
    semgroup.assign_leaders(clustering, freq)
    (out / "title_clusters.json").write_text(clustering.to_json() + "\n",
                                             encoding="utf-8")
    (out / "title_leaders.csv").write_text(clustering.to_csv(), encoding="utf-8")
    print(f"{len(clustering.clusters)} title groups over {len(titles)} ads")
    return 0


def cmd_cluster_skills(args):
    cfg = _load_config(args)
    corpus = _ingest(cfg).corpus
    out = _outdir(cfg)
    vocab = skillnet.filter_skills(corpus, cfg.min_occurrence)
    jsm = skillnet.build_matrix(corpus, vocab)
    mss = skillnet.cosine_matrix(skillnet.normalize_rows(jsm), vocab)
    mss.to_csv(out / "skill_similarity.csv")
    clusters = skillnet.cluster_skills(mss, cfg.resolution, cfg.skill_seed,
                                       cfg.restarts)
    names = {}
    if cfg.names_file:
        names = {int(k): v for k, v in
                 json.loads(Path(cfg.names_file).read_text(encoding="utf-8")).items()}
    clusters, warnings = skillnet.apply_names(clusters, names)
    for w in warnings:
        print(w, file=sys.stderr)
    (out / "skill_clusters.json").write_text(clusters.to_json() + "\n",
                                             encoding="utf-8")
    (out / "skill_clusters.csv").write_text(clusters.to_csv(), encoding="utf-8")
    print(f"{len(clusters.clusters)} skill clusters over {len(vocab.skills)} skills "
          f"(Q={clusters.quality:.4f})")
    return 0


def cmd_mine(args):
    cfg = _load_config(args)
    corpus = _ingest(cfg).corpus
    out = _outdir(cfg)
    vocab = skillnet.filter_skills(corpus, cfg.min_occurrence)
    txns = mine.transactions_from_corpus(corpus, vocab)
    itemsets = mine.apriori(txns, cfg.min_support, cfg.max_len)
    rules = mine.generate_rules(itemsets, txns, cfg.min_lift)
    top = mine.top_recommendations(rules, cfg.top_k)
    lines = ["antecedent,consequent,support,confidence,lift"]
    for r in rules:
        lines.append('"%s","%s",%r,%r,%r' % (
            "|".join(sorted(r.antecedent)), "|".join(sorted(r.consequent)),
            r.support, r.confidence, r.lift))
    (out / "rules.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    for ante in sorted(top):
        for r in top[ante]:
            print(mine.format_rule(r))
    return 0


def cmd_analyze(args):
    cfg = _load_config(args)
    corpus = _ingest(cfg).corpus
    out = _outdir(cfg)
    for f in ("skill", "industry", "role_category"):
        table = analyze.frequency_table(corpus, f)
        (out / f"table_{f}.csv").write_text(table.to_csv(), encoding="utf-8")
    if cfg.gazetteer:
        gaz = analyze.Gazetteer.from_csv(cfg.gazetteer)
        geo = analyze.geo_aggregate(corpus, gaz)
        (out / "geo.geojson").write_text(geo.to_geojson() + "\n", encoding="utf-8")
        print(f"{len(geo.buckets)} cities resolved, "
              f"{sum(geo.unresolved.values())} unresolved mentions")
    return 0


def cmd_preprocess(args):
    rc = cmd_cluster_titles(args)
    if rc == 0:
        rc = cmd_cluster_skills(args)
    return rc


def cmd_run(args):
    cfg = _load_config(args)
    report = run_pipeline(cfg)
    print(f"report written to {cfg.out_dir}/report.json "
          f"({report['metadata']['corpus']['size']} ads)")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="jobmarket",
        description="Batch analytics over job-advertisement corpora.")
    parser.add_argument("--print-defaults", action="store_true",
                        help="print the default configuration and exit")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--config", required=True)
        p.add_argument("--out", help="override output.dir")
        p.add_argument("--seed", type=int, help="override output.seed")

    for name, fn in (("validate", cmd_validate), ("ingest", cmd_ingest),
                     ("preprocess", cmd_preprocess),
                     ("cluster-titles", cmd_cluster_titles),
                     ("cluster-skills", cmd_cluster_skills),
                     ("mine", cmd_mine), ("analyze", cmd_analyze),
                     ("run", cmd_run)):
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("harvest")
    common(p)
    p.add_argument("--root")
    p.add_argument("--key-phrase", dest="key_phrase")
    p.add_argument("--workers", type=int)
    p.add_argument("--rate", type=float)
    p.add_argument("--max-pages", dest="max_pages", type=int)
    p.set_defaults(fn=cmd_harvest)

    args = parser.parse_args(argv)
    if args.print_defaults:
        print(DEFAULTS_TOML, end="")
        return 0
    if not args.command:
        parser.print_help()
        return 2

    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
