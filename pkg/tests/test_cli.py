import json

import pytest

try:
    import tomllib
except ImportError:
    import tomli as tomllib

from jobmarket import cli, embed
from jobmarket.corpus import SynthSpec, synth_corpus, to_jsonlines

from conftest import GAZETTEER_CSV, make_store, write_fixture_site

TITLE_TOKENS = ["php", "developer", "dev", "java", "data", "analyst", "senior"]

CONFIG_TEMPLATE = """\
[input]
path = "{corpus}"

[embed]
embeddings = "{embeddings}"

[semgroup]
damping = 0.5

[skillnet]
min_occurrence = 5
restarts = 4

[mine]
min_support = 0.05
top_k = 2

[analyze]
gazetteer = "{gazetteer}"

[output]
dir = "{out}"
seed = 0
"""


def build_workspace(root):
    """Corpus + embeddings + gazetteer + config, all under one directory."""
    root.mkdir(parents=True, exist_ok=True)
    spec = SynthSpec(
        n_ads=120,
        skill_marginals={"php": 0.5, "mysql": 0.45, "java": 0.4,
                         "sql": 0.35, "python": 0.3},
        pairs=[("php", "mysql", 0.35)],
        title_groups=[["php developer", "php dev"],
                      ["java developer"], ["data analyst"]],
        city_weights={"bangalore": 2.0, "pune": 1.0},
    )
    corpus = synth_corpus(spec, seed=11)
    (root / "corpus.jsonl").write_text(to_jsonlines(corpus), encoding="utf-8")
    embed.save_embeddings_text(make_store(TITLE_TOKENS), root / "vectors.txt")
    (root / "cities.csv").write_text(GAZETTEER_CSV, encoding="utf-8")
    write_config(root, root / "config.toml")
    return root


def write_config(root, path, overrides=None):
    text = CONFIG_TEMPLATE.format(
        corpus=root / "corpus.jsonl", embeddings=root / "vectors.txt",
        gazetteer=root / "cities.csv", out=root / "out")
    for old, new in (overrides or {}).items():
        assert old in text
        text = text.replace(old, new)
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    return build_workspace(tmp_path_factory.mktemp("ws"))


class TestValidate:
    def test_clean_config_is_quiet(self, workspace, capsys):
        rc = cli.main(["validate", "--config", str(workspace / "config.toml")])
        assert rc == 0
        assert capsys.readouterr().out == ""

    def test_bad_damping_named(self, workspace, tmp_path, capsys):
        cfg = write_config(workspace, tmp_path / "c.toml",
                           {"damping = 0.5": "damping = 1.2"})
        rc = cli.main(["validate", "--config", str(cfg)])
        assert rc == 2
        assert "damping" in capsys.readouterr().out

    def test_all_problems_reported_at_once(self, workspace, tmp_path, capsys):
        cfg = write_config(workspace, tmp_path / "c.toml",
                           {"damping = 0.5": "damping = 1.2",
                            "min_support = 0.05": "min_support = 0.0"})
        rc = cli.main(["validate", "--config", str(cfg)])
        out = capsys.readouterr().out
        assert rc == 2
        assert "damping" in out and "min_support" in out

    def test_missing_path_named_before_any_work(self, workspace, tmp_path, capsys):
        cfg = write_config(workspace, tmp_path / "c.toml",
                           {"vectors.txt": "no-such-vectors.txt"})
        rc = cli.main(["validate", "--config", str(cfg)])
        assert rc == 2
        assert "embed.embeddings" in capsys.readouterr().out

    def test_config_file_missing(self, tmp_path, capsys):
        rc = cli.main(["validate", "--config", str(tmp_path / "nope.toml")])
        assert rc == 2

    def test_config_not_toml(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("this is { not toml", encoding="utf-8")
        assert cli.main(["validate", "--config", str(bad)]) == 2


class TestEntryPoint:
    def test_print_defaults_is_valid_toml(self, capsys):
        assert cli.main(["--print-defaults"]) == 0
        doc = tomllib.loads(capsys.readouterr().out)
        assert doc["skillnet"]["min_occurrence"] == 20
        assert doc["mine"]["min_support"] == 0.02
        assert doc["mine"]["top_k"] == 2

    def test_no_subcommand_exits_2(self, capsys):
        assert cli.main([]) == 2

    def test_run_with_missing_embeddings_exits_2(self, workspace, tmp_path, capsys):
        cfg = write_config(workspace, tmp_path / "c.toml",
                           {"vectors.txt": "no-such-vectors.txt"})
        rc = cli.main(["run", "--config", str(cfg),
                       "--out", str(tmp_path / "out")])
        assert rc == 2
        assert "embed.embeddings" in capsys.readouterr().err
        assert not (tmp_path / "out" / "report.json").exists()

    def test_mostly_malformed_corpus_exits_3(self, workspace, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id": "a"}\n{"broken\n', encoding="utf-8")
        cfg = write_config(workspace, tmp_path / "c.toml",
                           {str(workspace / "corpus.jsonl"): str(bad)})
        assert cli.main(["ingest", "--config", str(cfg),
                         "--out", str(tmp_path / "out")]) == 3


class TestSubcommands:
    def test_ingest_writes_canonical_corpus(self, workspace, tmp_path, capsys):
        out = tmp_path / "out"
        rc = cli.main(["ingest", "--config", str(workspace / "config.toml"),
                       "--out", str(out)])
        assert rc == 0
        lines = (out / "corpus.jsonl").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 120
        assert json.loads(lines[0])["id"] == "synth-000000"

    def test_mine_prints_formatted_recommendations(self, workspace, tmp_path, capsys):
        rc = cli.main(["mine", "--config", str(workspace / "config.toml"),
                       "--out", str(tmp_path / "out")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "→" in out  # "ante → {cons} lift" lines
        header = (tmp_path / "out" / "rules.csv").read_text(
            encoding="utf-8").splitlines()[0]
        assert header == "antecedent,consequent,support,confidence,lift"

    def test_analyze_writes_tables_and_geojson(self, workspace, tmp_path, capsys):
        out = tmp_path / "out"
        rc = cli.main(["analyze", "--config", str(workspace / "config.toml"),
                       "--out", str(out)])
        assert rc == 0
        assert (out / "table_skill.csv").read_text(
            encoding="utf-8").splitlines()[0] == "rank,label,count,share"
        geo = json.loads((out / "geo.geojson").read_text(encoding="utf-8"))
        assert geo["type"] == "FeatureCollection"

    def test_cluster_titles_artifacts(self, workspace, tmp_path, capsys):
        out = tmp_path / "out"
        rc = cli.main(["cluster-titles", "--config",
                       str(workspace / "config.toml"), "--out", str(out)])
        assert rc == 0
        clusters = json.loads((out / "title_clusters.json").read_text(encoding="utf-8"))
        members = sorted(m for c in clusters for m in c["members"])
        assert members == sorted(["php developer", "php dev",
                                  "java developer", "data analyst"])

    def test_harvest_subcommand(self, workspace, tmp_path, capsys):
        site, ad_ids = write_fixture_site(tmp_path / "site", 2, 5)
        out = tmp_path / "out"
        rc = cli.main(["harvest", "--config", str(workspace / "config.toml"),
                       "--out", str(out), "--root", str(site),
                       "--workers", "1", "--rate", "200"])
        assert rc == 0
        lines = (out / "harvested.jsonl").read_text(encoding="utf-8").splitlines()
        assert [json.loads(x)["id"] for x in lines] == ad_ids


@pytest.fixture(scope="module")
def first_run(workspace):
    rc = cli.main(["run", "--config", str(workspace / "config.toml")])
    assert rc == 0
    return workspace / "out"


class TestRun:

    def test_artifacts_present(self, first_run):
        for name in ("report.json", "report.txt", "corpus.jsonl",
                     "distance_matrix.csv", "title_clusters.json",
                     "skill_similarity.csv", "skill_clusters.json",
                     "table_skill.csv", "table_job_leader.csv",
                     "itemsets.json", "rules.csv", "geo.geojson"):
            assert (first_run / name).exists(), name

    def test_report_structure(self, first_run):
        report = json.loads((first_run / "report.json").read_text(encoding="utf-8"))
        assert report["metadata"]["corpus"]["size"] == 120
        assert report["metadata"]["ap_converged"] is True
        # the groups partition the unique titles and fold every ad
        members = sorted(m for g in report["title_groups"] for m in g["members"])
        assert members == sorted(["php developer", "php dev",
                                  "java developer", "data analyst"])
        assert sum(g["folded_count"] for g in report["title_groups"]) == 120
        assert report["recommendations"]  # planted php/mysql pair lifts > 1

    def test_report_txt_layout(self, first_run):
        text = (first_run / "report.txt").read_text(encoding="utf-8")
        assert "rank" in text and "label" in text and "count" in text
        assert "== top recommendations ==" in text
        assert "→" in text

    def test_second_run_byte_identical_and_cache_reused(self, workspace, first_run):
        report1 = (first_run / "report.json").read_bytes()
        text1 = (first_run / "report.txt").read_bytes()
        rules1 = (first_run / "rules.csv").read_bytes()
        cache = sorted((first_run / "cache").iterdir())
        assert len(cache) == 1
        # drop the expensive-stage artifact: a cache hit must not need it
        (first_run / "distance_matrix.csv").unlink()
        rc = cli.main(["run", "--config", str(workspace / "config.toml")])
        assert rc == 0
        assert (first_run / "report.json").read_bytes() == report1
        assert (first_run / "report.txt").read_bytes() == text1
        assert (first_run / "rules.csv").read_bytes() == rules1
        assert not (first_run / "distance_matrix.csv").exists()
        assert sorted((first_run / "cache").iterdir()) == cache

    def test_fresh_out_dir_same_report_body(self, workspace, first_run, tmp_path):
        """Same config into a new directory reproduces every result field."""
        out2 = tmp_path / "out2"
        rc = cli.main(["run", "--config", str(workspace / "config.toml"),
                       "--out", str(out2)])
        assert rc == 0
        r1 = json.loads((first_run / "report.json").read_text(encoding="utf-8"))
        r2 = json.loads((out2 / "report.json").read_text(encoding="utf-8"))
        r1["metadata"].pop("config_hash")
        r2["metadata"].pop("config_hash")
        assert r1 == r2

    def test_harvest_then_run_round_trip(self, workspace, tmp_path, capsys):
        site, _ = write_fixture_site(tmp_path / "site", 1, 30)
        out = tmp_path / "out"
        assert cli.main(["harvest", "--config", str(workspace / "config.toml"),
                         "--out", str(out), "--root", str(site),
                         "--rate", "500"]) == 0
        cfg = write_config(workspace, tmp_path / "c.toml",
                           {str(workspace / "corpus.jsonl"):
                            str(out / "harvested.jsonl"),
                            "min_occurrence = 5": "min_occurrence = 3"})
        rc = cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "run")])
        assert rc == 0
        report = json.loads((tmp_path / "run" / "report.json").read_text(
            encoding="utf-8"))
        assert report["metadata"]["corpus"]["size"] == 30
