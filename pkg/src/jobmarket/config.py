"""Pipeline configuration: one TOML file with a section per module.

validate() reports every problem it can find instead of stopping at the
first, so a bad config can be fixed in one edit.
"""

from __future__ import annotations

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .semgroup import APConfig

DEFAULTS_TOML = """\
# jobmarket pipeline configuration (defaults shown)

[input]
# path = "corpus.jsonl"
format = "jsonlines"          # or "csv"

[harvest]                     # used by the harvest subcommand
# root = "site/listing_1.html"
key_phrase = ""
workers = 1
rate = 50.0                   # max requests per worker per second
# max_pages = 100

[embed]
# embeddings = "vectors.txt"  # word2vec text or binary format
# stopwords = "stopwords.txt" # one token per line, optional

[semgroup]
damping = 0.5
max_iterations = 200
convergence_window = 15
preference = "median"         # or a fixed number

[skillnet]
min_occurrence = 20
# resolution = 0.25           # gamma; default: mean off-diagonal similarity
seed = 0
restarts = 10
# names = "cluster_names.json"  # {"0": "Web Development", ...}

[mine]
min_support = 0.02
max_len = 4
min_lift = 1.0
top_k = 2

[analyze]
# gazetteer = "cities.csv"    # columns: name,lat,lon,region
high_application_percentile = 90

[output]
dir = "out"
seed = 0
"""


@dataclass
class PipelineConfig:
    input_path: str | None = None
    input_format: str = "jsonlines"
    harvest_root: str | None = None
    harvest_key_phrase: str = ""
    harvest_workers: int = 1
    harvest_rate: float = 50.0
    harvest_max_pages: int | None = None
    embeddings: str | None = None
    stopwords: str | None = None
    ap: APConfig = field(default_factory=APConfig)
    min_occurrence: int = 20
    resolution: float | None = None
    skill_seed: int = 0
    restarts: int = 10
    names_file: str | None = None
    min_support: float = 0.02
    max_len: int = 4
    min_lift: float = 1.0
    top_k: int = 2
    gazetteer: str | None = None
    high_application_percentile: float = 90.0
    out_dir: str = "out"
    seed: int = 0

    @classmethod
    def load(cls, path):
        try:
            with open(path, "rb") as f:
                raw = tomllib.load(f)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"config is not valid TOML: {e}")
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw):
        inp = raw.get("input", {})
        hv = raw.get("harvest", {})
        em = raw.get("embed", {})
        sg = raw.get("semgroup", {})
        sk = raw.get("skillnet", {})
        mn = raw.get("mine", {})
        an = raw.get("analyze", {})
        out = raw.get("output", {})
        return cls(
            input_path=inp.get("path"),
            input_format=inp.get("format", "jsonlines"),
            harvest_root=hv.get("root"),
            harvest_key_phrase=hv.get("key_phrase", ""),
            harvest_workers=int(hv.get("workers", 1)),
            harvest_rate=float(hv.get("rate", 50.0)),
            harvest_max_pages=hv.get("max_pages"),
            embeddings=em.get("embeddings"),
            stopwords=em.get("stopwords"),
            ap=APConfig(
                damping=float(sg.get("damping", 0.5)),
                max_iterations=int(sg.get("max_iterations", 200)),
                convergence_window=int(sg.get("convergence_window", 15)),
                preference=sg.get("preference", "median"),
            ),
            min_occurrence=int(sk.get("min_occurrence", 20)),
            resolution=sk.get("resolution"),
            skill_seed=int(sk.get("seed", 0)),
            restarts=int(sk.get("restarts", 10)),
            names_file=sk.get("names"),
            min_support=float(mn.get("min_support", 0.02)),
            max_len=int(mn.get("max_len", 4)),
            min_lift=float(mn.get("min_lift", 1.0)),
            top_k=int(mn.get("top_k", 2)),
            gazetteer=an.get("gazetteer"),
            high_application_percentile=float(an.get("high_application_percentile", 90)),
            out_dir=out.get("dir", "out"),
            seed=int(out.get("seed", 0)),
        )

    def validate(self):
        """Return a list of diagnostics; empty means the config is usable."""
        problems = []
        if self.input_path is None and self.harvest_root is None:
            problems.append("input.path or harvest.root is required")
        for key, path in (("input.path", self.input_path),
                          ("harvest.root", self.harvest_root),
                          ("embed.embeddings", self.embeddings),
                          ("embed.stopwords", self.stopwords),
                          ("skillnet.names", self.names_file),
                          ("analyze.gazetteer", self.gazetteer)):
            if path is not None and not Path(path).exists():
                problems.append(f"{key}: path does not exist: {path}")
        if self.embeddings is None:
            problems.append("embed.embeddings is required")
        if self.input_format not in ("jsonlines", "csv"):
            problems.append(f"input.format must be jsonlines or csv, got {self.input_format!r}")
        if not 0.5 <= self.ap.damping < 1:
            problems.append(f"semgroup.damping must be in [0.5, 1), got {self.ap.damping}")
        if self.ap.convergence_window >= self.ap.max_iterations:
            problems.append("semgroup.convergence_window must be < max_iterations")
        if self.min_occurrence < 1:
            problems.append("skillnet.min_occurrence must be >= 1")
        if self.restarts < 1:
            problems.append("skillnet.restarts must be >= 1")
        if not 0 < self.min_support <= 1:
            problems.append(f"mine.min_support must be in (0, 1], got {self.min_support}")
        if self.max_len < 1:
            problems.append("mine.max_len must be >= 1")
        if self.top_k < 1:
            problems.append("mine.top_k must be >= 1")
        if not 0 <= self.high_application_percentile <= 100:
            problems.append("analyze.high_application_percentile must be in [0, 100]")
        if self.harvest_workers < 1:
            problems.append("harvest.workers must be >= 1")
        if self.harvest_rate <= 0:
            problems.append("harvest.rate must be > 0")
        return problems
