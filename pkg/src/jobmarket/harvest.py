"""Fixture-site crawler: downloader workers, parser, URL frontier, scheduler.

The crawl runs against a directory tree of .html files or a loopback HTTP
server, never a live portal. Listing pages are walked first (following
next-page links until there are none), ad URLs are deduplicated into a FIFO
frontier, and a bounded worker pool fetches each ad exactly once under a
per-worker token-bucket rate cap. Results are collected by discovery index,
so single-worker runs reproduce discovery order and multi-worker runs are
stable.
"""

from __future__ import annotations

import threading
import time
import urllib.parse
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path

from .corpus import LIST_FIELDS, _validate_record
from .errors import ConfigError, DataError


@dataclass
class CrawlConfig:
    root_url: str
    key_phrase: str = ""
    max_workers: int = 1
    max_requests_per_worker_per_sec: float = 50.0
    max_pages: int | None = None

    def validate(self):
        if self.max_workers < 1:
            raise ConfigError("max_workers must be >= 1")
        if self.max_requests_per_worker_per_sec <= 0:
            raise ConfigError("rate cap must be > 0")


@dataclass
class CrawlStats:
    requests: list = field(default_factory=list)   # (monotonic time, url, worker)
    skipped: list = field(default_factory=list)    # (url, reason)
    discovered: int = 0
    duplicates_dropped: int = 0

    def max_rate(self, window=1.0):
        """Largest request count in any sliding window of the given width."""
        times = sorted(t for t, _, _ in self.requests)
        best = 0
        j = 0
        for i, t in enumerate(times):
            # tolerance absorbs float drift in the accumulated grant times
            while times[j] <= t - window + 1e-9:
                j += 1
            best = max(best, i - j + 1)
        return best


class _TokenBucket:
    """Enforces a minimum spacing of 1/rate between grants."""

    def __init__(self, rate):
        self.interval = 1.0 / rate
        self.next_free = time.monotonic()
        self.lock = threading.Lock()

    def acquire(self):
        with self.lock:
            now = time.monotonic()
            grant = max(now, self.next_free)
            self.next_free = grant + self.interval
        while True:
            now = time.monotonic()
            if now >= grant:
                # the grant time is the schedule the request honored; the
                # actual fetch starts at or after it, never before
                return grant
            time.sleep(grant - now)


class _AnchorParser(HTMLParser):
    def __init__(self):
        super().__init__()
        self.ad_links = []
        self.next_link = None

    def handle_starttag(self, tag, attrs):
        if tag != "a":
            return
        d = dict(attrs)
        cls = (d.get("class") or "").split()
        href = d.get("href")
        if not href:
            return
        if "job-ad" in cls:
            self.ad_links.append(href)
        elif "next-page" in cls and self.next_link is None:
            self.next_link = href


def parse_listing(html):
    """Ad URLs in document order; empty list signals the pagination end."""
    if "<" not in html:
        raise DataError("listing payload does not look like HTML")
    p = _AnchorParser()
    p.feed(html)
    return p.ad_links


def next_page(html):
    p = _AnchorParser()
    p.feed(html)
    return p.next_link


class _FieldParser(HTMLParser):
    """Fixture ad pages hold fields as <dt>name</dt><dd>value</dd> pairs."""

    def __init__(self):
        super().__init__()
        self.fields = {}
        self._key = None
        self._mode = None
        self._buf = []

    def handle_starttag(self, tag, attrs):
        if tag in ("dt", "dd"):
            self._mode = tag
            self._buf = []

    def handle_data(self, data):
        if self._mode:
            self._buf.append(data)

    def handle_endtag(self, tag):
        if tag == "dt":
            self._key = "".join(self._buf).strip()
        elif tag == "dd" and self._key:
            self.fields[self._key] = "".join(self._buf).strip()
        if tag in ("dt", "dd"):
            self._mode = None


def parse_ad(html):
    """Extract a JobAd JSON document from a fixture ad page."""
    p = _FieldParser()
    p.feed(html)
    raw = {}
    for key, value in p.fields.items():
        if key in LIST_FIELDS:
            raw[key] = [x.strip() for x in value.split("|") if x.strip()]
        else:
            raw[key] = value
    ad = _validate_record(raw, set())  # raises DataError naming the bad field
    return ad.to_dict()


def _fetch(url, bucket, stats, worker_id, retries=2):
    for attempt in range(retries + 1):
        ts = bucket.acquire()
        stats.requests.append((ts, url, worker_id))
        try:
            if url.startswith(("http://", "https://")):
                with urllib.request.urlopen(url, timeout=10) as resp:
                    return resp.read().decode("utf-8")
            return Path(url).read_text(encoding="utf-8")
        except Exception as e:  # noqa: BLE001 - retried, then surfaced
            err = e
            if attempt < retries:
                time.sleep(0.02 * (2 ** attempt))
    raise DataError(f"fetch failed after {retries + 1} attempts: {url}: {err}")


def _resolve(base, href):
    if base.startswith(("http://", "https://")):
        return urllib.parse.urljoin(base, href)
    return str((Path(base).parent / href).resolve())


def crawl(config):
    """Walk the listing chain, then fetch every discovered ad exactly once.

    Returns (documents, stats); documents are ordered by discovery index.
    """
    config.validate()
    stats = CrawlStats()
    buckets = [_TokenBucket(config.max_requests_per_worker_per_sec)
               for _ in range(config.max_workers)]

    # pass 1: the listing chain, until no next-page link remains
    frontier = []           # (discovery index, ad url)
    seen = set()
    page_url = config.root_url
    pages = 0
    try:
        html = _fetch(page_url, buckets[0], stats, 0)
    except DataError as e:
        raise DataError(f"root listing unreachable: {e}")
    while True:
        pages += 1
        for href in parse_listing(html):
            url = _resolve(page_url, href)
            if url in seen:
                stats.duplicates_dropped += 1
                continue
            seen.add(url)
            frontier.append((len(frontier), url))
        nxt = next_page(html)
        if nxt is None or (config.max_pages and pages >= config.max_pages):
            break
        page_url = _resolve(page_url, nxt)
        html = _fetch(page_url, buckets[0], stats, 0)
    stats.discovered = len(frontier)

    # pass 2: scheduler hands one URL at a time to each downloader worker
    results = {}
    results_lock = threading.Lock()
    queue = list(frontier)
    queue_lock = threading.Lock()

    def worker(worker_id):
        while True:
            with queue_lock:
                if not queue:
                    return
                index, url = queue.pop(0)
            try:
                doc = parse_ad(_fetch(url, buckets[worker_id], stats, worker_id))
            except DataError as e:
                with results_lock:
                    stats.skipped.append((url, str(e)))
                continue
            with results_lock:
                results[index] = doc

    if config.max_workers == 1:
        worker(0)
    else:
        with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
            futures = [pool.submit(worker, wid) for wid in range(config.max_workers)]
            for f in futures:
                f.result()

    documents = [results[i] for i in sorted(results)]
    return documents, stats
