"""Download article pages and reduce them to plain running text."""

from __future__ import annotations

import codecs
import hashlib
import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from html.parser import HTMLParser
from pathlib import Path
from urllib.parse import urlsplit

from .errors import EmptyDocument, HttpError, NonHtmlContent, TransportError
from .gdelt import USER_AGENT, ArticleRef, article_id, is_absolute_url
from .store import ArticleRecord

log = logging.getLogger(__name__)

BLOCK_TAGS = frozenset({"p", "h1", "h2", "h3", "li", "blockquote"})
SKIP_TAGS = frozenset({"script", "style", "nav", "header", "footer", "aside", "form"})
MIN_PARAGRAPH = 25
HTML_TYPES = ("text/html", "application/xhtml+xml")

_WS = re.compile(r"\s+")
_META_CHARSET = re.compile(rb"""<meta[^>]+charset\s*=\s*["']?\s*([A-Za-z0-9_.:-]+)""", re.I)
_HEADER_CHARSET = re.compile(r"charset\s*=\s*[\"']?([A-Za-z0-9_.:-]+)", re.I)


@dataclass(frozen=True)
class FetchedPage:
    final_url: str
    status: int
    body: bytes
    content_type: str = "text/html"

    @property
    def ok(self) -> bool:
        return 200 <= self.status < 300


def select_fetch_url(ref: ArticleRef) -> str:
    """Prefer the mobile rendering; fall back to the desktop url."""
    if ref.mobile_url and is_absolute_url(ref.mobile_url):
        return ref.mobile_url
    return ref.url


class _ParagraphParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.paragraphs = []
        self._buf = []
        self._block_depth = 0
        self._skip_depth = 0

    def _flush(self):
        if self._buf:
            text = _WS.sub(" ", "".join(self._buf)).strip()
            if text:
                self.paragraphs.append(text)
            self._buf = []

    def handle_starttag(self, tag, attrs):
        if tag in SKIP_TAGS:
            self._skip_depth += 1
        elif tag in BLOCK_TAGS and not self._skip_depth:
            # nested blocks each get their own paragraph
            self._flush()
            self._block_depth += 1
        elif tag == "br" and self._block_depth:
            self._buf.append(" ")

    def handle_startendtag(self, tag, attrs):
        if tag == "br" and self._block_depth:
            self._buf.append(" ")

    def handle_endtag(self, tag):
        if tag in SKIP_TAGS:
            if self._skip_depth:
                self._skip_depth -= 1
        elif tag in BLOCK_TAGS and not self._skip_depth:
            self._flush()
            if self._block_depth:
                self._block_depth -= 1

    def handle_data(self, data):
        if self._block_depth and not self._skip_depth:
            self._buf.append(data)

    def close(self):
        super().close()
        self._flush()


def sniff_charset(html: bytes, content_type: str = "") -> str:
    for candidate in (
        _HEADER_CHARSET.search(content_type or ""),
        _META_CHARSET.search(html[:4096]),
    ):
        if candidate:
            name = candidate.group(1)
            name = name.decode("ascii") if isinstance(name, bytes) else name
            try:
                return codecs.lookup(name).name
            except LookupError:
                continue
    return "utf-8"


def extract_text(html: bytes, encoding: str | None = None) -> str:
    """Paragraph text of block elements, separated by blank lines.

    Paragraphs shorter than ``MIN_PARAGRAPH`` characters are dropped.
    """
    text = html.decode(encoding or sniff_charset(html), errors="replace")
    parser = _ParagraphParser()
    parser.feed(text)
    parser.close()
    kept = [p for p in parser.paragraphs if len(p) >= MIN_PARAGRAPH]
    if not kept:
        raise EmptyDocument("no paragraph of running text found")
    return "\n\n".join(kept)


def _utcnow():
    return datetime.now(timezone.utc)


def fetch_article(ref: ArticleRef, transport, *, retries: int = 2, backoff: float = 2.0,
                  sleep=time.sleep, clock=_utcnow,
                  country_map: dict[str, str] | None = None) -> ArticleRecord:
    """Fetch, extract and wrap one search hit as an unclassified record."""
    url = select_fetch_url(ref)
    page = None
    for attempt in range(retries + 1):
        if attempt:
            sleep(backoff * 2 ** (attempt - 1))
        try:
            page = transport.get(url)
        except TransportError as exc:
            if attempt == retries:
                raise
            log.info("retrying %s after transport error: %s", url, exc)
            continue
        if page.ok:
            break
    if not page.ok:
        raise HttpError(page.status, url)

    ctype = (page.content_type or "").split(";")[0].strip().lower()
    if ctype and ctype not in HTML_TYPES:
        raise NonHtmlContent(f"{url}: {ctype}")
    text = extract_text(page.body, sniff_charset(page.body, page.content_type))
    iso = None
    if country_map is not None:
        iso = country_map.get(ref.source_country.strip().lower())
    return ArticleRecord(
        id=article_id(ref.url),
        taxon=ref.taxon,
        url=ref.url,
        fetched_url=page.final_url or url,
        seen_date=ref.seen_date,
        source_country_raw=ref.source_country,
        source_country_iso=iso,
        language=ref.language,
        title=ref.title,
        text=text,
        fetched_at=clock(),
        matched_keyword=ref.matched_keyword or None,
        domain=ref.domain or None,
    )


class HostThrottle:
    """At most one request in flight per host, spaced ``delay`` seconds apart,
    and at most ``max_concurrent`` requests overall."""

    def __init__(self, max_concurrent: int = 4, delay: float = 1.0,
                 sleep=time.sleep, clock=time.monotonic):
        self.delay = delay
        self._global = threading.BoundedSemaphore(max_concurrent)
        self._hosts: dict[str, threading.Lock] = {}
        self._last: dict[str, float] = {}
        self._guard = threading.Lock()
        self._sleep = sleep
        self._clock = clock

    def _host_lock(self, host):
        with self._guard:
            return self._hosts.setdefault(host, threading.Lock())

    def run(self, url, fn):
        host = (urlsplit(url).hostname or "").lower()
        with self._host_lock(host):
            last = self._last.get(host)
            if last is not None:
                wait = self.delay - (self._clock() - last)
                if wait > 0:
                    self._sleep(wait)
            try:
                with self._global:
                    return fn()
            finally:
                self._last[host] = self._clock()


def default_cache_dir() -> Path:
    env = os.environ.get("FAUNAWATCH_CACHE")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "faunawatch"


class HttpTransport:
    """Polite live HTTP fetching with an on-disk cache of successful responses."""

    def __init__(self, session=None, throttle: HostThrottle | None = None,
                 cache_dir=None, timeout: float = 30.0):
        if session is None:
            import requests

            session = requests.Session()
        session.headers["User-Agent"] = USER_AGENT
        self.session = session
        self.throttle = throttle or HostThrottle()
        self.cache_dir = Path(cache_dir) if cache_dir else default_cache_dir()
        self.timeout = timeout

    def _cache_paths(self, url):
        key = hashlib.sha256(url.encode("utf-8")).hexdigest()
        return self.cache_dir / f"{key}.body", self.cache_dir / f"{key}.json"

    def get(self, url: str) -> FetchedPage:
        body_path, meta_path = self._cache_paths(url)
        if meta_path.exists() and body_path.exists():
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            return FetchedPage(meta["final_url"], meta["status"], body_path.read_bytes(),
                               meta["content_type"])
        try:
            resp = self.throttle.run(
                url, lambda: self.session.get(url, timeout=self.timeout, allow_redirects=True))
        except Exception as exc:  # connection errors, timeouts, bad urls
            raise TransportError(str(exc), context={"url": url}) from exc
        page = FetchedPage(resp.url, resp.status_code, resp.content,
                           resp.headers.get("Content-Type", ""))
        if page.ok:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            body_path.write_bytes(page.body)
            meta_path.write_text(json.dumps({
                "final_url": page.final_url,
                "status": page.status,
                "content_type": page.content_type,
            }), encoding="utf-8")
        return page


class FixturePageTransport:
    """Serves ``<sha256(normalized url)>.html`` files from a directory.

    An optional ``<id>.meta.json`` beside the page may override ``status``
    and ``content_type``. Unknown urls answer 404.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.requests = 0

    def get(self, url: str) -> FetchedPage:
        self.requests += 1
        key = article_id(url)
        meta_path = self.root / f"{key}.meta.json"
        meta = {}
        if meta_path.exists():
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        page_path = self.root / f"{key}.html"
        if not page_path.exists():
            return FetchedPage(url, meta.get("status", 404), b"", meta.get("content_type", ""))
        return FetchedPage(url, meta.get("status", 200), page_path.read_bytes(),
                           meta.get("content_type", "text/html; charset=utf-8"))


def fixture_page_name(url: str) -> str:
    return f"{article_id(url)}.html"


def fetch_many(refs, transport, *, max_workers: int = 4, **kwargs):
    """Fetch refs concurrently; returns ``(ref, record_or_exception)`` in input order."""

    def one(ref):
        try:
            return ref, fetch_article(ref, transport, **kwargs)
        except (HttpError, NonHtmlContent, EmptyDocument, TransportError) as exc:
            return ref, exc

    if max_workers <= 1:
        return [one(r) for r in refs]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(one, refs))


__all__ = [
    "FetchedPage", "select_fetch_url", "extract_text", "fetch_article", "fetch_many",
    "HostThrottle", "HttpTransport", "FixturePageTransport", "fixture_page_name",
]
