"""Query the GDELT DOC 2.0 article index and deduplicate the hits."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from urllib.parse import urlencode, urlsplit, urlunsplit

from .domain import SearchFamily, TimeWindow, format_utc, parse_utc
from .errors import MalformedResponse, TransportError, WindowTooWide

log = logging.getLogger(__name__)

DOC_API = "https://api.gdeltproject.org/api/v2/doc/doc"
MAX_RECORDS = 250
LIVE_HORIZON = timedelta(hours=72)
USER_AGENT = "faunawatch/1.0 (research crawler)"


def normalize_url(url: str) -> str:
    """Canonical form used for deduplication and article identity.

    Scheme and host are lowercased, ``http`` is folded into ``https``, the
    fragment, a trailing slash and any ``utm_*`` query parameters are dropped.
    """
    parts = urlsplit(url.strip())
    scheme = parts.scheme.lower()
    if scheme == "http":
        scheme = "https"
    path = parts.path
    while path.endswith("/"):
        path = path[:-1]
    query = "&".join(
        piece for piece in parts.query.split("&")
        if piece and not piece.split("=", 1)[0].startswith("utm_")
    )
    return urlunsplit((scheme, parts.netloc.lower(), path, query, ""))


def article_id(url: str) -> str:
    return hashlib.sha256(normalize_url(url).encode("utf-8")).hexdigest()


def is_absolute_url(url) -> bool:
    if not isinstance(url, str) or not url or any(c.isspace() for c in url):
        return False
    try:
        parts = urlsplit(url)
    except ValueError:
        return False
    return parts.scheme in ("http", "https") and bool(parts.hostname)


@dataclass(frozen=True)
class Query:
    text: str
    window: TimeWindow
    max_records: int = MAX_RECORDS
    taxon: str = ""
    keyword: str = ""

    def __post_init__(self):
        if not self.text:
            raise ValueError("empty query text")
        if not 0 < self.max_records <= MAX_RECORDS:
            raise ValueError(f"max_records must be in 1..{MAX_RECORDS}")

    def params(self) -> dict:
        return {
            "query": self.text,
            "mode": "ArtList",
            "format": "json",
            "startdatetime": self.window.start.strftime("%Y%m%d%H%M%S"),
            "enddatetime": self.window.end.strftime("%Y%m%d%H%M%S"),
            "maxrecords": self.max_records,
            "sort": "DateAsc",
        }

    def url(self) -> str:
        return f"{DOC_API}?{urlencode(self.params())}"


@dataclass(frozen=True)
class ArticleRef:
    url: str
    mobile_url: str | None
    title: str
    seen_date: datetime
    source_country: str
    language: str
    domain: str
    taxon: str = ""
    matched_keyword: str = ""

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["seen_date"] = format_utc(self.seen_date)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ArticleRef":
        doc = dict(doc)
        doc["seen_date"] = parse_utc(doc["seen_date"])
        return cls(**doc)


def build_queries(family: SearchFamily, window: TimeWindow) -> list[Query]:
    return [
        Query(
            text=f"{family.main_keyword} {keyword} sourcelang:eng",
            window=window,
            taxon=family.taxon,
            keyword=keyword,
        )
        for keyword in dict.fromkeys(family.additional_keywords)
    ]


def parse_seendate(value: str) -> datetime:
    return datetime.strptime(value, "%Y%m%dT%H%M%SZ").replace(tzinfo=timezone.utc)


def parse_artlist(body: bytes, taxon: str = "", keyword: str = "") -> list[ArticleRef]:
    """Parse an ArtList JSON response. Entries without a usable url or date are skipped."""
    try:
        doc = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedResponse(f"undecodable ArtList response: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedResponse("ArtList response is not a JSON object")
    articles = doc.get("articles", [])
    if not isinstance(articles, list):
        raise MalformedResponse("'articles' is not a list")

    refs = []
    skipped = 0
    for entry in articles:
        if not isinstance(entry, dict) or not is_absolute_url(entry.get("url")):
            skipped += 1
            continue
        try:
            seen = parse_seendate(entry.get("seendate", ""))
        except (TypeError, ValueError):
            skipped += 1
            continue
        mobile = entry.get("url_mobile") or None
        refs.append(ArticleRef(
            url=entry["url"],
            mobile_url=mobile,
            title=str(entry.get("title", "")),
            seen_date=seen,
            source_country=str(entry.get("sourcecountry", "")),
            language=str(entry.get("language", "")),
            domain=str(entry.get("domain", "") or urlsplit(entry["url"]).hostname or ""),
            taxon=taxon,
            matched_keyword=keyword,
        ))
    if skipped:
        log.warning("skipped %d ArtList entries without a valid url/seendate", skipped)
    return refs


def dedupe_refs(refs) -> list[ArticleRef]:
    seen = set()
    out = []
    for ref in refs:
        key = normalize_url(ref.url)
        if key in seen:
            continue
        seen.add(key)
        out.append(ref)
    return out


class LiveTransport:
    """Sequential HTTP access to the DOC API with a minimum gap between requests."""

    live = True

    def __init__(self, session=None, min_interval: float = 1.0, timeout: float = 30.0,
                 sleep=time.sleep, clock=time.monotonic):
        if session is None:
            import requests

            session = requests.Session()
            session.headers["User-Agent"] = USER_AGENT
        self.session = session
        self.min_interval = min_interval
        self.timeout = timeout
        self._sleep = sleep
        self._clock = clock
        self._last = None

    def search(self, query: Query) -> bytes:
        if self._last is not None:
            wait = self.min_interval - (self._clock() - self._last)
            if wait > 0:
                self._sleep(wait)
        self._last = self._clock()
        try:
            resp = self.session.get(DOC_API, params=query.params(), timeout=self.timeout)
        except Exception as exc:  # requests raises a family of exceptions
            raise TransportError(str(exc), context={"query": query.text}) from exc
        if resp.status_code != 200:
            raise TransportError(f"DOC API returned HTTP {resp.status_code}",
                                 context={"query": query.text})
        return resp.content


class FixtureTransport:
    """Replays responses stored as ``<taxon>/<keyword>/<start>-<end>.json``."""

    live = False

    def __init__(self, root):
        self.root = Path(root)
        self.requests = 0

    def path_for(self, query: Query) -> Path:
        start = query.window.start.strftime("%Y%m%d%H%M%S")
        end = query.window.end.strftime("%Y%m%d%H%M%S")
        return self.root / query.taxon / query.keyword / f"{start}-{end}.json"

    def search(self, query: Query) -> bytes:
        self.requests += 1
        path = self.path_for(query)
        try:
            return path.read_bytes()
        except OSError as exc:
            raise TransportError(f"no fixture at {path}", context={"query": query.text}) from exc


def scan_window(family: SearchFamily, window: TimeWindow, transport,
                best_effort: bool = False) -> list[ArticleRef]:
    """Run every query of a family over one window and return deduplicated hits."""
    if getattr(transport, "live", True) and window.duration > LIVE_HORIZON:
        raise WindowTooWide(
            f"live searches cover at most 72h; window is {window.duration}")
    refs = []
    for query in build_queries(family, window):
        try:
            body = transport.search(query)
            hits = parse_artlist(body, family.taxon, query.keyword)
        except (TransportError, MalformedResponse) as exc:
            if isinstance(exc, TransportError):
                exc.context.setdefault("taxon", family.taxon)
                exc.context.setdefault("keyword", query.keyword)
            if not best_effort:
                raise
            log.warning("query %r failed, skipping: %s", query.text, exc)
            continue
        if len(hits) >= query.max_records:
            log.warning("query %r returned %d records (page limit); use a narrower window",
                        query.text, len(hits))
        in_window = [r for r in hits if window.start <= r.seen_date <= window.end]
        if len(in_window) != len(hits):
            log.warning("dropped %d hits outside the query window", len(hits) - len(in_window))
        refs.extend(in_window)
    return dedupe_refs(refs)
