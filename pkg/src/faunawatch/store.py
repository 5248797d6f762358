"""Append-only NDJSON persistence for articles, search hits and labels.

Records are never rewritten in place. A later stage that fills in a field
appends a new version of the record; on read the last line for an id wins.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass, fields, replace
from datetime import datetime, timezone
from pathlib import Path

from .domain import TimeWindow, format_utc, parse_utc
from .errors import CorruptLine, InvalidId, InvalidLabel, StoreIOError

log = logging.getLogger(__name__)

ARTICLES = "articles.ndjson"
REFS = "refs.ndjson"
LABELS = "labels.ndjson"
CORRUPT_TOLERANCE = 0.01

_ID = re.compile(r"^[0-9a-f]{64}$")
_DATETIME_FIELDS = ("seen_date", "fetched_at")


@dataclass(frozen=True)
class ArticleRecord:
    id: str
    taxon: str
    url: str
    fetched_url: str
    seen_date: datetime
    source_country_raw: str
    language: str
    title: str
    text: str
    fetched_at: datetime
    source_country_iso: str | None = None
    relevant: bool | None = None
    relevance_posterior: float | None = None
    sentiment: float | None = None
    matched_keyword: str | None = None
    domain: str | None = None

    def __post_init__(self):
        if not _ID.fullmatch(self.id):
            raise InvalidId(f"record id must be 64 lowercase hex chars: {self.id!r}")
        if not self.text:
            raise ValueError(f"record {self.id} has empty text")

    def with_updates(self, **changes) -> "ArticleRecord":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        doc = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if f.name in _DATETIME_FIELDS:
                value = format_utc(value)
            doc[f.name] = value
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ArticleRecord":
        known = {f.name for f in fields(cls)}
        kwargs = {k: v for k, v in doc.items() if k in known}
        for name in _DATETIME_FIELDS:
            kwargs[name] = parse_utc(kwargs[name])
        return cls(**kwargs)


def validate_id(value: str) -> str:
    if not isinstance(value, str) or not _ID.fullmatch(value):
        raise InvalidId(f"not a 64-character lowercase hex id: {value!r}")
    return value


def _dumps(doc: dict) -> str:
    return json.dumps(doc, ensure_ascii=False, separators=(",", ":")) + "\n"


def read_ndjson(path) -> list[dict]:
    """All well-formed JSON object lines of ``path``.

    Corrupt lines, including a final line torn by a crash (no trailing
    newline), are skipped with a warning; more than 1% corrupt raises
    :class:`CorruptLine`.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        return []
    except OSError as exc:
        raise StoreIOError(f"cannot read {path}: {exc}") from exc
    if not raw:
        return []
    lines = raw.split(b"\n")
    torn_tail = lines[-1] != b""
    if not torn_tail:
        lines = lines[:-1]
    docs = []
    bad = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        if torn_tail and lineno == len(lines):
            bad.append(lineno)
            continue
        try:
            doc = json.loads(line)
        except (UnicodeDecodeError, json.JSONDecodeError):
            bad.append(lineno)
            continue
        if not isinstance(doc, dict):
            bad.append(lineno)
            continue
        docs.append(doc)
    if bad:
        total = sum(1 for line in lines if line.strip())
        log.warning("%s: skipped %d corrupt line(s): %s", path, len(bad), bad[:10])
        if len(bad) / total > CORRUPT_TOLERANCE:
            raise CorruptLine(f"{path}: {len(bad)} of {total} lines are corrupt (first at line {bad[0]})")
    return docs


class _Appender:
    def __init__(self, path):
        self.path = Path(path)

    def _write(self, text: str) -> None:
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "ab+") as fh:
                # never glue a new line onto a torn tail
                if fh.tell() > 0:
                    fh.seek(-1, os.SEEK_END)
                    if fh.read(1) != b"\n":
                        fh.write(b"\n")
                fh.write(text.encode("utf-8"))
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise StoreIOError(f"cannot write {self.path}: {exc}") from exc


class ArticleLog(_Appender):
    """The ``articles.ndjson`` log. Single writer, any number of readers."""

    def __init__(self, path):
        super().__init__(path)
        self._ids = None

    @classmethod
    def in_dir(cls, store_dir) -> "ArticleLog":
        return cls(Path(store_dir) / ARTICLES)

    def _known_ids(self) -> set[str]:
        if self._ids is None:
            self._ids = {doc.get("id") for doc in read_ndjson(self.path)}
        return self._ids

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._known_ids()

    def append(self, record: ArticleRecord) -> bool:
        """Write ``record`` unless its id is already stored."""
        if record.id in self._known_ids():
            return False
        self._write(_dumps(record.to_dict()))
        self._ids.add(record.id)
        return True

    def write_version(self, record: ArticleRecord) -> None:
        """Append a superseding version of a record (last writer wins)."""
        self._write(_dumps(record.to_dict()))
        self._known_ids().add(record.id)

    def latest(self) -> dict[str, ArticleRecord]:
        out = {}
        for doc in read_ndjson(self.path):
            try:
                rec = ArticleRecord.from_dict(doc)
            except (KeyError, TypeError, ValueError) as exc:
                log.warning("%s: unreadable record %s: %s", self.path, doc.get("id"), exc)
                continue
            out[rec.id] = rec
        return out

    def query(self, taxa=None, window: TimeWindow | None = None,
              relevant_only: bool = False) -> list[ArticleRecord]:
        records = self.latest().values()
        if taxa is not None:
            wanted = set(taxa)
            records = [r for r in records if r.taxon in wanted]
        if window is not None:
            records = [r for r in records if window.contains(r.seen_date)]
        if relevant_only:
            records = [r for r in records if r.relevant is True]
        return sorted(records, key=lambda r: (r.seen_date, r.id))


def append_record(log_: ArticleLog, record: ArticleRecord) -> bool:
    return log_.append(record)


def query_records(log_: ArticleLog, taxa=None, window=None, relevant_only=False):
    return log_.query(taxa=taxa, window=window, relevant_only=relevant_only)


class RefLog(_Appender):
    """Search hits waiting to be fetched, keyed by article id."""

    @classmethod
    def in_dir(cls, store_dir) -> "RefLog":
        return cls(Path(store_dir) / REFS)

    def ids(self) -> set[str]:
        return {doc["id"] for doc in read_ndjson(self.path) if "id" in doc}

    def append_new(self, refs) -> int:
        from .gdelt import article_id

        known = self.ids()
        lines = []
        for ref in refs:
            rid = article_id(ref.url)
            if rid in known:
                continue
            known.add(rid)
            lines.append(_dumps({"id": rid, **ref.to_dict()}))
        if lines:
            self._write("".join(lines))
        return len(lines)

    def refs(self):
        from .gdelt import ArticleRef

        out = {}
        for doc in read_ndjson(self.path):
            doc = dict(doc)
            rid = doc.pop("id", None)
            try:
                out.setdefault(rid, ArticleRef.from_dict(doc))
            except (KeyError, TypeError, ValueError):
                log.warning("%s: unreadable ref %s", self.path, rid)
        return list(out.values())


def _utcnow():
    return datetime.now(timezone.utc)


def append_label(label_file, record_id: str, cls: str, clock=_utcnow) -> None:
    validate_id(record_id)
    if cls not in ("relevant", "irrelevant"):
        raise InvalidLabel(f"unknown class {cls!r}")
    _Appender(label_file)._write(_dumps({
        "id": record_id,
        "class": cls,
        "labeled_at": format_utc(clock()),
    }))


def read_labels(label_file) -> dict[str, str]:
    """Latest label per id, in first-labelled order."""
    labels = {}
    for doc in read_ndjson(label_file):
        rid, cls = doc.get("id"), doc.get("class")
        if isinstance(rid, str) and _ID.fullmatch(rid) and cls in ("relevant", "irrelevant"):
            labels[rid] = cls
    return labels


def load_country_map(path) -> dict[str, str]:
    """``raw<TAB>alpha2`` lines; keys are lowercased for lookup."""
    mapping = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            try:
                raw, code = line.split("\t")
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected raw<TAB>alpha2") from None
            code = code.strip().upper()
            if not re.fullmatch(r"[A-Z]{2}", code):
                raise ValueError(f"{path}:{lineno}: bad alpha-2 code {code!r}")
            mapping[raw.strip().lower()] = code
    return mapping


__all__ = [
    "ArticleRecord", "ArticleLog", "RefLog", "append_record", "query_records",
    "append_label", "read_labels", "load_country_map", "read_ndjson", "validate_id",
]
