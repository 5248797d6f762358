"""Taxa, search families, range tables and time windows."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from importlib import resources

from .errors import (
    DuplicateTaxon,
    EmptyFamily,
    InvalidCountryCode,
    InvalidWindow,
    MalformedConfig,
)

_WS = re.compile(r"\s+")
_ALPHA2 = re.compile(r"^[A-Z]{2}$")


def normalize_keyword(word: str) -> str:
    """Lowercase, trim, and collapse internal whitespace to single spaces."""
    return _WS.sub(" ", word.strip().lower())


@dataclass(frozen=True)
class SearchFamily:
    taxon: str
    main_keyword: str
    additional_keywords: tuple[str, ...]

    def __post_init__(self):
        if not self.main_keyword:
            raise MalformedConfig(f"taxon {self.taxon!r}: empty main keyword")
        if not self.additional_keywords:
            raise EmptyFamily(f"taxon {self.taxon!r} has no additional keywords")
        if len(set(self.additional_keywords)) != len(self.additional_keywords):
            raise MalformedConfig(f"taxon {self.taxon!r}: duplicate additional keywords")
        if self.main_keyword in self.additional_keywords:
            raise MalformedConfig(
                f"taxon {self.taxon!r}: main keyword {self.main_keyword!r} repeated as additional"
            )


@dataclass(frozen=True)
class RangeTable:
    entries: dict[str, frozenset[str]]

    def __post_init__(self):
        for taxon, codes in self.entries.items():
            for code in codes:
                if not _ALPHA2.fullmatch(code):
                    raise InvalidCountryCode(f"{taxon}: {code!r}")

    def range_of(self, taxon: str) -> frozenset[str] | None:
        return self.entries.get(taxon)


@dataclass(frozen=True)
class TimeWindow:
    """Half-open UTC interval ``[start, end)``."""

    start: datetime
    end: datetime

    def __post_init__(self):
        for name in ("start", "end"):
            value = getattr(self, name)
            if value.tzinfo is None:
                object.__setattr__(self, name, value.replace(tzinfo=timezone.utc))
            else:
                object.__setattr__(self, name, value.astimezone(timezone.utc))
        if not self.start < self.end:
            raise InvalidWindow(f"window start {self.start} is not before end {self.end}")

    @classmethod
    def parse(cls, start: str, end: str) -> "TimeWindow":
        try:
            return cls(parse_utc(start), parse_utc(end))
        except ValueError as exc:
            raise InvalidWindow(str(exc)) from None

    @property
    def duration(self) -> timedelta:
        return self.end - self.start

    def contains(self, when: datetime) -> bool:
        return self.start <= when < self.end

    def days(self):
        """UTC calendar days touched by the window, in order."""
        day = self.start.date()
        last = (self.end - timedelta(microseconds=1)).date()
        out = []
        while day <= last:
            out.append(day)
            day += timedelta(days=1)
        return out


def parse_utc(text: str) -> datetime:
    """Parse an ISO-8601 timestamp (``Z`` accepted); naive values are taken as UTC."""
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    value = datetime.fromisoformat(text)
    if value.tzinfo is None:
        return value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc)


def format_utc(value: datetime) -> str:
    return value.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _load_json_object(text: str, what: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedConfig(f"{what}: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedConfig(f"{what}: top level must be an object")
    return doc


class _Pairs(list):
    pass


def parse_family_config(text: str) -> list[SearchFamily]:
    """Parse a ``families.json`` document.

    The document maps taxon to ``{"main": str, "additional": [str, ...]}``.
    Keywords are normalized and duplicates collapsed (first occurrence kept).
    """
    # object_pairs_hook lets us see duplicate keys that json.loads would merge
    try:
        pairs = json.loads(text, object_pairs_hook=_Pairs)
    except json.JSONDecodeError as exc:
        raise MalformedConfig(f"families: {exc}") from None
    if not isinstance(pairs, _Pairs):
        raise MalformedConfig("families: top level must be an object")

    families = []
    seen = set()
    for raw_taxon, entry in pairs:
        taxon = normalize_keyword(raw_taxon)
        if not taxon:
            raise MalformedConfig("families: empty taxon name")
        if taxon in seen:
            raise DuplicateTaxon(taxon)
        seen.add(taxon)
        entry = dict(entry) if isinstance(entry, _Pairs) else entry
        if not isinstance(entry, dict):
            raise MalformedConfig(f"families: {taxon!r} must map to an object")
        main = entry.get("main")
        additional = entry.get("additional")
        if not isinstance(main, str) or not isinstance(additional, list):
            raise MalformedConfig(f"families: {taxon!r} needs 'main' string and 'additional' list")
        if not all(isinstance(k, str) for k in additional):
            raise MalformedConfig(f"families: {taxon!r} keywords must be strings")
        keywords = []
        for word in additional:
            word = normalize_keyword(word)
            if word and word not in keywords:
                keywords.append(word)
        if not keywords:
            raise EmptyFamily(f"taxon {taxon!r} has no additional keywords")
        families.append(SearchFamily(taxon, normalize_keyword(main), tuple(keywords)))
    return families


def serialize_families(families: list[SearchFamily]) -> str:
    doc = {
        f.taxon: {"main": f.main_keyword, "additional": list(f.additional_keywords)}
        for f in families
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_range_table(text: str) -> RangeTable:
    doc = _load_json_object(text, "ranges")
    entries = {}
    for raw_taxon, codes in doc.items():
        if raw_taxon.startswith("_"):
            # "_comment" and similar annotation keys
            continue
        if not isinstance(codes, list) or not all(isinstance(c, str) for c in codes):
            raise MalformedConfig(f"ranges: {raw_taxon!r} must map to a list of strings")
        normalized = set()
        for code in codes:
            code = code.strip().upper()
            if not _ALPHA2.fullmatch(code):
                raise InvalidCountryCode(f"{raw_taxon}: {code!r} is not an alpha-2 code")
            normalized.add(code)
        entries[normalize_keyword(raw_taxon)] = frozenset(normalized)
    return RangeTable(entries)


def default_data_path(name: str):
    """Path of a data file shipped with the package (families.json, lexicon.tsv, ...)."""
    return resources.files("faunawatch") / "data" / name


def load_families(path) -> list[SearchFamily]:
    with open(path, encoding="utf-8") as fh:
        return parse_family_config(fh.read())


def load_ranges(path) -> RangeTable:
    with open(path, encoding="utf-8") as fh:
        return parse_range_table(fh.read())
