"""Daily and per-country aggregation of classified articles, plus CSV/SVG output."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass
from datetime import date
from xml.sax.saxutils import escape

from .domain import RangeTable, TimeWindow
from .errors import EmptySeries, EmptyWindow, NoResolvedCountries, UnscoredRecord


@dataclass(frozen=True)
class DailyStat:
    date: date
    taxon: str
    article_count: int
    mean_sentiment: float | None = None


@dataclass(frozen=True)
class CountryStat:
    country: str
    taxon: str
    article_count: int
    mean_sentiment: float | None = None
    is_range: bool | None = None


def _in_scope(records, taxon, window):
    return [r for r in records if r.taxon == taxon and window.contains(r.seen_date)]


def daily_counts(records, taxon: str, window: TimeWindow) -> list[DailyStat]:
    counts = defaultdict(int)
    for r in _in_scope(records, taxon, window):
        counts[r.seen_date.date()] += 1
    return [DailyStat(day, taxon, counts.get(day, 0)) for day in window.days()]


def coverage_fraction(daily) -> float:
    if not daily:
        raise EmptyWindow("no days to measure coverage over")
    return sum(1 for d in daily if d.article_count >= 1) / len(daily)


def _mean(values):
    return sum(values) / len(values)


def daily_mean_sentiment(records, taxon: str, window: TimeWindow) -> list[DailyStat]:
    by_day = defaultdict(list)
    for r in _in_scope(records, taxon, window):
        if r.sentiment is None:
            raise UnscoredRecord(f"record {r.id} has no sentiment score")
        by_day[r.seen_date.date()].append(r.sentiment)
    out = []
    for day in window.days():
        scores = by_day.get(day, [])
        out.append(DailyStat(day, taxon, len(scores), _mean(scores) if scores else None))
    return out


def country_stats(records, taxon: str, ranges: RangeTable | None = None,
                  by: str = "country") -> list[CountryStat]:
    """Counts and mean sentiment per source country (or per outlet domain).

    A taxon with an empty range set is treated as native everywhere.
    """
    if by not in ("country", "domain"):
        raise ValueError(f"unknown grouping {by!r}")
    groups = defaultdict(list)
    resolvable = {}
    for r in records:
        if r.taxon != taxon:
            continue
        if r.sentiment is None:
            raise UnscoredRecord(f"record {r.id} has no sentiment score")
        if by == "domain":
            key = r.domain or "unknown"
            resolvable[key] = False
        else:
            key = r.source_country_iso or r.source_country_raw
            resolvable[key] = r.source_country_iso is not None
        groups[key].append(r.sentiment)

    native = ranges.range_of(taxon) if ranges is not None else None
    out = []
    for key, scores in groups.items():
        is_range = None
        if native is not None and resolvable[key]:
            is_range = True if not native else key in native
        out.append(CountryStat(key, taxon, len(scores), _mean(scores), is_range))
    out.sort(key=lambda s: (-s.article_count, s.country))
    return out


def range_split(stats) -> tuple[float | None, float | None]:
    """Article-weighted mean sentiment in range countries and outside them."""
    sums = {True: 0.0, False: 0.0}
    counts = {True: 0, False: 0}
    for s in stats:
        if s.is_range is None or s.article_count == 0:
            continue
        sums[s.is_range] += s.mean_sentiment * s.article_count
        counts[s.is_range] += s.article_count
    if not counts[True] and not counts[False]:
        raise NoResolvedCountries("no country has a known range status")
    return (
        sums[True] / counts[True] if counts[True] else None,
        sums[False] / counts[False] if counts[False] else None,
    )


CSV_HEADERS = {
    "daily": ["date", "taxon", "count", "mean_sentiment"],
    "country": ["country", "taxon", "count", "mean_sentiment", "is_range"],
}


def _fmt_float(x):
    return "" if x is None else f"{x:.6f}"


def _fmt_bool(x):
    return "" if x is None else ("true" if x else "false")


def render_csv(stats, kind: str) -> bytes:
    if kind not in CSV_HEADERS:
        raise ValueError(f"unknown report kind {kind!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(CSV_HEADERS[kind])
    for s in stats:
        if kind == "daily":
            writer.writerow([s.date.isoformat(), s.taxon, s.article_count,
                             _fmt_float(s.mean_sentiment)])
        else:
            writer.writerow([s.country, s.taxon, s.article_count,
                             _fmt_float(s.mean_sentiment), _fmt_bool(s.is_range)])
    return buf.getvalue().encode("utf-8")


WIDTH, HEIGHT = 960, 480
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 20, 50, 40
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def _segments(points):
    """Split a list of (x, y|None) into runs without gaps."""
    runs, current = [], []
    for x, y in points:
        if y is None:
            if current:
                runs.append(current)
            current = []
        else:
            current.append((x, y))
    if current:
        runs.append(current)
    return runs


def render_chart(series: dict[str, list[DailyStat]], metric: str = "count") -> bytes:
    """SVG line chart with one line per taxon.

    Zero-article days plot as 0 for counts and as gaps for sentiment.
    """
    if metric not in ("count", "sentiment"):
        raise ValueError(f"unknown metric {metric!r}")
    if not series:
        raise EmptySeries("nothing to plot")
    days = sorted({d.date for stats in series.values() for d in stats})
    if not days:
        raise EmptySeries("all series are empty")
    index = {day: i for i, day in enumerate(days)}

    def value(d):
        if metric == "count":
            return float(d.article_count)
        return d.mean_sentiment if d.article_count else None

    values = [value(d) for stats in series.values() for d in stats]
    values = [v for v in values if v is not None]
    if not values:
        raise EmptySeries("no plottable values")
    lo, hi = min(values), max(values)
    span = hi - lo
    pad = span * 0.05 if span else (abs(hi) * 0.05 or 1.0)
    lo, hi = lo - pad, hi + pad

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(i):
        if len(days) == 1:
            return MARGIN_LEFT + plot_w / 2
        return MARGIN_LEFT + plot_w * i / (len(days) - 1)

    def sy(v):
        return MARGIN_TOP + plot_h * (hi - v) / (hi - lo)

    title = "Articles per day" if metric == "count" else "Mean sentiment per day"
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{MARGIN_LEFT}" y="20" font-size="14">{title}</text>',
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP + plot_h}" x2="{WIDTH - MARGIN_RIGHT}" '
        f'y2="{MARGIN_TOP + plot_h}" stroke="#000000"/>',
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" '
        f'y2="{MARGIN_TOP + plot_h}" stroke="#000000"/>',
        f'<text x="{MARGIN_LEFT - 6}" y="{MARGIN_TOP + 4}" text-anchor="end">{hi:.2f}</text>',
        f'<text x="{MARGIN_LEFT - 6}" y="{MARGIN_TOP + plot_h + 4}" text-anchor="end">{lo:.2f}</text>',
        f'<text x="{MARGIN_LEFT}" y="{HEIGHT - 12}">{days[0].isoformat()}</text>',
        f'<text x="{WIDTH - MARGIN_RIGHT}" y="{HEIGHT - 12}" text-anchor="end">'
        f'{days[-1].isoformat()}</text>',
    ]
    if lo < 0 < hi and metric == "sentiment":
        out.append(f'<line x1="{MARGIN_LEFT}" y1="{sy(0):.2f}" x2="{WIDTH - MARGIN_RIGHT}" '
                   f'y2="{sy(0):.2f}" stroke="#cccccc" stroke-dasharray="4 4"/>')

    for n, (taxon, stats) in enumerate(series.items()):
        colour = PALETTE[n % len(PALETTE)]
        points = [(index[d.date], value(d)) for d in sorted(stats, key=lambda d: d.date)]
        for run in _segments(points):
            coords = " ".join(f"{sx(i):.2f},{sy(v):.2f}" for i, v in run)
            out.append(f'<polyline data-taxon="{escape(taxon)}" fill="none" stroke="{colour}" '
                       f'stroke-width="1.5" points="{coords}"/>')
        lx = MARGIN_LEFT + 200 + 110 * n
        out.append(f'<line x1="{lx}" y1="16" x2="{lx + 20}" y2="16" stroke="{colour}" '
                   f'stroke-width="3"/>')
        out.append(f'<text x="{lx + 24}" y="20">{escape(taxon)}</text>')
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")
