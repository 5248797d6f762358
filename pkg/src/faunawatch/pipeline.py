"""Stage wiring: scan, fetch, classify, score, report, and the labelling loop."""

from __future__ import annotations

import json
import logging
import random
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import analytics
from .domain import TimeWindow, default_data_path, load_families, load_ranges, parse_utc
from .errors import InvalidWindow, MalformedConfig, MissingModel, NoUnlabeled
from .fetcher import FixturePageTransport, HttpTransport, fetch_many
from .gdelt import FixtureTransport, LiveTransport, article_id, scan_window
from .relevance import IRRELEVANT, RELEVANT, BayesModel, classify, evaluate, train
from .sentiment import load_lexicon, load_shifters, score_article
from .store import ArticleLog, RefLog, append_label, load_country_map, read_labels

log = logging.getLogger(__name__)


def utcnow():
    return datetime.now(timezone.utc)


def fixed_clock(value: datetime):
    return lambda: value


@dataclass
class PipelineConfig:
    store_dir: Path
    model_path: Path
    window: TimeWindow | None = None
    families_path: Path = field(default_factory=lambda: default_data_path("families.json"))
    ranges_path: Path = field(default_factory=lambda: default_data_path("ranges.json"))
    lexicon_path: Path = field(default_factory=lambda: default_data_path("lexicon.tsv"))
    shifters_path: Path = field(default_factory=lambda: default_data_path("shifters.tsv"))
    countries_path: Path = field(default_factory=lambda: default_data_path("countries.tsv"))
    fixtures_dir: Path | None = None
    threshold: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise MalformedConfig(f"threshold must lie in (0, 1), got {self.threshold}")
        for name in ("store_dir", "model_path"):
            if not str(getattr(self, name)):
                raise MalformedConfig(f"{name} must not be empty")

    KEYS = ("store_dir", "model_path", "families_path", "ranges_path", "lexicon_path",
            "shifters_path", "countries_path", "fixtures_dir")

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise MalformedConfig(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise MalformedConfig(f"{path}: {exc}") from None
        return cls.from_dict(doc, base=path.parent)

    @classmethod
    def from_dict(cls, doc: dict, base=Path(".")) -> "PipelineConfig":
        unknown = set(doc) - set(cls.KEYS) - {"threshold", "window"}
        if unknown:
            raise MalformedConfig(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for key in cls.KEYS:
            if doc.get(key):
                kwargs[key] = Path(base) / doc[key]
        for key in ("store_dir", "model_path"):
            if key not in kwargs:
                raise MalformedConfig(f"config needs {key!r}")
        if "threshold" in doc:
            kwargs["threshold"] = float(doc["threshold"])
        if "window" in doc:
            w = doc["window"]
            try:
                kwargs["window"] = TimeWindow.parse(w["start"], w["end"])
            except (KeyError, TypeError):
                raise MalformedConfig("window needs 'start' and 'end'") from None
        return cls(**kwargs)

    def require_window(self) -> TimeWindow:
        if self.window is None:
            raise InvalidWindow("a time window (--start/--end or config 'window') is required")
        return self.window


def classifier_text(record) -> str:
    return f"{record.title}\n{record.text}"


def transports(config: PipelineConfig):
    if config.fixtures_dir is not None:
        root = Path(config.fixtures_dir)
        return FixtureTransport(root / "gdelt"), FixturePageTransport(root / "pages")
    return LiveTransport(), HttpTransport()


def scan_stage(config, families, gdelt_transport, best_effort=False):
    """Returns ``(all refs, newly queued count)``."""
    window = config.require_window()
    refs = []
    for family in families:
        refs.extend(scan_window(family, window, gdelt_transport, best_effort=best_effort))
    queued = RefLog.in_dir(config.store_dir).append_new(refs)
    return refs, queued


def fetch_stage(config, refs, page_transport, clock=utcnow, sleep=time.sleep):
    articles = ArticleLog.in_dir(config.store_dir)
    pending = []
    seen = set()
    for ref in refs:
        rid = article_id(ref.url)
        if rid in articles or rid in seen:
            continue
        seen.add(rid)
        pending.append(ref)
    countries = load_country_map(config.countries_path)
    live = not isinstance(page_transport, FixturePageTransport)
    results = fetch_many(pending, page_transport, max_workers=4 if live else 1,
                         clock=clock, sleep=sleep, country_map=countries)
    records = []
    unmapped = set()
    for ref, outcome in results:
        if isinstance(outcome, Exception):
            log.warning("fetch failed for %s (%s): %s", ref.url, ref.taxon, outcome)
            continue
        if outcome.source_country_iso is None and outcome.source_country_raw:
            unmapped.add(outcome.source_country_raw)
        records.append(outcome)
    if unmapped:
        log.warning("source countries without an ISO mapping: %s", ", ".join(sorted(unmapped)))
    return records


def classify_record(record, model, threshold):
    label, posterior = classify(model, classifier_text(record), threshold)
    return record.with_updates(relevant=(label == RELEVANT), relevance_posterior=posterior)


def score_record(record, lexicon, shifters):
    return record.with_updates(sentiment=score_article(record.text, lexicon, shifters).article_score)


def run_pipeline(config: PipelineConfig, *, gdelt_transport=None, page_transport=None,
                 best_effort=False, clock=utcnow, sleep=time.sleep) -> dict:
    """scan -> fetch -> classify -> score -> append for every taxon."""
    if not Path(config.model_path).exists():
        raise MissingModel(f"model file not found: {config.model_path}")
    model = BayesModel.load(config.model_path)
    families = load_families(config.families_path)
    lexicon = load_lexicon(config.lexicon_path)
    shifters = load_shifters(config.shifters_path)
    if gdelt_transport is None or page_transport is None:
        default_g, default_p = transports(config)
        gdelt_transport = gdelt_transport or default_g
        page_transport = page_transport or default_p

    refs, _ = scan_stage(config, families, gdelt_transport, best_effort)
    records = fetch_stage(config, refs, page_transport, clock=clock, sleep=sleep)
    articles = ArticleLog.in_dir(config.store_dir)
    summary = {"scanned": len(refs), "fetched": 0, "relevant": 0, "scored": 0}
    for record in records:
        record = classify_record(record, model, config.threshold)
        if record.relevant:
            summary["relevant"] += 1
            record = score_record(record, lexicon, shifters)
            summary["scored"] += 1
        if articles.append(record):
            summary["fetched"] += 1
    return summary


def classify_stage(config, model, reclassify=False) -> int:
    articles = ArticleLog.in_dir(config.store_dir)
    n = 0
    for record in articles.query():
        if record.relevant is not None and not reclassify:
            continue
        articles.write_version(classify_record(record, model, config.threshold))
        n += 1
    return n


def score_stage(config, lexicon, shifters, rescore=False) -> int:
    articles = ArticleLog.in_dir(config.store_dir)
    n = 0
    for record in articles.query(relevant_only=True):
        if record.sentiment is not None and not rescore:
            continue
        articles.write_version(score_record(record, lexicon, shifters))
        n += 1
    return n


def report_stage(config, out_dir, taxa=None, by="country"):
    """Write report_daily.csv and report_country.csv; return per-taxon summaries."""
    window = config.require_window()
    records = ArticleLog.in_dir(config.store_dir).query(window=window, relevant_only=True)
    if taxa is None:
        taxa = [f.taxon for f in load_families(config.families_path)]
    ranges = load_ranges(config.ranges_path)
    daily_rows, country_rows, summaries = [], [], []
    for taxon in taxa:
        daily = analytics.daily_mean_sentiment(records, taxon, window)
        countries = analytics.country_stats(records, taxon, ranges, by=by)
        daily_rows.extend(daily)
        country_rows.extend(countries)
        try:
            split = analytics.range_split(countries)
        except analytics.NoResolvedCountries:
            split = (None, None)
        summaries.append({
            "taxon": taxon,
            "articles": sum(d.article_count for d in daily),
            "coverage": analytics.coverage_fraction(daily),
            "range_mean": split[0],
            "nonrange_mean": split[1],
        })
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report_daily.csv").write_bytes(analytics.render_csv(daily_rows, "daily"))
    (out_dir / "report_country.csv").write_bytes(analytics.render_csv(country_rows, "country"))
    return summaries


def chart_stage(config, out_dir, metrics=("count", "sentiment"), taxa=None):
    window = config.require_window()
    records = ArticleLog.in_dir(config.store_dir).query(window=window, relevant_only=True)
    if taxa is None:
        taxa = [f.taxon for f in load_families(config.families_path)]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for metric in metrics:
        if metric == "count":
            series = {t: analytics.daily_counts(records, t, window) for t in taxa}
            name = "chart_counts.svg"
        else:
            series = {t: analytics.daily_mean_sentiment(records, t, window) for t in taxa}
            name = "chart_sentiment.svg"
        path = out_dir / name
        path.write_bytes(analytics.render_chart(series, metric))
        written.append(path)
    return written


def labelled_examples(store_dir, label_file):
    """``(record, class)`` pairs for every labelled id present in the store."""
    records = ArticleLog.in_dir(store_dir).latest()
    labels = read_labels(label_file)
    missing = [rid for rid in labels if rid not in records]
    if missing:
        log.warning("%d labelled ids are not in the store and were ignored", len(missing))
    return [(records[rid], cls) for rid, cls in labels.items() if rid in records]


def split_examples(examples, holdout: float, seed: int, chronological: bool = False):
    if not 0.0 <= holdout < 1.0:
        raise ValueError("holdout must lie in [0, 1)")
    examples = sorted(examples, key=lambda e: (e[0].seen_date, e[0].id))
    if not chronological:
        random.Random(seed).shuffle(examples)
    n_test = round(len(examples) * holdout)
    cut = len(examples) - n_test
    return examples[:cut], examples[cut:]


def train_from_labels(store_dir, label_file, holdout=0.25, seed=0, chronological=False):
    examples = labelled_examples(store_dir, label_file)
    train_set, test_set = split_examples(examples, holdout, seed, chronological)
    model = train([(classifier_text(r), c) for r, c in train_set])
    report = None
    if test_set:
        report = evaluate(model, [(classifier_text(r), c) for r, c in test_set])
    return model, report, len(train_set), len(test_set)


def evaluate_labels(model, store_dir, label_file, threshold=0.5):
    examples = labelled_examples(store_dir, label_file)
    return evaluate(model, [(classifier_text(r), c) for r, c in examples], threshold)


KEYS = {"r": RELEVANT, "i": IRRELEVANT}
PREVIEW_CHARS = 600


def label_loop(store_dir, label_file, count: int, read_key, write=print, clock=utcnow) -> int:
    """Show unlabelled articles one at a time and record keypresses.

    ``r`` relevant, ``i`` irrelevant, ``s`` skip, ``q`` quit. Each label is
    appended as soon as its key is read.
    """
    if count <= 0:
        return 0
    labelled = read_labels(label_file)
    pending = [r for r in ArticleLog.in_dir(store_dir).query() if r.id not in labelled]
    if not pending:
        raise NoUnlabeled("no unlabelled articles in the store")
    done = 0
    for shown, record in enumerate(pending[:count], 1):
        write(f"\n[{shown}/{min(count, len(pending))}] {record.title}")
        write(record.text[:PREVIEW_CHARS])
        write("[r]elevant  [i]rrelevant  [s]kip  [q]uit")
        while True:
            key = (read_key() or "q").strip().lower()[:1]
            if key in KEYS or key in ("s", "q"):
                break
            write("please press r, i, s or q")
        if key == "q":
            break
        if key in KEYS:
            append_label(label_file, record.id, KEYS[key], clock=clock)
            done += 1
    return done


def parse_now(value: str | None):
    return fixed_clock(parse_utc(value)) if value else utcnow
