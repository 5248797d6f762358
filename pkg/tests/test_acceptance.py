"""Acceptance gate: one check per criterion, each printed as PASS/FAIL in the summary."""

import itertools
import random
import time
from collections import defaultdict
from datetime import datetime, timedelta, timezone

from faunawatch import cli, pipeline
from faunawatch.analytics import country_stats, daily_counts, daily_mean_sentiment, range_split
from faunawatch.domain import RangeTable, TimeWindow, load_families
from faunawatch.gdelt import article_id
from faunawatch.relevance import evaluate, posterior_relevant, tokenize, train
from faunawatch.sentiment import score_article, score_sentence
from faunawatch.store import ArticleLog, ArticleRecord, append_label

from .conftest import MINICORPUS, MINILEX, MINISHIFT
from .oracles import bayes_posterior_exact
from .synth import (
    make_articles,
    synthetic_corpus,
    synthetic_model,
    synthetic_text,
    write_config,
    write_fixtures,
)

WINDOW = TimeWindow.parse("2019-11-01T00:00:00Z", "2019-11-04T00:00:00Z")
NOW = "2020-01-01T00:00:00Z"


def _world(root, n, n_relevant, seed=5):
    families = load_families(pipeline.default_data_path("families.json"))
    articles = make_articles(families, WINDOW, n, n_relevant, seed=seed)
    write_fixtures(root / "fx", families, WINDOW, articles)
    synthetic_model().save(root / "model.json")
    config = write_config(root / "config.json", "store", "model.json", WINDOW, fixtures_dir="fx")
    return config, articles


def test_1_bayes_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    model = train(MINICORPUS)
    vocab = sorted({t for text, _ in MINICORPUS for t in text.split()})
    p = posterior_relevant(model, tokenize("ivory trafficking arrest"))
    exact = float(bayes_posterior_exact(MINICORPUS, ["ivory", "trafficking", "arrest"]))
    worst = 0.0
    n_docs = 0
    for k in range(4):
        for doc in itertools.product(vocab, repeat=k):
            n_docs += 1
            got = posterior_relevant(model, tokenize(" ".join(doc)))
            worst = max(worst, abs(got - float(bayes_posterior_exact(MINICORPUS, doc))))
    elapsed = time.perf_counter() - t0
    ok = (len(vocab) == 19 and abs(p - 0.8667) <= 1e-4 and abs(p - exact) <= 1e-12
          and worst <= 1e-9 and elapsed < 1.0)
    verdict.check(1, ok, f"posterior={p:.6f} sweep_docs={n_docs} max_err={worst:.2e} "
                         f"time={elapsed:.3f}s")


def test_2_synthetic_classifier_quality(verdict):
    t0 = time.perf_counter()
    corpus = synthetic_corpus(400, seed=2024)
    model = train(corpus[:300])
    report = evaluate(model, corpus[300:])
    elapsed = time.perf_counter() - t0
    ok = report.precision >= 0.9 and report.recall >= 0.9 and elapsed < 5.0
    verdict.check(2, ok, f"{report.summary_line()} time={elapsed:.3f}s")


def test_3_precision_recall_print(tmp_path, capsys, verdict):
    # a store whose labels disagree with the model in a controlled way
    rng = random.Random(3)
    plan = ([("relevant", True)] * 10 + [("irrelevant", True)] * 3
            + [("relevant", False)] * 1 + [("irrelevant", False)] * 6)
    log = ArticleLog.in_dir(tmp_path / "store")
    labels = tmp_path / "labels.ndjson"
    when = datetime(2019, 11, 1, tzinfo=timezone.utc)
    for i, (label, looks_relevant) in enumerate(plan):
        url = f"https://x.example.com/{i}"
        log.append(ArticleRecord(
            id=article_id(url), taxon="tiger", url=url, fetched_url=url, seen_date=when,
            source_country_raw="India", language="English", title="story",
            text=synthetic_text(rng, looks_relevant, 60), fetched_at=when))
        append_label(labels, article_id(url), label, clock=lambda: when)
    synthetic_model().save(tmp_path / "model.json")
    code = cli.main(["eval", "--store", str(tmp_path / "store"), "--labels", str(labels),
                     "--model", str(tmp_path / "model.json")])
    line = capsys.readouterr().out.strip()
    ok = code == 0 and line.startswith("precision=0.769231 recall=0.909091 tp=10 fp=3 fn=1")
    verdict.check(3, ok, line)


def test_4_sentiment_suite(verdict):
    failures = []
    for w, p in MINILEX.polarities.items():
        base = score_sentence([w], MINILEX, MINISHIFT)
        neg = score_sentence(["not", w], MINILEX, MINISHIFT)
        dbl = score_sentence(["not", "not", w], MINILEX, MINISHIFT)
        amp = score_sentence(["very", w], MINILEX, MINISHIFT)
        pad = score_sentence(["the", w], MINILEX, MINISHIFT)
        if not (base * neg < 0 and dbl * base > 0 and abs(amp) > abs(pad)):
            failures.append(w)
    neutral = score_article("The ranger walked to the river today.", MINILEX, MINISHIFT).article_score
    article = score_article("Good news. Not good for poachers.", MINILEX, MINISHIFT).article_score
    ok = not failures and neutral == 0.0 and abs(article - 0.1036) <= 1e-4
    verdict.check(4, ok, f"words={len(MINILEX.polarities)} failing={failures} neutral={neutral} "
                         f"article={article:.6f}")


def test_5_filtering_ratio_fixture(tmp_path, capsys, verdict):
    config, articles = _world(tmp_path, 100, 31)
    t0 = time.perf_counter()
    code = cli.main(["run", "--config", str(config), "--now", NOW])
    elapsed = time.perf_counter() - t0
    out = dict(kv.split("=") for kv in capsys.readouterr().out.split())
    relevant = int(out.get("relevant", -1))
    ok = code == 0 and int(out["fetched"]) == 100 and abs(relevant - 31) <= 5 and elapsed < 10.0
    verdict.check(5, ok, f"fetched={out.get('fetched')} relevant={relevant} (constructed 31) "
                         f"time={elapsed:.3f}s")


def test_6_aggregation_conservation(verdict):
    rng = random.Random(6)
    start = datetime(2019, 11, 1, tzinfo=timezone.utc)
    window = TimeWindow(start, start + timedelta(days=30))
    taxa = ["tiger", "lion", "orchid"]
    isos = ["IN", "GB", "KE", "ZA", "US", None]
    records = []
    for i in range(1000):
        url = f"https://r.example.com/{i}"
        iso = rng.choice(isos)
        records.append(ArticleRecord(
            id=article_id(url), taxon=rng.choice(taxa), url=url, fetched_url=url,
            seen_date=start + timedelta(seconds=rng.randrange(30 * 86400)),
            source_country_raw=iso or "Atlantis", language="English", title="t", text="x",
            fetched_at=start, source_country_iso=iso, relevant=True,
            sentiment=rng.uniform(-1.5, 1.5)))
    ranges = RangeTable({"tiger": frozenset({"IN"}), "lion": frozenset({"KE", "ZA"}),
                         "orchid": frozenset()})
    total = 0
    worst_daily = worst_split = 0.0
    for taxon in taxa:
        mine = [r for r in records if r.taxon == taxon]
        total += sum(d.article_count for d in daily_counts(records, taxon, window))
        by_day = defaultdict(list)
        for r in mine:
            by_day[r.seen_date.date()].append(r.sentiment)
        for d in daily_mean_sentiment(records, taxon, window):
            if d.article_count:
                vals = by_day[d.date]
                worst_daily = max(worst_daily, abs(d.mean_sentiment - sum(vals) / len(vals)))
        stats = country_stats(records, taxon, ranges)
        rng_mean, non_mean = range_split(stats)
        resolved = [r for r in mine if r.source_country_iso]
        n_r = sum(s.article_count for s in stats if s.is_range is True)
        n_n = sum(s.article_count for s in stats if s.is_range is False)
        combined = ((rng_mean or 0.0) * n_r + (non_mean or 0.0) * n_n) / (n_r + n_n)
        overall = sum(r.sentiment for r in resolved) / len(resolved)
        worst_split = max(worst_split, abs(combined - overall))
    ok = total == 1000 and worst_daily <= 1e-12 and worst_split <= 1e-12
    verdict.check(6, ok, f"sum_daily={total} daily_err={worst_daily:.1e} split_err={worst_split:.1e}")


def _full_run(root, config):
    out = root / "out"
    assert cli.main(["run", "--config", str(config), "--now", NOW]) == 0
    assert cli.main(["report", "--config", str(config), "--out-dir", str(out)]) == 0
    assert cli.main(["chart", "--config", str(config), "--out-dir", str(out)]) == 0
    files = {"articles.ndjson": root / "store" / "articles.ndjson",
             "refs.ndjson": root / "store" / "refs.ndjson"}
    files.update({p.name: p for p in sorted(out.iterdir())})
    return {name: p.read_bytes() for name, p in files.items()}


def test_7_determinism(tmp_path, capsys, verdict):
    outputs = []
    for run in ("a", "b"):
        root = tmp_path / run
        root.mkdir()
        config, _ = _world(root, 40, 15)
        outputs.append(_full_run(root, config))
    capsys.readouterr()
    names = sorted(outputs[0])
    differing = [n for n in names if outputs[0][n] != outputs[1].get(n)]
    expected = {"articles.ndjson", "refs.ndjson", "report_daily.csv", "report_country.csv",
                "chart_counts.svg", "chart_sentiment.svg"}
    ok = set(names) == expected and not differing
    verdict.check(7, ok, f"compared={names} differing={differing}")


def test_8_dedup_idempotence(tmp_path, capsys, verdict):
    config, _ = _world(tmp_path, 30, 10)
    common = ["--config", str(config), "--now", NOW]
    cli.main(["scan", *common])
    cli.main(["fetch", *common])
    refs = (tmp_path / "store" / "refs.ndjson").read_bytes()
    arts = (tmp_path / "store" / "articles.ndjson").read_bytes()
    capsys.readouterr()
    cli.main(["scan", *common])
    cli.main(["fetch", *common])
    second = capsys.readouterr().out.split()
    unchanged = (refs == (tmp_path / "store" / "refs.ndjson").read_bytes()
                 and arts == (tmp_path / "store" / "articles.ndjson").read_bytes())
    ok = "queued=0" in second and "fetched=0" in second and unchanged
    verdict.check(8, ok, f"second pass: {' '.join(second)} store_unchanged={unchanged}")
