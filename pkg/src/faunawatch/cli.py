"""faunawatch: track news coverage and sentiment of wildlife taxa."""

from __future__ import annotations

import argparse
import logging
import secrets
import sys
from pathlib import Path

from . import pipeline
from .domain import TimeWindow, load_families
from .errors import FaunawatchError, MalformedConfig
from .relevance import BayesModel
from .sentiment import load_lexicon, load_shifters
from .store import LABELS, ArticleLog, RefLog

log = logging.getLogger("faunawatch")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error:usage: {message}\n")
        raise SystemExit(2)


def _add_common(p, *, window=False, fixtures=False, model=False):
    p.add_argument("--config", help="pipeline config JSON; flags below override it")
    p.add_argument("--store", help="store directory")
    p.add_argument("--families", help="families.json (default: shipped search families)")
    p.add_argument("--ranges", help="ranges.json (default: shipped range table)")
    p.add_argument("--lexicon", help="polarity lexicon TSV")
    p.add_argument("--shifters", help="valence shifter TSV")
    p.add_argument("--countries", help="country name to ISO code TSV")
    p.add_argument("--now", help="fixed ISO timestamp used as the clock (reproducible runs)")
    if window:
        p.add_argument("--start", help="window start (ISO 8601, UTC)")
        p.add_argument("--end", help="window end, exclusive (ISO 8601, UTC)")
    if fixtures:
        p.add_argument("--fixtures", help="replay GDELT responses and pages from DIR")
    if model:
        p.add_argument("--model", help="trained model JSON")
        p.add_argument("--threshold", type=float, help="relevance decision threshold")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="faunawatch", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("scan", help="query the article index and queue new hits")
    _add_common(p, window=True, fixtures=True)
    p.add_argument("--best-effort", action="store_true", help="skip failed queries")

    p = sub.add_parser("fetch", help="download and extract queued articles")
    _add_common(p, fixtures=True)

    p = sub.add_parser("label", help="hand-label stored articles")
    _add_common(p)
    p.add_argument("--labels", help="label file (default: <store>/labels.ndjson)")
    p.add_argument("--count", type=int, default=20)

    p = sub.add_parser("train", help="train the relevance model from labels")
    _add_common(p)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--holdout", type=float, default=0.25)
    p.add_argument("--seed", type=int, help="shuffle seed (random if omitted; always printed)")
    p.add_argument("--chronological", action="store_true",
                   help="hold out the most recent articles instead of a random sample")

    p = sub.add_parser("eval", help="precision/recall of a model on labelled articles")
    _add_common(p, model=True)
    p.add_argument("--labels", required=True)

    p = sub.add_parser("classify", help="mark stored articles relevant or irrelevant")
    _add_common(p, model=True)
    p.add_argument("--all", action="store_true", help="reclassify already classified articles")

    p = sub.add_parser("score", help="score sentiment of relevant articles")
    _add_common(p)
    p.add_argument("--all", action="store_true", help="rescore already scored articles")

    p = sub.add_parser("report", help="write daily and per-country CSV reports")
    _add_common(p, window=True)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--by-domain", action="store_true", help="group by outlet domain, not country")

    p = sub.add_parser("chart", help="write SVG charts of daily counts and sentiment")
    _add_common(p, window=True)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--metric", choices=["count", "sentiment", "both"], default="both")

    p = sub.add_parser("run", help="scan, fetch, classify and score in one pass")
    _add_common(p, window=True, fixtures=True, model=True)
    p.add_argument("--best-effort", action="store_true", help="skip failed queries")
    return parser


_FLAG_TO_KEY = {
    "store": "store_dir", "families": "families_path", "ranges": "ranges_path",
    "lexicon": "lexicon_path", "shifters": "shifters_path", "countries": "countries_path",
    "fixtures": "fixtures_dir", "model": "model_path",
}


def resolve_config(args) -> pipeline.PipelineConfig:
    if args.config:
        config = pipeline.PipelineConfig.from_file(args.config)
    else:
        if not getattr(args, "store", None):
            raise MalformedConfig("either --config or --store is required")
        config = pipeline.PipelineConfig(store_dir=Path(args.store),
                                         model_path=Path(getattr(args, "model", None) or "model.json"))
    for flag, key in _FLAG_TO_KEY.items():
        value = getattr(args, flag, None)
        if value:
            setattr(config, key, Path(value))
    if getattr(args, "threshold", None) is not None:
        config.threshold = args.threshold
        config.__post_init__()
    start, end = getattr(args, "start", None), getattr(args, "end", None)
    if start or end:
        if not (start and end):
            raise MalformedConfig("--start and --end go together")
        config.window = TimeWindow.parse(start, end)
    return config


def _fmt(x):
    return "NA" if x is None else f"{x:.6f}"


def cmd_scan(args, config, clock):
    families = load_families(config.families_path)
    gdelt_transport, _ = pipeline.transports(config)
    refs, queued = pipeline.scan_stage(config, families, gdelt_transport, args.best_effort)
    print(f"scanned={len(refs)} queued={queued}")


def cmd_fetch(args, config, clock):
    _, page_transport = pipeline.transports(config)
    refs = RefLog.in_dir(config.store_dir).refs()
    records = pipeline.fetch_stage(config, refs, page_transport, clock=clock)
    articles = ArticleLog.in_dir(config.store_dir)
    added = sum(1 for r in records if articles.append(r))
    print(f"queued={len(refs)} fetched={added}")


def _read_key():
    if not sys.stdin.isatty():
        return sys.stdin.readline()
    import termios
    import tty

    fd = sys.stdin.fileno()
    old = termios.tcgetattr(fd)
    try:
        tty.setraw(fd)
        return sys.stdin.read(1)
    finally:
        termios.tcsetattr(fd, termios.TCSADRAIN, old)


def cmd_label(args, config, clock):
    label_file = Path(args.labels) if args.labels else Path(config.store_dir) / LABELS
    n = pipeline.label_loop(config.store_dir, label_file, args.count, _read_key, clock=clock)
    print(f"labelled={n}")


def cmd_train(args, config, clock):
    seed = args.seed if args.seed is not None else secrets.randbelow(2**31)
    if not args.chronological:
        print(f"seed={seed}")
    model, report, n_train, n_test = pipeline.train_from_labels(
        config.store_dir, args.labels, args.holdout, seed, args.chronological)
    model.save(args.out)
    print(f"trained on {n_train} articles, held out {n_test}; model written to {args.out}")
    if report is not None:
        print(report.summary_line())


def cmd_eval(args, config, clock):
    model = BayesModel.load(config.model_path)
    report = pipeline.evaluate_labels(model, config.store_dir, args.labels, config.threshold)
    print(report.summary_line())


def cmd_classify(args, config, clock):
    model = BayesModel.load(config.model_path)
    print(f"classified={pipeline.classify_stage(config, model, args.all)}")


def cmd_score(args, config, clock):
    lexicon = load_lexicon(config.lexicon_path)
    shifters = load_shifters(config.shifters_path)
    print(f"scored={pipeline.score_stage(config, lexicon, shifters, args.all)}")


def cmd_report(args, config, clock):
    rows = pipeline.report_stage(config, args.out_dir, by="domain" if args.by_domain else "country")
    for row in rows:
        print(f"taxon={row['taxon']} articles={row['articles']} coverage={row['coverage']:.6f} "
              f"range_mean={_fmt(row['range_mean'])} nonrange_mean={_fmt(row['nonrange_mean'])}")


def cmd_chart(args, config, clock):
    metrics = ("count", "sentiment") if args.metric == "both" else (args.metric,)
    for path in pipeline.chart_stage(config, args.out_dir, metrics):
        print(path)


def cmd_run(args, config, clock):
    summary = pipeline.run_pipeline(config, best_effort=args.best_effort, clock=clock)
    print(" ".join(f"{k}={v}" for k, v in summary.items()))


COMMANDS = {
    "scan": cmd_scan, "fetch": cmd_fetch, "label": cmd_label, "train": cmd_train,
    "eval": cmd_eval, "classify": cmd_classify, "score": cmd_score, "report": cmd_report,
    "chart": cmd_chart, "run": cmd_run,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = resolve_config(args)
        clock = pipeline.parse_now(args.now)
        COMMANDS[args.command](args, config, clock)
    except FaunawatchError as exc:
        print(f"error:{exc.code}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error:io_error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error:invalid_value: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
