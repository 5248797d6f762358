"""Compare the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import random
import sys
import timeit
from pathlib import Path

from faunawatch import _kernels_py
from faunawatch.domain import default_data_path
from faunawatch.relevance import train
from faunawatch.sentiment import load_lexicon, load_shifters

try:
    from faunawatch import _kernels as _kernels_c
except ImportError:
    _kernels_c = None

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))
from tests.synth import synthetic_corpus  # noqa: E402


def workloads(impl, docs, model, lexicon, shifters):
    bags = [dict(sorted(_count(impl.tokenize(d, 2)).items())) for d in docs]
    sentences = [impl.tokenize(d, 1) for d in docs]
    rel, irr = model.token_counts["relevant"], model.token_counts["irrelevant"]
    v = model.vocabulary_size
    da = float(model.class_token_totals["relevant"] + v)
    db = float(model.class_token_totals["irrelevant"] + v)
    neg, amp, de = shifters.negators, shifters.amplifiers, shifters.de_amplifiers
    pol = lexicon.polarities
    return {
        "tokenize": lambda: [impl.tokenize(d, 2) for d in docs],
        "nb_log_likelihoods": lambda: [impl.nb_log_likelihoods(b, rel, irr, da, db) for b in bags],
        "score_sentence": lambda: [impl.score_sentence(s, pol, neg, amp, de) for s in sentences],
    }


def _count(tokens):
    out = {}
    for t in tokens:
        out[t] = out.get(t, 0) + 1
    return out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--docs", type=int, default=2000)
    args = parser.parse_args()

    corpus = synthetic_corpus(args.docs, seed=1)
    docs = [text for text, _ in corpus]
    model = train(corpus[:300])
    lexicon = load_lexicon(default_data_path("lexicon.tsv"))
    shifters = load_shifters(default_data_path("shifters.tsv"))

    backends = {"python": _kernels_py}
    if _kernels_c is not None:
        backends["cython"] = _kernels_c
    else:
        print("compiled extension not built; timing the fallback only")

    timings = {}
    for name, impl in backends.items():
        for kernel, fn in workloads(impl, docs, model, lexicon, shifters).items():
            timings[(name, kernel)] = min(timeit.repeat(fn, number=1, repeat=args.repeat))

    print(f"{args.docs} documents, best of {args.repeat}")
    print(f"{'kernel':<20}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for kernel in ("tokenize", "nb_log_likelihoods", "score_sentence"):
        py = timings[("python", kernel)] * 1e3
        if ("cython", kernel) in timings:
            cy = timings[("cython", kernel)] * 1e3
            print(f"{kernel:<20}{py:>12.2f}{cy:>12.2f}{py / cy:>9.1f}x")
        else:
            print(f"{kernel:<20}{py:>12.2f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
