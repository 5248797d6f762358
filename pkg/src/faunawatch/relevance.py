"""Multinomial naive Bayes relevance filter and its precision/recall evaluation."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

from . import kernels
from .errors import InvalidLabel, MissingClass, MissingModel

RELEVANT = "relevant"
IRRELEVANT = "irrelevant"
CLASSES = (RELEVANT, IRRELEVANT)


class TokenBag(Counter):
    """Multiset of normalized tokens."""


def tokenize(text: str) -> TokenBag:
    return TokenBag(kernels.tokenize(text, 2))


def tokenize_ordered(text: str, min_len: int = 2) -> list[str]:
    return kernels.tokenize(text, min_len)


@dataclass
class BayesModel:
    class_doc_counts: dict[str, int]
    token_counts: dict[str, dict[str, int]]
    class_token_totals: dict[str, int]
    vocabulary_size: int

    def prior(self, cls: str) -> float:
        return self.class_doc_counts[cls] / sum(self.class_doc_counts.values())

    def to_json(self) -> str:
        doc = {
            "class_doc_counts": {c: self.class_doc_counts[c] for c in CLASSES},
            "token_counts": {
                c: dict(sorted(self.token_counts[c].items())) for c in CLASSES
            },
            "class_token_totals": {c: self.class_token_totals[c] for c in CLASSES},
            "vocabulary_size": self.vocabulary_size,
        }
        return json.dumps(doc, indent=1, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "BayesModel":
        doc = json.loads(text)
        model = cls(
            class_doc_counts={c: int(doc["class_doc_counts"][c]) for c in CLASSES},
            token_counts={
                c: {t: int(n) for t, n in doc["token_counts"][c].items()} for c in CLASSES
            },
            class_token_totals={c: int(doc["class_token_totals"][c]) for c in CLASSES},
            vocabulary_size=int(doc["vocabulary_size"]),
        )
        for c in CLASSES:
            if sum(model.token_counts[c].values()) != model.class_token_totals[c]:
                raise ValueError(f"model token total for {c} does not match its counts")
        return model

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "BayesModel":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_json(fh.read())
        except FileNotFoundError:
            raise MissingModel(f"model file not found: {path}") from None


def train(labeled) -> BayesModel:
    """Fit a model from ``(text, class)`` pairs."""
    doc_counts = {c: 0 for c in CLASSES}
    token_counts = {c: Counter() for c in CLASSES}
    for text, cls in labeled:
        if cls not in doc_counts:
            raise InvalidLabel(f"unknown class {cls!r}")
        doc_counts[cls] += 1
        token_counts[cls].update(tokenize(text))
    for cls in CLASSES:
        if doc_counts[cls] == 0:
            raise MissingClass(f"no training documents labelled {cls!r}")
    vocab = set(token_counts[RELEVANT]) | set(token_counts[IRRELEVANT])
    return BayesModel(
        class_doc_counts=doc_counts,
        token_counts={c: dict(token_counts[c]) for c in CLASSES},
        class_token_totals={c: sum(token_counts[c].values()) for c in CLASSES},
        vocabulary_size=len(vocab),
    )


def log_scores(model: BayesModel, bag) -> tuple[float, float]:
    """Unnormalized log posteriors ``(relevant, irrelevant)``."""
    v = model.vocabulary_size
    # sorted so the float sum depends only on the multiset, not insertion order
    ll_rel, ll_irr = kernels.nb_log_likelihoods(
        dict(sorted(bag.items())),
        model.token_counts[RELEVANT],
        model.token_counts[IRRELEVANT],
        float(model.class_token_totals[RELEVANT] + v),
        float(model.class_token_totals[IRRELEVANT] + v),
    )
    return math.log(model.prior(RELEVANT)) + ll_rel, math.log(model.prior(IRRELEVANT)) + ll_irr


def _normalize(s_rel: float, s_irr: float) -> tuple[float, float]:
    top = max(s_rel, s_irr)
    e_rel = math.exp(s_rel - top)
    e_irr = math.exp(s_irr - top)
    z = e_rel + e_irr
    return e_rel / z, e_irr / z


def posterior_relevant(model: BayesModel, bag) -> float:
    return _normalize(*log_scores(model, bag))[0]


def posterior_irrelevant(model: BayesModel, bag) -> float:
    return _normalize(*log_scores(model, bag))[1]


def classify(model: BayesModel, text: str, threshold: float = 0.5) -> tuple[str, float]:
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    p = posterior_relevant(model, tokenize(text))
    return (RELEVANT if p >= threshold else IRRELEVANT), p


@dataclass
class EvalReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    true_negatives: int
    precision: float | None = field(init=False)
    recall: float | None = field(init=False)

    def __post_init__(self):
        tp, fp, fn = self.true_positives, self.false_positives, self.false_negatives
        self.precision = tp / (tp + fp) if tp + fp else None
        self.recall = tp / (tp + fn) if tp + fn else None

    def summary_line(self) -> str:
        def fmt(x):
            return "NA" if x is None else f"{x:.6f}"

        return (
            f"precision={fmt(self.precision)} recall={fmt(self.recall)} "
            f"tp={self.true_positives} fp={self.false_positives} "
            f"fn={self.false_negatives} tn={self.true_negatives}"
        )


def evaluate(model: BayesModel, labeled_test, threshold: float = 0.5) -> EvalReport:
    tp = fp = fn = tn = 0
    n = 0
    for text, actual in labeled_test:
        if actual not in CLASSES:
            raise InvalidLabel(f"unknown class {actual!r}")
        n += 1
        predicted, _ = classify(model, text, threshold)
        if predicted == RELEVANT:
            if actual == RELEVANT:
                tp += 1
            else:
                fp += 1
        elif actual == RELEVANT:
            fn += 1
        else:
            tn += 1
    if n == 0:
        raise ValueError("evaluation set is empty")
    return EvalReport(tp, fp, fn, tn)
