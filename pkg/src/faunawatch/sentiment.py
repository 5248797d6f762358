"""Lexicon sentiment scoring with negators, amplifiers and de-amplifiers.

Each polarized word contributes its polarity, sign-flipped once per negator
and scaled by the amplifiers/de-amplifiers found in a small window around
it. A sentence score is the sum of contributions divided by the square root
of the sentence length; an article score is the mean over its sentences.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from statistics import fmean

from . import kernels

_SENTENCE_END = re.compile(r"[.!?](?=\s|$)")

SHIFTER_CLASSES = ("negator", "amplifier", "deamplifier")


@dataclass(frozen=True)
class Lexicon:
    polarities: dict[str, float]

    def __post_init__(self):
        cleaned = {t.lower(): float(p) for t, p in self.polarities.items() if float(p) != 0.0}
        object.__setattr__(self, "polarities", cleaned)

    def __contains__(self, token):
        return token in self.polarities

    def __len__(self):
        return len(self.polarities)


@dataclass(frozen=True)
class ShifterTable:
    negators: frozenset[str] = frozenset()
    amplifiers: frozenset[str] = frozenset()
    de_amplifiers: frozenset[str] = frozenset()

    def __post_init__(self):
        for name in ("negators", "amplifiers", "de_amplifiers"):
            object.__setattr__(self, name, frozenset(t.lower() for t in getattr(self, name)))
        if (self.negators & self.amplifiers or self.negators & self.de_amplifiers
                or self.amplifiers & self.de_amplifiers):
            raise ValueError("shifter classes overlap")

    def check_disjoint(self, lexicon: Lexicon) -> None:
        clash = (self.negators | self.amplifiers | self.de_amplifiers) & lexicon.polarities.keys()
        if clash:
            raise ValueError(f"shifters also present in lexicon: {sorted(clash)}")


@dataclass(frozen=True)
class ScoringConfig:
    window_before: int = 4
    window_after: int = 2
    amplifier_weight: float = 0.8
    weight_floor: float = 0.2


@dataclass
class SentimentResult:
    article_score: float
    sentence_scores: list[float] = field(default_factory=list)
    polarized_token_count: int = 0


def segment_sentences(text: str) -> list[list[str]]:
    """Split on ``.``, ``!`` or ``?`` followed by whitespace or end of text."""
    out = []
    for chunk in _SENTENCE_END.split(text):
        tokens = kernels.tokenize(chunk, 1)
        if tokens:
            out.append(tokens)
    return out


def score_sentence(tokens, lexicon: Lexicon, shifters: ShifterTable,
                   config: ScoringConfig = ScoringConfig()) -> float:
    return kernels.score_sentence(
        list(tokens),
        lexicon.polarities,
        shifters.negators,
        shifters.amplifiers,
        shifters.de_amplifiers,
        config.window_before,
        config.window_after,
        config.amplifier_weight,
        config.weight_floor,
    )


def score_article(text: str, lexicon: Lexicon, shifters: ShifterTable,
                  config: ScoringConfig = ScoringConfig()) -> SentimentResult:
    sentences = segment_sentences(text)
    if not sentences:
        return SentimentResult(0.0, [], 0)
    scores = [score_sentence(s, lexicon, shifters, config) for s in sentences]
    polarized = sum(1 for s in sentences for t in s if t in lexicon.polarities)
    return SentimentResult(fmean(scores), scores, polarized)


def load_lexicon(path) -> Lexicon:
    """Read a ``token<TAB>polarity`` file; ``#`` lines are comments."""
    polarities = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            try:
                token, value = line.split("\t")
                polarities[token.strip().lower()] = float(value)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected token<TAB>polarity") from None
    return Lexicon(polarities)


def load_shifters(path) -> ShifterTable:
    """Read a ``token<TAB>class`` file with class negator/amplifier/deamplifier."""
    groups = {c: set() for c in SHIFTER_CLASSES}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or parts[1].strip() not in groups:
                raise ValueError(f"{path}:{lineno}: expected token<TAB>(negator|amplifier|deamplifier)")
            groups[parts[1].strip()].add(parts[0].strip().lower())
    return ShifterTable(
        frozenset(groups["negator"]),
        frozenset(groups["amplifier"]),
        frozenset(groups["deamplifier"]),
    )
