"""Pure-Python reference kernels.

``_kernels.pyx`` mirrors these functions one for one; the two must agree
(see tests/test_kernels.py).
"""

from math import log, sqrt


def tokenize(text, min_len=2):
    """Lowercase, split on non-alphanumerics, drop short tokens and pure numbers."""
    out = []
    lowered = text.lower()
    start = -1
    for i, ch in enumerate(lowered):
        if ch.isalnum():
            if start < 0:
                start = i
        elif start >= 0:
            tok = lowered[start:i]
            if len(tok) >= min_len and not tok.isnumeric():
                out.append(tok)
            start = -1
    if start >= 0:
        tok = lowered[start:]
        if len(tok) >= min_len and not tok.isnumeric():
            out.append(tok)
    return out


def nb_log_likelihoods(bag, counts_a, counts_b, denom_a, denom_b):
    """Summed add-one log likelihoods of ``bag`` under two classes.

    ``bag`` maps token to multiplicity. Tokens absent from both count tables
    are skipped.
    """
    ll_a = 0.0
    ll_b = 0.0
    for tok, n in bag.items():
        ca = counts_a.get(tok, 0)
        cb = counts_b.get(tok, 0)
        if ca == 0 and cb == 0:
            continue
        ll_a += n * log((ca + 1) / denom_a)
        ll_b += n * log((cb + 1) / denom_b)
    return ll_a, ll_b


def score_sentence(tokens, polarities, negators, amplifiers, deamplifiers,
                   before=4, after=2, amp_weight=0.8, floor=0.2):
    length = len(tokens)
    if length == 0:
        return 0.0
    total = 0.0
    for i in range(length):
        p = polarities.get(tokens[i], 0.0)
        if p == 0.0:
            continue
        n_neg = n_amp = n_deamp = 0
        lo = i - before if i >= before else 0
        hi = i + after + 1 if i + after + 1 <= length else length
        for j in range(lo, hi):
            if j == i:
                continue
            tok = tokens[j]
            if tok in negators:
                n_neg += 1
            elif tok in amplifiers:
                n_amp += 1
            elif tok in deamplifiers:
                n_deamp += 1
        weight = 1.0 + amp_weight * (n_amp - n_deamp)
        if weight < floor:
            weight = floor
        if n_neg % 2:
            total -= p * weight
        else:
            total += p * weight
    return total / sqrt(length)
