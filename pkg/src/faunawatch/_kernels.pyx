# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the functions in ``_kernels_py``."""

from libc.math cimport log, sqrt


cdef inline bint _keep(str tok, Py_ssize_t min_len):
    return len(tok) >= min_len and not tok.isnumeric()


def tokenize(str text, Py_ssize_t min_len=2):
    cdef list out = []
    cdef str lowered = text.lower()
    cdef Py_ssize_t n = len(lowered)
    cdef Py_ssize_t start = -1
    cdef Py_ssize_t i
    cdef Py_UCS4 ch
    cdef str tok
    for i in range(n):
        ch = lowered[i]
        if ch.isalnum():
            if start < 0:
                start = i
        elif start >= 0:
            tok = lowered[start:i]
            if _keep(tok, min_len):
                out.append(tok)
            start = -1
    if start >= 0:
        tok = lowered[start:]
        if _keep(tok, min_len):
            out.append(tok)
    return out


def nb_log_likelihoods(dict bag, dict counts_a, dict counts_b,
                       double denom_a, double denom_b):
    cdef double ll_a = 0.0
    cdef double ll_b = 0.0
    cdef long ca, cb, n
    for tok, count in bag.items():
        ca = counts_a.get(tok, 0)
        cb = counts_b.get(tok, 0)
        if ca == 0 and cb == 0:
            continue
        n = count
        ll_a += n * log((ca + 1) / denom_a)
        ll_b += n * log((cb + 1) / denom_b)
    return ll_a, ll_b


def score_sentence(list tokens, dict polarities, negators, amplifiers, deamplifiers,
                   Py_ssize_t before=4, Py_ssize_t after=2,
                   double amp_weight=0.8, double floor=0.2):
    cdef Py_ssize_t length = len(tokens)
    cdef Py_ssize_t i, j, lo, hi
    cdef long n_neg, n_amp, n_deamp
    cdef double p, weight
    cdef double total = 0.0
    if length == 0:
        return 0.0
    for i in range(length):
        p = polarities.get(tokens[i], 0.0)
        if p == 0.0:
            continue
        n_neg = 0
        n_amp = 0
        n_deamp = 0
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
