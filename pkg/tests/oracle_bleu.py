"""Independent brute-force BLEU-2 oracle for equivalence testing.

Deliberately avoids collections.Counter and the library's code paths:
n-grams are matched by walking the candidate and consuming reference
n-grams from a plain dict, so agreement with the library is meaningful.
"""

import math


def _ngrams(seq, n):
    return [tuple(seq[i : i + n]) for i in range(len(seq) - n + 1)]


def _clipped(candidate, reference, n):
    remaining = {}
    for gram in _ngrams(reference, n):
        remaining[gram] = remaining.get(gram, 0) + 1
    matched = 0
    total = 0
    for gram in _ngrams(candidate, n):
        total += 1
        if remaining.get(gram, 0) > 0:
            remaining[gram] -= 1
            matched += 1
    return matched, total


def bleu2_bruteforce(candidate, reference):
    candidate = list(candidate)
    reference = list(reference)
    if not candidate:
        return 0.0
    m1, t1 = _clipped(candidate, reference, 1)
    p1 = m1 / t1
    if p1 == 0.0:
        return 0.0
    m2, t2 = _clipped(candidate, reference, 2)
    if m2 > 0:
        p2 = m2 / t2
    else:
        p2 = (m2 + 1) / (t2 + 1)
    c, r = len(candidate), len(reference)
    bp = 1.0 if c >= r else math.exp(1.0 - r / c)
    return bp * math.sqrt(p1 * p2)
