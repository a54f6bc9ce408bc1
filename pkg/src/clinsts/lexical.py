"""Token-, character- and sequence-level similarity measures.

Every function returns a similarity in [0, 1], is symmetric in its two
arguments, and scores two empty inputs as 1.0.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .errors import EmptyCorpus

# ---------------------------------------------------------------------------
# token sets
# ---------------------------------------------------------------------------


def jaro(a: str, b: str) -> float:
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    window = max(max(len(a), len(b)) // 2 - 1, 0)
    a_hit = [False] * len(a)
    b_hit = [False] * len(b)
    m = 0
    for i, ch in enumerate(a):
        lo = max(0, i - window)
        hi = min(len(b), i + window + 1)
        for j in range(lo, hi):
            if not b_hit[j] and b[j] == ch:
                a_hit[i] = b_hit[j] = True
                m += 1
                break
    if m == 0:
        return 0.0
    a_seq = [c for c, hit in zip(a, a_hit) if hit]
    b_seq = [c for c, hit in zip(b, b_hit) if hit]
    t = sum(x != y for x, y in zip(a_seq, b_seq)) / 2
    return (m / len(a) + m / len(b) + (m - t) / m) / 3


def jaccard(x, y) -> float:
    x, y = set(x), set(y)
    if not x and not y:
        return 1.0
    return len(x & y) / len(x | y)


def dice(x, y) -> float:
    x, y = set(x), set(y)
    if not x and not y:
        return 1.0
    return 2 * len(x & y) / (len(x) + len(y))


def ochiai(x, y) -> float:
    x, y = set(x), set(y)
    if not x and not y:
        return 1.0
    if not x or not y:
        return 0.0
    return len(x & y) / math.sqrt(len(x) * len(y))


def generalized_jaccard(x, y, threshold: float = 0.6) -> float:
    """Jaccard where two tokens count as shared when their Jaro similarity
    reaches ``threshold``.

    Pairs are accepted greedily by descending similarity, each token used at
    most once. The accepted similarities are summed in the numerator.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    x, y = set(x), set(y)
    if not x and not y:
        return 1.0
    candidates = []
    for a in x:
        for b in y:
            sim = jaro(a, b)
            if sim >= threshold:
                # key is invariant under swapping x and y
                candidates.append((-sim, min(a, b), max(a, b), a, b))
    candidates.sort()
    used_x, used_y = set(), set()
    total = 0.0
    accepted = 0
    for neg_sim, _, _, a, b in candidates:
        if a in used_x or b in used_y:
            continue
        used_x.add(a)
        used_y.add(b)
        total += -neg_sim
        accepted += 1
    return total / (len(x) + len(y) - accepted)


# ---------------------------------------------------------------------------
# tf-idf
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IdfModel:
    doc_count: int
    doc_freq: dict = field(default_factory=dict)

    def idf(self, token: str) -> float:
        df = self.doc_freq.get(token, 0)
        return math.log((1 + self.doc_count) / (1 + df)) + 1.0


def idf_fit(corpus) -> IdfModel:
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpus("cannot fit idf statistics on an empty corpus")
    df = Counter()
    for doc in corpus:
        df.update(set(doc))
    return IdfModel(len(corpus), dict(df))


def tfidf_cosine(x, y, idf: IdfModel) -> float:
    if not x and not y:
        return 1.0
    if not x or not y:
        return 0.0
    cx, cy = Counter(x), Counter(y)
    dot = nx = ny = 0.0
    for tok in sorted(cx.keys() | cy.keys()):
        w = idf.idf(tok)
        wx = cx[tok] * w
        wy = cy[tok] * w
        dot += wx * wy
        nx += wx * wx
        ny += wy * wy
    return min(1.0, dot / math.sqrt(nx * ny))


# ---------------------------------------------------------------------------
# character q-grams
# ---------------------------------------------------------------------------


def qgrams(text: str, q: int) -> Counter:
    if q < 1:
        raise ValueError("q must be >= 1")
    return Counter(text[i : i + q] for i in range(len(text) - q + 1))


def qgram_similarity(a: str, b: str, q: int) -> float:
    pa, pb = qgrams(a, q), qgrams(b, q)
    size = sum(pa.values()) + sum(pb.values())
    if size == 0:
        return 1.0
    dist = sum(abs(pa[g] - pb[g]) for g in pa.keys() | pb.keys())
    return 1.0 - dist / size


# ---------------------------------------------------------------------------
# sequence measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlignmentScoring:
    match: float = 1.0
    mismatch: float = -1.0
    gap: float = -1.0

    def __post_init__(self):
        if not (self.match > 0 and self.mismatch <= 0 and self.gap <= 0):
            raise ValueError("need match > 0, mismatch <= 0, gap <= 0")


DEFAULT_SCORING = AlignmentScoring()


def bag_similarity(a: str, b: str) -> float:
    if not a and not b:
        return 1.0
    ca, cb = Counter(a), Counter(b)
    dist = max(sum((ca - cb).values()), sum((cb - ca).values()))
    return 1.0 - dist / max(len(a), len(b))


def levenshtein_distance(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def levenshtein_similarity(a: str, b: str) -> float:
    if not a and not b:
        return 1.0
    return 1.0 - levenshtein_distance(a, b) / max(len(a), len(b))


def needleman_wunsch_score(a: str, b: str, s: AlignmentScoring = DEFAULT_SCORING) -> float:
    match, mismatch, gap = s.match, s.mismatch, s.gap
    prev = [j * gap for j in range(len(b) + 1)]
    for i, ca in enumerate(a, 1):
        cur = [i * gap]
        for j, cb in enumerate(b, 1):
            diag = prev[j - 1] + (match if ca == cb else mismatch)
            cur.append(max(diag, prev[j] + gap, cur[j - 1] + gap))
        prev = cur
    return prev[-1]


def smith_waterman_score(a: str, b: str, s: AlignmentScoring = DEFAULT_SCORING) -> float:
    match, mismatch, gap = s.match, s.mismatch, s.gap
    best = 0.0
    prev = [0.0] * (len(b) + 1)
    for ca in a:
        cur = [0.0]
        for j, cb in enumerate(b, 1):
            diag = prev[j - 1] + (match if ca == cb else mismatch)
            v = max(0.0, diag, prev[j] + gap, cur[j - 1] + gap)
            cur.append(v)
            if v > best:
                best = v
        prev = cur
    return best


def _clamp01(v: float) -> float:
    return min(1.0, max(0.0, v))


def needleman_wunsch_similarity(a: str, b: str, s: AlignmentScoring = DEFAULT_SCORING) -> float:
    if not a and not b:
        return 1.0
    return _clamp01(needleman_wunsch_score(a, b, s) / (s.match * max(len(a), len(b))))


def smith_waterman_similarity(a: str, b: str, s: AlignmentScoring = DEFAULT_SCORING) -> float:
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return _clamp01(smith_waterman_score(a, b, s) / (s.match * min(len(a), len(b))))
