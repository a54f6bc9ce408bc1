"""Embedding tables, sentence vectors, and the number-similarity feature."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from .errors import DimensionMismatch, EmptyInput, ParseError

# Expanding uniform masses onto an assignment problem stays cheap up to this size.
_MAX_ASSIGNMENT_SIZE = 600


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    vectors: dict

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("embedding dim must be positive")
        for tok, vec in self.vectors.items():
            if vec.shape != (self.dim,):
                raise DimensionMismatch(f"vector for {tok!r} has shape {vec.shape}")

    def __contains__(self, token):
        return token in self.vectors

    def __len__(self):
        return len(self.vectors)

    def lookup(self, token: str) -> np.ndarray:
        """Vector for ``token``; out-of-vocabulary tokens map to zeros."""
        vec = self.vectors.get(token)
        return np.zeros(self.dim) if vec is None else vec


def _parse_floats(fields, path, lineno):
    try:
        values = np.array([float(f) for f in fields], dtype=np.float64)
    except ValueError as exc:
        raise ParseError(f"malformed number: {exc}", path, lineno) from None
    if not np.all(np.isfinite(values)):
        raise ParseError("non-finite value in vector", path, lineno)
    return values


def _is_header(fields) -> bool:
    return len(fields) == 2 and all(f.isdigit() for f in fields)


def load_embeddings(path) -> EmbeddingTable:
    """Read a word2vec-style text file: optional ``<count> <dim>`` header,
    then ``<token> <f1> ... <fdim>`` per line."""
    path = Path(path)
    vectors = {}
    dim = None
    expected_count = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            fields = line.split()
            if not fields:
                continue
            if lineno == 1 and _is_header(fields):
                expected_count, dim = int(fields[0]), int(fields[1])
                if dim < 1:
                    raise ParseError("header declares a non-positive dimension", path, lineno)
                continue
            if len(fields) < 2:
                raise ParseError("expected a token followed by vector values", path, lineno)
            token, values = fields[0], _parse_floats(fields[1:], path, lineno)
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise ParseError(f"expected {dim} values, got {len(values)}", path, lineno)
            if token in vectors:
                raise ParseError(f"duplicate token {token!r}", path, lineno)
            vectors[token] = values
    if not vectors:
        raise ParseError("no embedding vectors found", path)
    if expected_count is not None and expected_count != len(vectors):
        raise ParseError(f"header declares {expected_count} vectors, found {len(vectors)}", path)
    return EmbeddingTable(dim, vectors)


def load_sentence_vectors(path) -> dict:
    """Read a per-sentence vector cache: ``<sentence-id> <f1> ... <fdim>``.

    Sentence ids are ``<row>:1`` / ``<row>:2`` for the first and second
    sentence of dataset row ``<row>``.
    """
    path = Path(path)
    out = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) < 2:
                raise ParseError("expected an id followed by vector values", path, lineno)
            values = _parse_floats(fields[1:], path, lineno)
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise ParseError(f"expected {dim} values, got {len(values)}", path, lineno)
            out[fields[0]] = values
    if not out:
        raise ParseError("no sentence vectors found", path)
    return out


def sentence_id(row: int, side: int) -> str:
    return f"{row}:{side}"


def embed_sentence(tokens, table: EmbeddingTable) -> np.ndarray:
    rows = [table.vectors[t] for t in tokens if t in table.vectors]
    if not rows:
        return np.zeros(table.dim)
    return np.mean(rows, axis=0)


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"cannot compare vectors of shape {u.shape} and {v.shape}")
    nu = float(np.dot(u, u))
    nv = float(np.dot(v, v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    # sqrt of the product keeps cosine(u, u) exactly 1
    value = float(np.dot(u, v)) / math.sqrt(nu * nv)
    return max(-1.0, min(1.0, value))


# ---------------------------------------------------------------------------
# numbers
# ---------------------------------------------------------------------------

_NUMBER = re.compile(r"[0-9]+(?:\.[0-9]+)?")

_ONES = "zero one two three four five six seven eight nine".split()
_TEENS = "ten eleven twelve thirteen fourteen fifteen sixteen seventeen eighteen nineteen".split()
_TENS = "_ _ twenty thirty forty fifty sixty seventy eighty ninety".split()


@dataclass(frozen=True)
class NumberMention:
    surface: str
    value: Fraction
    words: tuple


def _below_hundred(n: int) -> list[str]:
    if n < 10:
        return [_ONES[n]]
    if n < 20:
        return [_TEENS[n - 10]]
    tens, ones = divmod(n, 10)
    return [_TENS[tens]] + ([_ONES[ones]] if ones else [])


def integer_words(n: int) -> list[str]:
    """English words for a non-negative integer.

    Values above 9999 are read digit by digit.
    """
    if n < 0:
        raise ValueError("negative numbers are not spelled")
    if n > 9999:
        return [_ONES[int(d)] for d in str(n)]
    if n < 100:
        return _below_hundred(n)
    words = []
    thousands, rest = divmod(n, 1000)
    if thousands:
        words += [_ONES[thousands], "thousand"]
    hundreds, rest = divmod(rest, 100)
    if hundreds:
        words += [_ONES[hundreds], "hundred"]
    if rest:
        words += _below_hundred(rest)
    return words


def number_words(surface: str) -> list[str]:
    whole, _, frac = surface.partition(".")
    words = integer_words(int(whole))
    if frac:
        words += ["point"] + [_ONES[int(d)] for d in frac]
    return words


def extract_numbers(sentence: str) -> list[NumberMention]:
    return [
        NumberMention(m.group(0), Fraction(m.group(0)), tuple(number_words(m.group(0))))
        for m in _NUMBER.finditer(sentence)
    ]


def _transport_lp(cost: np.ndarray) -> float:
    n, m = cost.shape
    a_eq = np.zeros((n + m, n * m))
    for i in range(n):
        a_eq[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        a_eq[n + j, j::m] = 1.0
    b_eq = np.concatenate([np.full(n, 1.0 / n), np.full(m, 1.0 / m)])
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    return float(res.fun)


def wmd(x_words, y_words, table: EmbeddingTable) -> float:
    """Word Mover's Distance between two word lists with uniform weights.

    Both distributions put mass 1/len on each list entry, so scaling by
    lcm(n, m) turns the transport problem into an assignment problem with
    an integral optimum; that is solved exactly.
    """
    if not x_words or not y_words:
        raise EmptyInput("word mover's distance needs two non-empty word lists")
    # canonical argument order makes the result bitwise symmetric
    x_words, y_words = sorted([tuple(x_words), tuple(y_words)])
    xv = np.array([table.lookup(w) for w in x_words])
    yv = np.array([table.lookup(w) for w in y_words])
    cost = np.sqrt(((xv[:, None, :] - yv[None, :, :]) ** 2).sum(axis=-1))
    n, m = cost.shape
    size = math.lcm(n, m)
    if size > _MAX_ASSIGNMENT_SIZE:
        return max(0.0, _transport_lp(cost))
    expanded = np.repeat(np.repeat(cost, size // n, axis=0), size // m, axis=1)
    rows, cols = linear_sum_assignment(expanded)
    return float(expanded[rows, cols].sum()) / size


def number_similarity(a: str, b: str, table: EmbeddingTable) -> float:
    na, nb = extract_numbers(a), extract_numbers(b)
    if not na and not nb:
        return 1.0
    if not na or not nb:
        return 0.0
    words_a = [w for mention in na for w in mention.words]
    words_b = [w for mention in nb for w in mention.words]
    return 1.0 / (1.0 + wmd(words_a, words_b, table))
