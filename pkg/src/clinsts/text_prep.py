"""Sentence normalization, tokenization and stopword filtering."""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ParseError

# Typographic double/single quotes treated as punctuation alongside ASCII.
TYPOGRAPHIC_QUOTES = "“”‘’"
PUNCTUATION = frozenset(string.punctuation + TYPOGRAPHIC_QUOTES)

# Inserted-space rules. Each rule only adds a space where none exists, so
# running normalize twice is a no-op.
_DOT_DASH = re.compile(r"\.-")
_SLASH = re.compile(r"(?<=\w)/(?=\w)")
# "." between word characters, except digit.digit (decimals survive).
_DOT = re.compile(r"(?<=\w)(?<!\d)\.(?=\w)|(?<=\d)\.(?=[^\W\d])")
_SPLIT_QUOTES = re.compile("[“”]")

_CONTRACTION = re.compile(r"^(.+?)((?:['’](?:s|re|ve|ll|d|m))|(?:n['’]t))$")


@dataclass(frozen=True)
class StopwordList:
    words: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "words", frozenset(w.lower() for w in self.words))

    def __contains__(self, token):
        return token in self.words

    def __len__(self):
        return len(self.words)


@dataclass(frozen=True)
class TokenizedSentence:
    raw: str
    normalized: str
    tokens: tuple
    tokens_with_stopwords: tuple

    @property
    def char_text(self) -> str:
        """Normalized text with whitespace runs collapsed to single spaces."""
        return " ".join(self.normalized.split())


def _pad(text: str, pattern: re.Pattern) -> str:
    out = []
    last = 0
    for m in pattern.finditer(text):
        start, end = m.span()
        out.append(text[last:start])
        if start > 0 and not text[start - 1].isspace():
            out.append(" ")
        out.append(m.group(0))
        if end < len(text) and not text[end].isspace():
            out.append(" ")
        last = end
    out.append(text[last:])
    return "".join(out)


def normalize(text: str) -> str:
    """Lowercase and separate words glued together by punctuation.

    >>> normalize("Cardio/Respiratory")
    'cardio / respiratory'
    >>> normalize("dose 1.5 mg.Next")
    'dose 1.5 mg . next'
    """
    text = text.lower()
    text = _pad(text, _DOT_DASH)
    text = _pad(text, _SLASH)
    text = _pad(text, _DOT)
    text = _pad(text, _SPLIT_QUOTES)
    return text


def _is_punct(token: str) -> bool:
    return all(ch in PUNCTUATION for ch in token)


def _split_chunk(chunk: str) -> list[str]:
    if _is_punct(chunk):
        return [chunk]
    start, end = 0, len(chunk)
    while chunk[start] in PUNCTUATION:
        start += 1
    while chunk[end - 1] in PUNCTUATION:
        end -= 1
    core = chunk[start:end]
    leading = list(chunk[:start])
    trailing = list(chunk[end:])
    m = _CONTRACTION.match(core)
    if m and not _is_punct(m.group(1)):
        middle = [m.group(1), m.group(2)]
    else:
        middle = [core]
    return leading + middle + trailing


def tokenize(normalized: str) -> list[str]:
    """Whitespace split, then detach leading/trailing punctuation and contractions."""
    tokens = []
    for chunk in normalized.split():
        tokens.extend(_split_chunk(chunk))
    return tokens


def remove_stop_and_punct(tokens, stopwords: StopwordList) -> list[str]:
    return [t for t in tokens if not _is_punct(t) and t not in stopwords]


def preprocess(raw: str, stopwords: StopwordList) -> TokenizedSentence:
    normalized = normalize(raw)
    with_stop = tokenize(normalized)
    tokens = remove_stop_and_punct(with_stop, stopwords)
    return TokenizedSentence(raw, normalized, tuple(tokens), tuple(with_stop))


def parse_stopwords(lines, path=None) -> StopwordList:
    words = set()
    for lineno, line in enumerate(lines, 1):
        word = line.strip()
        if not word or word.startswith("#"):
            continue
        if len(word.split()) != 1:
            raise ParseError(f"expected one token per line, got {word!r}", path, lineno)
        words.add(word.lower())
    return StopwordList(frozenset(words))


def load_stopwords(path) -> StopwordList:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        return parse_stopwords(fh, path)


def default_stopwords() -> StopwordList:
    text = resources.files("clinsts").joinpath("data/stopwords.txt").read_text("utf-8")
    return parse_stopwords(text.splitlines())
