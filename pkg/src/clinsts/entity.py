"""Lexicon-driven clinical concept extraction and concept-overlap similarity."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError
from .text_prep import normalize, tokenize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EntityLexicon:
    """Surface form -> concept id. Surface forms are matched as token spans,
    tokenized the same way as sentences."""

    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        spans = {}
        for surface, cid in self.entries.items():
            key = tuple(tokenize(normalize(surface)))
            if not key or not cid:
                raise ValueError(f"empty surface form or concept id: {surface!r} -> {cid!r}")
            spans[key] = cid
        object.__setattr__(self, "_spans", spans)
        object.__setattr__(self, "max_span", max((len(k) for k in spans), default=0))

    def __len__(self):
        return len(self.entries)

    def concept(self, span):
        return self._spans.get(tuple(span))


def parse_lexicon(lines, path=None) -> EntityLexicon:
    entries = {}
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError("expected 'surface<TAB>concept_id'", path, lineno)
        surface, cid = parts[0].strip().lower(), parts[1].strip()
        if not surface or not cid:
            raise ParseError("empty surface form or concept id", path, lineno)
        if surface in entries and entries[surface] != cid:
            logger.warning(
                "%s:%d: %r redefined (%s -> %s)", path, lineno, surface, entries[surface], cid
            )
        entries[surface] = cid
    return EntityLexicon(entries)


def load_lexicon(path) -> EntityLexicon:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        return parse_lexicon(fh, path)


def extract_entities(tokens, lexicon: EntityLexicon) -> frozenset:
    """Greedy left-to-right longest match of lexicon spans over ``tokens``."""
    tokens = list(tokens)
    found = set()
    i = 0
    while i < len(tokens):
        for length in range(min(lexicon.max_span, len(tokens) - i), 0, -1):
            cid = lexicon.concept(tokens[i : i + length])
            if cid is not None:
                found.add(cid)
                i += length
                break
        else:
            i += 1
    return frozenset(found)


def entity_similarity(x, y) -> float:
    x, y = set(x), set(y)
    if not x and not y:
        return 1.0
    if not x or not y:
        return 0.0
    return len(x & y) / max(len(x), len(y))
