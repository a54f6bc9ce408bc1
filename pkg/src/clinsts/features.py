"""Sentence-pair datasets, the train/validation split, and the 14-feature vector."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import lexical
from .entity import EntityLexicon, entity_similarity, extract_entities
from .errors import ParseError, SizeMismatch
from .lexical import DEFAULT_SCORING, AlignmentScoring, IdfModel, idf_fit
from .semantic import EmbeddingTable, cosine, embed_sentence, number_similarity, sentence_id
from .text_prep import StopwordList, TokenizedSentence, preprocess

FEATURE_NAMES = (
    "jaccard",
    "generalized_jaccard",
    "dice",
    "ochiai",
    "tfidf_cosine",
    "qgram_3",
    "qgram_4",
    "bag",
    "levenshtein",
    "needleman_wunsch",
    "smith_waterman",
    "semantic_cosine",
    "entity",
    "number",
)
N_FEATURES = len(FEATURE_NAMES)

FEATURE_GROUPS = {
    "token": (0, 1, 2, 3, 4),
    "character": (5, 6),
    "sequence": (7, 8, 9, 10),
    "semantic": (11,),
    "entity": (12, 13),
}


@dataclass(frozen=True)
class SentencePair:
    id: int
    s1: str
    s2: str
    gold: float | None = None

    def __post_init__(self):
        if self.gold is not None and not 0.0 <= self.gold <= 5.0:
            raise ValueError(f"gold score {self.gold} outside [0, 5]")


@dataclass
class Dataset:
    pairs: list
    role: str = "train"

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def has_gold(self) -> bool:
        return all(p.gold is not None for p in self.pairs)

    def gold(self) -> np.ndarray:
        return np.array([p.gold for p in self.pairs], dtype=np.float64)

    def subset(self, ids, role) -> "Dataset":
        by_id = {p.id: p for p in self.pairs}
        return Dataset([by_id[i] for i in ids], role)


def parse_score(text: str, path=None, lineno=None) -> float:
    try:
        score = float(text)
    except ValueError:
        raise ParseError(f"score {text!r} is not a number", path, lineno) from None
    if not math.isfinite(score) or not 0.0 <= score <= 5.0:
        raise ParseError(f"score {text!r} outside [0, 5]", path, lineno)
    return score


def load_pairs(path, has_gold: bool = True, role: str = "train") -> Dataset:
    """Read ``s1<TAB>s2[<TAB>score]`` lines. Blank lines are skipped; ids
    number the pairs from 0 in file order."""
    path = Path(path)
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) == 3:
                gold = parse_score(cols[2].strip(), path, lineno)
            elif len(cols) == 2 and not has_gold:
                gold = None
            else:
                want = "3" if has_gold else "2 or 3"
                raise ParseError(f"expected {want} tab-separated columns, got {len(cols)}", path, lineno)
            pairs.append(SentencePair(len(pairs), cols[0], cols[1], gold))
    return Dataset(pairs, role)


def write_pairs(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in dataset:
            cols = [p.s1, p.s2] + ([f"{p.gold:g}"] if p.gold is not None else [])
            fh.write("\t".join(cols) + "\n")


@dataclass(frozen=True)
class SplitSpec:
    train_count: int = 600
    validation_count: int = 150
    seed: int = 42


def split(dataset: Dataset, spec: SplitSpec = SplitSpec()):
    """Seeded shuffle into (train, validation); each part keeps file order."""
    n = len(dataset)
    if n != spec.train_count + spec.validation_count:
        raise SizeMismatch(
            f"dataset has {n} pairs, split needs {spec.train_count}+{spec.validation_count}"
        )
    order = np.random.default_rng(spec.seed).permutation(n)
    ids = np.array([p.id for p in dataset])
    train_ids = sorted(ids[order[: spec.train_count]].tolist())
    val_ids = sorted(ids[order[spec.train_count :]].tolist())
    return dataset.subset(train_ids, "train"), dataset.subset(val_ids, "validation")


# ---------------------------------------------------------------------------
# featurization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureContext:
    stopwords: StopwordList
    idf: IdfModel
    embeddings: EmbeddingTable
    lexicon: EntityLexicon = field(default_factory=EntityLexicon)
    sentence_vectors: dict | None = None
    scoring: AlignmentScoring = DEFAULT_SCORING
    gj_threshold: float = 0.6


def fit_idf(dataset: Dataset, stopwords: StopwordList) -> IdfModel:
    """Document frequencies over both sentences of every pair in ``dataset``."""
    docs = []
    for p in dataset:
        docs.append(preprocess(p.s1, stopwords).tokens)
        docs.append(preprocess(p.s2, stopwords).tokens)
    return idf_fit(docs)


def _sentence_vector(ts: TokenizedSentence, ctx: FeatureContext, row, side):
    if ctx.sentence_vectors is not None and row is not None:
        vec = ctx.sentence_vectors.get(sentence_id(row, side))
        if vec is not None:
            return vec
    return embed_sentence(ts.tokens, ctx.embeddings)


def featurize_sentences(a: TokenizedSentence, b: TokenizedSentence, ctx: FeatureContext,
                        va=None, vb=None) -> np.ndarray:
    ta, tb = a.tokens, b.tokens
    ca, cb = a.char_text, b.char_text
    if va is None:
        va = embed_sentence(ta, ctx.embeddings)
    if vb is None:
        vb = embed_sentence(tb, ctx.embeddings)
    sc = ctx.scoring
    values = [
        lexical.jaccard(ta, tb),
        lexical.generalized_jaccard(ta, tb, ctx.gj_threshold),
        lexical.dice(ta, tb),
        lexical.ochiai(ta, tb),
        lexical.tfidf_cosine(ta, tb, ctx.idf),
        lexical.qgram_similarity(ca, cb, 3),
        lexical.qgram_similarity(ca, cb, 4),
        lexical.bag_similarity(ca, cb),
        lexical.levenshtein_similarity(ca, cb),
        lexical.needleman_wunsch_similarity(ca, cb, sc),
        lexical.smith_waterman_similarity(ca, cb, sc),
        max(0.0, cosine(va, vb)),
        entity_similarity(
            extract_entities(a.tokens_with_stopwords, ctx.lexicon),
            extract_entities(b.tokens_with_stopwords, ctx.lexicon),
        ),
        number_similarity(a.normalized, b.normalized, ctx.embeddings),
    ]
    return np.array(values, dtype=np.float64)


def featurize_pair(pair: SentencePair, ctx: FeatureContext) -> np.ndarray:
    a = preprocess(pair.s1, ctx.stopwords)
    b = preprocess(pair.s2, ctx.stopwords)
    va = _sentence_vector(a, ctx, pair.id, 1)
    vb = _sentence_vector(b, ctx, pair.id, 2)
    return featurize_sentences(a, b, ctx, va, vb)


def featurize_dataset(dataset: Dataset, ctx: FeatureContext):
    """Return ``(X, gold)``: an n x 14 matrix and the gold vector (or None)."""
    rows = [featurize_pair(p, ctx) for p in dataset]
    X = np.array(rows, dtype=np.float64).reshape(len(rows), N_FEATURES)
    gold = dataset.gold() if len(dataset) and dataset.has_gold else None
    return X, gold


def pair_vectors(dataset: Dataset, ctx: FeatureContext):
    """Sentence vectors (U, V) for the two sides of every pair."""
    dim = ctx.embeddings.dim
    U = np.zeros((len(dataset), dim))
    V = np.zeros((len(dataset), dim))
    for i, p in enumerate(dataset):
        U[i] = _sentence_vector(preprocess(p.s1, ctx.stopwords), ctx, p.id, 1)
        V[i] = _sentence_vector(preprocess(p.s2, ctx.stopwords), ctx, p.id, 2)
    return U, V


# ---------------------------------------------------------------------------
# feature TSV
# ---------------------------------------------------------------------------


@dataclass
class FeatureTable:
    ids: np.ndarray
    X: np.ndarray
    gold: np.ndarray | None = None

    def __len__(self):
        return len(self.ids)

    def rows(self, ids) -> "FeatureTable":
        pos = {int(i): k for k, i in enumerate(self.ids)}
        idx = [pos[int(i)] for i in ids]
        gold = None if self.gold is None else self.gold[idx]
        return replace(self, ids=self.ids[idx], X=self.X[idx], gold=gold)

    def as_dataset(self) -> Dataset:
        """Stand-in dataset (empty sentences) so :func:`split` can be reused."""
        return Dataset([SentencePair(int(i), "", "") for i in self.ids])


def write_features(path, ids, X, gold=None) -> None:
    header = ["id"] + [f"f{i}" for i in range(N_FEATURES)] + (["gold"] if gold is not None else [])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(header) + "\n")
        for k, row in enumerate(X):
            cols = [str(int(ids[k]))] + [f"{v:.9f}" for v in row]
            if gold is not None:
                cols.append(f"{gold[k]:.9f}")
            fh.write("\t".join(cols) + "\n")


def read_features(path) -> FeatureTable:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\r\n") for ln in fh]
    if not lines:
        raise ParseError("empty feature file", path)
    header = lines[0].split("\t")
    expected = ["id"] + [f"f{i}" for i in range(N_FEATURES)]
    if header[: len(expected)] != expected or header[len(expected) :] not in ([], ["gold"]):
        raise ParseError("bad feature header", path, 1)
    with_gold = len(header) == len(expected) + 1
    ids, X, gold = [], [], []
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != len(header):
            raise ParseError(f"expected {len(header)} columns, got {len(cols)}", path, lineno)
        try:
            ids.append(int(cols[0]))
            X.append([float(c) for c in cols[1 : N_FEATURES + 1]])
        except ValueError as exc:
            raise ParseError(str(exc), path, lineno) from None
        if with_gold:
            gold.append(parse_score(cols[-1], path, lineno))
    X = np.array(X, dtype=np.float64).reshape(len(ids), N_FEATURES)
    return FeatureTable(np.array(ids, dtype=np.int64), X, np.array(gold) if with_gold else None)
