import string

import pytest
from hypothesis import given
from hypothesis import strategies as st

from clinsts.errors import ParseError
from clinsts.text_prep import (
    PUNCTUATION,
    StopwordList,
    default_stopwords,
    load_stopwords,
    normalize,
    preprocess,
    remove_stop_and_punct,
    tokenize,
)

text = st.text(
    alphabet=st.sampled_from(string.ascii_letters + string.digits + " ./-,;:'\"“”()" + "é"),
    max_size=60,
)


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("cardio/respiratory", "cardio / respiratory"),
        ("independently.-ongoing", "independently .- ongoing"),
        ("content.caller", "content . caller"),
        ("", ""),
        ("Take 1.5 mg", "take 1.5 mg"),
        ("“spider veins”", "“ spider veins ”"),
    ],
)
def test_normalize_examples(raw, expected):
    assert normalize(raw) == expected


def test_tokenize_examples():
    assert tokenize("the patient, walked.") == ["the", "patient", ",", "walked", "."]
    assert tokenize("a b") == ["a", "b"]
    assert tokenize("") == []


def test_tokenize_contractions():
    assert tokenize("don't") == ["do", "n't"]
    assert tokenize("patient's chart") == ["patient", "'s", "chart"]


def test_remove_stop_and_punct_examples():
    sw = StopwordList(frozenset({"the"}))
    assert remove_stop_and_punct(["the", "patient", ",", "walked", "."], sw) == ["patient", "walked"]
    assert remove_stop_and_punct([], sw) == []
    assert remove_stop_and_punct(["patient"], StopwordList()) == ["patient"]


def test_preprocess_composes_stages():
    sw = StopwordList(frozenset({"the"}))
    ts = preprocess("The patient, walked.", sw)
    assert ts.normalized == "the patient, walked."
    assert ts.tokens_with_stopwords == ("the", "patient", ",", "walked", ".")
    assert ts.tokens == ("patient", "walked")


def test_preprocess_empty():
    ts = preprocess("", default_stopwords())
    assert ts.tokens == () and ts.tokens_with_stopwords == ()


@given(text)
def test_preprocess_fixpoint_on_normalized(s):
    sw = default_stopwords()
    assert preprocess(normalize(s), sw).tokens == preprocess(s, sw).tokens


@given(text)
def test_normalize_idempotent(s):
    assert normalize(normalize(s)) == normalize(s)


@given(text)
def test_normalize_only_inserts_spaces(s):
    n = normalize(s)
    assert n.replace(" ", "") == s.lower().replace(" ", "")


@given(text)
def test_tokenize_keeps_every_alnum_char(s):
    n = normalize(s)
    toks = tokenize(n)
    assert all(toks)
    assert [c for c in "".join(toks) if c.isalnum()] == [c for c in n if c.isalnum()]


@given(text)
def test_tokens_are_lowercase_subsequence(s):
    ts = preprocess(s, default_stopwords())
    it = iter(ts.tokens_with_stopwords)
    assert all(tok in it for tok in ts.tokens)
    assert all(t == t.lower() and t for t in ts.tokens)
    assert not any(all(c in PUNCTUATION for c in t) for t in ts.tokens)


def test_stopword_file(tmp_path):
    p = tmp_path / "sw.txt"
    p.write_text("# comment\nThe\n\nof\n", encoding="utf-8")
    sw = load_stopwords(p)
    assert sw.words == frozenset({"the", "of"})

    p.write_text("two words\n", encoding="utf-8")
    with pytest.raises(ParseError, match=":1:"):
        load_stopwords(p)


def test_default_stopwords():
    sw = default_stopwords()
    assert 100 <= len(sw) <= 200
    assert "the" in sw and "patient" not in sw
    assert all(w == w.lower() for w in sw.words)
