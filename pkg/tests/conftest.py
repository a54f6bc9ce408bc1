import numpy as np
import pytest

from clinsts.entity import EntityLexicon
from clinsts.features import FeatureContext, fit_idf
from clinsts.semantic import EmbeddingTable
from clinsts.text_prep import default_stopwords

from synthetic import NUMBER_WORDS, overlap_corpus, vocabulary

CLINICAL_WORDS = (
    "patient chest pain aspirin tablet tablets mg daily denies fever cough reports "
    "shortness breath apply cream topically take dose hours walked"
).split()


def make_table(words, dim=6, seed=0):
    rng = np.random.default_rng(seed)
    return EmbeddingTable(dim, {w: rng.normal(size=dim) for w in words})


@pytest.fixture(scope="session")
def small_ctx():
    corpus = overlap_corpus(40, seed=5)
    sw = default_stopwords()
    table = make_table(sorted(set(CLINICAL_WORDS) | set(NUMBER_WORDS) | set(vocabulary())))
    lexicon = EntityLexicon({"chest pain": "C0008031", "aspirin": "C0004057", "fever": "C0015967"})
    return FeatureContext(sw, fit_idf(corpus, sw), table, lexicon)


_acceptance = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, summary = marker.args
    outcome = "PASS"
    if call.excinfo is not None:
        outcome = "SKIP" if call.excinfo.errisinstance(pytest.skip.Exception) else "FAIL"
    elif call.when != "call":
        return
    previous = _acceptance.get(number, (summary, "PASS"))[1]
    if previous == "PASS" or outcome == "FAIL":
        _acceptance[number] = (summary, outcome)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        summary, outcome = _acceptance[number]
        terminalreporter.write_line(f"criterion {number:>2}: {outcome}  {summary}")
