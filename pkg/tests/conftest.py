import pathlib

import pytest

from jabberprobe.lexicon import build_inflection_table, load_lexicon
from jabberprobe.treebank import parse_conllu_file

ROOT = pathlib.Path(__file__).resolve().parent.parent
DATA = ROOT / "data"
FIXTURES = DATA / "fixtures"


@pytest.fixture(scope="session")
def fig2_path() -> pathlib.Path:
    return FIXTURES / "fig2.conllu"


@pytest.fixture(scope="session")
def mini_path() -> pathlib.Path:
    return FIXTURES / "mini_ewt.conllu"


@pytest.fixture(scope="session")
def lexicon_path() -> pathlib.Path:
    return DATA / "lexicon.tsv"


@pytest.fixture(scope="session")
def fig2(fig2_path):
    return parse_conllu_file(fig2_path)[0]


@pytest.fixture(scope="session")
def mini_corpus(mini_path):
    return parse_conllu_file(mini_path)


@pytest.fixture(scope="session")
def inflection_table(lexicon_path):
    return build_inflection_table(load_lexicon(lexicon_path))
