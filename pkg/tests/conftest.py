import os

import numpy as np
import pytest

from app.config import get_settings
from app.modules.corpus.scanner import load_corpus, load_corpus_entry
from app.modules.library.registry import builtin_registry

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CORPUS_DIR = os.path.join(ROOT, "corpus")
UNQUALIFIED_DIR = os.path.join(CORPUS_DIR, "unqualified")


def corpus_path(name: str) -> str:
    path = os.path.join(CORPUS_DIR, f"{name}.prog")
    if not os.path.exists(path):
        path = os.path.join(UNQUALIFIED_DIR, f"{name}.prog")
    return path


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    monkeypatch.delenv("SUBGRAD_SEED", raising=False)
    monkeypatch.delenv("SUBGRAD_LOG_LEVEL", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def registry():
    return builtin_registry()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def corpus():
    return load_corpus(CORPUS_DIR)


@pytest.fixture(scope="session")
def load_entry():
    cache = {}

    def load(name: str):
        if name not in cache:
            cache[name] = load_corpus_entry(corpus_path(name))
        return cache[name]

    return load
