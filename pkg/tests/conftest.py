import os

import numpy as np
import pytest

POS_WORDS = [f"bright{i}" for i in range(30)]
NEG_WORDS = [f"gloom{i}" for i in range(30)]
SHARED_WORDS = [f"filler{i}" for i in range(12)]


def _write_doc(path, rng, words):
    toks = list(rng.choice(words, 22)) + list(rng.choice(SHARED_WORDS, 8))
    rng.shuffle(toks)
    # sprinkle punctuation so tokenization matters
    text = " ".join(toks[:10]) + ", " + " ".join(toks[10:]) + "."
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


@pytest.fixture(scope="session")
def mini_corpus(tmp_path_factory):
    """Small two-topic corpus in the expected directory layout."""
    root = tmp_path_factory.mktemp("minicorpus")
    rng = np.random.default_rng(20240817)
    layout = [("train", "pos", 40), ("train", "neg", 40),
              ("test", "pos", 20), ("test", "neg", 20),
              ("train", "unsup", 20)]
    for part, sub, n in layout:
        d = root / part / sub
        d.mkdir(parents=True)
        for i in range(n):
            if sub == "unsup":
                words = POS_WORDS if i % 2 else NEG_WORDS
            else:
                words = POS_WORDS if sub == "pos" else NEG_WORDS
            _write_doc(d / f"{i}_{int(rng.integers(1, 11))}.txt", rng, words)
    return root


@pytest.fixture(scope="session")
def aclimdb_root():
    """Path to the real movie-review corpus, if present.

    Looked up via DVNGRAM_ACLIMDB or data/aclImdb next to the repo root;
    tests needing it skip when it is absent (the download is a manual,
    documented step).
    """
    candidates = []
    env = os.environ.get("DVNGRAM_ACLIMDB")
    if env:
        candidates.append(env)
    here = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    candidates.append(os.path.join(here, "data", "aclImdb"))
    for c in candidates:
        if os.path.isdir(os.path.join(c, "train", "pos")):
            return c
    pytest.skip("movie-review corpus not available "
                "(set DVNGRAM_ACLIMDB or place it at data/aclImdb)")
