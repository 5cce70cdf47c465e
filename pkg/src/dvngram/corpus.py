"""Text preprocessing: tokenization, n-gram augmentation, vocabulary.

Word sequences are folded into the vocabulary as ordinary tokens: an
n-gram is the participating words joined with "_". A word that itself
contains "_" can therefore collide with an n-gram spelling the same
string; such collisions merge into one vocabulary entry and are accepted
(they are rare and measurable, see `Vocabulary.kind`).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

NGRAM_SEP = "_"

# words (\w+ keeps embedded underscores intact) or single punctuation marks
_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace with punctuation characters
    separated into standalone tokens."""
    return _TOKEN_RE.findall(text.lower())


def extract_ngram_tokens(tokens: list[str], max_order: int) -> list[str]:
    """Return the input words followed by every contiguous n-gram of order
    2..max_order, each joined with NGRAM_SEP, in order of appearance."""
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    out = list(tokens)
    for n in range(2, max_order + 1):
        for i in range(len(tokens) - n + 1):
            out.append(NGRAM_SEP.join(tokens[i:i + n]))
    return out


def _token_kind(token: str, ngram_order: int | None) -> str:
    order = token.count(NGRAM_SEP) + 1
    if order == 1:
        return "word"
    if ngram_order is not None and order > ngram_order:
        # more separators than the corpus n-gram order could produce,
        # so this must be a plain word containing underscores
        return "word"
    return f"ngram{order}"


@dataclass
class RawDocument:
    """One input document. label is "pos"/"neg" for labeled splits and
    None for unlabeled ones."""

    doc_id: int
    text: str
    label: str | None = None


@dataclass
class EncodedDocument:
    """Document as vocabulary ids: word occurrences in order, then n-gram
    occurrences in order. Out-of-vocabulary tokens are dropped."""

    doc_id: int
    token_ids: np.ndarray

    def __len__(self) -> int:
        return len(self.token_ids)


@dataclass
class Vocabulary:
    """Bidirectional token <-> id map with corpus frequencies.

    Ids are contiguous from 0, ordered by descending frequency with
    lexicographic tie-break, so construction is deterministic and
    independent of document order.
    """

    token_to_id: dict[str, int]
    id_to_token: list[str]
    frequency: np.ndarray
    kind: list[str] = field(repr=False, default_factory=list)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def get(self, token: str) -> int | None:
        return self.token_to_id.get(token)

    def tokens_of(self, ids) -> list[str]:
        return [self.id_to_token[i] for i in ids]


def build_vocabulary(documents, min_count: int = 1,
                     ngram_order: int | None = None) -> Vocabulary:
    """Count tokens over `documents` (token-string lists, n-grams already
    appended) and retain those with total count >= min_count.

    `ngram_order` only disambiguates the kind tag for words containing
    the separator; it does not change the retained set.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: dict[str, int] = {}
    for doc in documents:
        for tok in doc:
            counts[tok] = counts.get(tok, 0) + 1
    kept = sorted(((tok, c) for tok, c in counts.items() if c >= min_count),
                  key=lambda tc: (-tc[1], tc[0]))
    id_to_token = [tok for tok, _ in kept]
    return Vocabulary(
        token_to_id={tok: i for i, tok in enumerate(id_to_token)},
        id_to_token=id_to_token,
        frequency=np.array([c for _, c in kept], dtype=np.int64),
        kind=[_token_kind(tok, ngram_order) for tok in id_to_token],
    )


def encode(doc_id: int, words: list[str], vocabulary: Vocabulary,
           ngram_order: int) -> EncodedDocument:
    """Map a word sequence plus its n-grams to vocabulary ids, dropping
    anything out of vocabulary. The vocabulary must have been built over
    a corpus augmented with the same n-gram order."""
    lookup = vocabulary.token_to_id
    ids = [lookup[tok]
           for tok in extract_ngram_tokens(words, ngram_order)
           if tok in lookup]
    return EncodedDocument(doc_id=doc_id,
                           token_ids=np.array(ids, dtype=np.int32))


def save_vocabulary(vocabulary: Vocabulary, path) -> None:
    """One line per token: token<TAB>count<TAB>kind."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, tok in enumerate(vocabulary.id_to_token):
            fh.write(f"{tok}\t{int(vocabulary.frequency[i])}"
                     f"\t{vocabulary.kind[i]}\n")


def load_vocabulary(path) -> Vocabulary:
    id_to_token: list[str] = []
    freqs: list[int] = []
    kinds: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            tok, count, kind = line.split("\t")
            id_to_token.append(tok)
            freqs.append(int(count))
            kinds.append(kind)
    return Vocabulary(
        token_to_id={tok: i for i, tok in enumerate(id_to_token)},
        id_to_token=id_to_token,
        frequency=np.array(freqs, dtype=np.int64),
        kind=kinds,
    )
