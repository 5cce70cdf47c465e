"""Movie-review corpus layout: scanning, manifests, subsets.

Expected directory layout under the corpus root:

    train/pos/*.txt   train/neg/*.txt   train/unsup/*.txt
    test/pos/*.txt    test/neg/*.txt

Document ids are assigned in a fixed order — train pos, train neg, test
pos, test neg, then unsup last, each sorted by filename — so labeled and
test ids do not move when the unlabeled split is toggled on or off.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

# canonical full-corpus counts: (train labeled, test, unsup)
FULL_COUNTS = (25000, 25000, 50000)

_SPLIT_ORDER = (("train", "pos"), ("train", "neg"),
                ("test", "pos"), ("test", "neg"),
                ("train", "unsup"))


class DataError(Exception):
    """Corpus not found or malformed on disk."""


@dataclass
class ManifestEntry:
    doc_id: int
    split: str  # "train", "test", or "unsup"
    label: str | None  # "pos"/"neg", None for unsup
    path: str


def scan_corpus(root) -> list[ManifestEntry]:
    """Walk the five split directories and assign document ids.

    Raises DataError naming the first missing split directory.
    """
    root = str(root)
    if not os.path.isdir(root):
        raise DataError(f"corpus root not found: {root}")
    entries: list[ManifestEntry] = []
    doc_id = 0
    for part, sub in _SPLIT_ORDER:
        directory = os.path.join(root, part, sub)
        if not os.path.isdir(directory):
            raise DataError(f"missing corpus split directory: {part}/{sub}")
        unsup = sub == "unsup"
        for name in sorted(os.listdir(directory)):
            if not name.endswith(".txt"):
                continue
            entries.append(ManifestEntry(
                doc_id=doc_id,
                split="unsup" if unsup else part,
                label=None if unsup else sub,
                path=os.path.join(directory, name)))
            doc_id += 1
    if not entries:
        raise DataError(f"no .txt documents under {root}")
    return entries


def split_counts(entries) -> tuple[int, int, int]:
    """(labeled train, test, unsup) document counts."""
    train = sum(1 for e in entries if e.split == "train")
    test = sum(1 for e in entries if e.split == "test")
    unsup = sum(1 for e in entries if e.split == "unsup")
    return train, test, unsup


def is_full_corpus(entries) -> bool:
    return split_counts(entries) == FULL_COUNTS


def read_text(entry: ManifestEntry) -> str:
    with open(entry.path, encoding="utf-8") as fh:
        return fh.read()


def write_manifest(entries, path) -> None:
    """doc_id<TAB>split<TAB>label<TAB>path, one line per document."""
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(f"{e.doc_id}\t{e.split}\t{e.label or '-'}\t{e.path}\n")


def read_manifest(path) -> list[ManifestEntry]:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            doc_id, split, label, doc_path = line.split("\t")
            entries.append(ManifestEntry(
                doc_id=int(doc_id), split=split,
                label=None if label == "-" else label, path=doc_path))
    return entries


def select_subset(entries, n_train: int, n_test: int,
                  seed: int) -> list[ManifestEntry]:
    """Seeded class-balanced subset of the labeled splits, ids reassigned
    contiguously in the canonical order. The unlabeled split is dropped.

    n_train and n_test must be even (half per class) and available.
    """
    if n_train % 2 or n_test % 2:
        raise ValueError("subset sizes must be even for class balance")
    rng = np.random.default_rng(seed)
    picked: list[ManifestEntry] = []
    for part, sub in _SPLIT_ORDER[:4]:
        pool = [e for e in entries if e.split == part and e.label == sub]
        want = (n_train if part == "train" else n_test) // 2
        if want > len(pool):
            raise ValueError(
                f"requested {want} {part}/{sub} documents, corpus has "
                f"{len(pool)}")
        chosen = rng.choice(len(pool), size=want, replace=False)
        picked.extend(pool[i] for i in sorted(chosen))
    return [ManifestEntry(doc_id=i, split=e.split, label=e.label, path=e.path)
            for i, e in enumerate(picked)]
