"""Command-line front end and experiment pipeline.

Subcommands: ingest (scan a corpus into a manifest), vocab, train (one
embedding run, vectors exported), evaluate (full train/classify/score
protocol over several runs), combine (evaluate with the combined
embedding + weighted bag-of-ngram features).

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric divergence
during training.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import baselines, classifier, imdb, report
from .corpus import (Vocabulary, build_vocabulary, encode,
                     extract_ngram_tokens, save_vocabulary, tokenize)
from .model import EmbeddingModel, TrainConfig, config_hash, init_model, save_vectors
from .noise import build_noise_table
from .trainer import NonFiniteParameterError, train

MODES = ("dv", "bo", "dv+nbbo")


@dataclass
class ExperimentConfig:
    """Everything one evaluation needs, nested training config included."""

    dataset_path: str = "data/aclImdb"
    output_dir: str = "runs"
    mode: str = "dv"
    ngram_order: int = 1
    use_unlabeled: bool = False
    min_count: int = 1
    runs: int = 5
    subset_train: int = 0  # 0 = all labeled training documents
    subset_test: int = 0
    subset_seed: int = 13
    c_grid: list = field(default_factory=lambda: list(classifier.DEFAULT_C_GRID))
    normalize_vectors: bool = False
    bo_weighting: str = "binary"
    nb_alpha: float = 1.0
    dense_scale: float = 1.0
    label: str = ""
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.ngram_order < 1:
            raise ValueError("ngram_order must be >= 1")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.subset_train < 0 or self.subset_test < 0:
            raise ValueError("subset sizes must be >= 0")
        if (self.subset_train > 0) != (self.subset_test > 0):
            raise ValueError("subset_train and subset_test go together")
        if self.bo_weighting not in ("binary", "tf"):
            raise ValueError("bo_weighting must be 'binary' or 'tf'")
        if self.nb_alpha <= 0:
            raise ValueError("nb_alpha must be positive")

    def display_label(self) -> str:
        return self.label or f"{self.mode}-order{self.ngram_order}"


# named experiment setups; every other field keeps its default
# Embedding presets pin lr_decay: at corpus scale (millions of pairs per
# epoch) a constant step of 0.25 makes the ascent oscillate and overflow,
# while the linear schedule keeps it convergent with the same initial rate.
PRESETS = {
    "dv-uni": {"mode": "dv", "ngram_order": 1, "train": {"lr_decay": True}},
    "dv-bi": {"mode": "dv", "ngram_order": 2, "train": {"lr_decay": True}},
    "dv-tri": {"mode": "dv", "ngram_order": 3, "train": {"lr_decay": True}},
    "dv-tri-unlabd": {"mode": "dv", "ngram_order": 3, "use_unlabeled": True,
                      "train": {"lr_decay": True}},
    "bo-uni": {"mode": "bo", "ngram_order": 1},
    "bo-bi": {"mode": "bo", "ngram_order": 2},
    "bo-tri": {"mode": "bo", "ngram_order": 3},
    "dv-tri+nbbo-tri": {"mode": "dv+nbbo", "ngram_order": 3,
                        "use_unlabeled": True,
                        "train": {"lr_decay": True}},
}


def apply_overrides(config: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """New config with `overrides` applied; nested "train" dicts merge."""
    data = asdict(config)
    for key, value in overrides.items():
        if key == "train":
            if not isinstance(value, dict):
                raise ValueError("'train' override must be a mapping")
            unknown = set(value) - set(data["train"])
            if unknown:
                raise ValueError(f"unknown train options: {sorted(unknown)}")
            data["train"].update(value)
        elif key in data:
            data[key] = value
        else:
            raise ValueError(f"unknown config option: {key}")
    data["train"] = TrainConfig(**data["train"])
    return ExperimentConfig(**data)


def load_config_file(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict):
        raise ValueError("config file must hold a JSON object")
    return payload


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class PreparedCorpus:
    """Embedding corpus (labeled + test, unsup optional, ids contiguous)
    plus the classifier's view of it."""

    encoded: list
    vocab: Vocabulary
    train_ids: np.ndarray
    train_labels: np.ndarray
    test_ids: np.ndarray
    test_labels: np.ndarray
    num_docs: int


def load_entries(config: ExperimentConfig):
    entries = imdb.scan_corpus(config.dataset_path)
    if config.subset_train:
        entries = imdb.select_subset(entries, config.subset_train,
                                     config.subset_test, config.subset_seed)
    return entries


def _label_sign(label: str) -> int:
    return 1 if label == "pos" else -1


def prepare_corpus(config: ExperimentConfig, entries,
                   log=None) -> PreparedCorpus:
    """Tokenize, build the vocabulary, and encode the embedding corpus."""
    if not config.use_unlabeled:
        entries = [e for e in entries if e.split != "unsup"]
    if not any(e.split == "train" for e in entries):
        raise imdb.DataError("no labeled training documents")
    if not any(e.split == "test" for e in entries):
        raise imdb.DataError("no test documents")
    words = [tokenize(imdb.read_text(e)) for e in entries]
    if log:
        log(f"tokenized {len(words)} documents")
    vocab = build_vocabulary(
        (extract_ngram_tokens(w, config.ngram_order) for w in words),
        min_count=config.min_count, ngram_order=config.ngram_order)
    if len(vocab) == 0:
        raise imdb.DataError("vocabulary is empty after min_count filtering")
    if log:
        log(f"vocabulary: {len(vocab)} tokens (order {config.ngram_order}, "
            f"min_count {config.min_count})")
    encoded = [encode(i, w, vocab, config.ngram_order)
               for i, w in enumerate(words)]
    train_ids = np.array([i for i, e in enumerate(entries)
                          if e.split == "train"], dtype=np.int64)
    test_ids = np.array([i for i, e in enumerate(entries)
                         if e.split == "test"], dtype=np.int64)
    return PreparedCorpus(
        encoded=encoded, vocab=vocab,
        train_ids=train_ids,
        train_labels=np.array([_label_sign(entries[i].label)
                               for i in train_ids], dtype=np.int64),
        test_ids=test_ids,
        test_labels=np.array([_label_sign(entries[i].label)
                              for i in test_ids], dtype=np.int64),
        num_docs=len(entries))


def _doc_features(model: EmbeddingModel, ids, normalize: bool) -> np.ndarray:
    rows = model.doc_vectors[ids].astype(np.float64)
    if normalize:
        norms = np.linalg.norm(rows, axis=1, keepdims=True)
        rows = rows / np.maximum(norms, 1e-12)
    return rows


def _fit_and_score(train_features, test_features, prepared: PreparedCorpus,
                   config: ExperimentConfig, seed: int):
    """Select C on a dev split, refit on all training rows, score test."""
    train_ds = classifier.LabeledDataset(train_features, prepared.train_labels)
    test_ds = classifier.LabeledDataset(test_features, prepared.test_labels)
    c = classifier.dev_split_select(train_ds, config.c_grid, seed=seed)
    model = classifier.train_logreg(train_ds, c)
    return classifier.evaluate(model, test_ds), c


def _train_embeddings_once(config: ExperimentConfig,
                           prepared: PreparedCorpus, seed: int,
                           workers: int, log=None):
    run_cfg = replace(config.train, seed=seed)
    model = init_model(prepared.num_docs, len(prepared.vocab), run_cfg)
    noise = build_noise_table(prepared.vocab, run_cfg.noise_exponent)
    reports = train(model, prepared.encoded, run_cfg, noise,
                    workers=workers, log=log)
    return model, reports


def _bo_vectors(config: ExperimentConfig, entries):
    """Bag-of-ngram features over a vocabulary from labeled training
    documents only; test tokens outside it are dropped."""
    labeled = [e for e in entries if e.split == "train"]
    test = [e for e in entries if e.split == "test"]
    if not labeled or not test:
        raise imdb.DataError("bag-of-ngram runs need train and test splits")
    train_words = [tokenize(imdb.read_text(e)) for e in labeled]
    vocab = build_vocabulary(
        (extract_ngram_tokens(w, config.ngram_order) for w in train_words),
        min_count=config.min_count, ngram_order=config.ngram_order)
    if len(vocab) == 0:
        raise imdb.DataError("vocabulary is empty after min_count filtering")

    def featurize(words_list):
        return [baselines.bag_of_ngram_features(
                    encode(0, w, vocab, config.ngram_order).token_ids,
                    weighting=config.bo_weighting)
                for w in words_list]

    train_vecs = featurize(train_words)
    test_vecs = featurize(tokenize(imdb.read_text(e)) for e in test)
    train_labels = np.array([_label_sign(e.label) for e in labeled])
    test_labels = np.array([_label_sign(e.label) for e in test])
    return vocab, train_vecs, test_vecs, train_labels, test_labels


def run_experiment(config: ExperimentConfig, entries=None, *, workers: int = 1,
                   log=None) -> tuple[report.MetricsReport, list]:
    """Full protocol for the configured mode over config.runs repetitions.

    Returns the metrics report and (for embedding modes) the per-run
    epoch reports.
    """
    t0 = time.perf_counter()
    if entries is None:
        entries = load_entries(config)
    accuracies: list[float] = []
    chosen: list[float] = []
    epoch_reports: list = []

    if config.mode == "bo":
        vocab, train_vecs, test_vecs, y_train, y_test = _bo_vectors(config,
                                                                    entries)
        dim = len(vocab)
        xtr = baselines.vectors_to_csr(train_vecs, dim)
        xte = baselines.vectors_to_csr(test_vecs, dim)
        prepared = PreparedCorpus(encoded=[], vocab=vocab,
                                  train_ids=np.array([]),
                                  train_labels=y_train,
                                  test_ids=np.array([]),
                                  test_labels=y_test, num_docs=0)
        for run in range(config.runs):
            acc, c = _fit_and_score(xtr, xte, prepared, config,
                                    seed=config.train.seed + run)
            accuracies.append(acc)
            chosen.append(c)
            if log:
                log(f"run {run}: accuracy {acc:.4f} (C={c:g})")
    else:
        prepared = prepare_corpus(config, entries, log=log)
        combo = config.mode == "dv+nbbo"
        if combo:
            nbbo = _combo_sparse_features(config, entries)
        for run in range(config.runs):
            seed = config.train.seed + run
            model, reports = _train_embeddings_once(config, prepared, seed,
                                                    workers, log=log)
            epoch_reports.append(reports)
            xtr = _doc_features(model, prepared.train_ids,
                                config.normalize_vectors)
            xte = _doc_features(model, prepared.test_ids,
                                config.normalize_vectors)
            if combo:
                xtr, xte = _concat_with_sparse(config, xtr, xte, nbbo)
            acc, c = _fit_and_score(xtr, xte, prepared, config, seed=seed)
            accuracies.append(acc)
            chosen.append(c)
            if log:
                log(f"run {run}: accuracy {acc:.4f} (C={c:g})")

    metrics = report.MetricsReport(
        label=config.display_label(), mode=config.mode,
        accuracies=accuracies, chosen_c=chosen,
        wall_seconds=time.perf_counter() - t0,
        config=asdict(config))
    return metrics, epoch_reports


def _combo_sparse_features(config: ExperimentConfig, entries):
    """NB-weighted bag-of-ngram vectors for the combined mode."""
    vocab, train_vecs, test_vecs, y_train, _ = _bo_vectors(config, entries)
    weights = baselines.fit_nb_weights(train_vecs, y_train, len(vocab),
                                       alpha=config.nb_alpha)
    return ([baselines.nb_weighted_features(v, weights) for v in train_vecs],
            [baselines.nb_weighted_features(v, weights) for v in test_vecs],
            len(vocab))


def _concat_with_sparse(config, xtr_dense, xte_dense, nbbo):
    train_sparse, test_sparse, sparse_dim = nbbo
    dim = xtr_dense.shape[1] + sparse_dim
    xtr = baselines.vectors_to_csr(
        [baselines.concat_features(row, vec, config.dense_scale)
         for row, vec in zip(xtr_dense, train_sparse)], dim)
    xte = baselines.vectors_to_csr(
        [baselines.concat_features(row, vec, config.dense_scale)
         for row, vec in zip(xte_dense, test_sparse)], dim)
    return xtr, xte


# ---------------------------------------------------------------------------
# subcommands


def _prefix(config: ExperimentConfig) -> str:
    return f"{config.display_label()}-{config_hash(config)}"


def cmd_ingest(config: ExperimentConfig, out=None) -> str:
    """Scan the corpus and write the manifest; returns its path."""
    out = out or sys.stdout
    entries = imdb.scan_corpus(config.dataset_path)
    os.makedirs(config.output_dir, exist_ok=True)
    path = os.path.join(config.output_dir, "manifest.tsv")
    imdb.write_manifest(entries, path)
    n_train, n_test, n_unsup = imdb.split_counts(entries)
    print(f"train: {n_train}  test: {n_test}  unsup: {n_unsup}", file=out)
    print(f"full-size corpus: {'yes' if imdb.is_full_corpus(entries) else 'no'}",
          file=out)
    print(f"manifest: {path}", file=out)
    return path


def cmd_vocab(config: ExperimentConfig, out=None) -> str:
    """Build and save the embedding vocabulary; returns its path."""
    out = out or sys.stdout
    entries = load_entries(config)
    prepared = prepare_corpus(config, entries,
                              log=lambda m: print(m, file=sys.stderr))
    os.makedirs(config.output_dir, exist_ok=True)
    path = os.path.join(config.output_dir, f"{_prefix(config)}.vocab.tsv")
    save_vocabulary(prepared.vocab, path)
    kinds: dict[str, int] = {}
    for k in prepared.vocab.kind:
        kinds[k] = kinds.get(k, 0) + 1
    for kind in sorted(kinds):
        print(f"{kind}: {kinds[kind]}", file=out)
    print(f"vocabulary: {path}", file=out)
    return path


def cmd_train(config: ExperimentConfig, workers: int = 1,
              out=None) -> dict:
    """One embedding run; exports vectors, vocabulary, and the training
    trace. Returns the artifact paths."""
    out = out or sys.stdout
    entries = load_entries(config)
    log = lambda m: print(m, file=sys.stderr)  # noqa: E731
    prepared = prepare_corpus(config, entries, log=log)
    model, reports = _train_embeddings_once(config, prepared,
                                            config.train.seed, workers,
                                            log=log)
    os.makedirs(config.output_dir, exist_ok=True)
    prefix = _prefix(config)
    paths = {
        "docvecs": os.path.join(config.output_dir, f"{prefix}.docvecs.txt"),
        "tokvecs": os.path.join(config.output_dir, f"{prefix}.tokvecs.txt"),
        "vocab": os.path.join(config.output_dir, f"{prefix}.vocab.tsv"),
        "epochs": os.path.join(config.output_dir, f"{prefix}.epochs.tsv"),
        "objective_png": os.path.join(config.output_dir,
                                      f"{prefix}.objective.png"),
    }
    save_vectors(paths["docvecs"], [str(i) for i in range(model.num_docs)],
                 model.doc_vectors)
    save_vectors(paths["tokvecs"], prepared.vocab.id_to_token,
                 model.token_vectors)
    save_vocabulary(prepared.vocab, paths["vocab"])
    report.write_epochs_tsv([reports], paths["epochs"])
    report.plot_objectives([reports], paths["objective_png"])
    for name, path in paths.items():
        print(f"{name}: {path}", file=out)
    return paths


def cmd_evaluate(config: ExperimentConfig, workers: int = 1,
                 out=None) -> report.MetricsReport:
    """Run the full protocol and write metrics + figures."""
    out = out or sys.stdout
    log = lambda m: print(m, file=sys.stderr)  # noqa: E731
    metrics, epoch_reports = run_experiment(config, workers=workers, log=log)
    os.makedirs(config.output_dir, exist_ok=True)
    prefix = _prefix(config)
    tsv = os.path.join(config.output_dir, f"{prefix}.metrics.tsv")
    js = os.path.join(config.output_dir, f"{prefix}.metrics.json")
    acc_png = os.path.join(config.output_dir, f"{prefix}.accuracy.png")
    report.write_metrics_tsv(metrics, tsv)
    report.write_metrics_json(metrics, js)
    report.plot_accuracies(metrics, acc_png)
    written = [tsv, js, acc_png]
    if epoch_reports:
        epochs_tsv = os.path.join(config.output_dir, f"{prefix}.epochs.tsv")
        obj_png = os.path.join(config.output_dir, f"{prefix}.objective.png")
        report.write_epochs_tsv(epoch_reports, epochs_tsv)
        report.plot_objectives(epoch_reports, obj_png)
        written += [epochs_tsv, obj_png]
    for i, acc in enumerate(metrics.accuracies):
        print(f"run {i}: accuracy {acc:.4f} (C={metrics.chosen_c[i]:g})",
              file=out)
    print(f"mean accuracy: {metrics.mean_accuracy:.4f} "
          f"over {len(metrics.accuracies)} runs", file=out)
    for path in written:
        print(f"wrote {path}", file=out)
    return metrics


# ---------------------------------------------------------------------------
# argument parsing


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 instead of argparse's 2
        raise _UsageError(message)


def _add_common(p: _Parser) -> None:
    p.add_argument("--data", help="corpus root directory")
    p.add_argument("--out", help="output directory for artifacts")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--preset", help=f"one of: {', '.join(sorted(PRESETS))}")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--label", help="artifact name prefix")
    p.add_argument("--ngram-order", type=int)
    p.add_argument("--use-unlabeled", action="store_true", default=None)
    p.add_argument("--min-count", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--subset-train", type=int)
    p.add_argument("--subset-test", type=int)
    p.add_argument("--subset-seed", type=int)
    p.add_argument("--c-grid", help="comma-separated C values")
    p.add_argument("--normalize-vectors", action="store_true", default=None)
    p.add_argument("--bo-weighting", choices=("binary", "tf"))
    p.add_argument("--nb-alpha", type=float)
    p.add_argument("--dense-scale", type=float)
    p.add_argument("--seed", type=int, help="training seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--dim", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--mini-batch", type=int)
    p.add_argument("--negative-k", type=int)
    p.add_argument("--noise-exponent", type=float)
    p.add_argument("--lr-decay", action="store_true", default=None)
    p.add_argument("--dtype", choices=("float32", "float64"))


_TOP_LEVEL = {
    "data": "dataset_path", "out": "output_dir", "mode": "mode",
    "label": "label", "ngram_order": "ngram_order",
    "use_unlabeled": "use_unlabeled", "min_count": "min_count",
    "runs": "runs", "subset_train": "subset_train",
    "subset_test": "subset_test", "subset_seed": "subset_seed",
    "normalize_vectors": "normalize_vectors", "bo_weighting": "bo_weighting",
    "nb_alpha": "nb_alpha", "dense_scale": "dense_scale",
}

_TRAIN_LEVEL = {
    "seed": "seed", "dim": "dim", "lr": "learning_rate", "epochs": "epochs",
    "mini_batch": "mini_batch", "negative_k": "negative_k",
    "noise_exponent": "noise_exponent", "lr_decay": "lr_decay",
    "dtype": "dtype",
}


def config_from_args(args) -> ExperimentConfig:
    """defaults < preset < config file < explicit flags."""
    config = ExperimentConfig()
    if args.preset is not None:
        if args.preset not in PRESETS:
            raise _UsageError(f"unknown preset: {args.preset!r} "
                              f"(choose from {', '.join(sorted(PRESETS))})")
        overrides = dict(PRESETS[args.preset])
        overrides.setdefault("label", args.preset)
        config = apply_overrides(config, overrides)
    if args.config is not None:
        if not os.path.isfile(args.config):
            raise _UsageError(f"config file not found: {args.config}")
        try:
            config = apply_overrides(config, load_config_file(args.config))
        except (ValueError, json.JSONDecodeError) as exc:
            raise _UsageError(f"bad config file: {exc}")
    flags: dict = {}
    for arg_name, key in _TOP_LEVEL.items():
        value = getattr(args, arg_name)
        if value is not None:
            flags[key] = value
    if args.c_grid is not None:
        try:
            flags["c_grid"] = [float(v) for v in args.c_grid.split(",") if v]
        except ValueError:
            raise _UsageError(f"bad --c-grid value: {args.c_grid!r}")
    train_flags = {key: getattr(args, arg_name)
                   for arg_name, key in _TRAIN_LEVEL.items()
                   if getattr(args, arg_name) is not None}
    if train_flags:
        flags["train"] = train_flags
    try:
        return apply_overrides(config, flags)
    except ValueError as exc:
        raise _UsageError(str(exc))


def main(argv=None) -> int:
    parser = _Parser(prog="dvngram",
                     description="document embeddings from n-gram prediction")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (("ingest", "scan a corpus into a manifest"),
                        ("vocab", "build and save the vocabulary"),
                        ("train", "one embedding run, vectors exported"),
                        ("evaluate", "train/classify/score protocol"),
                        ("combine", "evaluate combined dv + weighted "
                                    "bag-of-ngram features")):
        _add_common(sub.add_parser(name, help=blurb))

    try:
        args = parser.parse_args(argv)
        config = config_from_args(args)
        if args.command == "combine" and config.mode != "dv+nbbo":
            config = apply_overrides(config, {"mode": "dv+nbbo"})
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "ingest":
            cmd_ingest(config)
        elif args.command == "vocab":
            cmd_vocab(config)
        elif args.command == "train":
            cmd_train(config, workers=args.workers)
        else:
            cmd_evaluate(config, workers=args.workers)
    except imdb.DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NonFiniteParameterError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
