"""Embedding model state and its on-disk text format.

Vector files use the classic text layout: a "<count> <dim>" header line,
then one row per line as "<name> <v1> ... <vdim>". Values are written
with repr() so a save/load cycle is bit-exact for both float32 and
float64 storage.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

INIT_SCALE = 0.001

_DTYPES = {"float32": np.float32, "float64": np.float64}


@dataclass
class TrainConfig:
    """Hyperparameters for embedding training.

    The defaults are the ones used for the full-scale runs; desk-scale
    experiments override dim downward. epochs=0 is allowed and makes
    training a no-op.
    """

    dim: int = 500
    learning_rate: float = 0.25
    mini_batch: int = 100
    epochs: int = 10
    negative_k: int = 5
    seed: int = 1
    noise_exponent: float = 0.75
    use_bias: bool = False
    lr_decay: bool = False
    dtype: str = "float64"

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.negative_k < 1:
            raise ValueError("negative_k must be >= 1")
        if self.mini_batch < 1:
            raise ValueError("mini_batch must be >= 1")
        if self.noise_exponent <= 0:
            raise ValueError("noise_exponent must be positive")
        if self.dtype not in _DTYPES:
            raise ValueError(f"dtype must be one of {sorted(_DTYPES)}")

    @property
    def np_dtype(self):
        return _DTYPES[self.dtype]


def config_hash(config) -> str:
    """Short stable digest of a config dataclass, for naming artifacts."""
    blob = json.dumps(asdict(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class EmbeddingModel:
    """Document and token vectors (and optional per-token biases)."""

    doc_vectors: np.ndarray
    token_vectors: np.ndarray
    biases: np.ndarray | None = None
    config: TrainConfig = field(default_factory=TrainConfig)

    @property
    def dim(self) -> int:
        return self.doc_vectors.shape[1]

    @property
    def num_docs(self) -> int:
        return self.doc_vectors.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.token_vectors.shape[0]


def init_model(num_docs: int, vocab_size: int,
               config: TrainConfig) -> EmbeddingModel:
    """Fresh model with entries uniform in [-INIT_SCALE, INIT_SCALE),
    deterministic in config.seed."""
    if num_docs <= 0:
        raise ValueError("num_docs must be positive")
    if vocab_size <= 0:
        raise ValueError("vocab_size must be positive")
    rng = np.random.default_rng(config.seed)
    dt = config.np_dtype
    doc_vectors = rng.uniform(-INIT_SCALE, INIT_SCALE,
                              size=(num_docs, config.dim)).astype(dt)
    token_vectors = rng.uniform(-INIT_SCALE, INIT_SCALE,
                                size=(vocab_size, config.dim)).astype(dt)
    biases = np.zeros(vocab_size, dtype=dt) if config.use_bias else None
    return EmbeddingModel(doc_vectors=doc_vectors,
                          token_vectors=token_vectors,
                          biases=biases, config=config)


def score(model: EmbeddingModel, doc_id: int, token_id: int) -> float:
    """Inner product of a document and token vector (plus the token bias
    when biases are enabled), accumulated in double precision."""
    if not 0 <= doc_id < model.num_docs:
        raise IndexError(f"doc_id {doc_id} out of range")
    if not 0 <= token_id < model.vocab_size:
        raise IndexError(f"token_id {token_id} out of range")
    d = model.doc_vectors[doc_id].astype(np.float64, copy=False)
    t = model.token_vectors[token_id].astype(np.float64, copy=False)
    s = float(np.dot(d, t))
    if model.biases is not None:
        s += float(model.biases[token_id])
    return s


def sigmoid(x):
    """Numerically stable logistic function; never overflows."""
    x = np.asarray(x, dtype=np.float64)
    out = np.exp(np.minimum(x, 0.0)) / (1.0 + np.exp(-np.abs(x)))
    return float(out) if out.ndim == 0 else out


def log_sigmoid(x):
    """log(sigmoid(x)) computed without underflow to -inf for finite x."""
    x = np.asarray(x, dtype=np.float64)
    out = np.minimum(x, 0.0) - np.log1p(np.exp(-np.abs(x)))
    return float(out) if out.ndim == 0 else out


def save_vectors(path, names, matrix: np.ndarray) -> None:
    """Write named rows in the "<count> <dim>" text format."""
    if len(names) != matrix.shape[0]:
        raise ValueError("one name per row required")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for name, row in zip(names, matrix):
            fh.write(name)
            for v in row:
                fh.write(" ")
                fh.write(repr(float(v)))
            fh.write("\n")


def load_vectors(path, dtype=np.float64):
    """Read a vector file back as (names, matrix)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        count, dim = int(header[0]), int(header[1])
        names: list[str] = []
        matrix = np.empty((count, dim), dtype=dtype)
        for i in range(count):
            parts = fh.readline().rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ValueError(f"row {i}: expected {dim} values")
            names.append(parts[0])
            matrix[i] = [float(p) for p in parts[1:]]
    return names, matrix
