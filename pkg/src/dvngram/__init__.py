"""Document embeddings learned by predicting words and n-grams.

Train fixed-length document vectors with negative-sampling SGD over
(document, token) pairs, where tokens include the document's n-grams;
classify with L2 logistic regression; compare against (weighted)
bag-of-ngram baselines.
"""

from .baselines import (NbWeights, SparseFeatureVector, bag_of_ngram_features,
                        concat_features, fit_nb_weights, nb_weighted_features)
from .classifier import (LabeledDataset, LinearModel, dev_split_select,
                         evaluate, gradient_tolerance, predict, train_logreg)
from .corpus import (EncodedDocument, RawDocument, Vocabulary,
                     build_vocabulary, encode, extract_ngram_tokens, tokenize)
from .model import (EmbeddingModel, TrainConfig, init_model, load_vectors,
                    log_sigmoid, save_vectors, score, sigmoid)
from .noise import NoiseTable, Rng, build_noise_table, sample_negative
from .trainer import (EpochReport, NonFiniteParameterError, TrainingPair,
                      corpus_objective_estimate, exact_softmax_logprob,
                      infer_vector, pair_objective, sgd_step, sgd_step_fixed,
                      train)

__version__ = "0.1.0"

__all__ = [
    "EmbeddingModel", "TrainConfig", "init_model", "score", "sigmoid",
    "log_sigmoid", "save_vectors", "load_vectors",
    "EncodedDocument", "RawDocument", "Vocabulary", "build_vocabulary",
    "encode", "extract_ngram_tokens", "tokenize",
    "NoiseTable", "Rng", "build_noise_table", "sample_negative",
    "EpochReport", "NonFiniteParameterError", "TrainingPair",
    "corpus_objective_estimate", "exact_softmax_logprob", "infer_vector",
    "pair_objective", "sgd_step", "sgd_step_fixed", "train",
    "LabeledDataset", "LinearModel", "dev_split_select", "evaluate",
    "gradient_tolerance", "predict", "train_logreg",
    "NbWeights", "SparseFeatureVector", "bag_of_ngram_features",
    "concat_features", "fit_nb_weights", "nb_weighted_features",
    "__version__",
]
