"""Self-contrast representation learning for graphs.

Train a GIN encoder by contrasting each graph against a weakly and a
strongly augmented view of itself (triplet objective), with HSIC-factorized
masked contrast and an absolute-distance regularizer; evaluate frozen
embeddings with a linear SVM under repeated k-fold cross-validation.
"""

__version__ = "0.1.0"

from .augment import AugmentationSpec, TripleView, attr_mask, edge_perturb, make_triple, node_drop, subgraph
from .data import (Graph, GraphBatch, GraphDataset, build_features, make_batch,
                   parse_tu_dataset, write_tu_dataset)
from .errors import (ConfigError, DegenerateAugmentationError, DimensionError,
                     GraphSCError, IngestionError, MalformedDatasetError,
                     NumericError, VersionError)
from .estimator import GraphSelfContrast, check_graphs
from .evaluate import (EmbeddingMatrix, EvalReport, embed_dataset, kfold_eval,
                       linear_svm_train)
from .losses import (LossReport, LossWeights, barlow_twins_loss,
                     factor_independence_loss, hsic_empirical,
                     masked_triplet_loss, masked_weights, mse_abs_loss,
                     total_loss, triplet_loss)
from .model import (ModelConfig, ModelParams, TripletEmbeddings, factorize,
                    forward_triple, gin_forward, load_checkpoint, mask_factor,
                    project_g1, project_g2, project_g3, save_checkpoint,
                    xavier_init)
from .tensor import Tape, Tensor, backward, gradient_check
from .trainer import AdamState, TrainConfig, TrainRecord, adam_step, train

__all__ = [
    "AugmentationSpec", "TripleView", "attr_mask", "edge_perturb", "make_triple",
    "node_drop", "subgraph",
    "Graph", "GraphBatch", "GraphDataset", "build_features", "make_batch",
    "parse_tu_dataset", "write_tu_dataset",
    "ConfigError", "DegenerateAugmentationError", "DimensionError", "GraphSCError",
    "IngestionError", "MalformedDatasetError", "NumericError", "VersionError",
    "GraphSelfContrast", "check_graphs",
    "EmbeddingMatrix", "EvalReport", "embed_dataset", "kfold_eval",
    "linear_svm_train",
    "LossReport", "LossWeights", "barlow_twins_loss", "factor_independence_loss",
    "hsic_empirical", "masked_triplet_loss", "masked_weights", "mse_abs_loss",
    "total_loss", "triplet_loss",
    "ModelConfig", "ModelParams", "TripletEmbeddings", "factorize",
    "forward_triple", "gin_forward", "load_checkpoint", "mask_factor",
    "project_g1", "project_g2", "project_g3", "save_checkpoint", "xavier_init",
    "Tape", "Tensor", "backward", "gradient_check",
    "AdamState", "TrainConfig", "TrainRecord", "adam_step", "train",
]
