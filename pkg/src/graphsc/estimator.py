"""Estimator-style facade: fit on a graph collection, transform to embeddings.

Follows the scikit-learn parameter protocol (constructor stores arguments
verbatim; ``get_params``/``set_params`` expose them), so instances compose
with tools like ``sklearn.base.clone`` and grid search without this package
depending on scikit-learn itself.
"""

from __future__ import annotations

import inspect

import numpy as np

from .augment import AugmentationSpec
from .config import VARIANTS, variant_adjustments
from .data import Graph, GraphDataset
from .errors import ConfigError
from .evaluate import embed_dataset
from .losses import LossWeights
from .model import ModelConfig
from .trainer import TrainConfig, TrainRecord, train


def check_graphs(x) -> tuple[Graph, ...]:
    """Accept a GraphDataset or an iterable of Graph; validate homogeneity."""
    if isinstance(x, GraphDataset):
        graphs = x.graphs
    else:
        graphs = tuple(x)
    if not graphs:
        raise ValueError("expected at least one graph")
    for g in graphs:
        if not isinstance(g, Graph):
            raise TypeError(f"expected Graph instances, got {type(g).__name__}")
    dim = graphs[0].feature_dim
    for g in graphs:
        if g.feature_dim != dim:
            raise ValueError("all graphs must share one feature dimension")
    return graphs


def _wrap_dataset(graphs: tuple[Graph, ...], name: str) -> GraphDataset:
    labels = [g.label for g in graphs if g.label is not None]
    num_classes = max(labels) + 1 if labels else 1
    return GraphDataset(name=name, graphs=graphs, num_classes=num_classes,
                        feature_dim=graphs[0].feature_dim)


class GraphSelfContrast:
    """Self-supervised graph representation learner with a fit/transform API.

    ``fit`` trains the encoder on unlabeled graphs by contrasting each graph
    against a weakly and a strongly augmented view of itself; ``transform``
    returns the frozen encoder's graph embeddings.
    """

    def __init__(self, num_layers: int = 3, hidden_dim: int = 32,
                 embed_dim: int = 128, num_factors: int = 4,
                 augmentation: str = "node_drop",
                 combo: tuple[str, ...] = (),
                 r_a: float = 0.1, r_b: float = 0.25,
                 lambda1: float = 1.0, lambda2: float = 0.01,
                 lambda3: float = 0.01, epsilon: float = 0.2,
                 beta: float = 0.013, variant: str = "full",
                 hsic_kernel: str = "linear", hsic_samples: str = "coords",
                 batch_size: int = 128, epochs: int = 20,
                 learning_rate: float = 0.005, seed: int = 0):
        self.num_layers = num_layers
        self.hidden_dim = hidden_dim
        self.embed_dim = embed_dim
        self.num_factors = num_factors
        self.augmentation = augmentation
        self.combo = combo
        self.r_a = r_a
        self.r_b = r_b
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.lambda3 = lambda3
        self.epsilon = epsilon
        self.beta = beta
        self.variant = variant
        self.hsic_kernel = hsic_kernel
        self.hsic_samples = hsic_samples
        self.batch_size = batch_size
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [p for p in sig.parameters if p != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params) -> "GraphSelfContrast":
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ConfigError(f"unknown parameter {key!r} for GraphSelfContrast")
            setattr(self, key, value)
        return self

    def _train_config(self, in_dim: int, n_graphs: int) -> TrainConfig:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        loss = LossWeights(lambda1=self.lambda1, lambda2=self.lambda2,
                           lambda3=self.lambda3, epsilon=self.epsilon,
                           beta=self.beta, hsic_kernel=self.hsic_kernel,
                           hsic_samples=self.hsic_samples)
        loss, negative_source = variant_adjustments(self.variant, loss)
        model = ModelConfig(in_dim=in_dim, num_layers=self.num_layers,
                            hidden_dim=self.hidden_dim, embed_dim=self.embed_dim,
                            num_factors=self.num_factors)
        aug = AugmentationSpec(self.augmentation, tuple(self.combo))
        return TrainConfig(model=model, loss=loss, augmentation=aug,
                           r_a=self.r_a, r_b=self.r_b,
                           batch_size=min(self.batch_size, max(n_graphs, 2)),
                           epochs=self.epochs, learning_rate=self.learning_rate,
                           seed=self.seed, negative_source=negative_source)

    def fit(self, x, y=None) -> "GraphSelfContrast":
        graphs = check_graphs(x)
        dataset = x if isinstance(x, GraphDataset) else _wrap_dataset(graphs, "fit")
        config = self._train_config(dataset.feature_dim, len(graphs))
        self.params_, self.record_ = train(dataset, config)
        self.n_features_in_ = dataset.feature_dim
        return self

    def transform(self, x) -> np.ndarray:
        if not hasattr(self, "params_"):
            raise RuntimeError("this GraphSelfContrast instance is not fitted yet")
        graphs = check_graphs(x)
        if graphs[0].feature_dim != self.n_features_in_:
            raise ValueError(
                f"feature dimension {graphs[0].feature_dim} differs from the "
                f"fitted dimension {self.n_features_in_}")
        dataset = (x if isinstance(x, GraphDataset)
                   else _wrap_dataset(graphs, "transform"))
        return embed_dataset(dataset, self.params_).rows

    def fit_transform(self, x, y=None) -> np.ndarray:
        return self.fit(x, y).transform(x)

    def training_record(self) -> TrainRecord:
        if not hasattr(self, "record_"):
            raise RuntimeError("this GraphSelfContrast instance is not fitted yet")
        return self.record_
