"""Flat-key run configuration: JSON file, CLI overrides, variant wiring.

The schema is a single flat namespace (see ``DEFAULTS``). Unknown keys are
rejected so typos fail loudly. Variants remap the loss weights and the
negative-sample source:

  full  self-negative, all terms active (Barlow Twins regularizer)
  mse   like full but the absolute term is the MSE regularizer (no g3)
  nm    no masked self-contrast: lambda1 = lambda2 = 0
  nB    no absolute-distance regularizer: lambda3 = 0
  rd    negative is a strong view of another graph in the batch
  rdt   rd negatives and the plain triplet objective (all lambdas 0)
"""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

from .augment import AugmentationSpec
from .data import GraphDataset, build_features, parse_tu_dataset
from .errors import ConfigError
from .losses import LossWeights
from .model import ModelConfig
from .trainer import TrainConfig

VARIANTS = ("full", "rd", "nm", "nB", "mse", "rdt")

DEFAULTS: dict = {
    # data
    "dataset_dir": "",
    "dataset_name": "",
    "feature_mode": "node_label_onehot",   # node_label_onehot | degree_onehot
    "max_degree": 64,
    "clamp_degree": True,
    # model
    "num_layers": 3,
    "hidden_dim": 32,
    "embed_dim": 128,
    "num_factors": 4,
    "g2_out_dim": None,
    "abs_dim": None,
    # augmentation
    "augmentation": "node_drop",   # node_drop | edge_perturb | attr_mask | subgraph | combo
    "combo": [],
    "r_a": 0.1,
    "r_b": 0.25,
    # loss
    "lambda1": 1.0,
    "lambda2": 0.01,
    "lambda3": 0.01,
    "epsilon": 0.2,
    "beta": 0.013,
    "hsic_kernel": "linear",
    "hsic_samples": "coords",
    "differentiate_weights": False,
    "variant": "full",
    # training
    "batch_size": 128,
    "epochs": 20,
    "learning_rate": 0.005,
    "seed": 0,
    "adam_beta1": 0.9,
    "adam_beta2": 0.999,
    "adam_eps": 1e-8,
    "checkpoint_every": 0,
    "record_timing": True,
    # evaluation
    "eval_k": 10,
    "eval_runs": 5,
    "eval_seed": 0,
    "c_grid": [0.01, 0.1, 1.0, 10.0],
    "svm_steps": 1000,
}


class RunConfig:
    """Resolved flat configuration; attribute access per key."""

    def __init__(self, values: dict):
        unknown = set(values) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        merged = dict(DEFAULTS)
        merged.update(values)
        if merged["variant"] not in VARIANTS:
            raise ConfigError(
                f"unknown variant {merged['variant']!r}; choose from {VARIANTS}")
        self._values = merged

    def __getattr__(self, key: str):
        try:
            return self._values[key]
        except KeyError:
            raise AttributeError(key) from None

    def as_dict(self) -> dict:
        return dict(self._values)

    def write_manifest(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self._values, fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    values: dict = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            values = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {p} is not valid JSON: {exc}") from exc
        if not isinstance(values, dict):
            raise ConfigError(f"config file {p} must hold a JSON object")
    if overrides:
        values.update(overrides)
    return RunConfig(values)


def parse_overrides(pairs: list[str]) -> dict:
    """Parse repeated ``key=value`` CLI overrides; values are JSON when valid."""
    out: dict = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        key, raw = pair.split("=", 1)
        key = key.strip()
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def variant_adjustments(variant: str, loss: LossWeights) -> tuple[LossWeights, str]:
    """Loss weights and negative-sample source implied by a variant name."""
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    negative_source = "self"
    if variant == "mse":
        loss = replace(loss, variant="mse")
    elif variant == "nm":
        loss = replace(loss, lambda1=0.0, lambda2=0.0)
    elif variant == "nB":
        loss = replace(loss, lambda3=0.0)
    elif variant == "rd":
        negative_source = "random"
    elif variant == "rdt":
        negative_source = "random"
        loss = replace(loss, lambda1=0.0, lambda2=0.0, lambda3=0.0)
    return loss, negative_source


def load_dataset(config: RunConfig) -> GraphDataset:
    if not config.dataset_dir or not config.dataset_name:
        raise ConfigError("dataset_dir and dataset_name must be set")
    dataset = parse_tu_dataset(config.dataset_dir, config.dataset_name)
    return build_features(dataset, config.feature_mode,
                          max_degree=config.max_degree,
                          clamp=config.clamp_degree)


def build_train_config(config: RunConfig, in_dim: int, n_graphs: int) -> TrainConfig:
    loss = LossWeights(lambda1=config.lambda1, lambda2=config.lambda2,
                       lambda3=config.lambda3, epsilon=config.epsilon,
                       beta=config.beta, hsic_kernel=config.hsic_kernel,
                       hsic_samples=config.hsic_samples,
                       differentiate_weights=config.differentiate_weights)
    loss, negative_source = variant_adjustments(config.variant, loss)
    model = ModelConfig(in_dim=in_dim, num_layers=config.num_layers,
                        hidden_dim=config.hidden_dim, embed_dim=config.embed_dim,
                        num_factors=config.num_factors,
                        g2_out_dim=config.g2_out_dim, abs_dim=config.abs_dim)
    aug = AugmentationSpec(config.augmentation, tuple(config.combo))
    return TrainConfig(model=model, loss=loss, augmentation=aug,
                       r_a=config.r_a, r_b=config.r_b,
                       batch_size=min(config.batch_size, max(n_graphs, 2)),
                       epochs=config.epochs, learning_rate=config.learning_rate,
                       seed=config.seed, adam_beta1=config.adam_beta1,
                       adam_beta2=config.adam_beta2, adam_eps=config.adam_eps,
                       negative_source=negative_source,
                       checkpoint_every=config.checkpoint_every)
