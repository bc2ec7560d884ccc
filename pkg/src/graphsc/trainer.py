"""Mini-batch training loop: triples, forward, loss, Adam, metrics.

Each epoch reshuffles the dataset with the run's generator, partitions it
into batches (the last batch is kept only if it still has two or more
graphs), draws one fresh triple per graph, and applies one Adam update per
batch. Everything is driven by a single seeded generator, so a (dataset,
config, seed) tuple reproduces the run bit for bit.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .augment import AugmentationSpec, apply_augmentation, make_triple
from .data import Graph, GraphDataset, make_batch
from .errors import ConfigError, DegenerateAugmentationError, NumericError
from .losses import LossReport, LossWeights, total_loss
from .model import ModelConfig, ModelParams, forward_triple, xavier_init
from .tensor import backward

log = logging.getLogger("graphsc")

NEGATIVE_SOURCES = ("self", "random")


@dataclass(frozen=True)
class TrainConfig:
    model: ModelConfig
    loss: LossWeights = LossWeights()
    augmentation: AugmentationSpec = AugmentationSpec("node_drop")
    r_a: float = 0.1
    r_b: float = 0.25
    batch_size: int = 128
    epochs: int = 20
    learning_rate: float = 0.005
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    negative_source: str = "self"   # "random" draws the negative from another graph
    checkpoint_every: int = 0       # epochs between snapshots; 0 = final only

    def __post_init__(self):
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if not 0.0 <= self.r_a < self.r_b < 1.0:
            raise ConfigError(f"need 0 <= r_a < r_b < 1, got {self.r_a}, {self.r_b}")
        if self.negative_source not in NEGATIVE_SOURCES:
            raise ConfigError(f"negative_source must be one of {NEGATIVE_SOURCES}")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    report: LossReport
    seconds: float


@dataclass
class TrainRecord:
    epochs: list[EpochStats] = field(default_factory=list)

    def append(self, stats: EpochStats) -> None:
        if self.epochs and stats.epoch <= self.epochs[-1].epoch:
            raise ValueError("epoch numbers must be strictly increasing")
        self.epochs.append(stats)

    def to_csv(self, path, record_timing: bool = True) -> None:
        """Write per-epoch metrics; seconds is zeroed when timing is off.

        Disabling timing makes the file byte-reproducible across runs.
        """
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "l_se", "l_fa", "l_ma", "l_ab", "total",
                             "seconds"])
            for e in self.epochs:
                secs = e.seconds if record_timing else 0.0
                writer.writerow([e.epoch] + [f"{v:.10g}" for v in e.report.as_row()]
                                + [f"{secs:.6f}"])


class AdamState:
    """First/second moment accumulators plus the shared timestep."""

    def __init__(self, params: ModelParams):
        self.m = {k: np.zeros_like(t.data) for k, t in params.tensors.items()}
        self.v = {k: np.zeros_like(t.data) for k, t in params.tensors.items()}
        self.t = 0


def adam_step(params: ModelParams, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    """Standard bias-corrected Adam update from the accumulated gradients."""
    state.t += 1
    correction1 = 1.0 - beta1 ** state.t
    correction2 = 1.0 - beta2 ** state.t
    for name, tens in params.tensors.items():
        grad = tens.grad
        if grad is None:
            grad = np.zeros_like(tens.data)
        if not np.all(np.isfinite(grad)):
            raise NumericError(f"non-finite gradient for parameter {name!r}")
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        tens.data = tens.data - lr * m_hat / (np.sqrt(v_hat) + eps)


def triple_views(graphs: list[Graph], config: TrainConfig,
                 rng: np.random.Generator) -> tuple[list[Graph], list[Graph], list[Graph]]:
    """One (anchor, positive, negative) per graph; drops graphs whose
    augmentation stays degenerate after 3 attempts."""
    anchors: list[Graph] = []
    positives: list[Graph] = []
    negatives: list[Graph] = []
    for i, g in enumerate(graphs):
        triple = None
        for _ in range(3):
            try:
                if config.negative_source == "self":
                    triple = make_triple(g, config.augmentation, config.r_a,
                                         config.r_b, rng)
                else:
                    # ablation: negative is a strong view of another batch graph
                    kind = config.augmentation.pick(rng)
                    pos_rng = np.random.default_rng(int(rng.integers(2**63)))
                    neg_rng = np.random.default_rng(int(rng.integers(2**63)))
                    pos = apply_augmentation(g, kind, config.r_a, pos_rng)
                    if len(graphs) > 1:
                        j = int(rng.integers(len(graphs) - 1))
                        j = j if j < i else j + 1
                    else:
                        j = i
                    neg = apply_augmentation(graphs[j], kind, config.r_b, neg_rng)
                    triple = (g, pos, neg)
                break
            except DegenerateAugmentationError:
                triple = None
        if triple is None:
            log.warning("skipping graph after 3 degenerate augmentations")
            continue
        if isinstance(triple, tuple):
            a, p, n = triple
        else:
            a, p, n = triple.anchor, triple.positive, triple.negative
        anchors.append(a)
        positives.append(p)
        negatives.append(n)
    return anchors, positives, negatives


def _mean_report(reports: list[tuple[LossReport, int]]) -> LossReport:
    total_graphs = sum(n for _, n in reports)
    sums = np.zeros(5)
    for rep, n in reports:
        sums += np.array(rep.as_row()) * n
    sums /= max(total_graphs, 1)
    return LossReport(l_se=sums[0], l_fa=sums[1], l_ma=sums[2], l_ab=sums[3],
                      total=sums[4])


def train(dataset: GraphDataset, config: TrainConfig,
          params: ModelParams | None = None) -> tuple[ModelParams, TrainRecord]:
    """Self-supervised training; returns final weights and per-epoch stats."""
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    rng = np.random.default_rng(config.seed)
    if params is None:
        params = xavier_init(config.model, rng)
    state = AdamState(params)
    record = TrainRecord()
    weights = config.loss
    with_masks = weights.lambda1 > 0
    with_abs = weights.lambda3 > 0 and weights.variant == "bt"

    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(len(dataset))
        reports: list[tuple[LossReport, int]] = []
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            if idx.size < 2:
                break  # a 1-graph remainder cannot form cross-correlations
            graphs = [dataset.graphs[i] for i in idx]
            anchors, positives, negatives = triple_views(graphs, config, rng)
            if len(anchors) < 2:
                log.warning("batch skipped: fewer than 2 usable triples")
                continue
            emb = forward_triple(make_batch(anchors), make_batch(positives),
                                 make_batch(negatives), params,
                                 with_abs_head=with_abs, with_masks=with_masks)
            report, loss = total_loss(emb, weights)
            params.zero_grads()
            backward(loss)
            adam_step(params, state, config.learning_rate, config.adam_beta1,
                      config.adam_beta2, config.adam_eps)
            reports.append((report, len(anchors)))
        if not params.all_finite():
            raise NumericError(f"non-finite parameter values after epoch {epoch}")
        seconds = time.perf_counter() - t0
        if reports:
            record.append(EpochStats(epoch=epoch, report=_mean_report(reports),
                                     seconds=seconds))
    return params, record
