"""Downstream evaluation: frozen-encoder embeddings into a linear SVM.

The classifier is a self-contained one-vs-rest linear SVM trained by
seeded mini-batch subgradient descent (Pegasos-style step sizes) on
standardized features. Model selection picks C per outer fold with an
inner 3-fold split of the training portion only; test folds never touch
the scaler statistics or the C choice.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .data import GraphDataset, make_batch
from .errors import VersionError
from .model import ModelParams, gin_forward

log = logging.getLogger("graphsc")

EMBEDDING_VERSION = 1


@dataclass(frozen=True)
class EmbeddingMatrix:
    rows: np.ndarray    # [N x hidden]
    labels: np.ndarray  # [N]

    def __post_init__(self):
        if self.rows.shape[0] != self.labels.shape[0]:
            raise ValueError("rows and labels must have equal length")


@dataclass(frozen=True)
class EvalReport:
    fold_accuracies: list[list[float]]  # [runs][folds]
    mean_accuracy: float
    std_accuracy: float
    run_seeds: list[int]
    majority_baseline: float
    k: int

    @property
    def runs(self) -> int:
        return len(self.fold_accuracies)

    def summary_line(self, dataset_name: str) -> str:
        return (f"{dataset_name}, {self.mean_accuracy:.4f}, "
                f"{self.std_accuracy:.4f}, {self.runs}, {self.k}")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["run", "fold", "accuracy"])
            for r, accs in enumerate(self.fold_accuracies):
                for f, acc in enumerate(accs):
                    writer.writerow([r, f, f"{acc:.10g}"])


def embed_dataset(dataset: GraphDataset, params: ModelParams,
                  chunk_size: int = 256) -> EmbeddingMatrix:
    """Deterministic encoder embeddings (pre-projection h) for every graph."""
    rows = []
    for start in range(0, len(dataset), chunk_size):
        batch = make_batch(list(dataset.graphs[start:start + chunk_size]))
        rows.append(gin_forward(batch, params).data)
    return EmbeddingMatrix(rows=np.concatenate(rows, axis=0),
                           labels=dataset.labels())


def save_embeddings(path, emb: EmbeddingMatrix, dataset_name: str) -> None:
    with open(path, "wb") as fh:
        np.savez(fh, __version__=np.array(EMBEDDING_VERSION, dtype=np.int64),
                 name=np.frombuffer(dataset_name.encode(), dtype=np.uint8),
                 rows=emb.rows, labels=emb.labels)


def load_embeddings(path) -> tuple[EmbeddingMatrix, str]:
    with np.load(path) as npz:
        if "__version__" not in npz:
            raise VersionError(f"{path}: not an embeddings file")
        version = int(npz["__version__"])
        if version != EMBEDDING_VERSION:
            raise VersionError(
                f"{path}: embeddings version {version}, expected {EMBEDDING_VERSION}")
        emb = EmbeddingMatrix(rows=npz["rows"].copy(), labels=npz["labels"].copy())
        name = bytes(npz["name"]).decode()
    return emb, name


@dataclass(frozen=True)
class LinearSVM:
    """OvR linear classifier with the training fold's scaler baked in."""

    mean: np.ndarray
    std: np.ndarray
    weights: np.ndarray  # [num_classes x (h+1)], last column is the bias
    classes: np.ndarray

    def decision(self, x: np.ndarray) -> np.ndarray:
        xs = (x - self.mean) / self.std
        xs = np.hstack([xs, np.ones((xs.shape[0], 1))])
        return xs @ self.weights.T

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.classes[np.argmax(self.decision(x), axis=1)]


def linear_svm_train(x: np.ndarray, y: np.ndarray, c: float = 1.0,
                     steps: int = 1000, seed: int = 0) -> LinearSVM:
    """L2-regularized hinge loss by seeded mini-batch subgradient descent.

    Pegasos step sizes with ball projection; the returned weights average
    the second half of the iterates, which tightens fold-to-fold variance.
    """
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("training fold must contain at least 2 classes")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    xs = (x - mean) / std
    xs = np.hstack([xs, np.ones((xs.shape[0], 1))])

    t_total = xs.shape[0]
    lam = 1.0 / (c * t_total)
    batch = min(64, t_total)
    rng = np.random.default_rng(seed)
    weights = np.zeros((classes.size, xs.shape[1]))
    radius = 1.0 / np.sqrt(lam)
    for ci, cls in enumerate(classes):
        target = np.where(y == cls, 1.0, -1.0)
        w = np.zeros(xs.shape[1])
        averaged = np.zeros_like(w)
        n_avg = 0
        for t in range(1, steps + 1):
            idx = rng.integers(t_total, size=batch)
            margins = target[idx] * (xs[idx] @ w)
            active = margins < 1.0
            eta = 1.0 / (lam * t)
            grad = lam * w
            if np.any(active):
                grad -= (target[idx][active, None] * xs[idx][active]).sum(axis=0) / batch
            w = w - eta * grad
            norm = np.linalg.norm(w)
            if norm > radius:  # Pegasos projection keeps steps stable
                w *= radius / norm
            if t > steps // 2:
                averaged += w
                n_avg += 1
        weights[ci] = averaged / n_avg if n_avg else w
    return LinearSVM(mean=mean, std=std, weights=weights, classes=classes)


def _stratified_folds(labels: np.ndarray, k: int,
                      rng: np.random.Generator) -> list[np.ndarray]:
    """Disjoint index folds; stratified unless some class has < k members."""
    counts = np.bincount(labels)
    folds: list[list[int]] = [[] for _ in range(k)]
    if np.any(counts[counts > 0] < k):
        warnings.warn("a class has fewer members than folds; "
                      "falling back to plain shuffled folds")
        order = rng.permutation(labels.size)
        for pos, idx in enumerate(order):
            folds[pos % k].append(int(idx))
    else:
        offset = 0
        for cls in np.unique(labels):
            members = np.flatnonzero(labels == cls)
            members = members[rng.permutation(members.size)]
            for pos, idx in enumerate(members):
                folds[(pos + offset) % k].append(int(idx))
            offset += members.size % k  # stagger so small folds spread out
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def _select_c(x: np.ndarray, y: np.ndarray, c_grid: list[float], seed: int,
              steps: int) -> float:
    """Inner 3-fold validation on the training portion; ties take smaller C."""
    rng = np.random.default_rng(seed)
    inner_k = min(3, np.min(np.bincount(y)[np.bincount(y) > 0]), y.size)
    inner_k = max(int(inner_k), 2)
    folds = _stratified_folds(y, inner_k, rng)
    best_c, best_acc = None, -1.0
    for c in sorted(c_grid):
        accs = []
        for i, test_idx in enumerate(folds):
            train_idx = np.setdiff1d(np.arange(y.size), test_idx)
            if np.unique(y[train_idx]).size < 2 or test_idx.size == 0:
                continue
            clf = linear_svm_train(x[train_idx], y[train_idx], c=c,
                                   steps=steps, seed=seed + i)
            accs.append(float(np.mean(clf.predict(x[test_idx]) == y[test_idx])))
        acc = float(np.mean(accs)) if accs else 0.0
        if acc > best_acc:
            best_c, best_acc = c, acc
    return best_c if best_c is not None else sorted(c_grid)[0]


def kfold_eval(emb: EmbeddingMatrix, k: int = 10, runs: int = 5,
               c_grid: list[float] | None = None, seed: int = 0,
               svm_steps: int = 1000) -> EvalReport:
    """Repeated stratified k-fold SVM accuracy on frozen embeddings."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if emb.rows.shape[0] < k:
        raise ValueError("need at least k samples")
    c_grid = c_grid or [0.01, 0.1, 1.0, 10.0]
    labels = emb.labels
    majority = float(np.max(np.bincount(labels)) / labels.size)

    all_fold_accs: list[list[float]] = []
    run_means: list[float] = []
    run_seeds: list[int] = []
    for run in range(runs):
        run_seed = seed + run
        run_seeds.append(run_seed)
        rng = np.random.default_rng(run_seed)
        folds = _stratified_folds(labels, k, rng)
        accs: list[float] = []
        for i, test_idx in enumerate(folds):
            train_idx = np.setdiff1d(np.arange(labels.size), test_idx)
            if np.unique(labels[train_idx]).size < 2:
                log.warning("fold %d skipped: single-class training portion", i)
                continue
            if test_idx.size == 0:
                continue
            c = _select_c(emb.rows[train_idx], labels[train_idx], c_grid,
                          seed=run_seed * 1000 + i, steps=svm_steps)
            clf = linear_svm_train(emb.rows[train_idx], labels[train_idx], c=c,
                                   steps=svm_steps, seed=run_seed * 1000 + i + 500)
            accs.append(float(np.mean(clf.predict(emb.rows[test_idx])
                                      == labels[test_idx])))
        all_fold_accs.append(accs)
        run_means.append(float(np.mean(accs)))
    return EvalReport(fold_accuracies=all_fold_accs,
                      mean_accuracy=float(np.mean(run_means)),
                      std_accuracy=float(np.std(run_means)),
                      run_seeds=run_seeds,
                      majority_baseline=majority,
                      k=k)
