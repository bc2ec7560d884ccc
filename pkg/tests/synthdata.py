"""Deterministic synthetic TU-format data for tests.

Real MUTAG-scale fixture: 188 two-class graphs, 7 node labels, ~18 nodes
per graph. Class 1 graphs carry extra cycle chords and a motif of high
node labels, so structure and label composition both carry signal; class
labels in the files are the raw values {1, 2} to exercise dense remapping.

Tests that need the genuine MUTAG files look for them under
$GRAPHSC_DATA/MUTAG or <repo>/data/MUTAG and skip when absent.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from graphsc.data import GraphDataset, build_features, parse_tu_dataset


def generate_tu(directory: Path, name: str = "SYNTH", num_graphs: int = 188,
                seed: int = 7) -> Path:
    """Write a synthetic dataset in TU format; returns the directory."""
    rng = np.random.default_rng(seed)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    a_lines: list[str] = []
    indicator: list[int] = []
    graph_labels: list[int] = []
    node_labels: list[int] = []
    offset = 0

    for gid in range(1, num_graphs + 1):
        cls = gid % 2  # 0 -> raw label 1, 1 -> raw label 2
        n = int(rng.integers(10, 29))
        edges: set[tuple[int, int]] = set()
        for v in range(1, n):
            u = int(rng.integers(max(0, v - 4), v))  # chain-biased random tree
            edges.add((u, v))
        extra = int(rng.integers(3, 6)) if cls else int(rng.integers(0, 2))
        for _ in range(extra):
            u = int(rng.integers(n))
            v = int(rng.integers(n))
            if u != v:
                edges.add((min(u, v), max(u, v)))

        labels = rng.integers(0, 5, size=n)
        if cls:
            motif = rng.choice(n, size=max(2, n // 5), replace=False)
            labels[motif] = rng.integers(5, 7, size=motif.size)

        for u, v in sorted(edges):
            a_lines.append(f"{u + 1 + offset}, {v + 1 + offset}")
            a_lines.append(f"{v + 1 + offset}, {u + 1 + offset}")
        indicator.extend([gid] * n)
        graph_labels.append(cls + 1)
        node_labels.extend(int(l) for l in labels)
        offset += n

    (directory / f"{name}_A.txt").write_text("\n".join(a_lines) + "\n")
    (directory / f"{name}_graph_indicator.txt").write_text(
        "\n".join(map(str, indicator)) + "\n")
    (directory / f"{name}_graph_labels.txt").write_text(
        "\n".join(map(str, graph_labels)) + "\n")
    (directory / f"{name}_node_labels.txt").write_text(
        "\n".join(map(str, node_labels)) + "\n")
    return directory


def surrogate_dataset(directory: Path, num_graphs: int = 188,
                      seed: int = 7) -> GraphDataset:
    """Generate, parse, and one-hot featurize the synthetic dataset."""
    generate_tu(directory, "SYNTH", num_graphs=num_graphs, seed=seed)
    dataset = parse_tu_dataset(directory, "SYNTH")
    return build_features(dataset, "node_label_onehot")


def find_real_mutag() -> Path | None:
    """Directory holding genuine MUTAG TU files, if available."""
    candidates = []
    env = os.environ.get("GRAPHSC_DATA")
    if env:
        candidates.append(Path(env) / "MUTAG")
    candidates.append(Path(__file__).resolve().parent.parent / "data" / "MUTAG")
    for c in candidates:
        if (c / "MUTAG_A.txt").is_file():
            return c
    return None
