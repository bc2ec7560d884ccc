"""Graph data model, TU-format ingestion, feature construction, batching.

The TU plain-text layout (all indices 1-based):
  <name>_A.txt               one "u, v" directed pair per line; undirected
                             graphs list both directions
  <name>_graph_indicator.txt one graph id per node line
  <name>_graph_labels.txt    one integer class per graph line
  <name>_node_labels.txt     one integer label per node line (optional)
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, IngestionError, MalformedDatasetError


def _canonical_edges(pairs, num_nodes: int) -> np.ndarray:
    """Sorted unique [E, 2] int64 array with i < j per row."""
    arr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
    if arr.size == 0:
        return arr.reshape(0, 2)
    lo = arr.min(axis=1)
    hi = arr.max(axis=1)
    if np.any(lo == hi):
        raise ValueError("graph edges must not contain self-loops")
    if lo.min() < 0 or hi.max() >= num_nodes:
        raise ValueError("edge endpoint out of range")
    canon = np.stack([lo, hi], axis=1)
    canon = np.unique(canon, axis=0)
    return canon


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph with node features and an optional label."""

    num_nodes: int
    edges: np.ndarray                    # [E, 2], canonical i<j, unique
    node_features: np.ndarray            # [N, F] float64
    label: int | None = None
    node_labels: np.ndarray | None = None  # raw per-node integer labels, if known

    def __post_init__(self):
        if self.num_nodes <= 0:
            raise ValueError("graph must have at least one node")
        edges = _canonical_edges(self.edges, self.num_nodes)
        feats = np.asarray(self.node_features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] != self.num_nodes:
            raise ValueError(
                f"node_features must be [num_nodes x F], got {feats.shape} for "
                f"{self.num_nodes} nodes")
        labels = self.node_labels
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int64)
            if labels.shape != (self.num_nodes,):
                raise ValueError("node_labels length must equal num_nodes")
            labels.setflags(write=False)
        edges.setflags(write=False)
        feats.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "node_features", feats)
        object.__setattr__(self, "node_labels", labels)

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.node_features.shape[1]

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_nodes, dtype=np.int64)
        if self.num_edges:
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def neighbor_lists(self) -> list[np.ndarray]:
        adj: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return [np.array(sorted(a), dtype=np.int64) for a in adj]

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}


@dataclass(frozen=True)
class GraphDataset:
    """Ordered collection of graphs sharing one feature space."""

    name: str
    graphs: tuple[Graph, ...]
    num_classes: int
    feature_dim: int

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(self.graphs))
        for g in self.graphs:
            if g.feature_dim != self.feature_dim:
                raise ValueError(
                    f"graph feature dim {g.feature_dim} != dataset dim {self.feature_dim}")
            if g.label is not None and not (0 <= g.label < self.num_classes):
                raise ValueError(f"label {g.label} outside [0, {self.num_classes})")

    def __len__(self) -> int:
        return len(self.graphs)

    @property
    def has_node_labels(self) -> bool:
        return all(g.node_labels is not None for g in self.graphs)

    def labels(self) -> np.ndarray:
        return np.array([-1 if g.label is None else g.label for g in self.graphs],
                        dtype=np.int64)


@dataclass(frozen=True)
class GraphBatch:
    """Disjoint union of graphs; nodes of one graph are contiguous."""

    node_features: np.ndarray  # [total_nodes, F]
    edges: np.ndarray          # [E, 2] global node indices
    graph_id: np.ndarray       # [total_nodes] non-decreasing
    num_graphs: int

    @property
    def total_nodes(self) -> int:
        return self.node_features.shape[0]

    def node_counts(self) -> np.ndarray:
        return np.bincount(self.graph_id, minlength=self.num_graphs)


def _read_int_lines(path: Path) -> list[int]:
    out = []
    with path.open() as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(int(line))
    return out


def parse_tu_dataset(directory: str | Path, name: str) -> GraphDataset:
    """Load a TU-format dataset directory into a :class:`GraphDataset`.

    Edge lines are 1-indexed directed pairs; both directions of an
    undirected edge are expected. Asymmetric lines only warn, so tiny
    synthetic fixtures stay usable. Graph labels are remapped onto a dense
    [0, num_classes) range. Initial node features are the raw node-label
    column (zeros when the optional label file is absent); run
    :func:`build_features` to get one-hot features.
    """
    directory = Path(directory)
    paths = {
        "A": directory / f"{name}_A.txt",
        "indicator": directory / f"{name}_graph_indicator.txt",
        "labels": directory / f"{name}_graph_labels.txt",
    }
    for key in ("A", "indicator", "labels"):
        if not paths[key].is_file():
            raise IngestionError(f"missing mandatory file: {paths[key]}")
    node_label_path = directory / f"{name}_node_labels.txt"

    indicator = np.array(_read_int_lines(paths["indicator"]), dtype=np.int64) - 1
    if indicator.size == 0:
        raise MalformedDatasetError(f"{paths['indicator']}: no nodes")
    num_graphs = int(indicator.max()) + 1

    graph_labels_raw = _read_int_lines(paths["labels"])
    if len(graph_labels_raw) != num_graphs:
        raise MalformedDatasetError(
            f"{paths['labels']}: {len(graph_labels_raw)} labels for {num_graphs} graphs")
    classes = sorted(set(graph_labels_raw))
    label_map = {c: i for i, c in enumerate(classes)}
    graph_labels = [label_map[c] for c in graph_labels_raw]

    node_labels = None
    if node_label_path.is_file():
        node_labels = np.array(_read_int_lines(node_label_path), dtype=np.int64)
        if node_labels.shape[0] != indicator.shape[0]:
            raise MalformedDatasetError(
                f"{node_label_path}: {node_labels.shape[0]} labels for "
                f"{indicator.shape[0]} nodes")

    # global node index -> (graph, local index); nodes keep file order
    local_index = np.zeros_like(indicator)
    counts = np.zeros(num_graphs, dtype=np.int64)
    for i, g in enumerate(indicator):
        local_index[i] = counts[g]
        counts[g] += 1
    if np.any(counts == 0):
        raise MalformedDatasetError(f"{paths['indicator']}: a graph id has no nodes")

    directed: list[set[tuple[int, int]]] = [set() for _ in range(num_graphs)]
    with paths["A"].open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise MalformedDatasetError(f"{paths['A']}:{lineno}: expected 'u, v'")
            u, v = int(parts[0]) - 1, int(parts[1]) - 1
            if not (0 <= u < indicator.size and 0 <= v < indicator.size):
                raise MalformedDatasetError(f"{paths['A']}:{lineno}: node index out of range")
            gu, gv = indicator[u], indicator[v]
            if gu != gv:
                raise MalformedDatasetError(
                    f"{paths['A']}:{lineno}: edge joins graph {gu + 1} and graph {gv + 1}")
            directed[gu].add((int(local_index[u]), int(local_index[v])))

    graphs = []
    for g in range(num_graphs):
        pairs = directed[g]
        asym = [(u, v) for u, v in pairs if (v, u) not in pairs]
        if asym:
            warnings.warn(
                f"{name}: graph {g + 1} has {len(asym)} edge line(s) without the "
                f"reverse direction; treating them as undirected edges")
        undirected = {(min(u, v), max(u, v)) for u, v in pairs}
        n = int(counts[g])
        mask = indicator == g
        if node_labels is not None:
            nl = node_labels[mask]
            feats = nl.astype(np.float64)[:, None]
        else:
            nl = None
            feats = np.zeros((n, 1))
        graphs.append(Graph(num_nodes=n, edges=sorted(undirected),
                            node_features=feats, label=graph_labels[g],
                            node_labels=nl))

    return GraphDataset(name=name, graphs=tuple(graphs),
                        num_classes=len(classes), feature_dim=1)


def write_tu_dataset(dataset: GraphDataset, directory: str | Path) -> None:
    """Write TU-format files; inverse of :func:`parse_tu_dataset`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    name = dataset.name

    offsets = np.cumsum([0] + [g.num_nodes for g in dataset.graphs])
    with (directory / f"{name}_A.txt").open("w") as fh:
        for g, off in zip(dataset.graphs, offsets[:-1]):
            for u, v in g.edges:
                fh.write(f"{u + 1 + off}, {v + 1 + off}\n")
                fh.write(f"{v + 1 + off}, {u + 1 + off}\n")
    with (directory / f"{name}_graph_indicator.txt").open("w") as fh:
        for i, g in enumerate(dataset.graphs, start=1):
            fh.write(f"{i}\n" * g.num_nodes)
    with (directory / f"{name}_graph_labels.txt").open("w") as fh:
        for g in dataset.graphs:
            fh.write(f"{0 if g.label is None else g.label}\n")
    if dataset.has_node_labels:
        with (directory / f"{name}_node_labels.txt").open("w") as fh:
            for g in dataset.graphs:
                for l in g.node_labels:
                    fh.write(f"{l}\n")


def build_features(dataset: GraphDataset, mode: str,
                   max_degree: int | None = None,
                   clamp: bool = True) -> GraphDataset:
    """Replace node features with one-hot rows of node labels or degrees.

    ``node_label_onehot`` uses the dataset-wide label alphabet, so F is the
    number of distinct labels. ``degree_onehot`` gives F = max_degree + 1;
    degrees above max_degree go into the top bucket when clamping is
    enabled, otherwise they are an error.
    """
    if mode == "node_label_onehot":
        if not dataset.has_node_labels:
            raise ConfigError("node_label_onehot requires node labels on every graph")
        alphabet = sorted({int(l) for g in dataset.graphs for l in g.node_labels})
        index = {l: i for i, l in enumerate(alphabet)}
        dim = len(alphabet)

        def featurize(g: Graph) -> np.ndarray:
            rows = np.zeros((g.num_nodes, dim))
            for i, l in enumerate(g.node_labels):
                rows[i, index[int(l)]] = 1.0
            return rows

    elif mode == "degree_onehot":
        observed = max(int(g.degrees().max()) for g in dataset.graphs)
        if max_degree is None:
            max_degree = observed
        if observed > max_degree and not clamp:
            raise ConfigError(
                f"observed degree {observed} exceeds max_degree {max_degree} "
                f"and clamping is disabled")
        dim = max_degree + 1

        def featurize(g: Graph) -> np.ndarray:
            deg = np.minimum(g.degrees(), max_degree)
            rows = np.zeros((g.num_nodes, dim))
            rows[np.arange(g.num_nodes), deg] = 1.0
            return rows

    else:
        raise ConfigError(f"unknown feature mode: {mode!r}")

    graphs = tuple(
        Graph(num_nodes=g.num_nodes, edges=g.edges, node_features=featurize(g),
              label=g.label, node_labels=g.node_labels)
        for g in dataset.graphs)
    return GraphDataset(name=dataset.name, graphs=graphs,
                        num_classes=dataset.num_classes, feature_dim=dim)


def make_batch(graphs: list[Graph] | tuple[Graph, ...]) -> GraphBatch:
    """Disjoint-union batch with node indices offset per graph."""
    if not graphs:
        raise ValueError("make_batch: empty graph list")
    dim = graphs[0].feature_dim
    for g in graphs:
        if g.feature_dim != dim:
            raise ValueError("make_batch: graphs must share a feature dimension")
    feats = np.concatenate([g.node_features for g in graphs], axis=0)
    graph_id = np.concatenate(
        [np.full(g.num_nodes, i, dtype=np.int64) for i, g in enumerate(graphs)])
    offset = 0
    edge_parts = []
    for g in graphs:
        if g.num_edges:
            edge_parts.append(g.edges + offset)
        offset += g.num_nodes
    edges = (np.concatenate(edge_parts, axis=0) if edge_parts
             else np.zeros((0, 2), dtype=np.int64))
    return GraphBatch(node_features=feats, edges=edges, graph_id=graph_id,
                      num_graphs=len(graphs))
