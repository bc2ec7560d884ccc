"""Graph augmentations of configurable intensity and triple construction.

One augmentation family A(.; r) is applied at a weak rate r_a to produce
the positive view and at a strong rate r_b > r_a to produce the negative
view, both derived from the same anchor graph. Perturbation counts use
floor(r * size) so r = 0 is an exact identity; subgraph retention uses
ceil((1 - r) * N).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .data import Graph
from .errors import ConfigError, DegenerateAugmentationError

KINDS = ("node_drop", "edge_perturb", "attr_mask", "subgraph")


@dataclass(frozen=True)
class AugmentationSpec:
    """Which augmentation family to draw from; combo picks uniformly per call."""

    kind: str                       # one of KINDS or "combo"
    combo: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind == "combo":
            if not self.combo:
                raise ConfigError("combo augmentation needs a non-empty kind list")
            for k in self.combo:
                if k not in KINDS:
                    raise ConfigError(f"unknown augmentation kind: {k!r}")
        elif self.kind not in KINDS:
            raise ConfigError(f"unknown augmentation kind: {self.kind!r}")

    def pick(self, rng: np.random.Generator) -> str:
        if self.kind == "combo":
            return self.combo[int(rng.integers(len(self.combo)))]
        return self.kind


@dataclass(frozen=True)
class TripleView:
    """Anchor with its weak-rate positive and strong-rate negative views."""

    anchor: Graph
    positive: Graph
    negative: Graph
    r_a: float
    r_b: float

    def __post_init__(self):
        if not (0.0 <= self.r_a < self.r_b < 1.0):
            raise ConfigError(f"need 0 <= r_a < r_b < 1, got {self.r_a}, {self.r_b}")


def _check_rate(r: float) -> None:
    if not (0.0 <= r < 1.0):
        raise ValueError(f"perturbation rate must be in [0, 1), got {r}")


def _keep_nodes(g: Graph, keep: np.ndarray) -> Graph:
    """Induced subgraph on ``keep`` (sorted original indices), reindexed."""
    remap = -np.ones(g.num_nodes, dtype=np.int64)
    remap[keep] = np.arange(keep.size)
    kept_edges = []
    for u, v in g.edges:
        if remap[u] >= 0 and remap[v] >= 0:
            kept_edges.append((remap[u], remap[v]))
    return Graph(num_nodes=int(keep.size),
                 edges=kept_edges,
                 node_features=g.node_features[keep],
                 label=g.label,
                 node_labels=None if g.node_labels is None else g.node_labels[keep])


def node_drop(g: Graph, r: float, rng: np.random.Generator) -> Graph:
    """Remove floor(r*N) uniformly chosen nodes and their incident edges."""
    _check_rate(r)
    k = math.floor(r * g.num_nodes)
    if k == 0:
        return g
    if k >= g.num_nodes:
        raise DegenerateAugmentationError("node_drop would remove every node")
    dropped = rng.choice(g.num_nodes, size=k, replace=False)
    keep = np.setdiff1d(np.arange(g.num_nodes), dropped)
    return _keep_nodes(g, keep)


def edge_perturb(g: Graph, r: float, rng: np.random.Generator) -> Graph:
    """Delete floor(r*|E|) edges and insert as many uniformly chosen absent ones."""
    _check_rate(r)
    k = math.floor(r * g.num_edges)
    if k == 0:
        return g
    kept_idx = np.sort(rng.choice(g.num_edges, size=g.num_edges - k, replace=False))
    present = {(int(u), int(v)) for u, v in g.edges[kept_idx]}

    n = g.num_nodes
    total_pairs = n * (n - 1) // 2
    capacity = total_pairs - len(present)
    to_insert = min(k, capacity)
    if to_insert < k:
        warnings.warn(f"edge_perturb: only {to_insert} of {k} insertions possible "
                      f"on a graph this dense; partial perturbation")

    if capacity > 0 and to_insert > 0:
        if total_pairs <= 200_000:
            absent = [(u, v) for u in range(n) for v in range(u + 1, n)
                      if (u, v) not in present]
            chosen = rng.choice(len(absent), size=to_insert, replace=False)
            for c in chosen:
                present.add(absent[int(c)])
        else:
            # rejection sampling; cheap because the graph is sparse here
            added = 0
            while added < to_insert:
                u = int(rng.integers(n))
                v = int(rng.integers(n))
                if u == v:
                    continue
                e = (min(u, v), max(u, v))
                if e in present:
                    continue
                present.add(e)
                added += 1

    return Graph(num_nodes=n, edges=sorted(present),
                 node_features=g.node_features, label=g.label,
                 node_labels=g.node_labels)


def attr_mask(g: Graph, r: float, rng: np.random.Generator) -> Graph:
    """Zero the feature rows of floor(r*N) uniformly chosen nodes."""
    _check_rate(r)
    k = math.floor(r * g.num_nodes)
    if k == 0:
        return g
    masked = rng.choice(g.num_nodes, size=k, replace=False)
    feats = g.node_features.copy()
    feats[masked] = 0.0
    return Graph(num_nodes=g.num_nodes, edges=g.edges, node_features=feats,
                 label=g.label, node_labels=g.node_labels)


def subgraph(g: Graph, r: float, rng: np.random.Generator) -> Graph:
    """Random-walk-grown induced subgraph keeping ceil((1-r)*N) nodes.

    Growth adds one uniformly chosen frontier node at a time; when the
    frontier is empty (component exhausted) it jumps to a uniformly chosen
    unkept node.
    """
    _check_rate(r)
    target = math.ceil((1.0 - r) * g.num_nodes)
    if target >= g.num_nodes:
        return g
    adj = g.neighbor_lists()
    kept: set[int] = {int(rng.integers(g.num_nodes))}
    frontier: set[int] = {int(v) for v in adj[next(iter(kept))]} - kept
    while len(kept) < target:
        if frontier:
            pool = sorted(frontier)
            nxt = pool[int(rng.integers(len(pool)))]
        else:
            outside = sorted(set(range(g.num_nodes)) - kept)
            nxt = outside[int(rng.integers(len(outside)))]
        kept.add(nxt)
        frontier.discard(nxt)
        frontier |= {int(v) for v in adj[nxt]} - kept
    keep = np.array(sorted(kept), dtype=np.int64)
    return _keep_nodes(g, keep)


_FUNCS = {
    "node_drop": node_drop,
    "edge_perturb": edge_perturb,
    "attr_mask": attr_mask,
    "subgraph": subgraph,
}


def apply_augmentation(g: Graph, kind: str, r: float, rng: np.random.Generator) -> Graph:
    return _FUNCS[kind](g, r, rng)


def make_triple(g: Graph, spec: AugmentationSpec, r_a: float, r_b: float,
                rng: np.random.Generator) -> TripleView:
    """Build (anchor, weak view, strong view) with one augmentation kind.

    Positive and negative views share the kind drawn for this call but use
    independent randomness.
    """
    if not r_a < r_b:
        raise ValueError(f"require r_a < r_b, got r_a={r_a}, r_b={r_b}")
    kind = spec.pick(rng)
    pos_rng = np.random.default_rng(int(rng.integers(2**63)))
    neg_rng = np.random.default_rng(int(rng.integers(2**63)))
    positive = apply_augmentation(g, kind, r_a, pos_rng)
    negative = apply_augmentation(g, kind, r_b, neg_rng)
    return TripleView(anchor=g, positive=positive, negative=negative, r_a=r_a, r_b=r_b)
