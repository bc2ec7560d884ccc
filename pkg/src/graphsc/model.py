"""GIN encoder with sum readout, projection heads, factor masking.

Node update per layer: h_i <- MLP((1 + eps) * h_i + sum of neighbor h_j),
with a learnable eps per layer and a linear-relu-linear MLP. The graph
embedding is the sum of final-layer node embeddings. Three heads map the
embedding into the contrast space (g1, row-normalized), the masked-contrast
space (g2, row-normalized) and the absolute-distance space (g3, left
unnormalized because its loss normalizes per column).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .data import GraphBatch
from .errors import ConfigError, DimensionError, VersionError
from .tensor import Tensor

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    in_dim: int
    num_layers: int = 3
    hidden_dim: int = 32
    embed_dim: int = 128       # g1 output d
    num_factors: int = 4       # n
    g2_out_dim: int | None = None   # defaults to embed_dim
    abs_dim: int | None = None      # g3 output, defaults to embed_dim

    def __post_init__(self):
        if self.g2_out_dim is None:
            object.__setattr__(self, "g2_out_dim", self.embed_dim)
        if self.abs_dim is None:
            object.__setattr__(self, "abs_dim", self.embed_dim)
        for name in ("in_dim", "num_layers", "hidden_dim", "embed_dim",
                     "num_factors", "g2_out_dim", "abs_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.embed_dim % self.num_factors != 0:
            raise ConfigError(
                f"embed_dim {self.embed_dim} not divisible by num_factors "
                f"{self.num_factors}")

    @property
    def factor_dim(self) -> int:
        return self.embed_dim // self.num_factors

    def to_dict(self) -> dict:
        return {"in_dim": self.in_dim, "num_layers": self.num_layers,
                "hidden_dim": self.hidden_dim, "embed_dim": self.embed_dim,
                "num_factors": self.num_factors, "g2_out_dim": self.g2_out_dim,
                "abs_dim": self.abs_dim}


class ModelParams:
    """All learnable weights, keyed by name, in a stable order."""

    def __init__(self, config: ModelConfig, tensors: dict[str, Tensor]):
        self.config = config
        self.tensors = dict(tensors)

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def names(self) -> list[str]:
        return list(self.tensors.keys())

    def zero_grads(self) -> None:
        for t in self.tensors.values():
            t.zero_grad()

    def copy(self) -> "ModelParams":
        out = {}
        for name, t in self.tensors.items():
            c = Tensor(t.data.copy(), requires_grad=t.requires_grad)
            out[name] = c
        return ModelParams(self.config, out)

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(t.data)) for t in self.tensors.values())


def _head_shapes(in_dim: int, out_dim: int) -> list[tuple[str, tuple[int, ...]]]:
    return [("w1", (in_dim, out_dim)), ("b1", (out_dim,)),
            ("w2", (out_dim, out_dim)), ("b2", (out_dim,))]


def param_shapes(config: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    shapes: list[tuple[str, tuple[int, ...]]] = []
    last = config.in_dim
    for l in range(config.num_layers):
        shapes += [(f"gin{l}.w1", (last, config.hidden_dim)),
                   (f"gin{l}.b1", (config.hidden_dim,)),
                   (f"gin{l}.w2", (config.hidden_dim, config.hidden_dim)),
                   (f"gin{l}.b2", (config.hidden_dim,)),
                   (f"gin{l}.eps", ())]
        last = config.hidden_dim
    shapes += [(f"g1.{k}", s) for k, s in _head_shapes(config.hidden_dim, config.embed_dim)]
    shapes += [(f"g2.{k}", s) for k, s in _head_shapes(config.embed_dim, config.g2_out_dim)]
    shapes += [(f"g3.{k}", s) for k, s in _head_shapes(config.hidden_dim, config.abs_dim)]
    return shapes


def xavier_init(config: ModelConfig, rng: np.random.Generator) -> ModelParams:
    """Weight matrices uniform in +-sqrt(6/(fan_in+fan_out)); biases and eps zero."""
    tensors: dict[str, Tensor] = {}
    for name, shape in param_shapes(config):
        if len(shape) == 2:
            bound = np.sqrt(6.0 / (shape[0] + shape[1]))
            data = rng.uniform(-bound, bound, size=shape)
        else:
            data = np.zeros(shape)
        tensors[name] = Tensor(data, requires_grad=True)
    return ModelParams(config, tensors)


def _mlp(x: Tensor, params: ModelParams, prefix: str) -> Tensor:
    hid = T.relu(T.add(T.matmul(x, params[f"{prefix}.w1"]), params[f"{prefix}.b1"]))
    return T.add(T.matmul(hid, params[f"{prefix}.w2"]), params[f"{prefix}.b2"])


def gin_forward(batch: GraphBatch, params: ModelParams) -> Tensor:
    """Per-graph embeddings [num_graphs x hidden] via GIN layers + sum readout."""
    config = params.config
    if batch.node_features.shape[1] != config.in_dim:
        raise DimensionError(
            f"batch feature dim {batch.node_features.shape[1]} != model in_dim "
            f"{config.in_dim}")
    total = batch.node_features.shape[0]
    if batch.edges.shape[0]:
        src = np.concatenate([batch.edges[:, 0], batch.edges[:, 1]])
        dst = np.concatenate([batch.edges[:, 1], batch.edges[:, 0]])
        order = np.argsort(dst, kind="stable")  # segment_sum wants sorted ids
        src, dst = src[order], dst[order]
    else:
        src = dst = np.zeros(0, dtype=np.int64)

    h = Tensor(batch.node_features)
    for l in range(config.num_layers):
        agg = T.segment_sum(T.take_rows(h, src), dst, total)
        eps = params[f"gin{l}.eps"]
        u = T.add(T.mul(h, T.add(eps, Tensor(1.0))), agg)
        h = _mlp(u, params, f"gin{l}")
    return T.segment_sum(h, batch.graph_id, batch.num_graphs)


def project_g1(h: Tensor, params: ModelParams) -> Tensor:
    return T.l2_normalize(_mlp(h, params, "g1"))


def project_g2(y: Tensor, params: ModelParams) -> Tensor:
    return T.l2_normalize(_mlp(y, params, "g2"))


def project_g3(h: Tensor, params: ModelParams) -> Tensor:
    return _mlp(h, params, "g3")


def factorize(y: Tensor, n: int) -> list[Tensor]:
    """Split columns into n contiguous equal-width blocks."""
    d = y.shape[1]
    if d % n != 0:
        raise ConfigError(f"cannot split {d} columns into {n} equal factors")
    w = d // n
    return [T.slice_axis(y, 1, m * w, (m + 1) * w) for m in range(n)]


def mask_factor(y: Tensor, m: int, n: int) -> Tensor:
    """Zero factor block m (1-based), keep the others."""
    d = y.shape[1]
    if d % n != 0:
        raise ConfigError(f"cannot split {d} columns into {n} equal factors")
    if not 1 <= m <= n:
        raise IndexError(f"factor index {m} outside 1..{n}")
    w = d // n
    mask = np.ones((1, d))
    mask[0, (m - 1) * w: m * w] = 0.0
    return T.mul(y, Tensor(mask))


@dataclass
class TripletEmbeddings:
    """Everything the loss terms consume, for one batch of triples."""

    h: Tensor
    h_pos: Tensor
    h_neg: Tensor
    y: Tensor
    y_pos: Tensor
    y_neg: Tensor
    q: Tensor
    num_factors: int
    q_pos_masked: list[Tensor] = field(default_factory=list)  # index m-1
    q_neg_masked: list[Tensor] = field(default_factory=list)
    z: Tensor | None = None
    z_pos: Tensor | None = None


def forward_triple(anchor: GraphBatch, positive: GraphBatch, negative: GraphBatch,
                   params: ModelParams, with_abs_head: bool = True,
                   with_masks: bool = True) -> TripletEmbeddings:
    """Run encoder and heads on the three aligned batches."""
    n = params.config.num_factors
    h = gin_forward(anchor, params)
    hp = gin_forward(positive, params)
    hn = gin_forward(negative, params)
    y, yp, yn = (project_g1(x, params) for x in (h, hp, hn))
    q = project_g2(y, params)
    qp_m: list[Tensor] = []
    qn_m: list[Tensor] = []
    if with_masks:
        for m in range(1, n + 1):
            qp_m.append(project_g2(mask_factor(yp, m, n), params))
            qn_m.append(project_g2(mask_factor(yn, m, n), params))
    z = zp = None
    if with_abs_head:
        z = project_g3(h, params)
        zp = project_g3(hp, params)
    return TripletEmbeddings(h=h, h_pos=hp, h_neg=hn, y=y, y_pos=yp, y_neg=yn,
                             q=q, num_factors=n, q_pos_masked=qp_m,
                             q_neg_masked=qn_m, z=z, z_pos=zp)


def flatten_params(params: ModelParams) -> np.ndarray:
    """All weights as one flat vector, in stable name order."""
    return np.concatenate([params[name].data.reshape(-1)
                           for name, _ in param_shapes(params.config)])


def unflatten_params(config: ModelConfig, vec: np.ndarray,
                     requires_grad: bool = False) -> ModelParams:
    """Inverse of :func:`flatten_params`."""
    tensors: dict[str, Tensor] = {}
    pos = 0
    for name, shape in param_shapes(config):
        size = int(np.prod(shape)) if shape else 1
        tensors[name] = Tensor(vec[pos:pos + size].reshape(shape),
                               requires_grad=requires_grad)
        pos += size
    if pos != vec.size:
        raise DimensionError(f"parameter vector length {vec.size}, expected {pos}")
    return ModelParams(config, tensors)


def params_from_vector(config: ModelConfig, vec: Tensor) -> ModelParams:
    """Differentiable view of a flat parameter vector as named weights.

    Gradients of anything computed from the result flow back into ``vec``,
    which is what whole-model finite-difference checks need.
    """
    tensors: dict[str, Tensor] = {}
    pos = 0
    for name, shape in param_shapes(config):
        size = int(np.prod(shape)) if shape else 1
        piece = T.slice_axis(vec, 0, pos, pos + size)
        tensors[name] = T.reshape(piece, shape)
        pos += size
    if pos != vec.shape[0]:
        raise DimensionError(f"parameter vector length {vec.shape[0]}, expected {pos}")
    return ModelParams(config, tensors)


def save_checkpoint(path, params: ModelParams) -> None:
    """npz container: format version, JSON model config, one array per weight."""
    arrays = {"__version__": np.array(CHECKPOINT_VERSION, dtype=np.int64),
              "__config__": np.frombuffer(
                  json.dumps(params.config.to_dict()).encode(), dtype=np.uint8)}
    for name, t in params.tensors.items():
        arrays["param:" + name] = t.data
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> ModelParams:
    with np.load(path) as npz:
        if "__version__" not in npz:
            raise VersionError(f"{path}: not a model checkpoint")
        version = int(npz["__version__"])
        if version != CHECKPOINT_VERSION:
            raise VersionError(
                f"{path}: checkpoint version {version}, expected {CHECKPOINT_VERSION}")
        config = ModelConfig(**json.loads(bytes(npz["__config__"]).decode()))
        tensors: dict[str, Tensor] = {}
        for name, _ in param_shapes(config):
            key = "param:" + name
            if key not in npz:
                raise VersionError(f"{path}: missing parameter {name}")
            tensors[name] = Tensor(npz[key].copy(), requires_grad=True)
    return ModelParams(config, tensors)
