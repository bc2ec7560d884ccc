"""Command-line surface.

Subcommands:
  train            config-driven training; writes checkpoint, training CSV,
                   and a manifest of the resolved config into --out
  embed            checkpoint + dataset -> embeddings file
  eval             embeddings file -> per-fold CSV + summary line
  gradcheck        finite-difference check of the full objective
  augment-preview  textual before/after diff of one augmented graph

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .augment import KINDS, apply_augmentation
from .config import (RunConfig, build_train_config, load_config, load_dataset,
                     parse_overrides)
from .data import make_batch, parse_tu_dataset
from .errors import (ConfigError, GraphSCError, IngestionError,
                     MalformedDatasetError, NumericError, VersionError)
from .evaluate import (embed_dataset, kfold_eval, load_embeddings,
                       save_embeddings)
from .losses import total_loss
from .model import (ModelConfig, flatten_params, forward_triple,
                    load_checkpoint, params_from_vector, save_checkpoint,
                    xavier_init)
from .tensor import Tensor, gradient_check
from .trainer import train, triple_views

GRADCHECK_THRESHOLD = 1e-4


class _OutputDirLock:
    """One process owns an output directory at a time."""

    def __init__(self, directory: Path):
        self.path = directory / ".lock"

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ConfigError(
                f"output directory is locked by another run: {self.path}") from None
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)
        return False


def _load(args) -> RunConfig:
    return load_config(args.config, parse_overrides(args.set or []))


def cmd_train(args) -> int:
    config = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with _OutputDirLock(out):
        dataset = load_dataset(config)
        tc = build_train_config(config, dataset.feature_dim, len(dataset))
        params, record = train(dataset, tc)
        save_checkpoint(out / "checkpoint.npz", params)
        record.to_csv(out / "training.csv", record_timing=config.record_timing)
        config.write_manifest(out / "manifest.json")
    print(f"trained {config.variant} on {dataset.name}: "
          f"{len(record.epochs)} epochs -> {out}")
    return 0


def cmd_embed(args) -> int:
    config = _load(args)
    dataset = load_dataset(config)
    params = load_checkpoint(args.checkpoint)
    if params.config.in_dim != dataset.feature_dim:
        raise ConfigError(
            f"checkpoint expects feature dim {params.config.in_dim}, dataset has "
            f"{dataset.feature_dim}; check feature_mode/max_degree")
    emb = embed_dataset(dataset, params)
    save_embeddings(args.out, emb, dataset.name)
    config.write_manifest(str(args.out) + ".manifest.json")
    print(f"embedded {len(dataset)} graphs -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    config = _load(args)
    emb, name = load_embeddings(args.embeddings)
    report = kfold_eval(emb, k=config.eval_k, runs=config.eval_runs,
                        c_grid=list(config.c_grid), seed=config.eval_seed,
                        svm_steps=config.svm_steps)
    report.to_csv(args.out)
    config.write_manifest(str(args.out) + ".manifest.json")
    print(report.summary_line(name))
    print(f"majority-class baseline: {report.majority_baseline:.4f}")
    return 0


def loss_gradient_error(config: RunConfig, num_graphs: int = 4,
                        hidden_dim: int = 8, embed_dim: int = 16,
                        num_factors: int = 2, step: float = 1e-5) -> float:
    """Finite-difference error of the total objective w.r.t. all weights.

    Uses a reduced model so the parameter sweep stays fast; the loss wiring
    (augmentation, variant, lambdas) comes from the config.
    """
    dataset = load_dataset(config)
    tc = build_train_config(config, dataset.feature_dim, len(dataset))
    # finite differences must see the same function the analytic gradient
    # differentiates, so the adaptive weights flow instead of being detached
    loss_cfg = dataclasses.replace(tc.loss, differentiate_weights=True)
    rng = np.random.default_rng(tc.seed)
    pick = rng.choice(len(dataset), size=min(num_graphs, len(dataset)), replace=False)
    graphs = [dataset.graphs[i] for i in pick]
    anchors, positives, negatives = triple_views(graphs, tc, rng)
    batches = (make_batch(anchors), make_batch(positives), make_batch(negatives))

    mc = ModelConfig(in_dim=dataset.feature_dim, num_layers=tc.model.num_layers,
                     hidden_dim=hidden_dim, embed_dim=embed_dim,
                     num_factors=num_factors)
    flat = flatten_params(xavier_init(mc, rng))
    with_masks = loss_cfg.lambda1 > 0
    with_abs = loss_cfg.lambda3 > 0 and loss_cfg.variant == "bt"

    def objective(vec: Tensor) -> Tensor:
        params = params_from_vector(mc, vec)
        emb = forward_triple(*batches, params, with_abs_head=with_abs,
                             with_masks=with_masks)
        _, loss = total_loss(emb, loss_cfg)
        return loss

    return gradient_check(objective, Tensor(flat), step=step)


def cmd_gradcheck(args) -> int:
    config = _load(args)
    err = loss_gradient_error(config, num_graphs=args.num_graphs,
                              hidden_dim=args.hidden_dim,
                              embed_dim=args.embed_dim,
                              num_factors=args.num_factors)
    print(f"max relative gradient error: {err:.6e}")
    if not err < GRADCHECK_THRESHOLD:
        print(f"FAIL: error >= {GRADCHECK_THRESHOLD}", file=sys.stderr)
        return 4
    return 0


def _graph_text(g) -> list[str]:
    lines = [f"nodes: {g.num_nodes}", f"edges ({g.num_edges}):"]
    lines += [f"  {u} - {v}" for u, v in g.edges]
    zero_rows = int(np.sum(~g.node_features.any(axis=1)))
    lines.append(f"all-zero feature rows: {zero_rows}")
    return lines


def cmd_augment_preview(args) -> int:
    dataset = parse_tu_dataset(args.dataset_dir, args.dataset_name)
    if not 0 <= args.index < len(dataset):
        raise ConfigError(f"graph index {args.index} outside 0..{len(dataset) - 1}")
    if args.kind not in KINDS:
        raise ConfigError(f"unknown augmentation kind {args.kind!r}")
    g = dataset.graphs[args.index]
    rng = np.random.default_rng(args.seed)
    out = apply_augmentation(g, args.kind, args.rate, rng)
    print(f"graph {args.index} of {args.dataset_name}: "
          f"{args.kind} r={args.rate} seed={args.seed}")
    unchanged = (out.num_nodes == g.num_nodes and out.num_edges == g.num_edges
                 and out.edge_set() == g.edge_set()
                 and np.array_equal(out.node_features, g.node_features))
    if unchanged:
        print("no changes")
        return 0
    print("--- before")
    for line in _graph_text(g):
        print(line)
    print("--- after")
    for line in _graph_text(out):
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphsc",
                                     description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")

    p = sub.add_parser("train", help="train a model from a config")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("embed", help="embed a dataset with a checkpoint")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True, help="embeddings .npz path")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("eval", help="k-fold SVM evaluation of embeddings")
    common(p)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True, help="per-fold CSV path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of the objective")
    common(p)
    p.add_argument("--num-graphs", type=int, default=4)
    p.add_argument("--hidden-dim", type=int, default=8)
    p.add_argument("--embed-dim", type=int, default=16)
    p.add_argument("--num-factors", type=int, default=2)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("augment-preview", help="show one augmentation's effect")
    p.add_argument("--dataset-dir", required=True)
    p.add_argument("--dataset-name", required=True)
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--index", type=int, default=0)
    p.set_defaults(func=cmd_augment_preview)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (IngestionError, MalformedDatasetError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except VersionError as exc:
        print(f"version error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except GraphSCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
