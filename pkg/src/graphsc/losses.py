"""Loss terms for self-contrast training and the combined objective.

Terms:
  l_se  triplet margin loss between whole representations
        (1/B) sum_i max(||y_i - y_i+||^2 - ||y_i - y_i-||^2 + eps, 0)
  l_fa  pairwise dependence penalty between factor blocks, measured by the
        empirical HSIC (m-1)^-2 tr(UHSH); per graph, the d_c coordinates of
        a factor block are the m samples (a batch-as-samples alternative
        sits behind ``hsic_samples="batch"``)
  l_ma  factor-masked triplet loss with adaptive per-factor weights
        w_im = (1 - softmax_m(e_i))/(n-1), e_im = q_i . (q_im+ - q_im-)
  l_ab  absolute-distance regularizer: Barlow Twins cross-correlation form
        (diagonal term scaled by 1/B, off-diagonal by beta) or plain MSE

Combined: total = l_se + lambda1*l_ma + lambda2*l_fa + lambda3*l_ab.
Terms whose lambda is zero are skipped and reported as 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigError, DimensionError
from .model import TripletEmbeddings, factorize
from .tensor import Tensor

VARIANTS_AB = ("bt", "mse")


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 1.0
    lambda2: float = 0.01
    lambda3: float = 0.01
    epsilon: float = 0.2
    beta: float = 0.013
    variant: str = "bt"            # bt | mse
    hsic_kernel: str = "linear"    # linear | rbf
    hsic_samples: str = "coords"   # coords | batch
    differentiate_weights: bool = False

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.beta < 0 or self.lambda1 < 0 or self.lambda2 < 0 or self.lambda3 < 0:
            raise ConfigError("beta and lambdas must be non-negative")
        if self.variant not in VARIANTS_AB:
            raise ConfigError(f"variant must be one of {VARIANTS_AB}")
        if self.hsic_kernel not in ("linear", "rbf"):
            raise ConfigError("hsic_kernel must be 'linear' or 'rbf'")
        if self.hsic_samples not in ("coords", "batch"):
            raise ConfigError("hsic_samples must be 'coords' or 'batch'")


@dataclass(frozen=True)
class LossReport:
    l_se: float
    l_fa: float
    l_ma: float
    l_ab: float
    total: float

    def as_row(self) -> list[float]:
        return [self.l_se, self.l_fa, self.l_ma, self.l_ab, self.total]


def _row_sq_dist(a: Tensor, b: Tensor) -> Tensor:
    return T.tsum(T.square(T.sub(a, b)), axis=1)


def triplet_loss(y: Tensor, y_pos: Tensor, y_neg: Tensor, epsilon: float) -> Tensor:
    if not (y.shape == y_pos.shape == y_neg.shape):
        raise DimensionError(
            f"triplet_loss: shapes {y.shape}, {y_pos.shape}, {y_neg.shape} differ")
    hinge = T.relu(T.add(T.sub(_row_sq_dist(y, y_pos), _row_sq_dist(y, y_neg)),
                         Tensor(epsilon)))
    return T.tmean(hinge)


def _centering(m: int) -> Tensor:
    return Tensor(np.eye(m) - np.full((m, m), 1.0 / m))


def _linear_gram(x: Tensor) -> Tensor:
    col = T.reshape(x, (x.shape[0], 1))
    return T.matmul(col, T.transpose(col))


def _rbf_gram(x: Tensor) -> Tensor:
    m = x.shape[0]
    sq = T.square(x)
    ones_row = Tensor(np.ones((1, m)))
    ones_col = Tensor(np.ones((m, 1)))
    col = T.reshape(x, (m, 1))
    d2 = T.add(T.sub(T.matmul(T.reshape(sq, (m, 1)), ones_row),
                     T.mul(T.matmul(col, T.transpose(col)), Tensor(2.0))),
               T.matmul(ones_col, T.reshape(sq, (1, m))))
    # median-heuristic bandwidth, treated as a constant
    vals = d2.data[d2.data > 0]
    sigma2 = float(np.median(vals)) if vals.size else 1.0
    return T.exp(T.mul(d2, Tensor(-0.5 / sigma2)))


def hsic_empirical(x: Tensor, y: Tensor, kernel: str = "linear") -> Tensor:
    """Empirical HSIC of two scalar-sample sequences: (m-1)^-2 tr(UHSH)."""
    if x.data.ndim != 1 or y.data.ndim != 1 or x.shape != y.shape:
        raise DimensionError(
            f"hsic_empirical: need equal-length 1-D samples, got {x.shape}, {y.shape}")
    m = x.shape[0]
    if m < 2:
        raise ValueError("hsic_empirical needs at least 2 samples")
    gram = _linear_gram if kernel == "linear" else _rbf_gram
    u = gram(x)
    s = gram(y)
    h = _centering(m)
    # tr(A @ B) = sum(A * B^T) with A = U H, B = S H
    tr = T.tsum(T.mul(T.matmul(u, h), T.transpose(T.matmul(s, h))))
    return T.mul(tr, Tensor(1.0 / (m - 1) ** 2))


def _hsic_gram_pair(u: Tensor, s: Tensor, m: int) -> Tensor:
    h = _centering(m)
    tr = T.tsum(T.mul(T.matmul(u, h), T.transpose(T.matmul(s, h))))
    return T.mul(tr, Tensor(1.0 / (m - 1) ** 2))


def factor_independence_loss(factors_pos: list[Tensor], factors_neg: list[Tensor],
                             kernel: str = "linear",
                             samples: str = "coords") -> Tensor:
    """Sum of pairwise HSIC between factor blocks of both views, averaged over B.

    ``coords`` treats the d_c coordinates of one graph's factor block as the
    HSIC samples and sums over graphs and ordered pairs j != k. For the
    linear kernel this reduces per graph to
    (centered(c_j) . centered(c_k))^2 / (d_c - 1)^2, which is evaluated
    batch-vectorized. ``batch`` instead treats the B rows as samples.
    """
    n = len(factors_pos)
    if n != len(factors_neg):
        raise DimensionError("factor lists must have equal length")
    if n <= 1:
        return Tensor(0.0)  # no ordered pairs
    b, d_c = factors_pos[0].shape
    if samples == "coords" and d_c < 2:
        raise ConfigError("coords-mode HSIC needs factor width >= 2")
    if samples == "batch" and b < 2:
        raise ConfigError("batch-mode HSIC needs batch size >= 2")

    terms: list[Tensor] = []
    if samples == "coords" and kernel == "linear":
        h = _centering(d_c)
        centered_p = [T.matmul(c, h) for c in factors_pos]
        centered_n = [T.matmul(c, h) for c in factors_neg]
        scale = 1.0 / (d_c - 1) ** 2
        for j in range(n):
            for k in range(n):
                if j == k:
                    continue
                dot_p = T.tsum(T.mul(centered_p[j], centered_p[k]), axis=1)
                dot_n = T.tsum(T.mul(centered_n[j], centered_n[k]), axis=1)
                terms.append(T.mul(T.add(T.tsum(T.square(dot_p)),
                                         T.tsum(T.square(dot_n))), Tensor(scale)))
    elif samples == "coords":
        for j in range(n):
            for k in range(n):
                if j == k:
                    continue
                for i in range(b):
                    cp_j = T.reshape(T.slice_axis(factors_pos[j], 0, i, i + 1), (d_c,))
                    cp_k = T.reshape(T.slice_axis(factors_pos[k], 0, i, i + 1), (d_c,))
                    cn_j = T.reshape(T.slice_axis(factors_neg[j], 0, i, i + 1), (d_c,))
                    cn_k = T.reshape(T.slice_axis(factors_neg[k], 0, i, i + 1), (d_c,))
                    terms.append(T.add(hsic_empirical(cp_j, cp_k, kernel),
                                       hsic_empirical(cn_j, cn_k, kernel)))
    else:
        grams_p = [T.matmul(c, T.transpose(c)) for c in factors_pos]
        grams_n = [T.matmul(c, T.transpose(c)) for c in factors_neg]
        for j in range(n):
            for k in range(n):
                if j == k:
                    continue
                terms.append(T.add(_hsic_gram_pair(grams_p[j], grams_p[k], b),
                                   _hsic_gram_pair(grams_n[j], grams_n[k], b)))

    total = terms[0]
    for t in terms[1:]:
        total = T.add(total, t)
    return T.mul(total, Tensor(1.0 / b))


def masked_weights(q: Tensor, q_pos_masked: list[Tensor], q_neg_masked: list[Tensor],
                   detach: bool = True) -> Tensor:
    """Adaptive factor weights [B x n]; rows sum to 1.

    A factor with a larger separation score e_im gets a smaller weight, so
    optimization attends to the factors that separate poorly.
    """
    n = len(q_pos_masked)
    if n < 2:
        raise ConfigError("masked weights need at least 2 factors")
    cols = []
    for qp, qn in zip(q_pos_masked, q_neg_masked):
        e = T.tsum(T.mul(q, T.sub(qp, qn)), axis=1)
        cols.append(T.reshape(e, (q.shape[0], 1)))
    scores = T.concat(cols, axis=1)
    w = T.mul(T.sub(Tensor(1.0), T.softmax(scores, axis=1)), Tensor(1.0 / (n - 1)))
    return w.detach() if detach else w


def masked_triplet_loss(q: Tensor, q_pos_masked: list[Tensor],
                        q_neg_masked: list[Tensor], w: Tensor,
                        epsilon: float) -> Tensor:
    n = len(q_pos_masked)
    if w.shape != (q.shape[0], n):
        raise DimensionError(f"weight shape {w.shape} != ({q.shape[0]}, {n})")
    cols = []
    for qp, qn in zip(q_pos_masked, q_neg_masked):
        hinge = T.relu(T.add(T.sub(_row_sq_dist(q, qp), _row_sq_dist(q, qn)),
                             Tensor(epsilon)))
        cols.append(T.reshape(hinge, (q.shape[0], 1)))
    hinges = T.concat(cols, axis=1)
    return T.mul(T.tsum(T.mul(w, hinges)), Tensor(1.0 / q.shape[0]))


def barlow_twins_loss(z: Tensor, z_pos: Tensor, beta: float) -> Tensor:
    """Cross-correlation regularizer; identity correlation gives loss 0.

    C_ij correlates column i of z with column j of z+, normalized by the
    column norms (floored at 1e-12 so constant columns yield C = 0). The
    diagonal misalignment term carries the 1/B factor; the off-diagonal
    redundancy term is scaled by beta.
    """
    if z.shape != z_pos.shape:
        raise DimensionError(f"barlow_twins_loss: shapes {z.shape} != {z_pos.shape}")
    b, d = z.shape
    if b < 2:
        raise ValueError("barlow_twins_loss needs at least 2 rows")
    # norm floor: sqrt(ss + 1e-24) >= 1e-12 keeps zero columns finite
    guard = Tensor(np.full(d, 1e-24))
    nz = T.sqrt(T.add(T.tsum(T.square(z), axis=0), guard))
    np_ = T.sqrt(T.add(T.tsum(T.square(z_pos), axis=0), guard))
    denom = T.matmul(T.reshape(nz, (d, 1)), T.reshape(np_, (1, d)))
    corr = T.div(T.matmul(T.transpose(z), z_pos), denom)
    eye = Tensor(np.eye(d))
    diag = T.tsum(T.square(T.sub(eye, T.mul(corr, eye))))
    offdiag = T.tsum(T.square(T.mul(corr, Tensor(1.0 - np.eye(d)))))
    return T.add(T.mul(diag, Tensor(1.0 / b)), T.mul(offdiag, Tensor(beta)))


def mse_abs_loss(y: Tensor, y_pos: Tensor) -> Tensor:
    if y.shape != y_pos.shape:
        raise DimensionError(f"mse_abs_loss: shapes {y.shape} != {y_pos.shape}")
    return T.tmean(_row_sq_dist(y, y_pos))


def total_loss(emb: TripletEmbeddings, weights: LossWeights) -> tuple[LossReport, Tensor]:
    """All four terms plus the weighted total to backpropagate.

    Terms with a zero lambda are not computed and enter the report as 0, so
    ablation variants stay exactly 0-weighted.
    """
    total = triplet_loss(emb.y, emb.y_pos, emb.y_neg, weights.epsilon)
    l_se = total.item()

    l_ma = 0.0
    if weights.lambda1 > 0:
        w = masked_weights(emb.q, emb.q_pos_masked, emb.q_neg_masked,
                           detach=not weights.differentiate_weights)
        ma = masked_triplet_loss(emb.q, emb.q_pos_masked, emb.q_neg_masked, w,
                                 weights.epsilon)
        l_ma = ma.item()
        total = T.add(total, T.mul(ma, Tensor(weights.lambda1)))

    l_fa = 0.0
    if weights.lambda2 > 0:
        fa = factor_independence_loss(
            factorize(emb.y_pos, emb.num_factors),
            factorize(emb.y_neg, emb.num_factors),
            kernel=weights.hsic_kernel, samples=weights.hsic_samples)
        l_fa = fa.item()
        total = T.add(total, T.mul(fa, Tensor(weights.lambda2)))

    l_ab = 0.0
    if weights.lambda3 > 0:
        if weights.variant == "bt":
            if emb.z is None or emb.z_pos is None:
                raise ConfigError("bt variant needs g3 outputs z and z+")
            ab = barlow_twins_loss(emb.z, emb.z_pos, weights.beta)
        else:
            ab = mse_abs_loss(emb.y, emb.y_pos)
        l_ab = ab.item()
        total = T.add(total, T.mul(ab, Tensor(weights.lambda3)))

    report = LossReport(l_se=l_se, l_fa=l_fa, l_ma=l_ma, l_ab=l_ab,
                        total=total.item())
    return report, total
