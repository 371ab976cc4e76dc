"""The contrastive objective: losses, training, oracles, whitening.

The population loss of a representation f with matrix F (rows f(x)) is

    L_lam(F) = sum_{x,x'} p_pos(x,x') ||f(x)-f(x')||^2
               + lam * || F^T D F - I ||_F^2,          D = diag(marginal)

and the empirical variant replaces both expectations with averages over a
drawn pair sample.  Training is deterministic full-batch gradient descent
(optional heavy-ball momentum, step halving on loss increases, multi-start
for the nonconvex classes).

Closed-form minimizers: for the tabular class the loss decouples along the
eigenfunctions of the pair operator, giving an exact per-direction scalar
problem; for the linear class the same happens after whitening coordinates.
These are the oracles the trained route is checked against.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import (
    Divergence,
    EmptySample,
    NonFiniteGradient,
    SingularCovariance,
)
from .funclass import (
    FunctionClassSpec,
    RepresentationModel,
    forward,
    grad_params,
)
from .posgraph import PositivePairGraph
from .spectral import eigendecompose

_DIVERGENCE_LIMIT = 1e12
_COV_FLOOR = 1e-12        # eigenvalue floor for covariance square roots
_WHITEN_MIN_EIG = 1e-10   # below this, whitening refuses


@dataclass(frozen=True)
class LossReport:
    total: float
    pair_term: float
    reg_term: float   # pre-lambda
    lam: float


@dataclass(frozen=True)
class PairSample:
    """Positive pairs drawn from the joint: rows (i, j) of vertex indices."""

    pairs: np.ndarray

    @property
    def n_pre(self) -> int:
        return self.pairs.shape[0]


def sample_pairs(graph: PositivePairGraph, n_pre: int, seed: int = 0) -> PairSample:
    """Draw n_pre ordered pairs exactly from the joint distribution."""
    if n_pre < 1:
        raise EmptySample("n_pre must be >= 1")
    rows, cols, vals = graph.joint_coo()
    p = vals / vals.sum()
    rng = np.random.default_rng(seed)
    idx = rng.choice(vals.size, size=n_pre, p=p)
    return PairSample(pairs=np.stack([rows[idx], cols[idx]], axis=1).astype(np.int64))


# ---------------------------------------------------------------------------
# losses and their representation-space gradients


def _loss_pieces_population(graph: PositivePairGraph, F: np.ndarray, lam: float):
    d = graph.marginal
    JF = graph.joint_matvec(F)
    pair = 2.0 * float(np.sum(d * np.einsum("ij,ij->i", F, F)) - np.sum(F * JF))
    cov = F.T @ (F * d[:, None])
    gap = cov - np.eye(F.shape[1])
    reg = float(np.sum(gap * gap))
    cot = 4.0 * (d[:, None] * F - JF) + (4.0 * lam) * (d[:, None] * (F @ gap))
    return max(pair, 0.0), reg, cot


def _loss_pieces_empirical(sample: PairSample, F: np.ndarray, lam: float,
                           use_sum_regularizer: bool):
    n_pre = sample.n_pre
    i, j = sample.pairs[:, 0], sample.pairs[:, 1]
    diff = F[i] - F[j]
    pair = float(np.sum(diff * diff)) / n_pre

    # first elements of the pairs carry the covariance estimate
    w = np.bincount(i, minlength=F.shape[0]).astype(np.float64)
    if use_sum_regularizer:
        weights = w
    else:
        weights = w / n_pre
    cov = F.T @ (F * weights[:, None])
    gap = cov - np.eye(F.shape[1])
    reg = float(np.sum(gap * gap))

    cot = np.zeros_like(F)
    np.add.at(cot, i, (2.0 / n_pre) * diff)
    np.add.at(cot, j, -(2.0 / n_pre) * diff)
    cot += (4.0 * lam) * (weights[:, None] * (F @ gap))
    return pair, reg, cot


def population_loss(graph: PositivePairGraph, model: RepresentationModel,
                    lam: float) -> LossReport:
    F = forward(model, graph)
    pair, reg, _ = _loss_pieces_population(graph, F, lam)
    return LossReport(total=pair + lam * reg, pair_term=pair, reg_term=reg, lam=lam)


def empirical_loss(sample: PairSample, graph: PositivePairGraph,
                   model: RepresentationModel, lam: float,
                   use_sum_regularizer: bool = False) -> LossReport:
    """Sampled loss.  The regularizer uses the mean (1/n_pre) sum f f^T by
    default; `use_sum_regularizer=True` switches to the raw sum."""
    if sample.n_pre == 0:
        raise EmptySample("empirical loss over zero pairs")
    if sample.pairs.min() < 0 or sample.pairs.max() >= graph.n:
        raise IndexError("pair sample indices out of range")
    F = forward(model, graph)
    pair, reg, _ = _loss_pieces_empirical(sample, F, lam, use_sum_regularizer)
    return LossReport(total=pair + lam * reg, pair_term=pair, reg_term=reg, lam=lam)


def loss_gradient(graph: PositivePairGraph, model: RepresentationModel,
                  lam: float, sample: Optional[PairSample] = None,
                  use_sum_regularizer: bool = False):
    """(LossReport, flat parameter gradient) for population or sampled loss."""
    F = forward(model, graph)
    if sample is None:
        pair, reg, cot = _loss_pieces_population(graph, F, lam)
    else:
        pair, reg, cot = _loss_pieces_empirical(sample, F, lam, use_sum_regularizer)
    grad = grad_params(model, graph, cot)
    report = LossReport(total=pair + lam * reg, pair_term=pair, reg_term=reg, lam=lam)
    return report, grad


# ---------------------------------------------------------------------------
# training


@dataclass(frozen=True)
class TrainConfig:
    step_size: float = 0.5
    max_iters: int = 4000
    seed: int = 0
    init_scale: float = 0.1
    tol: float = 1e-13          # relative loss-delta convergence threshold
    momentum: float = 0.9       # 0 disables
    n_starts: Optional[int] = None   # default: 5 for relu/conv, 1 otherwise
    use_sum_regularizer: bool = False
    min_step: float = 1e-18

    def __post_init__(self):
        if self.step_size <= 0 or self.max_iters < 1:
            raise ValueError("need positive step size and max_iters >= 1")


def _default_starts(class_tag: str) -> int:
    return 5 if class_tag in ("relu", "conv") else 1


def _gd_single(graph, class_spec, lam, config, params0, sample):
    model = class_spec.model(params0)
    report, grad = loss_gradient(graph, model, lam, sample,
                                 config.use_sum_regularizer)
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradient("non-finite gradient at initialization")
    params = np.asarray(params0, dtype=np.float64).copy()
    vel = np.zeros_like(params)
    step = config.step_size
    loss = report.total
    best_params = params.copy()
    best_loss = loss
    trace = [(0, report.pair_term, report.reg_term, report.total)]
    flat_count = 0
    accepts = 0

    for it in range(1, config.max_iters + 1):
        if config.momentum > 0:
            vel = config.momentum * vel - step * grad
            cand = params + vel
        else:
            cand = params - step * grad
        cmodel = class_spec.model(cand)
        creport, cgrad = loss_gradient(graph, cmodel, lam, sample,
                                       config.use_sum_regularizer)
        if not np.all(np.isfinite(cgrad)) or not np.isfinite(creport.total):
            raise NonFiniteGradient(f"non-finite gradient at iteration {it}")
        if creport.total > _DIVERGENCE_LIMIT:
            raise Divergence(f"loss {creport.total!r} at iteration {it}")

        if creport.total <= loss:
            delta = loss - creport.total
            params, grad = cand, cgrad
            loss = creport.total
            trace.append((it, creport.pair_term, creport.reg_term, creport.total))
            if loss < best_loss:
                best_loss = loss
                best_params = params.copy()
            accepts += 1
            if accepts % 50 == 0:
                step = min(step * 1.2, config.step_size * 16)
            if delta <= config.tol * max(1.0, abs(loss)):
                flat_count += 1
                if flat_count >= 5:
                    break
            else:
                flat_count = 0
        else:
            step *= 0.5
            vel[:] = 0.0
            accepts = 0
            if step < config.min_step:
                break
    return class_spec.model(best_params), best_loss, trace


def train(
    graph: PositivePairGraph,
    class_spec: FunctionClassSpec,
    lam: float,
    config: Optional[TrainConfig] = None,
    sample: Optional[PairSample] = None,
    extra_inits: Sequence[RepresentationModel] = (),
) -> Tuple[RepresentationModel, List[Tuple[int, float, float, float]]]:
    """Minimize the loss by deterministic full-batch gradient descent.

    Population loss on the graph by default; pass `sample` for the
    empirical loss.  Runs `n_starts` seeded random initializations (plus
    any `extra_inits` as given starting points) and returns the best-loss
    iterate with its accepted-step trace (iter, pair, reg, total).
    """
    config = config or TrainConfig()
    n_starts = config.n_starts or _default_starts(class_spec.class_tag)

    best = None
    for start in range(n_starts):
        rng = np.random.default_rng([config.seed, start])
        params0 = rng.uniform(-config.init_scale, config.init_scale,
                              size=class_spec.param_count())
        result = _gd_single(graph, class_spec, lam, config, params0, sample)
        if best is None or result[1] < best[1]:
            best = result
    for init_model in extra_inits:
        if init_model.class_tag != class_spec.class_tag:
            raise ValueError("extra_inits must match the trained class")
        result = _gd_single(graph, class_spec, lam, config,
                            init_model.params, sample)
        if best is None or result[1] < best[1]:
            best = result
    model, _, trace = best
    return model, trace


def save_trace(trace, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "pair_term", "reg_term", "total"])
        for row in trace:
            writer.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3])])


# ---------------------------------------------------------------------------
# analytic minimizers (oracles)


def tabular_min_oracle(graph: PositivePairGraph, k: int, lam: float):
    """Exact minimum of the population loss over all tabular models.

    In symmetrized coordinates the loss decouples along eigenpairs of the
    pair operator: each of the k output directions aligned with eigenvalue
    psi contributes min(lam, 2 psi - psi^2 / lam), attained by the
    eigenfunction scaled by c with c^2 = max(0, 1 - psi/lam).
    Returns (min_loss, minimizing tabular model).
    """
    dec = eigendecompose(graph, k)
    psi = dec.eigenvalues
    c_sq = np.maximum(0.0, 1.0 - psi / lam)
    contrib = np.where(psi <= lam, 2.0 * psi - psi * psi / lam,
                       np.full_like(psi, lam))
    F = dec.functions * np.sqrt(c_sq)[None, :]
    model = RepresentationModel(
        class_tag="tabular", shape={"n": graph.n, "k": k}, params=F.ravel(),
        meta={"oracle": "per-direction spectral minimization"},
    )
    return float(np.sum(contrib)), model


def linear_min_oracle(graph: PositivePairGraph, k: int, lam: float):
    """Exact minimum of the population loss over linear models f = Ux.

    With Sigma = E[x x^T] and A = E_pos[(x-x+)(x-x+)^T], substituting
    V = U Sigma^{1/2} decouples the loss along the eigenvalues mu of
    Sigma^{-1/2} A Sigma^{-1/2} (on the range of Sigma): each direction
    contributes mu - mu^2/(4 lam) when mu <= 2 lam, else lam; output
    directions beyond rank(Sigma) contribute lam each.
    """
    X = graph.vertices
    d_w = graph.marginal
    Sigma = X.T @ (X * d_w[:, None])
    JX = graph.joint_matvec(X)
    A = 2.0 * (X.T @ (X * d_w[:, None]) - X.T @ JX)

    evals, evecs = scipy.linalg.eigh(Sigma)
    keep = evals > max(evals.max(), 1.0) * _COV_FLOOR
    rank = int(keep.sum())
    T = evecs[:, keep] / np.sqrt(evals[keep])[None, :]
    M = T.T @ A @ T
    M = (M + M.T) * 0.5
    mu, V = scipy.linalg.eigh(M)
    mu = np.maximum(mu, 0.0)

    use = min(k, rank)
    contrib = []
    U = np.zeros((k, X.shape[1]))
    for i in range(use):
        m_i = mu[i]
        if m_i <= 2.0 * lam:
            contrib.append(m_i - m_i * m_i / (4.0 * lam))
            c = np.sqrt(1.0 - m_i / (2.0 * lam))
        else:
            contrib.append(lam)
            c = 0.0
        U[i] = c * (T @ V[:, i])
    total = float(np.sum(contrib)) + lam * max(0, k - rank)
    model = RepresentationModel(
        class_tag="linear", shape={"k": k, "d": X.shape[1]}, params=U.ravel(),
        meta={"oracle": "whitened-pencil minimization", "rank": rank},
    )
    return total, model


# ---------------------------------------------------------------------------
# whitening


def whiten(graph: PositivePairGraph, model: RepresentationModel) -> np.ndarray:
    """Representation matrix rescaled to covariance exactly I/k.

    f_bar(x) = E[f f^T]^{-1/2} f(x) / sqrt(k).  Raises SingularCovariance
    when the smallest covariance eigenvalue is at or below 1e-10.
    """
    F = forward(model, graph)
    k = F.shape[1]
    cov = F.T @ (F * graph.marginal[:, None])
    evals, evecs = scipy.linalg.eigh(cov)
    if evals.min() <= _WHITEN_MIN_EIG:
        raise SingularCovariance(
            f"covariance eigenvalue {evals.min()!r} too small to whiten"
        )
    inv_sqrt = evecs @ ((1.0 / np.sqrt(evals))[:, None] * evecs.T)
    return (F @ inv_sqrt) / np.sqrt(k)
