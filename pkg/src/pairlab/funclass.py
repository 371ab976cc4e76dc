"""Representation model classes and closed-form explicit constructions.

Four classes of functions from vertex coordinates to R^k:

  tabular  one free output vector per vertex (the universal class),
  linear   f(x) = U x,
  relu     f(x) = sigma(U x + b), elementwise max(0, .),
  conv     f(x)_i = sum_t sigma(u_i . x_{t:t+s-1} + b_i), circular windows.

Models are value types: a class tag, a shape descriptor, and a flat float64
parameter vector.  `forward` evaluates on a graph's vertex set, and
`grad_params` is the exact adjoint (the gradient of <forward, cotangent>).

The closed-form constructions verify their own output semantics on every
vertex before returning; displayed bias constants are checked and, if they
fail, re-solved from the semantics (the model's `meta` records which).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .errors import (
    ConstructionVerificationFailed,
    DimensionMismatch,
    SpecMismatch,
    TooManyOutputs,
    UnknownClass,
)
from .posgraph import PositivePairGraph
from .spectral import pair_discrepancy
from .synthdata import Example1Spec, Example4Spec, example1_graph, example4_graph

_VERIFY_TOL = 1e-9   # relative tolerance for construction output checks

CLASS_TAGS = ("tabular", "linear", "relu", "conv")


@dataclass(frozen=True)
class RepresentationModel:
    class_tag: str
    shape: Dict[str, int]
    params: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.shape["k"]

    def with_params(self, params: np.ndarray) -> "RepresentationModel":
        return RepresentationModel(
            class_tag=self.class_tag,
            shape=dict(self.shape),
            params=np.asarray(params, dtype=np.float64).copy(),
            meta=dict(self.meta),
        )


@dataclass(frozen=True)
class FunctionClassSpec:
    """Structural description of a class: tag plus dimensions.

    `d` is the ambient coordinate dimension (ignored by tabular, which
    instead needs `n`), `s` the conv window length, `lipschitz_kappa` an
    optional declared Lipschitz budget used by verification reports.
    """

    class_tag: str
    k: int
    d: int = 0
    n: int = 0
    s: int = 0
    lipschitz_kappa: Optional[float] = None

    def __post_init__(self):
        if self.class_tag not in CLASS_TAGS:
            raise UnknownClass(f"unknown class tag {self.class_tag!r}")
        if self.k < 1:
            raise DimensionMismatch("k must be >= 1")
        if self.class_tag == "conv" and not (1 <= self.s <= self.d):
            raise DimensionMismatch("conv needs 1 <= s <= d")

    def param_count(self) -> int:
        if self.class_tag == "tabular":
            return self.n * self.k
        if self.class_tag == "linear":
            return self.k * self.d
        if self.class_tag == "relu":
            return self.k * self.d + self.k
        return self.k * self.s + self.k

    def shape_dict(self) -> Dict[str, int]:
        if self.class_tag == "tabular":
            return {"n": self.n, "k": self.k}
        if self.class_tag == "linear":
            return {"k": self.k, "d": self.d}
        if self.class_tag == "relu":
            return {"k": self.k, "d": self.d}
        return {"k": self.k, "d": self.d, "s": self.s}

    def model(self, params) -> RepresentationModel:
        params = np.asarray(params, dtype=np.float64).ravel()
        if params.size != self.param_count():
            raise DimensionMismatch(
                f"{self.class_tag} expects {self.param_count()} params, got {params.size}"
            )
        return RepresentationModel(
            class_tag=self.class_tag, shape=self.shape_dict(), params=params
        )

    def init_model(self, rng: np.random.Generator, scale: float = 0.1) -> RepresentationModel:
        return self.model(rng.uniform(-scale, scale, size=self.param_count()))


def spec_for_graph(class_tag: str, k: int, graph: PositivePairGraph, s: int = 0,
                   lipschitz_kappa: Optional[float] = None) -> FunctionClassSpec:
    return FunctionClassSpec(
        class_tag=class_tag, k=k, d=graph.d, n=graph.n, s=s,
        lipschitz_kappa=lipschitz_kappa,
    )


def _unpack(model: RepresentationModel):
    tag, shape, p = model.class_tag, model.shape, model.params
    if tag == "tabular":
        return (p.reshape(shape["n"], shape["k"]),)
    if tag == "linear":
        return (p.reshape(shape["k"], shape["d"]),)
    if tag == "relu":
        k, d = shape["k"], shape["d"]
        return p[: k * d].reshape(k, d), p[k * d:]
    if tag == "conv":
        k, s = shape["k"], shape["s"]
        return p[: k * s].reshape(k, s), p[k * s:]
    raise UnknownClass(f"unknown class tag {tag!r}")


def _window_index(d: int, s: int) -> np.ndarray:
    return (np.arange(d)[:, None] + np.arange(s)[None, :]) % d


def _check_dims(model: RepresentationModel, graph: PositivePairGraph) -> None:
    if model.class_tag == "tabular":
        if model.shape["n"] != graph.n:
            raise DimensionMismatch(
                f"tabular model for n={model.shape['n']} evaluated on n={graph.n}"
            )
    elif model.shape.get("d", graph.d) != graph.d:
        raise DimensionMismatch(
            f"model d={model.shape['d']} vs graph d={graph.d}"
        )


def forward(model: RepresentationModel, graph: PositivePairGraph) -> np.ndarray:
    """n x k representation matrix of the model on the graph's vertices."""
    _check_dims(model, graph)
    X = graph.vertices
    tag = model.class_tag
    if tag == "tabular":
        (F,) = _unpack(model)
        return F.copy()
    if tag == "linear":
        (U,) = _unpack(model)
        return X @ U.T
    if tag == "relu":
        U, b = _unpack(model)
        return np.maximum(X @ U.T + b, 0.0)
    U, b = _unpack(model)
    windows = X[:, _window_index(graph.d, model.shape["s"])]   # (n, d, s)
    pre = np.einsum("nts,ks->ntk", windows, U) + b
    return np.maximum(pre, 0.0).sum(axis=1)


def grad_params(model: RepresentationModel, graph: PositivePairGraph,
                cotangent: np.ndarray) -> np.ndarray:
    """Gradient of <forward(model, graph), cotangent> in the flat params.

    The ReLU subgradient at exactly 0 is taken to be 0.
    """
    _check_dims(model, graph)
    C = np.asarray(cotangent, dtype=np.float64)
    if C.shape != (graph.n, model.k):
        raise DimensionMismatch(
            f"cotangent shape {C.shape}, expected {(graph.n, model.k)}"
        )
    X = graph.vertices
    tag = model.class_tag
    if tag == "tabular":
        return C.ravel().copy()
    if tag == "linear":
        return (C.T @ X).ravel()
    if tag == "relu":
        U, b = _unpack(model)
        pre = X @ U.T + b
        G = C * (pre > 0.0)
        return np.concatenate([(G.T @ X).ravel(), G.sum(axis=0)])
    U, b = _unpack(model)
    windows = X[:, _window_index(graph.d, model.shape["s"])]
    pre = np.einsum("nts,ks->ntk", windows, U) + b
    G = C[:, None, :] * (pre > 0.0)
    dU = np.einsum("ntk,nts->ks", G, windows)
    return np.concatenate([dU.ravel(), G.sum(axis=(0, 1))])


def lipschitz_constant(model: RepresentationModel, graph: PositivePairGraph) -> float:
    """max over distinct vertex pairs of ||f(x)-f(x')|| / ||x-x'||.

    A lower bound on any ambient Lipschitz constant; on finite supports it
    is the exact modulus the theorems consume.
    """
    F = forward(model, graph)
    best = 0.0
    step = 1024
    for lo in range(0, graph.n, step):
        hi = min(lo + step, graph.n)
        dx = cdist(graph.vertices[lo:hi], graph.vertices)
        df = cdist(F[lo:hi], F)
        np.fill_diagonal(dx[:, lo:hi], np.inf)
        ratio = df / dx
        best = max(best, float(np.nanmax(ratio)))
    return best


# ---------------------------------------------------------------------------
# closed-form constructions


def _bin_index(signs: Sequence[float]) -> int:
    """Sign pattern -> integer, first coordinate most significant,
    positive = 1 bit."""
    idx = 0
    for v in signs:
        idx = (idx << 1) | (1 if v > 0 else 0)
    return idx


def _pattern_of(index: int, bits: int) -> np.ndarray:
    """Inverse of _bin_index as a +-1 vector."""
    return np.array([1.0 if (index >> (bits - 1 - j)) & 1 else -1.0
                     for j in range(bits)])


def construct_example1_optimal(spec: Example1Spec, k: Optional[int] = None) -> RepresentationModel:
    """Linear projection onto the invariant block: rows e_1..e_s.

    On the matching hypercube graph this has pair discrepancy 0 and
    representation covariance exactly I, hence loss 0 for every lambda.
    """
    if k is not None and k != spec.s:
        raise SpecMismatch(f"construction needs k = s = {spec.s}, got k={k}")
    U = np.zeros((spec.s, spec.d))
    U[np.arange(spec.s), np.arange(spec.s)] = 1.0
    model = RepresentationModel(
        class_tag="linear", shape={"k": spec.s, "d": spec.d}, params=U.ravel(),
        meta={"construction": "invariant-block projection"},
    )
    return model


def _verify_onehot_outputs(F: np.ndarray, target_idx: np.ndarray, scale: float):
    """Index of the first vertex whose output row differs from
    scale * e_{target_idx}, or None."""
    n, k = F.shape
    target = np.zeros((n, k))
    target[np.arange(n), target_idx] = scale
    bad = np.nonzero(np.max(np.abs(F - target), axis=1) > _VERIFY_TOL * scale)[0]
    return int(bad[0]) if bad.size else None


def construct_example2_optimal(
    spec: Example1Spec, graph: Optional[PositivePairGraph] = None,
    k: Optional[int] = None,
) -> RepresentationModel:
    """ReLU network computing sqrt(k) * one-hot(sign pattern of x_{1:s}).

    Row i has weights sqrt(k) * (the i-th sign pattern) on the first s
    coordinates.  The displayed bias -sqrt(k)(s-1) is verified on every
    vertex; if verification fails the bias is re-solved from the one-hot
    semantics (meta["bias_source"] records which path ran).
    """
    s = spec.s
    want_k = 2 ** s
    if k is not None and k != want_k:
        raise SpecMismatch(f"construction needs k = 2^s = {want_k}, got k={k}")
    if graph is None:
        graph = example1_graph(spec).graph
    scale = np.sqrt(want_k)

    U = np.zeros((want_k, spec.d))
    for i in range(want_k):
        U[i, :s] = scale * _pattern_of(i, s)
    bias_displayed = -scale * (s - 1)

    X = graph.vertices
    target_idx = np.array([_bin_index(x[:s]) for x in X])

    def build(bias_vec):
        params = np.concatenate([U.ravel(), bias_vec])
        return RepresentationModel(
            class_tag="relu", shape={"k": want_k, "d": spec.d}, params=params,
        )

    model = build(np.full(want_k, bias_displayed))
    bad = _verify_onehot_outputs(forward(model, graph), target_idx, scale)
    source = "displayed"
    if bad is not None:
        # solve per unit: bias = scale - (pre-activation on matching inputs),
        # then re-check that non-matching inputs stay non-positive
        pre = X @ U.T
        bias = np.empty(want_k)
        for i in range(want_k):
            match = target_idx == i
            if not match.any():
                raise ConstructionVerificationFailed(
                    f"no vertex realizes sign pattern {i}"
                )
            bias[i] = scale - float(pre[match, i].max())
        model = build(bias)
        bad = _verify_onehot_outputs(forward(model, graph), target_idx, scale)
        source = "solved"
        if bad is not None:
            raise ConstructionVerificationFailed(
                f"one-hot semantics fail at vertex {bad}"
            )
    return RepresentationModel(
        class_tag=model.class_tag, shape=model.shape, params=model.params,
        meta={"bias_source": source},
    )


def _patch_location(x: np.ndarray, d: int, s: int) -> int:
    """Start index of the unique length-s circular window holding the
    above-unit-magnitude patch entries."""
    positions = set(np.flatnonzero(np.abs(x) > 1.0).tolist())
    if len(positions) != s:
        raise SpecMismatch(
            f"vertex has {len(positions)} patch-magnitude entries, expected {s}"
        )
    for t in range(d):
        if all(((t + j) % d) in positions for j in range(s)):
            return t
    raise SpecMismatch("patch entries are not circularly consecutive")


def construct_example4_optimal(
    spec: Example4Spec, graph: Optional[PositivePairGraph] = None,
    k: Optional[int] = None,
) -> RepresentationModel:
    """Convolutional network computing sqrt(k) * one-hot(patch pattern).

    Filter i is (sqrt(k)/(gamma-1)) times the i-th sign pattern; the
    displayed bias makes the aligned matching window output sqrt(k) and
    every other window non-positive (worst case exactly 0).  Verified on
    every vertex; bias re-solved if the displayed constant fails.
    """
    s, d, gamma = spec.s, spec.d, spec.gamma
    want_k = 2 ** s
    if k is not None and k != want_k:
        raise SpecMismatch(f"construction needs k = 2^s = {want_k}, got k={k}")
    if graph is None:
        graph = example4_graph(spec).graph
    scale = np.sqrt(want_k)
    a = scale / (gamma - 1.0)

    U = np.empty((want_k, s))
    for i in range(want_k):
        U[i] = a * _pattern_of(i, s)
    bias_displayed = -a * (gamma * (s - 1) + 1.0)

    X = graph.vertices
    widx = _window_index(d, s)
    target_idx = np.empty(graph.n, dtype=np.int64)
    for v, x in enumerate(X):
        t = _patch_location(x, d, s)
        target_idx[v] = _bin_index(x[widx[t]])

    def build(bias_vec):
        params = np.concatenate([U.ravel(), bias_vec])
        return RepresentationModel(
            class_tag="conv", shape={"k": want_k, "d": d, "s": s}, params=params,
        )

    model = build(np.full(want_k, bias_displayed))
    bad = _verify_onehot_outputs(forward(model, graph), target_idx, scale)
    source = "displayed"
    if bad is not None:
        windows = X[:, widx]
        pre = np.einsum("nts,ks->ntk", windows, U)
        bias = np.empty(want_k)
        for i in range(want_k):
            match = target_idx == i
            if not match.any():
                raise ConstructionVerificationFailed(
                    f"no vertex realizes patch pattern {i}"
                )
            # the matching window must land exactly at scale
            aligned = []
            for v in np.flatnonzero(match):
                t = _patch_location(X[v], d, s)
                aligned.append(pre[v, t, i])
            bias[i] = scale - float(np.max(aligned))
        model = build(bias)
        bad = _verify_onehot_outputs(forward(model, graph), target_idx, scale)
        source = "solved"
        if bad is not None:
            raise ConstructionVerificationFailed(
                f"one-hot patch semantics fail at vertex {bad}"
            )
    return RepresentationModel(
        class_tag=model.class_tag, shape=model.shape, params=model.params,
        meta={"bias_source": source},
    )


def construct_adversarial_universal(
    graph: PositivePairGraph, k: int, key_dims: Sequence[int]
) -> RepresentationModel:
    """Tabular minimizer that is measurable w.r.t. the key coordinates only.

    Vertices are grouped by the sign pattern of `key_dims` (positive = 1
    bit, first key dim most significant).  The k lowest-indexed occurring
    groups are mapped to (1/sqrt(group mass)) * e_j; remaining groups map
    to the zero vector.  Either way the representation covariance is
    exactly I and, provided components refine the grouping, the pair term
    vanishes — so the loss is 0 while the output ignores every coordinate
    outside key_dims.
    """
    key = np.asarray(key_dims, dtype=np.int64)
    if key.size == 0 or key.min() < 0 or key.max() >= graph.d:
        raise DimensionMismatch(f"bad key dims {key_dims!r} for d={graph.d}")

    signs = graph.vertices[:, key] > 0
    weights = 1 << np.arange(key.size - 1, -1, -1)
    group_of = signs @ weights

    present = np.unique(group_of)
    if k > present.size:
        raise TooManyOutputs(
            f"k={k} exceeds {present.size} occurring key patterns"
        )

    # positive pairs must never straddle groups, else the pair term
    # would not vanish and the construction would not be a minimizer
    rows, cols, vals = graph.joint_coo()
    straddle = (group_of[rows] != group_of[cols]) & (vals > 0)
    if straddle.any():
        a = int(rows[np.argmax(straddle)])
        raise SpecMismatch(
            f"components do not refine key patterns (edge at vertex {a})"
        )

    F = np.zeros((graph.n, k))
    for j, gval in enumerate(present[:k]):
        members = group_of == gval
        mass = float(graph.marginal[members].sum())
        F[members, j] = 1.0 / np.sqrt(mass)

    return RepresentationModel(
        class_tag="tabular", shape={"n": graph.n, "k": k}, params=F.ravel(),
        meta={"key_dims": [int(x) for x in key],
              "represented_groups": [int(g) for g in present[:k]]},
    )


def construct_adversarial_zero_mapping(graph: PositivePairGraph, k: int) -> RepresentationModel:
    """Tabular minimizer indicating the k smallest-mass components.

    Components are ranked by marginal mass (ties by component id); the k
    lightest get (1/sqrt(mass)) * e_j outputs, all heavier components map
    to zero.  Loss is 0; any head must predict 0 on the dropped mass.
    """
    from .posgraph import connected_components

    part = connected_components(graph)
    masses = part.masses(graph)
    if k > part.n_sets:
        raise TooManyOutputs(f"k={k} exceeds {part.n_sets} components")
    order = np.lexsort((np.arange(part.n_sets), masses))
    chosen = order[:k]
    F = np.zeros((graph.n, k))
    for j, comp in enumerate(chosen):
        members = part.labels == comp
        F[members, j] = 1.0 / np.sqrt(float(masses[comp]))
    return RepresentationModel(
        class_tag="tabular", shape={"n": graph.n, "k": k}, params=F.ravel(),
        meta={"represented_components": [int(c) for c in chosen]},
    )


def construct_example4_adversarial_relu(
    spec: Example4Spec, k: int, graph: Optional[PositivePairGraph] = None,
) -> RepresentationModel:
    """Derived ReLU-class zero-loss model indicating k (location, patch)
    clusters (the first k in lexicographic (t, pattern) order).

    Unit j for cluster (t, pattern): weights a * pattern on the window at
    t, bias -a(gamma(s-1)+1) with a = sqrt(C)/(gamma-1) and C = d*2^s the
    cluster count, so vertices of that cluster output sqrt(C) and every
    other vertex outputs 0.  Vertices of unrepresented clusters map to the
    zero vector.  Verified exhaustively.
    """
    s, d, gamma = spec.s, spec.d, spec.gamma
    n_clusters = d * (2 ** s)
    if k > n_clusters:
        raise TooManyOutputs(f"k={k} exceeds {n_clusters} clusters")
    if graph is None:
        graph = example4_graph(spec).graph

    scale = np.sqrt(n_clusters)
    a = scale / (gamma - 1.0)
    widx = _window_index(d, s)

    U = np.zeros((k, d))
    bias = np.full(k, -a * (gamma * (s - 1) + 1.0))
    units = list(itertools.product(range(d), range(2 ** s)))[:k]
    for j, (t, pat) in enumerate(units):
        U[j, widx[t]] = a * _pattern_of(pat, s)

    model = RepresentationModel(
        class_tag="relu", shape={"k": k, "d": d}, params=np.concatenate([U.ravel(), bias]),
        meta={"represented_clusters": [[int(t), int(p)] for t, p in units],
              "cluster_count": n_clusters},
    )

    # verification: sqrt(C) one-hot on represented clusters, zero elsewhere
    X = graph.vertices
    target = np.zeros((graph.n, k))
    unit_of = {tp: j for j, tp in enumerate(units)}
    for v, x in enumerate(X):
        t = _patch_location(x, d, s)
        key = (t, _bin_index(x[widx[t]]))
        if key in unit_of:
            target[v, unit_of[key]] = scale
    F = forward(model, graph)
    gap = np.max(np.abs(F - target))
    if gap > _VERIFY_TOL * scale:
        bad = int(np.argmax(np.max(np.abs(F - target), axis=1)))
        raise ConstructionVerificationFailed(
            f"cluster indicator semantics fail at vertex {bad} (gap {gap:.3e})"
        )
    return model


# ---------------------------------------------------------------------------
# serialization


def model_to_dict(model: RepresentationModel) -> dict:
    return {
        "class": model.class_tag,
        "shape": {key: int(v) for key, v in model.shape.items()},
        "params": [float(x) for x in model.params],
        "meta": model.meta,
    }


def model_from_dict(doc: dict) -> RepresentationModel:
    tag = doc["class"]
    if tag not in CLASS_TAGS:
        raise UnknownClass(f"unknown class tag {tag!r}")
    return RepresentationModel(
        class_tag=tag,
        shape={key: int(v) for key, v in doc["shape"].items()},
        params=np.asarray(doc["params"], dtype=np.float64),
        meta=doc.get("meta", {}),
    )


def save_model(model: RepresentationModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> RepresentationModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def zero_loss_certificate(model: RepresentationModel, graph: PositivePairGraph,
                          lam: float = 1.0) -> dict:
    """Convenience: the two loss pieces of a claimed minimizer."""
    F = forward(model, graph)
    cov = F.T @ (F * graph.marginal[:, None])
    reg = float(np.sum((cov - np.eye(model.k)) ** 2))
    pair = pair_discrepancy(graph, F)
    return {"pair": pair, "reg": reg, "loss": pair + lam * reg}
