"""Finite positive-pair graphs.

A positive-pair graph is the basic object everything else consumes: a finite
vertex set with coordinates, a symmetric joint distribution over ordered
vertex pairs (the chance of drawing that pair as a positive pair), and the
induced marginal.  The joint sums to 1 over all ordered pairs, so the
marginal is exactly the vector of row sums.

Graphs with at most `_DENSE_LIMIT` vertices store the joint densely; larger
graphs use a scipy CSR matrix.  Either way the stored object satisfies the
invariants to machine precision: inputs are validated against loose
tolerances, then symmetrized and renormalized exactly once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np
from scipy import sparse

from .errors import (
    AsymmetricJoint,
    DuplicateVertex,
    EmptySubset,
    EmptySupport,
    KernelNotNormalized,
    MalformedGraphFile,
    NotNormalized,
    ZeroConditionalMass,
    ZeroMassVertex,
)

_DENSE_LIMIT = 4096
_SUM_TOL = 1e-9          # acceptance tolerance for input normalization
_SYM_TOL = 1e-9          # acceptance tolerance for input symmetry
_CONSISTENCY_TOL = 1e-12  # stored marginal vs row sums


def _canonical_coords(vertices) -> np.ndarray:
    """Float64 coordinates with -0.0 folded into +0.0 (stable hashing)."""
    arr = np.asarray(vertices, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"vertices must be 2-d, got shape {arr.shape}")
    return arr + 0.0


def _check_distinct(vertices: np.ndarray) -> None:
    seen = {}
    for i, row in enumerate(vertices):
        key = row.tobytes()
        if key in seen:
            raise DuplicateVertex(
                f"vertices {seen[key]} and {i} have identical coordinates"
            )
        seen[key] = i


@dataclass(frozen=True)
class PositivePairGraph:
    """Finite symmetric pair distribution with vertex coordinates.

    Attributes
    ----------
    vertices : (n, d) float64 array of coordinates, pairwise distinct.
    joint    : (n, n) symmetric nonnegative matrix summing to 1
               (dense ndarray, or CSR for graphs above the dense limit).
    marginal : (n,) row sums of the joint; strictly positive.
    """

    vertices: np.ndarray
    joint: object
    marginal: np.ndarray

    @property
    def n(self) -> int:
        return self.vertices.shape[0]

    @property
    def d(self) -> int:
        return self.vertices.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.joint)

    def joint_coo(self):
        """Edge triplets (rows, cols, vals) of the joint, any order."""
        if self.is_sparse:
            coo = self.joint.tocoo()
            return coo.row, coo.col, coo.data
        rows, cols = np.nonzero(self.joint)
        return rows, cols, np.asarray(self.joint)[rows, cols]

    def joint_dense(self) -> np.ndarray:
        if self.is_sparse:
            return self.joint.toarray()
        return np.asarray(self.joint)

    def joint_matvec(self, g: np.ndarray) -> np.ndarray:
        """The action v ↦ Jv (works for dense and sparse storage)."""
        return self.joint @ g


def build_graph(vertices, joint) -> PositivePairGraph:
    """Validate and canonicalize a positive-pair graph.

    Raises AsymmetricJoint / NotNormalized / ZeroMassVertex / DuplicateVertex
    when the input is out of tolerance.  Accepted input is symmetrized and
    renormalized so the stored graph holds the invariants to ~1e-16.
    """
    verts = _canonical_coords(vertices)
    n = verts.shape[0]
    if n == 0:
        raise EmptySupport("graph needs at least one vertex")
    _check_distinct(verts)

    if sparse.issparse(joint):
        J = joint.tocsr().astype(np.float64)
        if J.shape != (n, n):
            raise ValueError(f"joint shape {J.shape} does not match n={n}")
        if J.nnz and J.data.min() < 0:
            raise NotNormalized("joint has negative entries")
        asym = abs(J - J.T)
        gap = asym.max() if asym.nnz else 0.0
        if gap > _SYM_TOL:
            raise AsymmetricJoint(f"max |J - J^T| = {gap:.3e}")
        total = J.sum()
        if abs(total - 1.0) > _SUM_TOL:
            raise NotNormalized(f"joint sums to {total!r}")
        J = (J + J.T) * (0.5 / total)
        marg = np.asarray(J.sum(axis=1)).ravel()
    else:
        J = np.array(joint, dtype=np.float64)
        if J.shape != (n, n):
            raise ValueError(f"joint shape {J.shape} does not match n={n}")
        if J.size and J.min() < 0:
            raise NotNormalized("joint has negative entries")
        gap = float(np.max(np.abs(J - J.T))) if J.size else 0.0
        if gap > _SYM_TOL:
            raise AsymmetricJoint(f"max |J - J^T| = {gap:.3e}")
        total = float(J.sum())
        if abs(total - 1.0) > _SUM_TOL:
            raise NotNormalized(f"joint sums to {total!r}")
        J = (J + J.T) * (0.5 / total)
        marg = J.sum(axis=1)

    if marg.min() <= 0.0:
        bad = int(np.argmin(marg))
        raise ZeroMassVertex(f"vertex {bad} has marginal {marg[bad]!r}")

    if n > _DENSE_LIMIT and not sparse.issparse(J):
        J = sparse.csr_array(J)
    if n <= _DENSE_LIMIT and sparse.issparse(J):
        J = J.toarray()

    return PositivePairGraph(vertices=verts, joint=J, marginal=marg)


def from_augmentation_process(natural_weights, kernel, vertices) -> PositivePairGraph:
    """Graph induced by augmenting naturals: J = Aᵀ diag(p) A.

    `natural_weights` is the distribution p over naturals (length m),
    `kernel` the m×n augmentation matrix with rows summing to 1 (row i is
    the augmentation distribution of natural i), and `vertices` the n
    coordinate rows of the augmented points.
    """
    p = np.asarray(natural_weights, dtype=np.float64).ravel()
    A = np.asarray(kernel, dtype=np.float64)
    if p.size == 0 or A.size == 0:
        raise EmptySupport("empty natural distribution or kernel")
    if A.ndim != 2 or A.shape[0] != p.size:
        raise ValueError(f"kernel shape {A.shape} does not match {p.size} naturals")
    if p.min() < 0:
        raise EmptySupport("natural weights must be nonnegative")
    total = float(p.sum())
    if total <= 0:
        raise EmptySupport("natural weights sum to zero")
    if abs(total - 1.0) > _SUM_TOL:
        raise NotNormalized(f"natural weights sum to {total!r}")
    if A.min() < 0:
        raise KernelNotNormalized("kernel has negative entries")
    row_sums = A.sum(axis=1)
    bad = np.abs(row_sums - 1.0) > _SUM_TOL
    if bad.any():
        i = int(np.argmax(np.abs(row_sums - 1.0)))
        raise KernelNotNormalized(f"kernel row {i} sums to {row_sums[i]!r}")

    joint = A.T @ (A * p[:, None])
    return build_graph(vertices, joint)


class UnionFind:
    """Disjoint-set forest with path compression and union by size."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


@dataclass(frozen=True)
class Partition:
    """A labeling of graph vertices into disjoint sets 0..n_sets-1."""

    labels: np.ndarray

    @property
    def n_sets(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def sets(self) -> List[np.ndarray]:
        return [np.flatnonzero(self.labels == c) for c in range(self.n_sets)]

    def masses(self, graph: PositivePairGraph) -> np.ndarray:
        """Marginal mass of each set."""
        out = np.zeros(self.n_sets)
        np.add.at(out, self.labels, graph.marginal)
        return out


def partition_from_labels(labels: Sequence[int]) -> Partition:
    """Partition from arbitrary hashable labels, ids by first occurrence."""
    labels = list(labels)
    ids = {}
    out = np.empty(len(labels), dtype=np.int64)
    for i, lab in enumerate(labels):
        if lab not in ids:
            ids[lab] = len(ids)
        out[i] = ids[lab]
    return Partition(labels=out)


def connected_components(graph: PositivePairGraph) -> Partition:
    """Components of the positive-pair edge set (entries with joint > 0).

    Component ids are assigned by smallest contained vertex index, so the
    component of vertex 0 always has id 0.
    """
    uf = UnionFind(graph.n)
    rows, cols, vals = graph.joint_coo()
    for i, j, v in zip(rows, cols, vals):
        if v > 0.0 and i != j:
            uf.union(int(i), int(j))
    labels = np.empty(graph.n, dtype=np.int64)
    ids = {}
    for v in range(graph.n):
        root = uf.find(v)
        if root not in ids:
            ids[root] = len(ids)
        labels[v] = ids[root]
    return Partition(labels=labels)


def cross_cluster_mass(graph: PositivePairGraph, partition: Partition) -> float:
    """Total joint mass on ordered pairs that straddle partition sets."""
    labels = np.asarray(partition.labels)
    if labels.shape != (graph.n,):
        raise ValueError("partition does not match graph size")
    rows, cols, vals = graph.joint_coo()
    cross = labels[rows] != labels[cols]
    return float(np.sum(vals[cross]))


def restrict(graph: PositivePairGraph, subset) -> PositivePairGraph:
    """Condition the pair distribution on both endpoints lying in `subset`.

    The result is a well-formed graph: its joint is the renormalized
    within-subset block and its marginal the block's row sums.  (Note this
    is conditioning of the *joint*; quantities that need the restricted
    *marginal* distribution compute it directly from graph.marginal.)
    """
    idx = np.asarray(subset, dtype=np.int64).ravel()
    if idx.size == 0:
        raise EmptySubset("restriction to an empty vertex set")
    if len(set(idx.tolist())) != idx.size:
        raise ValueError("subset contains repeated indices")
    if idx.min() < 0 or idx.max() >= graph.n:
        raise ValueError("subset index out of range")

    if graph.is_sparse:
        block = graph.joint[np.ix_(idx, idx)]
        mass = block.sum()
    else:
        block = graph.joint[np.ix_(idx, idx)]
        mass = float(block.sum())
    if mass <= 0.0:
        raise ZeroConditionalMass("subset carries no joint mass")

    block = block / mass
    if sparse.issparse(block):
        marg = np.asarray(block.sum(axis=1)).ravel()
    else:
        marg = block.sum(axis=1)
    if marg.min() <= 0.0:
        bad = int(idx[int(np.argmin(marg))])
        raise ZeroMassVertex(
            f"vertex {bad} has no within-subset pair mass"
        )
    return PositivePairGraph(
        vertices=graph.vertices[idx], joint=block, marginal=marg
    )


# ---------------------------------------------------------------------------
# JSON serialization (lossless: floats go through repr round-trip)


def graph_to_dict(graph: PositivePairGraph) -> dict:
    doc = {
        "d": graph.d,
        "vertices": [list(map(float, row)) for row in graph.vertices],
        "marginal": [float(x) for x in graph.marginal],
    }
    if graph.is_sparse:
        rows, cols, vals = graph.joint_coo()
        doc["joint"] = {
            "triplets": [
                [int(i), int(j), float(v)] for i, j, v in zip(rows, cols, vals)
            ]
        }
    else:
        doc["joint"] = [list(map(float, row)) for row in graph.joint]
    return doc


def graph_from_dict(doc: dict) -> PositivePairGraph:
    if not isinstance(doc, dict):
        raise MalformedGraphFile("graph document must be a JSON object")
    missing = [k for k in ("d", "vertices", "joint", "marginal") if k not in doc]
    if missing:
        raise MalformedGraphFile(f"graph document missing fields: {missing}")
    try:
        verts = _canonical_coords(np.array(doc["vertices"], dtype=np.float64))
    except (TypeError, ValueError) as exc:
        raise MalformedGraphFile(f"unreadable vertices array: {exc}") from exc
    if verts.ndim != 2:
        raise MalformedGraphFile("vertices must be a rectangular 2-d array")
    n = verts.shape[0]
    if verts.shape[1] != doc["d"]:
        raise MalformedGraphFile("declared d does not match vertex width")
    joint = doc["joint"]
    try:
        if isinstance(joint, dict):
            trip = joint["triplets"]
            rows = [t[0] for t in trip]
            cols = [t[1] for t in trip]
            vals = [t[2] for t in trip]
            J = sparse.coo_array((vals, (rows, cols)), shape=(n, n)).tocsr()
        else:
            J = np.array(joint, dtype=np.float64)
            if J.shape != (n, n):
                raise ValueError(f"joint has shape {J.shape}, expected {(n, n)}")
    except (TypeError, ValueError, KeyError, IndexError) as exc:
        raise MalformedGraphFile(f"unreadable joint: {exc}") from exc

    _check_distinct(verts)
    try:
        marg_stored = np.array(doc["marginal"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise MalformedGraphFile(f"unreadable marginal array: {exc}") from exc
    if sparse.issparse(J):
        marg = np.asarray(J.sum(axis=1)).ravel()
        asym = abs(J - J.T)
        gap = asym.max() if asym.nnz else 0.0
    else:
        marg = J.sum(axis=1)
        gap = float(np.max(np.abs(J - J.T)))
    if gap > _CONSISTENCY_TOL:
        raise AsymmetricJoint(f"stored joint asymmetric: {gap:.3e}")
    if abs(float(J.sum()) - 1.0) > _SUM_TOL:
        raise NotNormalized(f"stored joint sums to {float(J.sum())!r}")
    if marg_stored.shape != (n,) or np.max(np.abs(marg_stored - marg)) > _CONSISTENCY_TOL:
        raise NotNormalized("stored marginal inconsistent with joint row sums")
    if marg.min() <= 0.0:
        raise ZeroMassVertex("stored graph has a zero-mass vertex")
    if n > _DENSE_LIMIT and not sparse.issparse(J):
        J = sparse.csr_array(J)
    return PositivePairGraph(vertices=verts, joint=J, marginal=marg)


def save_graph(graph: PositivePairGraph, path) -> None:
    with open(path, "w") as fh:
        json.dump(graph_to_dict(graph), fh)


def load_graph(path) -> PositivePairGraph:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedGraphFile(f"{path}: not valid JSON: {exc}") from exc
    return graph_from_dict(doc)
