"""Synthetic example distributions, discretized to finite pair graphs.

Four generator families:

  * hypercube data with scaled spurious coordinates (example 1; example 2 is
    the same graph with a different labeling of the first-block sign
    patterns),
  * explicit well-separated point sets with a sub-cluster positive-pair rule
    (example 3),
  * patch data on a circle: an informative +-gamma patch at some location,
    spurious +-1 coordinates scaled by a grid in [0, 1] (example 4).

Continuous augmentation laws are replaced by finite grids; everything is
enumerated lexicographically so identical specs give bit-identical graphs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .errors import (
    GeometryViolation,
    IncompleteLabelMap,
    SizeGuardExceeded,
)
from .posgraph import PositivePairGraph, build_graph

DEFAULT_SIZE_GUARD = 20000

_TAU_GRID_1 = (0.5, 1.0)        # default scale grid for the hypercube family
_TAU_GRID_4 = (0.0, 0.5, 1.0)   # default for the patch family (0 must appear
                                # so the zeroed-spurious point is a vertex)


@dataclass(frozen=True)
class LabeledGraph:
    """A positive-pair graph with a downstream class label per vertex."""

    graph: PositivePairGraph
    labels: np.ndarray        # (n,) ints in [0, n_classes)
    n_classes: int

    @property
    def label_onehots(self) -> np.ndarray:
        eye = np.eye(self.n_classes)
        return eye[self.labels]


# ---------------------------------------------------------------------------
# examples 1 and 2: hypercube with scaled spurious dims


@dataclass(frozen=True)
class Example1Spec:
    d: int
    s: int
    tau_grid: Tuple[float, ...] = _TAU_GRID_1
    label_dim: int = 0
    size_guard: int = DEFAULT_SIZE_GUARD

    def __post_init__(self):
        if not (0 < self.s < self.d):
            raise ValueError(f"need 0 < s < d, got s={self.s}, d={self.d}")
        if not (0 <= self.label_dim < self.s):
            raise ValueError("label_dim must index an invariant dimension")
        grid = tuple(float(t) for t in self.tau_grid)
        if not grid:
            raise ValueError("tau_grid must be nonempty")
        if any(not (0.5 <= t <= 1.0) for t in grid):
            raise ValueError(f"tau_grid values must lie in [0.5, 1]: {grid}")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("tau_grid must be strictly increasing")
        object.__setattr__(self, "tau_grid", grid)


def _sign_patterns(bits: int):
    """All sign vectors of the given length, lexicographic with -1 first."""
    return itertools.product((-1.0, 1.0), repeat=bits)


def _hypercube_vertices_and_joint(spec: Example1Spec):
    d, s = spec.d, spec.s
    grid = spec.tau_grid
    n_free = d - s
    n_naturals = 2 ** d
    n_combos = len(grid) ** n_free
    n = n_naturals * n_combos
    if n > spec.size_guard:
        raise SizeGuardExceeded(f"{n} vertices exceed guard {spec.size_guard}")

    combos = np.array(list(itertools.product(grid, repeat=n_free)))
    verts = np.empty((n, d))
    first_block = np.empty((n, s))
    row = 0
    for pattern in _sign_patterns(d):
        pat = np.array(pattern)
        block = np.repeat(pat[None, :], n_combos, axis=0)
        block[:, s:] *= combos
        verts[row:row + n_combos] = block
        first_block[row:row + n_combos] = pat[:s]
        row += n_combos

    # p(natural) = 2^-d, kernel uniform over the tau combos of that natural;
    # augmentation sets are disjoint across naturals here, so the joint is
    # block diagonal with constant blocks.
    w = (1.0 / n_naturals) * (1.0 / n_combos) ** 2
    joint = np.zeros((n, n))
    for b in range(n_naturals):
        sl = slice(b * n_combos, (b + 1) * n_combos)
        joint[sl, sl] = w
    return verts, joint, first_block


def example1_graph(spec: Example1Spec) -> LabeledGraph:
    """Hypercube example: signs invariant, spurious dims rescaled.

    Labels: sign of coordinate `label_dim`, mapped to classes {0, 1}.
    """
    verts, joint, first_block = _hypercube_vertices_and_joint(spec)
    graph = build_graph(verts, joint)
    labels = (first_block[:, spec.label_dim] > 0).astype(np.int64)
    return LabeledGraph(graph=graph, labels=labels, n_classes=2)


def example2_labels(
    spec: Example1Spec, label_map: Dict[Tuple[float, ...], int]
) -> LabeledGraph:
    """Same graph as example 1, labels from a map on first-block signs.

    `label_map` must cover every pattern in {-1, 1}^s; class ids are the
    map's values, re-indexed densely in order of first appearance.
    """
    verts, joint, first_block = _hypercube_vertices_and_joint(spec)
    graph = build_graph(verts, joint)

    classes: Dict[int, int] = {}
    labels = np.empty(graph.n, dtype=np.int64)
    for i, row in enumerate(first_block):
        key = tuple(row)
        if key not in label_map:
            raise IncompleteLabelMap(f"label map misses pattern {key}")
        raw = label_map[key]
        if raw not in classes:
            classes[raw] = len(classes)
        labels[i] = classes[raw]
    return LabeledGraph(graph=graph, labels=labels, n_classes=len(classes))


def xor_label_map(s: int, dims: Sequence[int] = (0, 1)) -> Dict[Tuple[float, ...], int]:
    """Parity of the chosen sign coordinates — the classic non-linear map."""
    out = {}
    for pattern in _sign_patterns(s):
        parity = 1
        for j in dims:
            parity *= int(pattern[j])
        out[tuple(pattern)] = 0 if parity < 0 else 1
    return out


def enumeration_label_map(s: int) -> Dict[Tuple[float, ...], int]:
    """Each sign pattern its own class (m = 2^s)."""
    return {tuple(p): i for i, p in enumerate(_sign_patterns(s))}


# ---------------------------------------------------------------------------
# example 3: explicit point sets with sub-cluster positives


@dataclass(frozen=True)
class Example3Spec:
    point_sets: Tuple[Tuple[Tuple[float, ...], ...], ...]
    rho: float
    gamma: float
    labels: Tuple[int, ...]            # set index -> class
    m: int
    # one entry per set: a partition of local point indices into
    # sub-clusters; positive pairs are uniform within a sub-cluster.
    intra_pair_rule: Optional[Tuple[Tuple[Tuple[int, ...], ...], ...]] = None

    @property
    def r(self) -> int:
        return len(self.point_sets)


def example3_graph(spec: Example3Spec) -> LabeledGraph:
    """Point-set example: each set carries mass 1/r, uniform within.

    Positive pairs occur only inside a sub-cluster of a set.  Sub-cluster
    c of set i (sizes q_c within q_i points) receives pair mass
    (1/r)(q_c/q_i) spread uniformly over its ordered pairs, which keeps the
    marginal uniform on the set.  Geometry is verified: intra-set diameters
    must be <= rho and inter-set distances >= gamma.
    """
    r = spec.r
    if r == 0:
        raise ValueError("need at least one point set")
    if len(spec.labels) != r:
        raise ValueError("labels must assign a class to every set")
    sets = [np.asarray(ps, dtype=np.float64) for ps in spec.point_sets]
    sizes = [ps.shape[0] for ps in sets]
    n = sum(sizes)
    if n > DEFAULT_SIZE_GUARD:
        raise SizeGuardExceeded(f"{n} vertices exceed guard {DEFAULT_SIZE_GUARD}")

    for i, ps in enumerate(sets):
        if ps.shape[0] == 0:
            raise ValueError(f"point set {i} is empty")
        dist = cdist(ps, ps)
        worst = np.unravel_index(np.argmax(dist), dist.shape)
        if dist[worst] > spec.rho:
            raise GeometryViolation(
                f"set {i} has diameter {dist[worst]!r} > rho={spec.rho!r}",
                offending_pair=((i, int(worst[0])), (i, int(worst[1]))),
            )
    for i in range(r):
        for j in range(i + 1, r):
            dist = cdist(sets[i], sets[j])
            worst = np.unravel_index(np.argmin(dist), dist.shape)
            if dist[worst] < spec.gamma:
                raise GeometryViolation(
                    f"sets {i},{j} at distance {dist[worst]!r} < gamma={spec.gamma!r}",
                    offending_pair=((i, int(worst[0])), (j, int(worst[1]))),
                )

    rule = spec.intra_pair_rule
    if rule is None:
        rule = tuple(tuple([tuple(range(q))]) for q in sizes)
    if len(rule) != r:
        raise ValueError("intra_pair_rule must have one entry per set")

    verts = np.vstack(sets)
    joint = np.zeros((n, n))
    offsets = np.cumsum([0] + sizes)
    for i, subclusters in enumerate(rule):
        covered = sorted(idx for sc in subclusters for idx in sc)
        if covered != list(range(sizes[i])):
            raise ValueError(
                f"intra_pair_rule for set {i} is not a partition of its points"
            )
        q_i = sizes[i]
        for sc in subclusters:
            q_c = len(sc)
            mass = (1.0 / r) * (q_c / q_i)
            w = mass / (q_c * q_c)
            idx = offsets[i] + np.asarray(sc, dtype=np.int64)
            joint[np.ix_(idx, idx)] += w

    graph = build_graph(verts, joint)
    labels = np.concatenate(
        [np.full(q, spec.labels[i], dtype=np.int64) for i, q in enumerate(sizes)]
    )
    return LabeledGraph(graph=graph, labels=labels, n_classes=spec.m)


def example3_lattice(
    r: int,
    points_per_set: int,
    gamma: float,
    rho: float,
    labels: Sequence[int],
    m: int,
    sub_clusters_per_set: int = 1,
) -> Example3Spec:
    """Deterministic lattice instance with verifiable slack.

    Set centers sit on the first axis with actual separation 1.25*gamma +
    rho (so the declared gamma holds strictly, never at float equality);
    points spread along the second axis with diameter 0.9*rho.
    """
    if points_per_set % sub_clusters_per_set:
        raise ValueError("sub_clusters_per_set must divide points_per_set")
    step = 1.25 * gamma + rho
    point_sets = []
    rule = []
    for i in range(r):
        base = np.zeros(2)
        base[0] = i * step
        if points_per_set == 1:
            offsets = np.zeros((1, 2))
        else:
            offsets = np.zeros((points_per_set, 2))
            offsets[:, 1] = np.arange(points_per_set) * (
                0.9 * rho / (points_per_set - 1)
            )
        point_sets.append(tuple(tuple(map(float, base + off)) for off in offsets))
        per = points_per_set // sub_clusters_per_set
        rule.append(
            tuple(
                tuple(range(c * per, (c + 1) * per))
                for c in range(sub_clusters_per_set)
            )
        )
    return Example3Spec(
        point_sets=tuple(point_sets),
        rho=rho,
        gamma=gamma,
        labels=tuple(labels),
        m=m,
        intra_pair_rule=tuple(rule),
    )


# ---------------------------------------------------------------------------
# example 4: informative patch on a circle, scaled spurious dims


@dataclass(frozen=True)
class Example4Spec:
    d: int
    s: int
    gamma: float
    tau_grid: Tuple[float, ...] = _TAU_GRID_4
    label_map: Optional[Dict[Tuple[int, ...], int]] = None
    size_guard: int = DEFAULT_SIZE_GUARD

    def __post_init__(self):
        if not (1 <= self.s < self.d):
            raise ValueError(f"need 1 <= s < d, got s={self.s}, d={self.d}")
        if self.gamma <= 1.0:
            raise ValueError("gamma must exceed 1")
        grid = tuple(float(t) for t in self.tau_grid)
        if not grid:
            raise ValueError("tau_grid must be nonempty")
        if any(not (0.0 <= t <= 1.0) for t in grid):
            raise ValueError(f"tau_grid values must lie in [0, 1]: {grid}")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("tau_grid must be strictly increasing")
        object.__setattr__(self, "tau_grid", grid)


def example4_graph(spec: Example4Spec) -> LabeledGraph:
    """Patch example: naturals have a +-gamma patch of length s at circular
    location t and +-1 spurious coordinates; augmentations rescale each
    spurious coordinate by a grid value in [0, 1], keeping the patch.

    Labels depend on the patch content only (location-invariant).  When the
    grid contains 0, augmented views of naturals that differ only in
    spurious signs collide at the zeroed coordinates, so components merge
    from d*2^d (one per natural) down to d*2^s.
    """
    d, s, gamma = spec.d, spec.s, spec.gamma
    grid = spec.tau_grid
    n_free = d - s
    values = sorted({t * sgn for t in grid for sgn in (-1.0, 1.0)})
    n_exact = d * (2 ** s) * len(values) ** n_free
    if n_exact > spec.size_guard:
        raise SizeGuardExceeded(f"{n_exact} vertices exceed guard {spec.size_guard}")

    label_map = spec.label_map
    if label_map is None:
        label_map = {p: i for i, p in enumerate(itertools.product((-1, 1), repeat=s))}
    classes: Dict[int, int] = {}

    vert_index: Dict[bytes, int] = {}
    vert_rows: List[np.ndarray] = []
    vert_labels: List[int] = []
    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []

    n_naturals = d * (2 ** s) * (2 ** n_free)
    p_nat = 1.0 / n_naturals
    combos = list(itertools.product(grid, repeat=n_free))
    k_combo = 1.0 / len(combos)

    for t in range(d):
        spurious_dims = [(t + s + j) % d for j in range(n_free)]
        patch_dims = [(t + j) % d for j in range(s)]
        for patch in itertools.product((-1, 1), repeat=s):
            key = tuple(patch)
            if key not in label_map:
                raise IncompleteLabelMap(f"label map misses patch pattern {key}")
            raw = label_map[key]
            if raw not in classes:
                classes[raw] = len(classes)
            lab = classes[raw]
            for spurious in itertools.product((-1.0, 1.0), repeat=n_free):
                # augmentations of one natural
                aug_ids = []
                for combo in combos:
                    x = np.zeros(d)
                    for j, pd in enumerate(patch_dims):
                        x[pd] = gamma * patch[j]
                    for j, sd in enumerate(spurious_dims):
                        x[sd] = spurious[j] * combo[j]
                    x = x + 0.0  # fold -0.0 at tau = 0
                    bkey = x.tobytes()
                    vid = vert_index.get(bkey)
                    if vid is None:
                        vid = len(vert_rows)
                        vert_index[bkey] = vid
                        vert_rows.append(x)
                        vert_labels.append(lab)
                    else:
                        # collisions only merge views that share the patch
                        assert vert_labels[vid] == lab
                    aug_ids.append(vid)
                w = p_nat * k_combo * k_combo
                for a in aug_ids:
                    for b in aug_ids:
                        rows.append(a)
                        cols.append(b)
                        vals.append(w)

    n = len(vert_rows)
    joint = np.zeros((n, n))
    np.add.at(joint, (rows, cols), vals)
    graph = build_graph(np.vstack(vert_rows), joint)
    labels = np.asarray(vert_labels, dtype=np.int64)
    return LabeledGraph(graph=graph, labels=labels, n_classes=len(classes))


# ---------------------------------------------------------------------------
# generic random graphs (property-test instances)


def random_graph(
    n: int,
    n_components: int = 1,
    seed: int = 0,
    extra_edge_frac: float = 1.0,
    coord_dim: int = 3,
) -> PositivePairGraph:
    """Random weighted graph with exactly `n_components` components.

    Vertices are split into random nonempty blocks; each block gets a
    random spanning tree (guaranteeing its connectivity), a proportional
    number of extra random edges, and a self-pair weight per vertex
    (guaranteeing positive marginals).  Coordinates are random and only
    serve as vertex identities.
    """
    if not (1 <= n_components <= n):
        raise ValueError(f"need 1 <= n_components <= n, got {n_components}, {n}")
    rng = np.random.default_rng(seed)

    if n_components == 1:
        bounds = [0, n]
    else:
        cuts = np.sort(rng.choice(np.arange(1, n), size=n_components - 1,
                                  replace=False))
        bounds = [0] + [int(c) for c in cuts] + [n]

    W = np.zeros((n, n))
    for b in range(n_components):
        lo, hi = bounds[b], bounds[b + 1]
        size = hi - lo
        for i in range(lo + 1, hi):
            j = int(rng.integers(lo, i))
            w = float(rng.uniform(0.2, 1.0))
            W[i, j] += w
            W[j, i] += w
        for _ in range(int(extra_edge_frac * size)):
            u, v = rng.integers(lo, hi, size=2)
            if u == v:
                continue
            w = float(rng.uniform(0.05, 0.5))
            W[u, v] += w
            W[v, u] += w
    W[np.diag_indices(n)] += rng.uniform(0.05, 0.3, size=n)

    verts = rng.standard_normal((n, coord_dim))
    return build_graph(verts, W / W.sum())


def component_constant_function(
    graph: PositivePairGraph, seed: int = 0
) -> np.ndarray:
    """Random function constant on each connected component."""
    from .posgraph import connected_components

    part = connected_components(graph)
    rng = np.random.default_rng(seed)
    values = rng.uniform(-3.0, 3.0, size=part.n_sets)
    return values[part.labels]


# ---------------------------------------------------------------------------
# two-level clustered graphs (outer clusters linearly indicated; inner
# sub-clusters invisible to the linear class)


def two_level_graph(
    m: int,
    seed: int = 0,
    cross_scale: float = 1e-3,
) -> LabeledGraph:
    """m outer clusters of 4 vertices, each split into 2 inner sub-clusters.

    Coordinates: a one-hot outer-cluster block (so the linear class
    implements outer indicators exactly) plus 2 inner coordinates carrying
    the four sign patterns, paired so that each sub-cluster is a parity
    class: {(1,1),(-1,-1)} vs {(1,-1),(-1,1)}.  No linear functional
    separates those two pairs, so the inner split is invisible to the
    linear class while being a genuine zero-cost split for an unrestricted
    one.  Positive pairs are uniform over ordered pairs within each
    sub-cluster; a sparse random symmetric mass connects consecutive outer
    clusters (plus a few extra random cross links), supplying a small
    cross-partition mass.
    """
    if m < 2:
        raise ValueError("need at least 2 outer clusters")
    rng = np.random.default_rng(seed)
    inner = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
    n = 4 * m
    d = m + 2

    verts = np.zeros((n, d))
    labels = np.empty(n, dtype=np.int64)
    for j in range(m):
        rows = slice(4 * j, 4 * j + 4)
        verts[rows, j] = 1.0
        verts[rows, m:] = inner
        labels[rows] = j

    W = np.zeros((n, n))
    for j in range(m):
        for sub in (slice(4 * j, 4 * j + 2), slice(4 * j + 2, 4 * j + 4)):
            W[sub, sub] += 1.0 / 8.0      # 4 ordered pairs x 1/8 = 1/2 per sub
    n_cross = (m - 1) + int(rng.integers(0, m))
    for idx in range(n_cross):
        if idx < m - 1:
            a, b = idx, idx + 1           # consecutive links keep it connected
        else:
            a, b = rng.choice(m, size=2, replace=False)
        u = int(4 * a + rng.integers(0, 4))
        v = int(4 * b + rng.integers(0, 4))
        w = float(rng.uniform(0.5, 1.0)) * cross_scale
        W[u, v] += w / 2.0
        W[v, u] += w / 2.0

    graph = build_graph(verts, W / W.sum())
    return LabeledGraph(graph=graph, labels=labels, n_classes=m)


def component_cluster_graph(n_components: int) -> PositivePairGraph:
    """Disjoint complete 4-vertex clusters with full-rank coordinates.

    Cluster j carries a one-hot coordinate plus two private coordinates
    holding the four sign patterns, so the coordinate matrix has rank
    3*n_components and linear representations up to that dimension can be
    whitened.  Pair mass is uniform over the ordered pairs of each cluster
    (diagonal included); the pair-operator spectrum is exactly
    {0 x n_components, 1 x 3*n_components}.
    """
    if n_components < 1:
        raise ValueError("need at least one cluster")
    inner = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
    n = 4 * n_components
    d = 3 * n_components
    verts = np.zeros((n, d))
    W = np.zeros((n, n))
    for j in range(n_components):
        rows = slice(4 * j, 4 * j + 4)
        verts[rows, j] = 1.0
        verts[rows, n_components + 2 * j: n_components + 2 * j + 2] = inner
        W[rows, rows] = 1.0
    return build_graph(verts, W / W.sum())
