"""Spectral analysis of positive-pair graphs.

The central operator is

    (L g)(x) = g(x) - (1 / p_data(x)) * sum_x' p_pos(x, x') g(x'),

whose eigenfunctions are computed in the symmetrized coordinates
h = D^{1/2} g (D = diag marginal), where L becomes the symmetric matrix
M = I - D^{-1/2} J D^{-1/2}.  Eigenvalues live in [0, 2]; the multiplicity
of 0 equals the number of connected components.

This module also hosts the expansion quantity Q_S and its class-restricted
minimization, which drive the cluster-recovery bounds downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg
from scipy import sparse

from .errors import (
    DegenerateCovariance,
    EigSolverFailure,
    EmptySubset,
    GraphMismatch,
    UnknownClass,
    ZeroFunction,
)
from .posgraph import PositivePairGraph, restrict

_EIG_RANGE_TOL = 1e-10      # eigenvalues must lie in [-tol, 2+tol]
_RESIDUAL_TOL = 1e-16       # weighted squared residual of the defining relation
_SIGN_TOL = 1e-12           # first coordinate larger than this fixes the sign
_TIE_TOL = 1e-12            # eigenvalues closer than this form a tie group
_VAR_REL_TOL = 1e-14        # relative threshold for "variance is zero"
_RANGE_REL_TOL = 1e-12      # relative eigenvalue cutoff for covariance range


class _Infinite:
    """Totally-ordered +infinity sentinel (no arithmetic on purpose).

    Used where a ratio is defined to be infinite (zero denominator) so that
    comparisons like `beta <= INFINITE` work but accidental arithmetic with
    floats fails loudly instead of propagating float('inf').
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("pairlab-INFINITE")

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self


INFINITE = _Infinite()


def _as_function(graph: PositivePairGraph, g) -> np.ndarray:
    arr = np.asarray(g, dtype=np.float64)
    if arr.shape[0] != graph.n or arr.ndim not in (1, 2):
        raise GraphMismatch(
            f"function shape {arr.shape} does not fit graph with n={graph.n}"
        )
    return arr


def laplacian_apply(graph: PositivePairGraph, g) -> np.ndarray:
    """Apply L to a function (n,) or a stack of functions (n, k)."""
    arr = _as_function(graph, g)
    jg = graph.joint_matvec(arr)
    if arr.ndim == 1:
        return arr - jg / graph.marginal
    return arr - jg / graph.marginal[:, None]


def pair_discrepancy(graph: PositivePairGraph, f) -> float:
    """sum_{x,x'} p_pos(x,x') * ||f(x) - f(x')||^2.

    Evaluated edge by edge over the stored pair weights (never the moment
    identity), so a function constant on every component gives exactly 0.
    """
    arr = _as_function(graph, f)
    if arr.ndim == 1:
        arr = arr[:, None]
    rows, cols, vals = graph.joint_coo()
    diffs = arr[rows] - arr[cols]
    return float(np.sum(vals * np.einsum("ij,ij->i", diffs, diffs)))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of L, functions orthonormal under the marginal."""

    eigenvalues: np.ndarray   # (count,) ascending
    functions: np.ndarray     # (n, count); column j satisfies L g_j = psi_j g_j

    @property
    def count(self) -> int:
        return self.eigenvalues.shape[0]


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.flatnonzero(np.abs(col) > _SIGN_TOL)
        if nz.size and col[nz[0]] < 0:
            out[:, j] = -col
    return out


def _order_ties(vals: np.ndarray, vecs: np.ndarray):
    """Within groups of (numerically) equal eigenvalues, order the
    symmetrized eigenvectors lexicographically so repeated runs and solver
    permutations agree.  Callers comparing eigenspaces should still use
    projectors; this only pins a convention."""
    order = np.arange(vals.size)
    start = 0
    while start < vals.size:
        stop = start + 1
        while stop < vals.size and vals[stop] - vals[start] <= _TIE_TOL:
            stop += 1
        if stop - start > 1:
            keys = [tuple(np.round(vecs[:, j], 10)) for j in order[start:stop]]
            perm = sorted(range(stop - start), key=lambda t: keys[t])
            order[start:stop] = order[start:stop][perm]
        start = stop
    return vals[order], vecs[:, order]


def eigendecompose(graph: PositivePairGraph, count: int) -> SpectralDecomposition:
    """The `count` smallest eigenpairs of L.

    Solved symmetrically: M = I - D^{-1/2} J D^{-1/2}, g = D^{-1/2} v.
    Deterministic output: ascending eigenvalues, lexicographic tie order,
    first nonzero coordinate of each eigenvector positive.
    """
    n = graph.n
    if not isinstance(count, (int, np.integer)) or count < 1 or count > n:
        raise GraphMismatch(f"count={count} invalid for graph with n={n}")

    inv_sqrt = 1.0 / np.sqrt(graph.marginal)
    if graph.is_sparse:
        D = sparse.diags_array(inv_sqrt)
        M = sparse.identity(n, format="csr") - D @ graph.joint @ D
        M = (M + M.T) * 0.5
        try:
            if count >= n - 1:
                Md = M.toarray()
                vals, vecs = scipy.linalg.eigh(Md)
                vals, vecs = vals[:count], vecs[:, :count]
            else:
                vals, vecs = scipy.sparse.linalg.eigsh(M, k=count, which="SA")
        except Exception as exc:  # ARPACK non-convergence and friends
            raise EigSolverFailure(str(exc)) from exc
        order = np.argsort(vals, kind="stable")
        vals, vecs = vals[order], vecs[:, order]
    else:
        M = np.eye(n) - (graph.joint * inv_sqrt[:, None]) * inv_sqrt[None, :]
        M = (M + M.T) * 0.5
        try:
            vals, vecs = scipy.linalg.eigh(M, subset_by_index=[0, count - 1])
        except scipy.linalg.LinAlgError as exc:
            raise EigSolverFailure(str(exc)) from exc

    if vals.min() < -_EIG_RANGE_TOL or vals.max() > 2.0 + _EIG_RANGE_TOL:
        raise EigSolverFailure(
            f"eigenvalues outside [0, 2]: [{vals.min()!r}, {vals.max()!r}]"
        )

    vecs = _fix_signs(vecs)
    vals, vecs = _order_ties(vals, vecs)
    funcs = vecs * inv_sqrt[:, None]

    # the defining relation, checked per returned pair
    res = laplacian_apply(graph, funcs) - funcs * vals[None, :]
    res_sq = graph.marginal @ (res * res)
    if np.max(res_sq) > _RESIDUAL_TOL:
        raise EigSolverFailure(
            f"eigenpair residual {np.max(res_sq):.3e} exceeds {_RESIDUAL_TOL}"
        )
    return SpectralDecomposition(eigenvalues=vals, functions=funcs)


def is_eigenfunction(graph: PositivePairGraph, g, eigenvalue: float, tol: float) -> bool:
    """Whether E_{p_data}[(L g - psi g)^2] <= tol * E_{p_data}[g^2]."""
    arr = _as_function(graph, g)
    if arr.ndim != 1:
        raise GraphMismatch("is_eigenfunction takes a single scalar function")
    norm_sq = float(graph.marginal @ (arr * arr))
    if norm_sq == 0.0:
        raise ZeroFunction("cannot test the identically-zero function")
    res = laplacian_apply(graph, arr) - eigenvalue * arr
    res_sq = float(graph.marginal @ (res * res))
    return res_sq <= tol * norm_sq


def _subset_indices(graph: PositivePairGraph, subset) -> np.ndarray:
    idx = np.asarray(subset, dtype=np.int64).ravel()
    if idx.size == 0:
        raise EmptySubset("expansion over an empty vertex set")
    return idx


def _conditional_marginal(graph: PositivePairGraph, idx: np.ndarray) -> np.ndarray:
    q = graph.marginal[idx]
    return q / q.sum()


def expansion_Q(graph: PositivePairGraph, subset, g):
    """Q_S(g): positive-pair discrepancy of g under the pair distribution
    conditioned on S, over twice the variance of g under the data
    distribution conditioned on S.  Returns INFINITE when the variance
    vanishes (g constant on S)."""
    idx = _subset_indices(graph, subset)
    arr = _as_function(graph, g)
    if arr.ndim != 1:
        raise GraphMismatch("expansion_Q takes a single scalar function")

    sub = restrict(graph, idx)
    numerator = pair_discrepancy(sub, arr[idx])

    q = _conditional_marginal(graph, idx)
    vals = arr[idx]
    mean = float(q @ vals)
    denom = 2.0 * float(q @ ((vals - mean) ** 2))
    scale = float(q @ (vals * vals))
    if denom <= _VAR_REL_TOL * scale or denom == 0.0:
        return INFINITE
    return numerator / denom


def _pencil_min(a: np.ndarray, b: np.ndarray):
    """Smallest generalized eigenpair of (a, b), b positive definite."""
    try:
        vals, vecs = scipy.linalg.eigh(a, b, subset_by_index=[0, 0])
    except scipy.linalg.LinAlgError as exc:
        raise EigSolverFailure(f"generalized eigensolve failed: {exc}") from exc
    beta = float(vals[0])
    if beta < -1e-10:
        raise EigSolverFailure(f"negative expansion minimum {beta!r}")
    return max(beta, 0.0), vecs[:, 0]


def min_expansion_over_class(graph: PositivePairGraph, subset, class_name: str):
    """(beta, argmin g): the infimum of Q_S over scalar outputs of a class.

    tabular: all functions on S.  The pair-difference quadratic form and the
    centered variance form share only the constants as null space, so beta
    is the second-smallest generalized eigenvalue of the full pencil,
    computed after deflating constants.

    linear: g(x) = w^T x.  Coordinates are centered under the conditional
    data distribution and the pencil is solved on the range of the centered
    covariance.

    Returns (INFINITE, None) when no in-class function has positive variance
    on S (e.g. a single vertex).
    """
    idx = _subset_indices(graph, subset)
    q = _conditional_marginal(graph, idx)

    if class_name == "tabular":
        if idx.size == 1:
            return INFINITE, None
        sub = restrict(graph, idx)
        W = sub.joint_dense()
        A = 2.0 * (np.diag(sub.marginal) - W)
        B = 2.0 * (np.diag(q) - np.outer(q, q))
        H = scipy.linalg.null_space(q[None, :])
        beta, u = _pencil_min(H.T @ A @ H, H.T @ B @ H)
        g = np.zeros(graph.n)
        g[idx] = H @ u
        return beta, g

    if class_name == "linear":
        X = graph.vertices[idx]
        mu = q @ X
        Xc = X - mu
        C = 2.0 * (Xc.T @ (Xc * q[:, None]))
        evals, evecs = scipy.linalg.eigh(C)
        top = evals.max() if evals.size else 0.0
        keep = evals > _RANGE_REL_TOL * max(top, 1.0) if top > 0 else np.zeros_like(evals, bool)
        if not keep.any():
            if idx.size > 1:
                raise DegenerateCovariance(
                    "coordinates carry no variance on the subset"
                )
            return INFINITE, None
        R = evecs[:, keep]
        sub = restrict(graph, idx)
        W = sub.joint_dense()
        lap = np.diag(sub.marginal) - W
        A = 2.0 * (Xc.T @ (lap @ Xc))
        beta, u = _pencil_min(R.T @ A @ R, R.T @ C @ R)
        w = R @ u
        return beta, graph.vertices @ w

    raise UnknownClass(
        f"min_expansion_over_class supports 'tabular' and 'linear', got {class_name!r}"
    )
