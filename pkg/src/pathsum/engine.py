"""Covariances as finite sums over simple paths and simple cycles.

For a vertex ``alpha`` the diagonal block of ``J^{-1}`` is the inverse of a
sum over the simple cycles ``(alpha, m2, ..., ml)`` rooted at ``alpha``::

    (-1)**(l+1) * J[alpha, ml] * R_l J[ml, m(l-1)] ... R_2 J[m2, alpha]

where ``R_j`` is the diagonal resolvent of ``m_j`` on the graph with
``alpha, m2, ..., m(j-1)`` deleted, itself obtained by the same rule. The
block ``Sigma[omega, alpha]`` is a sum over simple paths from ``alpha`` to
``omega`` of ``(-1)**l * R_(l+1) J ... R_2 J[nu2, alpha] Sigma[alpha, alpha]``.
Products are written right to left and never reordered, so the same code
handles non-commuting block weights.

Both sums are driven by a depth-first search that extends one running
product per prefix, so shared prefixes are multiplied once. Resolvents are
memoized on ``(component, vertex)``: the resolvent of a vertex only depends
on the connected component it lies in once vertices are deleted, which
collapses the keys on trees to one per directed edge.

Scalar graphs with at most ``MAX_KERNEL_VERTICES`` vertices run through the
compiled kernels in :mod:`pathsum._kernels`; everything else uses the
generic block route in this module.
"""
from __future__ import annotations

import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as K
from ._linalg import inverse_or_none, solve_or_none
from .errors import ConfigurationError, DomainError, SingularityError
from .graph import ModelGraph, VertexSubset, _as_mask, build_graph, members
from .model import BlockPartition, InformationModel

log = logging.getLogger(__name__)

BACKENDS = ("auto", "kernel", "generic")


@dataclass
class DiagonalResolvent:
    """Diagonal block of ``(J restricted to G minus deleted)^{-1}`` at ``vertex``."""

    deleted: VertexSubset
    vertex: int
    value: np.ndarray


@dataclass
class PathSumResult:
    """Covariance block ``Sigma[I_target, I_source]`` with provenance.

    ``path_count`` is the number of simple paths summed for this query.
    ``max_depth`` and ``leaf_count`` are read from the memo after the query;
    they are cumulative when a memo is shared between queries.
    """

    source: int
    target: int
    value: np.ndarray
    path_count: int
    max_depth: int
    leaf_count: int
    method: str = "pathsum"


@dataclass(eq=False)
class ResolventMemo:
    """Cache of diagonal resolvents for one graph, plus evaluation counters."""

    graph: Optional[ModelGraph] = None
    table: dict = field(default_factory=dict)
    kernel_table: object = None
    stats: np.ndarray = field(default_factory=K.new_stats)

    def bind(self, graph: ModelGraph):
        if self.graph is None:
            self.graph = graph
        elif self.graph is not graph:
            raise ValueError("memo is bound to a different graph")
        return self

    @property
    def leaf_count(self) -> int:
        return int(self.stats[K.STAT_LEAVES])

    @property
    def max_depth(self) -> int:
        return int(self.stats[K.STAT_DEPTH])

    @property
    def subproblems(self) -> int:
        return int(self.stats[K.STAT_SUBPROBLEMS])

    def __len__(self):
        return len(self.table) + (0 if self.kernel_table is None else len(self.kernel_table))


def _use_kernel(graph: ModelGraph, backend: str) -> bool:
    if backend not in BACKENDS:
        raise ConfigurationError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    fits = graph.is_scalar and graph.n_vertices <= K.MAX_KERNEL_VERTICES
    if backend == "kernel" and not fits:
        raise ConfigurationError(
            f"kernel backend needs a scalar graph with at most {K.MAX_KERNEL_VERTICES} vertices"
        )
    return backend == "kernel" or (backend == "auto" and fits)


def _singular(graph, comp, what="cycle sum"):
    deleted = members(graph.full_mask & ~comp)
    return SingularityError(
        f"singular {what} on the subgraph with vertices "
        f"{[v + 1 for v in deleted]} deleted: J restricted to that subgraph is singular",
        deleted=deleted,
    )


def _ensure_recursion(graph: ModelGraph):
    need = 4 * graph.n_vertices + 200
    if sys.getrecursionlimit() < need:
        sys.setrecursionlimit(need)


# -- generic block route ----------------------------------------------------


def _block_sum(terms):
    if terms[0].shape == (1, 1):
        return np.array([[math.fsum(float(t[0, 0]) for t in terms)]])
    return np.sum(terms, axis=0)


def _generic_resolvent(graph, alive, alpha, memo, depth):
    comp = graph.component_mask(alive, alpha)
    key = (comp, alpha)
    hit = memo.table.get(key)
    if hit is not None:
        return hit
    stats = memo.stats
    if depth > stats[K.STAT_DEPTH]:
        stats[K.STAT_DEPTH] = depth
    stats[K.STAT_SUBPROBLEMS] += 1
    terms = [graph.self_weight(alpha)]
    if comp == 1 << alpha:
        stats[K.STAT_LEAVES] += 1
    else:
        adj = graph.adjacency
        closing = graph.neighbor_mask(alpha)
        visited = 1 << alpha
        stack = [(alpha, iter(adj[alpha]), np.eye(graph.block_size(alpha)))]
        while stack:
            v, nbrs, q = stack[-1]
            for u in nbrs:
                if comp >> u & 1 and not visited >> u & 1:
                    break
            else:
                stack.pop()
                visited &= ~(1 << v)
                continue
            r = _generic_resolvent(graph, comp & ~visited, u, memo, depth + 1)
            qu = -(r @ graph.edge_weight(u, v) @ q)
            if closing >> u & 1:
                terms.append(graph.edge_weight(alpha, u) @ qu)
                stats[K.STAT_CYCLES] += 1
            stack.append((u, iter(adj[u]), qu))
            visited |= 1 << u
    total = _block_sum(terms)
    scale = max(np.abs(t).max() for t in terms)
    value = None
    if np.all(np.isfinite(total)) and np.abs(total).max() > K.SINGULAR_RTOL * scale:
        value = inverse_or_none(total)
    if value is None:
        raise _singular(graph, comp)
    value.setflags(write=False)
    memo.table[key] = value
    return value


def _generic_column(graph, alpha, memo, target=None):
    full = graph.full_mask
    s_aa = _generic_resolvent(graph, full, alpha, memo, 0)
    sums = {}
    if target is None or target == alpha:
        sums[alpha] = [s_aa]
    if target == alpha:
        return sums, 1
    adj = graph.adjacency
    count = len(sums)
    visited = 1 << alpha
    stack = [(alpha, iter(adj[alpha]), s_aa)]
    while stack:
        v, nbrs, p = stack[-1]
        for u in nbrs:
            if not visited >> u & 1:
                break
        else:
            stack.pop()
            visited &= ~(1 << v)
            continue
        rest = full & ~visited
        if target is not None and u != target:
            if not graph.component_mask(rest, u) >> target & 1:
                continue
        r = _generic_resolvent(graph, rest, u, memo, 1)
        pu = -(r @ graph.edge_weight(u, v) @ p)
        if target is None or u == target:
            sums.setdefault(u, []).append(pu)
            count += 1
        if u != target:
            stack.append((u, iter(adj[u]), pu))
            visited |= 1 << u
    return sums, count


# -- kernel route -----------------------------------------------------------


def _kernel_memo(memo):
    if memo.kernel_table is None:
        memo.kernel_table = K.new_memo()
    return memo.kernel_table


def _check_kernel(graph, memo):
    if memo.stats[K.STAT_SINGULAR]:
        comp = int(memo.stats[K.STAT_SINGULAR_ALIVE])
        memo.stats[K.STAT_SINGULAR] = 0
        raise _singular(graph, comp)


def _kernel_resolvent(graph, alive, alpha, memo):
    nbr, indptr, indices, data, dense = graph.scalar_arrays()
    value = K.resolvent(
        nbr, indptr, indices, data, dense, alive, alpha, _kernel_memo(memo), memo.stats, 0
    )
    _check_kernel(graph, memo)
    return np.array([[value]])


def _kernel_column(graph, alpha, memo, target=None):
    nbr, indptr, indices, data, dense = graph.scalar_arrays()
    out = np.zeros(graph.n_vertices)
    carry = np.zeros(graph.n_vertices)
    before = int(memo.stats[K.STAT_PATHS])
    K.column(
        nbr, indptr, indices, data, dense, graph.full_mask, alpha,
        -1 if target is None else target, _kernel_memo(memo), memo.stats, out, carry,
    )
    _check_kernel(graph, memo)
    return out, int(memo.stats[K.STAT_PATHS]) - before


# -- public API ---------------------------------------------------------------


class PathSumEngine:
    """Path-sum evaluator bound to one graph and one resolvent memo.

    Args:
        graph: Block graph to evaluate on.
        backend: ``"auto"`` (kernel for small scalar graphs), ``"kernel"`` or
            ``"generic"``.
        memo: Optional shared memo; created when omitted.
    """

    def __init__(self, graph: ModelGraph, backend: str = "auto", memo: Optional[ResolventMemo] = None):
        self.graph = graph
        self.backend = backend
        self.kernel = _use_kernel(graph, backend)
        self.memo = (ResolventMemo() if memo is None else memo).bind(graph)
        _ensure_recursion(graph)

    def _check(self, v, role):
        if not 0 <= v < self.graph.n_vertices:
            raise DomainError(f"{role} {v} is not a vertex of the graph")

    def resolvent(self, deleted, alpha: int) -> DiagonalResolvent:
        deleted = _as_mask(deleted)
        self._check(alpha, "alpha")
        if deleted >> alpha & 1:
            raise DomainError(f"alpha {alpha} lies in the deleted set")
        alive = self.graph.full_mask & ~deleted
        if self.kernel:
            value = _kernel_resolvent(self.graph, alive, alpha, self.memo)
        else:
            value = _generic_resolvent(self.graph, alive, alpha, self.memo, 0)
        return DiagonalResolvent(deleted, alpha, value)

    def entry(self, alpha: int, omega: int) -> PathSumResult:
        """Covariance block ``Sigma[I_omega, I_alpha]``."""
        self._check(alpha, "alpha")
        self._check(omega, "omega")
        if self.kernel:
            out, count = _kernel_column(self.graph, alpha, self.memo, omega)
            value = np.array([[out[omega]]])
        else:
            sums, count = _generic_column(self.graph, alpha, self.memo, omega)
            value = _block_sum(sums[omega]) if omega in sums else np.zeros(
                (self.graph.block_size(omega), self.graph.block_size(alpha))
            )
        return PathSumResult(
            alpha, omega, value, count, self.memo.max_depth, self.memo.leaf_count
        )

    def column(self, alpha: int):
        """All blocks ``Sigma[I_v, I_alpha]`` from one path search.

        Returns ``(blocks, path_count)`` with ``blocks[v]`` the block for
        every vertex ``v`` (zero blocks outside the component of ``alpha``).
        """
        self._check(alpha, "alpha")
        g = self.graph
        if self.kernel:
            out, count = _kernel_column(g, alpha, self.memo)
            return [np.array([[x]]) for x in out], count
        sums, count = _generic_column(g, alpha, self.memo)
        blocks = []
        for v in g.vertices:
            if v in sums:
                blocks.append(_block_sum(sums[v]))
            else:
                blocks.append(np.zeros((g.block_size(v), g.block_size(alpha))))
        return blocks, count

    def covariance(self, threads: int = 1) -> np.ndarray:
        g = self.graph
        n = g.model.n
        sigma = np.zeros((n, n))
        if self.kernel:
            cols = _map(lambda a: _kernel_column(g, a, self.memo)[0], g.vertices, threads)
            perm = np.array([b[0] for b in g.partition.blocks])
            sigma[np.ix_(perm, perm)] = np.column_stack(cols)
            return sigma
        cols = _map(lambda a: self.column(a)[0], g.vertices, threads)
        blocks = g.partition.blocks
        for a, col in zip(g.vertices, cols):
            for v, block in enumerate(col):
                sigma[np.ix_(blocks[v], blocks[a])] = block
        return sigma


def _map(fn, items, threads):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def diagonal_entry(graph: ModelGraph, deleted, alpha: int, memo: Optional[ResolventMemo] = None,
                   backend: str = "auto") -> DiagonalResolvent:
    """Diagonal resolvent of ``alpha`` on ``graph`` with ``deleted`` removed."""
    return PathSumEngine(graph, backend, memo).resolvent(deleted, alpha)


def off_diagonal_entry(graph: ModelGraph, alpha: int, omega: int,
                       memo: Optional[ResolventMemo] = None, backend: str = "auto") -> PathSumResult:
    """Covariance block ``Sigma[I_omega, I_alpha]``; ``alpha == omega`` gives the diagonal block."""
    return PathSumEngine(graph, backend, memo).entry(alpha, omega)


def full_covariance(model: InformationModel, partition: Optional[BlockPartition] = None, *,
                    drop_tolerance: float = 0.0, threads: int = 1, backend: str = "auto",
                    memo: Optional[ResolventMemo] = None) -> np.ndarray:
    """Dense ``Sigma = J^{-1}`` assembled block by block from path sums."""
    graph = build_graph(model, partition, drop_tolerance)
    return PathSumEngine(graph, backend, memo).covariance(threads)


def mean_vector(model: InformationModel, partition: Optional[BlockPartition] = None, *,
                covariance: Optional[np.ndarray] = None, **kwargs) -> np.ndarray:
    """Mean ``mu = Sigma h``; raises :class:`ConfigurationError` without a potential vector."""
    if model.h is None:
        raise ConfigurationError("mean requested but the model has no potential vector h")
    if covariance is None:
        covariance = full_covariance(model, partition, **kwargs)
    return covariance @ model.h


def absorb_observations(model: InformationModel, C, M, y) -> InformationModel:
    """Condition on ``y = C x + noise`` with noise covariance ``M``.

    Returns the model with ``J + C^T M^{-1} C`` and ``h + C^T M^{-1} y``.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    M = np.atleast_2d(np.asarray(M, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    m, n = C.shape
    if n != model.n or M.shape != (m, m) or y.shape[0] != m:
        raise ConfigurationError(
            f"observation shapes do not conform: C {C.shape}, M {M.shape}, y {y.shape}, n={model.n}"
        )
    rhs = solve_or_none(M, np.column_stack([C, y]))
    if rhs is None:
        raise SingularityError("observation noise covariance M is singular")
    J = model.J + C.T @ rhs[:, :n]
    J = 0.5 * (J + J.T)
    h = (np.zeros(n) if model.h is None else model.h) + C.T @ rhs[:, n]
    return InformationModel(J, h)
