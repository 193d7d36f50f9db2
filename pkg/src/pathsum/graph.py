"""Weighted block graph of an information matrix and its prime walks.

Vertices are block indices ``0..B-1``. A set of vertices is carried as a
Python ``int`` bit mask (bit ``v`` set when ``v`` is a member), which hashes
in constant time and makes equal sets compare equal.

Simple paths and simple cycles are produced lazily by depth-first search,
visiting neighbors in ascending order, so emission order is deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Tuple

import numpy as np

from .errors import DomainError, PartitionError
from .model import BlockPartition, InformationModel

VertexSubset = int
SimplePath = Tuple[int, ...]
SimpleCycle = Tuple[int, ...]


def subset_of(vertices: Iterable[int]) -> VertexSubset:
    mask = 0
    for v in vertices:
        mask |= 1 << int(v)
    return mask


def members(mask: VertexSubset) -> list:
    out = []
    v = 0
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return out


def _as_mask(deleted) -> VertexSubset:
    if deleted is None:
        return 0
    if isinstance(deleted, (int, np.integer)):
        return int(deleted)
    return subset_of(deleted)


@dataclass(eq=False)
class ModelGraph:
    """Block graph ``G'`` of ``J`` under a partition.

    Attributes:
        model: The information model the weights are read from.
        partition: Block partition; vertex ``k`` is ``partition.blocks[k]``.
        adjacency: Sorted neighbor tuple per vertex, self excluded.
        self_loop: Whether each diagonal block is nonzero.
        drop_tolerance: Blocks whose entries are all ``<= drop_tolerance`` in
            magnitude are treated as absent (and as zero weights).
    """

    model: InformationModel
    partition: BlockPartition
    adjacency: tuple
    self_loop: tuple
    drop_tolerance: float = 0.0
    _weights: dict = field(default_factory=dict, repr=False)
    _neighbor_masks: tuple = field(default=(), repr=False)
    _scalar_cache: Optional[tuple] = field(default=None, repr=False)

    @property
    def n_vertices(self) -> int:
        return self.partition.size

    @property
    def vertices(self) -> range:
        return range(self.partition.size)

    @property
    def full_mask(self) -> VertexSubset:
        return (1 << self.n_vertices) - 1

    @property
    def is_scalar(self) -> bool:
        return self.partition.is_trivial

    @property
    def n_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def block_size(self, v: int) -> int:
        return len(self.partition.blocks[v])

    def edge_weight(self, i: int, j: int) -> np.ndarray:
        """Block ``J[I_i, I_j]``; the weight of the edge from ``j`` to ``i``."""
        w = self._weights.get((i, j))
        if w is None:
            return np.zeros((self.block_size(i), self.block_size(j)))
        return w

    def has_edge(self, i: int, j: int) -> bool:
        if i == j:
            return self.self_loop[i]
        return (i, j) in self._weights

    def neighbor_mask(self, v: int) -> VertexSubset:
        return self._neighbor_masks[v]

    def component_mask(self, alive: VertexSubset, seed: int) -> VertexSubset:
        """Vertices reachable from ``seed`` using only vertices in ``alive``."""
        comp = 1 << seed
        frontier = comp
        nbrs = self._neighbor_masks
        while frontier:
            low = frontier & -frontier
            v = low.bit_length() - 1
            frontier ^= low
            new = nbrs[v] & alive & ~comp
            comp |= new
            frontier |= new
        return comp

    def scalar_arrays(self):
        """CSR adjacency and dense weights for the scalar kernels.

        Returns ``(nbr, indptr, indices, data, dense)``: per-vertex neighbor
        masks, CSR adjacency with weights, and the ``B x B`` weight matrix
        with dropped entries zeroed.
        """
        if not self.is_scalar:
            raise ValueError("scalar arrays requested for a block-partitioned graph")
        if self._scalar_cache is not None:
            return self._scalar_cache
        B = self.n_vertices
        dense = np.zeros((B, B))
        for (i, j), w in self._weights.items():
            dense[i, j] = w[0, 0]
        for v in range(B):
            dense[v, v] = self.self_weight(v)[0, 0]
        indptr = np.zeros(B + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(a) for a in self.adjacency])
        indices = np.array([u for a in self.adjacency for u in a], dtype=np.int64)
        data = np.array([dense[v, u] for v, a in enumerate(self.adjacency) for u in a], dtype=float)
        nbr = np.array(self._neighbor_masks, dtype=np.int64)
        out = (nbr, indptr, indices, data, dense)
        self._scalar_cache = out
        return out

    def self_weight(self, v: int) -> np.ndarray:
        idx = self.partition.blocks[v]
        return self.model.J[np.ix_(idx, idx)]


def build_graph(
    model: InformationModel,
    partition: Optional[BlockPartition] = None,
    drop_tolerance: float = 0.0,
) -> ModelGraph:
    """Build the block graph of ``model`` under ``partition``.

    ``(j, i)`` is an edge iff some entry of ``J[I_i, I_j]`` exceeds
    ``drop_tolerance`` in magnitude. Singleton partition by default.
    """
    if drop_tolerance < 0:
        raise ValueError("drop_tolerance must be nonnegative")
    if partition is None:
        partition = BlockPartition.singletons(model.n)
    elif partition.n != model.n:
        raise PartitionError(f"partition covers {partition.n} variables, model has {model.n}")
    J = model.J
    B = partition.size
    blocks = [np.asarray(b) for b in partition.blocks]
    absJ = np.abs(J)
    owner = np.empty(model.n, dtype=np.int64)
    for k, b in enumerate(blocks):
        owner[b] = k
    rows, cols = np.nonzero(absJ > drop_tolerance)
    pattern = np.zeros((B, B), dtype=bool)
    pattern[owner[rows], owner[cols]] = True
    weights = {}
    adjacency = []
    for i in range(B):
        nbrs = []
        for j in np.flatnonzero(pattern[i]):
            j = int(j)
            if j == i:
                continue
            block = J[np.ix_(blocks[i], blocks[j])].copy()
            if drop_tolerance > 0:
                block[np.abs(block) <= drop_tolerance] = 0.0
            block.setflags(write=False)
            weights[(i, j)] = block
            nbrs.append(j)
        adjacency.append(tuple(nbrs))
    self_loop = tuple(bool(pattern[i, i]) for i in range(B))
    masks = tuple(subset_of(a) for a in adjacency)
    return ModelGraph(
        model=model,
        partition=partition,
        adjacency=tuple(adjacency),
        self_loop=self_loop,
        drop_tolerance=drop_tolerance,
        _weights=weights,
        _neighbor_masks=masks,
    )


def _check_vertex(graph: ModelGraph, deleted: VertexSubset, v: int, role: str):
    if not 0 <= v < graph.n_vertices:
        raise DomainError(f"{role} {v} is not a vertex of the graph")
    if deleted >> v & 1:
        raise DomainError(f"{role} {v} lies in the deleted set")


def enumerate_simple_paths(
    graph: ModelGraph, deleted, source: int, target: int
) -> Iterator[SimplePath]:
    """Yield every simple path from ``source`` to ``target`` avoiding ``deleted``.

    ``source == target`` yields the single length-0 path ``(source,)``.
    """
    deleted = _as_mask(deleted)
    _check_vertex(graph, deleted, source, "source")
    _check_vertex(graph, deleted, target, "target")
    return _paths(graph, deleted, source, target)


def _paths(graph, deleted, source, target):
    if source == target:
        yield (source,)
        return
    adj = graph.adjacency
    path = [source]
    on_path = deleted | 1 << source
    stack = [iter(adj[source])]
    while stack:
        for u in stack[-1]:
            if on_path >> u & 1:
                continue
            if u == target:
                yield tuple(path) + (u,)
                continue
            path.append(u)
            on_path |= 1 << u
            stack.append(iter(adj[u]))
            break
        else:
            stack.pop()
            on_path &= ~(1 << path.pop())


def enumerate_simple_cycles(graph: ModelGraph, deleted, root: int) -> Iterator[SimpleCycle]:
    """Yield every simple cycle rooted at ``root`` in the graph minus ``deleted``.

    A cycle ``(root, m2, ..., ml)`` closes with the edge ``ml -> root``. The
    self-loop ``(root,)`` comes first; each closing cycle is emitted before
    the search extends past its last vertex. Both orientations of a polygon
    are reported.
    """
    deleted = _as_mask(deleted)
    _check_vertex(graph, deleted, root, "root")
    return _cycles(graph, deleted, root)


def _cycles(graph, deleted, root):
    if graph.self_loop[root]:
        yield (root,)
    adj = graph.adjacency
    closing = graph.neighbor_mask(root)
    path = [root]
    on_path = deleted | 1 << root
    stack = [iter(adj[root])]
    while stack:
        for u in stack[-1]:
            if on_path >> u & 1:
                continue
            if closing >> u & 1:
                yield tuple(path) + (u,)
            path.append(u)
            on_path |= 1 << u
            stack.append(iter(adj[u]))
            break
        else:
            stack.pop()
            on_path &= ~(1 << path.pop())


def connected_component(graph: ModelGraph, deleted, seed: int) -> VertexSubset:
    """Mask of the component of ``seed`` in the graph with ``deleted`` removed."""
    deleted = _as_mask(deleted)
    _check_vertex(graph, deleted, seed, "seed")
    return graph.component_mask(graph.full_mask & ~deleted, seed)
