"""Gaussian belief propagation on tree-structured scalar models.

On a tree the only simple cycles at a vertex are its self-loop and one
backtrack per neighbor, so the cycle sum collapses to the message update::

    J_hat[d \\ b] = J[d, d] + sum over c in N(d) minus b of dJ[c -> d]
    dJ[d -> b]    = -J[b, d] * J[d, b] / J_hat[d \\ b]

and the marginal precision is ``J[a, a] + sum of dJ[b -> a]``. Messages are
exact after one leaves-to-root sweep and one root-to-leaves sweep.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import SingularityError, TopologyError
from .graph import ModelGraph, build_graph
from .model import InformationModel


@dataclass
class MessageTable:
    """Converged GaBP messages and marginal precisions.

    Attributes:
        messages: ``(d, b) -> dJ[d -> b]`` for every directed tree edge.
        marginals: Marginal precision ``J_hat[a] = 1 / Sigma[a, a]`` per vertex.
    """

    messages: Dict[Tuple[int, int], float]
    marginals: np.ndarray

    @property
    def variances(self) -> np.ndarray:
        return 1.0 / self.marginals


def is_tree(graph: ModelGraph) -> bool:
    """True iff every connected component is acyclic (self-loops ignored)."""
    parent = list(graph.vertices)

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for v, nbrs in enumerate(graph.adjacency):
        for u in nbrs:
            if u <= v:
                continue
            rv, ru = find(v), find(u)
            if rv == ru:
                return False
            parent[rv] = ru
    return True


def _orientation(graph, roots=None):
    """BFS order and parent map, rooting each component at its lowest vertex."""
    order, parent = [], {}
    seen = np.zeros(graph.n_vertices, dtype=bool)
    starts = list(roots or []) + list(graph.vertices)
    for r in starts:
        if seen[r]:
            continue
        seen[r] = True
        parent[r] = -1
        queue = [r]
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            for u in graph.adjacency[v]:
                if not seen[u]:
                    seen[u] = True
                    parent[u] = v
                    queue.append(u)
        order.extend(queue)
    return order, parent


def gabp_marginals(model: InformationModel, graph: Optional[ModelGraph] = None,
                   roots=None) -> MessageTable:
    """Exact marginal precisions of a tree-structured scalar model.

    Args:
        model: Information model; its graph must be a forest.
        graph: Prebuilt singleton-partition graph (built from ``model`` if omitted).
        roots: Optional root vertices (0-based) to orient components; the
            default roots each component at its lowest vertex.

    Raises:
        TopologyError: the graph has a cycle or is block-partitioned.
        SingularityError: an intermediate precision is not positive.
    """
    if graph is None:
        graph = build_graph(model)
    if not graph.is_scalar:
        raise TopologyError("GaBP runs on scalar (singleton-partition) graphs only")
    if not is_tree(graph):
        raise TopologyError("GaBP requires a tree-structured model but the graph has a cycle")
    J = graph.scalar_arrays()[4]
    order, parent = _orientation(graph, roots)
    children = {v: [] for v in order}
    for v in order:
        if parent[v] >= 0:
            children[parent[v]].append(v)
    messages = {}

    def send(d, b, incoming):
        prec = J[d, d] + incoming
        if not prec > 0:
            raise SingularityError(
                f"nonpositive precision {prec!r} at vertex {d + 1} excluding neighbor {b + 1}",
                deleted=[b],
            )
        messages[(d, b)] = -J[b, d] * J[d, b] / prec

    # leaves to root
    for v in reversed(order):
        b = parent[v]
        if b >= 0:
            send(v, b, sum(messages[(c, v)] for c in children[v]))
    # root to leaves
    for v in order:
        into = {u: messages[(u, v)] for u in children[v]}
        if parent[v] >= 0:
            into[parent[v]] = messages[(parent[v], v)]
        for c in children[v]:
            send(v, c, sum(m for u, m in into.items() if u != c))
    marginals = np.empty(graph.n_vertices)
    for v in graph.vertices:
        prec = J[v, v] + sum(messages[(u, v)] for u in graph.adjacency[v])
        if not prec > 0:
            raise SingularityError(f"nonpositive marginal precision {prec!r} at vertex {v + 1}")
        marginals[v] = prec
    return MessageTable(messages, marginals)
