"""Canonical-form Gaussian model parameters and variable partitions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ModelError, PartitionError


@dataclass(frozen=True, eq=False)
class InformationModel:
    """Information matrix ``J`` and optional potential vector ``h``.

    The density is proportional to ``exp(-x^T J x / 2 + h^T x)``. ``J`` is
    stored dense and must be exactly symmetric.

    Args:
        J: Symmetric ``(n, n)`` array. Scipy sparse input is densified.
        h: Optional length-``n`` potential vector.
    """

    J: np.ndarray
    h: Optional[np.ndarray] = None

    def __post_init__(self):
        J = self.J
        if hasattr(J, "toarray"):
            J = J.toarray()
        J = np.array(J, dtype=float)
        if J.ndim != 2 or J.shape[0] != J.shape[1] or J.shape[0] == 0:
            raise ModelError(f"information matrix must be square and non-empty, got shape {J.shape}")
        if not np.all(np.isfinite(J)):
            raise ModelError("information matrix has non-finite entries")
        if not np.array_equal(J, J.T):
            i, j = np.argwhere(J != J.T)[0]
            raise ModelError(
                f"information matrix is not symmetric: J[{i + 1},{j + 1}]={J[i, j]!r} "
                f"but J[{j + 1},{i + 1}]={J[j, i]!r}"
            )
        J.setflags(write=False)
        object.__setattr__(self, "J", J)
        if self.h is not None:
            h = np.array(self.h, dtype=float).reshape(-1)
            if h.shape[0] != J.shape[0]:
                raise ModelError(f"potential vector has length {h.shape[0]}, expected {J.shape[0]}")
            h.setflags(write=False)
            object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.J.shape[0]

    def with_potential(self, h) -> "InformationModel":
        return InformationModel(self.J, h)

    def check_diagonal(self):
        """Raise if any diagonal entry is zero (impossible for ``J`` positive definite)."""
        zero = np.flatnonzero(np.diag(self.J) == 0)
        if zero.size:
            raise ModelError(
                f"zero diagonal entry at index {int(zero[0]) + 1}; J cannot be positive definite"
            )


@dataclass(frozen=True)
class BlockPartition:
    """Ordered disjoint index sets covering ``0..n-1`` (0-based internally).

    Each block is a sorted tuple. Blocks keep the order given by the caller,
    so block ``k`` is vertex ``k`` of the block graph.
    """

    blocks: tuple
    n: int

    def __post_init__(self):
        blocks = tuple(tuple(sorted(int(i) for i in b)) for b in self.blocks)
        if not blocks:
            raise PartitionError("partition must contain at least one block")
        seen = {}
        for k, block in enumerate(blocks):
            if not block:
                raise PartitionError(f"block {k + 1} is empty")
            for i in block:
                if i < 0 or i >= self.n:
                    raise PartitionError(f"index {i + 1} in block {k + 1} is outside 1..{self.n}")
                if i in seen:
                    raise PartitionError(
                        f"index {i + 1} appears in blocks {seen[i] + 1} and {k + 1}"
                    )
                seen[i] = k
        if len(seen) != self.n:
            missing = sorted(set(range(self.n)) - set(seen))
            raise PartitionError(
                f"partition does not cover all variables; missing {[i + 1 for i in missing[:10]]}"
            )
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def singletons(cls, n: int) -> "BlockPartition":
        return cls(tuple((i,) for i in range(n)), n)

    @classmethod
    def from_lists(cls, lists: Iterable[Sequence[int]], n: int, one_based: bool = True):
        """Build from index lists; ``one_based`` matches the CLI and file formats."""
        shift = 1 if one_based else 0
        try:
            blocks = tuple(tuple(int(i) - shift for i in b) for b in lists)
        except (TypeError, ValueError) as exc:
            raise PartitionError(f"partition must be a list of integer lists: {exc}") from None
        return cls(blocks, n)

    @classmethod
    def contiguous(cls, sizes: Sequence[int]) -> "BlockPartition":
        bounds = np.cumsum([0, *sizes])
        return cls(tuple(tuple(range(a, b)) for a, b in zip(bounds[:-1], bounds[1:])), int(bounds[-1]))

    @property
    def size(self) -> int:
        return len(self.blocks)

    @property
    def is_trivial(self) -> bool:
        return all(len(b) == 1 for b in self.blocks)

    def block_sizes(self):
        return [len(b) for b in self.blocks]
