"""Hierarchical loop and aggregate types used by the noisy solver."""

import math
from dataclasses import dataclass, field
from typing import FrozenSet, Optional, Set, Tuple

from crosscut.models.puzzle import EdgeRef, Mating


@dataclass
class LoopNode:
    """A loop of matings over a set of pieces.

    Level-0 loops keep their four matings in walk order, starting at the
    lowest mating. Higher levels keep a sorted tuple. quality is filled in by
    ranking; lower is better and inf means discarded.
    """

    level: int
    matings: Tuple[Mating, ...]
    pieces: FrozenSet[int]
    boundary: Tuple[EdgeRef, ...] = ()
    quality: float = math.inf
    parent: Optional["LoopNode"] = field(default=None, repr=False, compare=False)

    @property
    def key(self) -> Tuple[FrozenSet[int], FrozenSet[Mating]]:
        return (self.pieces, frozenset(self.matings))

    @property
    def used_edges(self) -> FrozenSet[EdgeRef]:
        return frozenset(e for m in self.matings for e in m.edges)

    def sort_key(self) -> Tuple[int, float, Tuple[Mating, ...]]:
        """Merge order: higher level first, then lower Q, then canonical matings."""
        return (-self.level, self.quality, tuple(sorted(self.matings)))


@dataclass
class Aggregate:
    """Pieces and matings accumulated while merging loops."""

    pieces: Set[int] = field(default_factory=set)
    matings: Set[Mating] = field(default_factory=set)

    @property
    def used_edges(self) -> Set[EdgeRef]:
        return {e for m in self.matings for e in m.edges}
