"""Property states, site orderings and flip graphs.

A property state is a corner of the n-cube, written as a bit-string such as
``"101"`` (position 0 is ``x``, 1 is ``y``, 2 is ``z``).  A flip graph fixes an
ordering of all 2**n corners and a symmetric 0/1 adjacency matrix whose
off-diagonal entries only join corners differing in one property.  Diagonal
entries are the "no flip" transitions.

All site indices used outside this module are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

PROPERTY_NAMES = "xyz"


class StateSpaceError(ValueError):
    """Raised for malformed states, orderings or flip graphs."""


@dataclass(frozen=True, order=True)
class PropertyState:
    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) < 2:
            raise StateSpaceError(f"need at least 2 properties, got {len(self.bits)}")
        if any(b not in (0, 1) for b in self.bits):
            raise StateSpaceError(f"bits must be 0 or 1: {self.bits!r}")

    @classmethod
    def parse(cls, text: str) -> "PropertyState":
        text = text.strip()
        if not text or any(c not in "01" for c in text):
            raise StateSpaceError(f"not a bit-string: {text!r}")
        return cls(tuple(int(c) for c in text))

    @property
    def n(self) -> int:
        return len(self.bits)

    def __getitem__(self, pos: int) -> int:
        return self.bits[pos]

    def __str__(self) -> str:
        return "".join(map(str, self.bits))

    def hamming(self, other: "PropertyState") -> int:
        if other.n != self.n:
            raise StateSpaceError("states of different length")
        return sum(a != b for a, b in zip(self.bits, other.bits))


def as_state(s) -> PropertyState:
    if isinstance(s, PropertyState):
        return s
    if isinstance(s, str):
        return PropertyState.parse(s)
    return PropertyState(tuple(s))


@dataclass(frozen=True)
class SiteOrdering:
    """A permutation of all 2**n corners; position k holds site k+1."""

    sites: tuple[PropertyState, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        sites = tuple(as_state(s) for s in self.sites)
        object.__setattr__(self, "sites", sites)
        if not sites:
            raise StateSpaceError("empty ordering")
        n = sites[0].n
        if any(s.n != n for s in sites):
            raise StateSpaceError("all states in an ordering must have the same length")
        if len(sites) != 2**n or len(set(sites)) != len(sites):
            raise StateSpaceError(
                f"ordering must list each of the {2**n} corners exactly once"
            )
        object.__setattr__(self, "_index", {s: k + 1 for k, s in enumerate(sites)})

    @property
    def n(self) -> int:
        return self.sites[0].n

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def state_of_index(self, i: int) -> PropertyState:
        if not isinstance(i, int) or not 1 <= i <= len(self.sites):
            raise StateSpaceError(f"site index {i!r} outside [1, {len(self.sites)}]")
        return self.sites[i - 1]

    def index_of_state(self, s) -> int:
        s = as_state(s)
        try:
            return self._index[s]
        except KeyError:
            raise StateSpaceError(f"state {s} not in ordering") from None


# (111),(110),(100),(101),(001),(011),(010),(000)
STANDARD_SITES = ("111", "110", "100", "101", "001", "011", "010", "000")


def standard_ordering() -> SiteOrdering:
    return SiteOrdering(tuple(PropertyState.parse(s) for s in STANDARD_SITES))


def gray_ordering(n: int) -> SiteOrdering:
    """Reflected binary Gray code order, bit 0 leftmost.  Default for n != 3."""
    if n < 2:
        raise StateSpaceError("n must be at least 2")
    codes = [k ^ (k >> 1) for k in range(2**n)]
    return SiteOrdering(
        tuple(PropertyState(tuple((c >> (n - 1 - p)) & 1 for p in range(n))) for c in codes)
    )


def default_ordering(n: int) -> SiteOrdering:
    return standard_ordering() if n == 3 else gray_ordering(n)


def state_of_index(ordering: SiteOrdering, i: int) -> PropertyState:
    return ordering.state_of_index(i)


def index_of_state(ordering: SiteOrdering, s) -> int:
    return ordering.index_of_state(s)


@dataclass(frozen=True)
class FlipGraph:
    ordering: SiteOrdering
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        adj = tuple(tuple(int(v) for v in row) for row in self.adjacency)
        object.__setattr__(self, "adjacency", adj)
        size = len(self.ordering)
        if len(adj) != size or any(len(row) != size for row in adj):
            raise StateSpaceError(f"adjacency must be {size}x{size}")
        for i, row in enumerate(adj):
            for j, v in enumerate(row):
                if v not in (0, 1):
                    raise StateSpaceError("adjacency entries must be 0 or 1")
                if v != adj[j][i]:
                    raise StateSpaceError(f"adjacency not symmetric at ({i + 1},{j + 1})")
                if v and i != j:
                    si, sj = self.ordering.sites[i], self.ordering.sites[j]
                    if si.hamming(sj) != 1:
                        raise StateSpaceError(f"invalid flip {si} -> {sj}")

    @property
    def size(self) -> int:
        return len(self.adjacency)

    @property
    def n(self) -> int:
        return self.ordering.n

    def state(self, i: int) -> PropertyState:
        return self.ordering.state_of_index(i)

    def index(self, s) -> int:
        return self.ordering.index_of_state(s)

    def has(self, i: int, j: int) -> bool:
        return bool(self.adjacency[i - 1][j - 1])

    def targets(self, i: int) -> list[int]:
        return [j + 1 for j, v in enumerate(self.adjacency[i - 1]) if v]

    def transitions(self) -> list[tuple[int, int]]:
        """Every directed transition (i, j) with a 1 entry, 1-based, row-major."""
        return [
            (i + 1, j + 1)
            for i, row in enumerate(self.adjacency)
            for j, v in enumerate(row)
            if v
        ]

    def transition_count(self) -> int:
        return sum(map(sum, self.adjacency))

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, j in self.transitions() if i < j]

    def self_loops(self) -> list[int]:
        return [i for i, j in self.transitions() if i == j]


def build_graph(
    ordering: SiteOrdering,
    edges: Iterable[tuple[int, int]],
    self_loops: Iterable[int],
) -> FlipGraph:
    """Flip graph from undirected edges and self-loops given as 1-based indices."""
    size = len(ordering)
    adj = [[0] * size for _ in range(size)]

    def check(i):
        if not isinstance(i, int) or not 1 <= i <= size:
            raise StateSpaceError(f"site index {i!r} outside [1, {size}]")

    seen = set()
    for e in edges:
        i, j = e
        check(i)
        check(j)
        key = frozenset((i, j))
        if i == j:
            raise StateSpaceError(f"edge ({i},{j}) is a loop; list it as a self-loop")
        if key in seen:
            raise StateSpaceError(f"duplicate edge ({i},{j})")
        seen.add(key)
        si, sj = ordering.state_of_index(i), ordering.state_of_index(j)
        if si.hamming(sj) != 1:
            raise StateSpaceError(
                f"invalid flip {si} <-> {sj}: differs in {si.hamming(sj)} properties"
            )
        adj[i - 1][j - 1] = adj[j - 1][i - 1] = 1
    loops = list(self_loops)
    if len(set(loops)) != len(loops):
        raise StateSpaceError("duplicate self-loop")
    for i in loops:
        check(i)
        adj[i - 1][i - 1] = 1
    return FlipGraph(ordering, tuple(map(tuple, adj)))


def build_graph_from_states(
    edges: Iterable[Sequence],
    self_loops: Iterable,
    ordering: SiteOrdering | None = None,
) -> FlipGraph:
    """Same as :func:`build_graph` but with bit-strings instead of indices."""
    edges = [(as_state(a), as_state(b)) for a, b in edges]
    self_loops = [as_state(s) for s in self_loops]
    if ordering is None:
        states = [s for e in edges for s in e] + self_loops
        if not states:
            raise StateSpaceError("cannot infer n from an empty graph")
        ordering = default_ordering(states[0].n)
    return build_graph(
        ordering,
        [(ordering.index_of_state(a), ordering.index_of_state(b)) for a, b in edges],
        [ordering.index_of_state(s) for s in self_loops],
    )


STANDARD_EDGES = (("110", "100"), ("100", "101"), ("101", "001"),
                  ("001", "011"), ("011", "010"), ("010", "110"))


def build_standard_graph() -> FlipGraph:
    """The 8-site Mermin graph: a 6-cycle on the mixed corners, (111) and (000)
    isolated, a self-loop at every site."""
    return build_graph_from_states(STANDARD_EDGES, STANDARD_SITES, standard_ordering())


def build_full_cube(n: int = 3, ordering: SiteOrdering | None = None) -> FlipGraph:
    """Every single-property flip allowed, plus all self-loops."""
    ordering = ordering or default_ordering(n)
    edges = []
    for i, si in enumerate(ordering.sites, 1):
        for j, sj in enumerate(ordering.sites, 1):
            if i < j and si.hamming(sj) == 1:
                edges.append((i, j))
    return build_graph(ordering, edges, range(1, len(ordering) + 1))


def all_corners(n: int) -> list[PropertyState]:
    return [PropertyState(bits) for bits in product((0, 1), repeat=n)]


@dataclass(frozen=True)
class WalkConfig:
    """A graph plus a start: either one 1-based site or an explicit count vector."""

    graph: FlipGraph
    start: int | tuple[int, ...]
    label: str = ""

    def __post_init__(self):
        size = self.graph.size
        if isinstance(self.start, int):
            if not 1 <= self.start <= size:
                raise StateSpaceError(f"start site {self.start} outside [1, {size}]")
        else:
            start = tuple(int(v) for v in self.start)
            object.__setattr__(self, "start", start)
            if len(start) != size:
                raise StateSpaceError(f"start vector needs {size} entries")
            if any(v < 0 for v in start) or not any(start):
                raise StateSpaceError("start vector must be non-negative and not all zero")

    def start_counts(self) -> tuple[int, ...]:
        if isinstance(self.start, int):
            return tuple(int(k == self.start) for k in range(1, self.graph.size + 1))
        return self.start
