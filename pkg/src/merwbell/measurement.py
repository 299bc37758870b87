"""One-step measurements of two properties and the Mermin sum.

During a measurement step the two measured properties are frozen: only
transitions that keep both bits unchanged survive (self-loops always do).
Paths arriving with the arrival distribution then continue along the
surviving transitions, each admitted continuation counted once.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .path_ensemble import ArrivalResult, PathEnsembleError
from .statespace import PROPERTY_NAMES, FlipGraph, PropertyState, all_corners, as_state


class MeasurementError(ValueError):
    pass


@dataclass(frozen=True)
class MeasurementPair:
    a: int
    b: int

    def __post_init__(self):
        if self.a == self.b:
            raise MeasurementError("a measurement pair needs two distinct properties")
        if self.a < 0 or self.b < 0:
            raise MeasurementError("property positions are non-negative")

    @classmethod
    def parse(cls, text: str) -> "MeasurementPair":
        """``"xy"``, ``"yz"``, ``"zx"`` or ``"i-j"`` with 0-based positions."""
        text = text.strip().lower()
        if "-" in text:
            a, _, b = text.partition("-")
            try:
                return cls(int(a), int(b))
            except ValueError:
                raise MeasurementError(f"bad pair {text!r}") from None
        if len(text) == 2 and all(c in PROPERTY_NAMES for c in text):
            return cls(PROPERTY_NAMES.index(text[0]), PROPERTY_NAMES.index(text[1]))
        raise MeasurementError(f"bad pair {text!r}; use xy, yz, zx or i-j")

    def check(self, n: int):
        if self.a >= n or self.b >= n:
            raise MeasurementError(f"pair {self} refers to a property beyond n={n}")

    def holds(self, s: PropertyState) -> bool:
        return s[self.a] == s[self.b]

    def __str__(self) -> str:
        if self.a < 3 and self.b < 3:
            return PROPERTY_NAMES[self.a] + PROPERTY_NAMES[self.b]
        return f"{self.a}-{self.b}"


XY = MeasurementPair(0, 1)
YZ = MeasurementPair(1, 2)
ZX = MeasurementPair(2, 0)
MERMIN_PAIRS = (XY, YZ, ZX)


@dataclass(frozen=True)
class TrajectoryEnsemble:
    transitions: tuple[tuple[int, int], ...]
    weights: tuple[Fraction, ...]
    pair: MeasurementPair | None
    graph: FlipGraph

    def __len__(self):
        return len(self.transitions)


@dataclass(frozen=True)
class MeasurementOutcome:
    pair: MeasurementPair
    p_equal: Fraction
    trajectory_count: int
    favorable_count: int

    @property
    def flat_ratio(self) -> str:
        """Favorable over total trajectories, unreduced (``"2/10"``)."""
        return f"{self.favorable_count}/{self.trajectory_count}"


@dataclass(frozen=True)
class BellSum:
    total: Fraction
    terms: tuple  # of (MeasurementPair, Fraction)
    outcomes: tuple = ()  # MeasurementOutcome per pair, measured mode only

    @property
    def violated(self) -> bool:
        return self.total < 1


@dataclass(frozen=True)
class JointDistribution:
    """Probability per corner of the n-cube."""

    probs: Mapping[PropertyState, Fraction]

    def __post_init__(self):
        probs = {as_state(k): Fraction(v) for k, v in dict(self.probs).items()}
        object.__setattr__(self, "probs", probs)
        if any(v < 0 for v in probs.values()):
            raise MeasurementError("negative probability in joint distribution")
        if sum(probs.values()) != 1:
            raise MeasurementError("joint distribution does not sum to 1")
        if len({s.n for s in probs}) > 1:
            raise MeasurementError("mixed state lengths in joint distribution")

    @classmethod
    def uniform(cls, n: int = 3) -> "JointDistribution":
        corners = all_corners(n)
        return cls({s: Fraction(1, len(corners)) for s in corners})

    @classmethod
    def point(cls, s) -> "JointDistribution":
        return cls({as_state(s): Fraction(1)})

    @classmethod
    def from_arrival(cls, arrival: ArrivalResult) -> "JointDistribution":
        dist = arrival.distribution
        if dist.ordering is None or not dist.is_exact:
            raise MeasurementError("need an exact arrival distribution with its ordering")
        return cls({s: p for s, p in zip(dist.ordering.sites, dist.probs) if p})

    def p_equal(self, pair: MeasurementPair) -> Fraction:
        return sum((p for s, p in self.probs.items() if pair.holds(s)), Fraction(0))


def mask_graph(graph: FlipGraph, pair: MeasurementPair) -> FlipGraph:
    """Keep only transitions that leave both measured properties unchanged."""
    pair.check(graph.n)
    sites = graph.ordering.sites
    adj = tuple(
        tuple(
            int(v and sites[i][pair.a] == sites[j][pair.a] and sites[i][pair.b] == sites[j][pair.b])
            for j, v in enumerate(row)
        )
        for i, row in enumerate(graph.adjacency)
    )
    return FlipGraph(graph.ordering, adj)


def enumerate_trajectories(
    masked: FlipGraph,
    arrival: ArrivalResult,
    pair: MeasurementPair | None = None,
) -> TrajectoryEnsemble:
    """All one-step transitions out of the arrival support, weighted by the
    arrival probability of their start site."""
    if not arrival.converged:
        raise PathEnsembleError("arrival distribution did not converge")
    if pair is not None:
        pair.check(masked.n)
    transitions = tuple((i, j) for i, j in masked.transitions() if i in arrival.support)
    if not transitions:
        raise MeasurementError("measurement admits no trajectories")
    raw = [Fraction(arrival[i]) for i, _ in transitions]
    total = sum(raw)
    return TrajectoryEnsemble(transitions, tuple(w / total for w in raw), pair, masked)


def measurement_ensemble(
    graph: FlipGraph, arrival: ArrivalResult, pair: MeasurementPair
) -> TrajectoryEnsemble:
    return enumerate_trajectories(mask_graph(graph, pair), arrival, pair)


def equality_probability(ensemble: TrajectoryEnsemble) -> MeasurementOutcome:
    pair = ensemble.pair
    if pair is None:
        raise MeasurementError("ensemble carries no measurement pair")
    if not ensemble.transitions:
        raise MeasurementError("empty ensemble")
    g = ensemble.graph
    p = Fraction(0)
    favorable = 0
    for (i, _), w in zip(ensemble.transitions, ensemble.weights):
        if pair.holds(g.state(i)):
            p += w
            favorable += 1
    return MeasurementOutcome(pair, p, len(ensemble.transitions), favorable)


def _pairs_for(n: int, pairs: Iterable[MeasurementPair] | None) -> tuple[MeasurementPair, ...]:
    if pairs is None:
        if n != 3:
            raise MeasurementError("explicit pairs are required when n != 3")
        return MERMIN_PAIRS
    pairs = tuple(pairs)
    for p in pairs:
        p.check(n)
    return pairs


def bell_sum_measured(
    graph: FlipGraph,
    arrival: ArrivalResult,
    pairs: Sequence[MeasurementPair] | None = None,
) -> BellSum:
    """Sum of equality probabilities, each pair on its own masked ensemble."""
    outcomes = tuple(
        equality_probability(measurement_ensemble(graph, arrival, p))
        for p in _pairs_for(graph.n, pairs)
    )
    return BellSum(
        sum((o.p_equal for o in outcomes), Fraction(0)),
        tuple((o.pair, o.p_equal) for o in outcomes),
        outcomes,
    )


def bell_sum_unmeasured(
    arrival: ArrivalResult, pairs: Sequence[MeasurementPair] | None = None
) -> BellSum:
    """Sum of equality probabilities read straight off the arrival distribution."""
    joint = JointDistribution.from_arrival(arrival)
    n = next(iter(joint.probs)).n
    terms = tuple((p, joint.p_equal(p)) for p in _pairs_for(n, pairs))
    return BellSum(sum((v for _, v in terms), Fraction(0)), terms)


def mermin_bound_check(joint: JointDistribution) -> tuple[Fraction, bool]:
    """``P(x=y) + P(y=z) + P(z=x)`` and whether it is at least 1."""
    if any(s.n != 3 for s in joint.probs):
        raise MeasurementError("the Mermin bound is defined for three properties")
    total = sum((joint.p_equal(p) for p in MERMIN_PAIRS), Fraction(0))
    return total, total >= 1
