"""Exact path counting on a flip graph.

Path counts ``n_t = M**t n_0`` are kept as Python integers, probabilities as
:class:`fractions.Fraction`.  Floats only appear in the optional power
iteration mode of :func:`arrival_distribution` and in the fallback for
components whose growth rate is irrational.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .statespace import FlipGraph, SiteOrdering

log = logging.getLogger(__name__)


class PathEnsembleError(ValueError):
    pass


class ConvergenceError(PathEnsembleError):
    pass


@dataclass(frozen=True)
class CountVector:
    counts: tuple[int, ...]
    t: int = 0

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if any(c < 0 for c in counts):
            raise PathEnsembleError("path counts must be non-negative")
        if not any(counts):
            raise PathEnsembleError("count vector is all zero")
        if self.t < 0:
            raise PathEnsembleError("time index must be >= 0")

    @classmethod
    def delta(cls, size: int, site: int) -> "CountVector":
        if not 1 <= site <= size:
            raise PathEnsembleError(f"site {site} outside [1, {size}]")
        return cls(tuple(int(k == site) for k in range(1, size + 1)))

    def __len__(self):
        return len(self.counts)

    def __getitem__(self, site: int) -> int:
        return self.counts[site - 1]


@dataclass(frozen=True)
class Distribution:
    """Probability per site.  Entries are Fractions summing to exactly 1, except
    for results of float-mode iteration where they are floats."""

    probs: tuple
    ordering: SiteOrdering | None = None

    def __post_init__(self):
        if any(p < 0 for p in self.probs):
            raise PathEnsembleError("negative probability")
        if all(isinstance(p, Fraction) for p in self.probs) and sum(self.probs) != 1:
            raise PathEnsembleError(f"probabilities sum to {sum(self.probs)}, not 1")

    def __getitem__(self, site: int):
        return self.probs[site - 1]

    def __len__(self):
        return len(self.probs)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(p, Fraction) for p in self.probs)


@dataclass(frozen=True)
class ArrivalResult:
    distribution: Distribution
    growth_rate: object  # Fraction when certified, mpf/float otherwise
    support: frozenset
    converged: bool = True
    iterations: int = 0
    exact: bool = True

    def __getitem__(self, site: int):
        return self.distribution[site]


def _as_counts(graph: FlipGraph, n0) -> CountVector:
    n0 = n0 if isinstance(n0, CountVector) else CountVector(tuple(n0))
    if len(n0) != graph.size:
        raise PathEnsembleError(f"count vector has {len(n0)} entries, graph has {graph.size} sites")
    return n0


def _step(adj, v: Sequence[int]) -> tuple[int, ...]:
    return tuple(sum(v[j] for j, a in enumerate(row) if a) for row in adj)


def evolve(graph: FlipGraph, n0, t: int) -> CountVector:
    """Apply the adjacency matrix ``t`` times to ``n0`` in exact integers."""
    if t < 0:
        raise PathEnsembleError("steps must be >= 0")
    n0 = _as_counts(graph, n0)
    v = n0.counts
    adj = graph.adjacency
    for _ in range(t):
        v = _step(adj, v)
    if not any(v):
        raise PathEnsembleError(f"all paths die out within {t} steps")
    return CountVector(v, n0.t + t)


def evolve_sequence(graph: FlipGraph, n0, t: int) -> list[CountVector]:
    """``[n_0, n_1, ..., n_t]``."""
    n0 = _as_counts(graph, n0)
    out = [n0]
    for _ in range(t):
        out.append(evolve(graph, out[-1], 1))
    return out


def total_paths(n: CountVector) -> int:
    return sum(n.counts)


def suffix_continuation_counts(graph: FlipGraph, horizon: int) -> list[CountVector]:
    """``N_k(j)`` = number of length ``horizon - k`` walks starting at ``j``.

    Returned as ``[N_0, ..., N_T]`` with ``N_T`` all ones.
    """
    if horizon < 0:
        raise PathEnsembleError("horizon must be >= 0")
    out = [tuple(1 for _ in range(graph.size))]
    for _ in range(horizon):
        out.append(_step(graph.adjacency, out[-1]))
    out.reverse()
    return [CountVector(c, k) for k, c in enumerate(out)]


# -- arrival distribution ---------------------------------------------------

def components(graph: FlipGraph) -> list[list[int]]:
    """Connected components (1-based sites, sorted) of the flip graph."""
    seen = set()
    out = []
    for s in range(1, graph.size + 1):
        if s in seen:
            continue
        comp, stack = [], [s]
        seen.add(s)
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in graph.targets(i):
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        out.append(sorted(comp))
    return out


def _is_aperiodic(graph: FlipGraph, comp: list[int]) -> bool:
    if any(graph.has(i, i) for i in comp):
        return True
    # symmetric and connected: aperiodic iff not bipartite
    colour = {comp[0]: 0}
    stack = [comp[0]]
    while stack:
        i = stack.pop()
        for j in graph.targets(i):
            if j not in colour:
                colour[j] = 1 - colour[i]
                stack.append(j)
            elif colour[j] == colour[i]:
                return True
    return False


def _has_mass(graph: FlipGraph, comp: list[int]) -> bool:
    # a single site with neither edges nor self-loop loses its paths in one step
    return len(comp) > 1 or graph.has(comp[0], comp[0])


def _apply(graph: FlipGraph, comp: list[int], vec: dict) -> dict:
    return {i: sum(vec[j] for j in graph.targets(i)) for i in comp}


def _certify(graph: FlipGraph, comp: list[int], rate: int, psi: dict) -> bool:
    if any(psi[i] <= 0 for i in comp):
        return False
    mv = _apply(graph, comp, psi)
    return all(mv[i] == rate * psi[i] for i in comp)


def _null_vector(graph: FlipGraph, comp: list[int], rate: int) -> dict | None:
    """Exact kernel vector of (M_C - rate*I) by Gauss-Jordan over Fractions."""
    pos = {s: k for k, s in enumerate(comp)}
    m = len(comp)
    a = [[Fraction(int(graph.has(i, j)) - (rate if i == j else 0)) for j in comp] for i in comp]
    pivots = []
    r = 0
    for c in range(m):
        p = next((k for k in range(r, m) if a[k][c] != 0), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        piv = a[r][c]
        a[r] = [x / piv for x in a[r]]
        for k in range(m):
            if k != r and a[k][c] != 0:
                f = a[k][c]
                a[k] = [x - f * y for x, y in zip(a[k], a[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(m) if c not in pivots]
    if len(free) != 1:
        return None
    f = free[0]
    vec = [Fraction(0)] * m
    vec[f] = Fraction(1)
    for row, c in enumerate(pivots):
        vec[c] = -a[row][f]
    return {s: vec[pos[s]] for s in comp}


def _exact_perron(graph: FlipGraph, comp: list[int]):
    """Try to certify an integer Perron root and a rational positive eigenvector.

    Returns ``(rate, psi)`` or ``None``.  A positive eigenvector of an
    irreducible non-negative matrix always belongs to its Perron root, so the
    certificate is complete once ``M psi = rate psi`` holds exactly.
    """
    sub = np.array([[graph.has(i, j) for j in comp] for i in comp], dtype=float)
    vals, vecs = np.linalg.eigh(sub)
    lam = vals[-1]
    rate = round(lam)
    if abs(lam - rate) > 1e-8 or rate <= 0:
        return None
    v = np.abs(vecs[:, -1])
    if v.min() <= 0:
        return None
    # guess rational entries from the float eigenvector, then certify
    guess = {s: Fraction(float(x / v.min())).limit_denominator(10**6) for s, x in zip(comp, v)}
    if _certify(graph, comp, rate, guess):
        return Fraction(rate), guess
    if len(comp) <= 128:
        psi = _null_vector(graph, comp, rate)
        if psi is not None:
            if next(iter(psi.values())) < 0:
                psi = {k: -x for k, x in psi.items()}
            if _certify(graph, comp, rate, psi):
                return Fraction(rate), psi
    return None


def _approx_perron(graph: FlipGraph, comp: list[int], dps: int = 50):
    with mpmath.workdps(dps):
        sub = mpmath.matrix([[int(graph.has(i, j)) for j in comp] for i in comp])
        vals, vecs = mpmath.eigsy(sub)
        k = max(range(len(comp)), key=lambda q: vals[q])
        psi = {s: abs(vecs[r, k]) for r, s in enumerate(comp)}
        return +vals[k], psi


def _normalise(vec: dict, size: int) -> tuple[Fraction, ...]:
    total = sum(vec.values())
    return tuple(Fraction(vec.get(s, 0)) / total for s in range(1, size + 1))


def _check_reachable(graph: FlipGraph, n0: CountVector) -> list[list[int]]:
    support = {i for i, c in enumerate(n0.counts, 1) if c}
    reach = [c for c in components(graph) if support.intersection(c)]
    live = [c for c in reach if _has_mass(graph, c)]
    if not live:
        raise PathEnsembleError("all paths from the start die out (zero vector)")
    for c in live:
        if not _is_aperiodic(graph, c):
            raise PathEnsembleError(
                f"component {c} reachable from the start is periodic; the normalised "
                "counts have no limit (add a self-loop)"
            )
    return live


def arrival_distribution(
    graph: FlipGraph,
    n0,
    tolerance: float = 1e-12,
    max_iter: int = 10_000,
    exact: bool = True,
) -> ArrivalResult:
    """Limit of ``M**t n0 / sum(M**t n0)`` as t grows.

    In exact mode the dominant eigenvector of every reachable component is
    certified in rational arithmetic and the components carrying the largest
    growth rate are mixed by the projection of ``n0`` onto them.  In float
    mode plain power iteration runs until the geometric tail bound on the
    remaining change, estimated from successive differences, drops below
    ``tolerance``.
    """
    n0 = _as_counts(graph, n0)
    live = _check_reachable(graph, n0)
    if not exact:
        return _power_iteration(graph, n0, tolerance, max_iter)

    perron = {}
    all_exact = True
    for c in live:
        got = _exact_perron(graph, c)
        if got is None:
            all_exact = False
            got = _approx_perron(graph, c)
        perron[tuple(c)] = got

    if all_exact:
        top = max(rate for rate, _ in perron.values())
        dominant = [c for c, (rate, _) in perron.items() if rate == top]
    else:
        top = max(mpmath.mpf(rate) for rate, _ in perron.values())
        dominant = [c for c, (rate, _) in perron.items() if abs(mpmath.mpf(rate) - top) < 1e-30]

    limit = {}
    for c in dominant:
        psi = perron[c][1]
        if all_exact:
            coef = sum(psi[i] * n0[i] for i in c) / sum(psi[i] ** 2 for i in c)
            for i in c:
                limit[i] = coef * psi[i]
        else:
            with mpmath.workdps(50):
                coef = mpmath.fsum(psi[i] * n0[i] for i in c) / mpmath.fsum(psi[i] ** 2 for i in c)
                for i in c:
                    limit[i] = Fraction(mpmath.nstr(coef * psi[i], 40, min_fixed=-10**6, max_fixed=10**6))
    probs = _normalise(limit, graph.size)
    if not all_exact:
        # normalise once more so the Fractions sum to exactly 1
        probs = tuple(p / sum(probs) for p in probs)
    dist = Distribution(probs, graph.ordering)
    support = frozenset(i for i, p in enumerate(probs, 1) if p)
    return ArrivalResult(dist, top, support, True, 0, all_exact)


def _power_iteration(graph, n0, tolerance, max_iter) -> ArrivalResult:
    m = np.array(graph.adjacency, dtype=float)
    v = np.array(n0.counts, dtype=float)
    v /= v.sum()
    growth = 0.0
    prev = np.inf
    for it in range(1, max_iter + 1):
        w = m @ v
        growth = w.sum()
        if growth == 0:
            raise PathEnsembleError("all paths die out (zero vector)")
        w /= growth
        delta = np.abs(w - v).max()
        v = w
        # geometric tail bound from the observed contraction rate
        rho = delta / prev if prev > 0 else 0.0
        prev = delta
        if delta == 0 or (rho < 1 and delta * rho / (1 - rho) < tolerance and delta < tolerance):
            probs = tuple(float(x) for x in v)
            support = frozenset(i for i, p in enumerate(probs, 1) if p > tolerance)
            log.debug("power iteration converged after %d steps", it)
            return ArrivalResult(Distribution(probs, graph.ordering), float(growth),
                                 support, True, it, False)
    raise ConvergenceError(
        f"power iteration did not converge to {tolerance:g} within {max_iter} steps"
    )


# -- maximal entropy walk ---------------------------------------------------

@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix of the maximal entropy walk, defined on the arrival
    support only.  ``rows[i][j]`` is P(i -> j)."""

    support: frozenset
    rows: dict
    stationary_law: dict

    def prob(self, i: int, j: int) -> Fraction:
        if i not in self.support:
            raise PathEnsembleError(f"site {i} is outside the arrival support")
        return self.rows[i].get(j, Fraction(0))

    def as_list(self, size: int) -> list[list[Fraction]]:
        return [
            [self.rows[i].get(j, Fraction(0)) if i in self.support else Fraction(0)
             for j in range(1, size + 1)]
            for i in range(1, size + 1)
        ]


def merw_transition_matrix(graph: FlipGraph, arrival: ArrivalResult) -> TransitionMatrix:
    """P(i -> j) = M_ij psi_j / (lambda psi_i), psi the arrival vector.

    Rows are normalised by their own sum, which equals ``lambda psi_i`` whenever
    the eigen-equation holds; the result is then exactly row-stochastic.
    """
    if not arrival.converged:
        raise PathEnsembleError("arrival distribution did not converge")
    psi = arrival.distribution
    rows = {}
    for i in sorted(arrival.support):
        mass = {j: psi[j] for j in graph.targets(i) if j in arrival.support}
        total = sum(mass.values())
        if arrival.exact and total != arrival.growth_rate * psi[i]:
            raise PathEnsembleError(f"arrival vector is not an eigenvector at site {i}")
        rows[i] = {j: Fraction(w) / Fraction(total) for j, w in mass.items()}
    sq = {i: Fraction(psi[i]) ** 2 for i in arrival.support}
    z = sum(sq.values())
    return TransitionMatrix(frozenset(arrival.support), rows, {i: w / z for i, w in sq.items()})
