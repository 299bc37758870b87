"""Seeded Monte Carlo checks of the exact results.

Random streams
--------------
Every draw comes from numpy's ``PCG64`` bit generator.  The stream used by
worker ``w`` for quantity ``k`` of a run seeded with ``seed`` is::

    PCG64(SeedSequence(seed, spawn_key=(k, w)))

Only raw 64-bit outputs (``random_raw``) are consumed.  Integers below a bound
``B`` are produced by rejection (accept ``r < floor(2**64 / B) * B``, return
``r % B``; bounds above 2**63 concatenate several words), so categorical draws
against rational weight tables compare integers with no float rounding.
Reports are therefore bit-identical for a fixed ``(seed, samples, workers)``.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import accumulate
from math import lcm
from typing import Mapping

import numpy as np
from scipy import stats

from .measurement import (
    MERMIN_PAIRS,
    MeasurementPair,
    TrajectoryEnsemble,
    bell_sum_measured,
    bell_sum_unmeasured,
    equality_probability,
    measurement_ensemble,
)
from .path_ensemble import (
    ArrivalResult,
    CountVector,
    PathEnsembleError,
    arrival_distribution,
    evolve,
    suffix_continuation_counts,
)
from .statespace import FlipGraph, WalkConfig

_TWO64 = 1 << 64


@dataclass(frozen=True)
class SamplerConfig:
    seed: int = 0
    samples: int = 100_000
    workers: int = 1

    def __post_init__(self):
        if not 0 <= self.seed < _TWO64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def split(self) -> list[int]:
        q, r = divmod(self.samples, self.workers)
        return [q + (w < r) for w in range(self.workers)]


def stream(seed: int, key: int, worker: int) -> np.random.PCG64:
    return np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(key, worker)))


def draw_below(bitgen: np.random.PCG64, bound: int, size: int) -> list[int] | np.ndarray:
    """``size`` independent uniform integers in ``[0, bound)``."""
    if bound < 1:
        raise ValueError("bound must be positive")
    if bound <= 1 << 63:
        limit = (_TWO64 // bound) * bound
        out = np.empty(0, dtype=np.uint64)
        while out.size < size:
            raw = bitgen.random_raw(size - out.size)
            if limit < _TWO64:
                raw = raw[raw < np.uint64(limit)]
            out = np.concatenate([out, raw])
        return (out % np.uint64(bound)).astype(np.int64)
    words = (bound.bit_length() + 63) // 64
    span = 1 << (64 * words)
    limit = (span // bound) * bound
    res = []
    while len(res) < size:
        r = 0
        for w in bitgen.random_raw(words).tolist():
            r = (r << 64) | w
        if r < limit:
            res.append(r % bound)
    return res


def _categorical(bitgen, weights, size: int) -> np.ndarray:
    """Indices drawn from exact non-negative integer or rational weights."""
    weights = [Fraction(w) for w in weights]
    d = lcm(*(w.denominator for w in weights))
    ints = [int(w * d) for w in weights]
    cum = list(accumulate(ints))
    u = draw_below(bitgen, cum[-1], size)
    if isinstance(u, np.ndarray):
        return np.searchsorted(np.array(cum, dtype=np.int64), u, side="right")
    return np.array([bisect_right(cum, x) for x in u], dtype=np.int64)


def _run_workers(fn, cfg: SamplerConfig, key: int):
    sizes = cfg.split()
    jobs = [(stream(cfg.seed, key, w), n) for w, n in enumerate(sizes)]
    if cfg.workers == 1:
        return [fn(*jobs[0])]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


# -- reports ----------------------------------------------------------------

@dataclass(frozen=True)
class EstimateRow:
    name: str
    exact: Fraction
    estimate: float
    stderr: float
    z: float
    samples: int = 0


@dataclass(frozen=True)
class ChiSquare:
    name: str
    statistic: float
    dof: int
    p_value: float
    samples: int = 0


@dataclass(frozen=True)
class EstimateReport:
    rows: tuple = ()
    chi_square: tuple = ()
    seed: int = 0
    samples: int = 0
    workers: int = 1
    z_limit: float = 4.0
    p_min: float = 1e-3

    def row(self, name: str) -> EstimateRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def failures(self) -> list[str]:
        bad = [r.name for r in self.rows if not abs(r.z) < self.z_limit]
        bad += [c.name for c in self.chi_square if not c.p_value > self.p_min]
        return bad

    @property
    def passed(self) -> bool:
        return not self.failures()

    def merged(self, other: "EstimateReport") -> "EstimateReport":
        return EstimateReport(self.rows + other.rows, self.chi_square + other.chi_square,
                              self.seed, self.samples, self.workers, self.z_limit, self.p_min)


def _z(estimate: float, exact: Fraction, se: float) -> float:
    diff = estimate - float(exact)
    if diff == 0:
        return 0.0
    return diff / se


def proportion_row(name: str, exact, hits: int, n: int) -> EstimateRow:
    """Row for a Bernoulli proportion.  The standard error uses the add-one
    estimate (hits+1)/(n+2) so it stays positive at 0 or n hits."""
    est = hits / n
    smooth = (hits + 1) / (n + 2)
    se = math.sqrt(smooth * (1 - smooth) / n)
    return EstimateRow(name, Fraction(exact), est, se, _z(est, Fraction(exact), se), n)


def mean_row(name: str, exact, values: np.ndarray, value_range: float = 1.0) -> EstimateRow:
    """Row for a sample mean; the variance is floored at that of one
    add-one pseudo-observation so the error stays positive."""
    n = len(values)
    est = float(values.mean())
    var = float(values.var(ddof=1)) if n > 1 else 0.0
    var = max(var, value_range**2 / (4 * (n + 2)))
    se = math.sqrt(var / n)
    return EstimateRow(name, Fraction(exact), est, se, _z(est, Fraction(exact), se), n)


def chi_square(name: str, observed, expected_probs) -> ChiSquare:
    """Pearson goodness of fit; cells with zero expected probability must be empty."""
    observed = np.asarray(observed, dtype=float)
    n = observed.sum()
    probs = np.array([float(p) for p in expected_probs])
    live = probs > 0
    if observed[~live].any():
        return ChiSquare(name, math.inf, int(live.sum()) - 1, 0.0, int(n))
    dof = int(live.sum()) - 1
    if dof == 0:
        return ChiSquare(name, 0.0, 0, 1.0, int(n))
    exp = probs[live] * n
    stat = float(((observed[live] - exp) ** 2 / exp).sum())
    return ChiSquare(name, stat, dof, float(stats.chi2.sf(stat, dof)), int(n))


# -- samplers ---------------------------------------------------------------

def draw_transitions(ensemble: TrajectoryEnsemble, cfg: SamplerConfig, key: int = 0) -> np.ndarray:
    """Per-transition counts of ``cfg.samples`` i.i.d. draws from the ensemble."""
    if not ensemble.transitions:
        raise ValueError("empty ensemble")
    m = len(ensemble.transitions)

    def work(bitgen, n):
        if n == 0:
            return np.zeros(m, dtype=np.int64)
        return np.bincount(_categorical(bitgen, ensemble.weights, n), minlength=m)

    return sum(_run_workers(work, cfg, key))


def sample_measurement(ensemble: TrajectoryEnsemble, cfg: SamplerConfig, key: int = 0) -> EstimateReport:
    """Estimate the equality probability of a measurement by drawing trajectories."""
    pair = ensemble.pair
    exact = equality_probability(ensemble)
    counts = draw_transitions(ensemble, cfg, key)
    g = ensemble.graph
    favorable = np.array([pair.holds(g.state(i)) for i, _ in ensemble.transitions])
    hits = int(counts[favorable].sum())
    row = proportion_row(f"p_equal[{pair}]", exact.p_equal, hits, cfg.samples)
    chi = chi_square(f"trajectories[{pair}]", counts, ensemble.weights)
    return EstimateReport((row,), (chi,), cfg.seed, cfg.samples, cfg.workers)


@dataclass(frozen=True)
class PathSample:
    start: int
    horizon: int
    endpoints: tuple[int, ...]  # tally per 1-based site
    paths: np.ndarray | None = field(default=None, compare=False)  # (samples, horizon+1), 1-based


def _walk(graph: FlipGraph, suffix, start: int, horizon: int, bitgen, n: int, keep: bool):
    cur = np.full(n, start, dtype=np.int64)
    hist = [cur.copy()] if keep else None
    for k in range(horizon):
        nxt = np.empty_like(cur)
        after = suffix[k + 1]
        for i in np.unique(cur).tolist():
            sel = np.flatnonzero(cur == i)
            targets = [j for j in graph.targets(i) if after[j]]
            idx = _categorical(bitgen, [after[j] for j in targets], sel.size)
            nxt[sel] = np.asarray(targets, dtype=np.int64)[idx]
        cur = nxt
        if keep:
            hist.append(cur.copy())
    return cur, (np.stack(hist, axis=1) if keep else None)


def sample_uniform_path(
    graph: FlipGraph,
    start: int,
    horizon: int,
    cfg: SamplerConfig,
    key: int = 0,
    keep_paths: bool = True,
) -> PathSample:
    """Draw length-``horizon`` walks from ``start``, each with probability
    ``1 / (number of such walks)``.

    Step k moves from i to j with probability ``N_{k+1}(j) / N_k(i)``, the
    suffix continuation counts, so the product along any path telescopes to
    ``1 / N_0(start)``.
    """
    if not 1 <= start <= graph.size:
        raise PathEnsembleError(f"start site {start} outside [1, {graph.size}]")
    if horizon < 0:
        raise PathEnsembleError("horizon must be >= 0")
    suffix = suffix_continuation_counts(graph, horizon)
    if suffix[0][start] == 0:
        raise PathEnsembleError(f"no walk of length {horizon} starts at site {start}")

    parts = _run_workers(
        lambda bitgen, n: _walk(graph, suffix, start, horizon, bitgen, n, keep_paths), cfg, key
    )
    ends = np.concatenate([p[0] for p in parts])
    tally = np.bincount(ends, minlength=graph.size + 1)[1:]
    paths = np.concatenate([p[1] for p in parts]) if keep_paths else None
    return PathSample(start, horizon, tuple(int(c) for c in tally), paths)


def path_probability(graph: FlipGraph, path, suffix=None) -> Fraction:
    """Exact probability that :func:`sample_uniform_path` produces ``path``."""
    horizon = len(path) - 1
    suffix = suffix or suffix_continuation_counts(graph, horizon)
    p = Fraction(1)
    for k, (i, j) in enumerate(zip(path, path[1:])):
        if not graph.has(i, j):
            return Fraction(0)
        p *= Fraction(suffix[k + 1][j], suffix[k][i])
    return p


# -- consolidated validation ------------------------------------------------

def _arrival_horizon(graph, n0, arrival: ArrivalResult, base: int, cap: int = 512, tol: float = 1e-9):
    """Smallest doubling horizon >= 16 whose endpoint law is within ``tol`` of the limit."""
    t, counts = 0, n0
    target = max(base, 16)
    while True:
        counts = evolve(graph, counts, target - t)
        t = target
        total = sum(counts.counts)
        gap = max(abs(Fraction(c, total) - Fraction(p)) for c, p in
                  zip(counts.counts, arrival.distribution.probs))
        if gap < tol or t >= cap:
            return t
        target = min(2 * t, cap)


def validate_all(
    config: WalkConfig,
    cfg: SamplerConfig,
    steps: int = 5,
    pairs: tuple[MeasurementPair, ...] | None = None,
    exact_overrides: Mapping[str, Fraction] | None = None,
) -> EstimateReport:
    """Check every exact quantity of ``config`` against sampled estimates.

    Rows: ``arrival[site]`` and ``bell_unmeasured`` from endpoints of long
    uniform paths, ``p_equal[pair]`` and ``bell_measured`` from measurement
    ensembles.  Chi-square: endpoint law at ``steps`` against exact path
    counts, and each pair's trajectory frequencies.  Needs a single start site.

    ``exact_overrides`` replaces exact values by row name; it exists so the
    failure path can be exercised.
    """
    graph = config.graph
    n0 = CountVector(config.start_counts())
    if not isinstance(config.start, int):
        raise ValueError("Monte Carlo validation needs a single start site")
    start = config.start
    arrival = arrival_distribution(graph, n0)
    overrides = dict(exact_overrides or {})
    rows, chis = [], []

    # endpoint law at the configured horizon
    short = sample_uniform_path(graph, start, steps, cfg, key=0, keep_paths=False)
    exact_counts = evolve(graph, n0, steps).counts
    total = sum(exact_counts)
    chis.append(chi_square(f"endpoints[T={steps}]", short.endpoints,
                           [Fraction(c, total) for c in exact_counts]))

    # arrival law from long paths
    horizon = _arrival_horizon(graph, n0, arrival, steps)
    long = sample_uniform_path(graph, start, horizon, cfg, key=1, keep_paths=False)
    for i, state in enumerate(graph.ordering.sites, 1):
        name = f"arrival[{state}]"
        rows.append(proportion_row(name, overrides.get(name, arrival[i]), long.endpoints[i - 1], cfg.samples))

    if graph.n == 3 or pairs is not None:
        use = pairs if pairs is not None else MERMIN_PAIRS
        unmeasured = bell_sum_unmeasured(arrival, use)
        per_site = np.array([sum(p.holds(s) for p in use) for s in graph.ordering.sites], dtype=float)
        values = np.repeat(per_site, long.endpoints)
        rows.append(mean_row("bell_unmeasured", overrides.get("bell_unmeasured", unmeasured.total),
                             values, value_range=len(use)))

        est_sum, var_sum = 0.0, 0.0
        for k, pair in enumerate(use):
            ens = measurement_ensemble(graph, arrival, pair)
            rep = sample_measurement(ens, cfg, key=2 + k)
            r = rep.rows[0]
            if r.name in overrides:
                exact = Fraction(overrides[r.name])
                r = EstimateRow(r.name, exact, r.estimate, r.stderr,
                                _z(r.estimate, exact, r.stderr), r.samples)
            rows.append(r)
            chis.extend(rep.chi_square)
            est_sum += r.estimate
            var_sum += r.stderr**2
        measured = bell_sum_measured(graph, arrival, use).total
        exact = Fraction(overrides.get("bell_measured", measured))
        se = math.sqrt(var_sum)
        rows.append(EstimateRow("bell_measured", exact, est_sum, se, _z(est_sum, exact, se), cfg.samples))

    return EstimateReport(tuple(rows), tuple(chis), cfg.seed, cfg.samples, cfg.workers)
