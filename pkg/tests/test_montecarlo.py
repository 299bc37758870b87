import math
from fractions import Fraction

import numpy as np
import pytest

from merwbell.measurement import XY, TrajectoryEnsemble, measurement_ensemble
from merwbell.montecarlo import (
    SamplerConfig,
    chi_square,
    draw_below,
    path_probability,
    proportion_row,
    sample_measurement,
    sample_uniform_path,
    stream,
    validate_all,
)
from merwbell.path_ensemble import CountVector, PathEnsembleError, arrival_distribution, evolve
from merwbell.statespace import WalkConfig, build_full_cube, build_standard_graph

STD = build_standard_graph()
CUBE = build_full_cube()
A_STD = arrival_distribution(STD, CountVector.delta(8, 4))
A_CUBE = arrival_distribution(CUBE, CountVector.delta(8, 4))
COUNTS_T5 = (0, 35, 46, 51, 46, 35, 30, 0)


def test_sampler_config_validation():
    for bad in ({"samples": 0}, {"workers": 0}, {"seed": -1}, {"seed": 2**64}):
        with pytest.raises(ValueError):
            SamplerConfig(**bad)
    assert SamplerConfig(samples=10, workers=3).split() == [4, 3, 3]


def test_stream_is_deterministic_and_distinct():
    a = stream(7, 0, 0).random_raw(4)
    assert (a == stream(7, 0, 0).random_raw(4)).all()
    assert not (a == stream(7, 0, 1).random_raw(4)).all()
    assert not (a == stream(7, 1, 0).random_raw(4)).all()


@pytest.mark.parametrize("bound", [1, 6, 10, 2**40 + 3])
def test_draw_below_range_and_fit(bound):
    u = draw_below(stream(1, 0, 0), bound, 20000)
    assert min(u) >= 0 and max(u) < bound
    if bound <= 10:
        obs = np.bincount(u, minlength=bound)
        assert chi_square("u", obs, [Fraction(1, bound)] * bound).p_value > 1e-3


def test_draw_below_big_bound():
    bound = 3**100
    u = draw_below(stream(2, 0, 0), bound, 2000)
    assert all(0 <= x < bound for x in u)
    # top ternary digit roughly uniform
    top = np.bincount([x // 3**99 for x in u], minlength=3)
    assert chi_square("top", top, [Fraction(1, 3)] * 3).p_value > 1e-3


def test_sample_measurement_standard():
    ens = measurement_ensemble(STD, A_STD, XY)
    rep = sample_measurement(ens, SamplerConfig(seed=1, samples=100_000))
    row = rep.row("p_equal[xy]")
    assert row.exact == Fraction(1, 5)
    assert abs(row.z) < 4
    assert abs(row.estimate - 0.2) < 0.01
    assert rep.passed


def test_sample_measurement_full_cube():
    ens = measurement_ensemble(CUBE, A_CUBE, XY)
    row = sample_measurement(ens, SamplerConfig(seed=1, samples=100_000)).rows[0]
    assert row.exact == Fraction(1, 2) and abs(row.z) < 4


def test_single_trajectory_ensemble():
    ens = TrajectoryEnsemble(((2, 2),), (Fraction(1),), XY, STD)
    row = sample_measurement(ens, SamplerConfig(seed=3, samples=50)).rows[0]
    assert row.estimate == 1.0 and row.exact == 1 and row.z == 0
    ens = TrajectoryEnsemble(((3, 3),), (Fraction(1),), XY, STD)
    row = sample_measurement(ens, SamplerConfig(seed=3, samples=50)).rows[0]
    assert row.estimate == 0.0 and row.z == 0


def test_stderr_positive():
    assert proportion_row("r", 0, 0, 2).stderr > 0
    assert proportion_row("r", 1, 2, 2).stderr > 0


def test_stderr_scales_as_inverse_sqrt():
    ens = measurement_ensemble(STD, A_STD, XY)
    small = sample_measurement(ens, SamplerConfig(seed=5, samples=10_000)).rows[0].stderr
    big = sample_measurement(ens, SamplerConfig(seed=5, samples=160_000)).rows[0].stderr
    ratio = small / big
    assert abs(ratio - 4) / 4 < 0.15


def test_uniform_path_endpoints_t5():
    s = sample_uniform_path(STD, 4, 5, SamplerConfig(seed=1, samples=243_000), keep_paths=False)
    assert sum(s.endpoints) == 243_000
    res = chi_square("T=5", s.endpoints, [Fraction(c, 243) for c in COUNTS_T5])
    assert res.p_value > 1e-3
    assert s.endpoints[0] == s.endpoints[7] == 0


def test_uniform_path_trivial():
    s = sample_uniform_path(STD, 4, 0, SamplerConfig(seed=1, samples=20))
    assert (s.paths == 4).all() and s.paths.shape == (20, 1)
    s = sample_uniform_path(STD, 1, 7, SamplerConfig(seed=1, samples=20))
    assert (s.paths == 1).all()
    with pytest.raises(PathEnsembleError):
        sample_uniform_path(STD, 9, 3, SamplerConfig())


def all_paths(graph, start, T):
    paths = [[start]]
    for _ in range(T):
        paths = [p + [j] for p in paths for j in graph.targets(p[-1])]
    return paths


@pytest.mark.parametrize("T", range(5))
@pytest.mark.parametrize("start", [2, 4, 7])
def test_uniform_path_exact_probability(T, start):
    paths = all_paths(STD, start, T)
    assert len(paths) == 3**T
    for p in paths:
        assert path_probability(STD, p) == Fraction(1, 3**T)


def test_uniform_path_frequencies_small_T():
    # every one of the 27 length-3 paths from site 4 is drawn about equally often
    s = sample_uniform_path(STD, 4, 3, SamplerConfig(seed=11, samples=27_000))
    keys = {tuple(p) for p in all_paths(STD, 4, 3)}
    seen = {}
    for row in s.paths.tolist():
        seen[tuple(row)] = seen.get(tuple(row), 0) + 1
    assert set(seen) <= keys
    obs = [seen.get(k, 0) for k in sorted(keys)]
    assert chi_square("paths", obs, [Fraction(1, 27)] * 27).p_value > 1e-3


def test_path_sampler_nonuniform_graph():
    # full cube with a dead corner: path counts differ per endpoint
    s = sample_uniform_path(CUBE, 1, 4, SamplerConfig(seed=2, samples=40_000), keep_paths=False)
    exact = evolve(CUBE, CountVector.delta(8, 1), 4).counts
    assert chi_square("c", s.endpoints, [Fraction(c, sum(exact)) for c in exact]).p_value > 1e-3


def test_reproducible_reports():
    cfg = SamplerConfig(seed=9, samples=5_000, workers=2)
    a = validate_all(WalkConfig(STD, 4), cfg)
    b = validate_all(WalkConfig(STD, 4), cfg)
    assert a == b


@pytest.mark.parametrize("workers", [1, 3, 4])
def test_worker_count_correctness(workers):
    rep = validate_all(WalkConfig(STD, 4), SamplerConfig(seed=13, samples=30_000, workers=workers))
    assert rep.passed, rep.failures()


def test_worker_streams_differ():
    one = validate_all(WalkConfig(STD, 4), SamplerConfig(seed=13, samples=3_000, workers=1))
    two = validate_all(WalkConfig(STD, 4), SamplerConfig(seed=13, samples=3_000, workers=2))
    assert one.rows != two.rows


def test_validate_degenerate():
    rep = validate_all(WalkConfig(STD, 1), SamplerConfig(seed=1, samples=1_000))
    assert rep.passed
    for r in rep.rows:
        assert r.estimate == float(r.exact) and r.z == 0


def test_validate_full_cube():
    rep = validate_all(WalkConfig(CUBE, 4), SamplerConfig(seed=7, samples=50_000))
    assert rep.passed
    assert rep.row("bell_measured").exact == Fraction(3, 2)
    assert abs(rep.row("bell_measured").estimate - 1.5) < 0.02


def test_tampered_exact_fails():
    rep = validate_all(WalkConfig(STD, 4), SamplerConfig(seed=7, samples=20_000),
                       exact_overrides={"p_equal[xy]": Fraction(1, 3)})
    assert not rep.passed
    assert "p_equal[xy]" in rep.failures()


def test_chi_square_zero_cells():
    assert chi_square("z", [0, 5, 5], [0, Fraction(1, 2), Fraction(1, 2)]).dof == 1
    bad = chi_square("z", [1, 5, 5], [0, Fraction(1, 2), Fraction(1, 2)])
    assert bad.p_value == 0 and math.isinf(bad.statistic)
    assert chi_square("one", [0, 7], [0, 1]).p_value == 1.0
