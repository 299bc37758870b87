import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from merwbell.measurement import (
    MERMIN_PAIRS,
    XY,
    YZ,
    ZX,
    JointDistribution,
    MeasurementError,
    MeasurementPair,
    bell_sum_measured,
    bell_sum_unmeasured,
    enumerate_trajectories,
    equality_probability,
    mask_graph,
    measurement_ensemble,
    mermin_bound_check,
)
from merwbell.path_ensemble import CountVector, arrival_distribution
from merwbell.statespace import (
    PropertyState,
    all_corners,
    build_full_cube,
    build_graph,
    build_graph_from_states,
    build_standard_graph,
    standard_ordering,
)

from conftest import flip_graphs, random_flip_graph
from oracles import brute_equality

STD = build_standard_graph()
CUBE = build_full_cube()
A_STD = arrival_distribution(STD, CountVector.delta(8, 4))
A_CUBE = arrival_distribution(CUBE, CountVector.delta(8, 4))


def names(graph, transitions):
    return {(str(graph.state(i)), str(graph.state(j))) for i, j in transitions}


def test_pair_parse():
    assert MeasurementPair.parse("xy") == XY
    assert MeasurementPair.parse("ZX") == ZX
    assert MeasurementPair.parse("0-3") == MeasurementPair(0, 3)
    assert str(YZ) == "yz"
    for bad in ("xx", "xyz", "q", "a-b"):
        with pytest.raises(MeasurementError):
            MeasurementPair.parse(bad)


def test_mask_standard_xy():
    m = mask_graph(STD, XY)
    off = names(m, [(i, j) for i, j in m.transitions() if i != j])
    assert off == {("100", "101"), ("101", "100"), ("011", "010"), ("010", "011")}
    assert len(m.self_loops()) == 8


def test_mask_full_cube_xy():
    m = mask_graph(CUBE, XY)
    assert len(m.self_loops()) == 8
    off = [(i, j) for i, j in m.transitions() if i != j]
    assert len(off) == 8
    assert all(m.state(i).bits[:2] == m.state(j).bits[:2] for i, j in off)


@given(flip_graphs(), st.sampled_from(MERMIN_PAIRS))
def test_mask_idempotent(g, pair):
    if g.n < 3:
        pair = MeasurementPair(0, 1)
    once = mask_graph(g, pair)
    assert mask_graph(once, pair) == once
    assert set(once.self_loops()) == set(g.self_loops())


def test_trajectory_counts():
    assert len(measurement_ensemble(STD, A_STD, XY)) == 10
    assert len(measurement_ensemble(STD, A_STD, YZ)) == 10
    assert len(measurement_ensemble(STD, A_STD, ZX)) == 10
    assert len(enumerate_trajectories(STD, A_STD)) == 18


@pytest.mark.parametrize("pair", MERMIN_PAIRS)
def test_standard_equality(pair):
    o = equality_probability(measurement_ensemble(STD, A_STD, pair))
    assert (o.p_equal, o.favorable_count, o.trajectory_count) == (Fraction(2, 10), 2, 10)
    assert o.flat_ratio == "2/10"


def test_full_cube_equality():
    o = equality_probability(measurement_ensemble(CUBE, A_CUBE, XY))
    assert o.p_equal == Fraction(1, 2)
    assert (o.favorable_count, o.trajectory_count) == (8, 16)


def test_ensemble_invariants():
    for pair in MERMIN_PAIRS:
        ens = measurement_ensemble(STD, A_STD, pair)
        assert sum(ens.weights) == 1
        for i, j in ens.transitions:
            assert STD.has(i, j)
            assert i in A_STD.support
            si, sj = STD.state(i), STD.state(j)
            assert si[pair.a] == sj[pair.a] and si[pair.b] == sj[pair.b]


def test_outside_support_contributes_nothing():
    ens = measurement_ensemble(STD, A_STD, XY)
    assert all(i not in (1, 8) for i, _ in ens.transitions)


def test_nonuniform_weights_follow_arrival():
    # star on 0000 with every site looped: rate 3, psi = (2, 1, 1, 1, 1)
    leaves = ["1000", "0100", "0010", "0001"]
    g = build_graph_from_states([("0000", s) for s in leaves], ["0000"] + leaves)
    a = arrival_distribution(g, CountVector.delta(16, g.index("0000")))
    assert a.growth_rate == 3
    assert a[g.index("0000")] == Fraction(1, 3)
    assert all(a[g.index(s)] == Fraction(1, 6) for s in leaves)
    pair = MeasurementPair(0, 1)
    ens = measurement_ensemble(g, a, pair)
    # kept: centre loop, centre<->0010, centre<->0001, leaf loops
    raw = {t: a[t[0]] for t in ens.transitions}
    z = sum(raw.values())
    assert dict(zip(ens.transitions, ens.weights)) == {t: w / z for t, w in raw.items()}
    o = equality_probability(ens)
    assert o.p_equal == brute_equality(g, a, pair)[0]
    assert o.p_equal != Fraction(o.favorable_count, o.trajectory_count)


def test_bell_sums_standard():
    measured = bell_sum_measured(STD, A_STD)
    assert measured.total == Fraction(6, 10)
    assert measured.violated
    unmeasured = bell_sum_unmeasured(A_STD)
    assert unmeasured.total == 1
    assert [p for _, p in unmeasured.terms] == [Fraction(1, 3)] * 3
    assert not unmeasured.violated


def test_bell_sums_full_cube():
    assert bell_sum_measured(CUBE, A_CUBE).total == Fraction(3, 2)
    assert bell_sum_unmeasured(A_CUBE).total == Fraction(3, 2)


def test_bell_sum_self_loops_only():
    loops = build_graph(standard_ordering(), [], range(1, 9))
    a = arrival_distribution(loops, (1,) * 8)
    assert a.distribution.probs == (Fraction(1, 8),) * 8
    assert bell_sum_measured(loops, a).total == Fraction(3, 2)


def test_bell_unmeasured_point_mass():
    a = arrival_distribution(STD, CountVector.delta(8, 1))
    assert bell_sum_unmeasured(a).total == 3


def test_bell_needs_pairs_beyond_three():
    g = build_full_cube(4)
    a = arrival_distribution(g, CountVector.delta(16, 1))
    with pytest.raises(MeasurementError):
        bell_sum_measured(g, a)
    pairs = [MeasurementPair(0, 1), MeasurementPair(2, 3)]
    total = bell_sum_measured(g, a, pairs).total
    assert total == sum(brute_equality(g, a, p)[0] for p in pairs)


def test_mermin_examples():
    assert mermin_bound_check(JointDistribution.uniform()) == (Fraction(3, 2), True)
    assert mermin_bound_check(JointDistribution.point("101")) == (1, True)
    assert mermin_bound_check(JointDistribution.point("111")) == (3, True)


def test_joint_validation():
    with pytest.raises(MeasurementError):
        JointDistribution({"101": Fraction(1, 2)})
    with pytest.raises(MeasurementError):
        JointDistribution({"101": Fraction(3, 2), "111": Fraction(-1, 2)})
    with pytest.raises(MeasurementError):
        mermin_bound_check(JointDistribution.uniform(4))


joints = st.lists(st.integers(0, 1000), min_size=8, max_size=8).filter(any).map(
    lambda w: JointDistribution({s: Fraction(x, sum(w)) for s, x in zip(all_corners(3), w)})
)


@given(joints)
def test_mermin_bound_property(joint):
    total, ok = mermin_bound_check(joint)
    assert ok and total >= 1
    # each corner satisfies at least one equality, and at most all three
    assert total <= 3


def cyclic(s: PropertyState) -> PropertyState:
    # value of x moves to y, y to z, z to x
    return PropertyState((s[2], s[0], s[1]))


def test_relabel_symmetry():
    xy = measurement_ensemble(STD, A_STD, XY)
    yz = measurement_ensemble(STD, A_STD, YZ)
    mapped = {(str(cyclic(STD.state(i))), str(cyclic(STD.state(j)))) for i, j in xy.transitions}
    assert len(mapped) == len(xy.transitions)
    assert mapped == names(STD, yz.transitions)


@settings(max_examples=60, deadline=None)
@given(flip_graphs(), st.data())
def test_oracle_equivalence_property(g, data):
    looped = g.self_loops()
    if not looped:
        return
    start = data.draw(st.sampled_from(looped))
    a = arrival_distribution(g, CountVector.delta(g.size, start))
    a_, b_ = data.draw(st.lists(st.integers(0, g.n - 1), min_size=2, max_size=2, unique=True))
    pair = MeasurementPair(a_, b_)
    o = equality_probability(measurement_ensemble(g, a, pair))
    assert (o.p_equal, o.trajectory_count, o.favorable_count) == brute_equality(g, a, pair)


def test_random_graph_helper_valid():
    rng = random.Random(3)
    for _ in range(20):
        g = random_flip_graph(rng, rng.choice([2, 3, 4]))
        assert g.size == 2**g.n
