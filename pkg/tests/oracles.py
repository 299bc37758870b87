"""Independent brute-force oracles. None of these call into merwbell's
counting or measurement code."""

from fractions import Fraction


def count_paths(graph, start, t):
    """Endpoint tally of every length-t walk from ``start``, by depth-first search."""
    ends = [0] * graph.size

    def walk(i, left):
        if left == 0:
            ends[i - 1] += 1
            return
        for j in range(1, graph.size + 1):
            if graph.adjacency[i - 1][j - 1]:
                walk(j, left - 1)

    walk(start, t)
    return tuple(ends)


def matmul_power_apply(graph, v, t):
    """``M**t v`` by repeated dense products in Python integers."""
    m = [list(r) for r in graph.adjacency]
    v = list(v)
    for _ in range(t):
        v = [sum(m[i][j] * v[j] for j in range(len(v))) for i in range(len(v))]
    return v


def brute_equality(graph, arrival, pair):
    """Scan every adjacency entry, keep those that freeze both measured bits and
    start on the support, weight by arrival probability.

    Returns ``(p_equal, trajectory_count, favorable_count)``.
    """
    sites = graph.ordering.sites
    kept = []
    for i in range(graph.size):
        for j in range(graph.size):
            if not graph.adjacency[i][j] or arrival.distribution.probs[i] == 0:
                continue
            a, b = sites[i], sites[j]
            if a.bits[pair.a] != b.bits[pair.a] or a.bits[pair.b] != b.bits[pair.b]:
                continue
            kept.append((Fraction(arrival.distribution.probs[i]), a.bits[pair.a] == a.bits[pair.b]))
    total = sum(w for w, _ in kept)
    return sum((w for w, eq in kept if eq), Fraction(0)) / total, len(kept), sum(eq for _, eq in kept)
