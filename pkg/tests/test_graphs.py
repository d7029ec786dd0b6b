import random
from itertools import product

from reachdl import graphs


def random_digraph(rng, n):
    verts = list(range(n))
    edges = [(a, b) for a in verts for b in verts if rng.random() < 0.3]
    return graphs.successors(verts, edges)


def test_sccs_partition_and_cycles():
    succ = graphs.successors(range(5), [(0, 1), (1, 2), (2, 1), (3, 3)])
    comps = graphs.sccs(succ)
    assert sorted(sorted(c) for c in comps) == [[0], [1, 2], [3], [4]]
    assert graphs.cycle_vertices(succ) == {1, 2, 3}


def test_source_components():
    succ = graphs.successors(range(4), [(0, 1), (2, 1), (1, 3)])
    srcs = graphs.source_components(succ)
    assert sorted(sorted(c) for c in srcs) == [[0], [2]]


def test_bfs_matches_warshall_closure():
    rng = random.Random(9)
    for _ in range(200):
        n = rng.randint(1, 6)
        succ = random_digraph(rng, n)
        sources = [v for v in succ if rng.random() < 0.4]
        assert graphs.reachable_from(succ, sources) == \
            graphs.transitive_closure_reach(succ, sources)


def test_sccs_exhaustive_small():
    # every vertex appears in exactly one component, and two vertices share
    # a component iff they reach each other
    for bits in range(1 << 9):
        succ = {u: [] for u in range(3)}
        for i, (a, b) in enumerate(product(range(3), range(3))):
            if bits >> i & 1:
                succ[a].append(b)
        comps = graphs.sccs(succ)
        seen = [v for c in comps for v in c]
        assert sorted(seen) == [0, 1, 2]
        comp_of = {v: i for i, c in enumerate(comps) for v in c}
        for u in range(3):
            for v in range(3):
                mutual = (v in graphs.reachable_from(succ, [u])
                          and u in graphs.reachable_from(succ, [v]))
                assert (comp_of[u] == comp_of[v]) == mutual
