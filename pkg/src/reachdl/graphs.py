"""Small directed-graph helpers: BFS reachability, Tarjan SCCs, cycle
vertices and the condensation-based machinery used for graph values."""

from __future__ import annotations

from typing import Hashable, Iterable, Mapping, Sequence

Vertex = Hashable


def successors(vertices: Iterable[Vertex],
               edges: Iterable[tuple[Vertex, Vertex]]) -> dict[Vertex, list[Vertex]]:
    succ: dict[Vertex, list[Vertex]] = {v: [] for v in vertices}
    for a, b in edges:
        succ[a].append(b)
    for v in succ:
        succ[v] = sorted(succ[v], key=repr)
    return succ


def reachable_from(succ: Mapping[Vertex, Sequence[Vertex]],
                   sources: Iterable[Vertex]) -> set[Vertex]:
    """Vertices reachable from the source set, sources included."""
    seen = set()
    stack = [s for s in sources if s in succ]
    while stack:
        v = stack.pop()
        if v in seen:
            continue
        seen.add(v)
        stack.extend(w for w in succ[v] if w not in seen)
    return seen


def sccs(succ: Mapping[Vertex, Sequence[Vertex]]) -> list[frozenset[Vertex]]:
    """Tarjan's algorithm, iterative; components in reverse topological order."""
    index: dict[Vertex, int] = {}
    lowlink: dict[Vertex, int] = {}
    on_stack: set[Vertex] = set()
    stack: list[Vertex] = []
    components: list[frozenset[Vertex]] = []
    counter = 0

    for root in succ:
        if root in index:
            continue
        work: list[tuple[Vertex, int]] = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = lowlink[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            advanced = False
            children = succ[v]
            while pi < len(children):
                w = children[pi]
                pi += 1
                if w not in index:
                    work[-1] = (v, pi)
                    work.append((w, 0))
                    advanced = True
                    break
                if w in on_stack:
                    lowlink[v] = min(lowlink[v], index[w])
            if advanced:
                continue
            work.pop()
            if lowlink[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                components.append(frozenset(comp))
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            else:
                work[-1:] = []
    return components


def cycle_vertices(succ: Mapping[Vertex, Sequence[Vertex]]) -> set[Vertex]:
    """Vertices on some cycle: in an SCC of size >= 2, or with a self-loop."""
    out: set[Vertex] = set()
    for comp in sccs(succ):
        if len(comp) >= 2:
            out |= comp
        else:
            (v,) = comp
            if v in succ[v]:
                out.add(v)
    return out


def source_components(succ: Mapping[Vertex, Sequence[Vertex]]) -> list[frozenset[Vertex]]:
    """SCCs with no incoming edge from another SCC."""
    comps = sccs(succ)
    comp_of: dict[Vertex, int] = {}
    for i, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = i
    has_in = [False] * len(comps)
    for v, ws in succ.items():
        for w in ws:
            if comp_of[v] != comp_of[w]:
                has_in[comp_of[w]] = True
    return [comp for i, comp in enumerate(comps) if not has_in[i]]


def transitive_closure_reach(succ: Mapping[Vertex, Sequence[Vertex]],
                             sources: Iterable[Vertex]) -> set[Vertex]:
    """Reachability via an explicit reflexive-transitive closure (Warshall);
    redundant with BFS on purpose -- it serves as the independent oracle."""
    verts = sorted(succ, key=repr)
    idx = {v: i for i, v in enumerate(verts)}
    n = len(verts)
    reach = [[False] * n for _ in range(n)]
    for i in range(n):
        reach[i][i] = True
    for v, ws in succ.items():
        for w in ws:
            reach[idx[v]][idx[w]] = True
    for k in range(n):
        rk = reach[k]
        for i in range(n):
            if reach[i][k]:
                ri = reach[i]
                for j in range(n):
                    if rk[j]:
                        ri[j] = True
    out: set[Vertex] = set()
    for s in sources:
        if s in idx:
            out |= {verts[j] for j in range(n) if reach[idx[s]][j]}
    return out
