"""Independent reference implementations used as test oracles.

Nothing here calls into the solver kernels: solutions come from exhaustive
enumeration and reachability from a plain BFS.
"""

from __future__ import annotations

import itertools
import random
from collections import deque

import numpy as np

from mini3c.graph import KIND, PTYP, CGraph

LATTICES = {"kind": KIND, "ptyp": PTYP}


def random_graph_spec(seed: int, lattice: str, max_vars: int = 12, max_edges: int = 20) -> dict:
    """A small random constraint graph as plain data (JSON-friendly)."""
    rng = random.Random(seed)
    n_lit = len(LATTICES[lattice].elements)
    n = rng.randint(1, max_vars)
    m = rng.randint(0, max_edges)
    edges = []
    for _ in range(m):
        # literals show up at ~1/4 of endpoints
        x = rng.randrange(n) if rng.random() > 0.25 else n + rng.randrange(n_lit)
        y = rng.randrange(n) if rng.random() > 0.25 else n + rng.randrange(n_lit)
        if x >= n and y >= n:
            continue
        if x != y:
            edges.append([x, y])
    pins = {}
    if rng.random() < 0.3:
        for v in rng.sample(range(n), rng.randint(1, min(2, n))):
            pins[v] = rng.randrange(n_lit)
    return {"seed": seed, "lattice": lattice, "n": n, "edges": edges, "pins": pins}


def build(spec: dict) -> CGraph:
    lat = LATTICES[spec["lattice"]]
    g = CGraph(lat, [f"v{i}" for i in range(spec["n"])])
    for x, y in spec["edges"]:
        g.add_edge(x, y, "r")
    return g


def pins_of(spec: dict) -> dict:
    lat = LATTICES[spec["lattice"]]
    return {int(v): lat.elements[k] for v, k in spec["pins"].items()}


def brute_force(spec: dict):
    """(least, greatest) as lists of lattice indices, or None if no assignment satisfies every edge."""
    n = spec["n"]
    k = len(LATTICES[spec["lattice"]].elements)
    pins = {int(v): e for v, e in spec["pins"].items()}
    choices = [[pins[v]] if v in pins else list(range(k)) for v in range(n)]
    grid = np.array(list(itertools.product(*choices)), dtype=np.int8).reshape(-1, n)
    ok = np.ones(len(grid), dtype=bool)
    for x, y in spec["edges"]:
        vx = grid[:, x] if x < n else np.full(len(grid), x - n, dtype=np.int8)
        vy = grid[:, y] if y < n else np.full(len(grid), y - n, dtype=np.int8)
        ok &= vx <= vy
    valid = grid[ok]
    if len(valid) == 0:
        return None
    least = valid.min(axis=0)
    greatest = valid.max(axis=0)
    # on a chain lattice the pointwise extremes are themselves solutions
    for cand in (least, greatest):
        assert any((row == cand).all() for row in valid)
    return least.tolist(), greatest.tolist()


def bfs_reach(n_nodes: int, edges, sources) -> set:
    adj = [[] for _ in range(n_nodes)]
    for x, y in edges:
        adj[x].append(y)
    seen = set(sources)
    q = deque(seen)
    while q:
        u = q.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                q.append(v)
    return seen


def least_fixpoint_by_iteration(g: CGraph, seeds: dict) -> dict:
    """Chaotic iteration of val[y] = max(val[y], val[x]) from literal seeds; for wildness oracles."""
    val = {v: 0 for v in range(g.n_vars)}
    val.update(seeds)

    def value(node):
        return g.literal_value(node) if g.is_literal(node) else val[node]

    changed = True
    while changed:
        changed = False
        for x, y in g.edge_list():
            if not g.is_literal(y) and value(x) > val[y]:
                val[y] = value(x)
                changed = True
    return val


def _undirected(edges) -> dict:
    adj: dict = {}
    for e in edges:
        a, b = tuple(e)
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    return adj


def unjustified_bounds(facts, result) -> list:
    """Flow-derived bounds with no seed behind them.

    A bound ``c -> (kind, s)`` is justified when a seed ``c' -> (kind, s')`` lies
    on a pfg path from ``c`` and ``s'`` reaches ``s`` in the sfg. Paths are
    searched with a plain BFS over the raw edge sets.
    """
    padj, sadj = _undirected(facts.pfg_edges), _undirected(facts.sfg_edges)
    nodes_p = list(facts.pfg_nodes)
    index_p = {k: i for i, k in enumerate(nodes_p)}
    nodes_s = list(facts.sfg_nodes)
    index_s = {k: i for i, k in enumerate(nodes_s)}
    pedges = [(index_p[a], index_p[b]) for a, bs in padj.items() for b in bs]
    sedges = [(index_s[a], index_s[b]) for a, bs in sadj.items() for b in bs]
    bad = []
    for c, entry in result.beta.items():
        if entry.provenance != "flow" or entry.heuristic:
            continue
        preach = {nodes_p[i] for i in bfs_reach(len(nodes_p), pedges, [index_p[c]])}
        sreach = {nodes_s[i] for i in bfs_reach(len(nodes_s), sedges, [index_s[entry.bound.node]])}
        if not any(k in preach and s.bound.kind == entry.bound.kind and s.bound.node in sreach
                   for k, s in result.seeds.items()):
            bad.append(c)
    return bad
