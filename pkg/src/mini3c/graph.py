"""Constraint graphs over a chain lattice and their least/greatest solutions.

Nodes ``0 .. n_vars-1`` are variables; one literal node per lattice element
follows them.  An edge ``x -> y`` means ``x ⊑ y``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

import numpy as np

from . import _kernels
from .errors import Unsatisfiable


@dataclass(frozen=True)
class Lattice:
    name: str
    elements: tuple  # bottom .. top

    @property
    def bottom(self) -> str:
        return self.elements[0]

    @property
    def top(self) -> str:
        return self.elements[-1]

    def index(self, el: str) -> int:
        return self.elements.index(el)

    def leq(self, a: str, b: str) -> bool:
        return self.index(a) <= self.index(b)

    def join(self, a: str, b: str) -> str:
        return self.elements[max(self.index(a), self.index(b))]

    def meet(self, a: str, b: str) -> str:
        return self.elements[min(self.index(a), self.index(b))]


KIND = Lattice("kind", ("chk", "wild"))
PTYP = Lattice("ptyp", ("ntarr", "arr", "ptr"))


@dataclass(frozen=True)
class EdgeInfo:
    reason: str
    line: int = 0
    file: str = ""


class CGraph:
    def __init__(self, lattice: Lattice, names: list[str]):
        self.lattice = lattice
        self.names = list(names)
        self.n_vars = len(self.names)
        self.edges: dict[tuple[int, int], EdgeInfo] = {}

    @property
    def n_nodes(self) -> int:
        return self.n_vars + len(self.lattice.elements)

    def literal(self, el: str) -> int:
        return self.n_vars + self.lattice.index(el)

    def is_literal(self, node: int) -> bool:
        return node >= self.n_vars

    def literal_value(self, node: int) -> int:
        return node - self.n_vars

    def label(self, node: int) -> str:
        if self.is_literal(node):
            return self.lattice.elements[self.literal_value(node)].upper()
        return self.names[node]

    def add_edge(self, x: int, y: int, reason: str, line: int = 0, file: str = "") -> None:
        if x == y:
            return
        if self.is_literal(x) and self.is_literal(y):
            if self.literal_value(x) > self.literal_value(y):
                raise ValueError(f"unsatisfiable literal edge {self.label(x)} -> {self.label(y)}")
            return
        self.edges.setdefault((x, y), EdgeInfo(reason, line, file))

    def add_bi(self, x: int, y: int, reason: str, line: int = 0, file: str = "") -> None:
        self.add_edge(x, y, reason, line, file)
        self.add_edge(y, x, reason, line, file)

    def remove_node_edges(self, nodes: Iterable[int]) -> None:
        drop = set(nodes)
        self.edges = {e: i for e, i in self.edges.items() if e[0] not in drop and e[1] not in drop}

    def copy(self) -> "CGraph":
        g = CGraph(self.lattice, self.names)
        g.edges = dict(self.edges)
        return g

    def edge_list(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        el = self.edge_list()
        if not el:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        a = np.array(el, dtype=np.int64)
        return a[:, 0].copy(), a[:, 1].copy()

    def successors(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for x, y in self.edge_list():
            out[x].append(y)
        return out

    def predecessors(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for x, y in self.edge_list():
            out[y].append(x)
        return out


@dataclass
class Solution:
    lattice: Lattice
    values: np.ndarray  # lattice index per variable
    pinned: frozenset

    def __getitem__(self, var: int) -> str:
        return self.lattice.elements[int(self.values[var])]

    def as_dict(self) -> dict[int, str]:
        return {i: self[i] for i in range(len(self.values))}

    def pins(self) -> dict[int, str]:
        return {i: self[i] for i in range(len(self.values))}


# --------------------------------------------------------------------------- solving


def _pin_arrays(g: CGraph, pinned: Mapping[int, str]):
    n = g.n_nodes
    val = np.zeros(n, dtype=np.int64)
    fixed = np.zeros(n, dtype=np.bool_)
    for k in range(len(g.lattice.elements)):
        val[g.n_vars + k] = k
        fixed[g.n_vars + k] = True
    for v, el in pinned.items():
        val[v] = g.lattice.index(el) if isinstance(el, str) else int(el)
        fixed[v] = True
    return val, fixed


def _witness(preds: list[list[int]], val: np.ndarray, fixed: np.ndarray, x: int, y: int, need: int) -> list:
    """Chain of edges from a fixed node with value >= need down to the bad edge."""
    parent = {x: None}
    q = deque([x])
    found = None
    while q:
        u = q.popleft()
        if fixed[u] and val[u] >= need:
            found = u
            break
        for p in preds[u]:
            if p not in parent and val[p] >= need:
                parent[p] = u
                q.append(p)
    chain = []
    u = found
    while u is not None and u != x:
        nxt = parent[u]
        chain.append((u, nxt))
        u = nxt
    chain.append((x, y))
    return chain


def _path(g: CGraph, chain: list) -> str:
    return " -> ".join([g.label(chain[0][0])] + [g.label(b) for _, b in chain])


def _least(g: CGraph, val, fixed, src, dst, check, backend):
    out, bad = _kernels.raise_to_fixpoint(val, fixed, src, dst, check=check, backend=backend)
    if bad >= 0:
        x, y = int(src[bad]), int(dst[bad])
        chain = _witness(g.predecessors(), out, fixed, x, y, int(out[x]))
        raise Unsatisfiable(f"unsatisfiable {g.lattice.name} constraints: {_path(g, chain)}", chain)
    return out


def solve_least(g: CGraph, pinned: Optional[Mapping[int, str]] = None, backend: Optional[str] = None) -> Solution:
    """Pointwise-least solution respecting ``pinned`` values."""
    pinned = dict(pinned or {})
    val, fixed = _pin_arrays(g, pinned)
    src, dst = g.arrays()
    out = _least(g, val, fixed, src, dst, True, backend)
    return Solution(g.lattice, out[: g.n_vars].copy(), frozenset(pinned))


def solve_greatest(g: CGraph, pinned: Optional[Mapping[int, str]] = None, backend: Optional[str] = None) -> Solution:
    """Pointwise-greatest solution; the mirror of :func:`solve_least`."""
    pinned = dict(pinned or {})
    top = len(g.lattice.elements) - 1
    val, fixed = _pin_arrays(g, pinned)
    val = np.where(fixed, val, top)
    src, dst = g.arrays()
    # x <= y  <=>  (top - y) <= (top - x): greatest is least on the mirrored graph
    flipped = top - val
    out, bad = _kernels.raise_to_fixpoint(flipped, fixed, dst, src, check=True, backend=backend)
    if bad >= 0:
        # the witness is found on the mirrored graph; flip it back
        a, b = int(dst[bad]), int(src[bad])
        mirrored = _witness(g.successors(), out, fixed, a, b, int(out[a]))
        chain = [(q, p) for p, q in reversed(mirrored)]
        raise Unsatisfiable(f"unsatisfiable {g.lattice.name} constraints: {_path(g, chain)}", chain)
    res = top - out
    return Solution(g.lattice, res[: g.n_vars].copy(), frozenset(pinned))


def literal_bounds(g: CGraph, backend: Optional[str] = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-variable (lower, upper) lattice bounds implied by literals alone."""
    src, dst = g.arrays()
    val, fixed = _pin_arrays(g, {})
    lo, _ = _kernels.raise_to_fixpoint(val, fixed, src, dst, check=False, backend=backend)
    top = len(g.lattice.elements) - 1
    hi, _ = _kernels.raise_to_fixpoint(top - np.where(fixed, val, top), fixed, dst, src, check=False, backend=backend)
    return lo[: g.n_vars], (top - hi)[: g.n_vars]


def conflicting_nodes(g: CGraph, backend: Optional[str] = None) -> list[int]:
    """Variables whose literal lower bound exceeds their literal upper bound."""
    lo, hi = literal_bounds(g, backend)
    return [int(i) for i in np.nonzero(lo > hi)[0]]


def reachable_from(g: CGraph, sources: Iterable[int], backend: Optional[str] = None) -> set[int]:
    srcs = sorted(set(sources))
    if not srcs:
        return set()
    src, dst = g.arrays()
    mask = _kernels.reachable(g.n_nodes, src, dst, srcs, backend=backend)
    return {int(i) for i in np.nonzero(mask)[0]}


def violations(g: CGraph, sol: Solution) -> list[tuple[int, int]]:
    """Edges not satisfied by ``sol``; empty for a valid solution."""
    def value(node: int) -> int:
        return g.literal_value(node) if g.is_literal(node) else int(sol.values[node])

    return [(x, y) for x, y in g.edge_list() if value(x) > value(y)]


def validate(g: CGraph, sol: Solution) -> None:
    bad = violations(g, sol)
    if bad:
        from .errors import InvariantViolation

        x, y = bad[0]
        raise InvariantViolation(f"solution violates {g.label(x)} -> {g.label(y)}")


# --------------------------------------------------------------------------- DOT


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(g: CGraph, sol: Optional[Solution] = None, title: str = "") -> str:
    lines = [f"digraph {_quote(title or g.lattice.name)} {{", "  rankdir=LR;"]
    used = {n for e in g.edges for n in e}
    for node in range(g.n_nodes):
        if g.is_literal(node):
            if node in used:
                lines.append(f"  n{node} [label={_quote(g.label(node))}, shape=box];")
            continue
        label = g.label(node)
        if sol is not None:
            label += " = " + sol[node]
        lines.append(f"  n{node} [label={_quote(label)}];")
    for (x, y), info in sorted(g.edges.items()):
        lines.append(f"  n{x} -> n{y} [label={_quote(f'{info.line}:{info.reason}')}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
