"""Pointer-type inference: which checked pointer kind each checked unit gets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..graph import Solution, conflicting_nodes, reachable_from, solve_greatest, solve_least
from ..qualvars import ROLE_PARAM_EXT, ROLE_PARAM_INT, ROLE_RET_EXT, ROLE_RET_INT
from .constraints import Facts
from .kinds import UNCHANGED, KindResult

SOLVERS = ("threestep", "least", "greatest")


@dataclass
class PtypResult:
    solution: Solution
    mode: str
    unit_ptyp: dict = field(default_factory=dict)  # unit id -> 'ptr' | 'arr' | 'ntarr' (checked faces only)
    param_pins: dict = field(default_factory=dict)
    return_pins: dict = field(default_factory=dict)

    def of(self, var: int) -> str:
        return self.solution[var]


@dataclass
class Conflicts:
    demoted: list  # vars whose literal bounds clash inside one function
    cut: list  # call-boundary ptyp edges dropped
    callers: list  # caller-side ends of the cut edges

    def __bool__(self) -> bool:
        return bool(self.demoted or self.cut)


def find_conflicts(facts: Facts, backend: Optional[str] = None) -> Conflicts:
    """Decide how to resolve contradictory ptyp literals without editing the graph.

    Clashes visible inside a function demote the clashing vars. A clash that
    only exists through a call is resolved on the caller side: the boundary
    edge is dropped and the argument gets a cast (or the receiving var of a
    return goes wild), so the callee keeps its own solution.
    """
    g = facts.ptyp.copy()
    boundary = {e: side for e, side in facts.boundary.items() if e in g.edges}
    local = g.copy()
    for e in boundary:
        local.edges.pop(e)
    demoted = conflicting_nodes(local, backend)
    g.remove_node_edges(demoted)
    cut, callers = [], []
    while True:
        bad = set(conflicting_nodes(g, backend))
        if not bad:
            break
        hit = [e for e in boundary if e in g.edges and (e[0] in bad or e[1] in bad)]
        if not hit:  # cannot happen when the local graph was consistent; keep the plain demotion as a guard
            demoted += sorted(bad)
            g.remove_node_edges(bad)
            continue
        for e in hit:
            g.edges.pop(e)
            cut.append(e)
            side = boundary[e]
            if side is not None and side not in callers:
                callers.append(side)
    return Conflicts(sorted(demoted), cut, callers)


def _roles(facts: Facts, roles: tuple) -> list[int]:
    return [v.id for v in facts.vt.vars if v.role in roles]


def three_step(facts: Facts, backend: Optional[str] = None) -> tuple[Solution, dict, dict]:
    g = facts.ptyp
    first = solve_greatest(g, backend=backend)
    params = _roles(facts, (ROLE_PARAM_EXT, ROLE_PARAM_INT))
    param_pins = {v: first[v] for v in params}
    second = solve_least(g, param_pins, backend=backend)
    # a return is bounded when some real lower bound reaches it
    sources = [g.literal("arr"), g.literal("ptr")]
    sources += [v for v, el in param_pins.items() if el != "ntarr"]
    reach = reachable_from(g, sources, backend)
    ret_pins = {v: second[v] for v in _roles(facts, (ROLE_RET_EXT, ROLE_RET_INT)) if v in reach}
    third = solve_greatest(g, {**param_pins, **ret_pins}, backend=backend)
    return third, param_pins, ret_pins


def solve_ptyp(facts: Facts, kinds: KindResult, mode: str = "threestep", backend: Optional[str] = None) -> PtypResult:
    if mode == "least":
        res = PtypResult(solve_least(facts.ptyp, backend=backend), mode)
    elif mode == "greatest":
        res = PtypResult(solve_greatest(facts.ptyp, backend=backend), mode)
    elif mode == "threestep":
        sol, pp, rp = three_step(facts, backend)
        res = PtypResult(sol, mode, param_pins=pp, return_pins=rp)
    else:
        raise ValueError(f"unknown solver mode {mode!r}")
    for u in facts.vt.units:
        if kinds.conversion[u.id] != UNCHANGED:
            res.unit_ptyp[u.id] = res.solution[u.external]
    return res
