"""Checked/wild classification of every unit."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..errors import InvariantViolation
from ..graph import Solution, solve_least
from .constraints import CONFLICTING, Facts

CHECKED = "checked"
ITYPE = "itype"
UNCHANGED = "unchanged"


@dataclass
class KindResult:
    solution: Solution
    wild_vars: set
    conversion: dict = field(default_factory=dict)  # unit id -> CHECKED | ITYPE | UNCHANGED

    def is_wild(self, var: int) -> bool:
        return var in self.wild_vars

    def unit_wild(self, u) -> bool:
        """A unit counts as wild when the view its own code sees is wild."""
        return u.internal in self.wild_vars


def demote_conflicts(facts: Facts, conflicts) -> None:
    """Apply a conflict resolution: clashing vars become wild and leave the ptyp graph.

    A cut argument edge turns into a cast demand at that call; a cut return
    edge makes the caller's receiving var wild.
    """
    for v in conflicts.demoted:
        q = facts.vt.vars[v]
        facts.seed_wild(v, CONFLICTING, q.line, q.file)
    for e in conflicts.cut:
        info = facts.ptyp.edges.pop(e)
        side = facts.boundary[e]
        if side is None:
            continue
        if side[0] == "arg":
            facts.cut_args.add((side[1], side[2]))
        else:
            facts.seed_wild(side[1], CONFLICTING, info.line, info.file)
    facts.ptyp.remove_node_edges(conflicts.demoted)


def solve_kinds(facts: Facts, backend: Optional[str] = None) -> KindResult:
    sol = solve_least(facts.kind, backend=backend)
    wild = {i for i in range(facts.kind.n_vars) if sol[i] == "wild"}
    res = KindResult(sol, wild)
    for u in facts.vt.units:
        ext_w, int_w = u.external in wild, u.internal in wild
        if ext_w and not int_w:
            raise InvariantViolation(f"{u.name}: external view is wild but internal view is checked")
        if not ext_w and not int_w:
            res.conversion[u.id] = CHECKED
        elif not ext_w:
            res.conversion[u.id] = ITYPE
        else:
            res.conversion[u.id] = UNCHANGED
    return res


@dataclass(frozen=True)
class CastDemand:
    """A checked parameter receiving a wild argument at one call site."""

    call_id: int
    arg_index: int
    line: int


def cast_demands(facts: Facts, kinds: KindResult) -> list[CastDemand]:
    out = []
    for cs in facts.calls:
        for i, a in enumerate(cs.args):
            if i >= len(cs.callee.params):
                break
            units = facts.vt.units_of(cs.callee.params[i])
            if not units or units[0].ext in kinds.wild_vars:
                continue
            if (cs.id, i) in facts.cut_args or any(_wild_at_top(o, kinds) for o in a.options()):
                out.append(CastDemand(cs.id, i, cs.line))
    return out


def _wild_at_top(v, kinds: KindResult) -> bool:
    if v.kind != "ptr" or not v.levels:
        return False
    lv = v.levels[0]
    if isinstance(lv, int):
        return lv in kinds.wild_vars
    return lv is not None  # a literal wild value
