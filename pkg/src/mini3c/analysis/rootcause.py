"""Root causes of wildness and their influence."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..graph import CGraph, reachable_from
from ..qualvars import VarTable
from .kinds import KindResult


@dataclass
class RootCause:
    name: str
    file: str
    line: int
    reason: str
    influence: int
    vars: tuple = ()  # seeded variables
    affected: frozenset = field(default_factory=frozenset)  # wild entity keys reached

    def as_dict(self) -> dict:
        return {"name": self.name, "file": self.file, "line": self.line, "reason": self.reason,
                "influence": self.influence}


def entity_of(vt: VarTable, var: int) -> tuple:
    """Reporting entity of a variable: its unit, or the variable itself for expression vars."""
    u = vt.unit_of_var(var)
    return ("unit", u.id) if u is not None else ("var", var)


def entity_name(vt: VarTable, key: tuple) -> str:
    return vt.units[key[1]].name if key[0] == "unit" else vt.vars[key[1]].name


def root_causes(g: CGraph, vt: VarTable, kinds: KindResult, backend: Optional[str] = None) -> list[RootCause]:
    wild_lit = g.literal("wild")
    groups: dict[tuple, list] = {}
    for (x, y), info in g.edges.items():  # insertion order: first seed decides the reason
        if x == wild_lit and not g.is_literal(y):
            groups.setdefault(entity_of(vt, y), []).append((y, info))
    out = []
    for key, seeds in groups.items():
        seeded = sorted({v for v, _ in seeds})
        reached = reachable_from(g, seeded, backend)
        affected = frozenset(entity_of(vt, v) for v in reached
                             if not g.is_literal(v) and v in kinds.wild_vars)
        info = seeds[0][1]
        out.append(RootCause(entity_name(vt, key), info.file, info.line, info.reason, len(affected),
                             tuple(seeded), affected))
    out.sort(key=lambda r: (-r.influence, r.file, r.line, r.name))
    return out


def reason_shares(causes: list[RootCause], wild_entities: set) -> list[dict]:
    """Percent of wild entities influenced by each reason, largest first."""
    if not wild_entities:
        return []
    by_reason: dict[str, set] = {}
    for rc in causes:
        by_reason.setdefault(rc.reason, set()).update(rc.affected & wild_entities)
    rows = [{"reason": r, "pct_of_wild": round(100.0 * len(s) / len(wild_entities), 2)} for r, s in by_reason.items()]
    rows.sort(key=lambda r: (-r["pct_of_wild"], r["reason"]))
    return rows
