import pytest

from conftest import convert_file
from oracles import least_fixpoint_by_iteration
from programs import random_program
from mini3c.analysis.rootcause import entity_of, reason_shares
from mini3c.pipeline import convert_text, run

N_PROGRAMS = 150


def seed_edges(g):
    w = g.literal("wild")
    return [(x, y) for (x, y) in g.edges if x == w and not g.is_literal(y)]


def wild_entities_without(g, vt, dropped: set) -> set:
    """Entities wild once the seed edges in ``dropped`` are deleted, by plain fixpoint iteration."""
    h = g.copy()
    for e in dropped:
        h.edges.pop(e)
    val = least_fixpoint_by_iteration(h, {})
    return {entity_of(vt, v) for v, k in val.items() if k > 0}


def cause_edges(g, vt, cause) -> set:
    return {(x, y) for (x, y) in seed_edges(g) if y in cause.vars}


def test_recordptr_single_cause():
    r = convert_file("recordptr.mc")
    assert [(c.name, c.reason, c.influence) for c in r.causes] == [("recordptr.x", "ExternGlobal", 3)]


def test_checked_program_has_no_causes():
    assert convert_file("recordptr_fixed.mc").causes == []


def test_causes_sorted_by_influence():
    r = convert_text("void h(int *q); int *g; void f(int *p) { h(p); g = p; } int k(int x) { int *z = (int *)x; return *z; }")
    infl = [c.influence for c in r.causes]
    assert infl == sorted(infl, reverse=True)


def test_reason_shares_cover_wild_entities():
    r = convert_file("recordptr.mc")
    wild = {entity_of(r.facts.vt, v) for v in r.kinds.wild_vars}
    rows = reason_shares(r.causes, wild)
    assert rows == [{"reason": "ExternGlobal", "pct_of_wild": 100.0}]


@pytest.mark.parametrize("seed", range(N_PROGRAMS))
def test_influence_matches_delete_edge_oracle(seed):
    r = run([("p.mc", random_program(seed))])
    g, vt = r.facts.kind, r.facts.vt
    seeds = set(seed_edges(g))
    all_wild = wild_entities_without(g, vt, set())
    assert all_wild == {entity_of(vt, v) for v in r.kinds.wild_vars}
    assert {v for _, v in seeds} <= r.kinds.wild_vars
    for c in r.causes:
        mine = cause_edges(g, vt, c)
        # keep only this cause's seeds: what stays wild is exactly what it reaches
        alone = wild_entities_without(g, vt, seeds - mine)
        assert c.influence == len(alone)
        assert c.affected == alone
    if r.causes:
        top = r.causes[0]
        after = wild_entities_without(g, vt, cause_edges(g, vt, top))
        assert len(after) <= len(all_wild)
        others = set().union(*(c.affected for c in r.causes[1:])) if len(r.causes) > 1 else set()
        assert all_wild - after == top.affected - others
