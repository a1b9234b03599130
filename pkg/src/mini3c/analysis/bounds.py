"""Bounds inference for array pointers.

Array pointers are correlated with scalar bounds through two undirected
graphs: the pointer-flow graph (pfg) and the scalar-flow graph (sfg), both
built by :mod:`.constraints`.  Bounds start at seeds (declared bounds,
allocations, fixed-size arrays, library itypes) and spread to neighbouring
array pointers when all informed neighbours agree on a common visible
scalar.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from ..frontend import ast as A
from ..frontend.prelude import ZEROING_ALLOCATORS
from .constraints import Facts, _same_pointee
from .kinds import KindResult
from .ptyp import PtypResult

CT = "ct"
BT = "bt"
ANN_TO_KIND = {"count": CT, "byte_count": BT}
KIND_TO_ANN = {CT: "count", BT: "byte_count"}
GLOBAL = ("global",)

PHASE_L = "L"
PHASE_LC = "L+Cs"
PHASE_PC = "P+Cs"

MAX_ROUNDS = 10_000


@dataclass(frozen=True)
class Bound:
    kind: str  # CT | BT
    node: tuple  # sfg key


@dataclass
class Entry:
    bound: Bound
    provenance: str  # 'declared' | 'seeded' | 'flow' | 'heuristic:CUB' | ...
    after_heuristics: bool = False

    @property
    def heuristic(self) -> bool:
        return self.provenance.startswith("heuristic") or self.after_heuristics


def visible(scope: tuple) -> tuple:
    return (scope,) if scope == GLOBAL else (scope, GLOBAL)


@dataclass
class BoundsResult:
    beta: dict  # pfg key -> Entry
    invalid: set
    arrays: list  # pfg keys in 𝔸, in node order
    trace: list  # (round, phase, node name, kind, bound name)
    seeds: dict  # pfg key -> Entry for the non-heuristic seeds
    heuristics_on: bool = True

    def get(self, key) -> Optional[Bound]:
        e = self.beta.get(key)
        return e.bound if e is not None else None


class BoundsInference:
    def __init__(self, facts: Facts, kinds: KindResult, ptyp: PtypResult):
        self.f = facts
        self.kinds = kinds
        self.ptyp = ptyp
        self.order = {k: i for i, k in enumerate(facts.pfg_nodes)}
        self.pscope = facts.pfg_nodes
        self.sscope = facts.sfg_nodes
        self.padj = _adjacency(facts.pfg_edges, self.order)
        sorder = {k: i for i, k in enumerate(facts.sfg_nodes)}
        self.sadj = _adjacency(facts.sfg_edges, sorder)
        self.arrays = [k for k in facts.pfg_nodes if self._is_array(k)]
        self.array_set = set(self.arrays)
        self.nbrs = {c: [n for n in self.padj.get(c, ()) if n in self.array_set] for c in self.arrays}
        self._reach: dict = {}
        self.beta: dict = {}
        self.invalid: set = set()
        self.cb: dict = {}
        self.trace: list = []
        self.after_heuristics = False

    # ------------------------------------------------------------------ node typing

    def node_var(self, key: tuple) -> Optional[int]:
        vt = self.f.vt
        t = key[0]
        if t == "unit":
            return vt.units[key[1]].external
        if t == "expr":
            return key[1]
        if t == "fctx":
            return vt.units[key[1]].var
        if t == "ctxp":
            fn = self.f.tu.functions[key[1]]
            us = vt.units_of(fn.params[key[2]])
            return us[0].ext if us else None
        if t == "ctxr":
            us = vt.returns_of(key[1])
            return us[0].ext if us else None
        return None

    def _is_array(self, key: tuple) -> bool:
        v = self.node_var(key)
        if v is None or v in self.kinds.wild_vars:
            return False
        # a count() bound cannot describe a pointer that is advanced in place
        if key[0] == "unit" and any(x in self.f.moved for x in self.f.vt.units[key[1]].vars()):
            return False
        if key[0] in ("expr", "fctx") and v in self.f.moved:
            return False
        return self.ptyp.solution[v] in ("arr", "ntarr")

    def group(self, key: tuple) -> str:
        t = key[0]
        if t in ("ctxp", "ctxr", "fctx"):
            return "Cs"
        if t == "expr":
            return "L"
        u = self.f.vt.units[key[1]]
        return "L" if u.entity in ("local", "global") else "P"

    def name(self, key: tuple) -> str:
        return self.f.pnode_names.get(key, str(key))

    def sname(self, key: tuple) -> str:
        return self.f.snode_names.get(key, str(key))

    # ------------------------------------------------------------------ auxiliary functions

    def sfg_reach(self, s: tuple) -> list:
        r = self._reach.get(s)
        if r is None:
            seen = {s}
            q = deque([s])
            while q:
                x = q.popleft()
                for y in self.sadj.get(x, ()):
                    if y not in seen:
                        seen.add(y)
                        q.append(y)
            r = self._reach[s] = [x for x in seen]
        return r

    def bounds_flow(self, c: tuple, bounds) -> frozenset:
        vis = visible(self.pscope[c])
        out = set()
        for b in bounds:
            for x in self.sfg_reach(b.node):
                if self.sscope.get(x) in vis:
                    out.add(Bound(b.kind, x))
        return frozenset(out)

    def find_bounds(self, c: tuple) -> tuple[frozenset, bool]:
        """Known bounds of ``c``, and whether ``c`` blocks agreement (invalidated)."""
        if c in self.beta:
            return frozenset([self.beta[c].bound]), False
        if c in self.invalid:
            return frozenset(), True
        return self.cb.get(c, frozenset()), False

    @staticmethod
    def common_bounds(sets: list) -> frozenset:
        if not sets:
            return frozenset()
        out = set(sets[0])
        for s in sets[1:]:
            out &= s
        return frozenset(out)

    # ------------------------------------------------------------------ propagation

    def infer_bounds(self, nodes: set, rnd: int, phase: str) -> bool:
        needy = [c for c in self.arrays if c in nodes and c not in self.beta and c not in self.invalid]
        for c in needy:
            self.cb[c] = frozenset()
        for _ in range(MAX_ROUNDS):
            moved = False
            for c in needy:
                sets = []
                for n in self.nbrs[c]:
                    b, blocking = self.find_bounds(n)
                    if not b and not blocking:
                        continue  # an uninformed neighbour has no say
                    sets.append(self.bounds_flow(c, b))
                bc = self.common_bounds(sets)
                if bc != self.cb[c]:
                    self.cb[c] = bc
                    moved = True
            if not moved:
                break
        added = False
        for c in needy:
            cands = self.cb[c]
            same = [b for b in cands if self.sscope.get(b.node) == self.pscope[c]]
            if len(same) == 1:
                pick = same[0]
            elif len(cands) == 1:
                pick = next(iter(cands))
            else:
                continue
            self.beta[c] = Entry(pick, "flow", self.after_heuristics)
            self.trace.append((rnd, phase, self.name(c), pick.kind, self.sname(pick.node)))
            added = True
        return added

    def run_inference(self) -> None:
        local = {c for c in self.arrays if self.group(c) == "L"}
        ctx = {c for c in self.arrays if self.group(c) == "Cs"}
        orig = {c for c in self.arrays if self.group(c) == "P"}
        prev_cb = None
        for rnd in range(1, MAX_ROUNDS + 1):
            a = self.infer_bounds(local, rnd, PHASE_L)
            b = self.infer_bounds(local | ctx, rnd, PHASE_LC)
            c = self.infer_bounds(orig | ctx, rnd, PHASE_PC)
            snapshot = dict(self.cb)
            if not (a or b or c) and snapshot == prev_cb:
                break
            prev_cb = snapshot

    # ------------------------------------------------------------------ seeds

    def seed(self, key: Optional[tuple], bound: Optional[Bound], provenance: str) -> None:
        if key is None or bound is None or key not in self.array_set:
            return
        if self.sscope.get(bound.node) not in visible(self.pscope[key]):
            return
        if key in self.invalid:
            return
        old = self.beta.get(key)
        if old is None:
            self.beta[key] = Entry(bound, provenance)
            self.trace.append((0, "seed", self.name(key), bound.kind, self.sname(bound.node)))
        elif old.bound != bound and old.provenance != "declared":
            # contradictory seeds: no trustworthy bound for this pointer
            del self.beta[key]
            self.invalid.add(key)
            self.trace.append((0, "invalid", self.name(key), bound.kind, self.sname(bound.node)))

    def snode_of(self, e: A.Expr) -> Optional[tuple]:
        return self.f.expr_snode.get(id(e))

    def seed_all(self) -> None:
        self.seed_declared()
        self.seed_library_calls()
        self.seed_allocations()
        self.seed_fixed_arrays()
        self.refresh_sfg()

    def refresh_sfg(self) -> None:
        """Seeds and heuristics may add constant or struct-access scalar nodes."""
        self.sadj = _adjacency(self.f.sfg_edges, {k: i for i, k in enumerate(self.f.sfg_nodes)})
        self._reach.clear()

    def _decl_bound_node(self, e: A.Expr, fb) -> Optional[tuple]:
        if isinstance(e, A.IntLit):
            return fb.const_snode(e.value)
        if isinstance(e, A.Ident) and e.decl is not None:
            return fb.decl_snode(e.decl)
        return None

    def seed_declared(self) -> None:
        fb = self.f
        vt, tu = self.f.vt, self.f.tu
        for u in vt.units:
            if u.level != 0:
                continue
            ann = self.declared_bounds(u)
            if ann is None:
                continue
            node = self._decl_bound_node(ann.expr, fb)
            if node is not None:
                self.seed(("unit", u.id), Bound(ANN_TO_KIND[ann.kind], node), "declared")
        # call-site views of parameters with declared bounds in terms of another parameter
        for cs in self.f.calls:
            for i, p in enumerate(cs.callee.params):
                ann = cs.callee.param_declared_bounds(i)
                key = ("ctxp", cs.callee.name, i, cs.id)
                if ann is None or key not in self.pscope:
                    continue
                e = ann.expr
                if isinstance(e, A.IntLit):
                    self.seed(key, Bound(ANN_TO_KIND[ann.kind], fb.const_snode(e.value)), "declared")
                elif isinstance(e, A.Ident) and e.decl is not None and e.decl.kind == "param":
                    sk = ("ctxs", cs.callee.name, e.decl.position, cs.id)
                    if sk in self.sscope:
                        self.seed(key, Bound(ANN_TO_KIND[ann.kind], sk), "declared")
        # struct accesses: a field's declared bound is the sibling field at the same base
        for key in self.f.pfg_nodes:
            if key[0] != "fctx":
                continue
            u = vt.units[key[1]]
            ann = self.declared_bounds(u)
            if ann is None:
                continue
            e = ann.expr
            if isinstance(e, A.IntLit):
                self.seed(key, Bound(ANN_TO_KIND[ann.kind], fb.const_snode(e.value)), "declared")
            elif isinstance(e, A.Ident) and e.decl is not None and e.decl.kind == "field":
                sk = ("sfctx", e.decl.owner, e.decl.name, key[2], key[3])
                sk = fb.snode(sk, ("struct", e.decl.owner, key[2], key[3]), f"{u.struct}.{e.decl.name}@{key[2]}:{key[3]}")
                fb.sedge(sk, fb.decl_snode(e.decl))
                self.seed(key, Bound(ANN_TO_KIND[ann.kind], sk), "declared")

    def declared_bounds(self, u) -> Optional[A.BoundsAnn]:
        if u.entity == "return":
            for fd in u.decl.decls:
                if fd.ret_bounds is not None:
                    return fd.ret_bounds
                if fd.ret_itype is not None and fd.ret_itype.bounds is not None:
                    return fd.ret_itype.bounds
            return None
        if u.entity == "param":
            return self.f.tu.functions[u.function].param_declared_bounds(u.decl.position)
        d = u.decl
        if d.bounds is not None:
            return d.bounds
        if d.itype is not None:
            return d.itype.bounds
        return None

    def seed_library_calls(self) -> None:
        for call, caller, args in self.f.prelude_calls:
            fn = call.function
            for i, p in enumerate(fn.params):
                ann = fn.param_declared_bounds(i)
                if ann is None or i >= len(args) or not isinstance(ann.expr, A.Ident):
                    continue
                ref = ann.expr.decl
                if ref is None or ref.kind != "param" or ref.position >= len(call.args):
                    continue
                key = self.f.expr_pnode.get(id(call.args[i]))
                node = self.snode_of(call.args[ref.position])
                if node is not None:
                    self.seed(key, Bound(ANN_TO_KIND[ann.kind], node), "seeded")

    def seed_allocations(self) -> None:
        for site in self.f.allocs:
            if site.receiver is None or site.receiver.pnode is None:
                continue
            call = site.call
            key = site.receiver.pnode
            if site.allocator in ZEROING_ALLOCATORS:
                if len(call.args) == 2 and isinstance(call.args[1], A.SizeofType) \
                        and self._elem_matches(site, call.args[1].type):
                    node = self.snode_of(call.args[0])
                    if node is not None:
                        self.seed(key, Bound(CT, node), "seeded")
                continue
            if not call.args:
                continue
            size = call.args[0]
            if isinstance(size, A.Binary) and size.op == "*":
                for count, sz in ((size.left, size.right), (size.right, size.left)):
                    if isinstance(sz, A.SizeofType) and not isinstance(count, A.SizeofType):
                        if self._elem_matches(site, sz.type):
                            node = self.snode_of(count)
                            if node is not None:
                                self.seed(key, Bound(CT, node), "seeded")
                        break
                continue
            node = self.snode_of(size)
            if node is not None:
                self.seed(key, Bound(BT, node), "seeded")

    @staticmethod
    def _elem_matches(site, elem: A.TypeExpr) -> bool:
        rt = site.receiver_type
        if rt is None or not rt.decayed().is_pointer:
            return False
        pointee = rt.decayed().deref()
        return _same_pointee(pointee, elem) and pointee.depth == elem.depth

    def seed_fixed_arrays(self) -> None:
        fb = self.f
        for u in self.f.vt.units:
            if u.level == 0 and u.entity != "return" and u.decl.type.array_len is not None:
                self.seed(("unit", u.id), Bound(CT, fb.const_snode(u.decl.type.array_len)), "seeded")

    # ------------------------------------------------------------------ driver

    def needy_originals(self) -> list:
        return [c for c in self.arrays if c not in self.beta and c not in self.invalid]

    def run(self, heuristics: bool = True) -> BoundsResult:
        from . import heuristics as H

        self.seed_all()
        seeds = dict(self.beta)
        self.run_inference()
        if heuristics:
            found = H.try_heuristics(self)
            self.after_heuristics = True
            for key, bound, tag in found:
                if key not in self.beta and key not in self.invalid:
                    self.beta[key] = Entry(bound, f"heuristic:{tag}")
                    self.trace.append(("H", tag, self.name(key), bound.kind, self.sname(bound.node)))
            if found:
                self.refresh_sfg()
                self.run_inference()
        return BoundsResult(self.beta, self.invalid, self.arrays, self.trace, seeds, heuristics)


def _adjacency(edges, order: dict) -> dict:
    adj: dict = {}
    for e in edges:
        a, b = tuple(e)
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    big = len(order)
    for k in adj:
        adj[k].sort(key=lambda n: order.get(n, big))
    return adj


def infer_bounds(facts: Facts, kinds: KindResult, ptyp: PtypResult, heuristics: bool = True) -> tuple[BoundsResult, BoundsInference]:
    bi = BoundsInference(facts, kinds, ptyp)
    return bi.run(heuristics), bi


# --------------------------------------------------------------------------- validation


def validate(bi: BoundsInference, res: BoundsResult) -> list[str]:
    """Re-derive every non-heuristic flow bound from a seed; returns problems found.

    A flow entry ``c -> (k, s)`` is justified when some seed ``c' -> (k, s')``
    is connected to ``c`` in the pfg and ``s'`` reaches ``s`` in the sfg, with
    ``s`` visible from ``c``.
    """
    problems = []
    if set(res.beta) & res.invalid:
        problems.append("bounds map and invalid set overlap")
    padj: dict = {}
    for e in bi.f.pfg_edges:
        a, b = tuple(e)
        padj.setdefault(a, set()).add(b)
        padj.setdefault(b, set()).add(a)
    sadj: dict = {}
    for e in bi.f.sfg_edges:
        a, b = tuple(e)
        sadj.setdefault(a, set()).add(b)
        sadj.setdefault(b, set()).add(a)

    def component(adj, start):
        seen = {start}
        stack = [start]
        while stack:
            x = stack.pop()
            for y in adj.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen

    for c, e in res.beta.items():
        if bi.sscope.get(e.bound.node) not in visible(bi.pscope[c]):
            problems.append(f"{bi.name(c)}: bound {bi.sname(e.bound.node)} is out of scope")
        if e.provenance != "flow" or e.heuristic:
            continue
        pcomp = component(padj, c)
        scomp = component(sadj, e.bound.node)
        ok = any(sk in pcomp and se.bound.kind == e.bound.kind and se.bound.node in scomp
                 for sk, se in res.seeds.items())
        if not ok:
            problems.append(f"{bi.name(c)}: no seed justifies {e.bound.kind} {bi.sname(e.bound.node)}")
    return problems
