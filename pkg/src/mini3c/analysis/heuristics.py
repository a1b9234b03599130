"""Fallback bounds for array pointers that inference left without one.

Tried in order for every still-needy pointer:

* consistent upper bound (CUB): every index into the array is a variable
  guarded by ``i < ub`` (enclosing ``if``/loop condition, or an earlier
  ``if (i >= ub) return;``) for one common ``ub``;
* name prefix (NPr): a struct field ``f`` with a scalar sibling named
  ``f...`` containing a count-like word;
* next parameter (NePa): the parameter right after an array parameter, when
  it is a scalar never used in arithmetic.
"""

from __future__ import annotations

from typing import Optional

from ..frontend import ast as A

COUNT_WORDS = ("len", "size", "count", "num", "cnt")
ARITH_OPS = {"+", "-", "*", "/", "%", "&", "|", "^", "<<", ">>"}


# --------------------------------------------------------------------------- CUB


def _conjuncts(e: A.Expr, op: str) -> list:
    if isinstance(e, A.Binary) and e.op == op:
        return _conjuncts(e.left, op) + _conjuncts(e.right, op)
    return [e]


def _less_than(e: A.Expr) -> Optional[tuple]:
    """``(index decl, ub)`` when ``e`` says ``index < ub``."""
    if not isinstance(e, A.Binary):
        return None
    if e.op == "<" and isinstance(e.left, A.Ident) and not e.left.ty.is_pointer:
        return e.left.decl, e.right
    if e.op == ">" and isinstance(e.right, A.Ident) and not e.right.ty.is_pointer:
        return e.right.decl, e.left
    return None


def _at_least(e: A.Expr) -> Optional[tuple]:
    """``(index decl, ub)`` when ``e`` says ``index >= ub``."""
    if not isinstance(e, A.Binary):
        return None
    if e.op == ">=" and isinstance(e.left, A.Ident) and not e.left.ty.is_pointer:
        return e.left.decl, e.right
    if e.op == "<=" and isinstance(e.right, A.Ident) and not e.right.ty.is_pointer:
        return e.right.decl, e.left
    return None


def _guards_true(cond: A.Expr) -> list:
    return [g for g in map(_less_than, _conjuncts(cond, "&&")) if g is not None]


def _guards_after_exit(cond: A.Expr) -> list:
    return [g for g in map(_at_least, _conjuncts(cond, "||")) if g is not None]


def _exits(s: A.Stmt) -> bool:
    if isinstance(s, (A.Return, A.Break, A.Continue)):
        return True
    return isinstance(s, A.Block) and bool(s.stmts) and _exits(s.stmts[-1])


class IndexUses:
    """Index expressions per array declaration, with the guards in force."""

    def __init__(self):
        self.uses: dict = {}  # id(decl) -> list of guard-ub lists (innermost first), None = unguardable
        self.decls: dict = {}

    def record(self, e: A.Expr, guards: list) -> None:
        for x in A.iter_exprs(e):
            if not isinstance(x, A.Index) or not isinstance(x.base, A.Ident) or x.base.decl is None:
                continue
            d = x.base.decl
            self.decls[id(d)] = d
            if isinstance(x.index, A.Ident) and x.index.decl is not None:
                ubs = [ub for (idx, ub) in reversed(guards) if idx is x.index.decl]
                self.uses.setdefault(id(d), []).append(ubs)
            else:
                self.uses.setdefault(id(d), []).append(None)

    def stmt(self, s: Optional[A.Stmt], guards: list) -> None:
        if s is None:
            return
        if isinstance(s, A.Block):
            local = list(guards)
            for st in s.stmts:
                self.stmt(st, local)
                if isinstance(st, A.If) and st.other is None and _exits(st.then):
                    local = local + _guards_after_exit(st.cond)
        elif isinstance(s, A.If):
            self.record(s.cond, guards)
            self.stmt(s.then, guards + _guards_true(s.cond))
            self.stmt(s.other, guards)
        elif isinstance(s, A.While):
            self.record(s.cond, guards)
            self.stmt(s.body, guards + _guards_true(s.cond))
        elif isinstance(s, A.DoWhile):
            self.stmt(s.body, guards)
            self.record(s.cond, guards)
        elif isinstance(s, A.For):
            if isinstance(s.init, A.DeclStmt):
                self.stmt(s.init, guards)
            elif s.init is not None:
                self.record(s.init, guards)
            inner = guards
            if s.cond is not None:
                self.record(s.cond, guards)
                inner = guards + _guards_true(s.cond)
            self.stmt(s.body, inner)
            if s.step is not None:
                self.record(s.step, inner)
        elif isinstance(s, A.DeclStmt):
            for d in s.decls:
                if d.init is not None:
                    self.record(d.init, guards)
        elif isinstance(s, A.ExprStmt):
            self.record(s.expr, guards)
        elif isinstance(s, A.Return) and s.value is not None:
            self.record(s.value, guards)


def _ub_node(facts, ub: A.Expr) -> Optional[tuple]:
    if isinstance(ub, A.IntLit):
        return facts.const_snode(ub.value)
    if isinstance(ub, A.Ident) and ub.decl is not None and not ub.decl.type.is_pointer:
        return facts.decl_snode(ub.decl)
    return None


def consistent_upper_bounds(facts) -> dict:
    """Map ``id(decl) -> sfg key`` of the common upper bound of its indices."""
    iu = IndexUses()
    for fn in facts.tu.functions.values():
        if fn.prelude or fn.definition is None:
            continue
        iu.stmt(fn.definition.body, [])
    out = {}
    for did, uses in iu.uses.items():
        if any(u is None or not u for u in uses):
            continue
        per_use = [[_ub_node(facts, ub) for ub in u] for u in uses]
        common = set(per_use[0])
        for p in per_use[1:]:
            common &= set(p)
        common.discard(None)
        pick = next((n for n in per_use[0] if n in common), None)
        if pick is not None:
            out[did] = pick
    return out


# --------------------------------------------------------------------------- NPr / NePa


def name_prefix_field(sd: A.StructDef, name: str) -> Optional[A.VarDecl]:
    for f in sd.fields:
        if f.name == name or f.type.is_pointer or not f.name.startswith(name):
            continue
        rest = f.name[len(name):].lower()
        if any(w in rest for w in COUNT_WORDS):
            return f
    return None


def arithmetic_uses(body: Optional[A.Block]) -> set:
    """ids of declarations used as an operand of arithmetic, bitwise or update operators."""
    used: set = set()
    if body is None:
        return used

    def mark(e):
        if isinstance(e, A.Ident) and e.decl is not None:
            used.add(id(e.decl))

    for e in A.iter_exprs(body):
        if isinstance(e, A.Binary) and e.op in ARITH_OPS:
            mark(e.left)
            mark(e.right)
        elif isinstance(e, (A.Unary, A.Postfix)) and e.op in ("++", "--", "~", "-"):
            mark(e.operand)
        elif isinstance(e, A.Assign) and e.op != "=":
            mark(e.target)
            mark(e.value)
    return used


def next_param(fn: A.Function, pos: int) -> Optional[A.VarDecl]:
    if pos + 1 >= len(fn.params):
        return None
    nxt = fn.params[pos + 1]
    if nxt.type.is_pointer:
        return None
    if fn.definition is not None:
        body_param = fn.definition.params[pos + 1]
        if id(body_param) in arithmetic_uses(fn.definition.body):
            return None
    return nxt


# --------------------------------------------------------------------------- driver


def try_heuristics(bi) -> list:
    """``[(pfg key, Bound, tag)]`` for needy pointers, in array order."""
    from .bounds import CT, Bound, visible

    facts = bi.f
    vt = facts.vt
    cub = consistent_upper_bounds(facts)
    found = []
    for key in bi.needy_originals():
        if key[0] != "unit":
            continue
        u = vt.units[key[1]]
        if u.entity == "return":
            continue
        vis = visible(bi.pscope[key])
        d = u.decl
        choice = None
        node = cub.get(id(d))
        if node is None and u.entity == "param":
            fn = facts.tu.functions[u.function]
            if fn.definition is not None:
                node = cub.get(id(fn.definition.params[d.position]))
        if node is not None and facts.sfg_nodes.get(node) in vis:
            choice = (node, "CUB")
        if choice is None and u.entity == "field":
            f2 = name_prefix_field(facts.tu.structs[u.struct], d.name)
            if f2 is not None:
                choice = (facts.decl_snode(f2), "NPr")
        if choice is None and u.entity == "param":
            nxt = next_param(facts.tu.functions[u.function], d.position)
            if nxt is not None:
                choice = (facts.decl_snode(nxt), "NePa")
        if choice is not None and facts.sfg_nodes.get(choice[0]) in vis:
            found.append((key, Bound(CT, choice[0]), choice[1]))
    return found
