"""One pass over the program that produces every constraint the analyses use.

The kind graph and the ptyp graph share variable ids (from the
:class:`~mini3c.qualvars.VarTable`); the pointer-flow and scalar-flow
graphs used by bounds inference are keyed by small tuples instead, since
they add context-sensitive nodes per call site and per struct base.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..frontend import ast as A
from ..frontend.prelude import ALLOCATORS, ZEROING_ALLOCATORS
from ..graph import KIND, PTYP, CGraph
from ..qualvars import VarTable, enumerate_pointer_vars

# wildness reasons reported for root causes
INVALID_CAST = "InvalidCast"
DEFAULT_VOID = "DefaultVoidType"
NON_WRITABLE = "NonWritableFile"
UNION_FIELD = "UnionField"
CONFLICTING = "ConflictingTypes"
UNSAFE_ALLOC = "UnsafeAllocatorCall"
VARIADIC = "VariadicCall"
EXTERN = "ExternGlobal"
ROOT_REASONS = (INVALID_CAST, DEFAULT_VOID, NON_WRITABLE, UNION_FIELD, CONFLICTING, UNSAFE_ALLOC, VARIADIC, EXTERN)

# flow reasons for ordinary edges
FLOW_REASONS = ("assign", "call", "param-pair", "return", "index", "arith", "addr", "alloc", "strlit", "itype", "pin")


@dataclass(frozen=True)
class Wild:
    """A literal wild value at one pointer level (result of an unsafe conversion)."""

    reason: str


@dataclass(eq=False)
class Val:
    kind: str  # 'ptr' | 'null' | 'scalar' | 'alloc' | 'str'
    levels: list = field(default_factory=list)  # var id | Wild | None, outermost first
    pnode: Optional[tuple] = None
    snode: Optional[tuple] = None
    ptyp_lit: Optional[str] = None  # declared checked kind of level 0, if the value carries one
    wild_reason: Optional[str] = None
    alloc: Optional["AllocSite"] = None
    expr: Optional[A.Expr] = None
    alts: list = field(default_factory=list)  # conditional expression: flow every alternative

    def options(self) -> list["Val"]:
        return self.alts or [self]


@dataclass(eq=False)
class AllocSite:
    call: A.Call
    allocator: str
    function: str
    receiver: Optional[Val] = None
    receiver_type: Optional[A.TypeExpr] = None


@dataclass(eq=False)
class CallSite:
    id: int
    call: A.Call
    caller: str
    callee: A.Function
    line: int
    args: list  # Val per argument


@dataclass(eq=False)
class FunctionFacts:
    name: str
    variadic_calls: int = 0
    unresolved_calls: int = 0
    unsafe_casts: int = 0
    assume_casts: int = 0
    callees: set = field(default_factory=set)
    used_decls: set = field(default_factory=set)  # id(VarDecl) of referenced pointer variables
    used_vars: set = field(default_factory=set)  # var ids read or written in the body


@dataclass(eq=False)
class Facts:
    tu: A.TranslationUnit
    vt: VarTable
    kind: CGraph
    ptyp: CGraph
    pfg_edges: set = field(default_factory=set)  # frozenset({a, b}) of pfg keys
    sfg_edges: set = field(default_factory=set)
    pfg_nodes: dict = field(default_factory=dict)  # key -> scope
    sfg_nodes: dict = field(default_factory=dict)  # key -> scope
    calls: list = field(default_factory=list)  # CallSite for user functions
    prelude_calls: list = field(default_factory=list)  # (Call, caller, [Val])
    allocs: list = field(default_factory=list)
    functions: dict = field(default_factory=dict)  # name -> FunctionFacts
    call_ids: dict = field(default_factory=dict)  # id(Call) -> call id
    ctx_arg_text: dict = field(default_factory=dict)  # ('ctxs', f, i, cid) -> argument Expr
    snode_names: dict = field(default_factory=dict)  # sfg key -> display name
    pnode_names: dict = field(default_factory=dict)
    expr_snode: dict = field(default_factory=dict)  # id(Expr) -> sfg key of simple scalar expressions
    expr_pnode: dict = field(default_factory=dict)  # id(Expr) -> pfg key
    moved: set = field(default_factory=set)  # pointer vars advanced by arithmetic (p++, p += e, p = p + e)
    boundary: dict = field(default_factory=dict)  # level-0 ptyp edge across a call -> caller side (see _bind_arg)
    cut_args: set = field(default_factory=set)  # (call id, arg index) whose ptyp edge was cut by a conflict

    def seed_wild(self, var: int, reason: str, line: int = 0, file: str = "") -> None:
        self.kind.add_edge(self.kind.literal("wild"), var, reason, line, file)

    # sfg construction helpers, also used when seeding bounds

    def snode(self, key: tuple, scope: tuple, name: str) -> tuple:
        self.sfg_nodes.setdefault(key, scope)
        self.snode_names.setdefault(key, name)
        return key

    def sedge(self, a, b) -> None:
        if a is not None and b is not None and a != b:
            self.sfg_edges.add(frozenset((a, b)))

    def const_snode(self, value: int) -> tuple:
        return self.snode(("const", value), ("global",), str(value))

    def decl_snode(self, d: A.VarDecl) -> Optional[tuple]:
        if d.type.is_pointer:
            return None
        if d.kind == "param":
            fn = self.tu.functions.get(d.owner)
            key = ("sparam", d.owner, d.position)
            name = fn.params[d.position].name if fn is not None and d.position < len(fn.params) else d.name
            return self.snode(key, ("local", d.owner), f"{d.owner}.{name}")
        if d.kind == "field":
            return self.snode(("sfield", d.owner, d.name), ("struct", d.owner, "decl"), f"{d.owner}.{d.name}")
        if d.kind == "global":
            d = self.tu.globals.get(d.name, d)
            return self.snode(("svar", "", d.name, d.span.file, d.span.start), ("global",), d.name)
        return self.snode(("svar", d.owner, d.name, d.span.file, d.span.start), ("local", d.owner),
                          f"{d.owner}.{d.name}")


# --------------------------------------------------------------------------- helpers


def _same_pointee(a: A.TypeExpr, b: A.TypeExpr) -> bool:
    a, b = a.decayed(), b.decayed()
    return a.base == b.base and len(a.ptrs) == len(b.ptrs)


def _involves_void(a: A.TypeExpr, b: A.TypeExpr) -> bool:
    return a.base == "void" or b.base == "void" or a.generic or b.generic


def expr_text(tu: A.TranslationUnit, e: A.Expr) -> str:
    f = tu.file_of(e.span)
    if f is None:
        return ""
    return f.text[e.span.start:e.span.end].decode("utf-8")


def base_key(tu: A.TranslationUnit, e: A.Expr) -> str:
    """Whitespace-insensitive text of a struct access base."""
    return "".join(expr_text(tu, e).split())


def is_null(e: A.Expr) -> bool:
    while isinstance(e, A.Cast) and e.type.is_pointer:
        e = e.operand
    return isinstance(e, A.NullLit) or (isinstance(e, A.IntLit) and e.value == 0)


class FactBuilder:
    def __init__(self, tu: A.TranslationUnit, vt: Optional[VarTable] = None):
        self.tu = tu
        self.vt = vt or enumerate_pointer_vars(tu)
        names = self.vt.names()
        self.f = Facts(tu, self.vt, CGraph(KIND, names), CGraph(PTYP, names))
        self.func = ""
        self.file = ""
        self.n_calls = 0

    # ------------------------------------------------------------------ graph helpers

    @property
    def kind(self) -> CGraph:
        return self.f.kind

    @property
    def ptyp(self) -> CGraph:
        return self.f.ptyp

    def seed(self, var, reason: str, line: int) -> None:
        if isinstance(var, int):
            self.f.seed_wild(var, reason, line, self.file)

    def seed_val(self, v: Val, reason: str, line: int) -> None:
        for o in v.options():
            for lv in o.levels:
                self.seed(lv, reason, line)

    def lit(self, el: str) -> int:
        return self.ptyp.literal(el)

    def pedge(self, a, b) -> None:
        if a is not None and b is not None and a != b:
            self.f.pfg_edges.add(frozenset((a, b)))

    def sedge(self, a, b) -> None:
        self.f.sedge(a, b)

    def snode(self, key: tuple, scope: tuple, name: str) -> tuple:
        return self.f.snode(key, scope, name)

    def decl_snode(self, d: A.VarDecl) -> Optional[tuple]:
        return self.f.decl_snode(d)

    def const_snode(self, value: int) -> tuple:
        return self.f.const_snode(value)

    def pnode(self, key: tuple, scope: tuple, name: str) -> tuple:
        self.f.pfg_nodes.setdefault(key, scope)
        self.f.pnode_names.setdefault(key, name)
        return key

    # ------------------------------------------------------------------ node naming

    def unit_scope(self, u) -> tuple:
        if u.entity == "global":
            return ("global",)
        if u.entity == "field":
            return ("struct", u.struct, "decl")
        return ("local", u.function)

    def unit_pnode(self, u) -> tuple:
        return self.pnode(("unit", u.id), self.unit_scope(u), u.name)

    # ------------------------------------------------------------------ declarations

    def declarations(self) -> None:
        vt = self.vt
        tu = self.tu
        for u in vt.units:
            self.file = u.file
            d = u.decl
            if u.paired:
                # the external face flows into the internal one
                self.kind.add_edge(u.ext, u.int_, "param-pair", u.line, u.file)
                self.ptyp.add_bi(u.ext, u.int_, "param-pair", u.line, u.file)
            if u.readonly:
                for v in u.vars():
                    self.seed(v, NON_WRITABLE, u.line)
            self.unit_pnode(u) if u.level == 0 else None
        for u in vt.units:
            self.file = u.file
            self._declared_kinds(u)
        for tag, sd in tu.structs.items():
            if sd.is_union:
                for fd in sd.fields:
                    for u in vt.units_of(fd):
                        self.seed(u.var, UNION_FIELD, u.line)
        # extern globals with no definition anywhere
        for name, d in tu.globals.items():
            if d.is_extern:
                for u in vt.units_of(d):
                    self.file = u.file
                    self.seed(u.var, EXTERN, u.line)
        for fn in tu.functions.values():
            if fn.prelude:
                continue
            if fn.definition is None:
                self._extern_function(fn)
        # void* without a generic itype cannot be checked
        for u in vt.units:
            self._void_seed(u)

    def _declared_kinds(self, u) -> None:
        kinds = self._declared_level_kinds(u)
        if kinds is None or u.level >= len(kinds) or kinds[u.level] is None:
            return
        lit = self.lit(kinds[u.level])
        for v in u.vars():
            self.ptyp.add_bi(v, lit, "pin", u.line, u.file)

    def _declared_level_kinds(self, u) -> Optional[tuple]:
        if u.entity == "return":
            return u.decl.ret_declared_kinds()
        d: A.VarDecl = u.decl
        if u.entity == "param":
            fn = self.tu.functions[u.function]
            return fn.param_declared_kinds(d.position)
        if d.itype is not None:
            return d.itype.type.level_kinds()
        lk = d.type.level_kinds()
        if d.type.array_len is not None:
            lk = ("arr",) + lk[1:]  # a fixed array is always an array
        return lk if any(k is not None for k in lk) else None

    def _has_itype(self, u) -> bool:
        if u.entity == "return":
            return any(fd.ret_itype is not None for fd in u.decl.decls)
        if u.entity == "param":
            return self.tu.functions[u.function].param_itype(u.decl.position) is not None
        return u.decl.itype is not None

    def _extern_function(self, fn: A.Function) -> None:
        for i, p in enumerate(fn.params):
            if fn.param_itype(i) is not None:
                continue
            for u in self.vt.units_of(p):
                self.file = u.file
                self.seed(u.ext, EXTERN, u.line)
        has_ret_itype = any(fd.ret_itype is not None for fd in fn.decls)
        if not has_ret_itype:
            for u in self.vt.returns_of(fn.name):
                self.file = u.file
                self.seed(u.ext, EXTERN, u.line)

    def _void_seed(self, u) -> None:
        ty = u.decl.ret if u.entity == "return" else u.decl.type
        if ty.base != "void" or u.level != ty.depth - 1 or self._has_itype(u):
            return
        if u.entity == "return" or u.entity == "param":
            fn = self.tu.functions[u.function]
            if fn.generic and u.entity == "param" and fn.param_itype(u.decl.position) is not None:
                return
        self.file = u.file
        for v in u.vars():
            self.seed(v, DEFAULT_VOID, u.line)

    # ------------------------------------------------------------------ values

    def decl_val(self, d: A.VarDecl, e: Optional[A.Expr] = None) -> Val:
        units = self.vt.units_of(d)
        if not units:
            return Val("scalar", snode=self.decl_snode(d), expr=e)
        levels = [u.internal for u in units]
        return Val("ptr", levels, pnode=self.unit_pnode(units[0]), expr=e)

    def flow(self, dst: Val, src: Val, line: int, reason: str = "assign") -> None:
        """Value ``src`` is stored into location ``dst``."""
        if dst.kind != "ptr":
            if dst.snode is not None:
                for o in src.options():
                    if o.kind == "scalar" or o.kind == "null":
                        self.sedge(dst.snode, o.snode)
            # pointer stored into a scalar
            for o in src.options():
                if o.kind == "ptr":
                    self.seed_val(o, INVALID_CAST, line)
            return
        for o in src.options():
            self._flow_one(dst, o, line, reason)

    def _flow_one(self, dst: Val, src: Val, line: int, reason: str) -> None:
        f = self.file
        if src.kind == "null":
            return
        if src.kind == "scalar":
            self.seed_val(dst, src.wild_reason or INVALID_CAST, line)
            return
        if src.kind == "alloc":
            if src.alloc is not None and src.alloc.receiver is None:
                src.alloc.receiver = dst
                src.alloc.receiver_type = dst.expr.ty if dst.expr is not None else None
            if src.alloc.allocator not in ZEROING_ALLOCATORS and isinstance(dst.levels[0], int):
                self.ptyp.add_edge(self.lit("arr"), dst.levels[0], "alloc", line, f)
            return
        if src.kind == "str":
            if isinstance(dst.levels[0], int):
                self.ptyp.add_edge(dst.levels[0], self.lit("ntarr"), "strlit", line, f)
            return
        n = min(len(dst.levels), len(src.levels))
        if len(dst.levels) != len(src.levels):
            reason_w = DEFAULT_VOID if self._voidish(dst, src) else INVALID_CAST
            for lv in dst.levels[n:] + src.levels[n:]:
                self.seed(lv, reason_w, line)
        for k in range(n):
            a, b = dst.levels[k], src.levels[k]
            if isinstance(b, Wild):
                self.seed(a, b.reason, line)
            elif isinstance(a, Wild):
                self.seed(b, a.reason, line)
            elif isinstance(a, int) and isinstance(b, int):
                self.kind.add_bi(a, b, reason, line, f)
                if k == 0:
                    self.ptyp.add_edge(b, a, reason, line, f)
                else:
                    self.ptyp.add_bi(a, b, reason, line, f)
        if src.ptyp_lit is not None and isinstance(dst.levels[0], int):
            self.ptyp.add_edge(self.lit(src.ptyp_lit), dst.levels[0], reason, line, f)
        if src.kind == "ptr":
            self.pedge(dst.pnode, src.pnode)

    @staticmethod
    def _voidish(a: Val, b: Val) -> bool:
        ta = a.expr.ty if a.expr is not None else None
        tb = b.expr.ty if b.expr is not None else None
        return (ta is not None and ta.base == "void") or (tb is not None and tb.base == "void")

    # ------------------------------------------------------------------ functions

    def functions(self) -> None:
        for d in self.tu.global_decls:
            if d.init is not None and d.span.file >= 0:
                self.func = ""
                self.file = self.tu.filename(d.span)
                canon = self.tu.globals[d.name]
                self.flow(self.decl_val(canon, A.Ident(d.span, d.name)), self.expr(d.init), d.span.line)
        for fn in self.tu.functions.values():
            if fn.prelude or fn.definition is None:
                continue
            self.func = fn.name
            self.file = self.tu.filename(fn.definition.span)
            self.ff = self.f.functions.setdefault(fn.name, FunctionFacts(fn.name))
            self.fn = fn
            self.stmt(fn.definition.body)
        self.func = ""

    def _typed(self, d: A.VarDecl) -> A.Ident:
        e = A.Ident(d.span, d.name)
        e.ty = d.type
        e.decl = d
        return e

    def stmt(self, s: A.Stmt) -> None:
        if isinstance(s, A.Block):
            for st in s.stmts:
                self.stmt(st)
        elif isinstance(s, A.DeclStmt):
            for d in s.decls:
                if d.init is not None:
                    v = self.expr(d.init)
                    self.flow(self.decl_val(d, self._typed(d)), v, d.span.line)
        elif isinstance(s, A.ExprStmt):
            self.expr(s.expr)
        elif isinstance(s, A.If):
            self.expr(s.cond)
            self.stmt(s.then)
            if s.other is not None:
                self.stmt(s.other)
        elif isinstance(s, (A.While, A.DoWhile)):
            self.expr(s.cond)
            self.stmt(s.body)
        elif isinstance(s, A.For):
            if isinstance(s.init, A.DeclStmt):
                self.stmt(s.init)
            elif s.init is not None:
                self.expr(s.init)
            if s.cond is not None:
                self.expr(s.cond)
            if s.step is not None:
                self.expr(s.step)
            self.stmt(s.body)
        elif isinstance(s, A.Return):
            if s.value is None:
                return
            v = self.expr(s.value)
            rets = self.vt.returns_of(self.func)
            if rets:
                dst = Val("ptr", [u.int_ for u in rets], pnode=self.unit_pnode(rets[0]))
                dst.expr = A.Ident(s.span, "return")
                dst.expr.ty = self.fn.ret
                self.flow(dst, v, s.span.line, "return")
            else:
                self.flow(Val("scalar", snode=self.snode(("sret", self.func), ("ret", self.func), f"{self.func}.return")),
                          v, s.span.line, "return")

    # ------------------------------------------------------------------ expressions

    def expr(self, e: A.Expr) -> Val:
        v = self._expr(e)
        v.expr = v.expr or e
        if v.snode is not None:
            self.f.expr_snode[id(e)] = v.snode
        if v.pnode is not None:
            self.f.expr_pnode[id(e)] = v.pnode
        return v

    def _arith(self, v: Val, line: int) -> None:
        for o in v.options():
            if o.kind == "ptr" and o.levels and isinstance(o.levels[0], int):
                self.ptyp.add_edge(o.levels[0], self.lit("arr"), "arith", line, self.file)

    def _moved(self, v: Val) -> None:
        if v.kind == "ptr" and v.levels and isinstance(v.levels[0], int):
            self.f.moved.add(v.levels[0])

    def _expr(self, e: A.Expr) -> Val:
        line = e.span.line
        if isinstance(e, A.Ident):
            d = e.decl
            if d.type.is_pointer:
                self.ff.used_decls.add(id(d))
                for u in self.vt.units_of(d):
                    self.ff.used_vars.add(u.internal)
            return self.decl_val(d, e)
        if isinstance(e, A.IntLit):
            if e.value == 0:
                return Val("null", snode=self.const_snode(0))
            return Val("scalar", snode=self.const_snode(e.value))
        if isinstance(e, (A.CharLit,)):
            return Val("scalar")
        if isinstance(e, A.StrLit):
            return Val("str", [None])
        if isinstance(e, A.NullLit):
            return Val("null")
        if isinstance(e, A.Member):
            return self.member(e)
        if isinstance(e, A.Unary):
            return self.unary(e)
        if isinstance(e, A.Postfix):
            v = self.expr(e.operand)
            if e.operand.ty.is_pointer:
                self._arith(v, line)
                self._moved(v)
                return Val("ptr", list(v.levels), expr=e)
            return Val("scalar")
        if isinstance(e, A.Binary):
            return self.binary(e)
        if isinstance(e, A.Assign):
            return self.assign(e)
        if isinstance(e, A.Index):
            b = self.expr(e.base)
            self.expr(e.index)
            for o in b.options():
                if o.kind == "ptr" and isinstance(o.levels[0], int):
                    self.ptyp.add_edge(o.levels[0], self.lit("arr"), "index", line, self.file)
            if e.ty.is_pointer:
                return Val("ptr", list(b.levels[1:]), expr=e)
            return Val("scalar")
        if isinstance(e, A.Call):
            return self.call(e)
        if isinstance(e, A.Cast):
            return self.cast(e)
        if isinstance(e, (A.SizeofType, A.SizeofExpr)):
            return Val("scalar")
        if isinstance(e, A.Cond):
            self.expr(e.cond)
            a = self.expr(e.then)
            b = self.expr(e.other)
            if not e.ty.is_pointer:
                return Val("scalar")
            return Val("ptr", list(a.levels) if a.kind == "ptr" else [None] * e.ty.depth, alts=a.options() + b.options())
        if isinstance(e, A.BoundsCast):
            v = self.expr(e.operand)
            if e.which == "assume":
                self.ff.assume_casts += 1
            kinds = e.type.level_kinds()
            # the cast is an explicit trust boundary: no flow from the operand
            return Val("ptr", [None] * e.type.depth, ptyp_lit=kinds[0] if kinds else None, expr=e)
        return Val("scalar")

    def member(self, e: A.Member) -> Val:
        self.expr(e.base)
        fd = e.field_decl
        base = base_key(self.tu, e.base)
        units = self.vt.units_of(fd)
        if units:
            u0 = units[0]
            key = ("fctx", u0.id, self.func, base)
            pn = self.pnode(key, ("struct", fd.owner, self.func, base), f"{u0.name}@{self.func}:{base}")
            self.pedge(pn, self.unit_pnode(u0))
            for u in units:
                self.ff.used_vars.add(u.var)
            return Val("ptr", [u.var for u in units], pnode=pn, expr=e)
        orig = self.decl_snode(fd)
        key = ("sfctx", fd.owner, fd.name, self.func, base)
        sn = self.snode(key, ("struct", fd.owner, self.func, base), f"{fd.owner}.{fd.name}@{self.func}:{base}")
        self.sedge(sn, orig)
        return Val("scalar", snode=sn, expr=e)

    def unary(self, e: A.Unary) -> Val:
        line = e.span.line
        if e.op == "&":
            v = self.expr(e.operand)
            var = self.vt.expr_vars[id(e)][0]
            self.ptyp.add_edge(self.lit("ptr"), var, "addr", line, self.file)
            self.ff.used_vars.add(var)
            inner = list(v.levels) if v.kind == "ptr" else []
            pn = self.pnode(("expr", var), ("local", self.func), self.vt.vars[var].name)
            return Val("ptr", [var] + inner, pnode=pn, expr=e)
        v = self.expr(e.operand)
        if e.op == "*":
            if e.ty.is_pointer:
                return Val("ptr", list(v.levels[1:]), expr=e)
            return Val("scalar")
        if e.op in ("++", "--") and e.operand.ty.is_pointer:
            self._arith(v, line)
            self._moved(v)
            return Val("ptr", list(v.levels), expr=e)
        if e.op in ("-", "~") and isinstance(e.operand, A.IntLit):
            return Val("scalar", snode=self.const_snode(-e.operand.value if e.op == "-" else ~e.operand.value))
        return Val("scalar")

    def binary(self, e: A.Binary) -> Val:
        a = self.expr(e.left)
        b = self.expr(e.right)
        lp, rp = e.left.ty.is_pointer, e.right.ty.is_pointer
        if e.op in ("+", "-") and (lp or rp):
            if lp and rp:
                self._arith(a, e.span.line)
                self._arith(b, e.span.line)
                return Val("scalar")
            p = a if lp else b
            self._arith(p, e.span.line)
            # the result is a different position in the same object: no bounds flow
            return Val("ptr", list(p.levels), expr=e)
        return Val("scalar")

    def assign(self, e: A.Assign) -> Val:
        t = self.expr(e.target)
        v = self.expr(e.value)
        line = e.span.line
        if e.op == "=":
            self.flow(t, v, line)
            if isinstance(e.value, A.Binary) and e.value.op in ("+", "-") and t.kind == "ptr" and v.kind == "ptr" \
                    and t.levels and t.levels[0] == v.levels[0]:
                self._moved(t)
        elif e.target.ty.is_pointer and e.op in ("+=", "-="):
            self._arith(t, line)
            self._moved(t)
        elif e.target.ty.is_pointer:
            self.seed_val(t, INVALID_CAST, line)
        return t

    def cast(self, e: A.Cast) -> Val:
        v = self.expr(e.operand)
        line = e.span.line
        to, frm = e.type, e.operand.ty
        if not to.is_pointer:
            if frm.is_pointer:
                self.seed_val(v, INVALID_CAST, line)
                self.ff.unsafe_casts += 1
            return Val("scalar", snode=v.snode if v.kind == "scalar" else None)
        if is_null(e.operand) or v.kind == "null":
            return Val("null")
        if v.kind in ("alloc", "str"):
            return v
        if v.kind == "scalar":
            self.ff.unsafe_casts += 1
            return Val("ptr", [Wild(INVALID_CAST)] * to.depth, expr=e)
        if _same_pointee(to, frm) or (_involves_void(to, frm) and to.depth == 1 and frm.depth == 1) \
                or (_involves_void(to, frm) and to.depth == frm.depth):
            if not _same_pointee(to, frm):
                self.ff.unsafe_casts += 1
            return Val("ptr", list(v.levels), pnode=v.pnode, expr=e)
        self.ff.unsafe_casts += 1
        self.seed_val(v, INVALID_CAST, line)
        return Val("ptr", [Wild(INVALID_CAST)] * to.depth, expr=e)

    # ------------------------------------------------------------------ calls

    def call(self, e: A.Call) -> Val:
        args = [self.expr(a) for a in e.args]
        line = e.span.line
        fn = e.function
        if fn is None:
            self.ff.unresolved_calls += 1
            for a in args:
                if a.kind == "ptr":
                    self.seed_val(a, EXTERN, line)
            return Val("scalar", wild_reason=EXTERN)
        self.ff.callees.add(fn.name)
        if fn.prelude:
            return self.prelude_call(e, fn, args)
        cid = self.n_calls
        self.n_calls += 1
        self.f.call_ids[id(e)] = cid
        self.f.calls.append(CallSite(cid, e, self.func, fn, line, args))
        nparams = len(fn.params)
        for i, a in enumerate(args):
            if i >= nparams:
                self.ff.variadic_calls += 1
                if a.kind == "ptr":
                    self.seed_val(a, VARIADIC, line)
                continue
            p = fn.params[i]
            units = self.vt.units_of(p)
            if not units:
                self.scalar_arg(fn, i, cid, a, e)
                continue
            ctx = self.pnode(("ctxp", fn.name, i, cid), ("param", fn.name, cid), f"{units[0].name}@{line}")
            self.pedge(ctx, self.unit_pnode(units[0]))
            for o in a.options():
                self._bind_arg(units, o, line, ctx)
        rets = self.vt.returns_of(fn.name)
        if rets:
            ctx_vars = self.vt.expr_vars[id(e)]
            for k, (u, c) in enumerate(zip(rets, ctx_vars)):
                self.kind.add_edge(u.ext, c, "return", line, self.file)
                if k == 0:
                    self.ptyp.add_edge(u.ext, c, "return", line, self.file)
                    self.f.boundary.setdefault((u.ext, c), ("ret", c))
                else:
                    self.kind.add_edge(c, u.ext, "return", line, self.file)
                    self.ptyp.add_bi(u.ext, c, "return", line, self.file)
                self.ff.used_vars.add(c)
            pn = self.pnode(("ctxr", fn.name, cid), ("param", fn.name, cid), f"{rets[0].name}@{line}")
            self.pedge(pn, self.unit_pnode(rets[0]))
            return Val("ptr", list(ctx_vars), pnode=pn, expr=e)
        if fn.ret.depth == 0 and fn.ret.base != "void":
            sn = self.snode(("ctxr_s", fn.name, cid), ("ret", fn.name, cid), f"{fn.name}.return@{line}")
            self.sedge(sn, self.snode(("sret", fn.name), ("ret", fn.name), f"{fn.name}.return"))
            return Val("scalar", snode=sn)
        return Val("scalar")

    def scalar_arg(self, fn: A.Function, i: int, cid: int, a: Val, e: A.Call) -> None:
        p = fn.params[i]
        key = ("ctxs", fn.name, i, cid)
        sn = self.snode(key, ("param", fn.name, cid), f"{fn.name}.{p.name}@{e.span.line}")
        self.f.ctx_arg_text[key] = e.args[i]
        self.sedge(sn, self.decl_snode(p))
        if a.kind in ("scalar", "null"):
            self.sedge(sn, a.snode)
        elif a.kind == "ptr":
            self.seed_val(a, INVALID_CAST, e.span.line)

    def _bind_arg(self, units, a: Val, line: int, ctx) -> None:
        f = self.file
        p0 = units[0].ext
        if a.kind == "null":
            return
        if a.kind == "scalar":
            return
        if a.kind == "alloc":
            if a.alloc.allocator not in ZEROING_ALLOCATORS:
                self.ptyp.add_edge(self.lit("arr"), p0, "alloc", line, f)
                self.f.boundary.setdefault((self.lit("arr"), p0), None)
            return
        if a.kind == "str":
            self.ptyp.add_edge(p0, self.lit("ntarr"), "strlit", line, f)
            self.f.boundary.setdefault((p0, self.lit("ntarr")), None)
            return
        n = min(len(units), len(a.levels))
        for lv in a.levels[n:]:
            self.seed(lv, INVALID_CAST, line)
        for k in range(n):
            pe, av = units[k].ext, a.levels[k]
            if isinstance(av, Wild):
                if k > 0:
                    self.seed(pe, av.reason, line)
                continue
            if not isinstance(av, int):
                continue
            if k == 0:
                self.kind.add_edge(pe, av, "call", line, f)
                self.ptyp.add_edge(av, pe, "call", line, f)
                self.f.boundary.setdefault((av, pe), ("arg", ctx[3], ctx[2]))
            else:
                self.kind.add_bi(pe, av, "call", line, f)
                self.ptyp.add_bi(pe, av, "call", line, f)
        if a.ptyp_lit is not None:
            self.ptyp.add_edge(self.lit(a.ptyp_lit), p0, "call", line, f)
            self.f.boundary.setdefault((self.lit(a.ptyp_lit), p0), None)
        self.pedge(a.pnode, ctx)

    def prelude_call(self, e: A.Call, fn: A.Function, args: list) -> Val:
        line = e.span.line
        self.f.prelude_calls.append((e, self.func, args))
        for i, a in enumerate(args):
            if i >= len(fn.params):
                break
            kinds = fn.param_declared_kinds(i)
            if kinds and kinds[0] is not None:
                for o in a.options():
                    if o.kind == "ptr" and isinstance(o.levels[0], int):
                        self.ptyp.add_edge(o.levels[0], self.lit(kinds[0]), "itype", line, self.file)
        if fn.name in ALLOCATORS:
            site = AllocSite(e, fn.name, self.func)
            self.f.allocs.append(site)
            return Val("alloc", [None], alloc=site, expr=e)
        if fn.ret.is_pointer:
            return Val("null")
        return Val("scalar")

    # ------------------------------------------------------------------ driver

    def build(self) -> Facts:
        self.declarations()
        self.ff = FunctionFacts("")
        self.functions()
        self._alloc_checks()
        return self.f

    def _alloc_checks(self) -> None:
        """malloc(sizeof(T) * n) assigned to a pointer to something other than T."""
        for site in self.f.allocs:
            if site.receiver is None or site.receiver_type is None:
                continue
            elem = alloc_element_type(site.call)
            if elem is None:
                continue
            rt = site.receiver_type.decayed()
            if not rt.is_pointer:
                continue
            pointee = rt.deref()
            if pointee.base == "void" or pointee.generic:
                continue
            if not _same_pointee(pointee, elem) or pointee.depth != elem.depth:
                self.file = self.tu.filename(site.call.span)
                self.seed_val(site.receiver, UNSAFE_ALLOC, site.call.span.line)


def alloc_element_type(call: A.Call) -> Optional[A.TypeExpr]:
    """``T`` when the allocation size is ``sizeof(T)`` times something (or alone)."""
    name = call.callee.name
    if name == "malloc" and call.args:
        size = call.args[0]
        if isinstance(size, A.SizeofType):
            return size.type
        if isinstance(size, A.Binary) and size.op == "*":
            for side in (size.left, size.right):
                if isinstance(side, A.SizeofType):
                    return side.type
    if name == "calloc" and len(call.args) == 2 and isinstance(call.args[1], A.SizeofType):
        return call.args[1].type
    return None


def build_facts(tu: A.TranslationUnit) -> Facts:
    return FactBuilder(tu).build()
