"""Qualifier variables: one per pointer level of every declared entity.

A *unit* is what the report counts: one pointer level of one variable,
field, parameter or return.  Parameters and returns own two variables per
level (an external face seen by callers and an internal face seen by the
body); everything else owns one.  Expression-level variables (``&x`` and
the value of a call to a pointer-returning function) are not units.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .frontend import ast as A
from .frontend.lexer import Span

ROLE_LOCAL = "local"
ROLE_GLOBAL = "global"
ROLE_FIELD = "field"
ROLE_PARAM_EXT = "param-ext"
ROLE_PARAM_INT = "param-int"
ROLE_RET_EXT = "return-ext"
ROLE_RET_INT = "return-int"
ROLE_ADDR = "addr"
ROLE_CALL = "ctx-call"


@dataclass(frozen=True)
class QualVar:
    id: int
    name: str
    level: int
    role: str
    unit: int  # owning unit, -1 for expression-level vars
    scope: str  # function name, struct tag, or "" for globals
    file: str
    line: int


@dataclass(eq=False)
class Unit:
    id: int
    name: str
    level: int
    entity: str  # 'local' | 'global' | 'field' | 'param' | 'return'
    decl: object  # VarDecl, or Function for returns
    function: str = ""
    struct: str = ""
    file: str = ""
    line: int = 0
    readonly: bool = False
    var: int = -1  # single var (locals, globals, fields)
    ext: int = -1  # params and returns
    int_: int = -1

    @property
    def paired(self) -> bool:
        return self.entity in ("param", "return")

    @property
    def internal(self) -> int:
        return self.int_ if self.paired else self.var

    @property
    def external(self) -> int:
        return self.ext if self.paired else self.var

    def vars(self) -> list[int]:
        return [self.ext, self.int_] if self.paired else [self.var]


@dataclass(eq=False)
class VarTable:
    tu: A.TranslationUnit
    vars: list = field(default_factory=list)
    units: list = field(default_factory=list)
    decl_units: dict = field(default_factory=dict)  # id(VarDecl) -> [unit ids per level]
    ret_units: dict = field(default_factory=dict)  # function name -> [unit ids]
    expr_vars: dict = field(default_factory=dict)  # id(Expr) -> [var ids per level]
    exprs: dict = field(default_factory=dict)  # id(Expr) -> Expr, keeps ids stable
    _names: set = field(default_factory=set)

    # ------------------------------------------------------------------ creation

    def _new_var(self, name, level, role, unit, scope, span: Span) -> int:
        v = QualVar(len(self.vars), name, level, role, unit, scope, self.tu.filename(span), span.line)
        self.vars.append(v)
        return v.id

    def _unique(self, name: str, line: int) -> str:
        if name in self._names:
            name = f"{name}@{line}"
            k = 2
            base = name
            while name in self._names:
                name = f"{base}#{k}"
                k += 1
        self._names.add(name)
        return name

    def _unit_name(self, base: str, level: int) -> str:
        return base if level == 0 else f"{base}#{level}"

    def add_decl(self, d: A.VarDecl, entity: str, function: str = "", struct: str = "") -> list[int]:
        levels = d.type.depth
        if levels == 0:
            self.decl_units[id(d)] = []
            return []
        qual = f"{function}.{d.name}" if function else (f"{struct}.{d.name}" if struct else d.name)
        qual = self._unique(qual, d.span.line)
        scope = function or struct
        ids = []
        for lvl in range(levels):
            name = self._unit_name(qual, lvl)
            u = Unit(len(self.units), name, lvl, entity, d, function, struct, self.tu.filename(d.span),
                     d.span.line, d.in_system_header)
            if entity == "param":
                u.ext = self._new_var(name + "@ext", lvl, ROLE_PARAM_EXT, u.id, scope, d.span)
                u.int_ = self._new_var(name + "@int", lvl, ROLE_PARAM_INT, u.id, scope, d.span)
            else:
                role = {"local": ROLE_LOCAL, "global": ROLE_GLOBAL, "field": ROLE_FIELD}[entity]
                u.var = self._new_var(name, lvl, role, u.id, scope, d.span)
            self.units.append(u)
            ids.append(u.id)
        self.decl_units[id(d)] = ids
        return ids

    def add_return(self, fn: A.Function) -> list[int]:
        fd = fn.canonical
        ids = []
        qual = self._unique(f"{fn.name}.return", fd.span.line)
        for lvl in range(fd.ret.depth):
            name = self._unit_name(qual, lvl)
            u = Unit(len(self.units), name, lvl, "return", fn, fn.name, "", self.tu.filename(fd.span),
                     fd.span.line, fn.in_system_header)
            u.ext = self._new_var(name + "@ext", lvl, ROLE_RET_EXT, u.id, fn.name, fd.span)
            u.int_ = self._new_var(name + "@int", lvl, ROLE_RET_INT, u.id, fn.name, fd.span)
            self.units.append(u)
            ids.append(u.id)
        self.ret_units[fn.name] = ids
        return ids

    def add_expr(self, e: A.Expr, role: str, levels: int, function: str, label: str) -> list[int]:
        ids = []
        for lvl in range(levels):
            name = f"{label}@{e.span.line}" + (f"#{lvl}" if lvl else "")
            ids.append(self._new_var(name, lvl, role, -1, function, e.span))
        self.expr_vars[id(e)] = ids
        self.exprs[id(e)] = e
        return ids

    # ------------------------------------------------------------------ queries

    def units_of(self, d: A.VarDecl) -> list[Unit]:
        return [self.units[i] for i in self.decl_units.get(id(d), [])]

    def returns_of(self, fname: str) -> list[Unit]:
        return [self.units[i] for i in self.ret_units.get(fname, [])]

    def names(self) -> list[str]:
        return [v.name for v in self.vars]

    def unit_of_var(self, var: int) -> Optional[Unit]:
        u = self.vars[var].unit
        return self.units[u] if u >= 0 else None


def _is_user_function(fn: A.Function) -> bool:
    return not fn.prelude


def enumerate_pointer_vars(tu: A.TranslationUnit) -> VarTable:
    """Create every qualifier variable of ``tu`` in deterministic source order."""
    vt = VarTable(tu)
    seen_globals: set[int] = set()
    for tag, sd in tu.structs.items():
        if sd.span.file < 0:
            continue
        for f in sd.fields:
            vt.add_decl(f, "field", struct=tag)
    for d in tu.global_decls:
        canon = tu.globals[d.name]
        if id(canon) in seen_globals:
            continue
        seen_globals.add(id(canon))
        vt.add_decl(canon, "global")
    for fn in tu.functions.values():
        if not _is_user_function(fn):
            continue
        canon = fn.canonical
        for p in canon.params:
            vt.add_decl(p, "param", function=fn.name)
        # other declarations share the canonical parameter units
        for fd in fn.decls:
            if fd is canon:
                continue
            for p, cp in zip(fd.params, canon.params):
                vt.decl_units[id(p)] = vt.decl_units[id(cp)]
        if fn.ret.depth:
            vt.add_return(fn)
    for fn in tu.functions.values():
        if not _is_user_function(fn) or fn.definition is None:
            continue
        _enumerate_body(vt, fn.name, fn.definition.body)
    return vt


def _enumerate_body(vt: VarTable, fname: str, body: A.Block) -> None:
    for st in A.iter_stmts(body):
        if isinstance(st, A.DeclStmt):
            for d in st.decls:
                vt.add_decl(d, "local", function=fname)
    for e in A.iter_exprs(body):
        if isinstance(e, A.Unary) and e.op == "&":
            vt.add_expr(e, ROLE_ADDR, 1, fname, "&" + _short(e.operand))
        elif isinstance(e, A.Call) and e.function is not None and not e.function.prelude and e.function.ret.depth:
            vt.add_expr(e, ROLE_CALL, e.function.ret.depth, fname, f"{e.function.name}.return")


def _short(e: A.Expr) -> str:
    if isinstance(e, A.Ident):
        return e.name
    if isinstance(e, A.Member):
        return _short(e.base) + ("->" if e.arrow else ".") + e.name
    if isinstance(e, A.Index):
        return _short(e.base) + "[]"
    return "expr"
