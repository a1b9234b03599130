"""Name resolution and expression typing."""

from __future__ import annotations

from typing import Optional

from ..errors import ResolveError
from . import ast as A
from .prelude import PRELUDE_FILE_ID, PRELUDE_NAME


class Resolver:
    def __init__(self, tu: A.TranslationUnit):
        self.tu = tu
        self.scopes: list[dict] = []
        self.current: Optional[A.FuncDecl] = None

    def fail(self, msg: str, span) -> ResolveError:
        return ResolveError(msg, self.tu.filename(span), span.line)

    # ------------------------------------------------------------------ collection

    def collect(self, fd_items: list[tuple[A.SourceFile | None, list]]) -> None:
        tu = self.tu
        for src, items in fd_items:
            for item in items:
                if isinstance(item, A.StructDef):
                    key = item.tag
                    if key in tu.structs:
                        raise self.fail(f"duplicate definition of struct {key}", item.span)
                    tu.structs[key] = item
                elif isinstance(item, A.FuncDecl):
                    fn = tu.functions.get(item.name)
                    if fn is None:
                        fn = tu.functions[item.name] = A.Function(item.name, prelude=src is None)
                    elif src is not None and fn.prelude:
                        fn.prelude = True  # user redeclaration of a library function
                    if item.name in tu.globals:
                        raise self.fail(f"{item.name} redeclared as a function", item.span)
                    if item.body is not None:
                        if fn.definition is not None:
                            raise self.fail(f"duplicate definition of function {item.name}", item.span)
                        fn.definition = item
                    if fn.decls and len(fn.decls[0].params) != len(item.params):
                        raise self.fail(f"conflicting declarations of {item.name}", item.span)
                    fn.decls.append(item)
                elif isinstance(item, A.DeclStmt):
                    for d in item.decls:
                        if d.name in tu.functions:
                            raise self.fail(f"{d.name} redeclared as a variable", d.span)
                        tu.global_decls.append(d)
                        prev = tu.globals.get(d.name)
                        if prev is None:
                            tu.globals[d.name] = d
                        elif not d.is_extern:
                            if not prev.is_extern:
                                raise self.fail(f"duplicate definition of {d.name}", d.span)
                            tu.globals[d.name] = d
        # extern redeclarations of a global share its canonical decl
        self.global_alias = {id(d): tu.globals[d.name] for d in tu.global_decls}

    # ------------------------------------------------------------------ scopes

    def push(self) -> None:
        self.scopes.append({})

    def pop(self) -> None:
        self.scopes.pop()

    def declare(self, d: A.VarDecl) -> None:
        scope = self.scopes[-1]
        if d.name in scope:
            raise self.fail(f"duplicate definition of {d.name}", d.span)
        scope[d.name] = d

    def lookup(self, name: str, span) -> A.VarDecl:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        g = self.tu.globals.get(name)
        if g is not None:
            return g
        raise self.fail(f"unresolved identifier {name!r}", span)

    # ------------------------------------------------------------------ driver

    def run(self) -> None:
        tu = self.tu
        for s in tu.structs.values():
            self.push()
            for f in s.fields:
                self.check_type(f.type, f.span)
                self.declare(f)
            for f in s.fields:
                if f.bounds is not None:
                    self.expr(f.bounds.expr)
                if f.itype is not None and f.itype.bounds is not None:
                    self.expr(f.itype.bounds.expr)
            self.pop()
        for d in tu.global_decls:
            self.check_type(d.type, d.span)
            self.push()
            self.annotations(d)
            self.pop()
            if d.init is not None:
                self.expr(d.init)
        for fn in tu.functions.values():
            for fd in fn.decls:
                self.function(fd)

    def check_type(self, ty: A.TypeExpr, span) -> None:
        if ty.is_struct:
            tag = ty.base.split(" ", 1)[1]
            if tag not in self.tu.structs and not ty.ptrs:
                raise self.fail(f"incomplete type {ty.base}", span)

    def annotations(self, d: A.VarDecl) -> None:
        if d.bounds is not None:
            self.expr(d.bounds.expr)
        if d.itype is not None and d.itype.bounds is not None:
            self.expr(d.itype.bounds.expr)

    def function(self, fd: A.FuncDecl) -> None:
        self.current = fd
        self.push()
        for p in fd.params:
            if p.name:
                self.declare(p)
        for p in fd.params:
            self.annotations(p)
        if fd.ret_bounds is not None:
            self.expr(fd.ret_bounds.expr)
        if fd.ret_itype is not None and fd.ret_itype.bounds is not None:
            self.expr(fd.ret_itype.bounds.expr)
        if fd.body is not None:
            self.block(fd.body, new_scope=False)
        self.pop()
        self.current = None

    # ------------------------------------------------------------------ statements

    def block(self, b: A.Block, new_scope: bool = True) -> None:
        if new_scope:
            self.push()
        for s in b.stmts:
            self.stmt(s)
        if new_scope:
            self.pop()

    def decl_stmt(self, ds: A.DeclStmt) -> None:
        for d in ds.decls:
            self.check_type(d.type, d.span)
            if d.init is not None:
                self.expr(d.init)
            self.declare(d)
            self.annotations(d)

    def stmt(self, s: A.Stmt) -> None:
        if isinstance(s, A.Block):
            self.block(s)
        elif isinstance(s, A.DeclStmt):
            self.decl_stmt(s)
        elif isinstance(s, A.ExprStmt):
            self.expr(s.expr)
        elif isinstance(s, A.If):
            self.expr(s.cond)
            self.stmt(s.then)
            if s.other is not None:
                self.stmt(s.other)
        elif isinstance(s, A.While):
            self.expr(s.cond)
            self.stmt(s.body)
        elif isinstance(s, A.DoWhile):
            self.stmt(s.body)
            self.expr(s.cond)
        elif isinstance(s, A.For):
            self.push()
            if isinstance(s.init, A.DeclStmt):
                self.decl_stmt(s.init)
            elif s.init is not None:
                self.expr(s.init)
            if s.cond is not None:
                self.expr(s.cond)
            if s.step is not None:
                self.expr(s.step)
            self.stmt(s.body)
            self.pop()
        elif isinstance(s, A.Return):
            if s.value is not None:
                self.expr(s.value)

    # ------------------------------------------------------------------ expressions

    def expr(self, e: A.Expr) -> A.TypeExpr:
        ty = self._expr(e)
        e.ty = ty
        return ty

    def _expr(self, e: A.Expr) -> A.TypeExpr:
        if isinstance(e, A.Ident):
            d = self.lookup(e.name, e.span)
            d = self.global_alias.get(id(d), d)
            e.decl = d
            return d.type
        if isinstance(e, A.IntLit):
            return A.INT
        if isinstance(e, A.CharLit):
            return A.TypeExpr("char")
        if isinstance(e, A.StrLit):
            return A.CHAR_PTR
        if isinstance(e, A.NullLit):
            return A.NULL_T
        if isinstance(e, A.Unary):
            t = self.expr(e.operand)
            if e.op == "&":
                return t.addr()
            if e.op == "*":
                if not t.is_pointer:
                    raise self.fail("dereference of a non-pointer", e.span)
                return t.decayed().deref()
            if e.op in ("!",):
                return A.INT
            return t
        if isinstance(e, A.Postfix):
            return self.expr(e.operand)
        if isinstance(e, A.Binary):
            lt = self.expr(e.left)
            rt = self.expr(e.right)
            if e.op in ("+", "-"):
                if lt.is_pointer and rt.is_pointer:
                    return A.TypeExpr("long")
                if lt.is_pointer:
                    return lt.decayed()
                if rt.is_pointer and e.op == "+":
                    return rt.decayed()
            if e.op in ("==", "!=", "<", ">", "<=", ">=", "&&", "||"):
                return A.INT
            return lt if not lt.is_pointer else A.INT
        if isinstance(e, A.Assign):
            t = self.expr(e.target)
            self.expr(e.value)
            return t
        if isinstance(e, A.Index):
            bt = self.expr(e.base)
            self.expr(e.index)
            if not bt.is_pointer:
                raise self.fail("subscript of a non-pointer", e.span)
            return bt.decayed().deref()
        if isinstance(e, A.Member):
            bt = self.expr(e.base)
            st = bt.decayed().deref() if e.arrow else bt
            if e.arrow and not bt.is_pointer:
                raise self.fail("'->' on a non-pointer", e.span)
            if not st.is_struct or st.ptrs:
                raise self.fail(f"member access .{e.name} on non-struct type", e.span)
            tag = st.base.split(" ", 1)[1]
            sd = self.tu.structs.get(tag)
            if sd is None:
                raise self.fail(f"incomplete type {st.base}", e.span)
            f = sd.field(e.name)
            if f is None:
                raise self.fail(f"struct {tag} has no field {e.name!r}", e.span)
            e.field_decl = f
            e.struct_name = tag
            return f.type
        if isinstance(e, A.Call):
            for a in e.args:
                self.expr(a)
            fn = self.tu.functions.get(e.callee.name)
            if fn is None:
                if any(e.callee.name in s for s in self.scopes) or e.callee.name in self.tu.globals:
                    raise self.fail(f"{e.callee.name} is not a function", e.span)
                e.function = None
                return A.INT
            e.function = fn
            nparams = len(fn.params)
            if len(e.args) < nparams or (len(e.args) > nparams and not fn.variadic):
                raise self.fail(f"wrong number of arguments to {fn.name}", e.span)
            return fn.ret
        if isinstance(e, A.Cast):
            self.expr(e.operand)
            return e.type
        if isinstance(e, A.SizeofType):
            return A.SIZE_T
        if isinstance(e, A.SizeofExpr):
            self.expr(e.operand)
            return A.SIZE_T
        if isinstance(e, A.Cond):
            self.expr(e.cond)
            a = self.expr(e.then)
            b = self.expr(e.other)
            return b if a == A.NULL_T else a
        if isinstance(e, A.BoundsCast):
            self.expr(e.operand)
            if e.bounds is not None:
                self.expr(e.bounds.expr)
            return e.type
        raise self.fail(f"unsupported expression {type(e).__name__}", e.span)


def resolve(files: list[A.SourceFile], prelude_items: list) -> A.TranslationUnit:
    tu = A.TranslationUnit(files=files, functions={}, globals={}, global_decls=[], structs={}, prelude=prelude_items)
    r = Resolver(tu)
    r.collect([(None, prelude_items)] + [(f, f.items) for f in files])
    r.run()
    return tu


__all__ = ["resolve", "PRELUDE_FILE_ID", "PRELUDE_NAME"]
