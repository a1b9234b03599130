"""Recursive-descent parser for mini-C (see docs/minic-grammar.md).

The parser accepts the Checked C annotation syntax that the rewriter emits,
so converted output can be fed back in.
"""

from __future__ import annotations

from typing import Optional

from ..errors import ParseError
from . import ast as A
from .lexer import Span, Token, tokenize

BASE_WORDS = frozenset({"int", "char", "unsigned", "signed", "long", "short", "void", "size_t"})
CHECKED_KWS = frozenset(A.CHECKED_KEYWORD)
GENERIC_KWS = frozenset({"_Itype_for_any", "_For_any", "itype_for_any", "for_any"})
ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=")

_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("|",),
    ("^",),
    ("&",),
    ("==", "!="),
    ("<", ">", "<=", ">="),
    ("<<", ">>"),
    ("+", "-"),
    ("*", "/", "%"),
]

_NORMALIZE = {
    "unsigned": "unsigned int",
    "signed": "int",
    "signed int": "int",
    "long int": "long",
    "short int": "short",
    "signed char": "char",
    "unsigned long int": "unsigned long",
}


def _parse_int(text: str) -> int:
    t = text.rstrip("uUlL")
    return int(t, 16) if t.lower().startswith("0x") else int(t, 10)


class Parser:
    def __init__(self, text: bytes | str, file_id: int = 0, filename: str = "<input>", readonly: bool = False):
        self.filename = filename
        self.file_id = file_id
        self.readonly = readonly
        self.toks = tokenize(text, file_id, filename)
        self.i = 0
        self.type_vars: set[str] = set()
        self.fn_name = ""

    # ------------------------------------------------------------------ token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    @property
    def prev_end(self) -> int:
        return self.toks[self.i - 1].span.end if self.i > 0 else 0

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, expected: str) -> ParseError:
        t = self.tok
        found = "end of file" if t.kind == "eof" else repr(t.text)
        return ParseError(f"expected {expected}, found {found}", self.filename, t.span.line)

    def expect_op(self, op: str) -> Token:
        if not self.tok.is_op(op):
            raise self.error(repr(op))
        return self.advance()

    def accept_op(self, op: str) -> bool:
        if self.tok.is_op(op):
            self.advance()
            return True
        return False

    def expect_id(self) -> Token:
        if self.tok.kind != "id":
            raise self.error("identifier")
        return self.advance()

    def span_from(self, start: Token | Span) -> Span:
        s = start.span if isinstance(start, Token) else start
        return Span(self.file_id, s.start, max(self.prev_end, s.start), s.line)

    def _shift_right_here(self) -> bool:
        t, n = self.tok, self.peek()
        return t.is_op(">") and n.is_op(">") and n.span.start == t.span.end

    # ------------------------------------------------------------------ types

    def starts_type(self, t: Optional[Token] = None) -> bool:
        t = t or self.tok
        if t.kind == "kw":
            return t.text in BASE_WORDS or t.text in CHECKED_KWS or t.text in ("struct", "union", "const")
        return t.kind == "id" and t.text in self.type_vars

    def parse_base(self) -> A.TypeExpr:
        """Type specifiers: a scalar/struct base or a checked pointer type."""
        words: list[str] = []
        spelled: list[str] = []
        const = False
        base: Optional[A.TypeExpr] = None
        while True:
            t = self.tok
            if t.is_kw("const"):
                const = True
                spelled.append("const")
                self.advance()
            elif t.kind == "kw" and t.text in BASE_WORDS and base is None:
                words.append(t.text)
                spelled.append(t.text)
                self.advance()
            elif t.is_kw("struct", "union") and base is None and not words:
                self.advance()
                tag = self.expect_id().text
                name = f"{t.text} {tag}"
                base = A.TypeExpr(name)
                spelled.append(name)
            elif t.kind == "kw" and t.text in CHECKED_KWS and base is None and not words:
                self.advance()
                self.expect_op("<")
                inner = self.parse_type_name()
                self.expect_close_angle()
                base = inner._with(ptrs=(A.CHECKED_KEYWORD[t.text],) + inner.ptrs)
            elif t.kind == "id" and t.text in self.type_vars and base is None and not words:
                self.advance()
                base = A.TypeExpr(t.text, generic=True)
                spelled.append(t.text)
            else:
                break
        if base is None:
            if not words:
                raise self.error("type")
            norm = " ".join(words)
            norm = _NORMALIZE.get(norm, norm)
            return A.TypeExpr(norm, const=const, spelling=" ".join(spelled))
        if base.ptrs:
            return base._with(const=base.const or const)
        return base._with(const=const, spelling=" ".join(spelled))

    def expect_close_angle(self) -> None:
        self.expect_op(">")

    def parse_stars(self, ty: A.TypeExpr) -> A.TypeExpr:
        while self.tok.is_op("*"):
            self.advance()
            ty = ty._with(ptrs=(None,) + ty.ptrs)
            while self.tok.is_kw("const"):
                self.advance()
        return ty

    def parse_type_name(self) -> A.TypeExpr:
        """Abstract type: specifiers followed by ``*`` levels (casts, sizeof, templates)."""
        return self.parse_stars(self.parse_base())

    # ------------------------------------------------------------------ annotations

    def parse_bounds_expr(self) -> A.BoundsAnn:
        t = self.expect_id()
        if t.text not in ("count", "byte_count"):
            raise ParseError(f"expected count or byte_count, found {t.text!r}", self.filename, t.span.line)
        self.expect_op("(")
        e = self.parse_expr()
        self.expect_op(")")
        return A.BoundsAnn(t.text, e, self.span_from(t))

    def at_bounds_word(self) -> bool:
        return self.tok.kind == "id" and self.tok.text in ("count", "byte_count") and self.peek().is_op("(")

    def at_itype(self) -> bool:
        return self.tok.kind == "id" and self.tok.text == "itype" and self.peek().is_op("(")

    def parse_annotation(self):
        """``: count(e)`` / ``: byte_count(e)`` / ``: itype(T) [bounds]``."""
        bounds = itype = None
        if not self.tok.is_op(":"):
            return None, None, -1
        self.advance()
        seen = False
        while True:
            if self.at_itype() and itype is None:
                start = self.advance()
                self.expect_op("(")
                ty = self.parse_type_name()
                self.expect_op(")")
                itype = A.ItypeAnn(ty, None, self.span_from(start))
            elif self.at_bounds_word() and bounds is None:
                bounds = self.parse_bounds_expr()
            else:
                break
            seen = True
        if not seen:
            raise self.error("bounds or itype annotation")
        if itype is not None and bounds is not None:
            itype = A.ItypeAnn(itype.type, bounds, itype.span)
            bounds = None
        return bounds, itype, self.prev_end

    # ------------------------------------------------------------------ top level

    def parse_file(self) -> list:
        items = []
        while self.tok.kind != "eof":
            items.extend(self.parse_external())
        return items

    def parse_external(self) -> list:
        generic: tuple = ()
        itype_generic = False
        start_tok = self.tok
        if self.tok.kind == "kw" and self.tok.text in GENERIC_KWS:
            itype_generic = "itype" in self.tok.text.lower()
            self.advance()
            self.expect_op("(")
            names = [self.expect_id().text]
            while self.accept_op(","):
                names.append(self.expect_id().text)
            self.expect_op(")")
            generic = tuple(names)
        storage = []
        while self.tok.is_kw("static", "extern"):
            storage.append(self.advance().text)
        spec_tok = self.tok
        if self.tok.is_kw("struct", "union") and self.peek().kind == "id" and self.peek(2).is_op("{"):
            return [self.parse_struct_def()]
        saved_vars = set(self.type_vars)
        self.type_vars |= set(generic)
        try:
            base = self.parse_base()
            if base.is_struct and not storage and self.accept_op(";"):
                return []  # forward declaration
            ty = self.parse_stars(base)
            name_tok = self.expect_id()
            if self.tok.is_op("("):
                return [self.parse_function(start_tok, spec_tok, storage, ty, name_tok, generic, itype_generic)]
            if generic:
                raise ParseError("generic prefix only applies to functions", self.filename, start_tok.span.line)
            return [self.parse_declarators(spec_tok, storage, base, ty, name_tok, "global", "")]
        finally:
            self.type_vars = saved_vars

    def parse_struct_def(self) -> A.StructDef:
        kw = self.advance()
        tag = self.expect_id().text
        self.expect_op("{")
        fields = []
        while not self.tok.is_op("}"):
            spec_tok = self.tok
            base = self.parse_base()
            ty = self.parse_stars(base)
            name_tok = self.expect_id()
            ds = self.parse_declarators(spec_tok, [], base, ty, name_tok, "field", tag, allow_init=False)
            fields.extend(ds.decls)
        self.expect_op("}")
        self.expect_op(";")
        for f in fields:
            f.in_system_header = self.readonly
        return A.StructDef(tag, kw.text == "union", fields, self.span_from(kw), self.readonly)

    def parse_array_suffix(self, ty: A.TypeExpr) -> tuple[A.TypeExpr, int]:
        lbr = -1
        checked = False
        if self.tok.is_kw("_Checked") and self.peek().is_op("["):
            self.advance()
            checked = True
        if self.tok.is_op("["):
            lbr = self.tok.span.start
            self.advance()
            if self.tok.kind != "int":
                raise self.error("array length")
            n = _parse_int(self.advance().text)
            self.expect_op("]")
            if n <= 0:
                raise ParseError("array length must be positive", self.filename, self.tok.span.line)
            ty = ty._with(array_len=n, array_checked=checked)
        elif checked:
            raise self.error("'['")
        return ty, lbr

    def parse_declarators(self, spec_tok, storage, base, ty, name_tok, kind, owner, allow_init=True) -> A.DeclStmt:
        decls = []
        commas = []
        region_start = spec_tok.span.start
        comma = -1
        while True:
            ty, lbr = self.parse_array_suffix(ty)
            decl_span = Span(self.file_id, region_start, self.prev_end, name_tok.span.line)
            bounds, itype, annot_end = self.parse_annotation()
            init = None
            if allow_init and self.accept_op("="):
                init = self.parse_assign()
            decls.append(
                A.VarDecl(
                    name_tok.text, kind, ty, name_tok.span, decl_span, bounds=bounds, itype=itype, init=init,
                    is_extern="extern" in storage, is_static="static" in storage,
                    in_system_header=self.readonly, owner=owner, annot_end=annot_end, array_lbracket=lbr,
                    comma_before=comma,
                )
            )
            if not self.tok.is_op(","):
                break
            comma = self.advance().span.start
            commas.append(comma)
            # later declarators: the replaceable region starts at the first '*' (or the name)
            region_start = self.tok.span.start
            ty = self.parse_stars(base)
            name_tok = self.expect_id()
        self.expect_op(";")
        return A.DeclStmt(self.span_from(spec_tok), decls, " ".join(storage), spec_tok.span.start, commas)

    def parse_params(self) -> tuple[list, bool]:
        self.expect_op("(")
        params: list = []
        variadic = False
        if self.tok.is_kw("void") and self.peek().is_op(")"):
            self.advance()
        elif not self.tok.is_op(")"):
            while True:
                if self.tok.is_op("..."):
                    self.advance()
                    variadic = True
                    break
                spec_tok = self.tok
                ty = self.parse_type_name()
                name_tok = self.tok if self.tok.kind == "id" else None
                if name_tok is not None:
                    self.advance()
                if self.tok.is_op("["):
                    self.advance()
                    if self.tok.kind == "int":
                        self.advance()
                    self.expect_op("]")
                    ty = ty._with(ptrs=(None,) + ty.ptrs)
                end = self.prev_end
                bounds, itype, annot_end = self.parse_annotation()
                name = name_tok.text if name_tok is not None else ""
                nspan = name_tok.span if name_tok is not None else Span(self.file_id, end, end, spec_tok.span.line)
                params.append(
                    A.VarDecl(
                        name, "param", ty, nspan, Span(self.file_id, spec_tok.span.start, end, spec_tok.span.line),
                        bounds=bounds, itype=itype, in_system_header=self.readonly,
                        owner=self.fn_name, position=len(params), annot_end=annot_end,
                    )
                )
                if not self.accept_op(","):
                    break
        self.expect_op(")")
        return params, variadic

    def parse_function(self, start_tok, spec_tok, storage, ret, name_tok, generic, itype_generic) -> A.FuncDecl:
        self.fn_name = name_tok.text
        params, variadic = self.parse_params()
        params_end = self.prev_end
        ret_bounds, ret_itype, ret_annot_end = self.parse_annotation()
        fd = A.FuncDecl(
            name_tok.text, ret, params, variadic, None, name_tok.span,
            Span(self.file_id, spec_tok.span.start, name_tok.span.start, spec_tok.span.line), params_end,
            ret_bounds=ret_bounds, ret_itype=ret_itype, ret_annot_end=ret_annot_end,
            generic_params=generic, itype_generic=itype_generic,
            is_extern="extern" in storage, is_static="static" in storage, in_system_header=self.readonly,
        )
        if self.accept_op(";"):
            self.fn_name = ""
            return fd
        checked = None
        if self.tok.is_kw("_Checked", "_Unchecked"):
            checked = self.advance().text
        if not self.tok.is_op("{"):
            raise self.error("';' or function body")
        fd.body = self.parse_block(checked)
        fd.checked_body = checked == "_Checked"
        self.fn_name = ""
        return fd

    # ------------------------------------------------------------------ statements

    def parse_block(self, checked: Optional[str] = None) -> A.Block:
        lb = self.expect_op("{")
        stmts = []
        while not self.tok.is_op("}"):
            if self.tok.kind == "eof":
                raise self.error("'}'")
            stmts.append(self.parse_stmt())
        self.advance()
        return A.Block(self.span_from(lb), stmts, checked, lb.span.start)

    def starts_decl(self) -> bool:
        t = self.tok
        if t.is_kw("static", "extern"):
            return True
        if not self.starts_type(t):
            return False
        return True

    def parse_local_decl(self) -> A.DeclStmt:
        storage = []
        while self.tok.is_kw("static", "extern"):
            storage.append(self.advance().text)
        spec_tok = self.tok
        base = self.parse_base()
        ty = self.parse_stars(base)
        name_tok = self.expect_id()
        return self.parse_declarators(spec_tok, storage, base, ty, name_tok, "local", self.fn_name)

    def parse_stmt(self) -> A.Stmt:
        t = self.tok
        if t.is_op("{"):
            return self.parse_block()
        if t.is_kw("_Checked", "_Unchecked") and self.peek().is_op("{"):
            self.advance()
            return self.parse_block(t.text)
        if t.is_op(";"):
            self.advance()
            return A.Empty(t.span)
        if t.is_kw("if"):
            self.advance()
            self.expect_op("(")
            cond = self.parse_expr()
            self.expect_op(")")
            then = self.parse_stmt()
            other = None
            if self.tok.is_kw("else"):
                self.advance()
                other = self.parse_stmt()
            return A.If(self.span_from(t), cond, then, other)
        if t.is_kw("while"):
            self.advance()
            self.expect_op("(")
            cond = self.parse_expr()
            self.expect_op(")")
            body = self.parse_stmt()
            return A.While(self.span_from(t), cond, body)
        if t.is_kw("do"):
            self.advance()
            body = self.parse_stmt()
            if not self.tok.is_kw("while"):
                raise self.error("'while'")
            self.advance()
            self.expect_op("(")
            cond = self.parse_expr()
            self.expect_op(")")
            self.expect_op(";")
            return A.DoWhile(self.span_from(t), body, cond)
        if t.is_kw("for"):
            self.advance()
            self.expect_op("(")
            init = None
            if self.starts_decl():
                init = self.parse_local_decl()
            else:
                if not self.tok.is_op(";"):
                    init = self.parse_expr()
                self.expect_op(";")
            cond = None if self.tok.is_op(";") else self.parse_expr()
            self.expect_op(";")
            step = None if self.tok.is_op(")") else self.parse_expr()
            self.expect_op(")")
            body = self.parse_stmt()
            return A.For(self.span_from(t), init, cond, step, body)
        if t.is_kw("return"):
            self.advance()
            value = None if self.tok.is_op(";") else self.parse_expr()
            self.expect_op(";")
            return A.Return(self.span_from(t), value)
        if t.is_kw("break"):
            self.advance()
            self.expect_op(";")
            return A.Break(self.span_from(t))
        if t.is_kw("continue"):
            self.advance()
            self.expect_op(";")
            return A.Continue(self.span_from(t))
        if self.starts_decl():
            return self.parse_local_decl()
        e = self.parse_expr()
        self.expect_op(";")
        return A.ExprStmt(self.span_from(t), e)

    # ------------------------------------------------------------------ expressions

    def parse_expr(self) -> A.Expr:
        return self.parse_assign()

    def parse_assign(self) -> A.Expr:
        start = self.tok
        left = self.parse_cond()
        if self.tok.kind == "op" and self.tok.text in ASSIGN_OPS:
            op = self.advance().text
            value = self.parse_assign()
            return A.Assign(self.span_from(start), op, left, value)
        if self._shift_right_here() and self.peek(2).is_op("=") and self.peek(2).span.start == self.peek().span.end:
            self.i += 3
            value = self.parse_assign()
            return A.Assign(self.span_from(start), ">>=", left, value)
        return left

    def parse_cond(self) -> A.Expr:
        start = self.tok
        c = self.parse_binary(0)
        if self.accept_op("?"):
            a = self.parse_expr()
            self.expect_op(":")
            b = self.parse_cond()
            return A.Cond(self.span_from(start), c, a, b)
        return c

    def _binary_op_here(self, ops) -> Optional[str]:
        t = self.tok
        if ">>" in ops and self._shift_right_here():
            nxt = self.peek(2)
            if nxt.is_op("=") and nxt.span.start == self.peek().span.end:
                return None
            return ">>"
        if t.kind == "op" and t.text in ops:
            if t.text == ">" and self._shift_right_here():
                return None
            return t.text
        return None

    def parse_binary(self, level: int) -> A.Expr:
        if level == len(_BINARY_LEVELS):
            return self.parse_unary()
        start = self.tok
        left = self.parse_binary(level + 1)
        ops = _BINARY_LEVELS[level]
        while True:
            op = self._binary_op_here(ops)
            if op is None:
                return left
            self.i += 2 if op == ">>" else 1
            right = self.parse_binary(level + 1)
            left = A.Binary(self.span_from(start), op, left, right)

    def parse_unary(self) -> A.Expr:
        t = self.tok
        if t.kind == "op" and t.text in ("&", "*", "-", "+", "!", "~", "++", "--"):
            self.advance()
            operand = self.parse_unary()
            return A.Unary(self.span_from(t), t.text, operand)
        if t.is_kw("sizeof"):
            self.advance()
            if self.tok.is_op("(") and self.starts_type(self.peek()):
                self.advance()
                ty = self.parse_type_name()
                self.expect_op(")")
                return A.SizeofType(self.span_from(t), ty)
            operand = self.parse_unary()
            return A.SizeofExpr(self.span_from(t), operand)
        if t.is_op("(") and self.starts_type(self.peek()):
            self.advance()
            ty = self.parse_type_name()
            self.expect_op(")")
            operand = self.parse_unary()
            return A.Cast(self.span_from(t), ty, operand)
        return self.parse_postfix()

    def parse_postfix(self) -> A.Expr:
        start = self.tok
        e = self.parse_primary()
        while True:
            t = self.tok
            if t.is_op("["):
                self.advance()
                idx = self.parse_expr()
                self.expect_op("]")
                e = A.Index(self.span_from(start), e, idx)
            elif t.is_op(".", "->"):
                self.advance()
                name = self.expect_id().text
                e = A.Member(self.span_from(start), e, name, t.text == "->")
            elif t.is_op("++", "--"):
                self.advance()
                e = A.Postfix(self.span_from(start), t.text, e)
            elif t.is_op("(") and isinstance(e, A.Ident):
                e = self.parse_call_args(start, e, [])
            else:
                return e

    def parse_call_args(self, start: Token, callee: A.Ident, type_args: list) -> A.Call:
        lp = self.expect_op("(")
        args = []
        if not self.tok.is_op(")"):
            args.append(self.parse_assign())
            while self.accept_op(","):
                args.append(self.parse_assign())
        self.expect_op(")")
        return A.Call(self.span_from(start), callee, args, type_args, lp.span.start)

    def parse_primary(self) -> A.Expr:
        t = self.tok
        if t.kind == "id":
            self.advance()
            ident = A.Ident(t.span, t.text)
            if self.tok.is_op("<") and self.starts_type(self.peek()):
                saved = self.i
                try:
                    self.advance()
                    targs = [self.parse_type_name()]
                    while self.accept_op(","):
                        targs.append(self.parse_type_name())
                    self.expect_close_angle()
                    if self.tok.is_op("("):
                        return self.parse_call_args(t, ident, targs)
                except ParseError:
                    pass
                self.i = saved
            return ident
        if t.kind == "int":
            self.advance()
            return A.IntLit(t.span, _parse_int(t.text), t.text)
        if t.kind == "char":
            self.advance()
            return A.CharLit(t.span, t.text)
        if t.kind == "str":
            self.advance()
            text = t.text
            while self.tok.kind == "str":  # adjacent literal concatenation
                text = text[:-1] + self.advance().text[1:]
            return A.StrLit(self.span_from(t), text)
        if t.is_kw("NULL"):
            self.advance()
            return A.NullLit(t.span)
        if t.is_kw("_Assume_bounds_cast", "_Dynamic_bounds_cast"):
            self.advance()
            self.expect_op("<")
            ty = self.parse_type_name()
            self.expect_close_angle()
            self.expect_op("(")
            operand = self.parse_assign()
            bounds = None
            if self.accept_op(","):
                bounds = self.parse_bounds_expr()
            self.expect_op(")")
            which = "assume" if t.text == "_Assume_bounds_cast" else "dynamic"
            return A.BoundsCast(self.span_from(t), which, ty, operand, bounds)
        if t.is_op("("):
            self.advance()
            e = self.parse_expr()
            self.expect_op(")")
            # keep the parenthesised extent so rewrites wrap the whole thing
            e.span = Span(self.file_id, t.span.start, self.prev_end, t.span.line)
            return e
        raise self.error("expression")


def parse_source(text: bytes | str, file_id: int = 0, filename: str = "<input>", readonly: bool = False) -> list:
    """Parse one file into top-level items (no name resolution)."""
    return Parser(text, file_id, filename, readonly).parse_file()
