"""AST for mini-C.

Expression nodes get two attributes filled in by the resolver: ``ty`` (the
static type, a :class:`TypeExpr`) and, for identifiers, ``decl``.  After
:func:`mini3c.frontend.parse` returns, the tree is treated as read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .lexer import Span

CHECKED_SPELLING = {"ptr": "_Ptr", "arr": "_Array_ptr", "ntarr": "_Nt_array_ptr"}
CHECKED_KEYWORD = {v: k for k, v in CHECKED_SPELLING.items()}


@dataclass(frozen=True)
class TypeExpr:
    """A declared type.

    ``ptrs`` lists pointer levels outermost first; an entry is ``None`` for a
    plain ``*`` or one of ``'ptr'``, ``'arr'``, ``'ntarr'`` for a checked
    pointer written in the source.  A fixed-size array declarator adds one
    more (outermost) qualifier level recorded by ``array_len``.
    """

    base: str
    ptrs: tuple = ()
    const: bool = False
    array_len: Optional[int] = None
    array_checked: bool = False
    generic: bool = False
    spelling: str = field(default="", compare=False)

    @property
    def depth(self) -> int:
        """Number of convertible pointer levels (fixed arrays count as one)."""
        return len(self.ptrs) + (1 if self.array_len is not None else 0)

    @property
    def indirection_depth(self) -> int:
        return len(self.ptrs)

    @property
    def is_pointer(self) -> bool:
        return self.depth > 0

    @property
    def is_void_ptr(self) -> bool:
        return self.base == "void" and len(self.ptrs) >= 1 and self.array_len is None

    @property
    def is_struct(self) -> bool:
        return self.base.startswith(("struct ", "union "))

    def base_text(self) -> str:
        if self.spelling:
            return self.spelling
        return f"const {self.base}" if self.const else self.base

    def _with(self, **kw) -> "TypeExpr":
        args = dict(base=self.base, ptrs=self.ptrs, const=self.const, array_len=self.array_len,
                    array_checked=self.array_checked, generic=self.generic, spelling=self.spelling)
        args.update(kw)
        return TypeExpr(**args)

    def deref(self) -> "TypeExpr":
        if self.array_len is not None:
            return self._with(array_len=None, array_checked=False)
        if not self.ptrs:
            raise ValueError("dereference of non-pointer type")
        return self._with(ptrs=self.ptrs[1:])

    def addr(self) -> "TypeExpr":
        return self._with(ptrs=(None,) + self.decayed().ptrs, array_len=None, array_checked=False)

    def decayed(self) -> "TypeExpr":
        """Array-to-pointer decay; the array level becomes a plain pointer level."""
        if self.array_len is None:
            return self
        lvl = "arr" if self.array_checked else None
        return self._with(ptrs=(lvl,) + self.ptrs, array_len=None, array_checked=False)

    def level_kinds(self) -> tuple:
        """Declared checked kind for every qualifier level, outermost first."""
        if self.array_len is not None:
            return ("arr" if self.array_checked else None,) + self.ptrs
        return self.ptrs

    def without_checked(self) -> "TypeExpr":
        return self._with(ptrs=(None,) * len(self.ptrs), array_checked=False)

    def __str__(self) -> str:
        return render_type(self.base_text(), self.ptrs) + (f"[{self.array_len}]" if self.array_len is not None else "")


def render_type(base: str, kinds) -> str:
    """Render a pointer type, outermost level first in ``kinds``."""
    text = base
    for kind in reversed(tuple(kinds)):
        if kind is None:
            text = text + "*" if text.endswith("*") else text + " *"
        else:
            text = f"{CHECKED_SPELLING[kind]}<{text}>"
    return text


def declare(type_text: str, name: str) -> str:
    if not name:
        return type_text
    return type_text + name if type_text.endswith("*") else f"{type_text} {name}"


INT = TypeExpr("int")
SIZE_T = TypeExpr("size_t")
CHAR_PTR = TypeExpr("char", (None,))
NULL_T = TypeExpr("null")  # type of NULL / literal 0 in pointer context
VOID = TypeExpr("void")


# --------------------------------------------------------------------------- annotations


@dataclass(eq=False)
class BoundsAnn:
    kind: str  # 'count' | 'byte_count'
    expr: "Expr"
    span: Span


@dataclass(eq=False)
class ItypeAnn:
    type: TypeExpr
    bounds: Optional[BoundsAnn]
    span: Span


# --------------------------------------------------------------------------- expressions


@dataclass(eq=False)
class Expr:
    span: Span

    def __post_init__(self):
        self.ty: TypeExpr = INT


@dataclass(eq=False)
class Ident(Expr):
    name: str

    def __post_init__(self):
        super().__post_init__()
        self.decl: Optional[VarDecl] = None


@dataclass(eq=False)
class IntLit(Expr):
    value: int
    text: str


@dataclass(eq=False)
class CharLit(Expr):
    text: str


@dataclass(eq=False)
class StrLit(Expr):
    text: str


@dataclass(eq=False)
class NullLit(Expr):
    pass


@dataclass(eq=False)
class Unary(Expr):
    op: str  # '&', '*', '-', '+', '!', '~', '++', '--' (prefix)
    operand: Expr


@dataclass(eq=False)
class Postfix(Expr):
    op: str  # '++', '--'
    operand: Expr


@dataclass(eq=False)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(eq=False)
class Assign(Expr):
    op: str  # '=', '+=', ...
    target: Expr
    value: Expr


@dataclass(eq=False)
class Index(Expr):
    base: Expr
    index: Expr


@dataclass(eq=False)
class Member(Expr):
    base: Expr
    name: str
    arrow: bool

    def __post_init__(self):
        super().__post_init__()
        self.field_decl: Optional[VarDecl] = None
        self.struct_name: str = ""


@dataclass(eq=False)
class Call(Expr):
    callee: Ident
    args: list
    type_args: list  # explicit instantiation `f<int>(...)`
    lparen: int  # byte offset of '('

    def __post_init__(self):
        super().__post_init__()
        self.function: Optional[Function] = None  # None => unresolved extern


@dataclass(eq=False)
class Cast(Expr):
    type: TypeExpr
    operand: Expr


@dataclass(eq=False)
class SizeofType(Expr):
    type: TypeExpr


@dataclass(eq=False)
class SizeofExpr(Expr):
    operand: Expr


@dataclass(eq=False)
class Cond(Expr):
    cond: Expr
    then: Expr
    other: Expr


@dataclass(eq=False)
class BoundsCast(Expr):
    which: str  # 'assume' | 'dynamic'
    type: TypeExpr
    operand: Expr
    bounds: Optional[BoundsAnn]


# --------------------------------------------------------------------------- declarations


@dataclass(eq=False)
class VarDecl:
    """A variable, parameter or struct field."""

    name: str
    kind: str  # 'param' | 'local' | 'global' | 'field'
    type: TypeExpr
    span: Span  # the declared name
    decl_span: Span  # type specifier start .. end of declarator (what a rewrite replaces)
    bounds: Optional[BoundsAnn] = None
    itype: Optional[ItypeAnn] = None
    init: Optional[Expr] = None
    is_extern: bool = False
    is_static: bool = False
    in_system_header: bool = False
    owner: str = ""  # function name for params/locals, struct tag for fields
    position: int = -1  # parameter index
    annot_end: int = -1  # end of the bounds/itype annotation, -1 if none
    array_lbracket: int = -1  # offset of '[' for fixed arrays
    comma_before: int = -1  # offset of the ',' separating this declarator from the previous one

    @property
    def qualified_name(self) -> str:
        return f"{self.owner}.{self.name}" if self.owner else self.name


@dataclass(eq=False)
class StructDef:
    tag: str
    is_union: bool
    fields: list
    span: Span
    in_system_header: bool = False

    def field(self, name: str) -> Optional[VarDecl]:
        for f in self.fields:
            if f.name == name:
                return f
        return None


@dataclass(eq=False)
class FuncDecl:
    """One syntactic declaration or definition of a function."""

    name: str
    ret: TypeExpr
    params: list
    variadic: bool
    body: Optional["Block"]
    span: Span  # the function name
    ret_span: Span  # start of specifiers .. just before the name
    params_end: int  # offset just past ')'
    ret_bounds: Optional[BoundsAnn] = None
    ret_itype: Optional[ItypeAnn] = None
    ret_annot_end: int = -1
    generic_params: tuple = ()
    itype_generic: bool = False
    is_extern: bool = False
    is_static: bool = False
    checked_body: bool = False
    in_system_header: bool = False


@dataclass(eq=False)
class Function:
    """The entity a function name resolves to; merges all its declarations."""

    name: str
    decls: list = field(default_factory=list)
    definition: Optional[FuncDecl] = None
    prelude: bool = False

    @property
    def canonical(self) -> FuncDecl:
        return self.definition if self.definition is not None else self.decls[0]

    @property
    def params(self) -> list:
        return self.canonical.params

    @property
    def ret(self) -> TypeExpr:
        return self.canonical.ret

    @property
    def variadic(self) -> bool:
        return self.canonical.variadic

    @property
    def generic(self) -> bool:
        return any(d.generic_params for d in self.decls)

    @property
    def in_system_header(self) -> bool:
        return all(d.in_system_header for d in self.decls)

    def param_itype(self, i: int) -> Optional[ItypeAnn]:
        for d in self.decls:
            if i < len(d.params) and d.params[i].itype is not None:
                return d.params[i].itype
        return None

    def param_declared_kinds(self, i: int) -> Optional[tuple]:
        """Checked kinds of parameter ``i`` as declared anywhere, if any."""
        it = self.param_itype(i)
        if it is not None:
            return it.type.level_kinds()
        for d in self.decls:
            if i < len(d.params) and any(k is not None for k in d.params[i].type.level_kinds()):
                return d.params[i].type.level_kinds()
        return None

    def param_declared_bounds(self, i: int) -> Optional[BoundsAnn]:
        for d in self.decls:
            if i < len(d.params):
                p = d.params[i]
                if p.bounds is not None:
                    return p.bounds
                if p.itype is not None and p.itype.bounds is not None:
                    return p.itype.bounds
        return None

    def ret_declared_kinds(self) -> Optional[tuple]:
        for d in self.decls:
            if d.ret_itype is not None:
                return d.ret_itype.type.level_kinds()
        for d in self.decls:
            if any(k is not None for k in d.ret.level_kinds()):
                return d.ret.level_kinds()
        return None


# --------------------------------------------------------------------------- statements


@dataclass(eq=False)
class Stmt:
    span: Span


@dataclass(eq=False)
class Block(Stmt):
    stmts: list
    checked: Optional[str] = None  # '_Checked' | '_Unchecked' | None
    lbrace: int = 0


@dataclass(eq=False)
class DeclStmt(Stmt):
    decls: list  # VarDecl
    storage: str = ""
    spec_start: int = 0
    commas: list = field(default_factory=list)  # offsets of ',' between declarators


@dataclass(eq=False)
class ExprStmt(Stmt):
    expr: Expr


@dataclass(eq=False)
class If(Stmt):
    cond: Expr
    then: Stmt
    other: Optional[Stmt]


@dataclass(eq=False)
class While(Stmt):
    cond: Expr
    body: Stmt


@dataclass(eq=False)
class DoWhile(Stmt):
    body: Stmt
    cond: Expr


@dataclass(eq=False)
class For(Stmt):
    init: Optional[Union[DeclStmt, Expr]]
    cond: Optional[Expr]
    step: Optional[Expr]
    body: Stmt


@dataclass(eq=False)
class Return(Stmt):
    value: Optional[Expr]


@dataclass(eq=False)
class Break(Stmt):
    pass


@dataclass(eq=False)
class Continue(Stmt):
    pass


@dataclass(eq=False)
class Empty(Stmt):
    pass


# --------------------------------------------------------------------------- translation unit


@dataclass(eq=False)
class SourceFile:
    name: str
    text: bytes
    readonly: bool
    items: list = field(default_factory=list)  # FuncDecl | DeclStmt | StructDef


@dataclass(eq=False)
class TranslationUnit:
    files: list  # SourceFile, index == file id; the prelude is not listed
    functions: dict  # name -> Function
    globals: dict  # name -> VarDecl (canonical)
    global_decls: list  # every global VarDecl in source order
    structs: dict  # tag -> StructDef
    prelude: list = field(default_factory=list)  # FuncDecl

    def file_of(self, span: Span) -> Optional[SourceFile]:
        return self.files[span.file] if 0 <= span.file < len(self.files) else None

    def filename(self, span: Span) -> str:
        f = self.file_of(span)
        return f.name if f is not None else "<prelude>"

    def items(self):
        for f in self.files:
            yield from f.items

    def defined_functions(self) -> list:
        return [fn.definition for fn in self.functions.values() if fn.definition is not None and not fn.prelude]


# --------------------------------------------------------------------------- traversal helpers


def iter_exprs(node):
    """Yield every expression reachable from a statement or expression, pre-order."""
    stack = [node]
    while stack:
        n = stack.pop()
        if n is None:
            continue
        if isinstance(n, Expr):
            yield n
        stack.extend(reversed(list(_children(n))))


def _children(n):
    if isinstance(n, Block):
        yield from n.stmts
    elif isinstance(n, DeclStmt):
        for d in n.decls:
            if d.bounds is not None:
                yield d.bounds.expr
            if d.init is not None:
                yield d.init
    elif isinstance(n, ExprStmt):
        yield n.expr
    elif isinstance(n, If):
        yield from (n.cond, n.then, n.other)
    elif isinstance(n, While):
        yield from (n.cond, n.body)
    elif isinstance(n, DoWhile):
        yield from (n.body, n.cond)
    elif isinstance(n, For):
        yield from (n.init, n.cond, n.step, n.body)
    elif isinstance(n, Return):
        yield n.value
    elif isinstance(n, (Unary, Postfix)):
        yield n.operand
    elif isinstance(n, Binary):
        yield from (n.left, n.right)
    elif isinstance(n, Assign):
        yield from (n.target, n.value)
    elif isinstance(n, Index):
        yield from (n.base, n.index)
    elif isinstance(n, Member):
        yield n.base
    elif isinstance(n, Call):
        yield n.callee
        yield from n.args
    elif isinstance(n, (Cast, SizeofExpr)):
        yield n.operand
    elif isinstance(n, Cond):
        yield from (n.cond, n.then, n.other)
    elif isinstance(n, BoundsCast):
        yield n.operand
        if n.bounds is not None:
            yield n.bounds.expr


def iter_stmts(node):
    """Yield every statement nested in ``node`` (including itself), pre-order."""
    stack = [node]
    while stack:
        n = stack.pop()
        if n is None or not isinstance(n, Stmt):
            continue
        yield n
        if isinstance(n, Block):
            stack.extend(reversed(n.stmts))
        elif isinstance(n, If):
            stack.extend([n.other, n.then])
        elif isinstance(n, (While, DoWhile)):
            stack.append(n.body)
        elif isinstance(n, For):
            stack.append(n.body)
            if isinstance(n.init, DeclStmt):
                stack.append(n.init)
