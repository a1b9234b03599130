"""Pretty-printer and structural dump.

``print_file`` renders parsed items back to mini-C; ``structure`` gives a
span-free nested tuple so two parses can be compared for equality.
"""

from __future__ import annotations

import dataclasses

from . import ast as A

_PREC = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "&": 5, "==": 6, "!=": 6,
    "<": 7, ">": 7, "<=": 7, ">=": 7, "<<": 8, ">>": 8,
    "+": 9, "-": 9, "*": 10, "/": 10, "%": 10,
}


def type_text(ty: A.TypeExpr) -> str:
    return A.render_type(ty.base_text(), ty.ptrs)


def decl_text(d: A.VarDecl) -> str:
    text = A.declare(type_text(d.type), d.name)
    if d.type.array_len is not None:
        text += (" _Checked" if d.type.array_checked else "") + f"[{d.type.array_len}]"
    return text + annotation_text(d.bounds, d.itype)


def bounds_text(b: A.BoundsAnn) -> str:
    return f"{b.kind}({expr_text(b.expr)})"


def annotation_text(bounds, itype) -> str:
    if itype is not None:
        s = f" : itype({type_text(itype.type)})"
        if itype.bounds is not None:
            s += " " + bounds_text(itype.bounds)
        return s
    if bounds is not None:
        return " : " + bounds_text(bounds)
    return ""


def expr_text(e: A.Expr, parent: int = 0) -> str:
    if isinstance(e, A.Ident):
        return e.name
    if isinstance(e, A.IntLit):
        return e.text
    if isinstance(e, (A.CharLit, A.StrLit)):
        return e.text
    if isinstance(e, A.NullLit):
        return "NULL"
    if isinstance(e, A.Unary):
        return f"{e.op}({expr_text(e.operand)})" if e.op in ("-", "+", "&", "*") else f"{e.op}{expr_text(e.operand, 11)}"
    if isinstance(e, A.Postfix):
        return f"{expr_text(e.operand, 12)}{e.op}"
    if isinstance(e, A.Binary):
        p = _PREC[e.op]
        s = f"{expr_text(e.left, p)} {e.op} {expr_text(e.right, p + 1)}"
        return f"({s})" if p < parent else s
    if isinstance(e, A.Assign):
        s = f"{expr_text(e.target, 11)} {e.op} {expr_text(e.value)}"
        return f"({s})" if parent else s
    if isinstance(e, A.Index):
        return f"{expr_text(e.base, 12)}[{expr_text(e.index)}]"
    if isinstance(e, A.Member):
        return f"{expr_text(e.base, 12)}{'->' if e.arrow else '.'}{e.name}"
    if isinstance(e, A.Call):
        targs = f"<{', '.join(type_text(t) for t in e.type_args)}>" if e.type_args else ""
        return f"{e.callee.name}{targs}({', '.join(expr_text(a) for a in e.args)})"
    if isinstance(e, A.Cast):
        return f"(({type_text(e.type)}){expr_text(e.operand, 11)})"
    if isinstance(e, A.SizeofType):
        return f"sizeof({type_text(e.type)})"
    if isinstance(e, A.SizeofExpr):
        return f"sizeof({expr_text(e.operand)})"
    if isinstance(e, A.Cond):
        return f"({expr_text(e.cond, 1)} ? {expr_text(e.then)} : {expr_text(e.other)})"
    if isinstance(e, A.BoundsCast):
        kw = "_Assume_bounds_cast" if e.which == "assume" else "_Dynamic_bounds_cast"
        extra = f", {bounds_text(e.bounds)}" if e.bounds is not None else ""
        return f"{kw}<{type_text(e.type)}>({expr_text(e.operand)}{extra})"
    raise TypeError(type(e).__name__)


def _decl_stmt(ds: A.DeclStmt) -> str:
    parts = []
    for d in ds.decls:
        s = decl_text(d)
        if d.init is not None:
            s += " = " + expr_text(d.init)
        parts.append(s)
    prefix = "".join(w + " " for w in ds.storage.split()) if ds.storage else ""
    if len(parts) == 1:
        return prefix + parts[0] + ";"
    return " ".join(prefix + p + ";" for p in parts)


def stmt_lines(s: A.Stmt, indent: int) -> list[str]:
    pad = "    " * indent
    if isinstance(s, A.Block):
        head = f"{s.checked} " if s.checked else ""
        return [pad + head + "{"] + [l for st in s.stmts for l in stmt_lines(st, indent + 1)] + [pad + "}"]
    if isinstance(s, A.DeclStmt):
        return [pad + _decl_stmt(s)]
    if isinstance(s, A.ExprStmt):
        return [pad + expr_text(s.expr) + ";"]
    if isinstance(s, A.If):
        out = [pad + f"if ({expr_text(s.cond)})"] + stmt_lines(_blockify(s.then), indent)
        if s.other is not None:
            out += [pad + "else"] + stmt_lines(_blockify(s.other), indent)
        return out
    if isinstance(s, A.While):
        return [pad + f"while ({expr_text(s.cond)})"] + stmt_lines(_blockify(s.body), indent)
    if isinstance(s, A.DoWhile):
        return [pad + "do"] + stmt_lines(_blockify(s.body), indent) + [pad + f"while ({expr_text(s.cond)});"]
    if isinstance(s, A.For):
        if isinstance(s.init, A.DeclStmt):
            init = _decl_stmt(s.init)[:-1]
        else:
            init = expr_text(s.init) if s.init is not None else ""
        cond = expr_text(s.cond) if s.cond is not None else ""
        step = expr_text(s.step) if s.step is not None else ""
        return [pad + f"for ({init}; {cond}; {step})"] + stmt_lines(_blockify(s.body), indent)
    if isinstance(s, A.Return):
        return [pad + ("return;" if s.value is None else f"return {expr_text(s.value)};")]
    if isinstance(s, A.Break):
        return [pad + "break;"]
    if isinstance(s, A.Continue):
        return [pad + "continue;"]
    if isinstance(s, A.Empty):
        return [pad + ";"]
    raise TypeError(type(s).__name__)


def _blockify(s: A.Stmt) -> A.Stmt:
    # an un-braced body would be ambiguous with a trailing 'else'
    return s if isinstance(s, A.Block) else A.Block(s.span, [s])


def function_text(fd: A.FuncDecl) -> str:
    head = ""
    if fd.generic_params:
        kw = "_Itype_for_any" if fd.itype_generic else "_For_any"
        head = f"{kw}({', '.join(fd.generic_params)}) "
    if fd.is_static:
        head += "static "
    if fd.is_extern:
        head += "extern "
    params = [decl_text(p) for p in fd.params]
    if fd.variadic:
        params.append("...")
    sig = A.declare(type_text(fd.ret), fd.name) + f"({', '.join(params) if params else 'void'})"
    sig += annotation_text(fd.ret_bounds, fd.ret_itype)
    if fd.body is None:
        return head + sig + ";"
    body = stmt_lines(fd.body, 0)
    return "\n".join([head + sig] + body)


def print_items(items: list) -> str:
    out = []
    for it in items:
        if isinstance(it, A.FuncDecl):
            out.append(function_text(it))
        elif isinstance(it, A.DeclStmt):
            out.append(_decl_stmt(it))
        elif isinstance(it, A.StructDef):
            kw = "union" if it.is_union else "struct"
            fields = "".join(f"    {decl_text(f)};\n" for f in it.fields)
            out.append(f"{kw} {it.tag} {{\n{fields}}};")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------- structure

_SKIP = {"span", "decl_span", "ret_span", "params_end", "annot_end", "ret_annot_end", "lparen", "lbrace",
         "spec_start", "commas", "array_lbracket", "comma_before", "in_system_header", "spelling", "owner", "position"}


def structure(node):
    """Span-free structural view used for round-trip comparison.

    Multi-declarator statements are flattened and un-braced bodies are
    wrapped, since the printer does both; literal text is kept verbatim.
    """
    if isinstance(node, list):
        out = []
        for n in node:
            if isinstance(n, A.DeclStmt) and len(n.decls) > 1:
                out.extend(structure(A.DeclStmt(n.span, [d], n.storage)) for d in n.decls)
            else:
                out.append(structure(n))
        return tuple(out)
    if isinstance(node, A.TypeExpr):
        return ("type", node.base, node.ptrs, node.const, node.array_len, node.array_checked)
    if dataclasses.is_dataclass(node):
        fields = []
        for f in dataclasses.fields(node):
            if f.name in _SKIP:
                continue
            value = getattr(node, f.name)
            if f.name in ("then", "other", "body") and isinstance(value, A.Stmt) and not isinstance(value, A.Block):
                value = _blockify(value)
            fields.append((f.name, structure(value)))
        return (type(node).__name__, tuple(fields))
    if isinstance(node, tuple):
        return tuple(structure(n) for n in node)
    return node
