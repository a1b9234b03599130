"""Turn analysis results into text edits over the original sources."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

from ..errors import InvariantViolation, StaleSpan
from ..frontend import ast as A
from .bounds import KIND_TO_ANN, BoundsResult
from .constraints import Facts, expr_text
from .kinds import CHECKED, ITYPE, UNCHANGED, CastDemand, KindResult
from .ptyp import PtypResult

TYPE_REWRITE = "type-rewrite"
ITYPE_EDIT = "itype"
BOUNDS = "bounds"
CAST = "cast"
CHECKED_REGION = "checked-region"
GENERIC_ALLOC = "generic-alloc"

# ordering of insertions sharing one offset
_CLOSE, _INSERT, _OPEN, _REPLACE = 0, 1, 2, 3


@dataclass(frozen=True)
class Edit:
    file: int
    start: int
    end: int
    text: str
    category: str
    slot: int = _INSERT
    rank: int = 0  # tie-break inside a slot

    @property
    def is_insert(self) -> bool:
        return self.start == self.end


@dataclass
class RewritePlan:
    edits: list = field(default_factory=list)
    digests: dict = field(default_factory=dict)  # file id -> sha256 of the analysed text
    names: dict = field(default_factory=dict)  # file id -> file name
    readonly: set = field(default_factory=set)
    casts: list = field(default_factory=list)  # (line, text) of inserted casts
    warnings: list = field(default_factory=list)

    def for_file(self, fid: int) -> list:
        return [e for e in self.edits if e.file == fid]

    def count(self, category: str) -> int:
        return sum(1 for e in self.edits if e.category == category)


def digest(text: bytes) -> str:
    return hashlib.sha256(text).hexdigest()


class Planner:
    def __init__(self, facts: Facts, kinds: KindResult, ptyp: PtypResult, bounds: Optional[BoundsResult],
                 demands: list[CastDemand]):
        self.f = facts
        self.tu = facts.tu
        self.vt = facts.vt
        self.kinds = kinds
        self.ptyp = ptyp
        self.bounds = bounds
        self.demands = demands
        self._call_sites = {cs.id: cs for cs in facts.calls}
        self.plan = RewritePlan()
        self.unconvertible: set = set()  # functions whose body must stay unchecked
        for fid, sf in enumerate(self.tu.files):
            self.plan.digests[fid] = digest(sf.text)
            self.plan.names[fid] = sf.name
            if sf.readonly:
                self.plan.readonly.add(fid)

    # ------------------------------------------------------------------ helpers

    def add(self, fid: int, start: int, end: int, text: str, category: str, slot: int = _INSERT, rank: int = 0):
        if fid < 0:
            return
        if fid in self.plan.readonly:
            self.plan.warnings.append(f"{self.plan.names[fid]}: skipped edit in read-only file")
            return
        self.plan.edits.append(Edit(fid, start, end, text, category, _REPLACE if start != end else slot, rank))

    def unit_kinds(self, units) -> list:
        """Checked kind per level for a declaration, None where it stays unchecked."""
        out = []
        for u in units:
            conv = self.kinds.conversion[u.id]
            out.append(self.ptyp.unit_ptyp.get(u.id) if conv == CHECKED else None)
        return out

    def external_kinds(self, units) -> list:
        out = []
        for u in units:
            conv = self.kinds.conversion[u.id]
            out.append(self.ptyp.unit_ptyp.get(u.id) if conv in (CHECKED, ITYPE) else None)
        return out

    def bound_of(self, key) -> Optional[tuple]:
        if self.bounds is None:
            return None
        e = self.bounds.beta.get(key)
        return (e.bound.kind, e.bound.node) if e is not None else None

    def bound_text(self, kind: str, node: tuple, params: Optional[list] = None, call: Optional[A.Call] = None) -> Optional[str]:
        t = node[0]
        if t == "const":
            text = str(node[1])
        elif t == "svar":
            text = node[2]
        elif t == "sfield":
            text = node[2]
        elif t == "sparam":
            if params is None:
                fn = self.tu.functions.get(node[1])
                params = fn.canonical.params if fn is not None else []
            if node[2] >= len(params) or not params[node[2]].name:
                return None
            text = params[node[2]].name
        elif t == "ctxs":
            if call is None:
                return None
            text = expr_text(self.tu, call.args[node[2]])
        else:
            return None
        return f"{KIND_TO_ANN[kind]}({text})"

    # ------------------------------------------------------------------ declarations

    def plan_all(self) -> RewritePlan:
        self.declarations()
        self.functions()
        self.casts()
        self.generic_calls()
        self.checked_bodies()
        self.plan.edits = ordered(self.plan.edits)
        check_overlaps(self.plan.edits)
        return self.plan

    def declarations(self) -> None:
        groups: list[tuple] = []  # (decls, inside a for-init, enclosing function)
        for it in self.tu.items():
            if isinstance(it, A.DeclStmt):
                groups.extend((g, False, "") for g in _split_groups(it.decls))
            elif isinstance(it, A.StructDef):
                groups.extend((g, False, "") for g in _split_groups(it.fields))
            elif isinstance(it, A.FuncDecl) and it.body is not None:
                for st in A.iter_stmts(it.body):
                    if isinstance(st, A.For) and isinstance(st.init, A.DeclStmt):
                        groups.extend((g, True, it.name) for g in _split_groups(st.init.decls))
                    elif isinstance(st, A.DeclStmt) and not self._is_for_init(st, it.body):
                        groups.extend((g, False, it.name) for g in _split_groups(st.decls))
        for group, in_for, fname in groups:
            texts = [self.decl_rewrite(d) for d in group]
            if all(t is None for t in texts):
                continue
            if len(group) == 1:
                d = group[0]
                self.add(d.decl_span.file, d.decl_span.start, d.decl_span.end, texts[0], TYPE_REWRITE)
                continue
            if in_for:
                # a for-init cannot hold several declaration statements
                self.unconvertible.add(fname)
                self.plan.warnings.append(f"{self.tu.filename(group[0].span)}:{group[0].span.line}: "
                                          "multi-declarator in for-init left unchanged")
                continue
            first = group[0]
            storage = " ".join(w for w, on in (("static", first.is_static), ("extern", first.is_extern)) if on)
            prefix = storage + " " if storage else ""
            if texts[0] is not None:
                self.add(first.decl_span.file, first.decl_span.start, first.decl_span.end, texts[0], TYPE_REWRITE)
            for d, t in zip(group[1:], texts[1:]):
                fid = d.decl_span.file
                self.add(fid, d.comma_before, d.comma_before + 1, ";", TYPE_REWRITE)
                if t is not None:
                    self.add(fid, d.decl_span.start, d.decl_span.end, prefix + t, TYPE_REWRITE)
                else:
                    self.add(fid, d.decl_span.start, d.decl_span.start, prefix + d.type.base_text() + " ",
                             TYPE_REWRITE)

    @staticmethod
    def _is_for_init(st: A.DeclStmt, body: A.Block) -> bool:
        return any(isinstance(s, A.For) and s.init is st for s in A.iter_stmts(body))

    def canonical_units(self, d: A.VarDecl) -> list:
        if d.kind == "global":
            d = self.tu.globals.get(d.name, d)
        return self.vt.units_of(d)

    def full_decl(self, d: A.VarDecl, kinds: Optional[list], bound: Optional[str]) -> str:
        base = d.type.base_text()
        if d.type.array_len is not None:
            inner = kinds[1:] if kinds else d.type.ptrs
            text = A.declare(A.render_type(base, inner), d.name)
            checked = (kinds and kinds[0] is not None) or d.type.array_checked
            return text + (" _Checked" if checked else "") + f"[{d.type.array_len}]"
        text = A.declare(A.render_type(base, kinds if kinds is not None else d.type.ptrs), d.name)
        if bound:
            text += f" : {bound}"
        return text

    def decl_rewrite(self, d: A.VarDecl) -> Optional[str]:
        """New text for the declarator region of a local, global or field; None if unchanged."""
        if d.span.file < 0:
            return None
        units = self.canonical_units(d)
        if not units:
            return None
        inferred = self.unit_kinds(units)
        declared = list(d.type.level_kinds())
        if d.type.array_len is not None:
            declared[0] = "arr" if d.type.array_checked else None
        kinds = [dk if dk is not None else ik for dk, ik in zip(declared, inferred)]
        bound = None
        if d.bounds is None and d.itype is None and d.type.array_len is None and kinds[0] in ("arr", "ntarr"):
            b = self.bound_of(("unit", units[0].id))
            if b is not None:
                bound = self.bound_text(*b)
        if kinds == declared and bound is None:
            return None
        if d.itype is not None:
            return None
        return self.full_decl(d, kinds, bound)

    # ------------------------------------------------------------------ functions

    def functions(self) -> None:
        for fn in self.tu.functions.values():
            if fn.prelude:
                continue
            for fd in fn.decls:
                if fd.span.file < 0:
                    continue
                for i, p in enumerate(fd.params):
                    self.param(fn, fd, i, p)
                self.ret(fn, fd)

    def param(self, fn: A.Function, fd: A.FuncDecl, i: int, p: A.VarDecl) -> None:
        units = self.vt.units_of(p)
        if not units or p.itype is not None:
            return
        convs = [self.kinds.conversion[u.id] for u in units]
        if all(c == UNCHANGED for c in convs):
            return
        b = self.bound_of(("unit", units[0].id))
        ext = self.external_kinds(units)
        bound = None
        if b is not None and ext[0] in ("arr", "ntarr") and p.bounds is None:
            bound = self.bound_text(b[0], b[1], params=fd.params)
        fid = p.decl_span.file
        if any(c == ITYPE for c in convs):
            declared_ext = fn.param_declared_kinds(i)
            if declared_ext is not None and any(k is not None for k in declared_ext):
                return
            ann = f" : itype({A.render_type(p.type.base_text(), ext)})"
            if bound:
                ann += f" {bound}"
            self.add(fid, p.decl_span.end, p.decl_span.end, ann, ITYPE_EDIT)
            return
        declared = list(p.type.level_kinds())
        kinds = [dk if dk is not None else ik for dk, ik in zip(declared, self.unit_kinds(units))]
        if kinds == declared and bound is None:
            return
        text = A.declare(A.render_type(p.type.base_text(), kinds), p.name)
        if bound:
            text += f" : {bound}"
        self.add(fid, p.decl_span.start, p.decl_span.end, text, TYPE_REWRITE)

    def ret(self, fn: A.Function, fd: A.FuncDecl) -> None:
        units = self.vt.returns_of(fn.name)
        if not units or fd.ret_itype is not None:
            return
        convs = [self.kinds.conversion[u.id] for u in units]
        if all(c == UNCHANGED for c in convs):
            return
        ext = self.external_kinds(units)
        b = self.bound_of(("unit", units[0].id))
        bound = None
        if b is not None and ext[0] in ("arr", "ntarr") and fd.ret_bounds is None:
            bound = self.bound_text(b[0], b[1], params=fd.params)
        fid = fd.span.file
        if any(c == ITYPE for c in convs):
            ann = f" : itype({A.render_type(fd.ret.base_text(), ext)})"
            if bound:
                ann += f" {bound}"
            self.add(fid, fd.params_end, fd.params_end, ann, ITYPE_EDIT)
            return
        declared = list(fd.ret.level_kinds())
        kinds = [dk if dk is not None else ik for dk, ik in zip(declared, self.unit_kinds(units))]
        if kinds != declared:
            self.add(fid, fd.ret_span.start, fd.ret_span.end, A.render_type(fd.ret.base_text(), kinds) + " ",
                     TYPE_REWRITE)
        if bound:
            self.add(fid, fd.params_end, fd.params_end, f" : {bound}", BOUNDS)

    # ------------------------------------------------------------------ call sites

    def casts(self) -> None:
        for dm in self.demands:
            cs = self._call_sites[dm.call_id]
            arg = cs.call.args[dm.arg_index]
            if isinstance(arg, A.BoundsCast):
                continue
            p = cs.callee.params[dm.arg_index]
            units = self.vt.units_of(p)
            ext = self.external_kinds(units)
            target = A.render_type(p.type.base_text(), ext)
            tail = ")"
            if ext[0] in ("arr", "ntarr"):
                b = self.bound_of(("ctxp", cs.callee.name, dm.arg_index, cs.id))
                if b is not None:
                    text = self.bound_text(b[0], b[1], call=cs.call)
                    if text:
                        tail = f", {text})"
                if tail == ")":
                    self.plan.warnings.append(f"{self.tu.filename(arg.span)}:{cs.line}: cast to {target} has no bounds")
            fid = arg.span.file
            length = arg.span.end - arg.span.start
            self.add(fid, arg.span.start, arg.span.start, f"_Assume_bounds_cast<{target}>(", CAST, _OPEN, -length)
            self.add(fid, arg.span.end, arg.span.end, tail, CAST, _CLOSE, length)
            self.plan.casts.append((cs.line, f"_Assume_bounds_cast<{target}>({expr_text(self.tu, arg)}{tail}"))

    def generic_calls(self) -> None:
        for e, caller, args in self.f.prelude_calls:
            self.generic_call(e, args)
        for cs in self.f.calls:
            if cs.callee.generic:
                self.generic_call(cs.call, cs.args)

    def generic_call(self, e: A.Call, args: list) -> None:
        fn = e.function
        if e.type_args or not fn.generic or e.span.file < 0:
            return
        from .constraints import ALLOCATORS

        if fn.name in ALLOCATORS:
            site = next((s for s in self.f.allocs if s.call is e), None)
            if site is None or site.receiver is None or site.receiver_type is None:
                return
            val = site.receiver
            ty = site.receiver_type.decayed()
        else:
            idx = next((i for i, p in enumerate(fn.params) if _generic_param(fn, i)), None)
            if idx is None or idx >= len(args):
                return
            val = args[idx]
            ty = e.args[idx].ty.decayed()
        if val.kind != "ptr" or not val.levels or not isinstance(val.levels[0], int):
            return
        if val.levels[0] in self.kinds.wild_vars or not ty.is_pointer:
            return
        pointee = ty.deref()
        if pointee.base == "void" or pointee.generic:
            return
        inner = []
        for k, lv in enumerate(val.levels[1:]):
            if isinstance(lv, int) and lv not in self.kinds.wild_vars:
                inner.append(self.ptyp.solution[lv])
            else:
                inner.append(pointee.ptrs[k] if k < len(pointee.ptrs) else None)
        inner = inner[: len(pointee.ptrs)]
        inner += list(pointee.ptrs[len(inner):])
        targ = A.render_type(pointee.base_text(), inner)
        self.add(e.callee.span.file, e.callee.span.end, e.callee.span.end, f"<{targ}>", GENERIC_ALLOC)

    # ------------------------------------------------------------------ checked regions

    def checked_bodies(self) -> None:
        for fn in self.tu.functions.values():
            if fn.prelude or fn.definition is None:
                continue
            fd = fn.definition
            if fd.checked_body or fd.body.checked is not None or fn.name in self.unconvertible:
                continue
            if self.body_is_checked(fn):
                self.add(fd.body.span.file, fd.body.lbrace, fd.body.lbrace, "_Checked ", CHECKED_REGION)

    def _caller_of(self, dm) -> str:
        return self._call_sites[dm.call_id].caller

    def body_is_checked(self, fn: A.Function) -> bool:
        ff = self.f.functions.get(fn.name)
        if ff is None:
            return False
        if ff.variadic_calls or ff.unresolved_calls or ff.unsafe_casts or ff.assume_casts:
            return False
        if any(self._caller_of(dm) == fn.name for dm in self.demands):
            return False
        units = [u for u in self.vt.units if u.function == fn.name]
        if any(self.kinds.conversion[u.id] != CHECKED for u in units):
            return False
        if ff.used_vars & self.kinds.wild_vars:
            return False
        for callee in ff.callees:
            cf = self.tu.functions[callee]
            if cf.prelude:
                continue
            for i, p in enumerate(cf.params):
                for u in self.vt.units_of(p):
                    if u.ext in self.kinds.wild_vars:
                        return False
            for u in self.vt.returns_of(callee):
                if u.ext in self.kinds.wild_vars:
                    return False
            if cf.variadic:
                return False
        return True


def _generic_param(fn: A.Function, i: int) -> bool:
    it = fn.param_itype(i)
    ty = it.type if it is not None else fn.params[i].type
    return ty.generic and ty.is_pointer


def _split_groups(decls: list) -> list:
    groups: list = []
    for d in decls:
        if d.comma_before >= 0 and groups:
            groups[-1].append(d)
        else:
            groups.append([d])
    return groups


def ordered(edits: list) -> list:
    """Application order. At one offset: closing text, plain inserts, opening text, then the replacement."""
    return sorted(edits, key=lambda e: (e.file, e.start, e.slot, e.rank, e.end))


def check_overlaps(edits: list) -> None:
    """Replacements may not overlap each other, and insertions may not fall strictly inside one."""
    by_file: dict = {}
    for e in edits:
        by_file.setdefault(e.file, []).append(e)
    for fid, es in by_file.items():
        reps = sorted((e for e in es if not e.is_insert), key=lambda e: (e.start, e.end))
        for a, b in zip(reps, reps[1:]):
            if b.start < a.end:
                raise InvariantViolation(f"overlapping edits at offsets {a.start}-{a.end} and {b.start}-{b.end}")
        for ins in (e for e in es if e.is_insert):
            for r in reps:
                if r.start < ins.start < r.end:
                    raise InvariantViolation(f"insertion at {ins.start} falls inside replaced text {r.start}-{r.end}")


def plan_rewrites(facts: Facts, kinds: KindResult, ptyp: PtypResult, bounds: Optional[BoundsResult],
                  demands: list[CastDemand]) -> RewritePlan:
    return Planner(facts, kinds, ptyp, bounds, demands).plan_all()


def apply(plan: RewritePlan, files: dict) -> dict:
    """Apply ``plan`` to ``{file id: bytes}``; returns new texts for the writable files."""
    out = {}
    for fid, text in files.items():
        if fid in plan.readonly:
            continue
        if plan.digests.get(fid) != digest(text):
            raise StaleSpan(f"{plan.names.get(fid, fid)}: file changed since it was analysed")
        pieces = []
        pos = 0
        for e in plan.for_file(fid):
            if e.start < pos:
                raise InvariantViolation(f"overlapping edit at offset {e.start}")
            pieces.append(text[pos:e.start])
            pieces.append(e.text.encode("utf-8"))
            pos = e.end
        pieces.append(text[pos:])
        out[fid] = b"".join(pieces)
    return out
