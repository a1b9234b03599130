import pytest

from conftest import CORPUS
from mini3c.errors import LexError, ParseError, ResolveError
from mini3c.frontend import InputFile, parse, parse_source
from mini3c.frontend import ast as A
from mini3c.frontend.lexer import tokenize
from mini3c.frontend.printer import print_items, structure

CORPUS_FILES = sorted(p.name for p in CORPUS.glob("*.mc"))


def test_tokens_and_offsets():
    toks = tokenize(b"int *p = 0x1F; // c\nchar c = '\\n';")
    kinds = [(t.kind, t.text) for t in toks[:6]]
    assert kinds == [("kw", "int"), ("op", "*"), ("id", "p"), ("op", "="), ("int", "0x1F"), ("op", ";")]
    c = next(t for t in toks if t.text == "c")
    assert c.span.line == 2


def test_shift_right_is_two_tokens():
    toks = tokenize("a >> b")
    assert [t.text for t in toks if t.kind == "op"] == [">", ">"]


def test_nested_checked_type_without_space():
    items = parse_source("_Ptr<_Ptr<int>> p;")
    (d,) = items[0].decls
    assert d.type.ptrs == ("ptr", "ptr")


def test_shift_still_parses_as_expression():
    tu = parse([("a.mc", "int f(int a) { return a >> 2; }")])
    ret = tu.functions["f"].definition.body.stmts[0]
    assert isinstance(ret.value, A.Binary) and ret.value.op == ">>"


def test_annotations_parse():
    src = ("_Itype_for_any(T) void g(void *x : itype(_Array_ptr<T>));\n"
           "int f(int *p : itype(_Array_ptr<int>) count(n), int n, _Array_ptr<char> b : byte_count(n)) _Checked {\n"
           "  char buf _Checked[8];\n"
           "  _Array_ptr<int> q : count(n) = _Assume_bounds_cast<_Array_ptr<int>>(p, count(n));\n"
           "  g<int>(q);\n"
           "  return 0;\n}\n")
    tu = parse([("a.mc", src)])
    f = tu.functions["f"].definition
    assert f.checked_body
    p, n, b = f.params
    assert p.itype.type.ptrs == ("arr",) and p.itype.bounds.kind == "count"
    assert b.bounds.kind == "byte_count"
    buf, q = f.body.stmts[0].decls[0], f.body.stmts[1].decls[0]
    assert buf.type.array_len == 8 and buf.type.array_checked
    assert isinstance(q.init, A.BoundsCast)
    call = f.body.stmts[2].expr
    assert call.type_args and call.type_args[0].base == "int"
    assert tu.functions["g"].generic


@pytest.mark.parametrize("name", CORPUS_FILES)
def test_print_round_trip(name):
    text = (CORPUS / name).read_bytes()
    first = parse_source(text)
    printed = print_items(first)
    second = parse_source(printed)
    assert structure(first) == structure(second)
    assert print_items(second) == printed


@pytest.mark.parametrize("name", CORPUS_FILES)
def test_corpus_resolves(name):
    tu = parse([InputFile.load(CORPUS / name)])
    assert tu.files[0].name.endswith(name)


def test_declaration_spans_cover_declarators():
    src = b"static int *a, **b = 0;\nint c[4];\n"
    items = parse_source(src)
    a, b = items[0].decls
    assert src[a.decl_span.start:a.decl_span.end] == b"int *a"
    assert src[b.decl_span.start:b.decl_span.end] == b"**b"
    assert src[b.comma_before:b.comma_before + 1] == b","
    (c,) = items[1].decls
    assert src[c.decl_span.start:c.decl_span.end] == b"int c[4]"


def test_function_spans():
    src = b"int *f(int *p, int n) : count(n) { return p; }"
    (fd,) = parse_source(src)
    assert src[fd.ret_span.start:fd.ret_span.end] == b"int *"
    assert src[fd.params_end - 1:fd.params_end] == b")"
    assert src[fd.params[0].decl_span.start:fd.params[0].decl_span.end] == b"int *p"
    assert src[fd.body.lbrace:fd.body.lbrace + 1] == b"{"


def test_utf8_offsets_are_bytes():
    src = "// héllo\nint *p;".encode()
    (ds,) = parse_source(src)
    d = ds.decls[0]
    assert src[d.span.start:d.span.end] == b"p"


def test_resolution_types():
    tu = parse([("a.mc", "struct s { int *f; }; int g(struct s *x) { return *x->f; }")])
    ret = tu.functions["g"].definition.body.stmts[0]
    member = ret.value.operand
    assert member.ty.ptrs == (None,) and member.field_decl.name == "f"


@pytest.mark.parametrize("src, err", [
    ("int f( {", ParseError),
    ("int x = @;", LexError),
    ("int f(void) { return y; }", ResolveError),
    ("int f(int a) { return a[0]; }", ResolveError),
    ("int f(void); int f(int a);", ResolveError),
    ("struct s { int a; }; int f(struct s v) { return v.b; }", ResolveError),
    ("int a; int a(void);", ResolveError),
])
def test_errors_carry_location(src, err):
    with pytest.raises(err) as ei:
        parse([("bad.mc", src)])
    assert "bad.mc:1" in str(ei.value)


def test_undeclared_call_is_allowed():
    tu = parse([("a.mc", "int f(int *p) { return g(p); }")])
    call = tu.functions["f"].definition.body.stmts[0].value
    assert call.function is None


def test_prelude_is_available():
    tu = parse([("a.mc", "void f(int n) { int *p = malloc(n); free(p); }")])
    assert tu.functions["malloc"].prelude and tu.functions["free"].generic
