import pytest

from conftest import convert_file
from programs import random_program
from mini3c.analysis import rewriter as RW
from mini3c.errors import InvariantViolation, StaleSpan
from mini3c.frontend import parse
from mini3c.pipeline import convert_text, run


def test_recordptr_initial_conversion():
    out = convert_file("recordptr.mc").output_text()
    assert "void baz(_Array_ptr<int> q : count(len),\n         _Ptr<int> c, int len) _Checked {" in out
    assert "void foo(int *p : itype(_Array_ptr<int>) count(n),\n         int n) {" in out
    assert "static int *g = 0;" in out
    assert "extern void recordptr(void *x);" in out
    assert "baz(_Assume_bounds_cast<_Array_ptr<int>>(p, count(n)), &m, n);" in out
    assert "_Array_ptr<int> r : count(z) =\n    malloc<int>(sizeof(int)*z);" in out
    assert "baz(r, _Assume_bounds_cast<_Ptr<int>>(g), z);" in out
    assert "void bar(int z) {" in out


def test_recordptr_after_fix():
    r = convert_file("recordptr_fixed.mc")
    out = r.output_text()
    assert "static _Ptr<int> g = 0;" in out
    assert "void foo(_Array_ptr<int> p : count(n),\n         int n) _Checked {" in out
    assert "recordptr<int>(p);" in out
    assert "baz(p, &m, n);" in out
    assert "void bar(int z) _Checked {" in out
    assert r.plan.count(RW.CAST) == 0 and "_Assume_bounds_cast" not in out


def test_converted_program_untouched_byte_for_byte():
    src = convert_file("recordptr_fixed.mc").outputs[0]
    r = run([("done.mc", src)])
    assert r.plan.edits == []
    assert r.outputs[0] == src


def test_stale_text_rejected():
    r = convert_file("recordptr.mc")
    with pytest.raises(StaleSpan):
        RW.apply(r.plan, {0: r.tu.files[0].text + b"\n"})


def test_readonly_files_not_written():
    r = run([("lib.mc", "void put(int *p) { *p = 1; }", True), ("main.mc", "void m(int *q) { put(q); }")])
    assert 0 not in r.outputs and 1 in r.outputs
    assert all(e.file != 0 for e in r.plan.edits)


def test_overlap_guard():
    a = RW.Edit(0, 0, 5, "x", RW.TYPE_REWRITE, RW._REPLACE)
    b = RW.Edit(0, 3, 8, "y", RW.TYPE_REWRITE, RW._REPLACE)
    with pytest.raises(InvariantViolation):
        RW.check_overlaps([a, b])
    c = RW.Edit(0, 2, 2, "z", RW.BOUNDS)
    with pytest.raises(InvariantViolation):
        RW.check_overlaps([a, c])
    RW.check_overlaps([a, RW.Edit(0, 5, 5, "z", RW.BOUNDS)])


def test_cast_inside_nested_call():
    src = ("void sink(int *q) { *q = 0; }\n"
           "int *pass(int *z) { return z; }\n"
           "void u(int k) { int *y = (int *)k; sink(pass(y)); }\n")
    out = convert_text(src).output_text()
    assert "sink(pass(_Assume_bounds_cast<_Ptr<int>>(y)));" in out
    assert convert_text(out).edit_count == 0


def test_same_offset_order():
    text = b"f(a)(b)"
    # at offset 3 (after `a`) closers go inner first and precede the plain insert;
    # at offset 2 the outer opener goes first
    edits = [
        RW.Edit(0, 4, 4, "X(", RW.CAST, RW._OPEN, -3),
        RW.Edit(0, 3, 3, ")", RW.CAST, RW._CLOSE, 1),
        RW.Edit(0, 2, 2, "Inner(", RW.CAST, RW._OPEN, -1),
        RW.Edit(0, 2, 2, "Outer(", RW.CAST, RW._OPEN, -9),
        RW.Edit(0, 3, 3, "))", RW.CAST, RW._CLOSE, 9),
        RW.Edit(0, 3, 3, " : count(n)", RW.BOUNDS),
    ]
    plan = RW.RewritePlan(RW.ordered(edits), {0: RW.digest(text)})
    assert RW.apply(plan, {0: text})[0] == b"f(Outer(Inner(a))) : count(n))X((b)"


def test_multi_declarator_split():
    src = "static int *a, *b, n;\nvoid f(void) { a[1] = 0; b = (int *)7; }\n"
    out = convert_text(src).output_text()
    assert out.startswith("static _Array_ptr<int> a; static int *b; static int n;\n")
    r = run([("again.mc", out)])
    assert {u.name: r.kinds.conversion[u.id] for u in r.facts.vt.units}["b"] == "unchanged"


def test_local_multi_declarator_split():
    src = "int f(void) { int v = 0; int *p = &v, *q = 0; q = (int *)v; return *p; }\n"
    out = convert_text(src).output_text()
    assert "_Ptr<int> p = &v;" in out
    assert "int *q = 0;" in out


def test_for_init_multi_declarator_left_alone():
    src = "int f(int n) { int s = 0; for (int *p = 0, *q = 0; s < n; s++) { q = (int *)s; } return s; }\n"
    r = convert_text(src)
    assert "for (int *p = 0, *q = 0;" in r.output_text()
    assert any("for-init" in w for w in r.plan.warnings)
    assert "_Checked" not in r.output_text()


def _strip_edits(plan, original: bytes, output: bytes) -> tuple[bytes, bytes]:
    """Drop the edited spans from both sides; what remains must be identical."""
    keep_in, keep_out = [], []
    pos_in = pos_out = 0
    for e in plan.for_file(0):
        keep_in.append(original[pos_in:e.start])
        keep_out.append(output[pos_out:pos_out + (e.start - pos_in)])
        pos_out += (e.start - pos_in) + len(e.text.encode())
        pos_in = e.end
    keep_in.append(original[pos_in:])
    keep_out.append(output[pos_out:])
    return b"".join(keep_in), b"".join(keep_out)


@pytest.mark.parametrize("name", ["recordptr.mc", "strings.mc", "seed_malloc.mc", "list.mc", "ascii_convert.mc"])
def test_only_annotations_change(name):
    r = convert_file(name)
    a, b = _strip_edits(r.plan, r.tu.files[0].text, r.outputs[0])
    assert a == b


@pytest.mark.parametrize("seed", range(30))
def test_output_reparses_and_is_stable(seed):
    r = run([("p.mc", random_program(seed))])
    a, b = _strip_edits(r.plan, r.tu.files[0].text, r.outputs[0])
    assert a == b
    again = convert_text(r.output_text())
    parse([("x.mc", r.outputs[0])])
    assert again.edit_count == 0


def test_corpus_idempotent(corpus_files):
    for f in corpus_files:
        out = run([f]).outputs[0]
        assert run([(f.name, out)]).edit_count == 0, f.name


def test_utf8_offsets():
    src = "// naïve façade\nvoid f(int *p) { p[1] = 0; }\n"
    out = convert_text(src).output_text()
    assert out.startswith("// naïve façade\nvoid f(_Array_ptr<int> p)")


def test_unbounded_array_cast_is_flagged():
    r = convert_text("void use(int *q) { q[3] = 0; } void f(int k) { int *y = (int *)k; use(y); }")
    assert "use(_Assume_bounds_cast<_Array_ptr<int>>(y));" in r.output_text()
    assert r.plan.warnings == ["input.mc:1: cast to _Array_ptr<int> has no bounds"]
