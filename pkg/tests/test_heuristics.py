import pytest

from conftest import convert_file
from mini3c import report
from mini3c.pipeline import Options, convert_text, run


def rows(result) -> dict:
    return {r["name"]: r for r in report.bounds_rows(result)}


HEURISTIC_CASES = [
    ("cub_const.mc", "fill.p", "count(64)", "heuristic:CUB"),
    ("cub_early_exit.mc", "pick.p", "count(pick.n)", "heuristic:CUB"),
    ("cub_loop.mc", "total.p", "count(total.s)", "heuristic:CUB"),
    ("npr_len.mc", "foo.p", "count(foo.p_len)", "heuristic:NPr"),
    ("npr_size.mc", "baz.p", "count(baz.psize)", "heuristic:NPr"),
    ("ascii_convert.mc", "vsf_ascii_bin_to_ascii.p_in", "count(vsf_ascii_bin_to_ascii.in_len)", "heuristic:CUB"),
]


@pytest.mark.parametrize("name,unit,bound,prov", HEURISTIC_CASES, ids=[t[0] for t in HEURISTIC_CASES])
def test_heuristic_bound(name, unit, bound, prov):
    on = rows(convert_file(name))
    assert on[unit]["bound"] == bound
    assert on[unit]["provenance"] == prov
    off = convert_file(name, heuristics=False)
    assert unit not in rows(off)
    assert unit in report.needs_bounds(off)


def test_ascii_convert_rendered():
    out = convert_file("ascii_convert.mc").output_text()
    assert "_Array_ptr<const char> p_in : count(in_len)" in out


def test_next_parameter():
    r = convert_text("int f(int *p, int n) { return p[2]; }")
    assert rows(r)["f.p"]["provenance"] == "heuristic:NePa"
    assert rows(r)["f.p"]["bound"] == "count(f.n)"


@pytest.mark.parametrize("body", ["return p[n * 2];", "int x = n & 4; return p[2] + x;"])
def test_next_parameter_skips_arithmetic_scalars(body):
    r = convert_text(f"int f(int *p, int n) {{ {body} }}")
    assert "f.p" not in rows(r)


def test_cub_needs_every_index_guarded():
    r = convert_text("void f(int *p, int i, int j) { if (i < 8) p[i] = 0; p[j] = 1; }")
    assert rows(r).get("f.p", {}).get("provenance") != "heuristic:CUB"


def test_cub_disagreeing_guards():
    r = convert_text("void f(int *p, int i, int j, int a, int b) { if (i < a) p[i] = 0; if (j < b) p[j] = 1; }")
    assert rows(r).get("f.p", {}).get("provenance") != "heuristic:CUB"


def test_bounds_derived_from_heuristics_are_tagged():
    src = "int h(int *p, int n) { return p[2]; } int g(int k) { int *a = 0; a[1] = 0; return h(a, k); }"
    on = rows(convert_text(src))
    assert on["g.a"]["bound"] == "count(g.k)"
    assert on["g.a"]["provenance"] == "flow" and on["g.a"]["after_heuristics"]
    assert rows(convert_text(src, heuristics=False)) == {}


def test_sound_bounds_do_not_depend_on_heuristics(corpus_files):
    for f in corpus_files:
        on = {k: v for k, v in rows(run([f])).items() if not v["provenance"].startswith("heuristic")
              and not v["after_heuristics"]}
        off = rows(run([f], Options(heuristics=False)))
        assert on == off
