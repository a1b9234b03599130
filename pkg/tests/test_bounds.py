import pytest

from conftest import convert_file
from oracles import unjustified_bounds
from programs import random_program
from mini3c import report
from mini3c.analysis.bounds import PHASE_LC, PHASE_PC, validate
from mini3c.pipeline import Options, convert_text, run


def bounds(result) -> dict:
    return {row["name"]: row["bound"] for row in report.bounds_rows(result)}


def provenance(result) -> dict:
    return {row["name"]: row["provenance"] for row in report.bounds_rows(result)}


def invalid(result) -> set:
    return {result.inference.name(k) for k in result.bounds.invalid}


@pytest.fixture(scope="module")
def result():
    return convert_file("recordptr.mc")


class TestRecordptrBoundsFlow:
    def test_final_bounds(self, result):
        got = {(n, k, b) for _, _, n, k, b in result.bounds.trace}
        assert {("bar.r", "ct", "bar.z"), ("foo.p@25", "ct", "foo.n@25"), ("baz.q@26", "ct", "baz.len@26"),
                ("foo.p", "ct", "foo.n"), ("baz.q", "ct", "baz.len")} <= got

    def test_phase_order(self, result):
        steps: dict = {}
        for rnd, phase, name, _, _ in result.bounds.trace:
            steps.setdefault((rnd, phase), set()).add(name)
        assert list(steps) == [(0, "seed"), (1, PHASE_LC), (1, PHASE_PC)]
        assert steps[(0, "seed")] == {"bar.r"}
        assert steps[(1, PHASE_LC)] == {"foo.p@25", "baz.q@26"}
        assert {"foo.p", "baz.q"} <= steps[(1, PHASE_PC)]

    def test_only_seed_is_the_allocation(self, result):
        assert provenance(result) == {"baz.q": "flow", "foo.p": "flow", "bar.r": "seeded"}

    def test_rendered(self, result):
        out = result.output_text()
        assert "_Array_ptr<int> q : count(len)" in out
        assert "count(z)" in out


def test_malloc_forms():
    r = convert_file("seed_malloc.mc")
    assert bounds(r) == {"fill.a": "count(fill.n)", "fill.b": "count(fill.n)",
                         "fill.c": "byte_count(fill.n)", "fill.d": "count(fill.n)"}
    assert set(provenance(r).values()) == {"seeded"}


def test_fixed_array_seed_flows_to_alias():
    r = convert_file("seed_fixed_array.mc")
    assert bounds(r) == {"first.buf": "count(64)", "first.p": "count(64)"}
    assert "char buf _Checked[64]" in r.output_text()


def test_library_call_seed_is_byte_count():
    r = convert_text("void clear(int n) { char *buf = malloc(n); bzero(buf, n); buf[0] = 1; }")
    assert bounds(r)["clear.buf"] == "byte_count(clear.n)"
    r = convert_text("void clear(char *buf, int n) { bzero(buf, n); buf[1] = 0; }")
    assert bounds(r)["clear.buf"] == "byte_count(clear.n)"


def test_declared_bound_propagates():
    r = convert_file("seed_declared.mc")
    assert bounds(r) == {"sum.a": "count(sum.n)", "caller.buf": "count(caller.k)",
                         "caller.alias": "count(caller.k)"}
    assert provenance(r)["sum.a"] == "declared"


def test_conflicting_allocations_invalidate():
    r = convert_file("seed_conflict.mc")
    assert bounds(r) == {}
    assert invalid(r) == {"pick.p"}
    assert report.needs_bounds(r) == ["pick.p"]


def test_char_element_size_counts_elements():
    r = convert_text("void f(int n) { char *s = malloc(sizeof(char) * n); s[0] = 'a'; }")
    assert bounds(r)["f.s"] == "count(f.n)"


def test_pointer_advanced_by_arithmetic_gets_no_count():
    r = convert_text("int f(int n) { int *p = malloc(sizeof(int) * n); int s = 0;"
                     " while (n > 0) { s += *p; p++; n--; } return s; }")
    assert "f.p" not in bounds(r)
    r = convert_file("strings.mc")
    assert "count_char.s" not in bounds(r)


@pytest.mark.parametrize("heuristics", [True, False])
def test_validators_agree_on_corpus(corpus_files, heuristics):
    for f in corpus_files:
        r = run([f], Options(heuristics=heuristics))
        assert validate(r.inference, r.bounds) == []
        assert unjustified_bounds(r.facts, r.bounds) == []


@pytest.mark.parametrize("seed", range(40))
def test_flow_bounds_justified_on_random_programs(seed):
    r = run([("p.mc", random_program(seed))])
    assert unjustified_bounds(r.facts, r.bounds) == []
    assert not (set(r.bounds.beta) & r.bounds.invalid)
