"""Acceptance criteria 1-10, one test each.

Every test prints a single ``criterion N: PASS|FAIL`` line straight to the
terminal (capture is bypassed), then asserts. Run on its own with
``pytest tests/test_acceptance.py``.
"""

import json
import random
import time
from collections import Counter

import pytest

from conftest import CORPUS, convert_file
from oracles import build, least_fixpoint_by_iteration, pins_of, unjustified_bounds
from programs import caller_callee, random_program, render_pair
from mini3c import _kernels, cli, report
from mini3c.analysis.bounds import PHASE_LC, PHASE_PC, validate
from mini3c.analysis.rootcause import entity_of
from mini3c.errors import Unsatisfiable
from mini3c.frontend import InputFile
from mini3c.graph import solve_greatest, solve_least, violations
from mini3c.pipeline import Options, convert_text, run


@pytest.fixture
def verdict(capsys):
    """Call with (number, checks) where checks maps a label to a bool."""

    def report_line(number: int, checks: dict):
        failed = [k for k, ok in checks.items() if not ok]
        line = f"criterion {number}: {'PASS' if not failed else 'FAIL'}"
        if failed:
            line += " (" + "; ".join(failed) + ")"
        with capsys.disabled():
            print("\n" + line)
        assert not failed, line

    return report_line


def _conv(result) -> dict:
    return {u.name: result.kinds.conversion[u.id] for u in result.facts.vt.units}


def test_criterion_1_recordptr_end_to_end(verdict):
    _kernels.warmup()
    src = InputFile.load(CORPUS / "recordptr.mc")
    t0 = time.perf_counter()
    r = run([src])
    elapsed = time.perf_counter() - t0
    out = r.output_text()
    verdict(1, {
        "foo.p itype with count(n)": "int *p : itype(_Array_ptr<int>) count(n)" in out,
        "g stays wild": "static int *g = 0;" in out and _conv(r)["g"] == "unchanged",
        "baz.q": "_Array_ptr<int> q : count(len)" in out,
        "baz.c": "_Ptr<int> c" in out,
        "r count(z)": "_Array_ptr<int> r : count(z) =" in out,
        "cast at call from foo": "baz(_Assume_bounds_cast<_Array_ptr<int>>(p, count(n)), &m, n);" in out,
        "cast at call from bar": "baz(r, _Assume_bounds_cast<_Ptr<int>>(g), z);" in out,
        "exactly one root cause": len(r.causes) == 1,
        f"runtime {elapsed:.3f}s < 1s": elapsed < 1.0,
    })


def test_criterion_2_fix_and_rerun(verdict):
    original = (CORPUS / "recordptr.mc").read_text()
    fixed = original.replace("extern void recordptr(void *x);",
                             "_Itype_for_any(T) extern void recordptr(void *x : itype(_Array_ptr<T>));")
    r = convert_text(fixed, "recordptr.mc")
    out = r.output_text()
    verdict(2, {
        "fix applied": fixed != original,
        "0 wild pointers": report.totals(r)["wild"] == 0 and not r.kinds.wild_vars,
        "0 casts": r.demands == [] and "_Assume_bounds_cast" not in out,
        "0 root causes": r.causes == [],
        "baz checked": "int len) _Checked {" in out,
        "foo checked": "int n) _Checked {" in out,
        "bar checked": "void bar(int z) _Checked {" in out,
        "g is _Ptr": "static _Ptr<int> g = 0;" in out,
        "generic call": "recordptr<int>(p);" in out,
    })


def test_criterion_3_solver_oracle(verdict, solver_cases):
    lattices = Counter(c["lattice"] for c in solver_cases)
    mismatches = invalid = 0
    for backend in ("numpy",) + (("numba",) if _kernels.HAVE_NUMBA else ()):
        for case in solver_cases:
            g, pins = build(case), pins_of(case)
            if case["least"] is None:
                for solve in (solve_least, solve_greatest):
                    try:
                        solve(g, pins, backend)
                        mismatches += 1
                    except Unsatisfiable:
                        pass
                continue
            lo, hi = solve_least(g, pins, backend), solve_greatest(g, pins, backend)
            mismatches += lo.values.tolist() != case["least"]
            mismatches += hi.values.tolist() != case["greatest"]
            invalid += bool(violations(g, lo)) + bool(violations(g, hi))
    verdict(3, {
        f"{len(solver_cases)} graphs >= 1000": len(solver_cases) >= 1000,
        "both lattices": set(lattices) == {"kind", "ptyp"},
        "size limits": all(c["n"] <= 12 and len(c["edges"]) <= 20 for c in solver_cases),
        f"{mismatches} mismatches": mismatches == 0,
        f"{invalid} invalid solutions": invalid == 0,
    })


def test_criterion_4_three_step(verdict, corpus_files):
    getarr = convert_file("getarr.mc")
    unbounded = convert_file("unbounded_return.mc")

    def ntarr(solver):
        return sum(Counter(run([f], Options(solver=solver)).ptyp.unit_ptyp.values())["ntarr"] for f in corpus_files)

    least, three = ntarr("least"), ntarr("threestep")
    ret = {u.name: getarr.ptyp.unit_ptyp.get(u.id) for u in getarr.facts.vt.units}
    ret2 = {u.name: unbounded.ptyp.unit_ptyp.get(u.id) for u in unbounded.facts.vt.units}
    verdict(4, {
        "getarr returns arr": ret["getarr.return"] == "arr",
        "unbounded return is ptr": ret2["foo.return"] == "ptr",
        f"least ntarr {least} > threestep ntarr {three}": least > three,
    })


def test_criterion_5_bounds_iteration_order(verdict):
    r = convert_file("recordptr.mc")
    trace = r.bounds.trace
    got = {(n, k, b) for _, _, n, k, b in trace}
    steps: dict = {}
    for rnd, phase, name, _, _ in trace:
        steps.setdefault((rnd, phase), set()).add(name)
    verdict(5, {
        "beta(r) = (ct, z)": ("bar.r", "ct", "bar.z") in got,
        "beta(p_25) = (ct, n_25)": ("foo.p@25", "ct", "foo.n@25") in got,
        "beta(q_26) = (ct, l_26)": ("baz.q@26", "ct", "baz.len@26") in got,
        "beta(p) = (ct, n)": ("foo.p", "ct", "foo.n") in got,
        "beta(q) = (ct, l)": ("baz.q", "ct", "baz.len") in got,
        "seed first": trace[0][:3] == (0, "seed", "bar.r"),
        "context nodes next": steps.get((1, PHASE_LC)) == {"foo.p@25", "baz.q@26"},
        "originals last": {"foo.p", "baz.q"} <= steps.get((1, PHASE_PC), set())
        and list(steps) == [(0, "seed"), (1, PHASE_LC), (1, PHASE_PC)],
    })


def test_criterion_6_seed_rules(verdict, corpus_files):
    def bounds(result):
        return {row["name"]: row["bound"] for row in report.bounds_rows(result)}

    malloc = bounds(convert_file("seed_malloc.mc"))
    fixed = bounds(convert_file("seed_fixed_array.mc"))
    lib = bounds(convert_text("void clear(char *buf, int n) { bzero(buf, n); buf[1] = 0; }"))
    conflict = convert_file("seed_conflict.mc")
    problems = 0
    for f in corpus_files:
        r = run([f])
        problems += len(validate(r.inference, r.bounds)) + len(unjustified_bounds(r.facts, r.bounds))
    for seed in range(100):
        r = run([("p.mc", random_program(seed))])
        problems += len(validate(r.inference, r.bounds)) + len(unjustified_bounds(r.facts, r.bounds))
    verdict(6, {
        "library itype call -> byte_count": lib.get("clear.buf") == "byte_count(clear.n)",
        "malloc(n * sizeof T) -> count": malloc.get("fill.b") == "count(fill.n)" and malloc.get("fill.a") == "count(fill.n)",
        "malloc(n) -> byte_count": malloc.get("fill.c") == "byte_count(fill.n)",
        "T x[n] -> count": fixed.get("first.buf") == "count(64)",
        "calloc -> count": malloc.get("fill.d") == "count(fill.n)",
        "conflicting mallocs -> invalid": {conflict.inference.name(k) for k in conflict.bounds.invalid} == {"pick.p"}
        and not conflict.bounds.beta,
        f"{problems} unjustified bounds": problems == 0,
    })


def test_criterion_7_heuristics(verdict):
    expected = [
        ("cub_const.mc", "fill.p", "count(64)"),
        ("cub_early_exit.mc", "pick.p", "count(pick.n)"),
        ("cub_loop.mc", "total.p", "count(total.s)"),
        ("npr_len.mc", "foo.p", "count(foo.p_len)"),
        ("npr_size.mc", "baz.p", "count(baz.psize)"),
        ("ascii_convert.mc", "vsf_ascii_bin_to_ascii.p_in", "count(vsf_ascii_bin_to_ascii.in_len)"),
    ]
    checks = {}
    for name, unit, bound in expected:
        on = {row["name"]: row["bound"] for row in report.bounds_rows(convert_file(name))}
        off = {row["name"]: row["bound"] for row in report.bounds_rows(convert_file(name, heuristics=False))}
        checks[f"{name}: {unit} {bound}"] = on.get(unit) == bound
        checks[f"{name}: absent when off"] = unit not in off
    verdict(7, checks)


def test_criterion_8_localized_wildness(verdict):
    def view(src, function):
        r = run([("pair.mc", src)])
        return {u.name: (r.kinds.solution[u.internal], r.ptyp.solution[u.internal])
                for u in r.facts.vt.units if u.function == function and u.entity != "return"}

    n = 120
    bad_arg = bad_use = 0
    for seed in range(n):
        pair = caller_callee(seed)
        rng = random.Random(seed)
        base = render_pair(pair)
        arg = rng.randrange(len(pair["caller"]["args"]))
        bad_arg += view(render_pair(pair, wild_arg=arg), "callee") != view(base, "callee")
        use = rng.choice(pair["callee"]["params"])
        bad_use += view(render_pair(pair, callee_wild=use), "caller") != view(base, "caller")
    verdict(8, {
        f"{n} pairs >= 100": n >= 100,
        f"{bad_arg} callees changed by a wild argument": bad_arg == 0,
        f"{bad_use} callers changed by a wild callee use": bad_use == 0,
    })


def test_criterion_9_root_cause_consistency(verdict):
    def wild_entities(g, vt, dropped):
        h = g.copy()
        for e in dropped:
            h.edges.pop(e)
        return {entity_of(vt, v) for v, k in least_fixpoint_by_iteration(h, {}).items() if k > 0}

    n = 150
    checked_causes = wrong = increased = 0
    for seed in range(n):
        r = run([("p.mc", random_program(seed))])
        g, vt = r.facts.kind, r.facts.vt
        w = g.literal("wild")
        seeds = {(x, y) for (x, y) in g.edges if x == w and not g.is_literal(y)}
        everything = wild_entities(g, vt, set())
        for c in r.causes:
            mine = {e for e in seeds if e[1] in c.vars}
            checked_causes += 1
            wrong += c.influence != len(wild_entities(g, vt, seeds - mine))
        if r.causes:
            top = {e for e in seeds if e[1] in r.causes[0].vars}
            increased += len(wild_entities(g, vt, top)) > len(everything)
    verdict(9, {
        f"{n} programs >= 100": n >= 100,
        f"{wrong}/{checked_causes} influences differ from the oracle": wrong == 0 and checked_causes > 0,
        f"{increased} top-cause deletions increased wildness": increased == 0,
    })


def test_criterion_10_idempotence_and_determinism(verdict, corpus_files, tmp_path, monkeypatch, capsys):
    nonzero = []
    for f in corpus_files:
        out = run([f]).outputs[0]
        if run([(f.name, out)]).edit_count:
            nonzero.append(f.name)
    monkeypatch.chdir(tmp_path)
    paths = [str(CORPUS / n) for n in ("recordptr.mc", "strings.mc", "ascii_convert.mc")]  # one program, no clashes
    artifacts = []
    for d in ("one", "two"):
        assert cli.main(paths + ["--report", "json", "--output-dir", d, "--dump-graphs", d + "-graphs"]) == 0
        report_text = capsys.readouterr().out
        files = {p.relative_to(tmp_path / d).as_posix(): p.read_bytes() for p in sorted((tmp_path / d).rglob("*"))
                 if p.is_file()}
        graphs = {p.name: p.read_bytes() for p in sorted((tmp_path / (d + "-graphs")).iterdir())}
        artifacts.append((report_text, files, graphs))
    json.loads(artifacts[0][0])
    verdict(10, {
        f"non-idempotent: {nonzero}": not nonzero,
        "identical reports": artifacts[0][0] == artifacts[1][0],
        "identical outputs": artifacts[0][1] == artifacts[1][1] and bool(artifacts[0][1]),
        "identical graph dumps": artifacts[0][2] == artifacts[1][2] and len(artifacts[0][2]) == 4,
    })
