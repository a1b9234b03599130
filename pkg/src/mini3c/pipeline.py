"""Whole-program conversion: parse, analyse, plan edits."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional

from .analysis import bounds as B
from .analysis import kinds as K
from .analysis import ptyp as P
from .analysis import rewriter as RW
from .analysis.constraints import Facts, build_facts
from .analysis.rootcause import RootCause, root_causes
from .frontend import InputFile, parse
from .frontend import ast as A

PHASES = ("setup", "constraints", "solve", "bounds", "rewrite", "root-cause")


@dataclass
class Options:
    solver: str = "threestep"
    heuristics: bool = True
    backend: Optional[str] = None


@dataclass
class Result:
    tu: A.TranslationUnit
    facts: Facts
    kinds: K.KindResult
    ptyp: P.PtypResult
    causes: list
    bounds: B.BoundsResult
    inference: B.BoundsInference
    demands: list
    plan: RW.RewritePlan
    outputs: dict  # file id -> rewritten bytes (writable files only)
    conflicts: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def edit_count(self) -> int:
        return len(self.plan.edits)

    def output_text(self, fid: int = 0) -> str:
        return self.outputs[fid].decode("utf-8")


class _Clock:
    def __init__(self):
        self.times = {p: 0.0 for p in PHASES}

    @contextmanager
    def phase(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.times[name] += time.perf_counter() - t0


def run(files, options: Optional[Options] = None) -> Result:
    """Analyse ``files`` (InputFile or ``(name, text[, readonly])``) and rewrite them."""
    opts = options or Options()
    clock = _Clock()
    with clock.phase("setup"):
        inputs = [f if isinstance(f, InputFile) else _input(f) for f in files]
        tu = parse(inputs)
    with clock.phase("constraints"):
        facts = build_facts(tu)
    with clock.phase("solve"):
        conflicts = P.find_conflicts(facts, opts.backend)
        K.demote_conflicts(facts, conflicts)
        kinds = K.solve_kinds(facts, opts.backend)
        pt = P.solve_ptyp(facts, kinds, opts.solver, opts.backend)
        demands = K.cast_demands(facts, kinds)
    with clock.phase("root-cause"):
        causes = root_causes(facts.kind, facts.vt, kinds, opts.backend)
    with clock.phase("bounds"):
        bres, bi = B.infer_bounds(facts, kinds, pt, opts.heuristics)
    with clock.phase("rewrite"):
        plan = RW.plan_rewrites(facts, kinds, pt, bres, demands)
        outputs = RW.apply(plan, {fid: sf.text for fid, sf in enumerate(tu.files)})
    return Result(tu, facts, kinds, pt, causes, bres, bi, demands, plan, outputs, conflicts, clock.times)


def _input(f) -> InputFile:
    name, text, *rest = f
    return InputFile(name, text.encode("utf-8") if isinstance(text, str) else text, bool(rest and rest[0]))


def convert_text(text: str, name: str = "input.mc", **kw) -> Result:
    """Single-file convenience wrapper."""
    return run([(name, text)], Options(**kw))


def wild_causes(result: Result) -> list[RootCause]:
    return result.causes
