"""Command-line driver: ``3c-mini <files...> [options]``."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import report as R
from .analysis.ptyp import SOLVERS
from .errors import ConfigError, InvariantViolation, Mini3CError, SourceError, StaleSpan, Unsatisfiable
from .frontend import InputFile
from .graph import to_dot
from .pipeline import PHASES, Options, Result, run

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2

DEFAULT_OUTPUT_DIR = "3c-out"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="3c-mini", description="Infer Checked C annotations for mini-C programs.")
    p.add_argument("files", nargs="*", help="mini-C source files (analysed together as one program)")
    p.add_argument("--readonly", action="append", default=[], metavar="FILE",
                   help="analyse FILE but never rewrite it (repeatable)")
    out = p.add_mutually_exclusive_group()
    out.add_argument("--output-dir", metavar="D", help=f"write rewritten files under D (default: {DEFAULT_OUTPUT_DIR})")
    out.add_argument("--in-place", action="store_true", help="overwrite the input files")
    p.add_argument("--report", choices=("json", "text"), default="text", help="report format on stdout")
    p.add_argument("--solver", choices=SOLVERS, default="threestep", help="pointer-type solving strategy")
    p.add_argument("--heuristics", choices=("on", "off"), default="on", help="bounds heuristics")
    p.add_argument("--dump-graphs", metavar="D", help="write constraint and flow graphs as DOT files into D")
    p.add_argument("--timings", action="store_true", help="print per-phase timings to stderr")
    return p


@dataclass
class RunConfig:
    inputs: list  # (path, readonly)
    output_dir: Optional[str] = None
    in_place: bool = False
    report: str = "text"
    solver: str = "threestep"
    heuristics: bool = True
    dump_graphs: Optional[str] = None
    timings: bool = False
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        readonly = {os.path.normpath(f) for f in ns.readonly}
        inputs, seen = [], set()
        for f in list(ns.files) + list(ns.readonly):
            key = os.path.normpath(f)
            if key in seen:
                continue
            seen.add(key)
            inputs.append((f, key in readonly))
        cfg = cls(inputs, ns.output_dir, ns.in_place, ns.report, ns.solver, ns.heuristics == "on",
                  ns.dump_graphs, ns.timings)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not any(not ro for _, ro in self.inputs):
            raise ConfigError("no writable input files")
        for path, _ in self.inputs:
            if not os.path.isfile(path):
                raise ConfigError(f"{path}: no such file")


def _output_paths(cfg: RunConfig) -> dict:
    """Input path -> output path for writable inputs, mirroring the input tree."""
    writable = [p for p, ro in cfg.inputs if not ro]
    if cfg.in_place:
        return {p: Path(p) for p in writable}
    root = Path(cfg.output_dir or DEFAULT_OUTPUT_DIR)
    absolute = [os.path.abspath(p) for p in writable]
    common = os.path.commonpath([os.path.dirname(a) for a in absolute])
    return {p: root / os.path.relpath(a, common) for p, a in zip(writable, absolute)}


def _flow_dot(title: str, nodes: dict, names: dict, edges) -> str:
    from .graph import _quote

    ids = {k: i for i, k in enumerate(nodes)}
    lines = [f"graph {_quote(title)} {{"]
    for k, i in ids.items():
        lines.append(f"  n{i} [label={_quote(names.get(k, str(k)))}];")
    pairs = sorted(tuple(sorted(ids[n] for n in e)) for e in edges if all(n in ids for n in e))
    lines += [f"  n{a} -- n{b};" for a, b in pairs]
    lines.append("}")
    return "\n".join(lines) + "\n"


def dump_graphs(result: Result, directory: str) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    f = result.facts
    pnames = {k: result.inference.name(k) for k in f.pfg_nodes}
    docs = {
        "kind.dot": to_dot(f.kind, result.kinds.solution, "kind"),
        "ptyp.dot": to_dot(f.ptyp, result.ptyp.solution, "ptyp"),
        "pfg.dot": _flow_dot("pfg", f.pfg_nodes, pnames, f.pfg_edges),
        "sfg.dot": _flow_dot("sfg", f.sfg_nodes, f.snode_names, f.sfg_edges),
    }
    written = []
    for name, text in docs.items():
        (d / name).write_text(text)
        written.append(d / name)
    return written


def execute(cfg: RunConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    files = [InputFile.load(p, ro) for p, ro in cfg.inputs]
    result = run(files, Options(solver=cfg.solver, heuristics=cfg.heuristics))
    targets = _output_paths(cfg)
    for fid, (path, ro) in enumerate(cfg.inputs):
        if ro:
            continue
        out = targets[path]
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(result.outputs[fid])
    if cfg.dump_graphs:
        dump_graphs(result, cfg.dump_graphs)
    rep = R.build(result)
    stdout.write(R.to_json(rep) if cfg.report == "json" else R.to_text(rep))
    for w in result.plan.warnings:
        stderr.write(f"warning: {w}\n")
    if cfg.timings:
        for ph in PHASES:
            stderr.write(f"{ph:12s} {result.timings[ph] * 1000:9.2f} ms\n")
    return EXIT_OK


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if not ns.files and not ns.readonly:
            parser.print_usage(sys.stderr)
            sys.stderr.write("3c-mini: error: no input files\n")
            return EXIT_INPUT
        cfg = RunConfig.from_args(ns)
        return execute(cfg)
    except (ConfigError, SourceError) as e:
        sys.stderr.write(f"3c-mini: error: {e}\n")
        return EXIT_INPUT
    except (InvariantViolation, Unsatisfiable, StaleSpan) as e:
        sys.stderr.write(f"3c-mini: internal error: {e}\n")
        return EXIT_INTERNAL
    except Mini3CError as e:  # pragma: no cover - every subclass is handled above
        sys.stderr.write(f"3c-mini: error: {e}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
