"""JSON and text reports for a conversion run."""

from __future__ import annotations

import json

from .analysis.bounds import KIND_TO_ANN
from .analysis.kinds import CHECKED
from .analysis.rootcause import reason_shares


def totals(result) -> dict:
    """Counts over declared pointer levels; an itype-classified level counts as wild."""
    kinds, pt = result.kinds, result.ptyp
    out = {"pointers": 0, "chk": 0, "wild": 0, "ptr": 0, "arr": 0, "ntarr": 0}
    for u in result.facts.vt.units:
        out["pointers"] += 1
        if kinds.conversion[u.id] == CHECKED:
            out["chk"] += 1
            out[pt.solution[u.internal]] += 1
        else:
            out["wild"] += 1
    return out


def wild_entities(result) -> set:
    return {("unit", u.id) for u in result.facts.vt.units if result.kinds.conversion[u.id] != CHECKED}


def bounds_rows(result) -> list[dict]:
    bi, res = result.inference, result.bounds
    rows = []
    for key in res.arrays:
        e = res.beta.get(key)
        if key[0] != "unit" or e is None:
            continue
        rows.append({"name": bi.name(key), "bound": f"{KIND_TO_ANN[e.bound.kind]}({bi.sname(e.bound.node)})",
                     "provenance": e.provenance, "after_heuristics": e.after_heuristics})
    return rows


def needs_bounds(result) -> list[str]:
    """Checked array pointers (outermost level) left without a bound."""
    vt, pt = result.facts.vt, result.ptyp
    out = []
    for u in vt.units:
        if u.level != 0 or result.kinds.conversion[u.id] != CHECKED:
            continue
        if pt.solution[u.external] != "arr" or result.bounds.get(("unit", u.id)) is not None:
            continue
        d = u.decl
        if u.entity != "return" and (d.bounds is not None or d.type.array_len is not None):
            continue
        out.append(u.name)
    return out


def build(result) -> dict:
    return {
        "root_causes": [rc.as_dict() for rc in result.causes],
        "totals": totals(result),
        "reasons": reason_shares(result.causes, wild_entities(result)),
        "needs_bounds": needs_bounds(result),
        "bounds": bounds_rows(result),
        "casts": len(result.demands),
        "edits": result.edit_count,
    }


def to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


def _table(headers: list, rows: list) -> list[str]:
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows else len(str(h)) for i, h in enumerate(headers)]
    line = "  ".join(str(h).ljust(w) for h, w in zip(headers, widths))
    out = [line.rstrip(), "  ".join("-" * w for w in widths)]
    out += ["  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    return out


def to_text(report: dict) -> str:
    t = report["totals"]
    lines = [f"pointers {t['pointers']}  checked {t['chk']} (ptr {t['ptr']}, arr {t['arr']}, ntarr {t['ntarr']})"
             f"  wild {t['wild']}", ""]
    lines.append(f"root causes: {len(report['root_causes'])}")
    if report["root_causes"]:
        lines += _table(["name", "location", "reason", "influence"],
                        [(r["name"], f"{r['file']}:{r['line']}", r["reason"], r["influence"])
                         for r in report["root_causes"]])
    if report["reasons"]:
        lines += ["", "reasons by share of wild pointers:"]
        lines += _table(["reason", "% of wild"], [(r["reason"], f"{r['pct_of_wild']:.2f}") for r in report["reasons"]])
    if report["bounds"]:
        lines += ["", "bounds:"]
        lines += _table(["pointer", "bound", "provenance"],
                        [(b["name"], b["bound"], b["provenance"]) for b in report["bounds"]])
    if report["needs_bounds"]:
        lines += ["", "needs bounds: " + ", ".join(report["needs_bounds"])]
    lines += ["", f"casts inserted: {report['casts']}  edits: {report['edits']}"]
    return "\n".join(lines) + "\n"
