"""Random mini-C program generators for whole-pipeline property tests."""

from __future__ import annotations

import random


def _pick(rng, xs):
    return xs[rng.randrange(len(xs))]


def caller_callee(seed: int) -> dict:
    """A callee with single-level pointer params and a caller that passes locals.

    Returns the source pieces so tests can splice in a wild argument or a
    wild use inside the callee.
    """
    rng = random.Random(seed)
    n_params = rng.randint(1, 3)
    params = [f"a{i}" for i in range(n_params)]
    body = []
    locals_ = [f"t{i}" for i in range(rng.randint(0, 2))]
    for t in locals_:
        body.append(f"    int *{t} = {_pick(rng, params)};")
    ptrs = params + locals_
    for _ in range(rng.randint(1, 4)):
        form = rng.randrange(4)
        p = _pick(rng, ptrs)
        if form == 0:
            body.append(f"    s = s + {p}[{rng.randint(0, 3)}];")
        elif form == 1:
            body.append(f"    s = s + *{p};")
        elif form == 2 and locals_:
            body.append(f"    {_pick(rng, locals_)} = {p};")
        else:
            body.append(f"    if ({p}) s = s + 1;")
    callee = {
        "params": params,
        "head": f"int callee({', '.join('int *' + p for p in params)}) {{\n    int s = 0;",
        "body": body,
        "tail": "    return s;\n}",
    }
    args = [f"x{i}" for i in range(n_params)]
    decls = []
    for i, x in enumerate(args):
        init = _pick(rng, ["0", "&v", f"malloc(sizeof(int) * {rng.randint(1, 9)})"])
        decls.append(f"    int *{x} = {init};")
    uses = [f"    k = k + *{_pick(rng, args)};" for _ in range(rng.randint(0, 2))]
    caller = {"args": args, "decls": decls, "uses": uses}
    return {"callee": callee, "caller": caller}


def render_pair(pc: dict, wild_arg: int = -1, callee_wild: str = "") -> str:
    c, k = pc["callee"], pc["caller"]
    body = list(c["body"])
    if callee_wild:
        body.append(f"    {callee_wild} = (int *)s;")
    args = list(k["args"])
    if wild_arg >= 0:
        args[wild_arg] = "(int *)k"
    lines = [c["head"], *body, c["tail"], "", "int caller(int k) {", "    int v = 1;", *k["decls"], *k["uses"],
             f"    k = k + callee({', '.join(args)});", "    return k;", "}", ""]
    return "\n".join(lines)


def random_program(seed: int) -> str:
    """Several functions, globals and wild sources; used for root-cause consistency checks."""
    rng = random.Random(seed)
    out = []
    globals_ = [f"g{i}" for i in range(rng.randint(0, 2))]
    for g in globals_:
        out.append(f"int *{g};")
    if rng.random() < 0.5:
        out.append("extern void sink(int *p);")
    sink = any(line.startswith("extern void sink") for line in out)
    funcs = []
    for fi in range(rng.randint(1, 4)):
        name = f"f{fi}"
        params = [f"p{i}" for i in range(rng.randint(0, 2))]
        locals_ = [f"l{i}" for i in range(rng.randint(1, 3))]
        ptrs = params + locals_ + globals_
        lines = [f"int {name}({', '.join('int *' + p for p in params) or 'void'}) {{", "    int s = 0;"]
        for l in locals_:
            lines.append(f"    int *{l} = 0;")
        for _ in range(rng.randint(1, 6)):
            form = rng.randrange(7)
            a, b = _pick(rng, ptrs), _pick(rng, ptrs)
            if form == 0 and a != b:
                lines.append(f"    {a} = {b};")
            elif form == 1:
                lines.append(f"    {a} = (int *)s;")
            elif form == 2:
                lines.append(f"    s = s + {a}[1];")
            elif form == 3 and sink:
                lines.append(f"    sink({a});")
            elif form == 4 and funcs:
                callee, n = _pick(rng, funcs)
                lines.append(f"    s = s + {callee}({', '.join(_pick(rng, ptrs) for _ in range(n))});")
            elif form == 5:
                lines.append(f"    {a} = malloc(sizeof(int) * 4);")
            else:
                lines.append(f"    s = s + *{a};")
        lines += ["    return s;", "}"]
        out.append("\n".join(lines))
        funcs.append((name, len(params)))
    return "\n\n".join(out) + "\n"
