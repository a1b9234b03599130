"""Regenerate solver_oracle.json from exhaustive enumeration.

    python tests/data/make_solver_oracle.py
"""

import json
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))

from oracles import brute_force, random_graph_spec  # noqa: E402

N_PER_LATTICE = 600


def main() -> None:
    cases = []
    for lattice in ("kind", "ptyp"):
        for seed in range(N_PER_LATTICE):
            spec = random_graph_spec(seed, lattice)
            res = brute_force(spec)
            spec["least"], spec["greatest"] = (None, None) if res is None else res
            spec["pins"] = {str(k): v for k, v in spec["pins"].items()}
            cases.append(spec)
    (HERE / "solver_oracle.json").write_text(json.dumps(cases, separators=(",", ":")) + "\n")
    print(f"{len(cases)} graphs, {sum(c['least'] is None for c in cases)} unsatisfiable")


if __name__ == "__main__":
    main()
