"""Regenerate fixture10_golden.json from the brute-force oracle (no package code involved).

Run from the repository root: ``python3 tests/data/make_golden.py``.
"""

import json
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))

from oracles import brute_force_rounds, pcg_initial_infection  # noqa: E402

A, R, SEED, CS = 4.0, 2, 12345, (0.5, 1.0)


def main():
    lines = (HERE / "fixture10.edges").read_text().splitlines()
    edges = [tuple(int(x) for x in ln.split()) for ln in lines if ln and not ln.startswith("#")]
    V = max(max(e) for e in edges)
    I0 = pcg_initial_infection(V, A, SEED)
    sizes = [len(s) for s in brute_force_rounds(edges, V, I0, R)]
    tau = {repr(c): next((s for s, n in enumerate(sizes) if n >= c * V), None) for c in CS}
    doc = {
        "format_version": 1,
        "V": V,
        "E": len(edges),
        "a": A,
        "r": R,
        "seed": SEED,
        "round_sizes": sizes,
        "stabilized": True,
        "tau": tau,
        "final_fraction": sizes[-1] / V,
    }
    (HERE / "fixture10_golden.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(doc)


if __name__ == "__main__":
    main()
