"""Regenerate the bundled email-network fixture.

The original URV email graph (1133 nodes, 5452 edges, max degree 71) is
not redistributable here, so the package ships a synthetic surrogate with
the same node count, edge count, max degree, and a comparable heavy-tailed
degree profile: a preferential-attachment tree grown to a connected graph,
one hub topped up to degree 71, remaining edges preferentially attached
with a degree cap of 71.

Usage: python3 scripts/make_graph_fixture.py [out_path]
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

N = 1133
M = 5452
MAX_DEG = 71
SEED = 987654321


def generate(rng: np.random.Generator) -> list[tuple[int, int]]:
    deg = np.zeros(N, dtype=np.int64)
    edges: set[tuple[int, int]] = set()

    def add(a: int, b: int) -> bool:
        if a == b:
            return False
        key = (a, b) if a < b else (b, a)
        if key in edges or deg[a] >= MAX_DEG or deg[b] >= MAX_DEG:
            return False
        edges.add(key)
        deg[a] += 1
        deg[b] += 1
        return True

    # Preferential-attachment tree: connectivity plus a heavy tail.
    for v in range(1, N):
        weights = deg[:v] + 1.0
        target = int(rng.choice(v, p=weights / weights.sum()))
        add(v, target)

    # Pin the maximum degree.
    hub = int(np.argmax(deg))
    others = np.arange(N)
    while deg[hub] < MAX_DEG:
        add(hub, int(rng.choice(others)))

    # Fill the remaining budget preferentially, capped at MAX_DEG.
    while len(edges) < M:
        weights = (deg + 1.0) * (deg < MAX_DEG)
        p = weights / weights.sum()
        a = int(rng.choice(N, p=p))
        b = int(rng.choice(N, p=p))
        add(a, b)

    return sorted(edges)


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parent.parent / "src" / "drim" / "data" / "urv_email.edges"
    )
    rng = np.random.default_rng(SEED)
    edges = generate(rng)
    deg = np.zeros(N, dtype=np.int64)
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    assert len(edges) == M and deg.max() == MAX_DEG and deg.min() >= 1

    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("% synthetic surrogate of the URV email network\n")
        fh.write(f"% {N} nodes, {M} edges, max degree {MAX_DEG}; 1-indexed\n")
        fh.write(f"% regenerate with scripts/make_graph_fixture.py (seed {SEED})\n")
        for a, b in edges:
            fh.write(f"{a + 1} {b + 1}\n")
    print(f"wrote {out}: n={N} m={M} max_deg={deg.max()} mean_deg={2 * M / N:.2f}")


if __name__ == "__main__":
    main()
