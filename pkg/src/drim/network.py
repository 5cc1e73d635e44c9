"""Graph storage, edge-list ingestion, and planning-side views.

The simulation graph is undirected and unweighted, without self-loops or
duplicate edges. An ObservableGraph is the edge-masked view a party plans
on when network visibility is partial: each edge of the base graph is
kept independently with probability p_nv. Spreading normally still runs
on the full graph; only planning queries (degree, free degree, d-hop
neighborhoods, communities) consult the mask.
"""

from __future__ import annotations

import io
from enum import Enum
from pathlib import Path
from typing import IO, Iterable

import numpy as np
import scipy.sparse as sparse
from scipy.cluster.vq import kmeans2
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh


class EdgeListFormat(Enum):
    PLAIN = "plain"
    MATRIX_MARKET = "matrix_market"


class Graph:
    """Immutable undirected graph with n nodes and a sorted edge array."""

    __slots__ = ("n", "edge_u", "edge_v", "adjacency")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]):
        pairs = sorted({(min(a, b), max(a, b)) for a, b in edges if a != b})
        for a, b in pairs:
            if a < 0 or b >= n:
                raise ValueError(f"edge ({a}, {b}) out of range for n={n}")
        self.n = n
        m = len(pairs)
        self.edge_u = np.fromiter((p[0] for p in pairs), dtype=np.int64, count=m)
        self.edge_v = np.fromiter((p[1] for p in pairs), dtype=np.int64, count=m)
        adjacency: list[list[int]] = [[] for _ in range(n)]
        for a, b in pairs:
            adjacency[a].append(b)
            adjacency[b].append(a)
        for nbrs in adjacency:
            nbrs.sort()
        self.adjacency = adjacency

    @property
    def num_edges(self) -> int:
        return int(self.edge_u.size)

    def edges(self) -> set[tuple[int, int]]:
        return set(zip(self.edge_u.tolist(), self.edge_v.tolist()))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        np.add.at(deg, self.edge_u, 1)
        np.add.at(deg, self.edge_v, 1)
        return deg


class ObservableGraph:
    """A p_nv-masked view of a base graph, shared by both parties."""

    __slots__ = ("base", "p_nv", "view", "_degrees", "_within2")

    def __init__(self, base: Graph, p_nv: float, visible: np.ndarray):
        self.base = base
        self.p_nv = p_nv
        edges = zip(base.edge_u[visible].tolist(), base.edge_v[visible].tolist())
        self.view = Graph(base.n, edges)
        self._degrees: np.ndarray | None = None
        self._within2: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def num_visible_edges(self) -> int:
        return self.view.num_edges

    @property
    def adjacency(self) -> list[list[int]]:
        return self.view.adjacency

    @property
    def edge_u(self) -> np.ndarray:
        return self.view.edge_u

    @property
    def edge_v(self) -> np.ndarray:
        return self.view.edge_v

    def degrees(self) -> np.ndarray:
        if self._degrees is None:
            self._degrees = self.view.degrees()
        return self._degrees

    def within2_counts(self) -> np.ndarray:
        """Size of every node's 1-to-2-hop neighborhood (cached)."""
        if self._within2 is None:
            self._within2 = np.fromiter(
                (within_d_hops(self, v, 2) for v in range(self.n)),
                dtype=np.int64,
                count=self.n,
            )
        return self._within2


def full_view(g: Graph) -> ObservableGraph:
    """The fully visible observable graph (p_nv = 1)."""
    return ObservableGraph(g, 1.0, np.ones(g.num_edges, dtype=bool))


def mask_network(g: Graph, p_nv: float, rng_seed: int | np.random.Generator) -> ObservableGraph:
    """Sample the visible-edge view: each edge kept with probability p_nv.

    Deterministic for a fixed seed; both parties plan on the same view
    within an episode.
    """
    if not 0.0 <= p_nv <= 1.0:
        raise ValueError(f"p_nv={p_nv} outside [0, 1]")
    if p_nv >= 1.0:
        return full_view(g)
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    visible = rng.random(g.num_edges) < p_nv
    return ObservableGraph(g, p_nv, visible)


def degree(g: ObservableGraph, v: int) -> int:
    if not 0 <= v < g.n:
        raise IndexError(f"node {v} out of range")
    return len(g.adjacency[v])


def free_degree(g: ObservableGraph, v: int, free) -> int:
    """Number of visible neighbors of v inside the free set."""
    if not 0 <= v < g.n:
        raise IndexError(f"node {v} out of range")
    if isinstance(free, np.ndarray) and free.dtype == bool:
        return int(sum(1 for nb in g.adjacency[v] if free[nb]))
    free_set = free if isinstance(free, (set, frozenset)) else set(free)
    return sum(1 for nb in g.adjacency[v] if nb in free_set)


def free_degrees(g: ObservableGraph, free_mask: np.ndarray) -> np.ndarray:
    """Vectorized free degree of every node given a boolean free mask."""
    out = np.zeros(g.n, dtype=np.int64)
    eu, ev = g.edge_u, g.edge_v
    np.add.at(out, eu, free_mask[ev].astype(np.int64))
    np.add.at(out, ev, free_mask[eu].astype(np.int64))
    return out


def within_d_hops(g: ObservableGraph, v: int, d: int) -> int:
    """Distinct nodes at BFS distance 1..d from v (v itself excluded)."""
    if not 0 <= v < g.n:
        raise IndexError(f"node {v} out of range")
    if d < 1:
        raise ValueError(f"hop count d={d} must be >= 1")
    seen = {v}
    frontier = [v]
    count = 0
    adjacency = g.adjacency
    for _ in range(d):
        nxt = []
        for node in frontier:
            for nb in adjacency[node]:
                if nb not in seen:
                    seen.add(nb)
                    nxt.append(nb)
        count += len(nxt)
        if not nxt:
            break
        frontier = nxt
    return count


def spectral_communities(
    g: ObservableGraph, k: int, rng_seed: int | np.random.Generator
) -> np.ndarray:
    """Normalized-Laplacian spectral embedding clustered by k-means.

    Embeds every node into the k eigenvectors of L = I - D^{-1/2} A D^{-1/2}
    with the smallest eigenvalues (sparse Lanczos with a seeded start
    vector; dense fallback for small graphs), row-normalizes, and clusters
    with seeded k-means++. Labels cover [0, k); deterministic for a fixed
    seed.
    """
    if not 1 <= k <= g.n:
        raise ValueError(f"community count k={k} out of range [1, {g.n}]")
    if k == 1:
        return np.zeros(g.n, dtype=np.int64)
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)

    n = g.n
    eu, ev = g.edge_u, g.edge_v
    ones = np.ones(eu.size)
    adj = sparse.coo_matrix(
        (np.concatenate([ones, ones]),
         (np.concatenate([eu, ev]), np.concatenate([ev, eu]))),
        shape=(n, n),
    ).tocsr()
    deg = np.asarray(adj.sum(axis=1)).ravel()
    inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.maximum(deg, 1e-12)), 0.0)
    scaling = sparse.diags(inv_sqrt)
    lap = sparse.identity(n) - scaling @ adj @ scaling

    embedding: np.ndarray | None = None
    if k < n - 1 and n >= 64:
        v0 = rng.standard_normal(n)
        try:
            _, vecs = eigsh(lap, k=k, which="SA", v0=v0)
            embedding = vecs
        except (ArpackError, ArpackNoConvergence):
            embedding = None
    if embedding is None:
        _, eigvecs = np.linalg.eigh(lap.toarray())
        embedding = eigvecs[:, :k]
    norms = np.linalg.norm(embedding, axis=1, keepdims=True)
    embedding = embedding / np.maximum(norms, 1e-12)
    _, labels = kmeans2(embedding, k, minit="++", seed=rng)
    return labels.astype(np.int64)


def load_edge_list(
    source: str | Path | IO, fmt: EdgeListFormat = EdgeListFormat.PLAIN, index_base: int = 1
) -> Graph:
    """Parse a whitespace-separated edge list into a Graph.

    PLAIN lines hold two integer ids; '%' and '#' start comment lines.
    MATRIX_MARKET input skips the '%%' header, reads the dimension line,
    and treats entries as 1-indexed. Inputs are normalized to 0-indexed
    ids; self-loops and duplicate edges are dropped.
    """
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            return load_edge_list(fh, fmt=fmt, index_base=index_base)
    raw = source.read()
    text = raw.decode() if isinstance(raw, bytes) else raw

    lines = text.splitlines()
    edges: list[tuple[int, int]] = []
    declared_n: int | None = None
    saw_dimensions = False
    max_id = -1
    if fmt is EdgeListFormat.MATRIX_MARKET:
        index_base = 1

    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(("%", "#")):
            continue
        parts = stripped.split()
        if fmt is EdgeListFormat.MATRIX_MARKET and not saw_dimensions:
            if len(parts) < 2:
                raise ValueError(f"line {lineno}: bad matrix market dimension line")
            try:
                rows, cols = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: bad matrix market dimensions") from exc
            declared_n = max(rows, cols)
            saw_dimensions = True
            continue
        if len(parts) < 2:
            raise ValueError(f"line {lineno}: expected two node ids, got {stripped!r}")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: non-integer node id in {stripped!r}") from exc
        a -= index_base
        b -= index_base
        if a < 0 or b < 0:
            raise ValueError(f"line {lineno}: node id below index base")
        if declared_n is not None and (a >= declared_n or b >= declared_n):
            raise ValueError(f"line {lineno}: node id exceeds declared size {declared_n}")
        max_id = max(max_id, a, b)
        if a == b:
            continue
        edges.append((a, b))

    if declared_n is not None:
        n = declared_n
    elif max_id >= 0:
        n = max_id + 1
    else:
        raise ValueError("empty edge-list stream")
    return Graph(n, edges)


def write_community_csv(path: str | Path, labels: np.ndarray) -> None:
    """Export per-node community labels as (node_id, label) CSV."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("node_id,label\n")
        for i, lab in enumerate(labels.tolist()):
            fh.write(f"{i},{lab}\n")
