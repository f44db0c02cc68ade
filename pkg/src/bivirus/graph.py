"""Graph loading/validation and the Perron-Frobenius spectral primitive."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import GraphFormatError, SpectralError


def _bfs_reachable(pattern: np.ndarray, start: int = 0) -> np.ndarray:
    """Boolean reachability mask from ``start`` over a nonzero pattern."""
    n = pattern.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    queue = deque([start])
    while queue:
        i = queue.popleft()
        for j in np.nonzero(pattern[i])[0]:
            if not seen[j]:
                seen[j] = True
                queue.append(int(j))
    return seen


def pattern_strongly_connected(mat: np.ndarray) -> bool:
    """True when the off-diagonal nonzero pattern is strongly connected."""
    pattern = np.abs(mat) > 0.0
    np.fill_diagonal(pattern, False)
    if pattern.shape[0] == 1:
        return True
    return bool(_bfs_reachable(pattern).all() and _bfs_reachable(pattern.T).all())


class Graph:
    """Undirected, connected, simple graph held as a dense 0/1 adjacency.

    Instances are immutable after construction and safe to share across
    threads. ``labels`` records the original node labels in first-seen order
    so edge lists can be round-tripped.
    """

    __slots__ = ("n", "labels", "edges", "_adj")

    def __init__(self, adjacency: np.ndarray, labels: list[str] | None = None):
        adj = np.array(adjacency, dtype=np.float64, order="C")
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise GraphFormatError("adjacency must be a square matrix")
        n = adj.shape[0]
        if not np.array_equal(adj, adj.T):
            raise GraphFormatError("adjacency must be symmetric")
        if np.any(np.diag(adj) != 0.0):
            raise GraphFormatError("self-loops are not allowed")
        if not np.isin(adj, (0.0, 1.0)).all():
            raise GraphFormatError("adjacency entries must be 0 or 1")
        reached = _bfs_reachable(adj > 0.0)
        if not reached.all():
            lbls = labels if labels is not None else [str(i) for i in range(n)]
            far = int(np.nonzero(~reached)[0][0])
            raise GraphFormatError(
                f"graph is disconnected: no path between nodes "
                f"{lbls[0]!r} and {lbls[far]!r}")
        if labels is None:
            labels = [str(i) for i in range(n)]
        elif len(labels) != n:
            raise GraphFormatError("labels length must equal node count")

        adj.setflags(write=False)
        self.n = n
        self.labels = tuple(labels)
        iu, ju = np.nonzero(np.triu(adj))
        self.edges = frozenset((int(i), int(j)) for i, j in zip(iu, ju))
        self._adj = adj

    @property
    def adjacency(self) -> np.ndarray:
        """Read-only n x n 0/1 adjacency matrix."""
        return self._adj

    @classmethod
    def from_edges(cls, edges, n: int | None = None, labels=None) -> "Graph":
        edges = [(int(u), int(v)) for u, v in edges]
        if n is None:
            n = max(max(u, v) for u, v in edges) + 1
        adj = np.zeros((n, n))
        for u, v in edges:
            adj[u, v] = 1.0
            adj[v, u] = 1.0
        return cls(adj, labels)

    def to_edge_list(self) -> str:
        """Edge-list text using the recorded labels (round-trip output)."""
        lines = [f"{self.labels[i]} {self.labels[j]}"
                 for i, j in sorted(self.edges)]
        return "\n".join(lines) + "\n"

    def degree_bounds(self) -> tuple[int, int]:
        deg = self._adj.sum(axis=1).astype(int)
        return int(deg.min()), int(deg.max())

    def __repr__(self):
        return f"Graph(n={self.n}, edges={len(self.edges)})"


def load_edge_list(source) -> Graph:
    """Parse edge-list text into a validated Graph.

    ``source`` may be a string of text, an open text file, or an iterable of
    lines. Each non-comment line holds two whitespace-separated labels; '#'
    starts a comment line; blank lines are ignored. Labels map to dense
    0-based indices in first-seen order; duplicate and reversed duplicate
    edges collapse.
    """
    if isinstance(source, str):
        lines = source.splitlines()
    elif hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        lines = [str(line).rstrip("\n") for line in source]

    index: dict[str, int] = {}
    labels: list[str] = []
    edges: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(lines, 1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        tokens = text.split()
        if len(tokens) != 2:
            raise GraphFormatError(
                f"expected two whitespace-separated labels, got {text!r}",
                line=lineno)
        u_lbl, v_lbl = tokens
        if u_lbl == v_lbl:
            raise GraphFormatError(f"self-loop on node {u_lbl!r}", line=lineno)
        for lbl in (u_lbl, v_lbl):
            if lbl not in index:
                index[lbl] = len(labels)
                labels.append(lbl)
        u, v = index[u_lbl], index[v_lbl]
        edges.add((min(u, v), max(u, v)))

    if not edges:
        raise GraphFormatError("empty input: no edges found")
    return Graph.from_edges(sorted(edges), n=len(labels), labels=labels)


def degrees(g: Graph) -> tuple[int, int]:
    """(d_min, d_max) of the graph, exact row sums of the adjacency."""
    return g.degree_bounds()


@dataclass(frozen=True)
class SpectralResult:
    """Dominant eigenpair of a Metzler matrix.

    ``value`` is the largest real part among eigenvalues; ``vector`` is the
    strictly positive eigenvector normalized to unit max-norm; ``residual``
    is ||M v - value v||_inf for the returned pair.
    """

    value: float
    vector: np.ndarray = field(repr=False)
    iterations: int
    residual: float


def pf_eigen(mat: np.ndarray, tol: float = 1e-10,
             max_iter: int = 100_000) -> SpectralResult:
    """Perron-Frobenius eigenpair of an irreducible Metzler matrix.

    The matrix is shifted by ``c = 1 + max_i |M_ii|`` to make it nonnegative,
    power-iterated from the all-ones vector until the residual drops below
    ``tol``, and the shift subtracted from the converged value. Diagonal
    entries may be negative; off-diagonal entries must be nonnegative and
    their pattern strongly connected.
    """
    m = np.ascontiguousarray(mat, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise SpectralError("matrix must be square")
    off = m.copy()
    np.fill_diagonal(off, 0.0)
    if np.min(off) < 0.0:
        raise SpectralError("off-diagonal entries must be nonnegative")
    if not pattern_strongly_connected(m):
        raise SpectralError("matrix nonzero pattern is reducible")

    shift = 1.0 + float(np.max(np.abs(np.diag(m))))
    shifted = m + shift * np.eye(m.shape[0])
    lam, vec, iters, resid, ok = kernels.power_iteration(shifted, tol, max_iter)
    if not ok:
        raise SpectralError(
            f"power iteration did not converge in {max_iter} iterations "
            f"(last residual {resid:.3e})",
            residual=float(resid), iterations=int(iters))
    vec = np.array(vec)
    vec.setflags(write=False)
    return SpectralResult(value=float(lam - shift), vector=vec,
                          iterations=int(iters), residual=float(resid))


def complete_graph(n: int) -> Graph:
    adj = np.ones((n, n)) - np.eye(n)
    return Graph(adj)


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges([(i, (i + 1) % n) for i in range(n)], n=n)


def path_graph(n: int) -> Graph:
    return Graph.from_edges([(i, i + 1) for i in range(n - 1)], n=n)


def star_graph(n: int) -> Graph:
    """Hub node 0 joined to n-1 leaves."""
    return Graph.from_edges([(0, i) for i in range(1, n)], n=n)


def wheel_graph(n: int) -> Graph:
    """Hub node 0 joined to every node of a cycle on 1..n-1."""
    if n < 4:
        raise GraphFormatError("wheel graph needs at least 4 nodes")
    edges = [(0, i) for i in range(1, n)]
    ring = list(range(1, n))
    edges += [(ring[i], ring[(i + 1) % len(ring)]) for i in range(len(ring))]
    return Graph.from_edges(edges, n=n)
