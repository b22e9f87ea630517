"""Undirected simple graphs: ingestion, degree statistics, sampling, centrality.

Node ids are dense 0-based integers.  An optional sidecar file ``<path>.labels``
maps them to external string labels (one ``<id> <label>`` pair per line).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataFormatError, NonConvergenceError
from .likelihood import SbmParams, sigmoid

# Below this many pairs the homogeneous block is sampled edge by edge;
# above it, a binomial count plus a uniform draw of distinct pairs.
GROUPED_BLOCK_THRESHOLD = 10_000


@dataclass(frozen=True)
class Graph:
    """Immutable undirected simple graph with cached degree statistics."""

    n: int
    edges: np.ndarray  # (m, 2) int array, each row (u, v) with u < v, unique
    degrees: np.ndarray = field(init=False)
    d_plus: int = field(init=False)
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            u, v = edges[:, 0], edges[:, 1]
            if (u == v).any():
                raise ValueError("self loops are not allowed")
            if u.min() < 0 or edges.max() >= self.n:
                raise ValueError("edge endpoint out of range")
            edges = np.sort(edges, axis=1)
            order = np.lexsort((edges[:, 1], edges[:, 0]))
            edges = edges[order]
            if len(np.unique(edges[:, 0] * self.n + edges[:, 1])) != len(edges):
                raise ValueError("duplicate edges are not allowed")
        degrees = np.bincount(edges.ravel(), minlength=self.n).astype(np.int64)
        edges.setflags(write=False)
        degrees.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "degrees", degrees)
        object.__setattr__(self, "d_plus", int(len(edges)))
        if self.labels is not None and len(self.labels) != self.n:
            raise ValueError("labels length must equal n")

    @property
    def max_edges(self) -> int:
        return self.n * (self.n - 1) // 2

    def density(self) -> float:
        return self.d_plus / self.max_edges if self.n > 1 else 0.0

    def adjacency(self) -> np.ndarray:
        """Dense symmetric 0/1 adjacency matrix."""
        a = np.zeros((self.n, self.n))
        if self.d_plus:
            u, v = self.edges[:, 0], self.edges[:, 1]
            a[u, v] = 1.0
            a[v, u] = 1.0
        return a

    def adjacency_matvec(self, x: np.ndarray) -> np.ndarray:
        """A @ x without materialising the n-by-n matrix."""
        y = np.zeros(self.n)
        if self.d_plus:
            u, v = self.edges[:, 0], self.edges[:, 1]
            np.add.at(y, u, x[v])
            np.add.at(y, v, x[u])
        return y

    def relabel(self, perm: np.ndarray) -> "Graph":
        """New graph with node i renamed to perm[i]."""
        perm = np.asarray(perm, dtype=np.int64)
        return Graph(self.n, perm[self.edges])


@dataclass(frozen=True)
class DegreePartition:
    """Nodes grouped by distinct degree, in decreasing degree order.

    ``cumulative`` lists the admissible sparsity levels: the running group
    sizes excluding the final total n.
    """

    distinct: tuple[int, ...]
    groups: tuple[tuple[int, ...], ...]
    sizes: tuple[int, ...]
    cumulative: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.distinct)


def degree_partition(g: Graph) -> DegreePartition:
    """Group nodes by distinct degree value, largest degree first."""
    values, inverse = np.unique(g.degrees, return_inverse=True)
    distinct = values[::-1]
    groups = []
    for k, d in enumerate(distinct):
        idx = np.flatnonzero(inverse == len(values) - 1 - k)
        groups.append(tuple(int(i) for i in idx))
    sizes = tuple(len(grp) for grp in groups)
    cumulative = tuple(np.cumsum(sizes[:-1]).tolist()) if len(sizes) > 1 else ()
    return DegreePartition(
        distinct=tuple(int(d) for d in distinct),
        groups=tuple(groups),
        sizes=sizes,
        cumulative=tuple(int(c) for c in cumulative),
    )


def load_edge_list(path: str | Path) -> Graph:
    """Read a whitespace-separated edge list.

    Format: optional first line ``n=<int>``; lines starting with ``#`` are
    comments; every other line is ``<u> <v>`` with u != v.  Self loops,
    duplicate edges and ids outside a declared ``n`` are rejected with the
    offending line number.  A sidecar ``<path>.labels`` is picked up when
    present.
    """
    path = Path(path)
    declared_n = None
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    max_id = -1
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if declared_n is None and not edges and line.startswith("n="):
                try:
                    declared_n = int(line[2:])
                except ValueError:
                    raise DataFormatError(f"{path}:{lineno}: bad header {line!r}")
                if declared_n < 1:
                    raise DataFormatError(f"{path}:{lineno}: n must be >= 1")
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DataFormatError(
                    f"{path}:{lineno}: expected two node ids, got {line!r}"
                )
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: non-integer node id in {line!r}")
            if u < 0 or v < 0:
                raise DataFormatError(f"{path}:{lineno}: negative node id")
            if u == v:
                raise DataFormatError(f"{path}:{lineno}: self loop at node {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise DataFormatError(f"{path}:{lineno}: duplicate edge {u} {v}")
            seen.add(key)
            edges.append(key)
            max_id = max(max_id, v, u)
    if declared_n is not None and max_id >= declared_n:
        raise DataFormatError(
            f"{path}: node id {max_id} exceeds declared n={declared_n}"
        )
    n = declared_n if declared_n is not None else max_id + 1
    if n < 1:
        raise DataFormatError(f"{path}: no nodes (empty file without header)")
    labels = _load_labels(path, n)
    return Graph(n, np.array(edges, dtype=np.int64).reshape(-1, 2), labels=labels)


def _load_labels(path: Path, n: int) -> tuple[str, ...] | None:
    sidecar = path.with_name(path.name + ".labels")
    if not sidecar.exists():
        return None
    labels = [""] * n
    with open(sidecar, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(maxsplit=1)
            if len(parts) != 2:
                raise DataFormatError(f"{sidecar}:{lineno}: expected '<id> <label>'")
            try:
                i = int(parts[0])
            except ValueError:
                raise DataFormatError(f"{sidecar}:{lineno}: non-integer node id")
            if not 0 <= i < n:
                raise DataFormatError(f"{sidecar}:{lineno}: node id {i} out of range")
            labels[i] = parts[1]
    return tuple(labels)


def write_edge_list(g: Graph, path: str | Path) -> None:
    """Write a graph in the format accepted by :func:`load_edge_list`."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"n={g.n}\n")
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")
    if g.labels is not None:
        with open(path.with_name(path.name + ".labels"), "w", encoding="utf-8") as fh:
            for i, lab in enumerate(g.labels):
                fh.write(f"{i} {lab}\n")


def _decode_pairs(linear: np.ndarray, m: int) -> np.ndarray:
    """Map linear indices in [0, C(m,2)) to pairs (i, j), i < j, row-major."""
    linear = np.asarray(linear, dtype=np.float64)
    # Row i starts at offset i*m - i*(i+3)/2 ... solved via the quadratic root,
    # then corrected for floating error.
    i = np.floor((2 * m - 1 - np.sqrt((2 * m - 1) ** 2 - 8 * linear)) / 2).astype(
        np.int64
    )
    row_start = i * (2 * m - i - 1) // 2
    too_far = row_start > linear
    while too_far.any():
        i[too_far] -= 1
        row_start = i * (2 * m - i - 1) // 2
        too_far = row_start > linear
    row_end = (i + 1) * (2 * m - i - 2) // 2
    overshoot = linear >= row_end
    while overshoot.any():
        i[overshoot] += 1
        row_start = i * (2 * m - i - 1) // 2
        row_end = (i + 1) * (2 * m - i - 2) // 2
        overshoot = linear >= row_end
    j = (linear - row_start).astype(np.int64) + i + 1
    return np.column_stack([i, j])


def sample_sbm(params: SbmParams, seed, *, block_threshold: int = GROUPED_BLOCK_THRESHOLD) -> Graph:
    """Draw a graph with independent edges p_ij = logistic(mu + beta_i + beta_j).

    Deterministic given ``seed``.  The homogeneous block (both endpoints with
    beta zero) is sampled as one binomial count followed by a uniform choice of
    distinct pairs once it exceeds ``block_threshold`` pairs; this is
    distributionally identical to per-pair Bernoulli draws.
    """
    rng = _as_generator(seed)
    n = params.n
    support = np.asarray(params.support, dtype=np.int64)
    s = len(support)
    others = np.setdiff1d(np.arange(n), support)
    beta_s = params.beta[support]
    rows: list[np.ndarray] = []

    if s >= 2:
        iu, ju = np.triu_indices(s, k=1)
        p_in = sigmoid(params.mu + beta_s[iu] + beta_s[ju])
        keep = rng.random(len(p_in)) < p_in
        if keep.any():
            rows.append(np.column_stack([support[iu[keep]], support[ju[keep]]]))

    if s >= 1 and len(others):
        for i, b in zip(support, beta_s):
            p = sigmoid(params.mu + b)
            keep = rng.random(len(others)) < p
            if keep.any():
                rows.append(
                    np.column_stack([np.full(keep.sum(), i, dtype=np.int64), others[keep]])
                )

    m = len(others)
    n_pairs = m * (m - 1) // 2
    if n_pairs:
        p0 = float(sigmoid(params.mu))
        if n_pairs > block_threshold:
            count = int(rng.binomial(n_pairs, p0))
            if count:
                chosen = rng.choice(n_pairs, size=count, replace=False)
                chosen.sort()
                local = _decode_pairs(chosen, m)
                rows.append(others[local])
        else:
            iu, ju = np.triu_indices(m, k=1)
            keep = rng.random(n_pairs) < p0
            if keep.any():
                rows.append(np.column_stack([others[iu[keep]], others[ju[keep]]]))

    edges = np.concatenate(rows, axis=0) if rows else np.empty((0, 2), dtype=np.int64)
    return Graph(n, edges)


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def connected_components(g: Graph) -> list[np.ndarray]:
    """Node index arrays of the connected components (ascending order)."""
    parent = np.arange(g.n)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in g.edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    roots = np.array([find(i) for i in range(g.n)])
    comps = [np.flatnonzero(roots == r) for r in np.unique(roots)]
    return comps


def eigenvector_centrality(
    g: Graph, tol: float = 1e-10, max_iter: int = 100_000
) -> np.ndarray:
    """Principal nonnegative eigenvector of the adjacency, scaled to 2-norm n.

    Power iteration from the uniform positive vector; stops when
    ||A x - lambda x||_2 <= tol * ||x||_2.  Raises on graphs without edges and
    on non-convergence (residual attached to the error).  When several
    components share the top eigenvalue the result is not unique and a
    warning is emitted.
    """
    if g.d_plus == 0:
        raise ValueError("eigenvector centrality needs at least one edge")
    x = np.full(g.n, 1.0 / np.sqrt(g.n))
    residual = np.inf
    for _ in range(max_iter):
        y = g.adjacency_matvec(x)
        lam = float(x @ y)
        residual = float(np.linalg.norm(y - lam * x))
        if residual <= tol:
            break
        # Iterate on A + I: same eigenvectors, but the Perron root is
        # strictly dominant even on bipartite graphs (lambda_min = -lambda_max).
        y = y + x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            raise NonConvergenceError("power iteration collapsed to zero", residual=residual)
        x = y / norm
    else:
        raise NonConvergenceError(
            f"power iteration did not reach residual {tol} in {max_iter} steps",
            residual=residual,
        )
    x = np.abs(x)
    comps = connected_components(g)
    if len(comps) > 1:
        mass = np.array([np.abs(x[c]).max() for c in comps])
        if (mass > 1e-6 * mass.max()).sum() > 1:
            warnings.warn(
                "top eigenvalue is shared across components; "
                "eigenvector centrality is not unique",
                stacklevel=2,
            )
    return x * (g.n / np.linalg.norm(x))
