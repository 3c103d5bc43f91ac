"""Network construction and structural statistics.

Graphs are stored as in-neighbour lists in row-compressed form: the
in-neighbours of node ``i`` are ``indices[indptr[i]:indptr[i+1]]``, sorted
and duplicate free, and ``A[i, n] = 1`` means an edge ``n -> i``.  Node ids
``0..L-1`` are low-degree nodes and ``L..N-1`` are hubs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from hcm.torus import SplitMix64


@dataclass(frozen=True)
class NetworkGraph:
    n_nodes: int
    n_low: int
    indptr: np.ndarray
    indices: np.ndarray
    directed: bool
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @property
    def n_hubs(self) -> int:
        return self.n_nodes - self.n_low

    @property
    def in_degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def n_edges(self) -> int:
        return int(self.indptr[-1])

    def in_neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(len(self.indices), dtype=np.float64)
        return sp.csr_matrix(
            (data, self.indices.copy(), self.indptr.copy()), shape=(self.n_nodes, self.n_nodes)
        )

    def edges(self):
        """(src, dst) pairs; undirected graphs list each edge once with src < dst."""
        dst = np.repeat(np.arange(self.n_nodes), self.in_degrees)
        src = np.asarray(self.indices)
        if not self.directed:
            keep = src < dst
            return src[keep], dst[keep]
        return src, dst

    def check(self) -> None:
        """Full structural scan; raises AssertionError on violation."""
        n = self.n_nodes
        assert 0 <= self.n_low <= n
        assert self.indptr[0] == 0 and len(self.indptr) == n + 1
        assert np.all(np.diff(self.indptr) >= 0)
        idx = self.indices
        assert np.all((idx >= 0) & (idx < n)), "ids out of range"
        rows = np.repeat(np.arange(n), self.in_degrees)
        assert not np.any(idx == rows), "self-loop"
        same_row = rows[1:] == rows[:-1]
        assert np.all(idx[1:][same_row] > idx[:-1][same_row]), "unsorted or duplicate neighbours"
        if not self.directed:
            a = self.adjacency()
            assert (a != a.T).nnz == 0, "undirected graph with asymmetric adjacency"


def from_rows(rows: Sequence[np.ndarray], n_low: int, directed: bool, meta=None) -> NetworkGraph:
    rows = [np.unique(np.asarray(r, dtype=np.int64)) for r in rows]
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    indices = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    return NetworkGraph(len(rows), n_low, indptr, indices.astype(np.int64), directed, dict(meta or {}))


def from_edges(n: int, n_low: int, src, dst, directed: bool, meta=None) -> NetworkGraph:
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if not directed:
        src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
    a = sp.csr_matrix((np.ones(len(src)), (dst, src)), shape=(n, n))
    a.sum_duplicates()
    a.sort_indices()
    return NetworkGraph(
        n, n_low, a.indptr.astype(np.int64), a.indices.astype(np.int64), directed, dict(meta or {})
    )


def symmetrized(g: NetworkGraph) -> NetworkGraph:
    """Undirected graph with A_sym = A or A^T."""
    if not g.directed:
        return g
    src, dst = g.edges()
    meta = dict(g.meta, symmetrized_from="directed")
    return from_edges(g.n_nodes, g.n_low, src, dst, directed=False, meta=meta)


def make_star(n_low: int) -> NetworkGraph:
    if n_low < 1:
        raise ValueError("star needs L >= 1")
    indptr = np.zeros(n_low + 2, dtype=np.int64)
    indptr[-1] = n_low
    return NetworkGraph(
        n_low + 1, n_low, indptr, np.arange(n_low, dtype=np.int64), True, {"generator": "star"}
    )


def _sample_rows(rng: SplitMix64, n_rows: int, k: int, pool: int, skip: np.ndarray | None):
    """``n_rows`` draws of ``k`` distinct values from ``range(pool)``.

    With ``skip`` given, row r draws from ``range(pool + 1)`` minus ``skip[r]``.
    Duplicates within a row are re-sampled until none remain.
    """
    if k == 0 or n_rows == 0:
        return np.zeros((n_rows, 0), dtype=np.int64)
    out = rng.integers(pool, n_rows * k).reshape(n_rows, k)
    if skip is not None:
        out += out >= skip[:, None]
    while True:
        srt = np.sort(out, axis=1)
        dup_rows = np.nonzero(np.any(srt[:, 1:] == srt[:, :-1], axis=1))[0]
        if len(dup_rows) == 0:
            return np.sort(out, axis=1)
        for r in dup_rows:
            row = out[r]
            _, first = np.unique(row, return_index=True)
            bad = np.setdiff1d(np.arange(k), first)
            fresh = rng.integers(pool, len(bad))
            if skip is not None:
                fresh += fresh >= skip[r]
            row[bad] = fresh


def make_layered(
    d: int,
    delta: int,
    layers: Sequence[tuple[float, int]],
    n_low: int,
    seed: int,
    hub_from_all: bool = False,
) -> NetworkGraph:
    """Layered heterogeneous digraph.

    ``n_low`` nodes of in-degree ``d`` whose in-neighbours are drawn from all
    other nodes, followed by one block of hubs per ``(kappa, count)`` layer,
    each hub of in-degree ``round(kappa * delta)``.  Hub in-neighbours come
    from the low nodes unless ``hub_from_all`` is set.
    """
    kappas = [float(k) for k, _ in layers]
    counts = [int(m) for _, m in layers]
    if any(not (0 < k <= 1) for k in kappas):
        raise ValueError("layer kappas must lie in (0, 1]")
    if any(b >= a for a, b in zip(kappas, kappas[1:])):
        raise ValueError("layer kappas must be strictly decreasing")
    if any(m < 0 for m in counts) or n_low < 0 or d < 0 or delta < 0:
        raise ValueError("counts must be nonnegative")
    n_hubs = sum(counts)
    n = n_low + n_hubs
    if d > n_low or (d > 0 and d > n - 1):
        raise ValueError(f"low in-degree d={d} infeasible for L={n_low}")
    hub_deg = [int(round(k * delta)) for k in kappas]
    pool = n - 1 if hub_from_all else n_low
    for k, dk in zip(kappas, hub_deg):
        if dk > pool:
            raise ValueError(f"hub degree {dk} (kappa={k}) exceeds available sources {pool}")

    rng = SplitMix64(seed, 0x1A7E)
    rows: list[np.ndarray] = []
    low = _sample_rows(rng, n_low, d, n - 1, np.arange(n_low))
    rows.extend(low)
    layer_of_hub = []
    hub_id = n_low
    for li, (m, dk) in enumerate(zip(counts, hub_deg)):
        ids = np.arange(hub_id, hub_id + m)
        if hub_from_all:
            block = _sample_rows(rng, m, dk, n - 1, ids)
        else:
            block = _sample_rows(rng, m, dk, n_low, None)
        rows.extend(block)
        layer_of_hub.extend([li] * m)
        hub_id += m
    meta = {
        "generator": "layered",
        "requested_kappas": kappas,
        "realized_hub_degrees": hub_deg,
        "layer_of_hub": layer_of_hub,
        "hub_sources": "all" if hub_from_all else "low",
        "seed": seed,
    }
    return from_rows(rows, n_low, True, meta)


def make_erdos_renyi(n: int, p: float, seed: int) -> NetworkGraph:
    if not (0.0 <= p <= 1.0):
        raise ValueError("p must lie in [0, 1]")
    iu, ju = np.triu_indices(n, k=1)
    u = SplitMix64(seed, 0xE5).random(len(iu))
    keep = u < p
    return from_edges(n, n, iu[keep], ju[keep], directed=False, meta={"generator": "erdos_renyi", "p": p})


def check_admissible(weights, n_hubs: int) -> float:
    """Return rho = 1/sum(w); raise ValueError unless w_N w_L rho <= 1."""
    w = np.asarray(weights, dtype=np.float64)
    n = len(w)
    if n == 0 or np.any(w <= 0) or np.any(np.diff(w) < 0):
        raise ValueError("weights must be positive and nondecreasing")
    if not (0 <= n_hubs < n):
        raise ValueError("need 0 <= M < N")
    rho = 1.0 / w.sum()
    n_low = n - n_hubs
    if w[-1] * w[n_low - 1] * rho > 1.0:
        raise ValueError(
            f"weights not admissible: w_N*w_L*rho = {w[-1] * w[n_low - 1] * rho:.6g} > 1"
        )
    return rho


def make_chung_lu_hubs(weights, n_hubs: int, hub_p: float, seed: int) -> NetworkGraph:
    """Directed random graph with independent entries.

    P(A_in = 1) = w_i w_n rho when i or n is a low node, ``hub_p`` between two
    hubs; the diagonal is excluded.
    """
    if not (0.0 <= hub_p <= 1.0):
        raise ValueError("hub_p must lie in [0, 1]")
    w = np.asarray(weights, dtype=np.float64)
    rho = check_admissible(w, n_hubs)
    n = len(w)
    n_low = n - n_hubs
    rng = SplitMix64(seed, 0xC1)
    rows = []
    for i in range(n):
        prob = w[i] * w * rho
        if i >= n_low:
            prob[n_low:] = hub_p
        u = rng.random(n)
        hit = u < prob
        hit[i] = False
        rows.append(np.nonzero(hit)[0])
    return from_rows(rows, n_low, True, {"generator": "chung_lu_hubs", "rho": rho, "hub_p": hub_p})


def make_ring(n: int, k: int) -> NetworkGraph:
    if k < 0 or 2 * k >= n:
        raise ValueError(f"ring needs 2K < N (got N={n}, K={k})")
    i = np.arange(n)
    src = np.concatenate([i] * k) if k else np.zeros(0, dtype=np.int64)
    dst = np.concatenate([(i + s) % n for s in range(1, k + 1)]) if k else np.zeros(0, dtype=np.int64)
    return from_edges(n, n, src, dst, directed=False, meta={"generator": "ring", "K": k})


@dataclass(frozen=True)
class DegreeProfile:
    in_degrees: np.ndarray
    delta_max: int
    delta_low: int
    kappas: np.ndarray
    notes: str = "delta_low is the max in-degree over all low nodes 0..L-1"


def degree_profile(g: NetworkGraph) -> DegreeProfile:
    deg = g.in_degrees
    big = int(deg.max()) if len(deg) else 0
    small = int(deg[: g.n_low].max()) if g.n_low else 0
    kap = deg[g.n_low :] / big if big > 0 else np.zeros(g.n_hubs)
    return DegreeProfile(deg, big, small, kap)


@dataclass(frozen=True)
class HeterogeneityReport:
    p: float
    q: float
    h1: float
    h2: float
    h3: float
    h4: float

    @property
    def eta(self) -> float:
        return max(self.h1, self.h2, self.h3, self.h4)


def heterogeneity_eta(profile: DegreeProfile, n_low: int, n_hubs: int, p: float) -> HeterogeneityReport:
    """Values of the four smallness conditions for exponent ``p``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    big = float(profile.delta_max)
    small = float(profile.delta_low)
    if big <= 0:
        raise ValueError("delta_max must be positive")
    q = math.inf if p == 1 else p / (p - 1.0)
    L, M = float(n_low), float(n_hubs)
    h1 = 0.0 if small == 0 else L ** (1 / p) * small ** (1 / q) / big
    h2 = big ** (-1 / p) * M ** (2 / p)
    h3 = M * L ** (1 / p) / big
    h4 = L ** (1 + 2 / p) * small / big**2
    return HeterogeneityReport(float(p), q, h1, h2, h3, h4)


def eta_search(profile: DegreeProfile, n_low: int, n_hubs: int, p_grid):
    """Grid point minimizing eta, with its report."""
    if len(p_grid) == 0:
        raise ValueError("empty p grid")
    reports = [heterogeneity_eta(profile, n_low, n_hubs, p) for p in p_grid]
    best = min(range(len(reports)), key=lambda i: reports[i].eta)
    return float(p_grid[best]), reports[best]


def bfs_eccentricities(g: NetworkGraph, sources=None) -> np.ndarray:
    """Eccentricity of each source (inf when some node is unreachable)."""
    n = g.n_nodes
    src_list = range(n) if sources is None else sources
    out = []
    for s in src_list:
        dist = np.full(n, -1, dtype=np.int64)
        dist[s] = 0
        frontier = np.array([s])
        level = 0
        while len(frontier):
            level += 1
            nb = np.concatenate([g.in_neighbors(v) for v in frontier])
            nb = np.unique(nb)
            nb = nb[dist[nb] < 0]
            dist[nb] = level
            frontier = nb
        out.append(np.inf if np.any(dist < 0) else float(dist.max()))
    return np.asarray(out)


def diameter(g: NetworkGraph, sources=None) -> float:
    ecc = bfs_eccentricities(g, sources)
    return float(ecc.max()) if len(ecc) else 0.0


def write_edge_list(g: NetworkGraph, path) -> None:
    kind = "directed" if g.directed else "undirected"
    src, dst = g.edges()
    with open(path, "w") as fh:
        fh.write(f"# {kind} N={g.n_nodes} L={g.n_low} M={g.n_hubs}\n")
        for s, t in zip(src.tolist(), dst.tolist()):
            fh.write(f"{s} {t}\n")


def read_edge_list(path) -> NetworkGraph:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 5 or header[0] != "#" or header[1] not in ("directed", "undirected"):
            raise ValueError(f"bad edge-list header in {path}")
        fields = dict(tok.split("=") for tok in header[2:])
        n, n_low, m = int(fields["N"]), int(fields["L"]), int(fields["M"])
        if n != n_low + m:
            raise ValueError("header N != L + M")
        pairs = np.loadtxt(fh, dtype=np.int64, ndmin=2)
    if pairs.size == 0:
        pairs = np.zeros((0, 2), dtype=np.int64)
    return from_edges(n, n_low, pairs[:, 0], pairs[:, 1], directed=header[1] == "directed")
