"""Rooted graphs as quantum random variables.

A rooted graph's adjacency matrix, paired with the vector state at the
root, has a spectral distribution whose n-th moment is the number of
closed n-step walks at the root.  Comb, star, and direct products realize
monotone, Boolean, and classical independence of the adjacency operators;
spidernets realize free Meixner laws, and iterated comb products of
spidernets approximate monotone additive processes.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .measures import AtomicMeasure, MomentSequence

VERTEX_GUARD = 10**7


class GraphError(ValueError):
    pass


class BoundError(GraphError):
    """Driving function violates the spidernet existence bound."""


@dataclass(frozen=True)
class RootedGraph:
    """Finite undirected loop-free graph with a distinguished root.

    ``adj`` is a sparse 0/1 symmetric matrix with zero diagonal.
    """

    adj: sp.csr_matrix
    root: int

    def __post_init__(self):
        n = self.adj.shape[0]
        if not 0 <= self.root < n:
            raise GraphError("root index out of range")

    @property
    def n(self):
        return self.adj.shape[0]

    @classmethod
    def from_edges(cls, n, edges, root=0):
        if n > VERTEX_GUARD:
            raise GraphError(f"vertex count {n} exceeds guard {VERTEX_GUARD}")
        rows, cols = [], []
        for a, b in edges:
            if a == b:
                raise GraphError("loops are not allowed")
            rows += [a, b]
            cols += [b, a]
        adj = sp.csr_matrix(
            (np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(n, n)
        )
        adj.data[:] = 1  # collapse duplicate edge listings
        return cls(adj, root)

    @classmethod
    def single_vertex(cls):
        return cls(sp.csr_matrix((1, 1), dtype=np.int64), 0)

    def degree(self, v):
        return int(self.adj.indptr[v + 1] - self.adj.indptr[v])

    def max_degree(self):
        return int(np.diff(self.adj.indptr).max(initial=0))

    def neighbors(self, v):
        return self.adj.indices[self.adj.indptr[v]:self.adj.indptr[v + 1]]

    def depths(self):
        """BFS distances from the root (-1 for unreachable vertices)."""
        out = np.full(self.n, -1, dtype=np.int64)
        out[self.root] = 0
        frontier = [self.root]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for v in frontier:
                for w in self.neighbors(v):
                    if out[w] < 0:
                        out[w] = d
                        nxt.append(w)
            frontier = nxt
        return out

    def check_valid(self):
        if (self.adj != self.adj.T).nnz:
            raise GraphError("adjacency must be symmetric")
        if self.adj.diagonal().any():
            raise GraphError("adjacency must be loop-free")
        if self.adj.data.size and not np.all(self.adj.data == 1):
            raise GraphError("entries must be 0/1")
        return self


# ---------------------------------------------------------------------------
# basic constructions
# ---------------------------------------------------------------------------

def path_graph(vertices, root=0):
    return RootedGraph.from_edges(
        vertices, [(i, i + 1) for i in range(vertices - 1)], root
    )


def star_graph(leaves):
    return RootedGraph.from_edges(
        leaves + 1, [(0, i) for i in range(1, leaves + 1)], 0
    )


def cycle_graph(vertices, root=0):
    edges = [(i, (i + 1) % vertices) for i in range(vertices)]
    return RootedGraph.from_edges(vertices, edges, root)


@dataclass(frozen=True)
class SpidernetSpec:
    n: int
    u: int
    depth: int

    def __post_init__(self):
        if self.n < 1 or self.depth < 1:
            raise GraphError("need n >= 1 and depth >= 1")
        if not 0 <= self.u <= 2 * self.n - 1:
            raise GraphError(f"spidernet needs 0 <= u <= {2 * self.n - 1}")

    def data(self):
        return 2 * self.n, self.n + 1 + self.u, self.n


def spidernet(spec_or_n, u=None, depth=None):
    """Spidernet S_{n,u} with degree data (2n, n+1+u, n), truncated.

    The root has 2n children; every deeper vertex has n forward edges, one
    backward edge, and u lateral edges realized as a circulant inside its
    shell (offsets 1..u//2 both ways, plus the antipode when u is odd;
    shell sizes are even so the antipode pairing is well defined).
    Vertices at the truncation depth keep their lateral wiring.
    """
    spec = (spec_or_n if isinstance(spec_or_n, SpidernetSpec)
            else SpidernetSpec(spec_or_n, u, depth))
    n, u, depth = spec.n, spec.u, spec.depth
    shell_sizes = [1, 2 * n]
    while len(shell_sizes) <= depth:
        shell_sizes.append(shell_sizes[-1] * n)
    total = sum(shell_sizes[: depth + 1])
    if total > VERTEX_GUARD:
        raise GraphError(f"truncated spidernet has {total} > {VERTEX_GUARD} vertices")
    edges = []
    start = 1
    prev_start = 0
    for k in range(1, depth + 1):
        m = shell_sizes[k]
        # forward edges from the previous shell
        if k == 1:
            edges += [(0, start + i) for i in range(m)]
        else:
            prev_m = shell_sizes[k - 1]
            for i in range(prev_m):
                for c in range(n):
                    edges.append((prev_start + i, start + i * n + c))
        # lateral circulant inside this shell
        for off in range(1, u // 2 + 1):
            edges += [(start + i, start + (i + off) % m) for i in range(m)]
        if u % 2:
            half = m // 2
            edges += [(start + i, start + i + half) for i in range(half)]
        prev_start = start
        start += m
    return RootedGraph.from_edges(total, edges, 0)


# ---------------------------------------------------------------------------
# graph products
# ---------------------------------------------------------------------------

def _guard_product(g1, g2):
    if g1.n * g2.n > VERTEX_GUARD:
        raise GraphError(
            f"product would have {g1.n * g2.n} > {VERTEX_GUARD} vertices"
        )


def comb_product(g1, g2):
    """Comb product: move in the first factor only while the second sits at
    its root; realizes monotone independence."""
    _guard_product(g1, g2)
    n1, n2 = g1.n, g2.n
    o2 = g2.root
    a1, a2 = g1.adj.tocoo(), g2.adj.tocoo()
    rows = [a1.row * n2 + o2, np.repeat(np.arange(n1), a2.nnz) * n2
            + np.tile(a2.row, n1)]
    cols = [a1.col * n2 + o2, np.repeat(np.arange(n1), a2.nnz) * n2
            + np.tile(a2.col, n1)]
    adj = sp.csr_matrix(
        (np.ones(sum(len(r) for r in rows), dtype=np.int64),
         (np.concatenate(rows), np.concatenate(cols))),
        shape=(n1 * n2, n1 * n2),
    )
    return RootedGraph(adj, g1.root * n2 + o2)


def star_product(g1, g2):
    """Star product: glue the factors at their roots; realizes Boolean
    independence."""
    _guard_product(g1, g2)
    n1, n2 = g1.n, g2.n
    o1, o2 = g1.root, g2.root
    a1, a2 = g1.adj.tocoo(), g2.adj.tocoo()
    rows = [a1.row * n2 + o2, o1 * n2 + a2.row]
    cols = [a1.col * n2 + o2, o1 * n2 + a2.col]
    adj = sp.csr_matrix(
        (np.ones(a1.nnz + a2.nnz, dtype=np.int64),
         (np.concatenate(rows), np.concatenate(cols))),
        shape=(n1 * n2, n1 * n2),
    )
    adj.data[:] = 1  # the two copies share no edges, but stay safe
    return RootedGraph(adj, o1 * n2 + o2)


def direct_product(g1, g2):
    """Direct (Cartesian) product; realizes classical independence."""
    _guard_product(g1, g2)
    n1, n2 = g1.n, g2.n
    eye1 = sp.identity(n1, dtype=np.int64, format="csr")
    eye2 = sp.identity(n2, dtype=np.int64, format="csr")
    adj = sp.kron(g1.adj, eye2, format="csr") + sp.kron(eye1, g2.adj,
                                                        format="csr")
    return RootedGraph(adj.tocsr(), g1.root * n2 + g2.root)


def ball(g, radius):
    """Induced subgraph on the BFS ball around the root.

    Closed walks of length up to 2*radius never leave the ball, so walk
    moments up to that order are preserved.
    """
    d = g.depths()
    keep = np.nonzero((0 <= d) & (d <= radius))[0]
    relabel = -np.ones(g.n, dtype=np.int64)
    relabel[keep] = np.arange(keep.size)
    sub = g.adj[keep][:, keep].tocsr()
    return RootedGraph(sub, int(relabel[g.root]))


# ---------------------------------------------------------------------------
# moments and spectra
# ---------------------------------------------------------------------------

def write_edge_list(g, path):
    """Plain-text export: one 'u v' pair per line, root on a header line."""
    with open(path, "w") as fh:
        fh.write(f"# vertices {g.n} root {g.root}\n")
        coo = sp.triu(g.adj, k=1).tocoo()
        for a, b in zip(coo.row, coo.col):
            fh.write(f"{a} {b}\n")


def read_edge_list(path):
    with open(path) as fh:
        header = fh.readline().split()
        n, root = int(header[2]), int(header[4])
        edges = [tuple(map(int, line.split())) for line in fh if line.strip()]
    return RootedGraph.from_edges(n, edges, root)


def walk_moments(g, order):
    """Exact closed-walk counts at the root: m_k = <e_o, A^k e_o>."""
    if order < 1:
        raise GraphError("order must be >= 1")
    maxdeg = max(g.max_degree(), 1)
    if order * math.log2(maxdeg) < 62:
        v = np.zeros(g.n, dtype=np.int64)
        v[g.root] = 1
        out = []
        for _ in range(order):
            v = g.adj.dot(v)
            out.append(int(v[g.root]))
    else:  # exact big-integer fallback
        vals = {g.root: 1}
        out = []
        for _ in range(order):
            nxt = {}
            for vtx, c in vals.items():
                for w in g.neighbors(vtx):
                    nxt[w] = nxt.get(w, 0) + c
            vals = nxt
            out.append(vals.get(g.root, 0))
    return MomentSequence(tuple(out))


def spectral_distribution(g, merge_tol=1e-9):
    """Atoms at adjacency eigenvalues weighted by squared root components."""
    if g.n > 4096:
        raise GraphError("dense eigensolve limited to 4096 vertices")
    evals, evecs = np.linalg.eigh(g.adj.toarray().astype(float))
    weights = evecs[g.root, :] ** 2
    pairs = [(float(x), float(w)) for x, w in zip(evals, weights) if w > 1e-15]
    return AtomicMeasure.from_pairs(pairs, merge_tol=merge_tol,
                                    renormalize=True)


# ---------------------------------------------------------------------------
# the spidernet approximation pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ApproxProcess:
    """Output of the growing comb-product approximation.

    ``raw_moments[k]`` are the exact integer walk moments of the k-fold
    comb product (k = 0 is the empty product); scaled moments divide order
    j by scale_sq**(j/2), where scale_sq = 2 n^3 / T.
    """

    us: tuple
    graphs: tuple
    raw_moments: tuple
    scale_sq: float

    def scaled_moments(self, k):
        raw = self.raw_moments[k]
        return MomentSequence(tuple(
            float(v) / self.scale_sq ** (j / 2)
            for j, v in enumerate(raw.values, start=1)
        ))


def spidernet_bound(n, horizon):
    """Largest driving value admissible for the n-th approximation level."""
    return math.sqrt(horizon / 2) * (2 * math.sqrt(n) - n ** -1.5)


def approx_process(driving, horizon, n, order=4, k_max=None):
    """Spidernet comb-product approximation of the chain driven by U >= 0.

    Builds C_{n,k} = S_{n^2, u_1} comb ... comb S_{n^2, u_k} with
    u_k = floor(sqrt(2 n^3 / T) * U(k T / n)), each factor truncated at
    walk-sufficient depth, and intermediate products pruned to the root
    ball that closed walks of the requested order can reach.
    """
    if k_max is None:
        k_max = n
    if not 1 <= k_max <= n:
        raise GraphError("need 1 <= k_max <= n")
    TT = float(horizon)
    bound = spidernet_bound(n, TT)
    ts = np.linspace(0.0, TT, 257)
    uvals = np.asarray(driving(ts), dtype=float)
    if np.any(uvals < 0) or np.any(uvals > bound):
        raise BoundError(
            f"driving must satisfy 0 <= U <= {bound:.6g} on [0, {TT}] for n={n}"
        )
    scale_sq = 2.0 * n**3 / TT
    c = math.sqrt(scale_sq)
    depth = order // 2 + (order % 2) + 1  # ceil(order/2) + 1
    radius = (order + 1) // 2

    us = []
    graphs = [RootedGraph.single_vertex()]
    raw = [MomentSequence((0,) * order)]
    current = graphs[0]
    for k in range(1, k_max + 1):
        uk = int(math.floor(c * float(driving(k * TT / n))))
        us.append(uk)
        factor = spidernet(n * n, uk, depth)
        current = ball(comb_product(current, factor), radius)
        graphs.append(current)
        raw.append(walk_moments(current, order))
    return ApproxProcess(tuple(us), tuple(graphs), tuple(raw), scale_sq)
