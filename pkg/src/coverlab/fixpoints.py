"""Fixed-point statistics of finitely generated subgroups under random covers.

A subgroup H of the free group F(a, b) is given by generator words. Its
Stallings core graph (fold a wedge of loop paths, then trim hanging trees away
from the base vertex) determines the rank and a shortest free basis; the
expected number of common fixed points of H under a uniform random pair of
permutations is computed exactly for small degree by full enumeration and
estimated by Monte Carlo otherwise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigError, DomainError, InvalidElementError
from .halfplane import Word, word_inverse, word_reduce, word_str

# ---------------------------------------------------------------------------
# Stallings core


@dataclass
class CoreGraph:
    """Folded subgroup graph: directed edges (u, v, letter) with letter in
    {1, 2}, base vertex 0, vertex ids compact and BFS-ordered."""

    n_vertices: int
    edges: list[tuple[int, int, int]]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def rank(self) -> int:
        # folded cores are connected, so the circuit rank is E - V + 1
        return self.n_edges - self.n_vertices + 1


class _UnionFind:
    def __init__(self):
        self.parent: dict[int, int] = {}

    def find(self, x: int) -> int:
        p = self.parent
        while p.get(x, x) != x:
            p[x] = p.get(p[x], p[x])
            x = p[x]
        return x

    def union(self, x: int, y: int) -> int:
        # keep the smaller id as representative, so folding is deterministic
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return rx
        lo, hi = (rx, ry) if rx < ry else (ry, rx)
        self.parent[hi] = lo
        return lo


def fold_core(words: list[Word], keep_base: bool = True) -> CoreGraph:
    """Stallings core of the subgroup generated by the given words.

    Wedge of loop paths at a base vertex, fold until no vertex has two equal
    labelled edges on the same side, then repeatedly remove degree-1 vertices
    other than the base. Vertices are relabelled in BFS order from the base.
    """
    words = [word_reduce(w) for w in words]
    words = [w for w in words if w]
    if not words:
        return CoreGraph(1, [])

    edges: list[tuple[int, int, int]] = []  # (u, v, positive letter)
    nxt = 1
    for w in words:
        prev = 0
        for k, g in enumerate(w):
            last = k == len(w) - 1
            cur = 0 if last else nxt
            if not last:
                nxt += 1
            if g > 0:
                edges.append((prev, cur, g))
            else:
                edges.append((cur, prev, -g))
            prev = cur

    uf = _UnionFind()
    # fold to a fixpoint: identical labelled edges at a vertex force a merge
    changed = True
    while changed:
        changed = False
        out: dict[tuple[int, int], int] = {}
        inc: dict[tuple[int, int], int] = {}
        for u, v, g in edges:
            ru, rv = uf.find(u), uf.find(v)
            key = (ru, g)
            if key in out and uf.find(out[key]) != rv:
                uf.union(out[key], rv)
                changed = True
                break
            out[key] = rv
            key = (rv, g)
            if key in inc and uf.find(inc[key]) != ru:
                uf.union(inc[key], ru)
                changed = True
                break
            inc[key] = ru
    edge_set = {(uf.find(u), uf.find(v), g) for u, v, g in edges}

    # trim hanging trees: degree-1 vertices away from the base carry no loops
    base = uf.find(0)
    while True:
        deg: dict[int, int] = {}
        for u, v, g in edge_set:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        drop = {v for v, d in deg.items() if d == 1 and not (keep_base and v == base)}
        if not drop:
            break
        edge_set = {(u, v, g) for u, v, g in edge_set if u not in drop and v not in drop}

    # relabel in BFS order from the base, neighbours sorted by (letter, target)
    adj: dict[int, list[tuple[int, int, int]]] = {}
    for u, v, g in sorted(edge_set):
        adj.setdefault(u, []).append((g, 0, v))
        adj.setdefault(v, []).append((g, 1, u))
    order = {base: 0}
    queue = [base]
    while queue:
        u = queue.pop(0)
        for g, _side, v in sorted(adj.get(u, [])):
            if v not in order:
                order[v] = len(order)
                queue.append(v)
    if len(order) < len(adj):
        raise InvalidElementError("folded graph is not connected")
    out_edges = sorted((order[u], order[v], g) for u, v, g in edge_set)
    return CoreGraph(max(len(order), 1), out_edges)


def _bfs_depths(core: CoreGraph, root: int = 0) -> tuple[np.ndarray, set]:
    """Shortest path depths (edges undirected) and one BFS tree edge set."""
    depth = np.full(core.n_vertices, -1, dtype=np.int64)
    depth[root] = 0
    tree: set[int] = set()
    queue = [root]
    adj: dict[int, list[tuple[int, int]]] = {}
    for k, (u, v, g) in enumerate(core.edges):
        adj.setdefault(u, []).append((v, k))
        adj.setdefault(v, []).append((u, k))
    while queue:
        u = queue.pop(0)
        for v, k in sorted(adj.get(u, [])):
            if depth[v] < 0:
                depth[v] = depth[u] + 1
                tree.add(k)
                queue.append(v)
    return depth, tree


def basis_length(core: CoreGraph) -> int:
    """Total word length of the free basis read off a shortest-path tree.

    Each non-tree edge (u, v) contributes depth(u) + 1 + depth(v).
    """
    if core.n_edges == 0:
        return 0
    depth, tree = _bfs_depths(core)
    if (depth < 0).any():
        raise InvalidElementError("core graph is not connected")
    total = 0
    for k, (u, v, g) in enumerate(core.edges):
        if k not in tree:
            total += int(depth[u]) + 1 + int(depth[v])
    return total


def basis_length_all_trees(core: CoreGraph) -> int:
    """Minimum of the basis-length functional over every spanning tree.

    Exponential enumeration; only sensible for cores with at most ~12 edges.
    """
    if core.n_edges == 0:
        return 0
    if core.n_edges > 12:
        raise DomainError("exhaustive tree search limited to 12 edges")
    V, E = core.n_vertices, core.n_edges
    best = None
    for tree_idx in itertools.combinations(range(E), V - 1):
        # check the chosen edges form a tree and get depths from the base
        adj: dict[int, list[int]] = {}
        for k in tree_idx:
            u, v, _ = core.edges[k]
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        depth = {0: 0}
        queue = [0]
        while queue:
            u = queue.pop(0)
            for v in adj.get(u, []):
                if v not in depth:
                    depth[v] = depth[u] + 1
                    queue.append(v)
        if len(depth) != V:
            continue
        tree_set = set(tree_idx)
        total = sum(
            depth[u] + 1 + depth[v]
            for k, (u, v, _) in enumerate(core.edges)
            if k not in tree_set
        )
        if best is None or total < best:
            best = total
    if best is None:
        raise InvalidElementError("no spanning tree found")
    return best


# ---------------------------------------------------------------------------
# fixed-point counts


def fix_count(sigma_a: np.ndarray, sigma_b: np.ndarray, words: list[Word]) -> int:
    """Number of points fixed by every word (letters walked left to right)."""
    n = len(sigma_a)
    ia, ib = np.argsort(sigma_a), np.argsort(sigma_b)
    tab = {1: sigma_a, -1: ia, 2: sigma_b, -2: ib}
    ok = np.ones(n, dtype=bool)
    base = np.arange(n)
    for w in words:
        img = base
        for g in word_reduce(w):
            img = tab[g][img]
        ok &= img == base
    return int(ok.sum())


def expected_fix_exact(words: list[Word], n: int) -> Fraction:
    """Exact expectation of fix_count over all (n!)^2 pairs, as a fraction.

    Full enumeration; factorials beyond 6 are refused.
    """
    if n > 6:
        raise DomainError("exact enumeration limited to n <= 6")
    words = [word_reduce(w) for w in words]
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    m = len(perms)
    inv = np.argsort(perms, axis=1)
    base = np.arange(n)
    total = 0
    for ka in range(m):
        sa, sa_inv = perms[ka], inv[ka]
        ok = np.ones((m, n), dtype=bool)
        for w in words:
            img = np.broadcast_to(base, (m, n)).copy()
            for g in w:
                if g == 1:
                    img = sa[img]
                elif g == -1:
                    img = sa_inv[img]
                elif g == 2:
                    img = np.take_along_axis(perms, img, axis=1)
                else:
                    img = np.take_along_axis(inv, img, axis=1)
            ok &= img == base
        total += int(ok.sum())
    return Fraction(total, m * m)


def expected_fix_mc(
    words: list[Word], n: int, trials: int, seed: int
) -> tuple[float, float]:
    """Monte Carlo mean and standard error of fix_count at degree n."""
    rng = np.random.default_rng(seed)
    words = [word_reduce(w) for w in words]
    vals = np.empty(trials, dtype=np.float64)
    for t in range(trials):
        vals[t] = fix_count(rng.permutation(n), rng.permutation(n), words)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.inf
    return mean, se


def expectation_ratio(words: list[Word], n: int, trials: int, seed: int) -> dict:
    """Scaled expectation n * E[fix] / ell^6 for a rank >= 2 subgroup.

    Preconditions: the folded core has rank at least 2 and n >= ell^3, where
    ell is the basis length of the core.
    """
    core = fold_core(words)
    rank = core.rank()
    if rank < 2:
        raise DomainError(f"subgroup rank {rank} < 2")
    ell = basis_length(core)
    if n < ell**3:
        raise DomainError(f"degree {n} below ell^3 = {ell ** 3}")
    mean, se = expected_fix_mc(words, n, trials, seed)
    return {
        "n": n,
        "rank": rank,
        "ell": ell,
        "mean_fix": mean,
        "stderr": se,
        "ratio": mean * n / ell**6,
    }


def pochhammer_falling(n: int, a: int) -> int:
    """Falling factorial n (n-1) ... (n-a+1), exact integer."""
    if a < 0:
        raise InvalidElementError("a must be nonnegative")
    out = 1
    for k in range(a):
        out *= n - k
    return out


def pochhammer_check(n_max: int, a_max: int) -> bool:
    """Exhaustive exact check of n^a (1 - a^2/n) <= (n)_a <= n^a.

    Runs over 1 <= n <= n_max and 0 <= a <= min(a_max, n // 2); the lower
    bound is compared as integers (n^a - a^2 n^(a-1)) to avoid rationals.
    """
    if n_max < 1:
        raise DomainError("n_max must be at least 1")
    if a_max > n_max // 2:
        raise DomainError(f"a_max {a_max} exceeds n_max/2 = {n_max // 2}")
    for n in range(1, n_max + 1):
        for a in range(0, min(a_max, n // 2) + 1):
            p = pochhammer_falling(n, a)
            if p > n**a:
                return False
            if p < n**a - a * a * n ** max(a - 1, 0):
                return False
    return True


# ---------------------------------------------------------------------------
# serialization

_CORE_HEADER = "coverlab-core v1"
_LN = {1: "a", 2: "b"}
_NL = {"a": 1, "b": 2}


def core_to_text(core: CoreGraph) -> str:
    lines = [_CORE_HEADER, f"vertices {core.n_vertices}", "base 0"]
    for u, v, g in core.edges:
        lines.append(f"edge {u} {v} {_LN[g]}")
    return "\n".join(lines) + "\n"


def core_from_text(text: str) -> CoreGraph:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != _CORE_HEADER:
        raise ConfigError(f"expected header {_CORE_HEADER!r}")
    nv = None
    edges = []
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "vertices":
            nv = int(parts[1])
        elif parts[0] == "base":
            if parts[1] != "0":
                raise ConfigError("base vertex must be 0 in v1 files")
        elif parts[0] == "edge":
            try:
                edges.append((int(parts[1]), int(parts[2]), _NL[parts[3]]))
            except (KeyError, ValueError, IndexError) as exc:
                raise ConfigError(f"bad edge line {ln!r}") from exc
        else:
            raise ConfigError(f"unknown line {ln!r}")
    if nv is None:
        raise ConfigError("missing vertex count")
    for u, v, _ in edges:
        if not (0 <= u < nv and 0 <= v < nv):
            raise ConfigError("edge endpoint out of range")
    return CoreGraph(nv, sorted(edges))


def describe_core(core: CoreGraph) -> str:
    return (
        f"core: {core.n_vertices} vertices, {core.n_edges} edges, "
        f"rank {core.rank()}, basis length {basis_length(core)}"
    )
