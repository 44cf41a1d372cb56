"""Tangle detection in Schreier graphs: ball ranks and tangle-free radius.

A radius-rho ball at a vertex consists of the vertices within graph distance
rho and the edges having an endpoint within rho - 1 (so the rho = 0 ball is a
bare vertex, and growing rho never removes edges). The graph is tangle-free
at radius rho when every such ball has circuit rank at most one, i.e. no ball
holds two independent cycles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import ConfigError, InvalidElementError
from .fixpoints import fold_core
from .halfplane import Word, word_reduce, word_str, parse_word
from .covers import PermutationPair


def rho_rule(n: int, coef: float = 0.25) -> int:
    """Certification radius for degree n: max(1, floor(coef * log2 n))."""
    if n < 1:
        raise InvalidElementError(f"degree must be positive, got {n}")
    return max(1, math.floor(coef * math.log2(n))) if n > 1 else 1


def ball(pair: PermutationPair, v: int, rho: int):
    """Vertices within rho of v and edges with an endpoint within rho - 1.

    Edges are named by (source, letter) with letter 1 for a, 2 for b, the
    natural orientation source -> sigma(source). Returns (dist, edges) where
    dist maps ball vertices to their distance from v.
    """
    if rho < 0:
        raise InvalidElementError("radius must be nonnegative")
    sa, sb = pair.sigma_a, pair.sigma_b
    ia, ib = pair.sigma_a_inv, pair.sigma_b_inv
    dist = {v: 0}
    frontier = [v]
    for d in range(1, rho + 1):
        nxt = []
        for u in frontier:
            for w in (int(sa[u]), int(ia[u]), int(sb[u]), int(ib[u])):
                if w not in dist:
                    dist[w] = d
                    nxt.append(w)
        frontier = nxt
    edges = set()
    for u, d in dist.items():
        if d <= rho - 1:
            edges.add((u, 1))
            edges.add((u, 2))
            edges.add((int(ia[u]), 1))
            edges.add((int(ib[u]), 2))
    return dist, edges


def ball_rank(pair: PermutationPair, v: int, rho: int) -> int:
    """Circuit rank E - V + C of the rho-ball at v."""
    dist, edges = ball(pair, v, rho)
    verts = list(dist)
    index = {u: k for k, u in enumerate(verts)}
    parent = list(range(len(verts)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    comps = len(verts)
    extra = 0  # edges closing a cycle, counted as they appear
    for src, g in sorted(edges):
        dst = int(pair.perm(g)[src])
        ru, rv = find(index[src]), find(index[dst])
        if ru == rv:
            extra += 1
        else:
            parent[max(ru, rv)] = min(ru, rv)
            comps -= 1
    rank_euler = len(edges) - len(verts) + comps
    if rank_euler != extra:
        raise InvalidElementError("rank bookkeeping mismatch")  # unreachable
    return rank_euler


def _cycle_words(pair: PermutationPair, v: int, rho: int, count: int = 2) -> list[Word]:
    """Words of independent cycles through the rho-ball, based at v.

    BFS tree inside the ball; each non-tree edge contributes the loop
    path(v -> tail) . letter . path(head -> v)^-1 walked from v.
    """
    dist, edges = ball(pair, v, rho)
    parent: dict[int, tuple[int, int]] = {}  # vertex -> (parent, letter walked)
    seen = {v}
    queue = [v]
    tree: set[tuple[int, int]] = set()
    edge_lookup = edges
    while queue:
        u = queue.pop(0)
        for g in (1, -1, 2, -2):
            w = int(pair.perm(g)[u])
            src = u if g > 0 else w
            if (src, abs(g)) not in edge_lookup:
                continue
            if w in seen:
                continue
            seen.add(w)
            parent[w] = (u, g)
            tree.add((src, abs(g)))
            queue.append(w)

    def path(u: int) -> Word:
        letters = []
        while u != v:
            p, g = parent[u]
            letters.append(g)
            u = p
        return tuple(reversed(letters))

    words = []
    for src, g in sorted(edges - tree):
        dst = int(pair.perm(g)[src])
        w = word_reduce(path(src) + (g,) + tuple(-x for x in reversed(path(dst))))
        words.append(w)
        if len(words) == count:
            break
    return words


@dataclass
class GtfReport:
    """Outcome of a tangle-free certification run."""

    n: int
    rho: int
    passed: bool
    witnesses: list[dict] = field(default_factory=list)
    checked_vertices: int = 0

    def to_json(self) -> str:
        return json.dumps(
            {
                "format": "coverlab-gtf",
                "version": 1,
                "n": self.n,
                "rho": self.rho,
                "pass": self.passed,
                "checked_vertices": self.checked_vertices,
                "witnesses": self.witnesses,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "GtfReport":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad report JSON: {exc}") from exc
        if obj.get("format") != "coverlab-gtf" or obj.get("version") != 1:
            raise ConfigError("not a v1 tangle report")
        return cls(
            n=int(obj["n"]),
            rho=int(obj["rho"]),
            passed=bool(obj["pass"]),
            witnesses=list(obj.get("witnesses", [])),
            checked_vertices=int(obj.get("checked_vertices", 0)),
        )


def certify_tangle_free(
    pair: PermutationPair, rho: int, max_witnesses: int = 16
) -> GtfReport:
    """Check every rho-ball for rank >= 2; failed vertices become witnesses.

    Each witness records two independent cycle words at the vertex; the words
    are cross-checked by walking them (they must fix the vertex) and by
    folding (they must generate a rank-2 subgroup).
    """
    n = pair.n
    witnesses: list[dict] = []
    passed = True
    for v in range(n):
        r = ball_rank(pair, v, rho)
        if r <= 1:
            continue
        passed = False
        if len(witnesses) >= max_witnesses:
            continue
        words = _cycle_words(pair, v, rho, count=2)
        for w in words:
            u = v
            for g in w:
                u = int(pair.perm(g)[u])
            if u != v:
                raise InvalidElementError("witness word does not fix its vertex")
        if fold_core(words).rank() != 2:
            raise InvalidElementError("witness words are not independent")
        witnesses.append(
            {"vertex": v, "rank": r, "words": [word_str(w) for w in words]}
        )
    return GtfReport(
        n=n, rho=rho, passed=passed, witnesses=witnesses, checked_vertices=n
    )


def witness_words(report: GtfReport) -> list[list[Word]]:
    return [[parse_word(s) for s in w["words"]] for w in report.witnesses]


# ---------------------------------------------------------------------------
# short rank-2 pairs and fixed-point scans


@dataclass(frozen=True)
class ShortPair:
    """Two lattice words within displacement r of the basepoint that generate
    a rank-2 (free) subgroup."""

    gamma1: Word
    gamma2: Word
    r: float


def enumerate_short_pairs(r: float, o=None) -> list[ShortPair]:
    """Unordered pairs from the r-ball whose folded core has rank 2.

    Pairs generating cyclic subgroups (rank <= 1), and any pair involving the
    identity, are excluded.
    """
    from .halfplane import BASEPOINT, lattice_ball

    ball_elems = lattice_ball(o or BASEPOINT, r)
    words = [e.word for e in ball_elems if e.word]
    out = []
    for i in range(len(words)):
        for j in range(i + 1, len(words)):
            if fold_core([words[i], words[j]]).rank() == 2:
                out.append(ShortPair(words[i], words[j], r))
    return out


def scan_common_fixed_points(
    pair: PermutationPair, pairs: list[ShortPair]
) -> list[tuple[ShortPair, int]]:
    """All (short pair, i) with both words fixing fiber point i."""
    from .covers import perm_of_word

    base = list(range(pair.n))
    hits = []
    for sp in pairs:
        p1 = perm_of_word(pair, sp.gamma1)
        p2 = perm_of_word(pair, sp.gamma2)
        for i in base:
            if p1[i] == i and p2[i] == i:
                hits.append((sp, i))
    return hits


def tangle_probability_trend(n_list, seeds: int, rho_rule_fn=rho_rule) -> list[dict]:
    """Monte Carlo failure rate of the certifier per degree.

    Each degree n is certified at radius rho_rule_fn(n) over the given number
    of seeds (consecutive seeds, resampling disconnected draws). Returns rows
    {n, rho, failures, seeds, rate}.
    """
    from .covers import sample_connected_pair

    if list(n_list) != sorted(n_list):
        raise InvalidElementError("degree list must be increasing")
    rows = []
    for n in n_list:
        rho = rho_rule_fn(n)
        fails = 0
        for seed in range(seeds):
            if n == 1:
                pr = PermutationPair([0], [0])
            else:
                pr, _ = sample_connected_pair(n, seed)
            rep = certify_tangle_free(pr, rho, max_witnesses=1)
            fails += 0 if rep.passed else 1
        rows.append(
            {"n": n, "rho": rho, "failures": fails, "seeds": seeds, "rate": fails / seeds}
        )
    return rows
