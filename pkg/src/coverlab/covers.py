"""Degree-n covers of the base surface as permutation pairs.

A cover is a pair of permutations (sigma_a, sigma_b) of {0, ..., n-1}, the
monodromy of the two generators. The associated Schreier graph has vertex set
{0, ..., n-1} and 2n labelled edges: an a-edge i -> sigma_a(i) and a b-edge
i -> sigma_b(i) for every i (loops and parallel edges allowed).

Walking a word through the graph consumes letters left to right: the letter
written first acts first. Permutations compose with the left-action rule
(s o t)(i) = s(t(i)), so the permutation of a word is the composition of its
letter permutations with the leftmost applied first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvalidElementError, NotConnectedError
from .halfplane import Word, parse_word, word_inverse, word_reduce, word_str


def _check_perm(sigma, n: int, name: str) -> np.ndarray:
    arr = np.asarray(sigma, dtype=np.int64)
    if arr.shape != (n,):
        raise InvalidElementError(f"{name} must have length {n}, got shape {arr.shape}")
    if not np.array_equal(np.sort(arr), np.arange(n)):
        raise InvalidElementError(f"{name} is not a permutation of 0..{n - 1}")
    return arr


class PermutationPair:
    """Monodromy pair (sigma_a, sigma_b); arrays are validated and read-only."""

    __slots__ = ("n", "sigma_a", "sigma_b", "sigma_a_inv", "sigma_b_inv")

    def __init__(self, sigma_a, sigma_b):
        sa = np.asarray(sigma_a, dtype=np.int64)
        n = sa.shape[0] if sa.ndim == 1 else 0
        if n == 0:
            raise InvalidElementError("permutations must be nonempty 1-d sequences")
        self.n = n
        self.sigma_a = _check_perm(sigma_a, n, "sigma_a")
        self.sigma_b = _check_perm(sigma_b, n, "sigma_b")
        self.sigma_a_inv = np.argsort(self.sigma_a)
        self.sigma_b_inv = np.argsort(self.sigma_b)
        for arr in (self.sigma_a, self.sigma_b, self.sigma_a_inv, self.sigma_b_inv):
            arr.setflags(write=False)

    def perm(self, letter: int) -> np.ndarray:
        """Permutation of one letter (1=a, -1=a^-1, 2=b, -2=b^-1)."""
        try:
            return {
                1: self.sigma_a,
                -1: self.sigma_a_inv,
                2: self.sigma_b,
                -2: self.sigma_b_inv,
            }[letter]
        except KeyError as exc:
            raise InvalidElementError(f"unknown letter {letter!r}") from exc

    def __eq__(self, other) -> bool:
        if not isinstance(other, PermutationPair):
            return NotImplemented
        return np.array_equal(self.sigma_a, other.sigma_a) and np.array_equal(
            self.sigma_b, other.sigma_b
        )

    def __repr__(self) -> str:
        return f"PermutationPair(n={self.n})"


def sample_pair(n: int, seed: int) -> PermutationPair:
    """Uniform pair: two independent permutations from default_rng(seed)."""
    if n < 1:
        raise InvalidElementError(f"degree must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    return PermutationPair(rng.permutation(n), rng.permutation(n))


def step(pair: PermutationPair, letter: int, v: int) -> int:
    return int(pair.perm(letter)[v])


def walk_word(pair: PermutationPair, w: Word, v: int) -> int:
    for g in w:
        v = int(pair.perm(g)[v])
    return v


def perm_of_word(pair: PermutationPair, w: Word) -> np.ndarray:
    """img[v] = endpoint of walking w from v (leftmost letter first)."""
    img = np.arange(pair.n)
    for g in w:
        img = pair.perm(g)[img]
    return img


# BFS neighbour order: a-forward, a-backward, b-forward, b-backward.
_BFS_LETTERS = (1, -1, 2, -2)


def is_transitive(pair: PermutationPair) -> bool:
    n = pair.n
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    stack = [0]
    perms = [pair.perm(g) for g in _BFS_LETTERS]
    while stack:
        v = stack.pop()
        for p in perms:
            u = int(p[v])
            if not seen[u]:
                seen[u] = True
                stack.append(u)
    return bool(seen.all())


def sample_connected_pair(
    n: int, seed: int, max_tries: int = 64
) -> tuple[PermutationPair, int]:
    """Resample with consecutive seeds until the cover is connected.

    Returns (pair, attempts); attempts counts how many pairs were drawn.
    """
    for k in range(max_tries):
        pair = sample_pair(n, seed + k)
        if is_transitive(pair):
            return pair, k + 1
    raise NotConnectedError(f"no transitive pair in {max_tries} draws from seed {seed}")


# ---------------------------------------------------------------------------
# spanning tree and free basis

# Undirected edge ids: the a-edge with source i is (i, 1), the b-edge (i, 2).
# Each undirected edge has exactly one natural (source, letter) name.


@dataclass
class SpanningBasis:
    """BFS spanning tree at a root plus the induced free basis of the cover group.

    parent/parent_letter/depth are indexed by vertex (root has parent -1,
    letter 0). nontree_edges lists the n+1 edges outside the tree in natural
    orientation, ordered by (source, a-before-b); words[k] is the loop word of
    nontree_edges[k]: path to the tail, the edge's letter, reversed path from
    the head.
    """

    pair: PermutationPair
    root: int
    parent: np.ndarray
    parent_letter: np.ndarray
    depth: np.ndarray
    bfs_order: np.ndarray
    tree_edges: list[tuple[int, int]] = field(default_factory=list)
    nontree_edges: list[tuple[int, int, int]] = field(default_factory=list)
    words: list[Word] = field(default_factory=list)

    def path_word(self, v: int) -> Word:
        """Letters of the tree path root -> v, in walk order."""
        letters = []
        while v != self.root:
            letters.append(int(self.parent_letter[v]))
            v = int(self.parent[v])
        return tuple(reversed(letters))

    @property
    def rank(self) -> int:
        return len(self.nontree_edges)


def spanning_basis(pair: PermutationPair, root: int = 0) -> SpanningBasis:
    """BFS tree (FIFO, neighbours a, a^-1, b, b^-1) and free basis words.

    The n+1 non-tree edges keep their natural orientation i -> sigma(i); the
    basis word of edge (i, j, g) is path(root->i) . g . path(root->j)^-1,
    which walks a loop at the root.
    """
    n = pair.n
    if not 0 <= root < n:
        raise InvalidElementError(f"root {root} out of range for n={n}")
    parent = np.full(n, -1, dtype=np.int64)
    letter = np.zeros(n, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    seen[root] = True
    order = [root]
    used = set()  # (source, |letter|) pairs consumed by the tree
    head = 0
    perms = {g: pair.perm(g) for g in _BFS_LETTERS}
    tree_edges: list[tuple[int, int]] = []
    while head < len(order):
        v = order[head]
        head += 1
        for g in _BFS_LETTERS:
            u = int(perms[g][v])
            if seen[u]:
                continue
            seen[u] = True
            parent[u] = v
            letter[u] = g
            depth[u] = depth[v] + 1
            order.append(u)
            # natural name of the traversed undirected edge
            src = v if g > 0 else u
            tree_edges.append((src, abs(g)))
            used.add((src, abs(g)))
    if len(order) != n:
        raise NotConnectedError(
            f"cover is disconnected: reached {len(order)} of {n} sheets from {root}"
        )

    basis = SpanningBasis(
        pair=pair,
        root=root,
        parent=parent,
        parent_letter=letter,
        depth=depth,
        bfs_order=np.array(order, dtype=np.int64),
        tree_edges=tree_edges,
    )
    for i in range(n):
        for g in (1, 2):
            if (i, g) in used:
                continue
            j = int(pair.perm(g)[i])
            w = word_reduce(
                basis.path_word(i) + (g,) + word_inverse(basis.path_word(j))
            )
            basis.nontree_edges.append((i, j, g))
            basis.words.append(w)
    return basis


# ---------------------------------------------------------------------------
# cusps

# Base cusps and parabolic generators of their stabilisers: oo is fixed by a,
# 0 by b, and 1 by a b^-1 (trace -2, fixed point 1; note -1 ~ 1 downstairs).
CUSP_WORDS: dict[str, Word] = {"inf": (1,), "zero": (2,), "one": (1, -2)}


def cusp_perm(pair: PermutationPair, cusp: str) -> np.ndarray:
    try:
        w = CUSP_WORDS[cusp]
    except KeyError as exc:
        raise InvalidElementError(f"unknown cusp {cusp!r}") from exc
    return perm_of_word(pair, w)


def perm_cycles(perm: np.ndarray) -> list[tuple[int, ...]]:
    """Orbit decomposition; each cycle starts at its minimal element, cycles
    sorted by that element."""
    n = len(perm)
    seen = np.zeros(n, dtype=bool)
    cycles = []
    for v0 in range(n):
        if seen[v0]:
            continue
        cyc = [v0]
        seen[v0] = True
        v = int(perm[v0])
        while v != v0:
            cyc.append(v)
            seen[v] = True
            v = int(perm[v])
        cycles.append(tuple(cyc))
    return cycles


def cusp_cycles(pair: PermutationPair) -> dict[str, list[tuple[int, ...]]]:
    """Cover cusps over each base cusp: cycles of the cusp permutation.

    The horocycle length of a cover cusp equals its cycle length (the base
    horocycles are normalised to length 1).
    """
    return {name: perm_cycles(cusp_perm(pair, name)) for name in CUSP_WORDS}


def cycle_index(cycles: list[tuple[int, ...]], n: int) -> np.ndarray:
    """idx[v] = position of the cycle containing v in the given list."""
    idx = np.full(n, -1, dtype=np.int64)
    for k, cyc in enumerate(cycles):
        for v in cyc:
            idx[v] = k
    return idx


# ---------------------------------------------------------------------------
# serialization (versioned, line oriented)

_PAIR_HEADER = "coverlab-pair v1"
_BASIS_HEADER = "coverlab-basis v1"


def pair_to_text(pair: PermutationPair) -> str:
    lines = [
        _PAIR_HEADER,
        f"n {pair.n}",
        "sigma_a " + " ".join(map(str, pair.sigma_a)),
        "sigma_b " + " ".join(map(str, pair.sigma_b)),
    ]
    return "\n".join(lines) + "\n"


def _parse_fields(text: str, header: str) -> dict[str, list[str]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != header:
        raise ConfigError(f"expected header {header!r}")
    fields: dict[str, list[str]] = {}
    for ln in lines[1:]:
        key, _, rest = ln.partition(" ")
        fields.setdefault(key, []).append(rest.strip())
    return fields


def pair_from_text(text: str) -> PermutationPair:
    f = _parse_fields(text, _PAIR_HEADER)
    try:
        n = int(f["n"][0])
        sa = [int(t) for t in f["sigma_a"][0].split()]
        sb = [int(t) for t in f["sigma_b"][0].split()]
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"malformed pair file: {exc}") from exc
    if len(sa) != n or len(sb) != n:
        raise ConfigError("permutation length disagrees with declared n")
    try:
        return PermutationPair(sa, sb)
    except InvalidElementError as exc:
        raise ConfigError(str(exc)) from exc


_LN = {1: "a", 2: "b"}
_NL = {"a": 1, "b": 2}


def basis_to_text(basis: SpanningBasis) -> str:
    pair = basis.pair
    lines = [
        _BASIS_HEADER,
        f"n {pair.n}",
        f"root {basis.root}",
        "sigma_a " + " ".join(map(str, pair.sigma_a)),
        "sigma_b " + " ".join(map(str, pair.sigma_b)),
    ]
    for src, g in basis.tree_edges:
        lines.append(f"tree {src} {_LN[g]}")
    for (i, j, g), w in zip(basis.nontree_edges, basis.words):
        lines.append(f"nontree {i} {j} {_LN[g]} {word_str(w)}")
    return "\n".join(lines) + "\n"


def basis_from_text(text: str) -> SpanningBasis:
    """Parse and re-derive the basis, validating the stored lines against it."""
    f = _parse_fields(text, _BASIS_HEADER)
    try:
        n = int(f["n"][0])
        root = int(f["root"][0])
        sa = [int(t) for t in f["sigma_a"][0].split()]
        sb = [int(t) for t in f["sigma_b"][0].split()]
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"malformed basis file: {exc}") from exc
    if len(sa) != n or len(sb) != n:
        raise ConfigError("permutation length disagrees with declared n")
    pair = PermutationPair(sa, sb)
    basis = spanning_basis(pair, root)

    tree_lines = [tuple(t.split()) for t in f.get("tree", [])]
    want_tree = [(str(src), _LN[g]) for src, g in basis.tree_edges]
    if tree_lines != want_tree:
        raise ConfigError("stored spanning tree disagrees with BFS reconstruction")
    nt_lines = [tuple(t.split()) for t in f.get("nontree", [])]
    want_nt = [
        (str(i), str(j), _LN[g], word_str(w))
        for (i, j, g), w in zip(basis.nontree_edges, basis.words)
    ]
    if nt_lines != want_nt:
        raise ConfigError("stored basis words disagree with reconstruction")
    return basis


def parse_basis_word(s: str) -> Word:
    return parse_word(s)
