"""Sign characters of cover groups and their Hamming geometry.

A base character assigns +-1 to each of the two generators. Its restriction
to the cover group (the rank n+1 free group of a spanning basis) is the sign
vector obtained by evaluating on each basis word through letter-count parity.
General cover characters are arbitrary +-1 vectors over the ordered non-tree
edges; tree edges always carry +1, which fixes the gauge.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .covers import SpanningBasis, basis_to_text
from .errors import BasisMismatchError, ConfigError, InvalidElementError
from .halfplane import Word


def basis_hash(basis: SpanningBasis) -> str:
    return hashlib.sha256(basis_to_text(basis).encode()).hexdigest()


def check_base_character(theta) -> tuple[int, int]:
    try:
        ta, tb = theta
    except (TypeError, ValueError) as exc:
        raise InvalidElementError("base character must be a (theta_a, theta_b) pair") from exc
    if ta not in (1, -1) or tb not in (1, -1):
        raise InvalidElementError(f"character values must be +-1, got {theta!r}")
    return int(ta), int(tb)


@dataclass(frozen=True)
class CoverCharacter:
    """Sign vector over the non-tree edges of a specific spanning basis."""

    signs: tuple[int, ...]
    basis: SpanningBasis
    fingerprint: str

    def __post_init__(self):
        if any(s not in (1, -1) for s in self.signs):
            raise InvalidElementError("character signs must be +-1")
        if len(self.signs) != self.basis.rank:
            raise InvalidElementError(
                f"expected {self.basis.rank} signs, got {len(self.signs)}"
            )

    def is_trivial(self) -> bool:
        return all(s == 1 for s in self.signs)


def character(basis: SpanningBasis, signs) -> CoverCharacter:
    return CoverCharacter(tuple(int(s) for s in signs), basis, basis_hash(basis))


def trivial_character(basis: SpanningBasis) -> CoverCharacter:
    return character(basis, (1,) * basis.rank)


def _parity_counts(w: Word) -> tuple[int, int]:
    na = sum(1 for g in w if abs(g) == 1) & 1
    nb = sum(1 for g in w if abs(g) == 2) & 1
    return na, nb


def evaluate_base(theta, w: Word) -> int:
    """Value of the base character on any word: exponent sums mod 2."""
    ta, tb = check_base_character(theta)
    na, nb = _parity_counts(w)
    return (ta**na) * (tb**nb)


def restrict(theta, basis: SpanningBasis) -> CoverCharacter:
    """Pull a base character back to the cover group along the basis words."""
    return character(basis, [evaluate_base(theta, w) for w in basis.words])


def _require_same_basis(c1: CoverCharacter, c2: CoverCharacter) -> None:
    if c1.fingerprint != c2.fingerprint:
        raise BasisMismatchError("characters live on different bases")


def product(c1: CoverCharacter, c2: CoverCharacter) -> CoverCharacter:
    _require_same_basis(c1, c2)
    return character(c1.basis, [a * b for a, b in zip(c1.signs, c2.signs)])


def hamming(c1: CoverCharacter, c2: CoverCharacter) -> int:
    _require_same_basis(c1, c2)
    return sum(1 for a, b in zip(c1.signs, c2.signs) if a != b)


def hamming_geodesic(
    c1: CoverCharacter, c2: CoverCharacter
) -> list[CoverCharacter]:
    """Characters along the flip path c1 -> c2, one coordinate per step.

    Disagreeing coordinates are flipped in ascending edge order, so the path
    is deterministic; length is hamming(c1, c2) + 1.
    """
    _require_same_basis(c1, c2)
    path = [c1]
    cur = list(c1.signs)
    for k in range(len(cur)):
        if cur[k] != c2.signs[k]:
            cur[k] = c2.signs[k]
            path.append(character(c1.basis, cur))
    return path


def flipped_coordinates(path: list[CoverCharacter]) -> list[int]:
    """Edge index flipped at each step (one shorter than the path)."""
    out = []
    for prev, nxt in zip(path, path[1:]):
        diff = [k for k, (a, b) in enumerate(zip(prev.signs, nxt.signs)) if a != b]
        if len(diff) != 1:
            raise InvalidElementError("path steps must flip exactly one coordinate")
        out.append(diff[0])
    return out


# ---------------------------------------------------------------------------
# edge signs and holonomy


def edge_sign_arrays(char: CoverCharacter) -> tuple[np.ndarray, np.ndarray]:
    """Signs on the natural edges: (a-edge sign per source, b-edge sign).

    Tree edges carry +1; the k-th non-tree edge carries signs[k].
    """
    n = char.basis.pair.n
    sa = np.ones(n, dtype=np.int64)
    sb = np.ones(n, dtype=np.int64)
    for (i, _j, g), s in zip(char.basis.nontree_edges, char.signs):
        if g == 1:
            sa[i] = s
        else:
            sb[i] = s
    return sa, sb


def holonomy(char: CoverCharacter, w: Word, v: int) -> tuple[int, int]:
    """Walk w from vertex v; return (endpoint, product of crossed edge signs)."""
    pair = char.basis.pair
    sa, sb = edge_sign_arrays(char)
    sign = 1
    for g in w:
        if g > 0:
            src = v
            v = int(pair.perm(g)[v])
        else:
            v = int(pair.perm(g)[v])
            src = v
        sign *= int(sa[src]) if abs(g) == 1 else int(sb[src])
    return v, sign


def chi_value(char: CoverCharacter, w: Word) -> int:
    """Character value on a word of the cover group (a loop at the basis root)."""
    end, sign = holonomy(char, w, char.basis.root)
    if end != char.basis.root:
        raise InvalidElementError("word does not fix the basis root")
    return sign


# ---------------------------------------------------------------------------
# serialization

_CHAR_HEADER = "coverlab-character v1"


def character_to_text(char: CoverCharacter) -> str:
    body = "".join("+" if s == 1 else "-" for s in char.signs)
    return f"{_CHAR_HEADER}\nbasis {char.fingerprint}\nsigns {body}\n"


def character_from_text(text: str, basis: SpanningBasis) -> CoverCharacter:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != _CHAR_HEADER:
        raise ConfigError(f"expected header {_CHAR_HEADER!r}")
    fields = dict(ln.split(None, 1) for ln in lines[1:])
    try:
        fp = fields["basis"].strip()
        body = fields["signs"].strip()
    except KeyError as exc:
        raise ConfigError(f"missing field {exc}") from exc
    if fp != basis_hash(basis):
        raise BasisMismatchError("character file was written for a different basis")
    if set(body) - {"+", "-"}:
        raise ConfigError("signs must be a +- string")
    return character(basis, [1 if c == "+" else -1 for c in body])
