"""Hyperbolic half-plane primitives for the level-2 congruence setting.

The ambient objects are the upper half-plane with the curvature -1 metric,
the rank-2 free group generated by the parabolics

    a = [[1, 2], [0, 1]],    b = [[1, 0], [2, 1]],

and the ideal quadrilateral fundamental domain F with vertices -1, 0, 1, oo,
bounded by the verticals Re z = -1, Re z = 1 and the semicircles
|z + 1/2| = 1/2, |z - 1/2| = 1/2. Membership in F closes the left vertical
and the left semicircle and leaves the right sides open, so every orbit has a
unique reduced representative even on side boundaries.

Words in the generators are tuples of nonzero ints: 1 for a, -1 for a^-1,
2 for b, -2 for b^-1. Word order is shortlex with letters ranked
a < a^-1 < b < b^-1.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationError, DomainError, InvalidElementError

Word = tuple[int, ...]

_LETTER_RANK = {1: 0, -1: 1, 2: 2, -2: 3}
_LETTER_NAME = {1: "a", -1: "A", 2: "b", -2: "B"}
_NAME_LETTER = {v: k for k, v in _LETTER_NAME.items()}

# Generator matrices and inverses as flat (a, b, c, d) integer tuples.
_MAT = {
    1: (1, 2, 0, 1),
    -1: (1, -2, 0, 1),
    2: (1, 0, 2, 1),
    -2: (1, 0, -2, 1),
}
_IDENT = (1, 0, 0, 1)


@dataclass(frozen=True)
class HPoint:
    """Point x + iy of the open upper half-plane."""

    x: float
    y: float

    def __post_init__(self):
        if not self.y > 0:
            raise DomainError(f"point must have positive imaginary part, got y={self.y}")

    @classmethod
    def from_complex(cls, z: complex) -> "HPoint":
        return cls(float(z.real), float(z.imag))

    def as_complex(self) -> complex:
        return complex(self.x, self.y)


@dataclass(frozen=True)
class MobiusMatrix:
    """Determinant-one 2x2 integer matrix, identified projectively with its negative."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if det != 1:
            raise InvalidElementError(f"determinant must be 1, got {det}")

    def _normalized(self) -> tuple[int, int, int, int]:
        # Flip the overall sign so the first nonzero entry is positive.
        for v in (self.a, self.b, self.c, self.d):
            if v != 0:
                if v < 0:
                    return (-self.a, -self.b, -self.c, -self.d)
                break
        return (self.a, self.b, self.c, self.d)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MobiusMatrix):
            return NotImplemented
        return self._normalized() == other._normalized()

    def __hash__(self) -> int:
        return hash(self._normalized())

    def __matmul__(self, other: "MobiusMatrix") -> "MobiusMatrix":
        return MobiusMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "MobiusMatrix":
        return MobiusMatrix(self.d, -self.b, -self.c, self.a)

    def trace(self) -> int:
        return self.a + self.d

    def apply(self, z: complex) -> complex:
        return (self.a * z + self.b) / (self.c * z + self.d)


IDENTITY = MobiusMatrix(1, 0, 0, 1)
GEN_A = MobiusMatrix(*_MAT[1])
GEN_B = MobiusMatrix(*_MAT[2])

BASEPOINT = HPoint(0.0, 1.0)


# ---------------------------------------------------------------------------
# words


def word_reduce(letters) -> Word:
    """Freely reduce a letter sequence (cancel adjacent g g^-1 pairs)."""
    out: list[int] = []
    for g in letters:
        if g not in _LETTER_RANK:
            raise InvalidElementError(f"unknown letter {g!r}")
        if out and out[-1] == -g:
            out.pop()
        else:
            out.append(g)
    return tuple(out)


def word_inverse(w: Word) -> Word:
    return tuple(-g for g in reversed(w))


def word_concat(u: Word, v: Word) -> Word:
    return word_reduce(list(u) + list(v))


def word_str(w: Word) -> str:
    """Compact string form, letters a, A, b, B; empty word prints as 'e'."""
    return "".join(_LETTER_NAME[g] for g in w) if w else "e"


def parse_word(s: str) -> Word:
    if s == "e" or s == "":
        return ()
    try:
        return word_reduce(_NAME_LETTER[ch] for ch in s)
    except KeyError as exc:
        raise InvalidElementError(f"bad word string {s!r}") from exc


def word_matrix(w: Word) -> MobiusMatrix:
    m = _IDENT
    for g in w:
        n = _MAT[g]
        m = (
            m[0] * n[0] + m[1] * n[2],
            m[0] * n[1] + m[1] * n[3],
            m[2] * n[0] + m[3] * n[2],
            m[2] * n[1] + m[3] * n[3],
        )
    return MobiusMatrix(*m)


def word_sort_key(w: Word):
    """Shortlex key: length first, then letter ranks a < A < b < B."""
    return (len(w), tuple(_LETTER_RANK[g] for g in w))


# ---------------------------------------------------------------------------
# metric


def mobius_apply(m: MobiusMatrix, z: HPoint) -> HPoint:
    return HPoint.from_complex(m.apply(z.as_complex()))


def hyp_distance(z: HPoint, w: HPoint) -> float:
    """Distance for curvature -1; stable form 2 asinh(|z-w| / (2 sqrt(yz yw)))."""
    dz = math.hypot(z.x - w.x, z.y - w.y)
    return 2.0 * math.asinh(dz / (2.0 * math.sqrt(z.y * w.y)))


def _dist_c(z: complex, w: complex) -> float:
    dz = abs(z - w)
    return 2.0 * math.asinh(dz / (2.0 * math.sqrt(z.imag * w.imag)))


def dist_to_vertical(z: complex, x0: float) -> float:
    """Distance from z to the vertical geodesic Re = x0."""
    return math.asinh(abs(z.real - x0) / z.imag)


def signed_dist_to_circle(z: complex, c: float, r: float) -> float:
    """Signed distance from z to the geodesic semicircle |w - c| = r.

    Positive outside the disc, negative inside; |result| is the hyperbolic
    distance to the geodesic.
    """
    q = (z.real - c) ** 2 + z.imag**2
    return math.asinh((q - r * r) / (2.0 * r * z.imag))


# ---------------------------------------------------------------------------
# fundamental domain

_HALF = 0.5
_QUARTER = 0.25


def in_fundamental_domain(z: HPoint, tol: float = 0.0) -> bool:
    """Membership in F. With tol == 0, left sides closed and right sides open.

    A positive tol relaxes every side by that hyperbolic-ish margin (used for
    mesh vertices that sit on F's boundary up to rounding).
    """
    x, y = z.x, z.y
    if tol > 0.0:
        if x < -1.0 - tol or x > 1.0 + tol:
            return False
        ql = math.hypot(x + _HALF, y)
        qr = math.hypot(x - _HALF, y)
        return ql >= _HALF - tol and qr >= _HALF - tol
    if not (-1.0 <= x < 1.0):
        return False
    ql = (x + _HALF) ** 2 + y * y
    qr = (x - _HALF) ** 2 + y * y
    return ql >= _QUARTER and qr > _QUARTER


def reduce_to_domain(z: HPoint, max_iter: int = 10000) -> tuple[HPoint, Word]:
    """Move z into F; returns (z', w) with w . z = z'.

    Each circle inversion strictly increases Im z, so the loop terminates for
    interior points; the iteration cap guards float pathologies.
    """
    from .errors import NonTerminationError

    cur = z.as_complex()
    letters: list[int] = []  # accumulated left-to-right, newest first
    for _ in range(max_iter):
        x = cur.real
        k = math.floor((x + 1.0) / 2.0)
        if k != 0:
            cur = cur - 2.0 * k
            letters[:0] = [-1] * int(k) if k > 0 else [1] * int(-k)
        qr = (cur.real - _HALF) ** 2 + cur.imag**2
        if qr <= _QUARTER:
            # inside or on the right circle: pull back through b
            den = -2.0 * cur + 1.0
            cur = cur / den
            letters.insert(0, -2)
            continue
        ql = (cur.real + _HALF) ** 2 + cur.imag**2
        if ql < _QUARTER:
            den = 2.0 * cur + 1.0
            cur = cur / den
            letters.insert(0, 2)
            continue
        if -1.0 <= cur.real < 1.0:
            return HPoint.from_complex(cur), word_reduce(letters)
    raise NonTerminationError(f"domain reduction did not settle after {max_iter} steps")


def _dist_lb_to_domain(z: complex) -> float:
    """Lower bound for dist(z, F): the worst violated bounding half-plane.

    F is the intersection of four hyperbolic half-planes, so the distance to
    any single violated one bounds dist(z, F) from below. Returns 0 inside F.
    """
    x, y = z.real, z.imag
    worst = 0.0
    if x < -1.0:
        worst = math.asinh((-1.0 - x) / y)
    elif x > 1.0:
        worst = math.asinh((x - 1.0) / y)
    ql = (x + _HALF) ** 2 + y * y
    if ql < _QUARTER:
        d = math.asinh((_QUARTER - ql) / y)
        if d > worst:
            worst = d
    qr = (x - _HALF) ** 2 + y * y
    if qr < _QUARTER:
        d = math.asinh((_QUARTER - qr) / y)
        if d > worst:
            worst = d
    return worst


# ---------------------------------------------------------------------------
# lattice ball enumeration


@dataclass(frozen=True)
class BallElement:
    word: Word
    mat: MobiusMatrix
    dist: float


# Default exponential rate for the word-length cap. The alive search frontier
# consists of tiles meeting the closed r-ball; along a cusp those reach word
# length ~ sinh(r)/2 = e^r/2, so 1.25 leaves a e^{r/4} margin over the
# measured frontier growth. See lattice_ball.
PRUNE_C = 1.25


def lattice_ball(
    o: HPoint = BASEPOINT,
    r: float = 2.0,
    prune_c: float = PRUNE_C,
    max_nodes: int = 5_000_000,
    cap_scale: float = 1.0,
) -> list[BallElement]:
    """All group elements g with d(o, g o) <= r, as (word, matrix, distance).

    Breadth-first search over reduced words: a word w is expanded only when a
    lower bound for dist(w^-1 o, F) stays within r. Completeness: the dual
    graph of the tiling {gF} is the free-group tree, a geodesic [o, g o] with
    d(o, g o) <= r crosses every tile on the tree path from F to gF, so every
    prefix of a ball element passes the test. Words are additionally capped at
    length ceil(cap_scale * e^{prune_c * r}); hitting the cap with the
    frontier still alive raises CalibrationError (prune constant too small).

    cap_scale exists for basepoints high in the cusp: translate chains a^m o
    stay within distance r up to m ~ Im(o) sinh(r)/2, so callers there pass
    cap_scale ~ 1 + Im(o). The default 1.0 is calibrated for the thick part.

    Results are sorted shortlex; the identity is always included.
    """
    if not in_fundamental_domain(o, tol=1e-12):
        raise DomainError("basepoint must lie in the fundamental domain")
    oc = o.as_complex()
    cap = math.ceil(cap_scale * math.exp(prune_c * r))
    margin = r + 1e-9

    out: list[BallElement] = []
    d0 = 0.0
    out.append(BallElement((), IDENTITY, d0))

    # queue entries: (word tuple, matrix tuple of w, w^-1 o, last letter)
    queue: deque = deque()
    queue.append(((), _IDENT, oc, 0))
    nodes = 0
    while queue:
        w, m, p, last = queue.popleft()
        if len(w) >= cap:
            raise CalibrationError(
                f"word-length cap e^({prune_c}*{r}) = {cap} hit with live frontier; "
                "increase prune_c"
            )
        for g in (1, -1, 2, -2):
            if g == -last:
                continue
            gm = _MAT[-g]  # inverse generator acts on p = w^-1 o
            den = gm[2] * p + gm[3]
            p2 = (gm[0] * p + gm[1]) / den
            if _dist_lb_to_domain(p2) > margin:
                continue
            nodes += 1
            if nodes > max_nodes:
                raise CalibrationError(
                    f"frontier exceeded {max_nodes} nodes at r={r}; ball too large"
                )
            n = _MAT[g]
            m2 = (
                m[0] * n[0] + m[1] * n[2],
                m[0] * n[1] + m[1] * n[3],
                m[2] * n[0] + m[3] * n[2],
                m[2] * n[1] + m[3] * n[3],
            )
            w2 = w + (g,)
            d = _dist_c(p2, oc)
            if d <= r:
                out.append(BallElement(w2, MobiusMatrix(*m2), d))
            queue.append((w2, m2, p2, g))

    out.sort(key=lambda e: word_sort_key(e.word))
    return out


def word_length_growth(
    r_grid=None, o: HPoint = BASEPOINT, prune_c: float = PRUNE_C
) -> tuple[list[tuple[float, int]], float]:
    """Max reduced word length over the r-ball, per radius, plus the fitted C.

    C is the smallest exponential rate with max_len(r) <= e^{C r} over the
    grid, i.e. max of ln(max_len)/r.
    """
    if r_grid is None:
        r_grid = [float(k) for k in range(1, 9)]
    table: list[tuple[float, int]] = []
    c_meas = 0.0
    for r in r_grid:
        ball = lattice_ball(o, r, prune_c=prune_c)
        max_len = max(len(e.word) for e in ball)
        table.append((float(r), max_len))
        if r > 0 and max_len >= 2:
            c_meas = max(c_meas, math.log(max_len) / r)
    return table, c_meas


# ---------------------------------------------------------------------------
# compact core and constants

# The core K cuts F at the unit-length horocycles: y = 2 for the cusp at oo
# and the radius-1/4 tangent discs at -1, 0, 1. All eight boundary arcs meet
# at right angles; the corner coordinates below are exact rationals.
_CORE_TOP_Y = 2.0
_CORE_DISC_R = 0.25


def core_boundary_points(per_piece: int = 260) -> np.ndarray:
    """Dense complex samples of the boundary of the compact core K."""
    ts = np.linspace(0.0, 1.0, per_piece)
    pieces = []

    # top horocycle y = 2
    pieces.append((-1.0 + 2.0 * ts) + 2.0j)
    # verticals x = +-1, y in [1/2, 2]
    ys = 0.5 + 1.5 * ts
    pieces.append(-1.0 + 1j * ys)
    pieces.append(1.0 + 1j * ys)

    def arc(c: complex, r: float, th0: float, th1: float) -> np.ndarray:
        th = th0 + (th1 - th0) * ts
        return c + r * np.exp(1j * th)

    # horoball arcs: circles of radius 1/4 centred at -1, 0, 1 (+ i/4)
    # corners: (-1, 1/2)..(-4/5, 2/5); (-1/5, 2/5)..(1/5, 2/5); (4/5, 2/5)..(1, 1/2)
    a1 = math.atan2(0.4 - 0.25, -0.8 + 1.0)  # on circle at -1, corner (-4/5, 2/5)
    pieces.append(arc(-1 + 0.25j, 0.25, math.pi / 2, a1))
    a2 = math.atan2(0.4 - 0.25, -0.2)  # circle at 0, corner (-1/5, 2/5)
    a3 = math.atan2(0.4 - 0.25, 0.2)
    pieces.append(arc(0 + 0.25j, 0.25, a2, a3))
    pieces.append(arc(1 + 0.25j, 0.25, math.pi - a1, math.pi / 2))

    # side-circle arcs between the horoball corners, through (-+1/2, 1/2)
    b0 = math.atan2(0.4, -0.8 + 0.5)  # (-4/5, 2/5) seen from -1/2
    b1 = math.atan2(0.4, -0.2 + 0.5)
    pieces.append(arc(-0.5 + 0j, 0.5, b0, b1))
    pieces.append(arc(0.5 + 0j, 0.5, math.pi - b1, math.pi - b0))

    return np.concatenate(pieces)


def _pairwise_max_dist(zs: np.ndarray) -> float:
    x, y = zs.real, zs.imag
    dx2 = (x[:, None] - x[None, :]) ** 2 + (y[:, None] - y[None, :]) ** 2
    ch = 1.0 + dx2 / (2.0 * y[:, None] * y[None, :])
    return float(np.arccosh(ch.max()))


@dataclass(frozen=True)
class DomainConstants:
    """Measured geometric constants of the base surface.

    C: word-length growth rate measured over lattice balls;
    ell0: systole (shortest closed geodesic length);
    R0: covering radius of the core K seen from the basepoint i;
    D: diameter of K;
    eps: margin parameter, constrained by 6*C*eps < 1/4 and 2*eps < 1/4.
    """

    C: float
    ell0: float
    R0: float
    D: float
    eps: float
    growth_table: tuple = field(default=(), compare=False)

    def check(self) -> None:
        if not (6.0 * self.C * self.eps < 0.25 and 2.0 * self.eps < 0.25):
            raise CalibrationError(
                f"eps={self.eps} too large for C={self.C}: need 6*C*eps < 1/4 and eps < 1/8"
            )


def systole_from_ball(r: float = 6.0) -> float:
    """Shortest translation length 2 arccosh(|tr|/2) among hyperbolic ball elements."""
    best = math.inf
    for e in lattice_ball(BASEPOINT, r):
        t = abs(e.mat.trace())
        if t > 2:
            best = min(best, 2.0 * math.acosh(t / 2.0))
    if not math.isfinite(best):
        raise CalibrationError(f"no hyperbolic element found within radius {r}")
    return best


def compute_domain_constants(eps: float = 0.04, growth_grid=None) -> DomainConstants:
    table, c_meas = word_length_growth(growth_grid or [float(k) for k in range(1, 7)])
    ell0 = systole_from_ball(6.0)
    pts = core_boundary_points()
    o = BASEPOINT.as_complex()
    r0 = max(_dist_c(o, complex(z)) for z in pts)
    diam = _pairwise_max_dist(pts)
    const = DomainConstants(
        C=c_meas, ell0=ell0, R0=r0, D=diam, eps=eps, growth_table=tuple(table)
    )
    const.check()
    return const
