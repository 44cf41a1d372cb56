"""Radial kernels, Selberg transforms, orbit sums, and smooth cutoffs.

The kernel side: compactly supported radial profiles k(rho) on the
hyperbolic plane, their Selberg transforms h(r) computed by the standard
two-step chain

    g(u) = sqrt(2) * int_{|u|}^T k(rho) sinh(rho) / sqrt(cosh rho - cosh u) drho
    h(r) = int_R g(u) e^{iru} du,

self-convolutions k * k (a *-morphism: the transform of k * k is h^2), and
signed orbit sums over a cover.  The cutoff side: a smooth step J with
sqrt(1 - J^2) also smooth, the derived cusp partition J0^2 + J1^2 + J2^2 = 1,
the tube bump J*, and the quadratic-form identity they satisfy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .characters import CoverCharacter, basis_hash, holonomy
from .covers import PermutationPair, SpanningBasis, walk_word
from .errors import (
    BasisMismatchError,
    ConfigError,
    DomainError,
    InvalidBandError,
    NumericError,
)
from .halfplane import HPoint, lattice_ball, reduce_to_domain

__all__ = [
    "KernelProfile",
    "SpectralParameter",
    "indicator_profile",
    "selberg_transform",
    "indicator_h",
    "indicator_h_at_zero",
    "kernel_selfconv",
    "lower_bound_ratio",
    "LowerBoundReport",
    "pretrace_rhs",
    "PretraceSum",
    "BumpFamily",
    "bump_family",
    "bump_eval",
    "gaussian_bump",
    "random_smooth_functions",
    "ims_identity_check",
    "frakJ_l1",
    "tube_area",
    "TubeArea",
    "collar_mass_ratio",
    "CollarRatio",
    "kernel_table_csv",
]


# ---------------------------------------------------------------------------
# kernel profiles


@dataclass
class KernelProfile:
    """Radial function with compact support; vanishes beyond `support`."""

    k: object  # vectorized callable rho -> value
    support: float
    kind: str = "generic"  # "indicator" | "tabulated" | "generic"
    meta: dict = field(default_factory=dict)

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        inside = rho <= self.support + 1e-15
        out = np.where(inside, self.k(np.minimum(rho, self.support)), 0.0)
        return out if out.ndim else float(out)


def indicator_profile(t: float) -> KernelProfile:
    """k_t(rho) = 1{rho <= t} / sqrt(cosh t)."""
    if t <= 0:
        raise DomainError("support radius must be positive")
    c = 1.0 / math.sqrt(math.cosh(t))
    return KernelProfile(
        k=lambda rho: np.full_like(np.asarray(rho, dtype=float), c),
        support=float(t),
        kind="indicator",
        meta={"t": float(t), "height": c},
    )


@dataclass(frozen=True)
class SpectralParameter:
    """lam in [0, 1/4]; the parameter r(lam) = i*s is stored through s."""

    lam: float

    def __post_init__(self):
        if not 0.0 <= self.lam <= 0.25:
            raise DomainError(f"lam must lie in [0, 1/4], got {self.lam}")

    @property
    def s(self) -> float:
        return math.sqrt(0.25 - self.lam)

    @classmethod
    def from_s(cls, s: float) -> "SpectralParameter":
        if not 0.0 <= s <= 0.5:
            raise DomainError(f"s must lie in [0, 1/2], got {s}")
        return cls(0.25 - s * s)


# ---------------------------------------------------------------------------
# Selberg transform chain

_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-10, limit=200)


def _quad(f, a, b, tag: str) -> float:
    # full_output silences the roundoff warning; tabulated integrands bottom
    # out near 1e-6 absolute, which the relative targets tolerate easily
    res = integrate.quad(f, a, b, full_output=1, **_QUAD_OPTS)
    val, err = res[0], res[1]
    if err > max(1e-7 * abs(val), 1e-5):
        raise NumericError(f"quadrature for {tag} did not converge (err={err:.2e})")
    return val


def _chain_g(profile: KernelProfile, u: float) -> float:
    """g(u) by the inner integral; the sqrt singularity at rho = |u| is
    removed by substituting w = sqrt(cosh rho - cosh u)."""
    T = profile.support
    au = abs(u)
    if au >= T:
        return 0.0
    cu = math.cosh(au)
    wmax = math.sqrt(math.cosh(T) - cu)

    def integrand(w):
        rho = math.acosh(min(cu + w * w, math.cosh(T)))
        return float(profile(rho))

    return 2.0 * math.sqrt(2.0) * _quad(integrand, 0.0, wmax, "g(u)")


def selberg_transform(
    profile: KernelProfile, s_values, kind: str = "imag"
) -> np.ndarray:
    """h at r = i*s (kind="imag", weight cosh(su)) or at real r = s
    (kind="real", weight cos(su)), via the two-step chain.

    h(i/2) equals the hyperbolic-area integral of the kernel.
    """
    if kind not in ("imag", "real"):
        raise ConfigError(f"kind must be 'imag' or 'real', got {kind!r}")
    T = profile.support
    out = []
    for s in np.atleast_1d(np.asarray(s_values, dtype=float)):
        if kind == "imag":
            weight = lambda u: math.cosh(s * u)
        else:
            weight = lambda u: math.cos(s * u)
        val = 2.0 * _quad(lambda u: _chain_g(profile, u) * weight(u), 0.0, T, "h(s)")
        out.append(val)
    return np.asarray(out)


def _indicator_g(t: float, u) -> np.ndarray:
    """Closed form of the chain's g for the indicator profile:
    g_t(u) = 2 sqrt(2) sqrt(cosh t - cosh u) / sqrt(cosh t) on |u| <= t."""
    u = np.asarray(u, dtype=float)
    val = 2.0 * math.sqrt(2.0) * np.sqrt(
        np.maximum(math.cosh(t) - np.cosh(u), 0.0)
    ) / math.sqrt(math.cosh(t))
    return np.where(np.abs(u) <= t, val, 0.0)


def indicator_h(t: float, s: float) -> float:
    """h_t(is) through the closed-form g_t; independent of the generic chain."""
    return 2.0 * _quad(
        lambda u: float(_indicator_g(t, u)) * math.cosh(s * u), 0.0, t, "h_t"
    )


def indicator_h_at_zero(t: float) -> float:
    """h_t(i/2) = 2 pi (cosh t - 1) / sqrt(cosh t), the ball-volume integral."""
    return 2.0 * math.pi * (math.cosh(t) - 1.0) / math.sqrt(math.cosh(t))


# ---------------------------------------------------------------------------
# self-convolution


def _lens_angle(cr1: float, sr1: float, crho: float, srho: float, ct: float) -> float:
    """Angular measure {theta : d(w, z') <= t} for w on the circle of radius
    r1 about z, with d(z, z') = rho: cosh d = cosh r1 cosh rho -
    sinh r1 sinh rho cos theta."""
    denom = sr1 * srho
    if denom == 0.0:
        return 2.0 * math.pi if cr1 * crho <= ct else 0.0
    c = (cr1 * crho - ct) / denom
    return 2.0 * math.acos(min(1.0, max(-1.0, c)))


def _selfconv_indicator_direct(t: float, rho: float) -> float:
    """K_t(rho) = area(B(z,t) cap B(z',t)) / cosh t by polar coordinates.

    Circles of radius r1 <= t - rho around the first center lie entirely in
    the second ball (angle 2 pi, exact area), and circles of radius
    r1 < rho - t miss it entirely; splitting there keeps the quadrature on
    the genuine transition band, which for small rho is far too narrow for
    an unhinted adaptive pass to find."""
    if rho >= 2.0 * t:
        return 0.0
    if rho <= 1e-12:
        return 2.0 * math.pi * (math.cosh(t) - 1.0) / math.cosh(t)
    ct, crho, srho = math.cosh(t), math.cosh(rho), math.sinh(rho)

    def integrand(r1):
        return _lens_angle(math.cosh(r1), math.sinh(r1), crho, srho, ct) * math.sinh(
            r1
        )

    inner = 0.0
    lo = rho - t
    if rho < t:
        inner = 2.0 * math.pi * (math.cosh(t - rho) - 1.0)
        lo = t - rho
    return (inner + _quad(integrand, lo, t, "K_t")) / ct


def _selfconv_generic_direct(profile: KernelProfile, rho: float) -> float:
    """(k*k)(rho) by nested polar quadrature around the first center."""
    T = profile.support
    if rho >= 2.0 * T:
        return 0.0
    crho, srho = math.cosh(rho), math.sinh(rho)

    def angular(r1):
        cr1, sr1 = math.cosh(r1), math.sinh(r1)

        def inner(theta):
            cd = cr1 * crho - sr1 * srho * math.cos(theta)
            return float(profile(math.acosh(max(cd, 1.0))))

        return integrate.quad(inner, 0.0, math.pi, **_QUAD_OPTS)[0] * 2.0

    return _quad(lambda r1: angular(r1) * float(profile(r1)) * math.sinh(r1), 0.0, T,
                 "k*k")


def kernel_selfconv(
    profile: KernelProfile, tabulate: bool = True, n_table: int = 1200
) -> KernelProfile:
    """k * k with support radius 2T, K(0) = the area integral of k^2.

    For the indicator profile the angular integral collapses to an arccos and
    K(0) = 2 pi (cosh t - 1)/cosh t.  The returned profile is spline-backed
    for fast evaluation; `meta["direct"]` keeps the quadrature route for spot
    checks, and `meta["sup_value"]` records the measured peak.
    """
    T = profile.support
    if profile.kind == "indicator":
        t = profile.meta["t"]
        direct = lambda rho: _selfconv_indicator_direct(t, float(rho))
    else:
        direct = lambda rho: _selfconv_generic_direct(profile, float(rho))
    meta = {"direct": direct, "base_support": T}
    if not tabulate:
        out = KernelProfile(
            k=np.vectorize(direct), support=2.0 * T, kind="generic", meta=meta
        )
        out.meta["sup_value"] = direct(0.0)
        return out
    # cosine-clustered nodes: tight spacing at rho = 0 (linear head) and at
    # rho = 2T, where the profile vanishes like a 3/2 power
    grid = T * (1.0 - np.cos(np.linspace(0.0, math.pi, n_table)))
    vals = np.array([direct(r) for r in grid])
    spline = CubicSpline(grid, vals)

    def k(rho):
        rho = np.asarray(rho, dtype=float)
        return np.where(rho <= 2.0 * T, np.maximum(spline(np.minimum(rho, 2 * T)), 0.0), 0.0)

    meta["sup_value"] = float(vals.max())
    return KernelProfile(k=k, support=2.0 * T, kind="tabulated", meta=meta)


# ---------------------------------------------------------------------------
# lower bound ratio


@dataclass
class LowerBoundReport:
    t_grid: np.ndarray
    lam_grid: np.ndarray
    table: np.ndarray  # ratio[ti, li]
    min_ratio: float
    argmin: tuple

    def to_csv(self) -> str:
        lines = ["t,lambda,ratio"]
        for i, t in enumerate(self.t_grid):
            for j, lam in enumerate(self.lam_grid):
                lines.append(f"{t:.6g},{lam:.6g},{format(self.table[i, j], '.17g')}")
        return "\n".join(lines) + "\n"


def lower_bound_ratio(t_grid, lam_grid) -> LowerBoundReport:
    """min over the grid of h_t(r(lam)) / sinh(t sqrt(1/4 - lam)).

    Requires t >= 3 and lam < 1/4; the minimum must come out strictly
    positive (the transform dominates sinh(t s) uniformly once t >= 3).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    lam_grid = np.asarray(lam_grid, dtype=float)
    if t_grid.min() < 3.0:
        raise DomainError("ratio grid needs t >= 3")
    if lam_grid.max() >= 0.25 or lam_grid.min() < 0.0:
        raise DomainError("ratio grid needs 0 <= lam < 1/4")
    table = np.empty((t_grid.size, lam_grid.size))
    for i, t in enumerate(t_grid):
        for j, lam in enumerate(lam_grid):
            s = SpectralParameter(lam).s
            table[i, j] = indicator_h(float(t), s) / math.sinh(float(t) * s)
    k = int(np.argmin(table))
    i, j = divmod(k, lam_grid.size)
    return LowerBoundReport(
        t_grid=t_grid,
        lam_grid=lam_grid,
        table=table,
        min_ratio=float(table[i, j]),
        argmin=(float(t_grid[i]), float(lam_grid[j])),
    )


# ---------------------------------------------------------------------------
# orbit sums over a cover


@dataclass
class PretraceSum:
    """Signed kernel sum over the deck orbit of one fiber point."""

    value: float
    n_terms: int
    fiber: int
    reduced_fiber: int
    terms: list | None = None


def pretrace_rhs(
    z: HPoint,
    pair: PermutationPair,
    basis: SpanningBasis,
    char: CoverCharacter,
    t: float,
    fiber: int,
    kernel: KernelProfile | None = None,
    keep_terms: bool = False,
) -> PretraceSum:
    """Sum of char(gamma) k(d(z, gamma z)) over the words gamma whose
    permutation fixes the given fiber index.

    z is first moved into the fundamental domain by some word w (the sum is
    conjugation-invariant: gamma -> w gamma w^-1 relabels the orbit, carries
    the fiber to its w-image, and the tree-gauge character value is
    unchanged because the w-crossings cancel in pairs).  The orbit is then
    enumerated by lattice_ball out to the kernel support; basepoints high in
    the cusp legitimately meet long translate chains, so the word-length cap
    is scaled with Im(z).
    """
    if char.fingerprint != basis_hash(basis):
        raise BasisMismatchError("character does not belong to the given basis")
    if not 0 <= fiber < pair.n:
        raise DomainError(f"fiber index {fiber} out of range")
    if t > 6.0:
        raise DomainError("orbit enumeration is desk-scale: t <= 6")
    if kernel is None:
        kernel = kernel_selfconv(indicator_profile(t))
    z0, w_red = reduce_to_domain(z)
    i0 = walk_word(pair, w_red, fiber)
    ball = lattice_ball(z0, r=kernel.support, cap_scale=4.0 * (1.0 + z0.y))
    total = 0.0
    n_terms = 0
    terms = [] if keep_terms else None
    for el in ball:
        if walk_word(pair, el.word, i0) != i0:
            continue
        end, sign = holonomy(char, el.word, i0)
        assert end == i0
        total += sign * float(kernel(el.dist))
        n_terms += 1
        if keep_terms:
            terms.append((el.word, el.dist, sign))
    return PretraceSum(
        value=total, n_terms=n_terms, fiber=fiber, reduced_fiber=i0, terms=terms
    )


# ---------------------------------------------------------------------------
# smooth step and bump family

_HALF_PI = 0.5 * math.pi


def _phi(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    with np.errstate(over="ignore"):
        out[pos] = np.exp(-1.0 / x[pos])
    return out


def _phi_prime(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos]) / (x[pos] * x[pos])
    return out


def _smoothstep(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    a = _phi(x)
    b = _phi(1.0 - np.asarray(x, dtype=float))
    return a / (a + b)


def _smoothstep_prime(x):
    x = np.asarray(x, dtype=float)
    a, b = _phi(x), _phi(1.0 - x)
    da, db = _phi_prime(x), _phi_prime(1.0 - x)
    s = a + b
    out = np.zeros_like(x)
    inside = (x > 0) & (x < 1)
    out[inside] = (da[inside] * b[inside] + a[inside] * db[inside]) / (
        s[inside] * s[inside]
    )
    return out


def profile_j(r):
    """J(r) = sin(pi/2 * step(r - 2)): 0 on (-inf, 2], 1 on [3, inf)."""
    return np.sin(_HALF_PI * _smoothstep(np.asarray(r, dtype=float) - 2.0))


def profile_j_prime(r):
    r = np.asarray(r, dtype=float) - 2.0
    return _HALF_PI * _smoothstep_prime(r) * np.cos(_HALF_PI * _smoothstep(r))


def profile_q(r):
    """Q = sqrt(1 - J^2) = cos(pi/2 * step(r - 2)), smooth by construction."""
    return np.cos(_HALF_PI * _smoothstep(np.asarray(r, dtype=float) - 2.0))


def profile_q_prime(r):
    r = np.asarray(r, dtype=float) - 2.0
    return -_HALF_PI * _smoothstep_prime(r) * np.sin(_HALF_PI * _smoothstep(r))


@dataclass(frozen=True)
class BumpFamily:
    """Cusp partition of unity in a single vertical chart, plus the tube bump.

    J1(y) = J(y/L1) turns on across y in [2 L1, 3 L1]; J2(y) = J(6 L2 / y)
    turns on downward across y in [2 L2, 3 L2]; J0 = Q(y/L1) Q(6 L2 / y)
    closes the partition J0^2 + J1^2 + J2^2 = 1 exactly.  Jstar(rho) =
    J(2|rho|/kappa) vanishes for |rho| <= kappa and is 1 for |rho| >= 3 kappa / 2.
    """

    L1: float
    L2: float
    Omega: float
    kappa: float = 0.5 * math.asinh(0.125)

    def j1(self, y):
        return profile_j(np.asarray(y, dtype=float) / self.L1)

    def dj1(self, y):
        return profile_j_prime(np.asarray(y, dtype=float) / self.L1) / self.L1

    def j2(self, y):
        return profile_j(6.0 * self.L2 / np.asarray(y, dtype=float))

    def dj2(self, y):
        y = np.asarray(y, dtype=float)
        return profile_j_prime(6.0 * self.L2 / y) * (-6.0 * self.L2 / (y * y))

    def j0(self, y):
        y = np.asarray(y, dtype=float)
        return profile_q(y / self.L1) * profile_q(6.0 * self.L2 / y)

    def dj0(self, y):
        y = np.asarray(y, dtype=float)
        q1, q2 = profile_q(y / self.L1), profile_q(6.0 * self.L2 / y)
        dq1 = profile_q_prime(y / self.L1) / self.L1
        dq2 = profile_q_prime(6.0 * self.L2 / y) * (-6.0 * self.L2 / (y * y))
        return dq1 * q2 + q1 * dq2

    def jstar(self, rho):
        return profile_j(2.0 * np.abs(np.asarray(rho, dtype=float)) / self.kappa)

    def djstar(self, rho):
        rho = np.asarray(rho, dtype=float)
        return (
            profile_j_prime(2.0 * np.abs(rho) / self.kappa)
            * np.sign(rho)
            * (2.0 / self.kappa)
        )


def bump_family(L1: float = 8.0, L2: float = 1.0, Omega: float = 1.0) -> BumpFamily:
    if L1 < 1.0 or L2 < 1.0:
        raise DomainError("cusp scales must be >= 1")
    if 3.0 * L2 >= 2.0 * L1:
        raise ConfigError(
            f"cusp strips overlap: [2*{L2}, 3*{L2}] meets [2*{L1}, 3*{L1}]"
        )
    if Omega <= 0:
        raise DomainError("Omega must be positive")
    return BumpFamily(L1=float(L1), L2=float(L2), Omega=float(Omega))


_BUMP_EVAL = {
    "J": (lambda fam, p: profile_j(p), lambda fam, p: profile_j_prime(p)),
    "J0": (BumpFamily.j0, BumpFamily.dj0),
    "J1": (BumpFamily.j1, BumpFamily.dj1),
    "J2": (BumpFamily.j2, BumpFamily.dj2),
    "Jstar": (BumpFamily.jstar, BumpFamily.djstar),
}


def bump_eval(fam: BumpFamily, which: str, points):
    """(values, gradients) of a family member at the given chart points."""
    try:
        f, df = _BUMP_EVAL[which]
    except KeyError:
        raise ConfigError(f"unknown bump {which!r}; choose from {sorted(_BUMP_EVAL)}")
    return f(fam, points), df(fam, points)


# ---------------------------------------------------------------------------
# quadratic-form identity


@dataclass(frozen=True)
class SmoothTestFunction:
    """f with analytic first derivatives, for quadrature-side checks."""

    f: object
    fx: object
    fy: object
    label: str = ""


def gaussian_bump(x0, y0, ax, ay, amp=1.0, label="gaussian") -> SmoothTestFunction:
    def f(x, y):
        return amp * np.exp(-ax * (x - x0) ** 2 - ay * (y - y0) ** 2)

    def fx(x, y):
        return -2.0 * ax * (x - x0) * f(x, y)

    def fy(x, y):
        return -2.0 * ay * (y - y0) * f(x, y)

    return SmoothTestFunction(f=f, fx=fx, fy=fy, label=label)


def random_smooth_functions(
    count: int, seed: int, domain=(0.0, 4.0, 0.5, 32.0)
) -> list[SmoothTestFunction]:
    """Sums of a few random Gaussian bumps inside the chart domain."""
    rng = np.random.default_rng(seed)
    x0d, x1d, y0d, y1d = domain
    out = []
    for k in range(count):
        parts = [
            gaussian_bump(
                x0=rng.uniform(x0d + 0.2 * (x1d - x0d), x1d - 0.2 * (x1d - x0d)),
                y0=rng.uniform(y0d + 0.1 * (y1d - y0d), y1d - 0.1 * (y1d - y0d)),
                ax=rng.uniform(0.3, 3.0),
                ay=rng.uniform(0.02, 0.5),
                amp=rng.uniform(0.5, 2.0),
            )
            for _ in range(3)
        ]

        def f(x, y, parts=parts):
            return sum(p.f(x, y) for p in parts)

        def fx(x, y, parts=parts):
            return sum(p.fx(x, y) for p in parts)

        def fy(x, y, parts=parts):
            return sum(p.fy(x, y) for p in parts)

        out.append(SmoothTestFunction(f=f, fx=fx, fy=fy, label=f"random-{k}"))
    return out


def _tensor_grid(domain, nx, ny):
    x0, x1, y0, y1 = domain
    gx, wx = np.polynomial.legendre.leggauss(nx)
    gy, wy = np.polynomial.legendre.leggauss(ny)
    xs = 0.5 * (x1 - x0) * (gx + 1.0) + x0
    ys = 0.5 * (y1 - y0) * (gy + 1.0) + y0
    W = np.outer(wx, wy) * (0.25 * (x1 - x0) * (y1 - y0))
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return X, Y, W


def ims_identity_check(
    fam: BumpFamily,
    functions,
    nx: int = 160,
    ny: int = 160,
    domain=(0.0, 4.0, 0.5, 32.0),
) -> float:
    """Max relative residual of the localization identity

        <Delta f, f> = sum_i <Delta(J_i f), J_i f> - <(sum_i |grad J_i|^2) f, f>

    in quadratic-form shape.  In the hyperbolic metric every term reduces to
    a plain Euclidean Dirichlet integral (the conformal factors cancel), and
    since sum J_i^2 = 1 the integrands agree pointwise; quadrature only has
    to not break ties.
    """
    X, Y, W = _tensor_grid(domain, nx, ny)
    js = [(fam.j0(Y), fam.dj0(Y)), (fam.j1(Y), fam.dj1(Y)), (fam.j2(Y), fam.dj2(Y))]
    grad2 = sum(dj * dj for _, dj in js)
    worst = 0.0
    for fn in functions:
        F, FX, FY = fn.f(X, Y), fn.fx(X, Y), fn.fy(X, Y)
        A = float(np.sum(W * (FX * FX + FY * FY)))
        B = 0.0
        for j, dj in js:
            gx = j * FX
            gy = dj * F + j * FY
            B += float(np.sum(W * (gx * gx + gy * gy)))
        C = float(np.sum(W * grad2 * F * F))
        residual = abs(A - B + C) / max(abs(A), 1e-300)
        worst = max(worst, residual)
    return worst


def frakJ_l1(
    L1: float,
    L2: float,
    n_nodes: int = 200,
    dj=profile_j_prime,
    dq=profile_q_prime,
) -> float:
    """Hyperbolic-area integral of sum_i |grad J_i|^2 over both cusp strips.

    Each cusp is treated in its own vertical chart: the strip is
    x in [0, L], y in [2L, 3L], the bump is J(y/L) with co-bump Q(y/L), and
    |grad|^2 = y^2 (d/dy)^2 against the area form dx dy / y^2.  Substituting
    u = y/L shows the value is L-free: int_2^3 (J'^2 + Q'^2) du per cusp.
    The quadrature below integrates the strip literally.  dj/dq exist so a
    degenerate profile (constant J, zero gradient) can be pushed through.
    """
    if L1 < 1.0 or L2 < 1.0:
        raise DomainError("cusp scales must be >= 1")

    def one_strip(L):
        X, Y, W = _tensor_grid((0.0, L, 2.0 * L, 3.0 * L), 8, n_nodes)
        dju = dj(Y / L) / L
        dqu = dq(Y / L) / L
        # y^2 gradient-square times 1/y^2 area density: the y factors cancel
        return float(np.sum(W * (dju * dju + dqu * dqu)))

    return one_strip(float(L1)) + one_strip(float(L2))


# ---------------------------------------------------------------------------
# tube area and collar masses


@dataclass(frozen=True)
class TubeArea:
    closed_form: float
    quadrature: float
    kappa: float
    width_factor: float  # int_{-kappa}^{kappa} cosh = 2 sinh kappa


def tube_area(Omega: float, L1: float, L2: float) -> TubeArea:
    """Area of the tube chart: (2 Omega + log 4L1 + log 4L2) * 2 sinh kappa.

    Cross-checked by quadrature of the metric ds^2 = drho^2 + cosh^2(rho) dt^2
    over the rectangle |rho| <= kappa, 0 <= t <= 2 Omega + log 4L1 + log 4L2.
    """
    if Omega <= 0:
        raise DomainError("Omega must be positive")
    if L1 < 1.0 or L2 < 1.0:
        raise DomainError("cusp scales must be >= 1")
    kappa = 0.5 * math.asinh(0.125)
    length = 2.0 * Omega + math.log(4.0 * L1) + math.log(4.0 * L2)
    width = 2.0 * math.sinh(kappa)
    g, w = np.polynomial.legendre.leggauss(64)
    rho = kappa * g
    quad_width = float(np.sum(w * np.cosh(rho)) * kappa)
    return TubeArea(
        closed_form=length * width,
        quadrature=length * quad_width,
        kappa=kappa,
        width_factor=width,
    )


@dataclass(frozen=True)
class CollarRatio:
    lower_mass: float  # band L <= h < 2L
    upper_mass: float  # band h >= 2L
    ratio: float
    infinite: bool


def collar_mass_ratio(heights, weights, values, L: float, Y: float) -> CollarRatio:
    """Mass in the band [L, 2L) against the mass above 2L, in cusp height.

    heights: per-node cusp heights; weights: lumped mass entries; values:
    the eigenvector.  A vector supported entirely below the band divides by
    zero; that is reported through the `infinite` flag rather than raised.
    """
    if Y < 4.0 * L:
        raise InvalidBandError(f"truncation {Y} too shallow for band scale {L}")
    h = np.asarray(heights, dtype=float)
    m = np.asarray(weights, dtype=float) * np.asarray(values, dtype=float) ** 2
    lower = float(m[(h >= L) & (h < 2.0 * L)].sum())
    upper = float(m[h >= 2.0 * L].sum())
    if upper <= 0.0:
        return CollarRatio(lower, upper, math.inf, True)
    return CollarRatio(lower, upper, lower / upper, False)


# ---------------------------------------------------------------------------
# CSV emission


def kernel_table_csv(profile: KernelProfile, num: int = 101) -> str:
    rhos = np.linspace(0.0, profile.support, num)
    lines = ["rho,k"]
    for r in rhos:
        lines.append(f"{r:.10g},{format(float(profile(r)), '.17g')}")
    return "\n".join(lines) + "\n"
