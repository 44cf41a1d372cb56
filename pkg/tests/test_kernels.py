"""Selberg transforms, self-convolution, orbit sums, bumps, tube geometry."""

import math

import numpy as np
import pytest

from coverlab import characters as ch
from coverlab import covers as cv
from coverlab import kernels as kn
from coverlab.errors import (
    BasisMismatchError,
    CalibrationError,
    ConfigError,
    DomainError,
    InvalidBandError,
)
from coverlab.halfplane import HPoint, lattice_ball


def _h_at_zero_closed(t):
    return 2.0 * math.pi * (math.cosh(t) - 1.0) / math.sqrt(math.cosh(t))


# ---------------------------------------------------------------------------
# Selberg transform


def test_zero_kernel_transforms_to_zero():
    prof = kn.KernelProfile(k=lambda r: 0.0 * np.asarray(r), support=3.0)
    assert np.all(kn.selberg_transform(prof, [0.5, 0.3, 0.1]) == 0.0)


def test_transform_at_lambda_zero_matches_area_integral():
    for t in (3.0, 4.0, 5.0):
        closed = _h_at_zero_closed(t)
        chain = kn.selberg_transform(kn.indicator_profile(t), [0.5])[0]
        fast = kn.indicator_h(t, 0.5)
        assert chain == pytest.approx(closed, rel=1e-8)
        assert fast == pytest.approx(closed, rel=1e-8)


def test_transform_chain_matches_fast_path_off_zero():
    prof = kn.indicator_profile(3.0)
    for s in (0.1, 0.25, 0.4):
        chain = kn.selberg_transform(prof, [s])[0]
        assert chain == pytest.approx(kn.indicator_h(3.0, s), rel=1e-8)


def test_selfconv_transform_is_square():
    # the transform turns convolution into multiplication
    K = kn.kernel_selfconv(kn.indicator_profile(3.0))
    s_pts = [0.5, 0.4, 0.3, 0.2, 0.1]
    H = kn.selberg_transform(K, s_pts)
    h2 = np.array([kn.indicator_h(3.0, s) for s in s_pts]) ** 2
    assert np.all(np.abs(H - h2) / h2 <= 1e-6)
    # H stays a square (hence >= 0) on a real-r grid as well
    h_real = kn.selberg_transform(K, [0.3, 1.0, 2.0], kind="real")
    assert np.all(h_real >= -1e-9)


def test_spectral_parameter():
    assert kn.SpectralParameter(0.0).s == pytest.approx(0.5)
    assert kn.SpectralParameter(0.25).s == 0.0
    assert kn.SpectralParameter(0.24).s == pytest.approx(0.1)
    assert kn.SpectralParameter.from_s(0.3).lam == pytest.approx(0.25 - 0.09)
    with pytest.raises(DomainError):
        kn.SpectralParameter(0.3)
    with pytest.raises(DomainError):
        kn.SpectralParameter(-0.01)
    with pytest.raises(DomainError):
        kn.SpectralParameter.from_s(0.6)


# ---------------------------------------------------------------------------
# self-convolution


def test_selfconv_support_and_peak():
    t = 3.0
    K = kn.kernel_selfconv(kn.indicator_profile(t))
    assert K.support == 2 * t
    assert K(2 * t + 1e-3) == 0.0
    assert K(10.0) == 0.0
    assert K(0.0) == pytest.approx(
        2.0 * math.pi * (math.cosh(t) - 1.0) / math.cosh(t), rel=1e-12
    )
    rr = np.linspace(0.0, 2 * t, 500)
    vals = K(rr)
    assert np.all(vals >= 0.0)
    assert vals.max() == pytest.approx(K(0.0))


def test_selfconv_spline_matches_direct_quadrature():
    K = kn.kernel_selfconv(kn.indicator_profile(2.5))
    rng = np.random.default_rng(1)
    for rho in rng.uniform(0.0, 5.0, 25):
        assert float(K(rho)) == pytest.approx(
            K.meta["direct"](rho), abs=1e-9, rel=1e-9
        )


def test_selfconv_generic_route_agrees():
    # forcing the nested-quadrature path must reproduce the arccos route
    t = 2.0
    c = 1.0 / math.sqrt(math.cosh(t))
    generic = kn.KernelProfile(
        k=lambda r: np.full_like(np.asarray(r, dtype=float), c), support=t
    )
    for rho in (0.5, 2.0, 3.5):
        got = kn._selfconv_generic_direct(generic, rho)
        want = kn._selfconv_indicator_direct(t, rho)
        # the angular quadrature stalls near the jump; 1e-4 is its floor
        assert got == pytest.approx(want, rel=1e-4, abs=1e-6)


def test_selfconv_against_euclidean_grid():
    # independent geometric route: rasterize the two-ball intersection in
    # upper-half-plane coordinates and integrate dx dy / y^2
    t, rho = 2.0, 1.3
    z1, z2 = complex(0.0, 1.0), complex(0.0, math.exp(rho))
    xs = np.linspace(-4.0, 4.0, 1600)
    ys = np.geomspace(math.exp(-2.5), math.exp(t + rho), 1600)
    X, Y = np.meshgrid(xs, ys, indexing="ij")

    def dist(zx, zy):
        return 2.0 * np.arcsinh(
            np.hypot(X - zx, Y - zy) / (2.0 * np.sqrt(Y * zy))
        )

    inside = (dist(z1.real, z1.imag) <= t) & (dist(z2.real, z2.imag) <= t)
    dx = np.gradient(xs)[:, None]
    dy = np.gradient(ys)[None, :]
    area = float(np.sum(inside * dx * dy / Y**2))
    want = kn._selfconv_indicator_direct(t, rho) * math.cosh(t)
    assert area == pytest.approx(want, rel=5e-3)


# ---------------------------------------------------------------------------
# lower bound ratio


def test_lower_bound_ratio_grid():
    rep = kn.lower_bound_ratio([3.0, 5.0, 10.0], [0.0, 0.12, 0.24])
    assert rep.min_ratio > 0.0
    assert rep.table.shape == (3, 3)
    assert np.all(rep.table > 0.0)
    want = kn.indicator_h(3.0, 0.5) / math.sinh(1.5)
    assert rep.table[0, 0] == pytest.approx(want, rel=1e-10)
    csv = rep.to_csv()
    assert csv.splitlines()[0] == "t,lambda,ratio"
    assert len(csv.splitlines()) == 10


def test_lower_bound_ratio_bounded_under_doubling():
    vals = [
        kn.indicator_h(t, kn.SpectralParameter(0.12).s)
        / math.sinh(t * kn.SpectralParameter(0.12).s)
        for t in (3.0, 6.0, 12.0)
    ]
    assert max(vals) / min(vals) <= 2.0


def test_lower_bound_ratio_preconditions():
    with pytest.raises(DomainError):
        kn.lower_bound_ratio([2.5, 3.0], [0.0])
    with pytest.raises(DomainError):
        kn.lower_bound_ratio([3.0], [0.25])


# ---------------------------------------------------------------------------
# orbit sums


@pytest.fixture(scope="module")
def single_sheet():
    pair = cv.PermutationPair([0], [0])
    return pair, cv.spanning_basis(pair)


@pytest.fixture(scope="module")
def kernel_t2():
    return kn.kernel_selfconv(kn.indicator_profile(2.0))


def test_pretrace_identity_term_dominates(single_sheet, kernel_t2):
    pair, basis = single_sheet
    triv = ch.trivial_character(basis)
    out = kn.pretrace_rhs(
        HPoint(0.3, 1.1), pair, basis, triv, 2.0, 0, kernel=kernel_t2
    )
    assert out.value >= kernel_t2(0.0)
    assert out.n_terms >= 1


def test_pretrace_translation_invariance(single_sheet, kernel_t2):
    # x = 0.25 is exact in binary, so z and z + 2 reduce to the same point
    pair, basis = single_sheet
    triv = ch.trivial_character(basis)
    a = kn.pretrace_rhs(HPoint(0.25, 1.1), pair, basis, triv, 2.0, 0, kernel=kernel_t2)
    b = kn.pretrace_rhs(HPoint(2.25, 1.1), pair, basis, triv, 2.0, 0, kernel=kernel_t2)
    assert a.value == b.value
    assert a.n_terms == b.n_terms


def test_pretrace_twisted_below_trivial(single_sheet, kernel_t2):
    pair, basis = single_sheet
    z = HPoint(0.3, 1.1)
    triv = kn.pretrace_rhs(
        z, pair, basis, ch.trivial_character(basis), 2.0, 0, kernel=kernel_t2
    )
    tw = kn.pretrace_rhs(
        z, pair, basis, ch.restrict((-1, -1), basis), 2.0, 0, kernel=kernel_t2
    )
    assert tw.value <= triv.value


def test_pretrace_matches_base_character_evaluation(kernel_t2):
    # independent route: the restricted character agrees with exponent-sum
    # parity on every stabilizer word, so the sum can be rebuilt from the
    # raw ball without any holonomy bookkeeping
    pair = cv.PermutationPair([1, 0], [0, 1])
    basis = cv.spanning_basis(pair)
    z = HPoint(0.3, 1.1)
    for theta in [(1, 1), (-1, 1), (1, -1), (-1, -1)]:
        for fiber in (0, 1):
            chi = ch.restrict(theta, basis)
            got = kn.pretrace_rhs(z, pair, basis, chi, 2.0, fiber, kernel=kernel_t2)
            want = 0.0
            for el in lattice_ball(z, 4.0):
                if cv.walk_word(pair, el.word, fiber) == fiber:
                    want += ch.evaluate_base(theta, el.word) * float(
                        kernel_t2(el.dist)
                    )
            assert got.value == pytest.approx(want, rel=1e-12)


def test_pretrace_deep_cusp_sees_only_translates(single_sheet):
    pair, basis = single_sheet
    t, L = 2.0, 1.0
    y = math.exp(2.0 * t) * L
    out = kn.pretrace_rhs(
        HPoint(0.25, y), pair, basis, ch.trivial_character(basis), t, 0,
        keep_terms=True,
    )
    words = [w for w, _, _ in out.terms if w]
    assert len(words) >= 2
    for w in words:
        assert set(w) in ({1}, {-1})  # pure powers of the translation
        assert len(w) <= y * math.sinh(t) + 1
        assert len(w) <= 2.0 * y * math.exp(2.0 * t) / L


def test_high_basepoint_needs_cap_scale():
    z = HPoint(0.25, math.exp(4.0))
    with pytest.raises(CalibrationError):
        lattice_ball(z, 4.0)
    ball = lattice_ball(z, 4.0, cap_scale=4.0 * (1.0 + z.y))
    assert len(ball) > 300


def test_pretrace_preconditions(single_sheet, kernel_t2):
    pair, basis = single_sheet
    triv = ch.trivial_character(basis)
    with pytest.raises(DomainError):
        kn.pretrace_rhs(HPoint(0.3, 1.1), pair, basis, triv, 7.0, 0)
    with pytest.raises(DomainError):
        kn.pretrace_rhs(HPoint(0.3, 1.1), pair, basis, triv, 2.0, 3, kernel=kernel_t2)
    two = cv.PermutationPair([1, 0], [0, 1])
    b2 = cv.spanning_basis(two)
    with pytest.raises(BasisMismatchError):
        kn.pretrace_rhs(
            HPoint(0.3, 1.1), two, b2, triv, 2.0, 0, kernel=kernel_t2
        )


# ---------------------------------------------------------------------------
# bumps


def test_profile_endpoints_and_monotonicity():
    assert kn.profile_j(2.0) == 0.0
    assert kn.profile_j(3.0) == 1.0
    assert kn.profile_j(1.0) == 0.0
    assert kn.profile_j(5.0) == 1.0
    assert 0.0 < kn.profile_j(2.5) < 1.0
    r = np.linspace(1.5, 3.5, 300)
    assert np.all(np.diff(kn.profile_j(r)) >= -1e-15)
    assert np.all(kn.profile_j_prime(r) >= 0.0)
    # Q = sqrt(1 - J^2); the sqrt route itself loses half the digits where
    # J is near 1, which is why Q has its own cosine form
    assert np.allclose(
        kn.profile_q(r), np.sqrt(1.0 - kn.profile_j(r) ** 2), atol=2e-8
    )


def test_profile_derivatives_match_finite_differences():
    rng = np.random.default_rng(3)
    pts = rng.uniform(2.02, 2.98, 40)
    h = 1e-6
    for f, df in [
        (kn.profile_j, kn.profile_j_prime),
        (kn.profile_q, kn.profile_q_prime),
    ]:
        fd = (f(pts + h) - f(pts - h)) / (2 * h)
        assert np.allclose(df(pts), fd, rtol=1e-6, atol=1e-8)


def test_partition_of_unity():
    fam = kn.bump_family()
    y = np.linspace(0.6, 40.0, 10_000)
    part = fam.j0(y) ** 2 + fam.j1(y) ** 2 + fam.j2(y) ** 2
    assert np.abs(part - 1.0).max() <= 1e-12


def test_family_derivatives_and_supports():
    fam = kn.bump_family(L1=8.0, L2=1.0)
    rng = np.random.default_rng(5)
    y = rng.uniform(0.7, 35.0, 60)
    h = 1e-6
    for f, df in [(fam.j0, fam.dj0), (fam.j1, fam.dj1), (fam.j2, fam.dj2)]:
        fd = (f(y + h) - f(y - h)) / (2 * h)
        assert np.allclose(df(y), fd, rtol=2e-5, atol=1e-8)
    # gradient supports pinned to the strips
    outside1 = np.array([1.0, 2.0, 15.9, 24.1, 40.0])
    assert np.all(np.abs(fam.dj1(outside1)) <= 1e-14)
    outside2 = np.array([0.5, 1.99, 3.01, 10.0])
    assert np.all(np.abs(fam.dj2(outside2)) <= 1e-14)
    # the down-cusp bump is 1 deep, 0 high
    assert fam.j2(1.5) == 1.0
    assert fam.j2(4.0) == 0.0
    assert fam.j1(30.0) == 1.0
    assert fam.j1(10.0) == 0.0


def test_tube_bump_collar():
    fam = kn.bump_family()
    k = fam.kappa
    assert k == pytest.approx(0.5 * math.asinh(0.125), rel=1e-15)
    assert fam.jstar(0.0) == 0.0
    assert fam.jstar(k) == 0.0
    assert fam.jstar(-k) == 0.0
    assert fam.jstar(1.5 * k) == 1.0
    assert fam.jstar(-2.0 * k) == 1.0
    assert 0.0 < fam.jstar(1.3 * k) < 1.0
    rho = np.linspace(-3 * k, 3 * k, 101)
    assert np.allclose(fam.jstar(rho), fam.jstar(-rho), atol=1e-15)


def test_bump_eval_dispatch():
    fam = kn.bump_family()
    v, g = kn.bump_eval(fam, "J", np.array([2.0, 3.0]))
    assert v.tolist() == [0.0, 1.0]
    assert g.tolist() == [0.0, 0.0]
    v, g = kn.bump_eval(fam, "Jstar", 2.0 * fam.kappa)
    assert float(v) == 1.0
    for name in ("J0", "J1", "J2"):
        v, g = kn.bump_eval(fam, name, np.array([5.0]))
        assert v.shape == (1,)
    with pytest.raises(ConfigError):
        kn.bump_eval(fam, "J7", 1.0)


def test_bump_family_validation():
    with pytest.raises(DomainError):
        kn.bump_family(L1=0.5)
    with pytest.raises(DomainError):
        kn.bump_family(Omega=0.0)
    with pytest.raises(ConfigError):
        kn.bump_family(L1=1.0, L2=1.0)  # strips would overlap


# ---------------------------------------------------------------------------
# quadratic-form identity and strip integrals


def test_ims_identity_zero_function():
    fam = kn.bump_family()
    zero = kn.SmoothTestFunction(
        f=lambda x, y: 0.0 * x, fx=lambda x, y: 0.0 * x, fy=lambda x, y: 0.0 * x
    )
    assert kn.ims_identity_check(fam, [zero]) == 0.0


def test_ims_identity_smooth_functions():
    fam = kn.bump_family()
    fns = [kn.gaussian_bump(2.0, 10.0, 1.0, 0.05)] + kn.random_smooth_functions(5, 0)
    assert kn.ims_identity_check(fam, fns) <= 1e-6


def test_ims_identity_resolution_stable():
    # quadrature oracle: two resolutions must tell the same story
    fam = kn.bump_family()
    fns = [kn.gaussian_bump(1.5, 8.0, 2.0, 0.1)]
    r1 = kn.ims_identity_check(fam, fns, nx=120, ny=120)
    r2 = kn.ims_identity_check(fam, fns, nx=240, ny=240)
    assert r1 <= 1e-6 and r2 <= 1e-6


def test_strip_integral_scale_free():
    vals = [kn.frakJ_l1(L, L) for L in (1.0, 2.0, 4.0, 64.0, 256.0)]
    assert all(v > 0.0 for v in vals)
    assert max(vals) / min(vals) <= 2.0  # the O(1) claim; in fact equal
    g, w = np.polynomial.legendre.leggauss(400)
    u = 0.5 * (g + 1.0) + 2.0
    ref = float(
        np.sum(w * 0.5 * (kn.profile_j_prime(u) ** 2 + kn.profile_q_prime(u) ** 2))
    )
    assert vals[0] == pytest.approx(2.0 * ref, rel=1e-8)


def test_strip_integral_zero_gradient():
    flat = lambda u: np.zeros_like(np.asarray(u, dtype=float))
    assert kn.frakJ_l1(4.0, 4.0, dj=flat, dq=flat) == 0.0


# ---------------------------------------------------------------------------
# tube area and collar masses


def test_tube_area_closed_form_and_quadrature():
    ta = kn.tube_area(1.0, 1.0, 1.0)
    kappa = 0.5 * math.asinh(0.125)
    assert ta.kappa == pytest.approx(kappa, rel=1e-15)
    assert ta.width_factor == pytest.approx(2.0 * math.sinh(kappa), rel=1e-15)
    assert abs(ta.width_factor - 0.12479) <= 5e-5
    assert ta.closed_form == pytest.approx(
        (2.0 + 2.0 * math.log(4.0)) * 2.0 * math.sinh(kappa), rel=1e-12
    )
    assert ta.quadrature == pytest.approx(ta.closed_form, rel=1e-8)
    big = kn.tube_area(3.0, 16.0, 2.0)
    want = (6.0 + math.log(64.0) + math.log(8.0)) * 2.0 * math.sinh(kappa)
    assert big.closed_form == pytest.approx(want, rel=1e-12)
    with pytest.raises(DomainError):
        kn.tube_area(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        kn.tube_area(1.0, 0.5, 1.0)


def test_collar_mass_ratio_bands():
    heights = [0.5, 1.0, 1.5, 2.0, 3.0, 7.9]
    weights = [2.0, 1.0, 1.0, 1.0, 1.0, 1.0]
    values = [5.0, 1.0, 2.0, 1.0, 1.0, 3.0]
    out = kn.collar_mass_ratio(heights, weights, values, L=1.0, Y=8.0)
    assert out.lower_mass == pytest.approx(1.0 + 4.0)  # h in [1, 2)
    assert out.upper_mass == pytest.approx(1.0 + 1.0 + 9.0)  # h >= 2
    assert out.ratio == pytest.approx(5.0 / 11.0)
    assert not out.infinite


def test_collar_mass_ratio_flags_and_errors():
    out = kn.collar_mass_ratio([1.2, 0.3], [1.0, 1.0], [1.0, 2.0], L=1.0, Y=4.0)
    assert out.infinite and out.ratio == math.inf
    with pytest.raises(InvalidBandError):
        kn.collar_mass_ratio([1.0], [1.0], [1.0], L=1.0, Y=3.9)


def test_kernel_table_csv():
    prof = kn.indicator_profile(2.0)
    text = kn.kernel_table_csv(prof, num=11)
    lines = text.strip().splitlines()
    assert lines[0] == "rho,k"
    assert len(lines) == 12
    first = lines[1].split(",")
    assert float(first[0]) == 0.0
    assert float(first[1]) == pytest.approx(1.0 / math.sqrt(math.cosh(2.0)))
