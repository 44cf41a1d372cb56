"""Half-plane geometry: words, distances, domain reduction, lattice balls.

Frozen numeric oracles are derived in comments next to each assertion;
set-valued results are checked against a brute-force word enumeration that
shares no code with the pruned search.
"""

import itertools
import math

import numpy as np
import pytest

from coverlab import halfplane as hp
from coverlab.errors import CalibrationError, DomainError, InvalidElementError


# ---------------------------------------------------------------------------
# words and matrices


def test_word_reduce_cancels_adjacent_inverses():
    assert hp.word_reduce([1, -1]) == ()
    assert hp.word_reduce([1, 2, -2, -1]) == ()
    assert hp.word_reduce([1, 2, -2, 1]) == (1, 1)
    assert hp.word_reduce([2, 1, -1, -2, 2]) == (2,)


def test_word_inverse_and_concat():
    w = (1, 2, -1)
    assert hp.word_concat(w, hp.word_inverse(w)) == ()
    assert hp.word_inverse(w) == (1, -2, -1)


def test_word_str_parse_roundtrip():
    for w in [(), (1,), (-1, 2), (1, 1, -2, 2)]:
        r = hp.word_reduce(w)
        assert hp.parse_word(hp.word_str(r)) == r
    assert hp.word_str(()) == "e"
    assert hp.parse_word("aAb") == (2,)
    with pytest.raises(InvalidElementError):
        hp.parse_word("ax")


def test_word_matrix_generators():
    assert hp.word_matrix((1,)) == hp.GEN_A
    assert hp.word_matrix((2,)) == hp.GEN_B
    # a*b = [[1,2],[0,1]][[1,0],[2,1]] = [[5,2],[2,1]] by hand
    assert hp.word_matrix((1, 2)) == hp.MobiusMatrix(5, 2, 2, 1)
    assert hp.word_matrix((1, -1)) == hp.IDENTITY


def test_matrix_projective_identification():
    assert hp.MobiusMatrix(-1, 0, 0, -1) == hp.IDENTITY
    assert hash(hp.MobiusMatrix(-1, 0, 0, -1)) == hash(hp.IDENTITY)
    with pytest.raises(InvalidElementError):
        hp.MobiusMatrix(1, 0, 0, 2)


def test_matrix_inverse_and_product():
    m = hp.word_matrix((1, 2, -1, 2))
    assert m @ m.inverse() == hp.IDENTITY
    assert m.inverse() == hp.word_matrix(hp.word_inverse((1, 2, -1, 2)))


def test_shortlex_order():
    words = [(2,), (), (1, 1), (-1,), (1,), (-2,), (1, 2)]
    ordered = sorted(words, key=hp.word_sort_key)
    assert ordered == [(), (1,), (-1,), (2,), (-2,), (1, 1), (1, 2)]


# ---------------------------------------------------------------------------
# metric


def test_generator_action_on_i():
    # b.i = i/(2i+1) = i(1-2i)/5 = (2+i)/5 by hand
    z = hp.mobius_apply(hp.GEN_B, hp.HPoint(0.0, 1.0))
    assert abs(z.x - 0.4) < 1e-15 and abs(z.y - 0.2) < 1e-15
    # a.i = i + 2
    z = hp.mobius_apply(hp.GEN_A, hp.HPoint(0.0, 1.0))
    assert z.x == 2.0 and z.y == 1.0


def test_vertical_distance_is_log_ratio():
    # along a vertical geodesic d = integral dy/y = log(y2/y1)
    assert hp.hyp_distance(hp.HPoint(0, 1), hp.HPoint(0, 2)) == pytest.approx(
        math.log(2.0), abs=1e-15
    )
    assert hp.hyp_distance(hp.HPoint(3, 0.5), hp.HPoint(3, 4)) == pytest.approx(
        math.log(8.0), abs=1e-14
    )


def test_generator_displacement_at_i():
    # d(i, i+2) = 2 asinh(2/2) = 2 asinh 1 = arccosh 3
    d = hp.hyp_distance(hp.HPoint(0, 1), hp.HPoint(2, 1))
    assert d == pytest.approx(2.0 * math.asinh(1.0), abs=1e-15)
    assert math.cosh(d) == pytest.approx(3.0, abs=1e-12)
    # b is conjugate to a by the trace-zero rotation, same displacement at i
    zb = hp.mobius_apply(hp.GEN_B, hp.HPoint(0, 1))
    assert hp.hyp_distance(hp.HPoint(0, 1), zb) == pytest.approx(d, abs=1e-12)


def test_metric_axioms_random_points():
    rng = np.random.default_rng(7)
    pts = [hp.HPoint(float(x), float(abs(y) + 0.1)) for x, y in rng.normal(size=(12, 2))]
    for z in pts:
        assert hp.hyp_distance(z, z) == 0.0
    for z, w in itertools.combinations(pts, 2):
        assert hp.hyp_distance(z, w) == pytest.approx(hp.hyp_distance(w, z), abs=1e-14)
    for z, w, u in itertools.combinations(pts, 3):
        assert hp.hyp_distance(z, u) <= hp.hyp_distance(z, w) + hp.hyp_distance(w, u) + 1e-12


def test_distance_is_mobius_invariant():
    rng = np.random.default_rng(11)
    ball = hp.lattice_ball(r=3.0)
    mats = [e.mat for e in ball]
    for _ in range(20):
        x1, x2 = rng.normal(size=2)
        y1, y2 = np.exp(rng.normal(size=2))
        z, w = hp.HPoint(float(x1), float(y1)), hp.HPoint(float(x2), float(y2))
        d = hp.hyp_distance(z, w)
        for m in mats:
            assert hp.hyp_distance(hp.mobius_apply(m, z), hp.mobius_apply(m, w)) == (
                pytest.approx(d, rel=1e-12, abs=1e-12)
            )


def test_distance_to_vertical_and_circle():
    # dist from i to Re = 2: asinh(2); to the unit circle about 0: 0 (on it)
    assert hp.dist_to_vertical(1j, 2.0) == pytest.approx(math.asinh(2.0))
    assert hp.signed_dist_to_circle(1j, 0.0, 1.0) == pytest.approx(0.0, abs=1e-15)
    # sign convention: outside positive, inside negative
    assert hp.signed_dist_to_circle(2j, 0.0, 1.0) > 0
    assert hp.signed_dist_to_circle(0.5j, 0.0, 1.0) < 0
    # invariance check: distance from z to circle |w|=1 equals distance from
    # z to the image vertical under the Cayley-type map is hard to set up;
    # instead verify against a dense minimum over the geodesic itself.
    z = 0.7 + 1.3j
    th = np.linspace(1e-3, math.pi - 1e-3, 20001)
    pts = np.exp(1j * th)
    dmin = np.min(
        2.0 * np.arcsinh(np.abs(z - pts) / (2.0 * np.sqrt(z.imag * pts.imag)))
    )
    assert abs(hp.signed_dist_to_circle(z, 0.0, 1.0)) == pytest.approx(float(dmin), abs=1e-6)


# ---------------------------------------------------------------------------
# fundamental domain


def test_domain_membership_boundary_conventions():
    assert hp.in_fundamental_domain(hp.HPoint(0.0, 1.0))
    assert hp.in_fundamental_domain(hp.HPoint(-1.0, 5.0))  # left vertical closed
    assert not hp.in_fundamental_domain(hp.HPoint(1.0, 5.0))  # right vertical open
    # circle tops (-+1/2, 1/2) satisfy the quarter test exactly in floats
    assert hp.in_fundamental_domain(hp.HPoint(-0.5, 0.5))  # left circle closed
    assert not hp.in_fundamental_domain(hp.HPoint(0.5, 0.5))  # right circle open
    assert not hp.in_fundamental_domain(hp.HPoint(0.4, 0.2))  # inside right disc
    assert not hp.in_fundamental_domain(hp.HPoint(2.0, 1.0))
    # tolerant form accepts slightly-outside boundary points
    assert hp.in_fundamental_domain(hp.HPoint(1.0 + 1e-9, 5.0), tol=1e-6)


def test_reduce_to_domain_simple_translates():
    z, w = hp.reduce_to_domain(hp.HPoint(2.0, 1.0))
    assert (z.x, z.y) == (0.0, 1.0) and w == (-1,)
    z, w = hp.reduce_to_domain(hp.HPoint(0.4, 0.2))
    assert w == (-2,) and abs(z.x) < 1e-12 and abs(z.y - 1.0) < 1e-12


def test_reduce_to_domain_inverts_group_action():
    rng = np.random.default_rng(3)
    ball = hp.lattice_ball(r=6.0)
    idx = rng.integers(0, len(ball), size=25)
    for k in idx:
        e = ball[int(k)]
        # interior point of F, kept away from all four sides
        z = hp.HPoint(float(rng.uniform(-0.4, 0.4)), float(rng.uniform(0.9, 1.6)))
        gz = hp.mobius_apply(e.mat, z)
        z2, w = hp.reduce_to_domain(gz)
        assert hp.in_fundamental_domain(z2, tol=1e-9)
        # w . (g z) = z2, and by freeness w must be the inverse word of g
        assert hp.word_concat(w, e.word) == ()
        assert abs(z2.x - z.x) < 1e-8 and abs(z2.y - z.y) < 1e-8
        back = hp.mobius_apply(hp.word_matrix(w), gz)
        assert abs(back.x - z2.x) < 1e-9 and abs(back.y - z2.y) < 1e-9


def test_reduce_right_circle_boundary_lands_in_closed_side():
    # points on the open right circle map onto the closed left circle
    z, w = hp.reduce_to_domain(hp.HPoint(0.25, math.sqrt(3) / 4))
    assert hp.in_fundamental_domain(z, tol=1e-12)
    assert len(w) >= 1


# ---------------------------------------------------------------------------
# lattice balls


def _brute_ball(o: hp.HPoint, r: float, max_len: int):
    """Independent oracle: enumerate every reduced word up to max_len."""
    oc = o.as_complex()
    found = {(): 0.0}
    frontier = [()]
    for _ in range(max_len):
        nxt = []
        for w in frontier:
            for g in (1, -1, 2, -2):
                if w and w[-1] == -g:
                    continue
                w2 = w + (g,)
                nxt.append(w2)
                m = hp.word_matrix(w2)
                z = m.apply(oc)
                d = 2.0 * math.asinh(abs(z - oc) / (2.0 * math.sqrt(z.imag * oc.imag)))
                if d <= r:
                    found[w2] = d
        frontier = nxt
    return found


def test_small_balls_against_brute_force():
    for r, max_len in [(1.0, 4), (2.0, 4), (3.5, 5)]:
        ball = hp.lattice_ball(r=r)
        brute = _brute_ball(hp.BASEPOINT, r, max_len)
        assert {e.word for e in ball} == set(brute)
        for e in ball:
            assert e.dist == pytest.approx(brute[e.word], abs=1e-12)


def test_radius_two_ball_is_generators_plus_identity():
    ball = hp.lattice_ball(r=2.0)
    assert [e.word for e in ball] == [(), (1,), (-1,), (2,), (-2,)]
    assert ball[0].dist == 0.0
    for e in ball[1:]:
        assert e.dist == pytest.approx(2.0 * math.asinh(1.0), abs=1e-12)


def test_medium_ball_against_brute_force():
    # max word length in the 5-ball is 6, so brute force depth 7 is exhaustive
    r = 5.0
    ball = hp.lattice_ball(r=r)
    brute = _brute_ball(hp.BASEPOINT, r, 7)
    assert {e.word for e in ball} == set(brute)


def test_ball_off_center_basepoint():
    o = hp.HPoint(0.3, 0.8)
    ball = hp.lattice_ball(o=o, r=3.0)
    brute = _brute_ball(o, 3.0, 5)
    assert {e.word for e in ball} == set(brute)


def test_ball_output_is_shortlex_sorted_and_reduced():
    ball = hp.lattice_ball(r=6.0)
    keys = [hp.word_sort_key(e.word) for e in ball]
    assert keys == sorted(keys)
    for e in ball:
        assert hp.word_reduce(e.word) == e.word
        assert e.mat == hp.word_matrix(e.word)


def test_ball_growth_stays_exponentially_bounded():
    # |B(r)| / e^r stabilises near 1/2; assert the crude bound used downstream
    for r in range(0, 9):
        ball = hp.lattice_ball(r=float(r))
        assert len(ball) <= 2.0 * math.exp(r)


def test_word_length_growth_table():
    table, c = hp.word_length_growth([float(k) for k in range(1, 7)])
    assert table == [(1.0, 0), (2.0, 1), (3.0, 2), (4.0, 3), (5.0, 6), (6.0, 10)]
    # fitted rate ln(10)/6 from the last row dominates this grid
    assert c == pytest.approx(math.log(10.0) / 6.0, abs=1e-12)


def test_ball_rejects_bad_basepoint_and_small_cap():
    with pytest.raises(DomainError):
        hp.lattice_ball(o=hp.HPoint(5.0, 1.0), r=2.0)
    with pytest.raises(CalibrationError):
        # cap e^{0.3*8} = 12 is below the true max word length 27 at r = 8
        hp.lattice_ball(r=8.0, prune_c=0.3)


# ---------------------------------------------------------------------------
# constants of the base surface


def test_systole_is_commutator_free_minimum():
    # shortest hyperbolic: ab with trace 6, length 2 arccosh 3
    assert hp.systole_from_ball(6.0) == pytest.approx(2.0 * math.acosh(3.0), abs=1e-12)


def test_core_boundary_and_constants():
    pts = hp.core_boundary_points(per_piece=80)
    # all pieces live inside the closed domain, between the horoballs
    for z in pts:
        assert hp.in_fundamental_domain(hp.HPoint(float(z.real), float(z.imag)), tol=1e-9)
        assert 0.35 <= z.imag <= 2.0 + 1e-12
    dc = hp.compute_domain_constants()
    # covering radius is attained at the corner (4/5, 2/5):
    # d(i, corner) = 2 asinh(1 / (2 sqrt(2/5)))
    corner = 2.0 * math.asinh(1.0 / (2.0 * math.sqrt(0.4)))
    assert dc.R0 == pytest.approx(corner, abs=1e-9)
    # diameter bracketed by the corner pair and the through-basepoint bound
    assert 2.0 * math.asinh(2.0) - 1e-9 <= dc.D <= 2.0 * dc.R0 + 1e-9
    assert dc.D == pytest.approx(2.901149027645161, abs=1e-6)
    assert dc.ell0 == pytest.approx(2.0 * math.acosh(3.0), abs=1e-12)
    assert 0.3 < dc.C < 0.5
    dc.check()


def test_constants_margin_validation():
    dc = hp.compute_domain_constants(eps=0.04)
    assert 6.0 * dc.C * dc.eps < 0.25
    with pytest.raises(CalibrationError):
        hp.compute_domain_constants(eps=0.2)


def test_point_requires_positive_height():
    with pytest.raises(DomainError):
        hp.HPoint(0.0, 0.0)
    with pytest.raises(DomainError):
        hp.HPoint(0.0, -1.0)
