"""Tile mesh generation: geometry, quality, pairing, serialization."""

import numpy as np
import pytest

from coverlab.errors import ConfigError, DomainError
from coverlab.mesh import build_tile_mesh, mesh_from_text, mesh_to_text


@pytest.fixture(scope="module")
def coarse():
    return build_tile_mesh(0.2, 4.0)


def test_parameter_validation():
    with pytest.raises(DomainError):
        build_tile_mesh(0.25, 4.0)
    with pytest.raises(DomainError):
        build_tile_mesh(0.0, 4.0)
    with pytest.raises(DomainError):
        build_tile_mesh(0.1, 3.0)


def test_vertex_count_snapshot(coarse):
    # frozen after the first successful build at the coarsest setting;
    # the generator is deterministic so drift means a code change
    assert coarse.n_vertices == 204
    assert coarse.n_triangles == 342


def test_determinism(coarse):
    again = build_tile_mesh(0.2, 4.0)
    assert np.array_equal(coarse.vertices, again.vertices)
    assert np.array_equal(coarse.triangles, again.triangles)


def test_min_angle_gate():
    for h, Y in [(0.2, 4.0), (0.1, 4.0), (0.1, 8.0), (0.05, 8.0)]:
        mesh = build_tile_mesh(h, Y)
        assert mesh.min_angle() >= 20.0


def test_refinement_grows_triangles_fourfold(coarse):
    fine = build_tile_mesh(0.1, 4.0)
    ratio = fine.n_triangles / coarse.n_triangles
    assert 3.2 <= ratio <= 4.8


def test_all_vertices_inside_truncated_tile(coarse):
    x, y = coarse.vertices[:, 0], coarse.vertices[:, 1]
    Y = coarse.Y
    tol = 1e-9
    assert np.all(np.abs(x) <= 1.0 + tol)
    assert np.all(y <= Y + tol)
    assert np.all((x - 0.5) ** 2 + y**2 >= 0.25 - tol)
    assert np.all((x + 0.5) ** 2 + y**2 >= 0.25 - tol)
    for cx in (-1.0, 0.0, 1.0):
        assert np.all((x - cx) ** 2 + y**2 >= y / Y - tol)


def test_triangles_positively_oriented_and_nondegenerate(coarse):
    p = coarse.vertices[coarse.triangles]
    cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 1, 1] - p[:, 0, 1]
    ) * (p[:, 2, 0] - p[:, 0, 0])
    assert np.all(cross > 0)
    assert coarse.triangle_areas().min() > 0


def test_side_pairings_match_exactly(coarse):
    v = coarse.vertices
    s, t = coarse.a_pairs[:, 0], coarse.a_pairs[:, 1]
    # wall map z -> z - 2 sends each right-wall node onto a left-wall node
    assert np.abs(v[s] - [2.0, 0.0] - v[t]).max() == 0.0
    s, t = coarse.b_pairs[:, 0], coarse.b_pairs[:, 1]
    # circle map restricted to the circle is the mirror z -> -conj(z)
    mapped = np.column_stack([-v[s, 0], v[s, 1]])
    assert np.abs(mapped - v[t]).max() == 0.0


def test_pairings_cover_the_tagged_sides(coarse):
    assert len(coarse.a_pairs) == len(coarse.tags["wall_right"])
    assert len(coarse.a_pairs) == len(coarse.tags["wall_left"])
    assert len(coarse.b_pairs) == len(coarse.tags["circle_right"])
    assert len(coarse.b_pairs) == len(coarse.tags["circle_left"])
    assert len(coarse.a_pairs) > 0 and len(coarse.b_pairs) > 0


def test_lumped_mass_approximates_truncated_area():
    # truncated tile area is 2*pi - 3 * (cusp tail 2/Y); vertex quadrature
    # converges at second order
    errs = []
    for h in (0.2, 0.1, 0.05):
        mesh = build_tile_mesh(h, 4.0)
        exact = 2.0 * np.pi - 6.0 / 4.0
        errs.append(abs(mesh.lumped_mass().sum() - exact) / exact)
    assert errs[0] < 0.03
    assert errs[2] < 0.002
    assert errs[2] < errs[0] / 4.0


def test_cusp_heights(coarse):
    # each truncation horocycle sits at height Y in its own cusp chart
    for chart in ("inf", "zero", "one", "minus_one"):
        hts = coarse.cusp_height(chart)
        assert hts.max() == pytest.approx(coarse.Y, rel=1e-9)
    with pytest.raises(ConfigError):
        coarse.cusp_height("two")


def test_snapshot_roundtrip(coarse):
    text = mesh_to_text(coarse)
    assert text.startswith("coverlab-mesh v1\n")
    back = mesh_from_text(text)
    assert np.array_equal(back.vertices, coarse.vertices)
    assert np.array_equal(back.triangles, coarse.triangles)
    assert np.array_equal(back.a_pairs, coarse.a_pairs)
    assert np.array_equal(back.b_pairs, coarse.b_pairs)
    assert back.h == coarse.h and back.Y == coarse.Y


def test_snapshot_rejects_foreign_header():
    with pytest.raises(ConfigError):
        mesh_from_text("not-a-mesh v9\n")
