"""Graded triangulation of the truncated fundamental tile.

The tile is the ideal quadrilateral F = {-1 <= x < 1} minus the half-discs
|z - 1/2| < 1/2 and |z + 1/2| < 1/2, truncated for meshing at the horocycle
y = Y and outside horoball discs of Euclidean diameter 1/Y at the finite
cusps 0 and +-1.  Target edge length is h in the hyperbolic metric, i.e.
h * y in Euclidean terms.

Meshing strategy: triangulate the right half x >= 0 (boundary nodes stepped
along each curve at local spacing, staggered interior seeds, Delaunay with
centroid filtering against the curved region, Laplacian smoothing), then
mirror the triangles across x = 0.  Mirroring makes the two side pairings
exact at machine precision: the wall map z -> z + 2 sends (-1, y) to (1, y),
and the circle map z -> z/(2z+1) restricted to the left circle is exactly
z -> -conj(z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .errors import ConfigError, DomainError, MeshError

__all__ = ["TileMesh", "build_tile_mesh", "mesh_to_text", "mesh_from_text"]

_MATCH_TOL = 1e-10


# ---------------------------------------------------------------------------
# region predicates (right half, x >= 0)


def _horoball_violation(x, y, cx, Y):
    # inside the horoball of diameter 1/Y at the cusp (cx, 0)
    return (x - cx) ** 2 + y * y < y / Y


def _in_region(x, y, Y, tol=0.0):
    """Truncated tile membership with uniform slack tol (positive = lenient)."""
    if abs(x) > 1.0 + tol or y > Y + tol or y <= 0.0:
        return False
    if (x - 0.5) ** 2 + y * y < 0.25 - tol:
        return False
    if (x + 0.5) ** 2 + y * y < 0.25 - tol:
        return False
    for cx in (-1.0, 0.0, 1.0):
        if (x - cx) ** 2 + y * y < y / Y - tol:
            return False
    return True


def _corner_points(Y):
    """Exact boundary corners of the right half (wall, circle, horoballs)."""
    d = Y * Y + 1.0
    p0 = (1.0 / d, Y / d)  # right circle meets horoball at 0
    p1 = (Y * Y / d, Y / d)  # right circle meets horoball at 1
    return p0, p1


# ---------------------------------------------------------------------------
# boundary sampling


def _step_geometric(lo, hi, ratio):
    """lo, lo*(1+ratio), ... capped and closed at hi."""
    if lo >= hi:
        return [lo]
    out = [lo]
    cur = lo
    while cur * (1.0 + ratio) < hi * (1.0 - 1e-12):
        cur *= 1.0 + ratio
        out.append(cur)
    out.append(hi)
    # merge a final short step into its neighbor
    if len(out) >= 3 and out[-1] / out[-2] < 1.0 + 0.35 * ratio:
        del out[-2]
    return out


def _step_linear(lo, hi, step):
    n = max(1, round((hi - lo) / step))
    return list(np.linspace(lo, hi, n + 1))


def _step_arc(alpha0, alpha1, dalpha_of, min_steps=1):
    """March an angle parameter with a state-dependent step; endpoints exact."""
    out = [alpha0]
    direction = 1.0 if alpha1 >= alpha0 else -1.0
    cur = alpha0
    guard = 0
    while True:
        step = dalpha_of(cur)
        if step <= 0:
            raise MeshError("degenerate arc step")
        nxt = cur + direction * step
        if direction * (alpha1 - nxt) <= 0.45 * step:
            break
        out.append(nxt)
        cur = nxt
        guard += 1
        if guard > 100000:
            raise MeshError("arc stepping failed to terminate")
    out.append(alpha1)
    while len(out) < min_steps + 1:
        out = list(np.linspace(alpha0, alpha1, min_steps + 1))
    return out


def _half_boundary(h, Y):
    """Boundary nodes of the right half, grouped by curve.

    Returns dict of name -> list[(x, y)] with exact shared corners.
    """
    r = 1.0 / (2.0 * Y)
    p0, p1 = _corner_points(Y)
    curves = {}

    # symmetry axis x = 0 from (0, 1/Y) to (0, Y); becomes interior after
    # mirroring but its nodes must exist on both halves identically
    curves["axis"] = [(0.0, y) for y in _step_geometric(1.0 / Y, Y, h)]

    # top horocycle y = Y from (0, Y) to (1, Y)
    curves["top"] = [(x, Y) for x in _step_linear(0.0, 1.0, h * Y)]

    # right wall x = 1 from (1, 1/Y) to (1, Y)
    curves["wall"] = [(1.0, y) for y in _step_geometric(1.0 / Y, Y, h)]

    # horoball arc at cusp 1: center (1, r), radius r, from the wall point
    # (1, 2r) at alpha = pi/2 to the circle corner p1
    sin_a = (Y * Y - 1.0) / (Y * Y + 1.0)
    cos_a = 2.0 * Y / (Y * Y + 1.0)
    a_end = math.atan2(sin_a, -cos_a)  # in (pi/2, pi)
    arc = _step_arc(0.5 * math.pi, a_end, lambda a: h * (1.0 + math.sin(a)))
    curves["horo1"] = [(1.0 + r * math.cos(a), r * (1.0 + math.sin(a))) for a in arc]
    curves["horo1"][0] = (1.0, 2.0 * r)
    curves["horo1"][-1] = p1

    # right circle |z - 1/2| = 1/2 from p1 to p0: z = (1 + cos b, sin b)/2,
    # local spacing h y = h sin(b)/2, arc element db/2
    cos_b1 = (Y * Y - 1.0) / (Y * Y + 1.0)
    sin_b1 = 2.0 * Y / (Y * Y + 1.0)
    b1 = math.atan2(sin_b1, cos_b1)
    arc = _step_arc(b1, math.pi - b1, lambda b: h * math.sin(b))
    curves["circle"] = [(0.5 * (1.0 + math.cos(b)), 0.5 * math.sin(b)) for b in arc]
    curves["circle"][0] = p1
    curves["circle"][-1] = p0

    # horoball arc at cusp 0: center (0, r), from p0 down-around to (0, 2r)
    a_start = math.atan2(sin_a, cos_a)  # in (0, pi/2)
    arc = _step_arc(a_start, 0.5 * math.pi, lambda a: h * (1.0 + math.sin(a)))
    curves["horo0"] = [(r * math.cos(a), r * (1.0 + math.sin(a))) for a in arc]
    curves["horo0"][0] = p0
    curves["horo0"][-1] = (0.0, 2.0 * r)

    return curves


def _front_seeds(h, Y, boundary_pts):
    """One layer of seeds offset inward along the normals of the curved
    bottom boundaries.  Lattice rows alone leave voids in the wedges where
    horoballs meet the circles, which Delaunay then bridges with slivers."""
    r = 1.0 / (2.0 * Y)
    out = []
    for x, y in boundary_pts:
        n = None
        if abs((x - 0.5) ** 2 + y * y - 0.25) <= 1e-9:
            v = np.array([x - 0.5, y])
            n = v / np.linalg.norm(v)
        elif abs(x * x + y * y - y / Y) <= 1e-9 and x > 1e-12:
            v = np.array([x, y - r])
            n = v / np.linalg.norm(v)
        elif abs((x - 1.0) ** 2 + y * y - y / Y) <= 1e-9 and x < 1.0 - 1e-12:
            v = np.array([x - 1.0, y - r])
            n = v / np.linalg.norm(v)
        if n is None:
            continue
        q = (x + 0.85 * h * y * n[0], y + 0.85 * h * y * n[1])
        if q[0] > 0 and _in_region(q[0], q[1], Y):
            out.append(q)
    tree = cKDTree(boundary_pts)
    kept = []
    for p in out:
        if tree.query(p)[0] < 0.4 * h * p[1]:
            continue
        if any(math.hypot(p[0] - q[0], p[1] - q[1]) < 0.5 * h * p[1] for q in kept):
            continue
        kept.append(p)
    return kept


def _interior_seeds(h, Y, boundary_pts):
    """Front layer along the curved boundaries, then staggered rows graded
    as y; points too close to existing ones are dropped so smoothing has
    room to work."""
    front = _front_seeds(h, Y, boundary_pts)
    fixed = np.vstack([boundary_pts, front]) if front else np.asarray(boundary_pts)
    tree = cKDTree(fixed)
    pts = list(front)
    y = (1.0 / Y) * (1.0 + 0.6 * h)
    row = 0
    while y < Y * (1.0 - 0.25 * h):
        step = 0.95 * h * y
        offset = 0.5 * step if row % 2 else 0.0
        x = offset if offset > 0 else step
        while x < 1.0 - 0.25 * step:
            if _in_region(x, y, Y):
                d, _ = tree.query((x, y))
                if d > 0.45 * h * y:
                    pts.append((x, y))
            x += step
        y *= 1.0 + 0.9 * h
        row += 1
    return pts


# ---------------------------------------------------------------------------
# triangulation of the half tile


def _filter_triangles(points, simplices, Y):
    keep = []
    for tri in simplices:
        cx, cy = points[tri].mean(axis=0)
        if _in_region(cx, cy, Y, tol=1e-12) or _in_region(cx, cy, Y, tol=-1e-9):
            keep.append(tri)
    return np.asarray(keep, dtype=np.int64)


def _triangle_angles(points, tris):
    p = points[tris]  # (T, 3, 2)
    angles = np.empty((len(tris), 3))
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        na = np.linalg.norm(a, axis=1)
        nb = np.linalg.norm(b, axis=1)
        cosang = np.einsum("ij,ij->i", a, b) / np.maximum(na * nb, 1e-300)
        angles[:, k] = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
    return angles


def _circumcenter(p):
    (ax, ay), (bx, by), (cx, cy) = p
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if abs(d) < 1e-300:
        return None
    ux = ((ax**2 + ay**2) * (by - cy) + (bx**2 + by**2) * (cy - ay)
          + (cx**2 + cy**2) * (ay - by)) / d
    uy = ((ax**2 + ay**2) * (cx - bx) + (bx**2 + by**2) * (ax - cx)
          + (cx**2 + cy**2) * (bx - ax)) / d
    return (ux, uy)


def _smooth(points, tris, movable, rounds=4):
    """Laplacian smoothing of movable nodes toward neighbor averages."""
    n = len(points)
    for _ in range(rounds):
        acc = np.zeros((n, 2))
        cnt = np.zeros(n)
        for a, b in ((0, 1), (1, 2), (2, 0)):
            np.add.at(acc, tris[:, a], points[tris[:, b]])
            np.add.at(cnt, tris[:, a], 1.0)
            np.add.at(acc, tris[:, b], points[tris[:, a]])
            np.add.at(cnt, tris[:, b], 1.0)
        avg = acc / np.maximum(cnt, 1.0)[:, None]
        points = np.where(movable[:, None], 0.5 * points + 0.5 * avg, points)
    return points


def _repair(points, movable, tris, h, Y, target=21.0, rounds=40):
    """Quality repair: delete the squeezed movable vertex of the worst
    triangle when that helps, otherwise insert its circumcenter.  Slivers
    in narrow wedges near the boundary come from smoothed seeds pulled
    almost onto a chord; removal is the reliable cure there."""

    def retriangulate(p):
        return _filter_triangles(p, Delaunay(p).simplices, Y)

    for _ in range(rounds):
        worst = _triangle_angles(points, tris).min(axis=1)
        if worst.min() >= target:
            break
        t = int(np.argmin(worst))
        best = (worst.min(), None, None)
        for v in tris[t]:
            if not movable[v]:
                continue
            keep = np.ones(len(points), dtype=bool)
            keep[v] = False
            p2 = points[keep]
            t2 = retriangulate(p2)
            score = _triangle_angles(p2, t2).min()
            if score > best[0] + 1e-9:
                best = (score, p2, (keep, t2))
        if best[1] is not None:
            points = best[1]
            keep, tris = best[2]
            movable = movable[keep]
            continue
        cc = _circumcenter(points[tris[t]])
        if cc is not None and _in_region(cc[0], cc[1], Y) and cc[0] > 0:
            if cKDTree(points).query(cc)[0] > 0.3 * h * cc[1]:
                p2 = np.vstack([points, [cc]])
                t2 = retriangulate(p2)
                if _triangle_angles(p2, t2).min() > worst.min() + 1e-9:
                    points = p2
                    movable = np.concatenate([movable, [True]])
                    tris = t2
                    continue
        break  # no improving move; the angle gate downstream decides
    return points, movable, tris


def _mesh_half(h, Y):
    curves = _half_boundary(h, Y)
    boundary = []
    seen = {}
    for name in ("axis", "top", "wall", "horo1", "circle", "horo0"):
        for p in curves[name]:
            key = (round(p[0], 12), round(p[1], 12))
            if key not in seen:
                seen[key] = len(boundary)
                boundary.append(p)
    boundary = np.asarray(boundary)
    interior = np.asarray(_interior_seeds(h, Y, boundary), dtype=float)
    if len(interior):
        points = np.vstack([boundary, interior])
    else:
        points = boundary.copy()
    movable = np.zeros(len(points), dtype=bool)
    movable[len(boundary):] = True

    for _ in range(3):
        tris = _filter_triangles(points, Delaunay(points).simplices, Y)
        points = _smooth(points, tris, movable)
    tris = _filter_triangles(points, Delaunay(points).simplices, Y)

    points, movable, tris = _repair(points, movable, tris, h, Y)

    # drop interior nodes orphaned by filtering
    used = np.zeros(len(points), dtype=bool)
    used[tris.ravel()] = True
    used[: len(boundary)] = True
    remap = -np.ones(len(points), dtype=np.int64)
    remap[used] = np.arange(used.sum())
    points = points[used]
    tris = remap[tris]
    return points, tris


# ---------------------------------------------------------------------------
# the full tile


@dataclass
class TileMesh:
    """Conforming triangulation of the truncated tile.

    tags maps boundary-class names (wall_left, wall_right, circle_left,
    circle_right, top, horo_m1, horo_0, horo_p1) to sorted node-index
    arrays; a_pairs / b_pairs list (slave, master) node pairs, the slave
    being the right-hand copy.
    """

    vertices: np.ndarray  # (N, 2)
    triangles: np.ndarray  # (T, 3)
    h: float
    Y: float
    tags: dict
    a_pairs: np.ndarray  # (Ka, 2) slave -> master
    b_pairs: np.ndarray  # (Kb, 2)
    meta: dict = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def min_angle(self) -> float:
        return float(_triangle_angles(self.vertices, self.triangles).min())

    def lumped_mass(self) -> np.ndarray:
        """Vertex-quadrature mass: sum of adjacent areas / 3, weighted 1/y^2."""
        areas = self.triangle_areas()
        m = np.zeros(self.n_vertices)
        for k in range(3):
            np.add.at(m, self.triangles[:, k], areas / 3.0)
        return m / self.vertices[:, 1] ** 2

    def cusp_height(self, cusp: str) -> np.ndarray:
        """Per-node height in the chart of one cusp of the tile."""
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        if cusp == "inf":
            return y.copy()
        centers = {"zero": 0.0, "one": 1.0, "minus_one": -1.0}
        try:
            c = centers[cusp]
        except KeyError:
            raise ConfigError(f"unknown cusp {cusp!r}")
        return y / ((x - c) ** 2 + y * y)


def _classify(points, Y):
    x, y = points[:, 0], points[:, 1]
    tol = 1e-9
    tags = {}
    tags["wall_left"] = np.where(np.abs(x + 1.0) <= tol)[0]
    tags["wall_right"] = np.where(np.abs(x - 1.0) <= tol)[0]
    tags["top"] = np.where(np.abs(y - Y) <= tol)[0]
    qr = (x - 0.5) ** 2 + y * y
    ql = (x + 0.5) ** 2 + y * y
    tags["circle_right"] = np.where(np.abs(qr - 0.25) <= tol)[0]
    tags["circle_left"] = np.where(np.abs(ql - 0.25) <= tol)[0]
    for name, cx in (("horo_m1", -1.0), ("horo_0", 0.0), ("horo_p1", 1.0)):
        tags[name] = np.where(np.abs((x - cx) ** 2 + y * y - y / Y) <= tol)[0]
    return {k: np.sort(v) for k, v in tags.items()}


def _match(points, src_idx, dst_idx, transform, label):
    """Pair each src node with the dst node at its transformed position."""
    if len(src_idx) != len(dst_idx):
        raise MeshError(
            f"{label}: {len(src_idx)} nodes face {len(dst_idx)} partners"
        )
    tree = cKDTree(points[dst_idx])
    mapped = transform(points[src_idx])
    dist, k = tree.query(mapped)
    if len(src_idx) and dist.max() > _MATCH_TOL:
        worst = np.argmax(dist)
        raise MeshError(
            f"{label}: node at {points[src_idx[worst]]} mismatched by {dist.max():.2e}"
        )
    if len(set(k.tolist())) != len(k):
        raise MeshError(f"{label}: pairing is not a bijection")
    return np.column_stack([src_idx, dst_idx[k]])


def build_tile_mesh(h: float, Y: float) -> TileMesh:
    """Conforming graded triangulation; see the module docstring.

    h is the hyperbolic target edge length (0 < h <= 0.2), Y >= 4 the
    truncation height.  Element quality below 20 degrees is a MeshError.
    """
    if not 0.0 < h <= 0.2:
        raise DomainError(f"need 0 < h <= 0.2, got {h}")
    if Y < 4.0:
        raise DomainError(f"need Y >= 4, got {Y}")

    pts_r, tris_r = _mesh_half(h, Y)

    # mirror: axis nodes shared, others duplicated with x -> -x
    axis = np.abs(pts_r[:, 0]) <= 1e-12
    n_r = len(pts_r)
    mirror_id = np.empty(n_r, dtype=np.int64)
    extra = []
    for i in range(n_r):
        if axis[i]:
            mirror_id[i] = i
        else:
            mirror_id[i] = n_r + len(extra)
            extra.append((-pts_r[i, 0], pts_r[i, 1]))
    points = np.vstack([pts_r, np.asarray(extra)])
    tris_l = mirror_id[tris_r]
    triangles = np.vstack([tris_r, tris_l])

    # canonical node order: sort by (y, x); deterministic for fixed h, Y
    order = np.lexsort((points[:, 0], points[:, 1]))
    inv = np.empty(len(points), dtype=np.int64)
    inv[order] = np.arange(len(points))
    points = points[order]
    triangles = inv[triangles]

    # counterclockwise orientation
    p = points[triangles]
    cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 1, 1] - p[:, 0, 1]
    ) * (p[:, 2, 0] - p[:, 0, 0])
    flip = cross < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]
    if np.any(np.abs(cross) < 1e-16):
        raise MeshError("degenerate (zero-area) triangle produced")

    angles = _triangle_angles(points, triangles)
    if angles.min() < 20.0:
        bad = np.unravel_index(np.argmin(angles), angles.shape)[0]
        cx, cy = points[triangles[bad]].mean(axis=0)
        raise MeshError(
            f"min angle {angles.min():.2f} deg < 20 near (x={cx:.4f}, y={cy:.4f})"
        )

    tags = _classify(points, Y)
    a_pairs = _match(
        points,
        tags["wall_right"],
        tags["wall_left"],
        lambda q: q - np.array([2.0, 0.0]),
        "wall pairing x -> x - 2",
    )
    b_pairs = _match(
        points,
        tags["circle_right"],
        tags["circle_left"],
        lambda q: np.column_stack([-q[:, 0], q[:, 1]]),
        "circle pairing z -> -conj(z)",
    )
    return TileMesh(
        vertices=points,
        triangles=triangles,
        h=float(h),
        Y=float(Y),
        tags=tags,
        a_pairs=a_pairs,
        b_pairs=b_pairs,
        meta={"min_angle": float(angles.min())},
    )


# ---------------------------------------------------------------------------
# snapshot format

_MESH_HEADER = "coverlab-mesh v1"


def mesh_to_text(mesh: TileMesh) -> str:
    lines = [
        _MESH_HEADER,
        f"h {mesh.h!r}",
        f"Y {mesh.Y!r}",
        f"vertices {mesh.n_vertices}",
    ]
    for x, y in mesh.vertices:
        lines.append(f"{float(x)!r} {float(y)!r}")
    lines.append(f"triangles {mesh.n_triangles}")
    for a, b, c in mesh.triangles:
        lines.append(f"{a} {b} {c}")
    return "\n".join(lines) + "\n"


def mesh_from_text(text: str) -> TileMesh:
    lines = text.splitlines()
    if not lines or lines[0].strip() != _MESH_HEADER:
        raise ConfigError(f"expected header {_MESH_HEADER!r}")
    h = float(lines[1].split()[1])
    Y = float(lines[2].split()[1])
    nv = int(lines[3].split()[1])
    verts = np.array(
        [[float(t) for t in ln.split()] for ln in lines[4 : 4 + nv]]
    )
    nt = int(lines[4 + nv].split()[1])
    tris = np.array(
        [[int(t) for t in ln.split()] for ln in lines[5 + nv : 5 + nv + nt]],
        dtype=np.int64,
    )
    tags = _classify(verts, Y)
    a_pairs = _match(
        verts, tags["wall_right"], tags["wall_left"],
        lambda q: q - np.array([2.0, 0.0]), "wall pairing x -> x - 2",
    )
    b_pairs = _match(
        verts, tags["circle_right"], tags["circle_left"],
        lambda q: np.column_stack([-q[:, 0], q[:, 1]]), "circle pairing z -> -conj(z)",
    )
    return TileMesh(
        vertices=verts, triangles=tris, h=h, Y=Y,
        tags=tags, a_pairs=a_pairs, b_pairs=b_pairs,
    )
