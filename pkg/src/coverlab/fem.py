"""Twisted Laplace eigenproblems on tiled covers with P1 elements.

A degree-n cover carries n copies of the truncated tile.  A function
twisted by a character chi of the cover group lives on the copies with
glued boundaries: the right wall of copy i continues into the left wall
of copy sigma_a(i), the right circle of copy i into the left circle of
copy sigma_b(i), with coupling sign +1 on Schreier-tree edges and the
character's sign on the others.  Truncation horocycles are free (natural)
boundary, so no constraint is imposed there.

The hyperbolic Dirichlet energy equals the Euclidean one (conformal
invariance in two dimensions), so the stiffness matrix is the plain P1
stiffness.  The mass matrix uses vertex quadrature of the 1/y^2 weight:
diagonal, positive, O(h^2) consistent.

Eigenvalues are reported raw; nothing is clamped to the continuous-
spectrum threshold 1/4.  EigenResult.below_quarter flags which computed
values sit under it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import characters as ch
from .covers import PermutationPair, SpanningBasis, is_transitive
from .errors import (
    AssemblyError,
    BasisMismatchError,
    DomainError,
    NumericError,
)
from .graph_spectra import SpectralSeries, deterministic_v0
from .mesh import TileMesh

__all__ = [
    "TwistedPair",
    "EigenResult",
    "assemble_twisted",
    "solve_lowest",
    "rayleigh",
    "fem_continuity_walk",
    "point_values",
    "cusp_samples",
    "collar_mass_ratio",
    "eigen_csv",
    "EIG_CSV_HEADER",
]

_DENSE_CUTOFF = 1200


# ---------------------------------------------------------------------------
# per-tile matrices


def _tile_stiffness(mesh: TileMesh) -> sp.csr_matrix:
    """Euclidean P1 stiffness, assembled upper-triangle-first so the result
    is symmetric to the last bit."""
    tris = mesh.triangles
    p = mesh.vertices[tris]
    # edge vector opposite vertex k
    e = p[:, [1, 2, 0]] - p[:, [2, 0, 1]]
    det = e[:, 0, 0] * e[:, 1, 1] - e[:, 0, 1] * e[:, 1, 0]
    area4 = 2.0 * np.abs(det)  # 4 * area
    rows, cols, vals = [], [], []
    for a in range(3):
        for b in range(a, 3):
            coef = np.einsum("ij,ij->i", e[:, a], e[:, b]) / area4
            rows.append(tris[:, a])
            cols.append(tris[:, b])
            vals.append(coef)
    m = mesh.n_vertices
    upper = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(m, m),
    ).tocsr()
    upper.sum_duplicates()
    diag = sp.diags(upper.diagonal())
    return (upper + upper.T - diag).tocsr()


# ---------------------------------------------------------------------------
# twisted assembly


@dataclass
class TwistedPair:
    """Reduced stiffness/mass pair for one character of a tiled cover."""

    S: sp.csr_matrix
    M: sp.csr_matrix  # diagonal, positive
    n: int  # cover degree
    mesh: TileMesh
    trivial: bool
    projector: sp.csr_matrix  # full (n*m) x reduced, entries +-1
    masters: np.ndarray  # master node ids within one tile
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.S.shape[0]


def _slave_map(mesh: TileMesh) -> tuple[dict, np.ndarray]:
    slave_of = {}
    for s, t in mesh.a_pairs:
        slave_of[int(s)] = (0, int(t))
    for s, t in mesh.b_pairs:
        if int(s) in slave_of:
            raise AssemblyError(
                f"node {int(s)} is a slave of both side pairings"
            )
        slave_of[int(s)] = (1, int(t))
    for _, (_, t) in slave_of.items():
        if t in slave_of:
            raise AssemblyError(f"master node {t} is itself a slave")
    masters = np.array(
        [v for v in range(mesh.n_vertices) if v not in slave_of], dtype=np.int64
    )
    return slave_of, masters


def assemble_twisted(
    mesh: TileMesh,
    pair: PermutationPair,
    basis: SpanningBasis,
    char: ch.CoverCharacter,
) -> TwistedPair:
    """Stiffness/mass pair of the chi-twisted problem on the tiled cover."""
    if char.fingerprint != ch.basis_hash(basis):
        raise BasisMismatchError("character does not belong to the given basis")
    if basis.pair != pair:
        raise AssemblyError("basis was built on a different permutation pair")
    if not is_transitive(pair):
        raise AssemblyError("cover is not connected; refusing to assemble")

    n = pair.n
    m = mesh.n_vertices
    slave_of, masters = _slave_map(mesh)
    mm = len(masters)
    mloc = -np.ones(m, dtype=np.int64)
    mloc[masters] = np.arange(mm)

    sa, sb = ch.edge_sign_arrays(char)
    sigmas = (pair.sigma_a, pair.sigma_b)
    signs_of = (sa, sb)

    # each full dof (tile i, node v) maps to one reduced dof with sign +-1
    cols = np.empty(n * m, dtype=np.int64)
    data = np.empty(n * m, dtype=np.float64)
    for i in range(n):
        base = i * m
        for v in range(m):
            hit = slave_of.get(v)
            if hit is None:
                cols[base + v] = i * mm + mloc[v]
                data[base + v] = 1.0
            else:
                g, t = hit
                j = int(sigmas[g][i])
                cols[base + v] = j * mm + mloc[t]
                data[base + v] = float(signs_of[g][i])
    P = sp.csr_matrix(
        (data, (np.arange(n * m), cols)), shape=(n * m, n * mm)
    )

    S_tile = _tile_stiffness(mesh)
    S_full = sp.kron(sp.identity(n, format="csr"), S_tile, format="csr")
    S = (P.T @ S_full @ P).tocsr()
    # remove summation-order asymmetry at the last ulp
    S = ((S + S.T) * 0.5).tocsr()

    mass_tile = mesh.lumped_mass()
    mass_full = np.tile(mass_tile, n)
    mdiag = np.bincount(cols, weights=mass_full, minlength=n * mm)
    if mdiag.min() <= 0:
        raise AssemblyError("mass matrix is not positive definite")
    M = sp.diags(mdiag).tocsr()

    return TwistedPair(
        S=S,
        M=M,
        n=n,
        mesh=mesh,
        trivial=char.is_trivial(),
        projector=P,
        masters=masters,
        meta={"h": mesh.h, "Y": mesh.Y, "tile_dofs": m, "tile_masters": mm},
    )


# ---------------------------------------------------------------------------
# generalized eigensolver


@dataclass
class EigenResult:
    """Lowest generalized eigenpairs, ascending; vectors are M-normalized."""

    values: list[float]
    vectors: np.ndarray  # (size, k)
    residuals: list[float]

    @property
    def below_quarter(self) -> list[bool]:
        return [v < 0.25 for v in self.values]


def _residuals(tp: TwistedPair, vals, vecs) -> list[float]:
    out = []
    for lam, v in zip(vals, vecs.T):
        num = np.linalg.norm(tp.S @ v - lam * (tp.M @ v))
        den = np.linalg.norm(tp.M @ v)
        out.append(float(num / den))
    return out


def solve_lowest(tp: TwistedPair, k: int = 1, v0: np.ndarray | None = None) -> EigenResult:
    """k smallest eigenvalues of S v = lambda M v, ascending.

    Values are raw (tiny negatives on an exact kernel are reported as is).
    Every returned pair must pass the residual gate 1e-7, else NumericError.
    """
    size = tp.size
    if not 1 <= k <= size:
        raise DomainError(f"need 1 <= k <= {size}, got {k}")
    d = np.sqrt(tp.M.diagonal())
    Dinv = sp.diags(1.0 / d)
    B = (Dinv @ tp.S @ Dinv).tocsr()
    if size <= _DENSE_CUTOFF or k >= size - 1:
        w, u = np.linalg.eigh(B.toarray())
        w, u = w[:k], u[:, :k]
    else:
        if v0 is None:
            v0 = deterministic_v0(size)
        try:
            w, u = spla.eigsh(B, k=k, sigma=-0.01, which="LM", v0=v0)
        except spla.ArpackNoConvergence as exc:
            raise NumericError(
                f"shift-invert Lanczos failed to converge ({exc})"
            ) from exc
        order = np.argsort(w)
        w, u = w[order], u[:, order]
    # back to the generalized problem; unit u gives v with v^T M v = 1
    vecs = (u.T / d).T
    vals = [float(x) for x in w]
    res = _residuals(tp, vals, vecs)
    if max(res) > 1e-7:
        raise NumericError(
            "generalized eigenpair residuals exceed 1e-7: "
            + ", ".join(f"{r:.3e}" for r in res)
        )
    return EigenResult(values=vals, vectors=vecs, residuals=res)


def rayleigh(tp: TwistedPair, v: np.ndarray) -> float:
    """v^T S v / v^T M v."""
    v = np.asarray(v, dtype=float)
    if v.shape != (tp.size,):
        raise DomainError(f"vector of length {tp.size} expected, got {v.shape}")
    mv = float(v @ (tp.M @ v))
    if mv <= 0.0:
        raise DomainError("Rayleigh quotient of a zero vector")
    return float(v @ (tp.S @ v)) / mv


# ---------------------------------------------------------------------------
# continuity walk (mesh backend)


def fem_continuity_walk(
    mesh: TileMesh,
    pair: PermutationPair,
    basis: SpanningBasis,
    chi_start: ch.CoverCharacter,
    chi_end: ch.CoverCharacter,
    k: int = 1,
) -> SpectralSeries:
    """Bottom discrete eigenvalue at every vertex of the flip path.

    Same geodesic and series conventions as the graph walk: raw bottom of
    the spectrum, one flip per step, warm-started solves.  k extra pairs
    may be tracked to stabilize the warm start.
    """
    from .errors import NotConnectedError

    if not is_transitive(pair):
        raise NotConnectedError("continuity walk requires a connected cover")
    path = ch.hamming_geodesic(chi_start, chi_end)
    flips = ch.flipped_coordinates(path)
    steps: list[tuple[int, int | None, float]] = []
    vec = None
    for step_idx, chi in enumerate(path):
        tp = assemble_twisted(mesh, pair, basis, chi)
        result = solve_lowest(tp, k=k, v0=vec)
        vec = result.vectors[:, 0]
        steps.append(
            (step_idx, None if step_idx == 0 else flips[step_idx - 1], result.values[0])
        )
    values = [v for _, _, v in steps]
    max_step = max(
        (abs(b - a) for a, b in zip(values, values[1:])), default=0.0
    )
    return SpectralSeries(
        steps=steps,
        max_step=max_step,
        endpoint_gap=None,
        meta={
            "n": pair.n,
            "length": len(steps),
            "backend": "fem",
            "h": mesh.h,
            "Y": mesh.Y,
            "k": k,
        },
    )


# ---------------------------------------------------------------------------
# evaluation and cusp bands


def _full_values(tp: TwistedPair, vectors: np.ndarray) -> np.ndarray:
    """Reduced coefficient vectors -> nodal values on all n tiles."""
    if vectors.ndim == 1:
        vectors = vectors[:, None]
    return tp.projector @ vectors


def point_values(
    tp: TwistedPair, vectors: np.ndarray, z: complex, tile: int = 0
) -> np.ndarray:
    """Evaluate reduced vectors at the point z of one tile copy.

    z must lie inside the truncated tile; P1 barycentric interpolation.
    """
    if not 0 <= tile < tp.n:
        raise DomainError(f"tile index out of range: {tile}")
    mesh = tp.mesh
    x, y = float(np.real(z)), float(np.imag(z))
    p = mesh.vertices[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    rx = x - p[:, 0, 0]
    ry = y - p[:, 0, 1]
    w1 = (rx * d2[:, 1] - ry * d2[:, 0]) / det
    w2 = (ry * d1[:, 0] - rx * d1[:, 1]) / det
    w0 = 1.0 - w1 - w2
    inside = (w0 >= -1e-10) & (w1 >= -1e-10) & (w2 >= -1e-10)
    hits = np.where(inside)[0]
    if not len(hits):
        raise DomainError(f"point {x}+{y}i lies outside the truncated tile")
    t = int(hits[0])
    bary = np.array([w0[t], w1[t], w2[t]])
    full = _full_values(tp, vectors)
    m = mesh.n_vertices
    nodes = tile * m + mesh.triangles[t]
    return bary @ full[nodes]


def cusp_samples(
    tp: TwistedPair, vec: np.ndarray, cusp: str
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(heights, weights, values) of all cover nodes in one cusp's charts.

    The cusp at 1 is charted from both +-1 fundamental-domain corners; a
    node is tall in at most one chart, short entries fall outside any
    height band downstream.
    """
    mesh = tp.mesh
    charts = {
        "inf": ("inf",),
        "zero": ("zero",),
        "one": ("one", "minus_one"),
    }
    if cusp not in charts:
        raise DomainError(f"unknown cusp {cusp!r}")
    full = _full_values(tp, vec)[:, 0]
    mass = np.tile(tp.mesh.lumped_mass(), tp.n)
    heights, weights, values = [], [], []
    for chart in charts[cusp]:
        hts = np.tile(mesh.cusp_height(chart), tp.n)
        heights.append(hts)
        weights.append(mass)
        values.append(full)
    return (
        np.concatenate(heights),
        np.concatenate(weights),
        np.concatenate(values),
    )


def collar_mass_ratio(
    f: np.ndarray, cusp: str, tp: TwistedPair, L: float, Y: float | None = None
):
    """Band-mass ratio of an eigenvector around one cusp of the cover.

    Thin wrapper matching the eigenvector-facing signature; the band
    arithmetic itself lives with the kernel estimates.
    """
    from .kernels import collar_mass_ratio as band_ratio

    heights, weights, values = cusp_samples(tp, f, cusp)
    return band_ratio(heights, weights, values, L, tp.mesh.Y if Y is None else Y)


# ---------------------------------------------------------------------------
# CSV

EIG_CSV_HEADER = "index,lambda,residual"


def eigen_csv(result: EigenResult) -> str:
    lines = [EIG_CSV_HEADER]
    for i, (lam, r) in enumerate(zip(result.values, result.residuals)):
        lines.append(f"{i},{lam:.17g},{r:.3e}")
    return "\n".join(lines) + "\n"
