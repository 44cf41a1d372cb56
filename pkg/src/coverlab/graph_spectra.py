"""Signed Schreier graph Laplacians and the character continuity walk.

The signed adjacency A of a cover with edge signs has A[i][j] equal to the
sum of signs of undirected edges between i and j (a loop adds twice its sign
to the diagonal). The walk tracks the bottom eigenvalue of L = 4I - A along a
Hamming geodesic of characters, flipping one basis sign at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import characters as ch
from .covers import PermutationPair, SpanningBasis, is_transitive
from .errors import BasisMismatchError, NotConnectedError, NumericError

DEGREE = 4


@dataclass
class SignedOperator:
    """Symmetric signed adjacency with the 4-regular degree convention."""

    n: int
    matrix: sp.csr_matrix
    trivial: bool

    def laplacian(self) -> sp.csr_matrix:
        return (sp.identity(self.n, format="csr") * DEGREE - self.matrix).tocsr()


def assemble_signed(
    pair: PermutationPair, basis: SpanningBasis, char: ch.CoverCharacter
) -> SignedOperator:
    """Signed adjacency for the given character (tree edges +1)."""
    if char.fingerprint != ch.basis_hash(basis):
        raise BasisMismatchError("character does not belong to the given basis")
    n = pair.n
    sa, sb = ch.edge_sign_arrays(char)
    rows, cols, vals = [], [], []
    for signs, sigma in ((sa, pair.sigma_a), (sb, pair.sigma_b)):
        for i in range(n):
            j = int(sigma[i])
            s = int(signs[i])
            if i == j:
                rows.append(i)
                cols.append(i)
                vals.append(2 * s)
            else:
                rows.extend((i, j))
                cols.extend((j, i))
                vals.extend((s, s))
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    return SignedOperator(n=n, matrix=mat, trivial=char.is_trivial())


def deterministic_v0(n: int, seed: int = 0) -> np.ndarray:
    v = np.random.default_rng(seed).standard_normal(n)
    return v / np.linalg.norm(v)


_DENSE_CUTOFF = 400


def _bottom_eigs(
    op: SignedOperator, k: int, v0: np.ndarray | None
) -> tuple[np.ndarray, np.ndarray]:
    """k smallest eigenpairs of L = 4I - A, ascending."""
    n = op.n
    k = min(k, n)
    if n <= _DENSE_CUTOFF or k >= n - 1:
        lap = op.laplacian().toarray()
        w, v = np.linalg.eigh(lap)
        return w[:k], v[:, :k]
    # smallest of L through the largest of the positive-definite 9I - L = 5I + A
    shifted = (sp.identity(n, format="csr") * (DEGREE + 1) + op.matrix).tocsr()
    if v0 is None:
        v0 = deterministic_v0(n)
    try:
        mu, vec = spla.eigsh(
            shifted, k=k, which="LA", tol=1e-9, maxiter=10 * n, v0=v0
        )
    except spla.ArpackNoConvergence as exc:
        raise NumericError(
            f"Lanczos failed to converge within {10 * n} iterations "
            f"({len(exc.eigenvalues)} of {k} eigenvalues found)"
        ) from exc
    order = np.argsort(mu)[::-1]  # largest mu = smallest lambda
    lam = (DEGREE + 5) - mu[order]
    return np.maximum(lam, 0.0), vec[:, order]


def lambda1_with_vector(
    op: SignedOperator, v0: np.ndarray | None = None
) -> tuple[float | None, np.ndarray | None]:
    """Bottom of spec(L), with the multiplicity-one zero removed when the
    character is trivial (requires a connected graph); None when nothing
    remains (degree-1 trivial case)."""
    if op.trivial:
        if op.n == 1:
            return None, None
        lam, vec = _bottom_eigs(op, 2, v0)
        if lam[0] > 1e-8:
            raise NumericError(
                f"trivial character must carry an exact zero, got {lam[0]:.3e}; "
                "is the cover connected?"
            )
        return float(lam[1]), vec[:, 1]
    lam, vec = _bottom_eigs(op, 1, v0)
    return float(lam[0]), vec[:, 0]


def lambda1(op: SignedOperator, v0: np.ndarray | None = None) -> float | None:
    return lambda1_with_vector(op, v0)[0]


def bottom_no_removal(
    op: SignedOperator, v0: np.ndarray | None = None
) -> tuple[float, np.ndarray]:
    """Bottom of spec(L) with no zero removal (walk-series convention)."""
    lam, vec = _bottom_eigs(op, 1, v0)
    return float(lam[0]), vec[:, 0]


# ---------------------------------------------------------------------------
# continuity walk


@dataclass
class SpectralSeries:
    """lambda1 series along a Hamming geodesic of characters."""

    steps: list[tuple[int, int | None, float]]  # (index, flipped edge, value)
    max_step: float
    endpoint_gap: float | None
    meta: dict = field(default_factory=dict)

    @property
    def values(self) -> list[float]:
        return [v for _, _, v in self.steps]


def continuity_walk(
    pair: PermutationPair,
    basis: SpanningBasis,
    chi_start: ch.CoverCharacter,
    chi_end: ch.CoverCharacter,
) -> SpectralSeries:
    """Bottom eigenvalue at every vertex of the flip path chi_start -> chi_end.

    The series uses the raw bottom of the spectrum (no zero removal), so a
    walk from the trivial character starts at 0. Each solve warm-starts from
    the previous eigenvector. endpoint_gap reports lambda1 of the final
    character under the zero-removal convention.
    """
    if not is_transitive(pair):
        raise NotConnectedError("continuity walk requires a connected cover")
    path = ch.hamming_geodesic(chi_start, chi_end)
    flips = ch.flipped_coordinates(path)
    steps: list[tuple[int, int | None, float]] = []
    vec = None
    for k, chi in enumerate(path):
        op = assemble_signed(pair, basis, chi)
        val, vec = bottom_no_removal(op, vec)
        steps.append((k, None if k == 0 else flips[k - 1], val))
    end_op = assemble_signed(pair, basis, path[-1])
    endpoint_gap = lambda1(end_op)
    values = [v for _, _, v in steps]
    max_step = max(
        (abs(b - a) for a, b in zip(values, values[1:])), default=0.0
    )
    return SpectralSeries(
        steps=steps,
        max_step=max_step,
        endpoint_gap=endpoint_gap,
        meta={"n": pair.n, "length": len(steps)},
    )


def density_report(series: SpectralSeries, eta: float) -> bool:
    """True iff every y in [0, endpoint] lies within eta of a recorded value."""
    vals = sorted(series.values)
    end = series.values[-1]
    lo, hi = min(0.0, end), max(0.0, end)

    def covered(y: float) -> bool:
        return any(abs(y - v) <= eta + 1e-12 for v in vals)

    if not covered(lo) or not covered(hi):
        return False
    # worst uncovered points are midpoints between consecutive recorded values
    for a, b in zip(vals, vals[1:]):
        mid = 0.5 * (a + b)
        if lo <= mid <= hi and not covered(mid):
            return False
    return True


# ---------------------------------------------------------------------------
# CSV output

CSV_HEADER = "step,flipped_edge,lambda1"


def series_to_csv(series: SpectralSeries) -> str:
    lines = [CSV_HEADER]
    for k, flipped, val in series.steps:
        tag = "-" if flipped is None else str(flipped)
        lines.append(f"{k},{tag},{format(val, '.17g')}")
    return "\n".join(lines) + "\n"


def series_from_csv(text: str) -> SpectralSeries:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        from .errors import ConfigError

        raise ConfigError(f"expected CSV header {CSV_HEADER!r}")
    steps = []
    for ln in lines[1:]:
        k, tag, val = ln.split(",")
        steps.append((int(k), None if tag == "-" else int(tag), float(val)))
    values = [v for _, _, v in steps]
    max_step = max((abs(b - a) for a, b in zip(values, values[1:])), default=0.0)
    return SpectralSeries(steps=steps, max_step=max_step, endpoint_gap=None)
