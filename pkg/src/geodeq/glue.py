"""Gluing compatible blocks into a pair on the product, and pointwise splitting.

Gluing: block ``i`` of the product metric is ``h_i`` composed with
``prod_{j != i} chi_j(L_i)``, where ``chi_j`` is the characteristic polynomial
of ``L_j`` at the other block's coordinates.  ``L`` is the direct sum.

Splitting: at one point, with ``chi_hat = sum_i chi / chi_i`` the metric
``h = g chi_hat(L)^{-1}`` is block diagonal along the generalized eigenspaces
of ``L``.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .fields import Chart, EndoField, MetricField
from .normalforms import Pair


class SpectralOverlapError(ValueError):
    """Two blocks have intersecting spectra somewhere on the product."""


@dataclass
class Block:
    """A compatible pair on its own chart plus the complex region of its spectrum.

    ``region`` is a list of axis-aligned boxes ``[[re_lo, re_hi], [im_lo,
    im_hi]]``; ``None`` means the region is estimated by sampling.
    """

    h: MetricField
    L: EndoField
    chart: Chart
    region: list = None

    @property
    def dim(self):
        return self.h.dim

    @classmethod
    def from_pair(cls, pair, region=None):
        return cls(pair.g, pair.L, pair.chart, region if region is not None else pair.region)

    def char_poly(self, coords):
        return la.char_poly(self.L.evaluate(coords))


def _sample_region(block, n, rng, pad=0.05):
    pts, _ = block.chart.sample(n, rng)
    eig = np.concatenate([np.linalg.eigvals(np.real(block.L(p)).astype(float)) for p in pts])
    # spectra of real operators are conjugate-symmetric; keep each half separately
    boxes = []
    for half in (eig[eig.imag >= -1e-12], eig[eig.imag < -1e-12]):
        if half.size:
            re, im = half.real, half.imag
            w = pad * (1 + np.abs(half).max())
            boxes.append([[re.min() - w, re.max() + w], [im.min() - w, im.max() + w]])
    return boxes


def _boxes_overlap(a, b):
    return all(a[k][0] <= b[k][1] and b[k][0] <= a[k][1] for k in range(2))


def _check_disjoint(regions):
    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            for a in regions[i]:
                for b in regions[j]:
                    if _boxes_overlap(a, b):
                        raise SpectralOverlapError(
                            f"spectral regions of blocks {i} and {j} overlap: {a} vs {b}"
                        )


def _in_region(z, region, slack=1e-9):
    return any(
        box[0][0] - slack <= z.real <= box[0][1] + slack and box[1][0] - slack <= z.imag <= box[1][1] + slack
        for box in region
    )


def _spectrum_check(blocks, pts, offsets):
    """Eigenvalues stay inside declared regions and distinct blocks never share one."""
    for p in pts:
        spectra = [
            np.linalg.eigvals(np.real(b.L(p[o : o + b.dim])).astype(float))
            for b, o in zip(blocks, offsets)
        ]
        for i, (b, sp) in enumerate(zip(blocks, spectra)):
            if b.region is not None:
                for z in sp:
                    if not _in_region(z, b.region):
                        raise SpectralOverlapError(
                            f"eigenvalue {z} of block {i} at {tuple(p)} lies outside its declared region"
                        )
        for i in range(len(spectra)):
            for j in range(i + 1, len(spectra)):
                d = np.abs(spectra[i][:, None] - spectra[j][None, :]).min()
                if d <= 1e-9 * (1 + np.abs(np.concatenate([spectra[i], spectra[j]])).max()):
                    raise SpectralOverlapError(
                        f"blocks {i} and {j} share an eigenvalue at {tuple(p)}"
                    )


def glue(blocks, n_check=64, seed=0):
    """Compatible pair on the product of the blocks' charts.

    Blocks may be :class:`Block` or :class:`Pair` objects.  Spectral
    disjointness is checked on the declared (or sampled) regions and at
    ``n_check`` random product points.
    """
    blocks = [b if isinstance(b, Block) else Block.from_pair(b) for b in blocks]
    if not blocks:
        raise ValueError("nothing to glue")
    dims = [b.dim for b in blocks]
    total = sum(dims)
    if total > la.MAX_DIM:
        raise ValueError(f"glued dimension {total} exceeds {la.MAX_DIM}")
    offsets = np.concatenate([[0], np.cumsum(dims)[:-1]]).astype(int).tolist()
    rng = np.random.default_rng(seed)
    regions = [b.region if b.region is not None else _sample_region(b, 32, rng) for b in blocks]
    _check_disjoint(regions)

    chart = blocks[0].chart
    for b in blocks[1:]:
        chart = chart.product(b.chart)
    if n_check:
        pts, _ = chart.sample(n_check, rng)
        _spectrum_check(blocks, pts, offsets)

    def split_coords(c):
        return [c[o : o + d] for o, d in zip(offsets, dims)]

    def pieces(c):
        cs = split_coords(c)
        hs = [b.h.evaluate(ci) for b, ci in zip(blocks, cs)]
        Ls = [b.L.evaluate(ci) for b, ci in zip(blocks, cs)]
        return hs, Ls

    def g(c):
        hs, Ls = pieces(c)
        chis = [la.char_poly(Li) for Li in Ls]
        out = _zeros(total)
        for i, (hi, Li) in enumerate(zip(hs, Ls)):
            W = la.identity(dims[i], la.as_matrix(Li))
            for j, chi in enumerate(chis):
                if j != i:
                    W = W @ chi.at_matrix(Li)
            o = offsets[i]
            out[o : o + dims[i], o : o + dims[i]] = hi @ W
        return out

    def L(c):
        _, Ls = pieces(c)
        out = _zeros(total)
        for o, d, Li in zip(offsets, dims, Ls):
            out[o : o + d, o : o + d] = Li
        return out

    gf = MetricField(total, g, chart, "glued g")
    Lf = EndoField(total, L, chart, "glued L")
    return Pair(
        "glue",
        gf,
        Lf,
        chart,
        params={"dims": dims},
        region=[box for r in regions for box in r],
        parts=blocks,
    )


def _zeros(n):
    out = np.empty((n, n), dtype=object)
    out.fill(0)
    return out


@dataclass
class SplitBlock:
    cluster: la.Cluster
    projector: np.ndarray
    basis: np.ndarray
    h_block: np.ndarray
    chi: la.Poly


@dataclass
class Splitting:
    h: np.ndarray
    blocks: list
    cross_term: float

    def block_diagonal(self):
        """``h`` in the adapted basis obtained by concatenating block bases."""
        B = np.hstack([b.basis for b in self.blocks])
        return B.T @ self.h @ B


def _column_basis(P, rank):
    """``rank`` columns of ``P`` picked by pivoted Gram-Schmidt; returned unnormalized."""
    P = np.array(P, dtype=float)
    chosen, Q = [], []
    for _ in range(rank):
        R = P.copy()
        for q in Q:
            R -= np.outer(q, q @ R)
        norms = np.linalg.norm(R, axis=0)
        norms[chosen] = -1
        k = int(np.argmax(norms))
        chosen.append(k)
        Q.append(R[:, k] / norms[k])
    chosen.sort()
    return P[:, chosen]


def split_pointwise(g, L, p, tol=1e-7):
    """Block decomposition of the metric ``g chi_hat(L)^{-1}`` at ``p``.

    Each returned block carries the spectral projector of its eigenvalue
    cluster, a basis of its range (pivot columns of the projector), the metric
    restricted to that basis and the cluster's characteristic polynomial.
    ``cross_term`` is the largest entry of ``h`` between different blocks,
    relative to ``|h|_max``.
    """
    G = np.real(np.asarray(g(p))).astype(float)
    Lv = np.real(np.asarray(L(p))).astype(float)
    clusters = la.clusters_of(Lv, tol)
    if len(clusters) > 1 and la.cluster_gap(clusters) <= 10 * tol:
        raise la.SpectrumError(
            f"eigenvalue clusters are not separated at {tuple(np.ravel(p))}"
        )
    chis = [cl.poly() for cl in clusters]
    n = Lv.shape[0]
    chi_hat = np.zeros((n, n))
    for i in range(len(chis)):
        term = np.eye(n)
        for j, chi in enumerate(chis):
            if j != i:
                term = term @ chi.at_matrix(Lv).astype(float)
        chi_hat += term
    if abs(np.linalg.det(chi_hat)) <= 1e-300:
        raise la.SpectrumError("chi_hat(L) is singular: numerically degenerate clustering")
    h = la.symmetrize(G @ np.linalg.inv(chi_hat))
    blocks = []
    for cl, chi in zip(clusters, chis):
        P = la.spectral_projector(Lv, cl, tol, clusters)
        B = _column_basis(P, cl.dim)
        blocks.append(SplitBlock(cl, P, B, B.T @ h @ B, chi))
    cross = 0.0
    for a in range(len(blocks)):
        for b in range(a + 1, len(blocks)):
            cross = max(cross, np.abs(blocks[a].basis.T @ h @ blocks[b].basis).max())
    cross /= max(np.abs(h).max(), 1e-300)
    return Splitting(h, blocks, float(cross))
