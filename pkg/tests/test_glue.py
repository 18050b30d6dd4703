import numpy as np
import pytest

from geodeq import fields as F
from geodeq import linalg as la
from geodeq import normalforms as nf
from geodeq import verify as vf
from geodeq.glue import Block, SpectralOverlapError, glue, split_pointwise


def line_block(sign, coeffs, box=(-1, 1), region=None):
    """1-dimensional block ``sign dx^2`` with eigenvalue polynomial ``coeffs``."""
    lam = F.ParamFn(tuple(float(c) for c in coeffs), 0)
    chart = F.Chart([list(box)])
    h = F.MetricField(1, lambda c: [[sign * 1.0]], chart)
    L = F.EndoField(1, lambda c: [[lam(c[0])]], chart)
    return Block(h, L, chart, region)


def _pts(pair, n=20, seed=0):
    return pair.chart.sample(n, np.random.default_rng(seed))[0]


X, Y, Z = [1, 0, 0.1], [3, 0, 0.1], [5, 0, 0.1]


def test_glue_of_two_lines_is_dini():
    glued = glue([line_block(-1, X), line_block(1, Y)])
    d = nf.dini_pair(X, Y)
    for p in _pts(d):
        assert np.abs(glued.g(p) - d.g(p)).max() <= 1e-15
        assert np.abs(glued.L(p) - d.L(p)).max() == 0
    assert glued.params["dims"] == [1, 1]


def test_glue_of_three_lines_is_levicivita3():
    glued = glue([line_block(1, X), line_block(-1, Y), line_block(1, Z)])
    lc = nf.levicivita3_pair(X, Y, Z)
    for p in _pts(lc):
        assert np.abs(glued.g(p) - lc.g(p)).max() <= 1e-13
        assert vf.compatibility_residual(glued.g, glued.L, p) <= 1e-12


def test_glue_of_line_and_complex_block_is_affine_complex3():
    alpha, beta, lam = 0.5, 2.0, [1, 0.5, 0.2]
    chart2 = F.Chart([[-1, 1]] * 2)
    h2 = F.MetricField(2, lambda c: np.array([[0.0, 1.0], [1.0, 0.0]]), chart2)
    L2 = F.EndoField(2, lambda c: np.array([[alpha, beta], [-beta, alpha]]), chart2)
    glued = glue([line_block(1, lam), Block(h2, L2, chart2)])
    ref = nf.affine_complex3_pair(alpha, beta, lam)
    for p in _pts(ref):
        assert np.abs(glued.g(p) - ref.g(p)).max() <= 1e-14
        assert np.abs(glued.L(p) - ref.L(p)).max() == 0


def test_glued_jordan_and_line_is_compatible():
    jb = nf.real_jordan_pair(2, [1, 0.1])
    glued = glue([jb, line_block(1, [5, 0.2])])
    for p in _pts(glued):
        assert vf.compatibility_residual(glued.g, glued.L, p) <= 1e-12
        assert vf.nijenhuis_residual(glued.L, p) <= 1e-12


def test_glue_is_associative():
    a, b, c = line_block(1, X), line_block(-1, Y), line_block(1, Z)
    left = glue([glue([a, b]), c])
    right = glue([a, glue([b, c])])
    flat = glue([a, b, c])
    for p in _pts(flat):
        ref = flat.g(p)
        scale = np.abs(ref).max()
        assert np.abs(left.g(p) - ref).max() <= 1e-12 * scale
        assert np.abs(right.g(p) - ref).max() <= 1e-12 * scale


def test_glue_commutes_up_to_coordinate_permutation():
    jb = nf.real_jordan_pair(2, [1, 0.1])
    lb = line_block(-1, [5, 0.2])
    ab = glue([jb, lb])
    ba = glue([lb, jb])
    perm = [2, 0, 1]  # coordinates of ba in terms of ab
    for p in _pts(ab):
        q = p[perm]
        G1 = ab.g(p)
        G2 = ba.g(q)
        assert np.abs(G2 - G1[np.ix_(perm, perm)]).max() <= 1e-13 * np.abs(G1).max()


def test_overlapping_sampled_spectra_are_rejected():
    with pytest.raises(SpectralOverlapError):
        glue([line_block(1, [1, 0, 0.1]), line_block(1, [1.05, 0, 0.1])])


def test_overlapping_declared_regions_are_rejected():
    a = line_block(1, X, region=[[[0.5, 2.0], [-0.1, 0.1]]])
    b = line_block(1, Y, region=[[[1.5, 4.0], [-0.1, 0.1]]])
    with pytest.raises(SpectralOverlapError, match="overlap"):
        glue([a, b])


def test_misdeclared_region_is_caught():
    # the declared box is disjoint from b's, but the spectrum of a runs through 1
    a = line_block(1, [1.0, 1.0], region=[[[0.0, 0.1], [-0.1, 0.1]]])
    b = line_block(1, [1.0], region=[[[0.9, 1.1], [-0.1, 0.1]]])
    with pytest.raises(SpectralOverlapError, match="outside its declared region"):
        glue([a, b])


def test_glued_dimension_is_capped():
    blocks = [nf.real_jordan_pair(3, [c]) for c in (1, 3, 5)]
    with pytest.raises(ValueError, match="exceeds"):
        glue(blocks)
    with pytest.raises(ValueError):
        glue([])


# splitting ---------------------------------------------------------------------


def test_split_single_block_returns_g():
    pair = nf.real_jordan_pair(3, [1, 0.5])
    for p in _pts(pair, 5):
        s = split_pointwise(pair.g, pair.L, p)
        assert len(s.blocks) == 1 and s.cross_term == 0
        assert np.abs(s.h - pair.g(p)).max() <= 1e-15 * np.abs(pair.g(p)).max()


def test_split_of_dini_recovers_signs():
    d = nf.dini_pair(X, Y)
    for p in _pts(d, 10):
        s = split_pointwise(d.g, d.L, p)
        assert np.abs(s.h - np.diag([-1.0, 1.0])).max() <= 1e-14
        assert [b.h_block[0, 0] for b in s.blocks] == pytest.approx([-1.0, 1.0], abs=1e-14)


def test_split_recovers_glued_blocks():
    jb = nf.real_jordan_pair(2, [1, 0.1])
    glued = glue([jb, line_block(1, [5, 0.2])])
    for p in _pts(glued, 10):
        s = split_pointwise(glued.g, glued.L, p)
        assert s.cross_term <= 1e-9
        big = max(s.blocks, key=lambda b: b.cluster.dim)
        small = min(s.blocks, key=lambda b: b.cluster.dim)
        Hj = jb.g(p[:2])
        assert np.abs(big.h_block - Hj).max() <= 1e-9 * np.abs(Hj).max()
        assert small.h_block[0, 0] == pytest.approx(1.0, rel=1e-9)
        D = s.block_diagonal()
        assert np.abs(D[:2, 2:]).max() <= 1e-9 * np.abs(D).max()


def test_split_cross_terms_vanish_for_compatible_pairs_in_general_coordinates():
    rng = np.random.default_rng(5)
    glued = glue([nf.real_jordan_pair(2, [1, 0.1]), line_block(-1, [4, 0.2])])
    for p in _pts(glued, 10):
        P = rng.standard_normal((3, 3)) + 3 * np.eye(3)
        G = P.T @ glued.g(p) @ P
        Lm = np.linalg.solve(P, glued.L(p) @ P)
        gf = F.MetricField(3, lambda c, G=G: G)
        Lf = F.EndoField(3, lambda c, Lm=Lm: Lm)
        assert split_pointwise(gf, Lf, [0.0]).cross_term <= 1e-9


def test_split_refuses_unseparated_clusters():
    g = F.MetricField(2, lambda c: np.eye(2))
    L = F.EndoField(2, lambda c: np.diag([1.0, 1.0 + 1e-6]))
    with pytest.raises(la.SpectrumError, match="not separated"):
        split_pointwise(g, L, [0.0], tol=1e-7)
    # far enough apart the two eigenvalues split cleanly
    L = F.EndoField(2, lambda c: np.diag([1.0, 1.1]))
    assert len(split_pointwise(g, L, [0.0]).blocks) == 2


from hypothesis import given, settings, strategies as st  # noqa: E402


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 2), st.floats(-0.3, 0.3), st.floats(3, 5), st.sampled_from([1, -1]), st.integers(0, 2**32 - 1))
def test_glue_preserves_compatibility_and_split_inverts_it(l0, l1, mu, sign, s):
    jb = nf.real_jordan_pair(2, [l0, l1])
    lb = nf.real_jordan_pair(1, [mu, 0.2], epsilon=sign)
    glued = glue([jb, lb])
    for p in glued.chart.sample(3, np.random.default_rng(s))[0]:
        assert vf.compatibility_residual(glued.g, glued.L, p) <= 1e-9
        split = split_pointwise(glued.g, glued.L, p)
        assert split.cross_term <= 1e-8
        big = max(split.blocks, key=lambda b: b.cluster.dim)
        H = jb.g(p[:2])
        assert np.abs(big.h_block - H).max() <= 1e-8 * np.abs(H).max()
