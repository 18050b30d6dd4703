from math import comb

import numpy as np
import pytest

from geodeq import linalg as la
from geodeq import normalforms as nf
from geodeq.verify import compatibility_residual, nabla_L, selfadjoint_residual

RNG_SEED = 20


def _points(pair, n=100, seed=RNG_SEED):
    pts, _ = pair.chart.sample(n, np.random.default_rng(seed))
    return pts


GENERATORS = {
    "dini": lambda: nf.dini_pair([1, 0, 0.1], [3, 0, 0.1]),
    "dini_eps": lambda: nf.dini_pair([1, 0.2], [3, 0, 0.5], epsilon=-1),
    "levicivita3": lambda: nf.levicivita3_pair([1, 0.1], [2.5, 0, 0.2], [4, 0.3]),
    "real_jordan2": lambda: nf.real_jordan_pair(2, [1, 0.5]),
    "real_jordan3": lambda: nf.real_jordan_pair(3, [1, 0.5, 0.3]),
    "real_jordan4": lambda: nf.real_jordan_pair(4, [1, 0.5]),
    "real_jordan3_neg": lambda: nf.real_jordan_pair(3, [1, 0.5], epsilon=-1),
    "normalized3": lambda: nf.real_jordan_normalized_pair(3, [1.0]),
    "normalized4": lambda: nf.real_jordan_normalized_pair(4, [1.0, 0.2]),
    "complex1": lambda: nf.complex_jordan_pair(1, [1j, 0.5]),
    "complex2": lambda: nf.complex_jordan_pair(2, [1j, 0.5]),
    "complex_normalized2": lambda: nf.complex_jordan_normalized_pair(2, [1.0]),
    "affine_complex3": lambda: nf.affine_complex3_pair(0.5, 2.0, [1, 0.5, 0.2]),
}


@pytest.mark.parametrize("name", sorted(GENERATORS))
def test_generated_pairs_are_compatible_and_selfadjoint(name):
    pair = GENERATORS[name]()
    for p in _points(pair):
        assert compatibility_residual(pair.g, pair.L, p) <= 1e-9
        assert selfadjoint_residual(pair.g, pair.L, p) <= 1e-12
        G = pair.g(p)
        assert np.array_equal(G, G.T)


# Dini and Levi-Civita --------------------------------------------------------


def test_dini_constant_parameters():
    d = nf.dini_pair([1.0], [2.0])
    p = [0.3, -0.7]
    assert np.array_equal(d.g(p), np.eye(2))
    assert np.array_equal(d.gbar(p), np.diag([0.5, 0.25]))
    assert np.array_equal(d.L(p), np.diag([1.0, 2.0]))


def test_dini_requires_ordering():
    with pytest.raises(ValueError, match="0 < X"):
        nf.dini_pair([2.0], [1.0])
    with pytest.raises(ValueError):
        nf.dini_pair([0, 1.0], [3.0])  # X changes sign on the box


def test_levicivita_constant_parameters():
    lc = nf.levicivita3_pair([1.0], [2.0], [4.0])
    p = [0.0, 0.1, 0.2]
    assert np.array_equal(lc.g(p), np.diag([3.0, 2.0, 6.0]))
    assert np.array_equal(lc.L(p), np.diag([1.0, 2.0, 4.0]))
    with pytest.raises(ValueError):
        nf.levicivita3_pair([1.0], [5.0], [4.0])


def test_epsilon_flips_metric_only():
    a = nf.real_jordan_pair(3, [1, 0.5])
    b = nf.real_jordan_pair(3, [1, 0.5], epsilon=-1)
    p = [0.1, -0.2, 0.3]
    assert np.array_equal(a.g(p), -b.g(p))
    assert np.array_equal(a.L(p), b.L(p))
    with pytest.raises(ValueError):
        nf.real_jordan_pair(3, [1, 0.5], epsilon=2)


# real Jordan blocks ----------------------------------------------------------


def test_real_jordan_n2_with_eigenvalue_x2():
    pair = nf.real_jordan_pair(2, [0.0, 1.0], chart=[[-0.5, 0.5], [0.5, 1.5]])
    x1, x2 = 0.3, 0.9
    assert np.array_equal(pair.g([x1, x2]), np.array([[0, 1 + x1], [1 + x1, 0]]))
    assert np.array_equal(pair.L([x1, x2]), np.array([[x2, 1 + x1], [0, x2]]))


def test_real_jordan_n4_layout():
    # lambda' = 0.5: a1 = 0.5 x1, a2 = 1.0 x2, a3 = 1 + 1.5 x3
    pair = nf.real_jordan_pair(4, [1, 0.5])
    x = np.array([0.1, -0.2, 0.3, 0.4])
    a1, a2, a3 = 0.5 * x[0], 1.0 * x[1], 1 + 1.5 * x[2]
    lam = 1 + 0.5 * x[3]
    G = np.array(
        [[0, 0, 0, a3], [0, 0, 1, a2], [0, 1, 0, a1], [a3, a2, a1, a1 * a2 + a2 * a1]]
    )
    L = np.array([[lam, 1, 0, a1], [0, lam, 1, a2], [0, 0, lam, a3], [0, 0, 0, lam]])
    assert np.abs(pair.g(x) - G).max() <= 1e-15
    assert np.abs(pair.L(x) - L).max() <= 1e-15


def test_constant_eigenvalue_gives_plain_jordan_block_and_parallel_L():
    pair = nf.real_jordan_pair(3, [2.0])
    for p in _points(pair, 20):
        G = pair.g(p)
        assert np.array_equal(G, np.fliplr(np.eye(3)))
        assert np.array_equal(pair.L(p), np.array([[2.0, 1, 0], [0, 2, 1], [0, 0, 2]]))
        assert np.abs(nabla_L(pair.g, pair.L, p)).max() <= 1e-11


@pytest.mark.parametrize("n", [2, 3, 4])
def test_real_jordan_characteristic_polynomial(n):
    pair = nf.real_jordan_pair(n, [1, 0.5])
    for p in _points(pair, 30):
        lam = 1 + 0.5 * p[n - 1]
        got = np.array(la.char_poly(pair.L(p)).coeffs, dtype=float)
        ref = np.array([comb(n, k) * (-lam) ** (n - k) for k in range(n + 1)])
        assert np.abs(got - ref).max() <= 1e-9


def test_real_jordan_exclusions():
    pair = nf.real_jordan_pair(2, [0.0, 1.0], chart=[[-1.5, 1.5], [-1, 1]])
    names = [e.name for e in pair.chart.exclusions]
    assert names == ["lambda", "a_{n-1}"]
    assert not pair.chart.contains([0.0, 0.0])


def test_normalized_origin_point():
    for n in (2, 3, 4):
        pair = nf.real_jordan_normalized_pair(n, [1.0])
        p = np.zeros(n)
        p[-1] = 0.8
        assert np.array_equal(pair.g(p), np.fliplr(np.eye(n)))
        J = 0.8 * np.eye(n) + np.diag(np.ones(n - 1), 1)
        assert np.array_equal(pair.L(p), J)


@pytest.mark.parametrize("n", [3, 4])
def test_normalized_gauge_shift_by_constant(n):
    c = 0.05
    h = [1.0, 0.3]
    a = nf.real_jordan_normalized_pair(n, h)
    b = nf.real_jordan_normalized_pair(n, [1.0 - (n - 1) * c, 0.3])
    for p in _points(a, 20):
        q = p.copy()
        q[n - 2] += c
        assert np.abs(a.g(p) - b.g(q)).max() <= 1e-14
        assert np.abs(a.L(p) - b.L(q)).max() <= 1e-14


@pytest.mark.parametrize("n", [3, 4])
def test_corner_entry_variants(n):
    # only the sum of products a_i a_{n-i-1} solves the compatibility equation
    good = nf.real_jordan_normalized_pair(n, [1.0], sigma="paired")
    bad = nf.real_jordan_normalized_pair(n, [1.0], sigma="weighted")
    pts = _points(good, 50)
    assert max(compatibility_residual(good.g, good.L, p) for p in pts) <= 1e-9
    assert max(compatibility_residual(bad.g, bad.L, p) for p in pts) > 1e-2


# complex Jordan blocks -------------------------------------------------------


def test_complex_n1_constant_eigenvalue():
    a, b = 0.4, 1.5
    pair = nf.complex_jordan_pair(1, [complex(a, b)])
    p = [0.1, 0.2]
    assert np.abs(pair.g(p) - np.array([[2 * b, 0], [0, -2 * b]])).max() <= 1e-15
    assert np.array_equal(pair.L(p), np.array([[a, -b], [b, a]]))


def test_realification_rules():
    M = np.array([[1 + 2j]], dtype=object)
    assert nf.realify_operator(M).astype(float).tolist() == [[1, -2], [2, 1]]
    assert nf.realify_form(M).astype(float).tolist() == [[1, -2], [-2, -1]]


@pytest.mark.parametrize("n", [1, 2])
def test_complex_block_char_poly_and_complex_linearity(n):
    pair = nf.complex_jordan_pair(n, [1j, 0.5])
    J0 = np.kron(np.eye(n), np.array([[0.0, -1.0], [1.0, 0.0]]))
    for p in _points(pair, 30):
        lam = 1j + 0.5 * complex(p[2 * n - 2], p[2 * n - 1])
        base = np.array([abs(lam) ** 2, -2 * lam.real, 1.0])
        ref = np.array([1.0])
        for _ in range(n):
            ref = np.convolve(ref, base)
        got = np.array(la.char_poly(pair.L(p)).coeffs)
        assert not np.iscomplexobj(got)
        assert np.abs(got - ref).max() <= 1e-8
        L = pair.L(p)
        assert np.abs(L @ J0 - J0 @ L).max() <= 1e-15


def test_complex_block_requires_nonreal_eigenvalue():
    pair = nf.complex_jordan_pair(1, [0.0, 1.0], chart=[[-0.5, 0.5], [-0.5, 0.5]])
    assert not pair.chart.contains([0.1, 0.0])


# affine complex and the non-example ------------------------------------------


def test_affine_complex3_with_lambda_equal_alpha():
    alpha, beta = 0.7, 1.3
    pair = nf.affine_complex3_pair(alpha, beta, [alpha])
    G = pair.g([0.0, 0.0, 0.0])
    assert np.array_equal(G, np.array([[beta**2, 0, 0], [0, -beta, 0], [0, 0, beta]]))
    assert np.linalg.det(G) == pytest.approx(-(beta**4))


def test_affine_complex3_rejects_zero_beta():
    with pytest.raises(ValueError):
        nf.affine_complex3_pair(1.0, 0.0, [1.0])


def test_aminova_matrices():
    am = nf.aminova_pair()
    p = [1.0, 1.0, 1.0, 2.0]
    G, Gb = am.g(p), am.gbar(p)
    assert np.array_equal(G, G.T) and np.array_equal(Gb, Gb.T)
    assert G[0, 3] == 3.0
    # second matrix at the same point, entries as printed
    assert Gb[0, 3] == 3 / 32 and Gb[1, 2] == 2 / 32 and Gb[2, 2] == -1 / 64
    assert Gb[1, 3] == pytest.approx((-3 + 4) / 64)
    assert Gb[2, 3] == pytest.approx((3 - 4 + 4) / 128)
    assert Gb[3, 3] == pytest.approx((-3 + 4) * (8 + 3 - 4) / 256)


def test_aminova_with_omega():
    am = nf.aminova_pair([0.0, 1.0])
    assert am.g([1.0, 1.0, 1.0, 2.0])[0, 3] == 3 * 1 + 3 * 2


def test_aminova_chart_must_avoid_x4_zero():
    with pytest.raises(ValueError, match="x4 = 0"):
        nf.aminova_pair(chart=[[0, 2], [0, 2], [0, 2], [-1, 2]])


# frozen by tests/oracles/derive_constants.py (symbolic differentiation)
AMINOVA_COMPATIBILITY_AT_1112 = 0.2378815991252808


def test_aminova_compatibility_regression():
    am = nf.aminova_pair()
    r = compatibility_residual(am.g, am.L, [1.0, 1.0, 1.0, 2.0])
    assert r == pytest.approx(AMINOVA_COMPATIBILITY_AT_1112, rel=1e-10)
    assert r > 1e-2
    assert selfadjoint_residual(am.g, am.L, [1.0, 1.0, 1.0, 2.0]) <= 1e-12


def test_symbolic_summary_for_jordan_kinds():
    s = nf.symbolic_summary(nf.real_jordan_pair(3, [0, 1]))
    assert s["g"][0] == ["0", "0", "a2"] and s["g"][2][2] == "a1*a1"
    assert s["L"][0] == ["lambda", "1", "a1"]
    assert nf.symbolic_summary(nf.dini_pair([1], [2])) is None
