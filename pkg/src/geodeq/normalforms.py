"""Explicit compatible pairs (g, L): classical diagonal forms, Jordan blocks,
complex Jordan blocks, and the Aminova matrices that fail to be equivalent.

Every generator returns a :class:`Pair`.  Coordinates are 0-based in code;
``x[n-1]`` plays the role of the last coordinate of a Jordan block.  Complex
charts of complex dimension ``n`` use the real coordinates
``(x_1, y_1, ..., x_n, y_n)``.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import linalg as la
from .fields import (
    Chart,
    EndoField,
    Exclusion,
    MetricField,
    ParamFn,
    as_param,
    companion_metric,
    projective_L_field,
)
from .jets import conj, imag, real

KINDS = (
    "dini",
    "levicivita3",
    "real_jordan",
    "real_jordan_normalized",
    "complex_jordan",
    "complex_jordan_normalized",
    "affine_complex3",
    "aminova",
)

SIGMA_VARIANTS = ("paired", "weighted")


@dataclass
class Pair:
    """A metric ``g`` with an endomorphism ``L`` and the companion metric."""

    kind: str
    g: MetricField
    L: EndoField
    chart: Chart
    gbar_field: MetricField = None
    params: dict = dc_field(default_factory=dict)
    region: list = None
    parts: list = None

    @property
    def dim(self):
        return self.g.dim

    @property
    def gbar(self):
        if self.gbar_field is None:
            self.gbar_field = companion_metric(self.g, self.L)
        return self.gbar_field


def _default_chart(chart, box, margin=1e-3):
    if chart is None:
        return Chart(box, margin=margin)
    if not isinstance(chart, Chart):
        chart = Chart(chart)
    return chart


def _grid(chart, per_axis=9):
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in chart.box]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, chart.dim)


def _check_epsilon(epsilon):
    if epsilon not in (1, -1):
        raise ValueError(f"epsilon must be +1 or -1, got {epsilon!r}")
    return epsilon


def _mat(rows):
    out = np.empty((len(rows), len(rows)), dtype=object)
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            out[i, j] = x
    return out


def _diag(entries):
    n = len(entries)
    return _mat([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)])


# classical diagonal forms -------------------------------------------------


def dini_pair(X, Y, chart=None, epsilon=1):
    """``g = (Y - X)(dx^2 + dy^2)``, ``L = diag(X, Y)`` and the explicit companion."""
    X, Y = as_param(X, 0), as_param(Y, 1)
    eps = _check_epsilon(epsilon)
    chart = _default_chart(chart, [[-1, 1], [-1, 1]])
    if chart.dim != 2:
        raise ValueError("the Dini pair lives on a 2-dimensional chart")
    for p in _grid(chart, 17):
        x, y = X(p[0]), Y(p[1])
        if not 0 < x < y:
            raise ValueError(f"0 < X(x) < Y(y) fails at {tuple(p)}: X={x}, Y={y}")
    chart = chart.with_exclusions(
        Exclusion("X", lambda p: X(p[0])), Exclusion("Y-X", lambda p: Y(p[1]) - X(p[0]))
    )

    def g(c):
        f = (Y(c[1]) - X(c[0])) * eps
        return _diag([f, f])

    def gbar(c):
        x, y = X(c[0]), Y(c[1])
        f = (1 / x - 1 / y) * eps
        return _diag([f / x, f / y])

    def L(c):
        return _diag([X(c[0]), Y(c[1])])

    return Pair(
        "dini",
        MetricField(2, g, chart, "g"),
        EndoField(2, L, chart, "L"),
        chart,
        gbar_field=MetricField(2, gbar, chart, "gbar"),
        params={"X": X, "Y": Y, "epsilon": eps},
    )


def levicivita3_pair(X, Y, Z, chart=None, epsilon=1):
    """Three-dimensional diagonal pair with ``L = diag(X, Y, Z)``."""
    X, Y, Z = as_param(X, 0), as_param(Y, 1), as_param(Z, 2)
    eps = _check_epsilon(epsilon)
    chart = _default_chart(chart, [[-1, 1]] * 3)
    if chart.dim != 3:
        raise ValueError("the Levi-Civita pair lives on a 3-dimensional chart")
    for p in _grid(chart, 9):
        x, y, z = X(p[0]), Y(p[1]), Z(p[2])
        if not 0 < x < y < z:
            raise ValueError(f"0 < X < Y < Z fails at {tuple(p)}")
    chart = chart.with_exclusions(
        Exclusion("X", lambda p: X(p[0])),
        Exclusion("Y-X", lambda p: Y(p[1]) - X(p[0])),
        Exclusion("Z-Y", lambda p: Z(p[2]) - Y(p[1])),
    )

    def g(c):
        x, y, z = X(c[0]), Y(c[1]), Z(c[2])
        return _diag([(y - x) * (z - x) * eps, (y - x) * (z - y) * eps, (z - y) * (z - x) * eps])

    def L(c):
        return _diag([X(c[0]), Y(c[1]), Z(c[2])])

    return Pair(
        "levicivita3",
        MetricField(3, g, chart, "g"),
        EndoField(3, L, chart, "L"),
        chart,
        params={"X": X, "Y": Y, "Z": Z, "epsilon": eps},
    )


# Jordan blocks ------------------------------------------------------------


def jordan_metric(a, sigma):
    """Anti-diagonal matrix with last row/column ``a_{n-1}, ..., a_1`` and corner ``sigma``.

    ``a[k]`` holds ``a_k`` for ``k = 1..n-1`` (``a[0]`` unused).  For ``n == 1``
    the single entry is ``a[0]``.
    """
    n = len(a)
    if n == 1:
        return _mat([[a[0]]])
    M = [[0] * n for _ in range(n)]
    for r in range(n - 1):
        M[r][n - 1 - r] = 1
        M[r][n - 1] = a[n - 1 - r]
        M[n - 1][r] = a[n - 1 - r]
    M[n - 1][n - 1] = sigma
    return _mat(M)


def jordan_operator(lam, a):
    """``lam`` on the diagonal, 1 on the superdiagonal, last column ``a_1..a_{n-1}``.

    The last column wins where it meets the superdiagonal.
    """
    n = len(a)
    M = [[0] * n for _ in range(n)]
    for r in range(n):
        M[r][r] = lam
        if r + 1 < n - 1:
            M[r][r + 1] = 1
    for r in range(n - 1):
        M[r][n - 1] = a[r + 1]
    return _mat(M)


def _sigma_paired(a):
    n = len(a)
    s = 0
    for i in range(1, n - 1):
        s = s + a[i] * a[n - i - 1]
    return s


def _sigma_weighted(coords):
    # sum_{i=1}^{n-2} i (n-i+1) x_i x_{n-i-1}, 1-based coordinates
    n = len(coords)
    s = 0
    for i in range(1, n - 1):
        s = s + i * (n - i + 1) * coords[i - 1] * coords[n - i - 2]
    return s


def _jordan_coeffs(xs, dlam, lead):
    """``a_k = k * dlam * x_k`` for ``k <= n-2`` and ``a_{n-1} = lead + (n-1) dlam x_{n-1}``."""
    n = len(xs)
    a = [lead if n == 1 else 0] + [k * dlam * xs[k - 1] for k in range(1, n)]
    if n > 1:
        a[n - 1] = lead + (n - 1) * dlam * xs[n - 2]
    return a


def _jordan_symbolic(n, lam="lambda"):
    a = {}
    for k in range(1, n):
        a[f"a{k}"] = f"{k}*{lam}'*x{k}" if k < n - 1 else f"1 + {k}*{lam}'*x{k}"
    g = [["0"] * n for _ in range(n)]
    L = [["0"] * n for _ in range(n)]
    if n == 1:
        return {"g": [["1"]], "L": [[lam]], "a": {}}
    for r in range(n - 1):
        g[r][n - 1 - r] = "1"
        g[r][n - 1] = g[n - 1][r] = f"a{n - 1 - r}"
    g[n - 1][n - 1] = " + ".join(f"a{i}*a{n - i - 1}" for i in range(1, n - 1)) or "0"
    for r in range(n):
        L[r][r] = lam
        if r + 1 < n - 1:
            L[r][r + 1] = "1"
        if r < n - 1:
            L[r][n - 1] = f"a{r + 1}"
    return {"g": g, "L": L, "a": a}


def real_jordan_pair(n, lam, chart=None, epsilon=1):
    """Compatible pair with ``L`` a single real Jordan block of eigenvalue ``lam(x_n)``.

    ``n == 1`` gives the 1-dimensional block ``g = epsilon dx^2``, ``L = lam(x)``.
    """
    n = int(n)
    if not 1 <= n <= la.MAX_DIM:
        raise ValueError(f"block size {n} outside 1..{la.MAX_DIM}")
    lam = as_param(lam, n - 1)
    if lam.is_complex:
        raise ValueError("a real Jordan block needs a real eigenvalue function")
    eps = _check_epsilon(epsilon)
    dlam = lam.derivative()
    chart = _default_chart(chart, [[-0.5, 0.5]] * n)
    if chart.dim != n:
        raise ValueError(f"chart has dimension {chart.dim}, block needs {n}")
    excl = [Exclusion("lambda", lambda p: lam(p[n - 1]))]
    if n > 1:
        excl.append(
            Exclusion("a_{n-1}", lambda p: 1 + (n - 1) * dlam(p[n - 1]) * p[n - 2])
        )
    chart = chart.with_exclusions(*excl)

    def parts(c):
        return lam(c[n - 1]), _jordan_coeffs(c, dlam(c[n - 1]), 1)

    def g(c):
        _, a = parts(c)
        return jordan_metric(a, _sigma_paired(a)) * eps

    def L(c):
        lv, a = parts(c)
        return jordan_operator(lv, a)

    return Pair(
        "real_jordan",
        MetricField(n, g, chart, "g"),
        EndoField(n, L, chart, "L"),
        chart,
        params={"n": n, "lambda": lam, "epsilon": eps},
    )


def real_jordan_normalized_pair(n, h, chart=None, epsilon=1, sigma="paired"):
    """Jordan block normalized so that the eigenvalue is the coordinate ``x_n``.

    ``sigma`` picks the bottom-right metric entry: ``"paired"`` uses
    ``sum a_i a_{n-i-1}`` with the normalized ``a_i``; ``"weighted"`` uses the
    alternative ``sum i (n-i+1) x_i x_{n-i-1}``, which is not compatible for n >= 3.
    """
    n = int(n)
    if not 2 <= n <= la.MAX_DIM:
        raise ValueError(f"block size {n} outside 2..{la.MAX_DIM}")
    if sigma not in SIGMA_VARIANTS:
        raise ValueError(f"sigma must be one of {SIGMA_VARIANTS}")
    h = as_param(h, n - 1)
    eps = _check_epsilon(epsilon)
    box = [[-0.25, 0.25]] * (n - 1) + [[0.5, 1.5]]
    chart = _default_chart(chart, box)
    if chart.dim != n:
        raise ValueError(f"chart has dimension {chart.dim}, block needs {n}")
    chart = chart.with_exclusions(
        Exclusion("x_n", lambda p: p[n - 1]),
        Exclusion("h+(n-1)x_{n-1}", lambda p: h(p[n - 1]) + (n - 1) * p[n - 2]),
    )

    def coeffs(c):
        return _jordan_coeffs(c, 1, h(c[n - 1]))

    def g(c):
        a = coeffs(c)
        s = _sigma_paired(a) if sigma == "paired" else _sigma_weighted(c)
        return jordan_metric(a, s) * eps

    def L(c):
        return jordan_operator(c[n - 1], coeffs(c))

    return Pair(
        "real_jordan_normalized",
        MetricField(n, g, chart, "g"),
        EndoField(n, L, chart, "L"),
        chart,
        params={"n": n, "h": h, "epsilon": eps, "sigma": sigma},
    )


# complex Jordan blocks ----------------------------------------------------


def realify_operator(M):
    """Entry ``a + ib`` of a complex operator becomes ``[[a, -b], [b, a]]``."""
    n = M.shape[0]
    out = np.empty((2 * n, 2 * n), dtype=object)
    for i in range(n):
        for j in range(n):
            a, b = real(M[i, j]), imag(M[i, j])
            out[2 * i, 2 * j], out[2 * i, 2 * j + 1] = a, -b
            out[2 * i + 1, 2 * j], out[2 * i + 1, 2 * j + 1] = b, a
    return out


def realify_form(M):
    """Entry ``a + ib`` of a complex bilinear form becomes ``[[a, -b], [-b, -a]]``."""
    n = M.shape[0]
    out = np.empty((2 * n, 2 * n), dtype=object)
    for i in range(n):
        for j in range(n):
            a, b = real(M[i, j]), imag(M[i, j])
            out[2 * i, 2 * j], out[2 * i, 2 * j + 1] = a, -b
            out[2 * i + 1, 2 * j], out[2 * i + 1, 2 * j + 1] = -b, -a
    return out


def _zs(c, n):
    return [c[2 * k] + 1j * c[2 * k + 1] for k in range(n)]


def _complex_block(lam_val, a, sigma, n):
    LC = jordan_operator(lam_val, a)
    shift = LC - la.identity(n, LC) * conj(lam_val)
    P = la.identity(n, LC)
    for _ in range(n):
        P = P @ shift
    GC = jordan_metric(a, sigma) @ P * (-1j)
    return GC, LC


def complex_jordan_pair(n, lam, chart=None, epsilon=1):
    """Pair of complex conjugate Jordan blocks with holomorphic eigenvalue ``lam(z_n)``.

    Real dimension ``2n``; the metric is the real part of the complex bilinear
    form ``-i A(a) (L^C - conj(lam))^n``.
    """
    n = int(n)
    if not 1 <= 2 * n <= la.MAX_DIM:
        raise ValueError(f"complex block size {n} gives real dimension above {la.MAX_DIM}")
    lam = as_param(lam, n - 1)
    dlam = lam.derivative()
    eps = _check_epsilon(epsilon)
    chart = _default_chart(chart, [[-0.5, 0.5]] * (2 * n))
    if chart.dim != 2 * n:
        raise ValueError(f"chart has dimension {chart.dim}, block needs {2 * n}")

    def zn(p):
        return complex(p[2 * n - 2], p[2 * n - 1])

    excl = [Exclusion("Im lambda", lambda p: lam(zn(p)).imag)]
    if n > 1:
        excl.append(
            Exclusion(
                "a_{n-1}",
                lambda p: 1 + (n - 1) * dlam(zn(p)) * complex(p[2 * n - 4], p[2 * n - 3]),
            )
        )
    chart = chart.with_exclusions(*excl)

    def blocks(c):
        z = _zs(c, n)
        lv = lam(z[n - 1])
        a = _jordan_coeffs(z, dlam(z[n - 1]), 1)
        return _complex_block(lv, a, _sigma_paired(a), n)

    def g(c):
        return realify_form(blocks(c)[0]) * eps

    def L(c):
        z = _zs(c, n)
        return realify_operator(jordan_operator(lam(z[n - 1]), _jordan_coeffs(z, dlam(z[n - 1]), 1)))

    return Pair(
        "complex_jordan",
        MetricField(2 * n, g, chart, "g"),
        EndoField(2 * n, L, chart, "L"),
        chart,
        params={"n": n, "lambda": lam, "epsilon": eps},
    )


def complex_jordan_normalized_pair(n, h, chart=None, epsilon=1, sigma="paired"):
    """Complex Jordan block normalized so that the eigenvalue is ``z_n``."""
    n = int(n)
    if not 1 <= 2 * n <= la.MAX_DIM:
        raise ValueError(f"complex block size {n} gives real dimension above {la.MAX_DIM}")
    if sigma not in SIGMA_VARIANTS:
        raise ValueError(f"sigma must be one of {SIGMA_VARIANTS}")
    h = as_param(h, n - 1)
    eps = _check_epsilon(epsilon)
    box = [[-0.25, 0.25]] * (2 * n - 2) + [[-0.5, 0.5], [0.5, 1.5]]
    chart = _default_chart(chart, box)
    if chart.dim != 2 * n:
        raise ValueError(f"chart has dimension {chart.dim}, block needs {2 * n}")

    def zn(p):
        return complex(p[2 * n - 2], p[2 * n - 1])

    def lead(p):
        prev = complex(p[2 * n - 4], p[2 * n - 3]) if n > 1 else 0
        return h(zn(p)) + (n - 1) * prev

    chart = chart.with_exclusions(
        Exclusion("Im z_n", lambda p: p[2 * n - 1]), Exclusion("h+(n-1)z_{n-1}", lead)
    )

    def coeffs(z):
        return _jordan_coeffs(z, 1, h(z[n - 1]))

    def g(c):
        z = _zs(c, n)
        a = coeffs(z)
        s = _sigma_paired(a) if sigma == "paired" else _sigma_weighted(z)
        return realify_form(_complex_block(z[n - 1], a, s, n)[0]) * eps

    def L(c):
        z = _zs(c, n)
        return realify_operator(jordan_operator(z[n - 1], coeffs(z)))

    return Pair(
        "complex_jordan_normalized",
        MetricField(2 * n, g, chart, "g"),
        EndoField(2 * n, L, chart, "L"),
        chart,
        params={"n": n, "h": h, "epsilon": eps, "sigma": sigma},
    )


def affine_complex3_pair(alpha, beta, lam, chart=None, epsilon=1):
    """3-dimensional pair: a real eigenvalue ``lam(x_1)`` glued to the constant
    complex eigenvalue ``alpha + i beta``.
    """
    alpha, beta = float(alpha), float(beta)
    if beta == 0:
        raise ValueError("beta must be nonzero")
    lam = as_param(lam, 0)
    eps = _check_epsilon(epsilon)
    chart = _default_chart(chart, [[-1, 1]] * 3)
    if chart.dim != 3:
        raise ValueError("affine_complex3 lives on a 3-dimensional chart")
    chart = chart.with_exclusions(
        Exclusion("det g", lambda p: -((lam(p[0]) - alpha) ** 2 + beta**2) ** 2)
    )

    def g(c):
        lv = lam(c[0])
        d = alpha - lv
        return _mat([[(lv - alpha) ** 2 + beta**2, 0, 0], [0, -beta, d], [0, d, beta]]) * eps

    def L(c):
        return _mat([[lam(c[0]), 0, 0], [0, alpha, beta], [0, -beta, alpha]])

    return Pair(
        "affine_complex3",
        MetricField(3, g, chart, "g"),
        EndoField(3, L, chart, "L"),
        chart,
        params={"alpha": alpha, "beta": beta, "lambda": lam, "epsilon": eps},
    )


# the non-example ----------------------------------------------------------


def aminova_pair(omega=None, chart=None):
    """The two 4x4 metrics that were claimed, wrongly, to be geodesically equivalent.

    ``L`` is the projective tensor of the pair, so the compatibility check
    measures how far they are from equivalence.
    """
    omega = as_param(omega if omega is not None else [0.0], 3)
    chart = _default_chart(chart, [[0, 2], [0, 2], [0, 2], [1, 2]])
    if chart.dim != 4:
        raise ValueError("the Aminova pair lives on a 4-dimensional chart")
    lo, hi = chart.box[3]
    if lo <= 0 <= hi:
        raise ValueError("the chart must not touch x4 = 0")
    # det g = (3 x3 + 3 omega)^2
    chart = chart.with_exclusions(Exclusion("3x3+3omega", lambda p: 3 * p[2] + 3 * omega(p[3])))

    def g(c):
        x1, x2, x3, x4 = c
        w = omega(x4)
        e = 3 * x3 + 3 * w
        return _mat([[0, 0, 0, e], [0, 0, 1, 2 * x2], [0, 1, 0, x1], [e, 2 * x2, x1, 4 * x1 * x2]])

    def gbar(c):
        x1, x2, x3, x4 = c
        w = omega(x4)
        e = 3 * x3 + 3 * w
        b14 = e / x4**5
        b23 = 2 / x4**5
        b24 = (-e + 2 * x2 * x4) / x4**6
        b33 = -1 / x4**6
        b34 = (e - 2 * x2 * x4 + x1 * x4**2) / x4**7
        b44 = (-e + 2 * x2 * x4) * (2 * x1 * x4**2 + e - 2 * x2 * x4) / x4**8
        return _mat(
            [[0, 0, 0, b14], [0, 0, b23, b24], [0, b23, b33, b34], [b14, b24, b34, b44]]
        )

    gf = MetricField(4, g, chart, "g")
    gb = MetricField(4, gbar, chart, "gbar")
    return Pair(
        "aminova",
        gf,
        projective_L_field(gf, gb),
        chart,
        gbar_field=gb,
        params={"omega": omega},
    )


def symbolic_summary(pair):
    """Text templates of the matrices for the Jordan kinds, else ``None``."""
    if pair.kind in ("real_jordan", "real_jordan_normalized"):
        lam = "lambda" if pair.kind == "real_jordan" else "x_n"
        return _jordan_symbolic(pair.params["n"], lam)
    return None
