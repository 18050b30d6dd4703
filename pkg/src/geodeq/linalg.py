"""Small dense matrix algebra over real, complex and jet scalars.

Everything here works on matrices of size at most :data:`MAX_DIM`.  Adjugates
and characteristic polynomials come from the Faddeev-LeVerrier recursion, which
only divides by integers and therefore stays polynomial in the entries (so it
differentiates cleanly through :class:`~geodeq.jets.Jet` entries and is exact
on integer input).
"""

from dataclasses import dataclass
from math import factorial
import numbers

import numpy as np

from .jets import Jet, has_jets, split_matrix, from_parts, values_of

MAX_DIM = 8

_EPS = np.finfo(float).eps


class RootFindingError(ArithmeticError):
    pass


class SpectrumError(ValueError):
    """Spectrum is unsuitable for the requested operation."""


def as_matrix(A):
    """Coerce ``A`` to a square ndarray: float/complex, or object for jets and ints."""
    if isinstance(A, np.ndarray) and A.dtype == object:
        M = A
    else:
        M = np.asarray(A)
        if M.dtype == object:
            pass
        elif np.issubdtype(M.dtype, np.integer):
            M = np.array([[int(x) for x in row] for row in M], dtype=object)
        elif np.issubdtype(M.dtype, np.bool_):
            M = M.astype(float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not 1 <= M.shape[0] <= MAX_DIM:
        raise ValueError(f"matrix dimension {M.shape[0]} outside 1..{MAX_DIM}")
    return M


def identity(n, like):
    if like.dtype == object:
        I = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                I[i, j] = 1 if i == j else 0
        return I
    return np.eye(n, dtype=like.dtype)


def _exact_div(x, k):
    if isinstance(x, numbers.Integral):
        q, r = divmod(x, k)
        if r == 0:
            return q
        return x / k
    return x / k


def _faddeev(A):
    """Return (coefficients ascending, M_n) of the Faddeev-LeVerrier recursion."""
    A = as_matrix(A)
    n = A.shape[0]
    I = identity(n, A)
    coeffs = [None] * (n + 1)
    coeffs[n] = 1
    M = I * 0
    for k in range(1, n + 1):
        M = A @ M + I * coeffs[n - k + 1]
        coeffs[n - k] = _exact_div(-np.trace(A @ M), k)
    return coeffs, M


def char_poly(A):
    """Monic characteristic polynomial ``det(t I - A)`` as a :class:`Poly`."""
    coeffs, _ = _faddeev(A)
    return Poly(coeffs)


def adjugate(A):
    """``co(A)^T``, so that ``A @ adjugate(A) == det(A) * I``; fine for singular A."""
    coeffs, M = _faddeev(A)
    n = len(coeffs) - 1
    return M if n % 2 == 1 else -M


def det(A):
    coeffs, _ = _faddeev(A)
    n = len(coeffs) - 1
    return coeffs[0] if n % 2 == 0 else -coeffs[0]


def inv(A):
    """Inverse through the adjugate; keeps jet entries differentiable."""
    coeffs, M = _faddeev(A)
    n = len(coeffs) - 1
    d = coeffs[0] if n % 2 == 0 else -coeffs[0]
    adj = M if n % 2 == 1 else -M
    if (d.value if isinstance(d, Jet) else d) == 0:
        raise np.linalg.LinAlgError("singular matrix")
    return adj * (1 / d) if isinstance(d, Jet) else adj / d


def symmetrize(A):
    return (A + A.T) * 0.5


class Poly:
    """Univariate polynomial, coefficients in ascending order."""

    def __init__(self, coeffs):
        coeffs = list(coeffs)
        if not coeffs:
            coeffs = [0]
        self.coeffs = tuple(coeffs)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __repr__(self):
        return f"Poly({list(self.coeffs)!r})"

    def __call__(self, x):
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + c
        return acc

    def at_matrix(self, A):
        """Horner evaluation ``p(A)``."""
        A = as_matrix(A)
        I = identity(A.shape[0], A)
        P = I * self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            P = P @ A + I * c
        return P

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly([c * other for c in self.coeffs])
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return Poly(out)

    __rmul__ = __mul__

    def __add__(self, other):
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] = out[i] + c
        return Poly(out)

    def derivative(self):
        return Poly([k * c for k, c in enumerate(self.coeffs)][1:] or [0])

    @classmethod
    def from_roots(cls, roots):
        p = cls([1])
        for r in roots:
            p = p * cls([-r, 1])
        return p

    def values(self):
        """Coefficient values with any jet gradients dropped."""
        return np.array([c.value if isinstance(c, Jet) else c for c in self.coeffs])


def companion(p):
    """Companion matrix of a monic polynomial; ``char_poly(companion(p)) == p``."""
    c = np.asarray(p.coeffs if isinstance(p, Poly) else p)
    c = c / c[-1]
    n = len(c) - 1
    C = np.zeros((n, n), dtype=c.dtype)
    C[1:, :-1] = np.eye(n - 1)
    C[:, -1] = -c[:-1]
    return C


# roots ------------------------------------------------------------------


def poly_roots(p, tol=1e-12, maxiter=200):
    """All complex roots of ``p`` with multiplicity (Aberth-Ehrlich iteration).

    For real coefficients the result is projected onto a conjugate-symmetric
    set: roots are matched into conjugate pairs and imaginary parts below
    ``tol * (1 + |z|)`` are set to zero.  Raises :class:`RootFindingError` when
    the backward error after ``maxiter`` sweeps exceeds ``tol``.
    """
    c = np.asarray(p.values() if isinstance(p, Poly) else p)
    real_input = not np.iscomplexobj(c) or not np.any(np.imag(c))
    c = c.astype(complex)
    if len(c) < 2 or c[-1] == 0:
        raise ValueError("need degree >= 1 with a nonzero leading coefficient")
    c = c / c[-1]
    n = len(c) - 1
    if n == 1:
        return np.array([-c[0] if not real_input else complex(-c[0].real, 0.0)])

    center = -c[n - 1] / n
    shifted = _taylor_shift(c, center)
    bound = max(abs(shifted[k]) ** (1.0 / (n - k)) for k in range(n))
    if bound == 0.0:
        z = np.full(n, center)
        return _conjugate_project(z, tol) if real_input else z

    dc = np.arange(1, n + 1) * c[1:]
    abscoef = np.abs(c)
    angles = 2 * np.pi * np.arange(n) / n + 0.4
    z = center + bound * np.exp(1j * angles)
    done = np.zeros(n, dtype=bool)
    for _ in range(maxiter):
        for k in range(n):
            if done[k]:
                continue
            pz = np.polyval(c[::-1], z[k])
            scale = np.polyval(abscoef[::-1], abs(z[k]))
            if abs(pz) <= 8 * _EPS * scale:
                done[k] = True
                continue
            ratio = pz / np.polyval(dc[::-1], z[k])
            diff = z[k] - np.delete(z, k)
            if np.any(diff == 0):
                z[k] += bound * 1e-8 * (1 + 1j)
                continue
            w = ratio / (1 - ratio * np.sum(1.0 / diff))
            z[k] -= w
            if abs(w) <= 4 * _EPS * abs(z[k]):
                done[k] = True
        if done.all():
            break

    # exact root at 0 of a polynomial with zero constant term gives 0/0
    resid = np.abs(np.polyval(c[::-1], z)) / np.maximum(np.polyval(abscoef[::-1], np.abs(z)), 1e-300)
    if np.any(resid > max(tol, 64 * _EPS)):
        raise RootFindingError(
            f"Aberth iteration did not converge (backward error {resid.max():.3e})"
        )
    return _conjugate_project(z, tol) if real_input else np.sort_complex(z)


def _taylor_shift(c, s):
    """Coefficients of p(x + s) given ascending coefficients of p."""
    c = np.array(c, dtype=complex)
    n = len(c) - 1
    for i in range(n):
        for k in range(n - 1, i - 1, -1):
            c[k] += s * c[k + 1]
    return c


def _conjugate_project(z, tol):
    remaining = sorted((complex(x) for x in z), key=lambda x: -x.imag)
    out = []
    while remaining:
        x = remaining.pop(0)
        if abs(x.imag) <= tol * (1 + abs(x)) or x.imag < 0:
            out.append(complex(x.real, 0.0))
            continue
        j = min(range(len(remaining)), key=lambda j: abs(remaining[j] - x.conjugate()),
                default=None)
        if j is None or remaining[j].imag >= 0:
            out.append(complex(x.real, 0.0))
            continue
        m = 0.5 * (x + remaining.pop(j).conjugate())
        out.extend([m, m.conjugate()])
    return np.sort_complex(np.array(out))


# clustering --------------------------------------------------------------


@dataclass(frozen=True)
class Cluster:
    """A group of numerically coincident eigenvalues.

    For ``kind == "conjugate-pair"`` the value lies in the upper half-plane and
    ``multiplicity`` counts one member of the pair.
    """

    value: complex
    multiplicity: int
    kind: str

    @property
    def nodes(self):
        if self.kind == "conjugate-pair":
            return [(self.value, self.multiplicity), (self.value.conjugate(), self.multiplicity)]
        return [(self.value, self.multiplicity)]

    @property
    def dim(self):
        return self.multiplicity * (2 if self.kind == "conjugate-pair" else 1)

    def poly(self):
        """Real factor of the characteristic polynomial belonging to this cluster."""
        if self.kind == "conjugate-pair":
            base = Poly([abs(self.value) ** 2, -2 * self.value.real, 1.0])
        else:
            base = Poly([-self.value.real, 1.0])
        p = Poly([1.0])
        for _ in range(self.multiplicity):
            p = p * base
        return p


def merge_radius(k, tol):
    """Relative radius within which ``k`` computed roots count as one eigenvalue.

    A ``k``-fold root perturbed at the level of rounding splits by roughly
    ``eps**(1/k)``; the radius never drops below ``tol``.
    """
    if k <= 1:
        return 0.0
    return max(tol, (100 * _EPS) ** (1.0 / k))


def _agglomerate(z, tol):
    # largest groups first: the pieces of a k-fold root are spread by eps**(1/k),
    # so growing a group pairwise would stall at the 2-fold radius
    rest = [complex(x) for x in z]
    groups = []
    while rest:
        best = None
        for k in range(len(rest), 1, -1):
            for s in rest:
                near = sorted(rest, key=lambda x: abs(x - s))[:k]
                c = np.mean(near)
                spread = max(abs(x - c) for x in near)
                ratio = spread / (merge_radius(k, tol) * (1 + abs(c)))
                if ratio <= 1 and (best is None or ratio < best[0]):
                    best = (ratio, near)
            if best is not None:
                break
        if best is None:
            groups.extend([x] for x in rest)
            break
        groups.append(best[1])
        for x in best[1]:
            rest.remove(x)
    return groups


def _polish_center(c, k, poly):
    # a k-fold root of p is a simple root of p^(k-1)
    q = poly
    for _ in range(k - 1):
        q = q.derivative()
    dq = q.derivative()
    for _ in range(8):
        den = dq(c)
        if den == 0:
            break
        step = q(c) / den
        c = c - step
        if abs(step) <= 4 * _EPS * (1 + abs(c)):
            break
    return complex(c)


def spectral_cluster(roots, tol=1e-7, conjugate_pairs=True, poly=None):
    """Group roots into clusters of (numerically) equal eigenvalues.

    With ``conjugate_pairs`` the roots are assumed to come from a real
    polynomial: clusters off the real axis are reported once, in the upper
    half-plane, as ``"conjugate-pair"``.  Multiplicities sum to the degree.
    Passing the polynomial itself refines the centre of every multiple cluster.
    """
    groups = _agglomerate(np.asarray(roots, dtype=complex), tol)
    if poly is not None:
        poly = Poly(complex(c) for c in np.asarray(poly.values() if isinstance(poly, Poly) else poly))
    out = []
    for grp in groups:
        c = complex(np.mean(grp))
        k = len(grp)
        if poly is not None and k > 1:
            polished = _polish_center(c, k, poly)
            if abs(polished - c) <= merge_radius(k, tol) * (1 + abs(c)):
                c = polished
        if not conjugate_pairs:
            out.append(Cluster(c, k, "complex" if c.imag else "real"))
            continue
        snap = max(tol, merge_radius(2 * k, tol)) * (1 + abs(c))
        if abs(c.imag) <= snap:
            out.append(Cluster(complex(c.real, 0.0), k, "real"))
        elif c.imag > 0:
            out.append(Cluster(c, k, "conjugate-pair"))
    if conjugate_pairs:
        total = sum(cl.dim for cl in out)
        if total != len(roots):
            raise SpectrumError(
                "roots are not conjugate-symmetric at the clustering tolerance"
            )
    out.sort(key=lambda cl: (cl.value.real, cl.value.imag))
    return out


def clusters_of(A, tol=1e-7):
    """Eigenvalue clusters of a (real or complex) numeric matrix."""
    A = np.asarray(A)
    p = char_poly(A)
    return spectral_cluster(poly_roots(p), tol, conjugate_pairs=not np.iscomplexobj(A), poly=p)


def cluster_gap(clusters):
    """Smallest relative distance between distinct eigenvalues (incl. conjugates)."""
    pts = [z for cl in clusters for z, _ in cl.nodes]
    best = np.inf
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            best = min(best, abs(pts[i] - pts[j]) / (1 + max(abs(pts[i]), abs(pts[j]))))
    return best


# matrix functions --------------------------------------------------------


def _newton_hermite(nodes, derivs):
    """Newton coefficients of the Hermite interpolant.

    ``nodes`` is a list of ``(value, multiplicity)``; ``derivs[i]`` holds the
    target value and derivatives at node ``i``.
    """
    zs, ids = [], []
    for i, (z, m) in enumerate(nodes):
        zs.extend([z] * m)
        ids.extend([i] * m)
    N = len(zs)
    level = [complex(derivs[ids[i]][0]) for i in range(N)]
    coeffs = [level[0]]
    for k in range(1, N):
        nxt = []
        for i in range(N - k):
            if ids[i] == ids[i + k]:
                nxt.append(complex(derivs[ids[i]][k]) / factorial(k))
            else:
                nxt.append((level[i + 1] - level[i]) / (zs[i + k] - zs[i]))
        level = nxt
        coeffs.append(level[0])
    return zs, coeffs


def _eval_newton(zs, coeffs, A):
    n = A.shape[0]
    I = np.eye(n, dtype=complex)
    A = A.astype(complex)
    P = coeffs[-1] * I
    for k in range(len(coeffs) - 2, -1, -1):
        P = P @ (A - zs[k] * I) + coeffs[k] * I
    return P


def _targets(values, nodes, tol, order=None):
    """Target derivative lists for every node; ``order`` overrides multiplicities."""
    out = []
    for (z, m) in nodes:
        need = m if order is None else order(m)
        if callable(values):
            t = list(values(z, need))
        else:
            keys = [k for k in values if abs(complex(k) - z) <= tol * (1 + abs(z))]
            if not keys:
                raise KeyError(f"no target given for eigenvalue {z}")
            distinct = {tuple(np.atleast_1d(values[k])) for k in keys}
            if len(distinct) > 1:
                raise SpectrumError(f"conflicting targets near eigenvalue {z}")
            t = list(np.atleast_1d(values[keys[0]]))
        if len(t) < need:
            raise ValueError(
                f"eigenvalue {z} has multiplicity {m}; need {need} derivative targets"
            )
        out.append(t[:need])
    return out


def _finish(P, real_input, tol, what="matrix function"):
    if not real_input:
        return P
    scale = 1 + np.abs(P).max()
    if np.abs(P.imag).max() > max(tol, 1e-9) * scale:
        raise SpectrumError(f"{what} is not real: targets break conjugate symmetry")
    return P.real.copy()


def matrix_function(A, values, tol=1e-7, clusters=None):
    """``f(A)`` through Hermite interpolation on the spectrum of ``A``.

    ``values`` is either a callable ``f(z, m)`` returning ``[f(z), f'(z), ...,
    f^(m-1)(z)]`` or a mapping from eigenvalue to that list.  For real ``A`` the
    targets must respect ``f(conj z) == conj f(z)`` and the result is real.

    If ``A`` has jet entries the result carries jets too: each directional
    derivative is the Frechet derivative ``Df(A)[dA]`` obtained from the
    block matrix ``[[A, dA], [0, A]]``, which requires a callable ``values``.
    """
    A = as_matrix(A)
    jets = has_jets(A)
    if jets:
        d = next(x for x in A.flat if isinstance(x, Jet)).n
        Av, dA = split_matrix(A, d)
    else:
        Av = A.astype(complex) if np.iscomplexobj(A) else A.astype(float)
    real_input = not np.iscomplexobj(Av)
    if clusters is None:
        clusters = clusters_of(Av, tol)
    nodes = [nd for cl in clusters for nd in cl.nodes]
    zs, coeffs = _newton_hermite(nodes, _targets(values, nodes, tol))
    F = _finish(_eval_newton(zs, coeffs, Av), real_input, tol)
    if not jets:
        return F
    if not callable(values):
        raise TypeError("differentiating a matrix function needs a callable target")
    n = Av.shape[0]
    nodes2 = [(z, 2 * m) for z, m in nodes]
    zs2, coeffs2 = _newton_hermite(nodes2, _targets(values, nodes2, tol))
    grads = np.zeros((n, n, d), dtype=F.dtype)
    B = np.zeros((2 * n, 2 * n), dtype=Av.dtype if not real_input else float)
    B[:n, :n] = Av
    B[n:, n:] = Av
    for k in range(d):
        B[:n, n:] = dA[:, :, k]
        Pk = _eval_newton(zs2, coeffs2, B)[:n, n:]
        grads[:, :, k] = _finish(Pk, real_input, tol, "matrix function derivative")
    return from_parts(F, grads)


def _sign_of_imag(z, m):
    return [1j if z.imag > 0 else -1j] + [0.0] * (m - 1)


def complex_structure_J(A, tol=1e-7):
    """Canonical complex structure of an operator without real eigenvalues.

    ``J = f(A)`` with ``f = +i`` on the upper half-plane and ``-i`` on the lower
    one, so ``J @ J == -I`` and ``J`` commutes with ``A``.
    """
    A = as_matrix(A)
    Av = values_of(A)
    if np.iscomplexobj(Av) and np.any(np.imag(Av)):
        raise ValueError("complex_structure_J expects a real operator")
    Av = np.real(Av).astype(float)
    if Av.shape[0] % 2:
        raise SpectrumError("an operator without real eigenvalues has even dimension")
    clusters = clusters_of(Av, tol)
    for cl in clusters:
        if cl.kind == "real" or abs(cl.value.imag) <= tol * (1 + abs(cl.value)):
            raise SpectrumError(
                f"eigenvalue {cl.value:.6g} is too close to the real axis for J"
            )
    return matrix_function(A, _sign_of_imag, tol, clusters=clusters)


def spectral_projector(A, cluster, tol=1e-7, clusters=None):
    """Projector onto the generalized eigenspace of ``cluster`` along the others."""
    A = np.asarray(A)
    if clusters is None:
        clusters = clusters_of(A, tol)
    own = {z for z, _ in cluster.nodes}

    def indicator(z, m):
        hit = any(abs(z - w) <= 1e-12 * (1 + abs(w)) for w in own)
        return [1.0 if hit else 0.0] + [0.0] * (m - 1)

    return matrix_function(A, indicator, tol, clusters=clusters)
