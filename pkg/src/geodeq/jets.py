"""First-order forward-mode jets.

A :class:`Jet` carries a scalar value together with its gradient with respect
to the coordinates of a chart.  Every field in the package is evaluated on jets
so that first partial derivatives of metric and endomorphism components are
exact up to rounding.
"""

import numbers

import numpy as np


class Jet:
    """Scalar value plus gradient over ``n`` chart coordinates.

    Values may be real or complex.  Mixing jets with gradients of different
    length raises ``ValueError`` instead of broadcasting.
    """

    __slots__ = ("value", "grad")
    # make numpy scalars defer to the reflected operators below
    __array_ufunc__ = None

    def __init__(self, value, grad):
        self.value = value
        self.grad = np.asarray(grad)

    @property
    def n(self):
        return self.grad.shape[0]

    def __repr__(self):
        return f"Jet({self.value!r}, {self.grad!r})"

    def _boxed(self):
        b = np.empty((), dtype=object)
        b[()] = self
        return b

    def _check(self, other):
        if self.grad.shape != other.grad.shape:
            raise ValueError(
                f"jets over different charts: {self.grad.shape} vs {other.grad.shape}"
            )

    # arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, np.ndarray):
            return self._boxed() + other
        if isinstance(other, Jet):
            self._check(other)
            return Jet(self.value + other.value, self.grad + other.grad)
        if isinstance(other, numbers.Number):
            return Jet(self.value + other, self.grad)
        return NotImplemented

    def __radd__(self, other):
        if isinstance(other, np.ndarray):
            return other + self._boxed()
        return self.__add__(other)

    def __sub__(self, other):
        if isinstance(other, np.ndarray):
            return self._boxed() - other
        if isinstance(other, Jet):
            self._check(other)
            return Jet(self.value - other.value, self.grad - other.grad)
        if isinstance(other, numbers.Number):
            return Jet(self.value - other, self.grad)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, np.ndarray):
            return other - self._boxed()
        if isinstance(other, numbers.Number):
            return Jet(other - self.value, -self.grad)
        return NotImplemented

    def __neg__(self):
        return Jet(-self.value, -self.grad)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, np.ndarray):
            return self._boxed() * other
        if isinstance(other, Jet):
            self._check(other)
            return Jet(
                self.value * other.value,
                self.value * other.grad + other.value * self.grad,
            )
        if isinstance(other, numbers.Number):
            return Jet(self.value * other, self.grad * other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, np.ndarray):
            return other * self._boxed()
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, np.ndarray):
            return self._boxed() / other
        if isinstance(other, Jet):
            self._check(other)
            if other.value == 0:
                raise ZeroDivisionError("jet division by a zero value")
            q = self.value / other.value
            return Jet(q, (self.grad - q * other.grad) / other.value)
        if isinstance(other, numbers.Number):
            if other == 0:
                raise ZeroDivisionError("jet division by zero")
            return Jet(self.value / other, self.grad / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, np.ndarray):
            return other / self._boxed()
        if isinstance(other, numbers.Number):
            if self.value == 0:
                raise ZeroDivisionError("jet division by a zero value")
            q = other / self.value
            return Jet(q, -q * self.grad / self.value)
        return NotImplemented

    def __pow__(self, k):
        if isinstance(k, numbers.Integral):
            if k == 0:
                return Jet(self.value**0, np.zeros_like(self.grad))
            if k < 0:
                return 1 / self ** (-k)
            return Jet(self.value**k, k * self.value ** (k - 1) * self.grad)
        if isinstance(k, numbers.Real):
            if not self.value > 0:
                raise ValueError("real power of a jet needs a positive value")
            v = self.value**k
            return Jet(v, k * v / self.value * self.grad)
        return NotImplemented

    def __abs__(self):
        if isinstance(self.value, complex) or np.iscomplexobj(self.value):
            raise TypeError("abs() of a complex jet is not differentiable")
        if self.value == 0:
            raise ValueError("abs() is not differentiable at zero")
        return self if self.value > 0 else -self

    # complex parts ------------------------------------------------------

    @property
    def real(self):
        return Jet(np.real(self.value), np.real(self.grad))

    @property
    def imag(self):
        return Jet(np.imag(self.value), np.imag(self.grad))

    def conjugate(self):
        # coordinates are real, so d(conj f) = conj(df)
        return Jet(np.conj(self.value), np.conj(self.grad))


def seed(point, axis):
    """Coordinate function ``x[axis]`` as a jet at ``point``."""
    point = np.asarray(point, dtype=float)
    n = point.shape[0]
    if not 0 <= axis < n:
        raise IndexError(f"axis {axis} out of range for a {n}-dimensional chart")
    grad = np.zeros(n)
    grad[axis] = 1.0
    return Jet(float(point[axis]), grad)


def seed_all(point):
    """All coordinate functions at ``point``."""
    return [seed(point, k) for k in range(len(point))]


def value(x):
    return x.value if isinstance(x, Jet) else x


def gradient(x, n):
    if isinstance(x, Jet):
        if x.n != n:
            raise ValueError(f"expected a gradient of length {n}, got {x.n}")
        return x.grad
    return np.zeros(n)


def conj(x):
    if isinstance(x, Jet):
        return x.conjugate()
    return np.conj(x)


def real(x):
    return x.real if isinstance(x, Jet) else np.real(x)


def imag(x):
    return x.imag if isinstance(x, Jet) else np.imag(x)


def split_matrix(M, n):
    """Split a matrix of jets into values ``(r, c)`` and gradients ``(r, c, n)``."""
    M = np.asarray(M, dtype=object) if not isinstance(M, np.ndarray) else M
    if M.dtype != object:
        return M.copy(), np.zeros(M.shape + (n,), dtype=M.dtype)
    vals = np.array([[value(x) for x in row] for row in M])
    grads = np.array([[gradient(x, n) for x in row] for row in M])
    if np.iscomplexobj(vals) or np.iscomplexobj(grads):
        vals = vals.astype(complex)
        grads = grads.astype(complex)
    else:
        vals = vals.astype(float)
        grads = grads.astype(float)
    return vals, grads


def values_of(M):
    """Entry values of a matrix that may hold jets."""
    M = np.asarray(M, dtype=object) if not isinstance(M, np.ndarray) else M
    if M.dtype != object:
        return M.copy()
    vals = np.array([[value(x) for x in row] for row in M])
    return vals.astype(complex) if np.iscomplexobj(vals) else vals.astype(float)


def has_jets(M):
    M = np.asarray(M, dtype=object) if not isinstance(M, np.ndarray) else M
    return M.dtype == object and any(isinstance(x, Jet) for x in M.flat)


def from_parts(values, grads):
    """Inverse of :func:`split_matrix`."""
    values = np.asarray(values)
    grads = np.asarray(grads)
    out = np.empty(values.shape, dtype=object)
    for idx in np.ndindex(values.shape):
        v = values[idx]
        out[idx] = Jet(v.item() if hasattr(v, "item") else v, grads[idx].copy())
    return out
