"""Geodesic integration with an embedded Runge-Kutta 5(4) pair.

The state is ``(x, v)`` and the right-hand side is ``(v, -Gamma(v, v))``.  Step
size control is a PI controller on the mixed absolute/relative error norm;
dense output uses cubic Hermite interpolation on accepted steps.
"""

from dataclasses import dataclass

import numpy as np


class IntegrationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    point: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray


class Trajectory:
    """Accepted samples of an integrated geodesic.

    ``exited`` is set when integration stopped because the curve left the
    admissible part of the chart; the samples up to that point are kept.
    """

    def __init__(self, samples, exited=False, message=""):
        self.samples = list(samples)
        self.exited = exited
        self.message = message

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    @property
    def times(self):
        return np.array([s.t for s in self.samples])

    def at(self, times, g=None):
        """Cubic Hermite dense output at the given times (within the covered span).

        With the metric ``g`` the acceleration is recomputed from the geodesic
        equation at each interpolated state; otherwise it is interpolated
        linearly.
        """
        ts = self.times
        order = np.argsort(ts)
        ts = ts[order]
        smp = [self.samples[i] for i in order]
        out = []
        for t in np.atleast_1d(times):
            if t < ts[0] - 1e-12 or t > ts[-1] + 1e-12:
                raise ValueError(f"time {t} outside the integrated span [{ts[0]}, {ts[-1]}]")
            k = int(np.clip(np.searchsorted(ts, t) - 1, 0, len(ts) - 2))
            a, b = smp[k], smp[k + 1]
            h = b.t - a.t
            s = (t - a.t) / h
            h00 = 2 * s**3 - 3 * s**2 + 1
            h10 = s**3 - 2 * s**2 + s
            h01 = -2 * s**3 + 3 * s**2
            h11 = s**3 - s**2
            x = h00 * a.point + h10 * h * a.velocity + h01 * b.point + h11 * h * b.velocity
            d00 = (6 * s**2 - 6 * s) / h
            d10 = 3 * s**2 - 4 * s + 1
            d01 = (-6 * s**2 + 6 * s) / h
            d11 = 3 * s**2 - 2 * s
            v = d00 * a.point + d10 * a.velocity + d01 * b.point + d11 * b.velocity
            if g is not None:
                acc = geodesic_acceleration(g, x, v)
            else:
                acc = (1 - s) * a.acceleration + s * b.acceleration
            out.append(TrajectorySample(float(t), x, v, acc))
        return out


# Dormand-Prince 5(4) tableau
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def christoffel_from_parts(G, dG):
    """``Gamma[k, i, j]`` from metric values ``G`` and gradients ``dG[i, j, k] = d_k g_ij``."""
    ginv = np.linalg.inv(G)
    T = dG.transpose(0, 2, 1) + dG - dG.transpose(2, 0, 1)
    # T[m, i, j] = d_i g_mj + d_j g_mi - d_m g_ij
    return 0.5 * np.einsum("km,mij->kij", ginv, T)


def geodesic_acceleration(g, x, v):
    G, dG = g.parts(x)
    Gam = christoffel_from_parts(np.real(G), np.real(dG))
    return -np.einsum("kij,i,j->k", Gam, v, v)


def integrate_geodesic(g, p0, v0, T, tol=1e-10, h0=None, max_steps=100000):
    """Integrate the geodesic of ``g`` through ``p0`` with velocity ``v0`` for time ``T``.

    Returns a :class:`Trajectory`.  ``T`` may be negative.  Integration stops
    early (``exited=True``) when the curve leaves the chart or hits an
    exclusion; :class:`IntegrationError` is raised when the step size
    underflows.
    """
    p0 = np.asarray(p0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    n = p0.shape[0]
    if v0.shape != (n,):
        raise ValueError("point and velocity dimensions differ")
    chart = g.chart
    if chart is not None:
        chart.check(p0)

    def rhs(y):
        x, v = y[:n], y[n:]
        return np.concatenate([v, geodesic_acceleration(g, x, v)])

    direction = 1.0 if T >= 0 else -1.0
    span = abs(float(T))
    y = np.concatenate([p0, v0])
    f = rhs(y)
    samples = [TrajectorySample(0.0, p0.copy(), v0.copy(), f[n:].copy())]
    if span == 0:
        return Trajectory(samples)

    def err_norm(err, y_old, y_new):
        sc = tol + tol * np.maximum(np.abs(y_old), np.abs(y_new))
        return float(np.sqrt(np.mean((err / sc) ** 2)))

    if h0 is None:
        d0 = np.linalg.norm(y) / np.sqrt(y.size)
        d1 = np.linalg.norm(f) / np.sqrt(y.size)
        h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-3
        h = min(h, span, tol ** 0.2)
    else:
        h = min(abs(h0), span)
    t = 0.0
    prev_err = 1.0
    steps = 0
    while t < span:
        if steps >= max_steps:
            raise IntegrationError(f"exceeded {max_steps} steps")
        steps += 1
        h = min(h, span - t)
        if h <= 1e-14 * max(1.0, span):
            raise IntegrationError(f"step size underflow at t = {direction * t:.6g}")
        hs = direction * h
        K = [f]
        try:
            for s in range(1, 7):
                ys = y + hs * sum(a * k for a, k in zip(_A[s], K))
                if chart is not None and not chart.contains(ys[:n]):
                    raise _LeftChart
                K.append(rhs(ys))
        except (_LeftChart, np.linalg.LinAlgError, ZeroDivisionError):
            h *= 0.25
            if h <= 1e-9 * max(1.0, span):
                return Trajectory(samples, True, f"left the chart near t = {direction * t:.6g}")
            continue
        y_new = y + hs * sum(b * k for b, k in zip(_B5, K))
        err = err_norm(hs * sum(e * k for e, k in zip(_E, K)), y, y_new)
        if err <= 1.0:
            t += h
            y = y_new
            f = K[6]
            samples.append(TrajectorySample(direction * t, y[:n].copy(), y[n:].copy(), f[n:].copy()))
            # PI controller (Gustafsson)
            fac = 0.9 * max(err, 1e-10) ** (-0.7 / 5) * prev_err ** (0.4 / 5)
            h *= min(5.0, max(0.2, fac))
            prev_err = max(err, 1e-4)
        else:
            h *= max(0.1, 0.9 * err ** (-1 / 5))
    return Trajectory(samples)


class _LeftChart(Exception):
    pass
