"""Residual checks for compatible pairs and trajectory-based verification.

Pointwise checks take fields and a chart point and return numbers or arrays.
Index conventions for rank-3 outputs:

* ``christoffel(...)[k, i, j]`` is the symbol with upper index ``k``;
* ``nabla_L(...)[k, i, j]`` is the derivative along ``k`` of ``L^i_j``;
* ``nijenhuis(...)[k, i, j]`` is ``N^k_{ij}``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
import os

import numpy as np

from . import linalg as la
from .fields import Chart, EndoField, MetricField, companion_metric, projective_L_field
from .geodesics import (
    IntegrationError,
    Trajectory,
    TrajectorySample,
    christoffel_from_parts,
    integrate_geodesic,
)

__all__ = [
    "christoffel",
    "compatibility_residual",
    "selfadjoint_residual",
    "nabla_L",
    "nijenhuis",
    "integrate_geodesic",
    "integral_It",
    "integral_drift",
    "polynomial_holdout",
    "unparam_geodesic_residual",
    "VerificationReport",
    "verify_pair",
    "IntegrationError",
    "Trajectory",
    "TrajectorySample",
    "DEFAULT_TOLERANCES",
]

DEFAULT_TOLERANCES = {
    "selfadjoint": 1e-12,
    "compatibility": 1e-9,
    "nijenhuis": 1e-9,
    "first_integrals": 1e-6,
    "geodesic_equivalence": 1e-6,
}


def _parts(field, p):
    vals, grads = field.parts(np.asarray(p, dtype=float))
    if np.iscomplexobj(vals) and not np.any(np.imag(vals)) and not np.any(np.imag(grads)):
        vals, grads = vals.real, grads.real
    return vals, grads


def _maxabs(a):
    return float(np.abs(a).max()) if np.size(a) else 0.0


def christoffel(g, p):
    """Levi-Civita connection symbols of ``g`` at ``p``, from exact jet derivatives."""
    G, dG = _parts(g, p)
    return christoffel_from_parts(G, dG)


def compatibility_residual(g, L, p):
    """Scaled max-abs defect of the compatibility equation at ``p``.

    With ``L_ij = g_ik L^k_j`` and ``lam = tr(L) / 2`` the defect is
    ``nabla_k L_ij - lam_,i g_jk - lam_,j g_ik``; it is divided by
    ``1 + |g|_max |L|_max``.
    """
    G, dG = _parts(g, p)
    Lv, dL = _parts(L, p)
    Gam = christoffel_from_parts(G, dG)
    low = G @ Lv
    dlow = np.einsum("imk,mj->ijk", dG, Lv) + np.einsum("im,mjk->ijk", G, dL)
    # nabla_k L_ij = d_k L_ij - Gam^m_ki L_mj - Gam^m_kj L_im
    cov = dlow - np.einsum("mki,mj->ijk", Gam, low) - np.einsum("mkj,im->ijk", Gam, low)
    dlam = 0.5 * np.einsum("iik->k", dL)
    rhs = np.einsum("i,jk->ijk", dlam, G) + np.einsum("j,ik->ijk", dlam, G)
    return _maxabs(cov - rhs) / (1 + _maxabs(G) * _maxabs(Lv))


def selfadjoint_residual(g, L, p):
    """``|gL - (gL)^T|_max / (|gL|_max + 1)``."""
    G = np.asarray(g(p))
    Lv = np.asarray(L(p))
    M = G @ Lv
    return _maxabs(M - M.T) / (_maxabs(M) + 1)


def nabla_L(g, L, p):
    """Covariant derivative ``[k, i, j] -> nabla_k L^i_j``."""
    G, dG = _parts(g, p)
    Lv, dL = _parts(L, p)
    Gam = christoffel_from_parts(G, dG)
    return (
        dL.transpose(2, 0, 1)
        + np.einsum("ikm,mj->kij", Gam, Lv)
        - np.einsum("mkj,im->kij", Gam, Lv)
    )


def nijenhuis(L, p):
    """Nijenhuis torsion ``[k, i, j] -> N^k_ij`` of the endomorphism field ``L``."""
    Lv, dL = _parts(L, p)
    # dL[a, b, c] = d_c L^a_b
    t1 = np.einsum("mi,kjm->kij", Lv, dL)
    t2 = t1.transpose(0, 2, 1)
    curl = dL.transpose(0, 2, 1) - dL  # curl[m, i, j] = d_i L^m_j - d_j L^m_i
    t3 = np.einsum("km,mij->kij", Lv, curl)
    return t1 - t2 - t3


def nijenhuis_residual(L, p):
    """``|N_L|_max`` scaled by ``1 + |L|_max |dL|_max``."""
    Lv, dL = _parts(L, p)
    return _maxabs(nijenhuis(L, p)) / (1 + _maxabs(Lv) * _maxabs(dL))


def integral_It(g, L, t, sample):
    """The quadratic integral ``g(adj(L - t I) xi, xi)`` at a trajectory sample."""
    p = sample.point if isinstance(sample, TrajectorySample) else sample[0]
    xi = sample.velocity if isinstance(sample, TrajectorySample) else sample[1]
    G = np.asarray(g(p))
    Lv = np.asarray(L(p))
    M = Lv - t * np.eye(Lv.shape[0])
    xi = np.asarray(xi, dtype=float)
    return float(np.real(xi @ G @ la.adjugate(M) @ xi))


def _integral_scale(g, L, t, sample):
    G = np.asarray(g(sample.point))
    M = np.asarray(L(sample.point)) - t * np.eye(G.shape[0])
    return _maxabs(G @ la.adjugate(M)) * float(sample.velocity @ sample.velocity)


def default_t_values(L, p, n=None):
    """``n`` equispaced values spanning the spectrum scale of ``L`` at ``p``."""
    Lv = np.asarray(L(p))
    n = Lv.shape[0] if n is None else n
    return np.linspace(-1.0, 1.0, n) * (1 + _maxabs(Lv))


def integral_drift(g, L, traj, t_values):
    """Worst relative change of every ``I_t`` along ``traj``.

    Each change is divided by ``|g adj(L - t)|_max |xi|^2`` at the first sample,
    so the result is insensitive to the scale of velocity and metric.
    """
    first = traj[0]
    worst = 0.0
    for t in t_values:
        i0 = integral_It(g, L, t, first)
        scale = _integral_scale(g, L, t, first) or 1.0
        for s in traj:
            worst = max(worst, abs(integral_It(g, L, t, s) - i0) / scale)
    return worst


def polynomial_holdout(g, L, sample, t_nodes, t_hold):
    """Relative error of predicting ``I_{t_hold}`` from ``len(t_nodes)`` nodes.

    ``I_t`` is a polynomial of degree ``n - 1`` in ``t``, so ``n`` nodes
    determine it.
    """
    t_nodes = np.asarray(t_nodes, dtype=float)
    vals = np.array([integral_It(g, L, t, sample) for t in t_nodes])
    pred = 0.0
    for i, ti in enumerate(t_nodes):
        w = np.prod([(t_hold - tj) / (ti - tj) for j, tj in enumerate(t_nodes) if j != i])
        pred += vals[i] * w
    actual = integral_It(g, L, t_hold, sample)
    scale = max(abs(actual), _integral_scale(g, L, t_hold, sample), np.abs(vals).max(), 1e-300)
    return abs(pred - actual) / scale


def unparam_geodesic_residual(gbar, samples):
    """How far a curve is from being an unparameterized ``gbar``-geodesic.

    At each sample ``A = acc + Gammabar(v, v)``; the residual is the Euclidean
    component of ``A`` orthogonal to ``v`` divided by ``|A| + |v|^2``.  The
    maximum over the samples is returned.
    """
    worst = 0.0
    for s in samples:
        v = np.asarray(s.velocity, dtype=float)
        vv = float(v @ v)
        if vv == 0:
            raise ValueError(f"zero velocity at t = {s.t}")
        A = s.acceleration + np.einsum("kij,i,j->k", christoffel(gbar, s.point), v, v)
        rej = A - (A @ v) / vv * v
        worst = max(worst, float(np.linalg.norm(rej)) / (float(np.linalg.norm(A)) + vv))
    return worst


@dataclass
class VerificationReport:
    check: str
    attempted: int
    accepted: int
    max_residual: float
    mean_residual: float
    tolerance: float
    passed: bool
    worst_point: list

    def to_dict(self):
        return asdict(self)


def _report(check, residuals, points, tol, attempted):
    r = np.asarray(residuals, dtype=float)
    if r.size == 0:
        return VerificationReport(check, attempted, 0, float("nan"), float("nan"), tol, False, [])
    k = int(np.argmax(r))
    worst = [float(x) for x in np.ravel(points[k])]
    mx = float(r.max())
    return VerificationReport(
        check, attempted, int(r.size), mx, float(r.mean()), float(tol), bool(mx <= tol), worst
    )


def _workers():
    try:
        return max(1, int(os.environ.get("GEODEQ_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    workers = _workers()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def random_trials(chart, k, rng, speed=0.15, T=1.0):
    """``k`` geodesic initial conditions: admissible points, random directions.

    The speed is ``speed`` times the smallest box width so that most curves
    stay inside the chart for time ``T``.
    """
    lo, hi = chart.box[:, 0], chart.box[:, 1]
    width = (hi - lo).min()
    inner = chart.box.copy()
    inner[:, 0] = lo + 0.25 * (hi - lo)
    inner[:, 1] = hi - 0.25 * (hi - lo)
    pts, _ = Chart(inner, chart.exclusions, chart.margin).sample(k, rng)
    out = []
    for p in pts:
        d = rng.standard_normal(chart.dim)
        out.append({"p0": p, "v0": speed * width * d / np.linalg.norm(d), "T": T})
    return out


def resolve_pair(g, second):
    """Return ``(L, gbar)`` given either the second metric or the endomorphism."""
    if isinstance(second, MetricField):
        return projective_L_field(g, second), second
    if isinstance(second, EndoField):
        return second, companion_metric(g, second)
    raise TypeError("expected a MetricField or an EndoField")


def verify_pair(
    g,
    second,
    chart=None,
    n_points=100,
    seed=0,
    tolerances=None,
    trials=3,
    integrator_tol=1e-10,
    t_values=None,
    gbar=None,
):
    """Run every check on the pair and return one report per check.

    ``second`` is either the second metric (``L`` is then computed from the
    two metrics) or the endomorphism ``L`` (the second metric is then its
    companion; pass ``gbar`` to use a different second metric for the
    trajectory check).  ``trials`` is an integer number of random geodesics or a list
    of ``{"p0", "v0", "T"}`` dicts.  Sampling uses ``numpy.random.default_rng(seed)``
    (PCG64), so reports are reproducible.
    """
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    chart = chart if chart is not None else g.chart
    L, gb = resolve_pair(g, second)
    gbar = gb if gbar is None else gbar
    rng = np.random.default_rng(seed)
    points, rejected = chart.sample(n_points, rng)
    attempted = n_points + sum(rejected.values())

    def pointwise(p):
        return (
            selfadjoint_residual(g, L, p),
            compatibility_residual(g, L, p),
            nijenhuis_residual(L, p),
        )

    res = np.array(_map(pointwise, list(points))).reshape(-1, 3)
    reports = [
        _report("selfadjoint", res[:, 0], points, tol["selfadjoint"], attempted),
        _report("compatibility", res[:, 1], points, tol["compatibility"], attempted),
        _report("nijenhuis", res[:, 2], points, tol["nijenhuis"], attempted),
    ]

    if isinstance(trials, int):
        trials = random_trials(chart, trials, rng) if trials > 0 else []

    def run(trial):
        p0 = np.asarray(trial["p0"], dtype=float)
        traj = integrate_geodesic(g, p0, trial["v0"], trial.get("T", 1.0), integrator_tol)
        ts = t_values if t_values is not None else default_t_values(L, p0)
        drift = integral_drift(g, L, traj, ts) if len(traj) > 1 else float("nan")
        equiv = unparam_geodesic_residual(gbar, traj)
        return drift, equiv, p0

    if trials:
        out = _map(run, trials)
        starts = [o[2] for o in out]
        reports.append(
            _report("first_integrals", [o[0] for o in out], starts, tol["first_integrals"], len(trials))
        )
        reports.append(
            _report(
                "geodesic_equivalence",
                [o[1] for o in out],
                starts,
                tol["geodesic_equivalence"],
                len(trials),
            )
        )
    return reports
