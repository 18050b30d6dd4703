"""Metric and endomorphism fields over a coordinate box.

A field is a function from chart coordinates to a square matrix.  Evaluators
are written once, generically, and are called either with plain floats (fast
numeric path) or with :class:`~geodeq.jets.Jet` coordinates (values plus exact
first derivatives).
"""

from dataclasses import dataclass
import numbers

import numpy as np

from . import linalg as la
from .jets import Jet, seed_all, split_matrix

MAX_DEGREE = 12


class ExclusionError(ValueError):
    """A point lies inside an excluded region of the chart."""

    def __init__(self, name, point, magnitude):
        self.name = name
        self.point = tuple(float(x) for x in point)
        self.magnitude = magnitude
        super().__init__(
            f"point {self.point} is excluded by {name!r} (|value| = {magnitude:.3e})"
        )


class DomainError(ValueError):
    """Sampling could not find enough admissible points in a chart."""


@dataclass(frozen=True)
class ParamFn:
    """Polynomial parameter function of a single coordinate.

    ``coeffs`` are ascending; complex coefficients make it a holomorphic
    function of a complex coordinate.  ``var`` names the coordinate index the
    function depends on (``None`` when the generator fixes it).
    """

    coeffs: tuple
    var: int = None

    def __post_init__(self):
        coeffs = tuple(
            complex(c) if isinstance(c, complex) or np.iscomplexobj(c) else float(c)
            for c in self.coeffs
        )
        if not coeffs:
            raise ValueError("a parameter function needs at least one coefficient")
        if len(coeffs) - 1 > MAX_DEGREE:
            raise ValueError(f"degree {len(coeffs) - 1} exceeds {MAX_DEGREE}")
        if not all(np.isfinite(c) for c in coeffs):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def constant(cls, c, var=None):
        return cls((c,), var)

    @property
    def is_complex(self):
        return any(isinstance(c, complex) for c in self.coeffs)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, x):
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + c
        return acc

    def derivative(self):
        d = tuple(k * c for k, c in enumerate(self.coeffs))[1:]
        return ParamFn(d or (0.0,), self.var)

    def with_var(self, var):
        if self.var is not None and self.var != var:
            raise ValueError(f"parameter depends on coordinate {self.var}, expected {var}")
        return ParamFn(self.coeffs, var)

    def to_json(self):
        coeffs = [[c.real, c.imag] if isinstance(c, complex) else c for c in self.coeffs]
        out = {"coeffs": coeffs}
        if self.var is not None:
            out["var"] = self.var
        return out

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, (list, tuple)):
            obj = {"coeffs": obj}
        elif isinstance(obj, numbers.Number):
            obj = {"coeffs": [obj]}
        coeffs = [complex(c[0], c[1]) if isinstance(c, (list, tuple)) else c for c in obj["coeffs"]]
        return cls(tuple(coeffs), obj.get("var"))


def as_param(fn, var=None):
    """Accept a ParamFn, a coefficient list or a constant."""
    if not isinstance(fn, ParamFn):
        fn = ParamFn.from_json(fn)
    return fn.with_var(var) if var is not None else fn


@dataclass(frozen=True)
class Exclusion:
    """Scalar expression that must stay away from zero on the chart."""

    name: str
    fn: object

    def __call__(self, point):
        return self.fn(point)


class Chart:
    """Coordinate box with excluded near-zero sets.

    A point is admissible when it lies in the box and every exclusion
    expression has magnitude at least ``margin * max(1, box scale)``.
    """

    def __init__(self, box, exclusions=(), margin=1e-3):
        box = np.asarray(box, dtype=float).reshape(-1, 2)
        if box.shape[0] < 1 or np.any(box[:, 1] <= box[:, 0]):
            raise ValueError(f"invalid chart box {box.tolist()}")
        if not margin > 0:
            raise ValueError("exclusion margin must be positive")
        self.box = box
        self.exclusions = tuple(exclusions)
        self.margin = float(margin)

    def __repr__(self):
        names = [e.name for e in self.exclusions]
        return f"Chart(box={self.box.tolist()}, exclusions={names}, margin={self.margin})"

    @property
    def dim(self):
        return self.box.shape[0]

    @property
    def center(self):
        return self.box.mean(axis=1)

    @property
    def scale(self):
        return float(np.abs(self.box).max())

    @property
    def threshold(self):
        return self.margin * max(1.0, self.scale)

    def with_exclusions(self, *exclusions):
        return Chart(self.box, self.exclusions + tuple(exclusions), self.margin)

    def in_box(self, point, slack=1e-12):
        p = np.asarray(point, dtype=float)
        width = self.box[:, 1] - self.box[:, 0]
        return bool(
            np.all(p >= self.box[:, 0] - slack * width) and np.all(p <= self.box[:, 1] + slack * width)
        )

    def violated(self, point):
        """First exclusion violated at ``point`` as ``(name, |value|)``, else ``None``."""
        thr = self.threshold
        for ex in self.exclusions:
            try:
                mag = abs(complex(ex(point)))
            except (ZeroDivisionError, ArithmeticError, ValueError):
                return ex.name, 0.0
            if not np.isfinite(mag) or mag < thr:
                return ex.name, mag
        return None

    def contains(self, point):
        return self.in_box(point) and self.violated(point) is None

    def check(self, point):
        if not self.in_box(point):
            raise ExclusionError("box", point, float("nan"))
        hit = self.violated(point)
        if hit is not None:
            raise ExclusionError(hit[0], point, hit[1])

    def sample(self, n, rng, max_reject=0.5):
        """Draw ``n`` admissible points uniformly from the box.

        Returns ``(points, rejected)`` where ``rejected`` counts exclusion hits
        per exclusion name.  Raises :class:`DomainError` once more than
        ``max_reject`` of all draws were rejected.
        """
        pts, rejected, attempts = [], {}, 0
        cap = max(int(np.ceil(n / (1 - max_reject))), n + 1)
        lo, hi = self.box[:, 0], self.box[:, 1]
        while len(pts) < n:
            if attempts >= cap:
                raise DomainError(
                    f"rejected {attempts - len(pts)} of {attempts} draws "
                    f"(more than {max_reject:.0%}); rejections by exclusion: {rejected}"
                )
            attempts += 1
            p = lo + (hi - lo) * rng.random(self.dim)
            hit = self.violated(p)
            if hit is None:
                pts.append(p)
            else:
                rejected[hit[0]] = rejected.get(hit[0], 0) + 1
        return np.array(pts), rejected

    def product(self, other):
        d = self.dim
        lifted = [Exclusion(e.name, _restrict(e.fn, slice(0, d))) for e in self.exclusions]
        lifted += [Exclusion(e.name, _restrict(e.fn, slice(d, None))) for e in other.exclusions]
        return Chart(np.vstack([self.box, other.box]), lifted, min(self.margin, other.margin))


def _restrict(fn, sl):
    return lambda p: fn(np.asarray(p)[sl])


def as_matrix(rows):
    """Turn an evaluator result into an object (jet) or numeric ndarray."""
    if isinstance(rows, np.ndarray) and rows.dtype != object:
        return rows
    arr = np.empty((len(rows), len(rows[0])), dtype=object)
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            arr[i, j] = x
    if any(isinstance(x, Jet) for x in arr.flat):
        return arr
    vals = np.array(arr.tolist())
    return vals.astype(complex) if np.iscomplexobj(vals) else vals.astype(float)


class Field:
    """Square-matrix valued function on a chart."""

    def __init__(self, dim, evaluator, chart=None, name=""):
        self.dim = int(dim)
        self.evaluator = evaluator
        self.chart = chart
        self.name = name

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, name={self.name!r})"

    @property
    def ncoords(self):
        return self.chart.dim if self.chart is not None else self.dim

    def evaluate(self, coords):
        """Evaluate on arbitrary coordinate scalars (floats or jets)."""
        return as_matrix(self.evaluator(coords))

    def __call__(self, point):
        return self.evaluate([float(x) for x in point])

    def jets(self, point):
        return self.evaluate(seed_all(point))

    def parts(self, point):
        """Values ``(n, n)`` and gradients ``(n, n, ncoords)`` at ``point``."""
        return split_matrix(self.jets(point), len(point))


class MetricField(Field):
    pass


class EndoField(Field):
    pass


def eval_with_jets(field, point):
    """Jet-valued matrix of ``field`` at ``point`` after checking the chart."""
    if field.chart is not None:
        field.chart.check(point)
    return field.jets(point)


def projective_L_matrix(G, Gbar):
    """``|det Gbar / det G|^(1/(n+1)) Gbar^{-1} G`` for numeric or jet matrices."""
    n = G.shape[0]
    ratio = la.det(Gbar) / la.det(G)
    return la.inv(Gbar) @ G * abs(ratio) ** (1.0 / (n + 1))


def projective_L(g, gbar, point):
    """The (1,1)-tensor built from a pair of metrics at ``point``."""
    G, Gb = g(point), gbar(point)
    if G.shape != Gb.shape:
        raise ValueError("metrics of different dimension")
    if abs(np.linalg.det(G)) == 0 or abs(np.linalg.det(Gb)) == 0:
        raise np.linalg.LinAlgError("singular metric")
    return projective_L_matrix(G, Gb)


def projective_L_field(g, gbar):
    def ev(x):
        return projective_L_matrix(g.evaluate(x), gbar.evaluate(x))

    return EndoField(g.dim, ev, g.chart, name=f"L({g.name}, {gbar.name})")


def companion_matrix(G, L):
    """``g(L^{-1} u, v) / |det L|`` as a matrix, symmetrized."""
    return la.symmetrize(G @ la.inv(L) * (1 / abs(la.det(L))))


def companion_metric(g, L):
    """The metric determined by ``g`` and a g-self-adjoint ``L``."""

    def ev(x):
        return companion_matrix(g.evaluate(x), L.evaluate(x))

    return MetricField(g.dim, ev, g.chart, name=f"companion({g.name})")
