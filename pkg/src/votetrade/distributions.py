"""Joint utility densities on the square [-1, 1]^2.

Every distribution evaluates vectorised over numpy arrays, knows the lines
along which it is not smooth (used to split quadrature domains) and can draw
samples for the Monte Carlo simulator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .quadrature import integrate_polygon

__all__ = [
    "DomainError",
    "DistributionError",
    "JointUtilityDistribution",
    "SurveyRecord",
    "ValidationReport",
    "density",
    "make_builtin",
    "kde_from_survey",
    "map_response",
    "validate",
    "transpose",
    "FAMILIES",
]

SQUARE = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
QUADRANTS = {
    1: np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
    2: np.array([[-1.0, 0.0], [0.0, 0.0], [0.0, 1.0], [-1.0, 1.0]]),
    3: np.array([[-1.0, -1.0], [0.0, -1.0], [0.0, 0.0], [-1.0, 0.0]]),
    4: np.array([[0.0, -1.0], [1.0, -1.0], [1.0, 0.0], [0.0, 0.0]]),
}


class DomainError(ValueError):
    """A point or parameter lies outside its admissible domain."""


class DistributionError(ValueError):
    """Invalid distribution parameters; ``field`` names the offending one."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class SurveyRecord:
    response_1: int
    response_2: int


@dataclass(frozen=True, eq=False)
class JointUtilityDistribution:
    """Base class for densities on [-1, 1]^2.

    Subclasses implement ``_raw``; the public density is
    ``normalization * _raw``. ``kinks_x``/``kinks_y`` list coordinates of
    vertical/horizontal lines where the density may be non-smooth.
    """

    kind: str = field(init=False, default="")
    normalization: float = field(init=False, default=1.0)
    default_tol: float = field(init=False, default=1e-9)
    kinks_x: tuple = field(init=False, default=())
    kinks_y: tuple = field(init=False, default=())
    point_symmetric: bool = field(init=False, default=False)
    _cache: dict = field(init=False, default_factory=dict, repr=False)

    @property
    def params(self) -> dict:
        return {}

    def _raw(self, x, y):
        raise NotImplementedError

    def pdf(self, x, y):
        """Normalized density without domain checks (for quadrature)."""
        return self.normalization * self._raw(np.asarray(x, float), np.asarray(y, float))

    def max_density(self) -> float:
        """An upper bound on the density over the square."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` utility pairs, shape ``(size, 2)``; rejection sampling by default."""
        bound = self.max_density()
        out = np.empty((0, 2))
        while len(out) < size:
            m = max(64, int(1.2 * (size - len(out)) * bound * 4.0))
            pts = rng.uniform(-1.0, 1.0, size=(m, 2))
            acc = rng.uniform(0.0, bound, size=m) < self.pdf(pts[:, 0], pts[:, 1])
            out = np.concatenate([out, pts[acc]])
        return out[:size]

    def to_spec(self) -> dict:
        return {"family": self.kind, "params": self.params}

    def _set(self, **kw):
        for k, v in kw.items():
            object.__setattr__(self, k, v)


class Uniform(JointUtilityDistribution):
    def __init__(self):
        super().__init__()
        self._set(kind="uniform", point_symmetric=True)

    def _raw(self, x, y):
        return np.full(np.broadcast(x, y).shape, 0.25)

    def max_density(self):
        return 0.25

    def sample(self, rng, size):
        return rng.uniform(-1.0, 1.0, size=(size, 2))


class QuadrantConstant(JointUtilityDistribution):
    """Piecewise-constant density, one value per quadrant (Q1..Q4 counter-clockwise)."""

    def __init__(self, weights: Sequence[float]):
        super().__init__()
        w = np.asarray(weights, dtype=float)
        if w.shape != (4,):
            raise DistributionError("weights", "need exactly four quadrant weights")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DistributionError("weights", "weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise DistributionError("weights", f"weights must sum to 1 (unit-area quadrants), got {w.sum()!r}")
        self._set(
            kind="quadrant_constant",
            weights=w,
            kinks_x=(0.0,),
            kinks_y=(0.0,),
            point_symmetric=bool(w[0] == w[2] and w[1] == w[3]),
        )

    @property
    def params(self):
        return {"weights": self.weights.tolist()}

    def _raw(self, x, y):
        right = x >= 0
        up = y >= 0
        return np.where(
            up,
            np.where(right, self.weights[0], self.weights[1]),
            np.where(right, self.weights[3], self.weights[2]),
        )

    def max_density(self):
        return float(self.weights.max())

    def sample(self, rng, size):
        q = rng.choice(4, size=size, p=self.weights)
        u = rng.uniform(0.0, 1.0, size=(size, 2))
        sx = np.array([1.0, -1.0, -1.0, 1.0])[q]
        sy = np.array([1.0, 1.0, -1.0, -1.0])[q]
        return np.column_stack([sx * u[:, 0], sy * u[:, 1]])


def _odd_root(v, k):
    return np.sign(v) * np.abs(v) ** (1.0 / k)


class ProductDistribution(JointUtilityDistribution):
    """``f(x, y) = g(x) g(y)`` for a one-dimensional density ``g`` on [-1, 1].

    ``shape`` is ``"power"`` (skewed ``g_alpha``), ``"tent"`` (``1 - |z|``) or
    ``"vee"`` (``|z|``).
    """

    def __init__(self, shape: str, alpha: int = 0):
        super().__init__()
        kind = {"power": "product_power", "tent": "product_tent", "vee": "product_vee"}.get(shape)
        if kind is None:
            raise DistributionError("shape", f"unknown product shape {shape!r}")
        if shape == "power":
            if isinstance(alpha, bool) or int(alpha) != alpha or alpha < 0 or int(alpha) % 2:
                raise DistributionError("alpha", "alpha must be a nonnegative even integer")
            alpha = int(alpha)
        self._set(
            kind=kind,
            shape=shape,
            alpha=alpha,
            kinks_x=(0.0,),
            kinks_y=(0.0,),
            point_symmetric=shape != "power" or alpha == 0,
        )

    @property
    def params(self):
        return {"alpha": self.alpha} if self.shape == "power" else {}

    def g(self, z):
        z = np.asarray(z, dtype=float)
        if self.shape == "tent":
            return 1.0 - np.abs(z)
        if self.shape == "vee":
            return np.abs(z)
        c = 0.5 * (self.alpha + 1)
        return np.where(z < 0, c * z**self.alpha, c * (z - 1.0) ** self.alpha)

    def _raw(self, x, y):
        return self.g(x) * self.g(y)

    def max_density(self):
        if self.shape == "power":
            return (0.5 * (self.alpha + 1)) ** 2
        return 1.0

    def _inverse_cdf(self, u):
        if self.shape == "tent":
            return np.where(u < 0.5, np.sqrt(2.0 * np.minimum(u, 0.5)) - 1.0, 1.0 - np.sqrt(2.0 * np.minimum(1.0 - u, 0.5)))
        if self.shape == "vee":
            r = np.sqrt(np.abs(2.0 * u - 1.0))
            return np.where(u < 0.5, -r, r)
        k = self.alpha + 1
        return np.where(u < 0.5, _odd_root(2.0 * u - 1.0, k), 1.0 + _odd_root(2.0 * u - 2.0, k))

    def sample(self, rng, size):
        u = rng.uniform(0.0, 1.0, size=(size, 2))
        return np.clip(self._inverse_cdf(u), -1.0, 1.0)


class KernelDensity(JointUtilityDistribution):
    """Weighted product-Gaussian kernel mixture truncated to the square and renormalized."""

    def __init__(self, points, weights, bandwidth):
        super().__init__()
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        w = np.asarray(weights, dtype=float)
        w = w / w.sum()
        h = np.broadcast_to(np.asarray(bandwidth, dtype=float), (2,)).copy()
        if np.any(h <= 0) or not np.all(np.isfinite(h)):
            raise DistributionError("bandwidth", "bandwidth must be positive")
        lo = ndtr((-1.0 - pts) / h)
        hi = ndtr((1.0 - pts) / h)
        comp_mass = np.prod(hi - lo, axis=1)
        z = float(np.dot(w, comp_mass))
        sym = _is_point_symmetric(pts, w)
        self._set(
            kind="kde",
            points=pts,
            weights=w,
            bandwidth=h,
            normalization=1.0 / z,
            default_tol=1e-7,
            point_symmetric=sym,
            _lo=lo,
            _hi=hi,
            _comp_mass=comp_mass,
        )

    @property
    def params(self):
        return {
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
            "bandwidth": self.bandwidth.tolist(),
        }

    def _raw(self, x, y):
        shape = np.broadcast(x, y).shape
        x = np.ravel(np.broadcast_to(x, shape))
        y = np.ravel(np.broadcast_to(y, shape))
        hx, hy = self.bandwidth
        out = np.zeros(x.shape)
        norm = 1.0 / (2.0 * np.pi * hx * hy)
        chunk = max(1, 2_000_000 // max(1, len(self.points)))
        for s in range(0, len(x), chunk):
            dx = (x[s : s + chunk, None] - self.points[None, :, 0]) / hx
            dy = (y[s : s + chunk, None] - self.points[None, :, 1]) / hy
            out[s : s + chunk] = np.exp(-0.5 * (dx * dx + dy * dy)) @ self.weights
        return (norm * out).reshape(shape)

    def max_density(self):
        hx, hy = self.bandwidth
        return self.normalization / (2.0 * np.pi * hx * hy)

    def sample(self, rng, size):
        p = self.weights * self._comp_mass
        k = rng.choice(len(self.points), size=size, p=p / p.sum())
        u = rng.uniform(0.0, 1.0, size=(size, 2))
        lo, hi = self._lo[k], self._hi[k]
        z = ndtri(lo + u * (hi - lo))
        return np.clip(self.points[k] + z * self.bandwidth, -1.0, 1.0)


def _is_point_symmetric(pts, w, atol=1e-12):
    key = {tuple(np.round(p, 12)): wi for p, wi in zip(pts, w)}
    for p, wi in zip(pts, w):
        q = tuple(np.round(-p, 12) + 0.0)
        if q not in key or abs(key[q] - wi) > atol:
            return False
    return True


class GridDensity(JointUtilityDistribution):
    """Bilinear interpolation of values tabulated on a lattice spanning [-1, 1]^2.

    ``values[i, j]`` is the density at ``(xs[i], ys[j])``.
    """

    def __init__(self, values, xs=None, ys=None, normalize: bool = True):
        super().__init__()
        v = np.asarray(values, dtype=float)
        if v.ndim != 2 or min(v.shape) < 2:
            raise DistributionError("values", "need a 2-D table with at least 2 nodes per axis")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise DistributionError("values", "grid values must be finite and nonnegative")
        xs = np.linspace(-1.0, 1.0, v.shape[0]) if xs is None else np.asarray(xs, dtype=float)
        ys = np.linspace(-1.0, 1.0, v.shape[1]) if ys is None else np.asarray(ys, dtype=float)
        for name, ax, n in (("xs", xs, v.shape[0]), ("ys", ys, v.shape[1])):
            if ax.shape != (n,) or ax[0] != -1.0 or ax[-1] != 1.0 or np.any(np.diff(ax) <= 0):
                raise DistributionError(name, "nodes must increase from -1 to 1 and match values")
        # trapezoid rule is exact for the bilinear interpolant
        mass = float(np.trapezoid(np.trapezoid(v, ys, axis=1), xs))
        if normalize and mass <= 0:
            raise DistributionError("values", "grid has zero mass")
        self._set(
            kind="grid",
            values=v,
            xs=xs,
            ys=ys,
            normalized=normalize,
            normalization=1.0 / mass if normalize else 1.0,
            default_tol=1e-7,
            kinks_x=tuple(xs[1:-1]),
            kinks_y=tuple(ys[1:-1]),
            point_symmetric=bool(
                np.allclose(xs, -xs[::-1]) and np.allclose(ys, -ys[::-1]) and np.allclose(v, v[::-1, ::-1])
            ),
        )

    @property
    def params(self):
        return {"values": self.values.tolist(), "xs": self.xs.tolist(), "ys": self.ys.tolist(),
                "normalize": self.normalized}

    def _raw(self, x, y):
        i = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, len(self.xs) - 2)
        j = np.clip(np.searchsorted(self.ys, y, side="right") - 1, 0, len(self.ys) - 2)
        tx = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i])
        ty = (y - self.ys[j]) / (self.ys[j + 1] - self.ys[j])
        v = self.values
        return (
            v[i, j] * (1 - tx) * (1 - ty)
            + v[i + 1, j] * tx * (1 - ty)
            + v[i, j + 1] * (1 - tx) * ty
            + v[i + 1, j + 1] * tx * ty
        )

    def max_density(self):
        return float(self.values.max() * self.normalization)


class Transposed(JointUtilityDistribution):
    """The density with the two issues swapped, ``f_T(x, y) = f(y, x)``."""

    def __init__(self, base: JointUtilityDistribution):
        super().__init__()
        self._set(
            kind=base.kind,
            base=base,
            normalization=1.0,
            default_tol=base.default_tol,
            kinks_x=base.kinks_y,
            kinks_y=base.kinks_x,
            point_symmetric=base.point_symmetric,
        )

    @property
    def params(self):
        return dict(self.base.params, transposed=True)

    def _raw(self, x, y):
        return self.base.pdf(y, x)

    def max_density(self):
        return self.base.max_density()

    def sample(self, rng, size):
        return self.base.sample(rng, size)[:, ::-1].copy()


def transpose(dist: JointUtilityDistribution) -> JointUtilityDistribution:
    return Transposed(dist)


FAMILIES = ("uniform", "quadrant_constant", "product_power", "product_tent", "product_vee", "kde", "grid")


def make_builtin(family: str, **params) -> JointUtilityDistribution:
    """Construct a distribution from a family tag and its parameters.

    >>> make_builtin("quadrant_constant", weights=[0.1, 0.4, 0.3, 0.2]).kind
    'quadrant_constant'
    """
    if family == "uniform":
        _no_extra(params, set())
        return Uniform()
    if family == "quadrant_constant":
        _no_extra(params, {"weights"})
        if "weights" not in params:
            raise DistributionError("weights", "required")
        return QuadrantConstant(params["weights"])
    if family == "product_power":
        _no_extra(params, {"alpha"})
        if "alpha" not in params:
            raise DistributionError("alpha", "required")
        return ProductDistribution("power", params["alpha"])
    if family in ("product_tent", "product_vee"):
        _no_extra(params, set())
        return ProductDistribution(family[len("product_"):])
    if family == "grid":
        _no_extra(params, {"values", "xs", "ys", "normalize"})
        if "values" not in params:
            raise DistributionError("values", "required")
        return GridDensity(params["values"], params.get("xs"), params.get("ys"), params.get("normalize", True))
    if family == "kde":
        _no_extra(params, {"points", "weights", "bandwidth"})
        for key in ("points", "bandwidth"):
            if key not in params:
                raise DistributionError(key, "required")
        pts = np.asarray(params["points"], dtype=float).reshape(-1, 2)
        if np.any(np.abs(pts) > 1):
            raise DistributionError("points", "kernel centres must lie in [-1, 1]^2")
        weights = params.get("weights")
        weights = np.ones(len(pts)) if weights is None else weights
        return KernelDensity(pts, weights, params["bandwidth"])
    raise DistributionError("family", f"unknown family {family!r}; expected one of {FAMILIES}")


def _no_extra(params, allowed):
    extra = set(params) - allowed
    if extra:
        raise DistributionError(sorted(extra)[0], "unexpected parameter")


def map_response(k, lo: int = 1, hi: int = 7):
    """Affine map of an ordinal response onto [-1, 1]; the scale midpoint goes to 0."""
    return (2.0 * np.asarray(k, dtype=float) - lo - hi) / (hi - lo)


def kde_from_survey(records, bandwidth=None, scale=(1, 7)) -> KernelDensity:
    """Gaussian KDE of paired ordinal survey responses.

    Parameters
    ----------
    records : sequence of SurveyRecord or (int, int)
    bandwidth : float, pair of floats, or None
        Kernel standard deviation in mapped units. ``None`` applies Scott's
        rule per axis, ``std * m ** (-1/6)``.
    scale : (lo, hi)
        Ordinal bounds; ``lo`` maps to -1 and ``hi`` to +1.
    """
    lo, hi = scale
    if hi <= lo:
        raise DistributionError("scale", "upper bound must exceed lower bound")
    arr = np.array([(r.response_1, r.response_2) if isinstance(r, SurveyRecord) else tuple(r) for r in records],
                   dtype=float).reshape(-1, 2)
    if len(arr) < 2:
        raise DistributionError("records", "at least two survey records are required")
    if np.any(arr < lo) or np.any(arr > hi):
        raise DistributionError("records", f"responses outside scale [{lo}, {hi}]")
    mapped = map_response(arr, lo, hi)
    if bandwidth is None:
        std = mapped.std(axis=0, ddof=1)
        if np.any(std == 0):
            raise DistributionError("bandwidth", "zero variance in responses; pass an explicit bandwidth")
        bandwidth = std * len(mapped) ** (-1.0 / 6.0)
    # discrete responses repeat, so collapse to weighted unique centres
    uniq, counts = np.unique(mapped, axis=0, return_counts=True)
    return KernelDensity(uniq, counts.astype(float), bandwidth)


def density(dist: JointUtilityDistribution, x, y):
    """Normalized density at ``(x, y)``; raises DomainError outside the closed square."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(x) > 1) or np.any(np.abs(y) > 1) or np.any(np.isnan(x)) or np.any(np.isnan(y)):
        raise DomainError("utility pair outside [-1, 1]^2")
    out = dist.pdf(x, y)
    return float(out) if out.ndim == 0 else out


@dataclass
class ValidationReport:
    mass: float
    min_density: float
    quadrant_masses: tuple
    tol: float
    passed: bool
    messages: list

    def to_dict(self):
        return {
            "mass": self.mass,
            "min_density": self.min_density,
            "quadrant_masses": list(self.quadrant_masses),
            "tol": self.tol,
            "passed": self.passed,
            "messages": list(self.messages),
        }


def validate(dist: JointUtilityDistribution, tol: float = 1e-9, resolution: int = 201) -> ValidationReport:
    """Check unit mass and nonnegativity; failures are reported, never raised."""
    quad_tol = min(tol, dist.default_tol) / 8.0
    qm = tuple(
        integrate_polygon(dist.pdf, QUADRANTS[q], quad_tol, dist.kinks_x, dist.kinks_y) for q in (1, 2, 3, 4)
    )
    mass = float(sum(qm))
    g = np.linspace(-1.0, 1.0, resolution)
    gx, gy = np.meshgrid(g, g, indexing="ij")
    min_d = float(dist.pdf(gx.ravel(), gy.ravel()).min())
    messages = []
    if abs(mass - 1.0) > tol:
        messages.append(f"total mass {mass:.12g} differs from 1 by more than {tol:g}")
    if min_d < 0:
        messages.append(f"negative density {min_d:g} on the sampling lattice")
    return ValidationReport(mass, min_d, qm, tol, not messages, messages)
