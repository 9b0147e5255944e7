"""Trading regions, their intersections and the integrals the equilibrium needs.

Coordinates are ``x`` = utility on the first issue and ``y`` = utility on the
second. Regions 1-4 belong to the voter who gives away the second-issue vote
(wedges measured from the x-axis); regions 5-8 to the voter who gives away the
first-issue vote (wedges measured from the y-axis). Within each player the
four regions follow the quadrants counter-clockwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import QUADRANTS, DomainError, JointUtilityDistribution
from .quadrature import clip_halfplane, integrate_polygon, polygon_area

__all__ = [
    "Region",
    "RegionMassTable",
    "REGION_SIGNS",
    "PLAYER",
    "wedge_region",
    "halfplane_region",
    "quadrant_region",
    "intersect",
    "clip",
    "region_mass",
    "region_moment",
    "mass_table",
    "naive_profile",
    "density_grid",
    "region_mask_grid",
]

HALF_PI = 0.5 * np.pi
_FULL_ANGLE = HALF_PI - 1e-12

# (sign of x, sign of y) of the quadrant each region lives in
REGION_SIGNS = {
    1: (1, 1), 2: (-1, 1), 3: (-1, -1), 4: (1, -1),
    5: (1, 1), 6: (-1, 1), 7: (-1, -1), 8: (1, -1),
}
PLAYER = {i: 1 if i <= 4 else 2 for i in range(1, 9)}
# region index -> quadrant number
QUADRANT_OF = {1: 1, 2: 2, 3: 3, 4: 4, 5: 1, 6: 2, 7: 3, 8: 4}


def naive_profile() -> np.ndarray:
    return np.full(8, 0.25 * np.pi)


@dataclass(frozen=True)
class Region:
    """Convex polygon inside the square (vertices counter-clockwise, possibly degenerate)."""

    vertices: np.ndarray
    label: str | None = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        if np.any(np.abs(v) > 1 + 1e-12):
            raise DomainError("region vertices must lie inside [-1, 1]^2")
        object.__setattr__(self, "vertices", v)

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)

    @property
    def is_empty(self) -> bool:
        return self.area <= 1e-15

    def contains(self, x, y, atol: float = 0.0):
        """Vectorised point-in-convex-polygon test (boundary counts as inside)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        v = self.vertices
        if len(v) < 3:
            return np.zeros(np.broadcast(x, y).shape, dtype=bool)
        inside = np.ones(np.broadcast(x, y).shape, dtype=bool)
        for k in range(len(v)):
            p, q = v[k], v[(k + 1) % len(v)]
            cross = (q[0] - p[0]) * (y - p[1]) - (q[1] - p[1]) * (x - p[0])
            inside &= cross >= -atol
        return inside


def _ccw(v):
    v = np.asarray(v, dtype=float)
    if len(v) >= 3:
        signed = np.dot(v[:, 0], np.roll(v[:, 1], -1)) - np.dot(v[:, 1], np.roll(v[:, 0], -1))
        if signed < 0:
            v = v[::-1]
    return v


def _canonical_wedge(theta: float) -> np.ndarray:
    """Wedge ``{u >= 0, 0 <= v <= u tan(theta)}`` of the unit square in (u, v)."""
    if theta <= 0.0:
        return np.array([[0.0, 0.0], [1.0, 0.0]])
    if theta >= _FULL_ANGLE:
        return np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    t = np.tan(theta)
    if t <= 1.0:
        return np.array([[0.0, 0.0], [1.0, 0.0], [1.0, t]])
    return np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [1.0 / t, 1.0]])


def wedge_region(trade_type: int, theta: float) -> Region:
    """The offered-trade wedge ``R_i`` for angle ``theta`` in [0, pi/2]."""
    if trade_type not in REGION_SIGNS:
        raise DomainError(f"trade type must be 1..8, got {trade_type!r}")
    if not (0.0 <= theta <= HALF_PI) or np.isnan(theta):
        raise DomainError(f"angle {theta!r} outside [0, pi/2]")
    uv = _canonical_wedge(float(theta))
    sx, sy = REGION_SIGNS[trade_type]
    if PLAYER[trade_type] == 1:
        xy = np.column_stack([sx * uv[:, 0], sy * uv[:, 1]])
    else:
        xy = np.column_stack([sx * uv[:, 1], sy * uv[:, 0]])
    return Region(_ccw(xy) + 0.0, f"R{trade_type}")


def halfplane_region(axis: str, sign: int) -> Region:
    """``{x > 0}``, ``{x < 0}``, ``{y > 0}`` or ``{y < 0}`` within the square."""
    if axis == "x":
        v = [[0, -1], [1, -1], [1, 1], [0, 1]] if sign > 0 else [[-1, -1], [0, -1], [0, 1], [-1, 1]]
    elif axis == "y":
        v = [[-1, 0], [1, 0], [1, 1], [-1, 1]] if sign > 0 else [[-1, -1], [1, -1], [1, 0], [-1, 0]]
    else:
        raise DomainError(f"axis must be 'x' or 'y', got {axis!r}")
    return Region(np.array(v, dtype=float), f"{axis}{'+' if sign > 0 else '-'}")


def quadrant_region(q: int) -> Region:
    return Region(QUADRANTS[q], f"Q{q}")


def intersect(a: Region, b: Region) -> Region:
    """Intersection of two convex regions (Sutherland-Hodgman)."""
    if len(a.vertices) < 3 or len(b.vertices) < 3 or a.is_empty or b.is_empty:
        return Region(np.empty((0, 2)), "empty")
    out = a.vertices
    v = b.vertices
    for k in range(len(v)):
        p, q = v[k], v[(k + 1) % len(v)]
        # left of p->q for a counter-clockwise polygon
        out = clip_halfplane(out, -(q[1] - p[1]), q[0] - p[0], (q[1] - p[1]) * p[0] - (q[0] - p[0]) * p[1])
        if len(out) == 0:
            break
    return Region(np.clip(out, -1.0, 1.0), None)


def clip(region: Region, a: float, b: float, c: float) -> Region:
    """Part of ``region`` where ``a*x + b*y + c >= 0``."""
    if len(region.vertices) < 3:
        return Region(np.empty((0, 2)), "empty")
    return Region(np.clip(clip_halfplane(region.vertices, a, b, c), -1.0, 1.0), region.label)


def _tol(dist, tol):
    return dist.default_tol if tol is None else tol


def region_mass(dist: JointUtilityDistribution, region: Region, tol: float | None = None) -> float:
    """``∬_region f``; degenerate regions give exactly 0."""
    if len(region.vertices) < 3 or region.is_empty:
        return 0.0
    return integrate_polygon(dist.pdf, region.vertices, _tol(dist, tol), dist.kinks_x, dist.kinks_y)


def region_moment(dist: JointUtilityDistribution, region: Region, axis: str, tol: float | None = None) -> float:
    """``∬_region x f`` (``axis="x"``) or ``∬_region y f`` (``axis="y"``)."""
    if axis not in ("x", "y"):
        raise DomainError(f"axis must be 'x' or 'y', got {axis!r}")
    if len(region.vertices) < 3 or region.is_empty:
        return 0.0
    if axis == "x":
        func = lambda x, y: x * dist.pdf(x, y)  # noqa: E731
    else:
        func = lambda x, y: y * dist.pdf(x, y)  # noqa: E731
    return integrate_polygon(func, region.vertices, _tol(dist, tol), dist.kinks_x, dist.kinks_y)


@dataclass
class RegionMassTable:
    """All region integrals at one strategy profile.

    ``I[i-1]`` is the mass of ``R_i``; ``J[k-1]`` the mass of ``R_k ∩ R_{k+4}``.
    ``region_moments[i-1]`` holds ``(∬_{R_i} x f, ∬_{R_i} y f)`` and
    ``halfplane_moments`` the moments ``∬ x f`` over ``x>0``, ``x<0`` and
    ``∬ y f`` over ``y>0``, ``y<0`` (keys ``"x+"``, ``"x-"``, ``"y+"``, ``"y-"``).
    """

    theta: np.ndarray
    I: np.ndarray
    q1_plus: float
    q1_minus: float
    q2_plus: float
    q2_minus: float
    quadrant_masses: np.ndarray
    J: np.ndarray | None = None
    region_moments: np.ndarray | None = None
    halfplane_moments: dict = field(default_factory=dict)

    @property
    def I_S1(self) -> float:
        return float(self.I[:4].sum())

    @property
    def I_S2(self) -> float:
        return float(self.I[4:].sum())

    def Q(self, issue: int, sign: int) -> float:
        """Probability that a random voter's utility on ``issue`` has ``sign``."""
        return {(1, 1): self.q1_plus, (1, -1): self.q1_minus, (2, 1): self.q2_plus, (2, -1): self.q2_minus}[
            (issue, sign)
        ]

    def to_dict(self) -> dict:
        out = {
            "theta": self.theta.tolist(),
            "I": self.I.tolist(),
            "I_S1": self.I_S1,
            "I_S2": self.I_S2,
            "Q": {"q1_plus": self.q1_plus, "q1_minus": self.q1_minus,
                  "q2_plus": self.q2_plus, "q2_minus": self.q2_minus},
            "quadrant_masses": self.quadrant_masses.tolist(),
        }
        if self.J is not None:
            out["J"] = self.J.tolist()
        if self.region_moments is not None:
            out["region_moments"] = self.region_moments.tolist()
        if self.halfplane_moments:
            out["halfplane_moments"] = dict(self.halfplane_moments)
        return out


def _quadrant_masses(dist, tol):
    key = ("quadrants", tol)
    if key not in dist._cache:
        dist._cache[key] = np.array([region_mass(dist, quadrant_region(q), tol) for q in (1, 2, 3, 4)])
    return dist._cache[key]


def _halfplane_moments(dist, tol):
    key = ("halfplane_moments", tol)
    if key not in dist._cache:
        qx = [region_moment(dist, quadrant_region(q), "x", tol) for q in (1, 2, 3, 4)]
        qy = [region_moment(dist, quadrant_region(q), "y", tol) for q in (1, 2, 3, 4)]
        dist._cache[key] = {
            "x+": qx[0] + qx[3],
            "x-": qx[1] + qx[2],
            "y+": qy[0] + qy[1],
            "y-": qy[2] + qy[3],
        }
    return dist._cache[key]


def mass_table(
    dist: JointUtilityDistribution,
    theta,
    tol: float | None = None,
    overlaps: bool = True,
    moments: bool = False,
) -> RegionMassTable:
    """Integrate the density over every region the game needs at profile ``theta``.

    Half-plane masses are normalized by the total quadrant mass so that
    ``Q+ + Q- = 1`` holds to rounding even when the quadrature error does not.
    """
    tol = _tol(dist, tol)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (8,):
        raise DomainError("a strategy profile has exactly eight angles")
    regions = [wedge_region(i, theta[i - 1]) for i in range(1, 9)]
    I = np.array([region_mass(dist, r, tol) for r in regions])
    qm = _quadrant_masses(dist, tol)
    total = qm.sum()
    table = RegionMassTable(
        theta=theta.copy(),
        I=I,
        q1_plus=float((qm[0] + qm[3]) / total),
        q1_minus=float((qm[1] + qm[2]) / total),
        q2_plus=float((qm[0] + qm[1]) / total),
        q2_minus=float((qm[2] + qm[3]) / total),
        quadrant_masses=qm.copy(),
    )
    if overlaps:
        table.J = np.array([region_mass(dist, intersect(regions[k], regions[k + 4]), tol) for k in range(4)])
    if moments:
        table.region_moments = np.array(
            [[region_moment(dist, r, "x", tol), region_moment(dist, r, "y", tol)] for r in regions]
        )
        table.halfplane_moments = dict(_halfplane_moments(dist, tol))
    return table


def density_grid(dist: JointUtilityDistribution, resolution: int):
    """Cell-centre lattice ``(x, y, f)`` rows, row-major in x then y."""
    if resolution < 2:
        raise DomainError("grid resolution must be at least 2")
    c = -1.0 + (np.arange(resolution) + 0.5) * (2.0 / resolution)
    gx, gy = np.meshgrid(c, c, indexing="ij")
    x, y = gx.ravel(), gy.ravel()
    return np.column_stack([x, y, dist.pdf(x, y)])


def region_mask_grid(theta, resolution: int):
    """Cell-centre lattice ``(x, y, mask)``; bit ``i-1`` of ``mask`` is set inside ``R_i``."""
    if resolution < 2:
        raise DomainError("grid resolution must be at least 2")
    c = -1.0 + (np.arange(resolution) + 0.5) * (2.0 / resolution)
    gx, gy = np.meshgrid(c, c, indexing="ij")
    x, y = gx.ravel(), gy.ravel()
    mask = np.zeros(x.shape, dtype=np.int64)
    for i in range(1, 9):
        mask |= wedge_region(i, float(theta[i - 1])).contains(x, y).astype(np.int64) << (i - 1)
    return np.column_stack([x, y, mask])
