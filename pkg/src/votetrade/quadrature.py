"""Adaptive Gauss-Legendre quadrature over convex polygons.

Polygons are cut along the straight lines where the integrand is allowed to
have kinks or jumps, fan-triangulated, and each triangle is integrated with a
collapsed (Duffy) Gauss-Legendre product rule. Triangles whose estimate does
not agree with the sum over their four midpoint children are refined.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = [
    "QuadratureError",
    "clip_halfplane",
    "split_polygon",
    "polygon_area",
    "integrate_polygon",
    "triangle_rule",
]

_EPS_AREA = 1e-15


class QuadratureError(RuntimeError):
    """Raised when adaptive refinement runs out of budget.

    Attributes
    ----------
    estimate : float
        Best available value of the integral.
    error_bound : float
        Sum of the unresolved local error indicators.
    """

    def __init__(self, message, estimate, error_bound):
        super().__init__(f"{message} (estimate={estimate!r}, error bound={error_bound:.3g})")
        self.estimate = estimate
        self.error_bound = error_bound


@lru_cache(maxsize=None)
def triangle_rule(order: int = 8):
    """Nodes ``(s, t)`` and weights of a collapsed Gauss rule on the unit triangle.

    The weights sum to 1/2, the area of ``{s, t >= 0, s + t <= 1}``. A product
    rule with ``order`` points per direction integrates polynomials of total
    degree ``2 * order - 2`` exactly.
    """
    g, w = np.polynomial.legendre.leggauss(order)
    g = 0.5 * (g + 1.0)
    w = 0.5 * w
    xi, eta = np.meshgrid(g, g, indexing="ij")
    wxi, weta = np.meshgrid(w, w, indexing="ij")
    s = xi.ravel()
    t = ((1.0 - xi) * eta).ravel()
    weights = (wxi * weta * (1.0 - xi)).ravel()
    return s, t, weights


def polygon_area(vertices) -> float:
    """Unsigned shoelace area."""
    v = np.asarray(vertices, dtype=float)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def clip_halfplane(vertices, a: float, b: float, c: float) -> np.ndarray:
    """Clip a convex polygon to ``a*x + b*y + c >= 0`` (Sutherland-Hodgman step)."""
    v = np.asarray(vertices, dtype=float).reshape(-1, 2)
    if len(v) == 0:
        return v
    vals = a * v[:, 0] + b * v[:, 1] + c
    out = []
    k = len(v)
    for i in range(k):
        p, q = v[i], v[(i + 1) % k]
        fp, fq = vals[i], vals[(i + 1) % k]
        if fp >= 0:
            out.append(p)
        if (fp >= 0) != (fq >= 0) and k > 1:
            t = fp / (fp - fq)
            out.append(p + t * (q - p))
    if not out:
        return np.empty((0, 2))
    out = np.array(out)
    # drop consecutive duplicates
    keep = np.ones(len(out), dtype=bool)
    for i in range(1, len(out)):
        if np.allclose(out[i], out[i - 1], atol=1e-15, rtol=0):
            keep[i] = False
    out = out[keep]
    if len(out) > 1 and np.allclose(out[0], out[-1], atol=1e-15, rtol=0):
        out = out[:-1]
    return out


def split_polygon(vertices, kinks_x=(), kinks_y=()) -> list:
    """Cut a convex polygon along vertical lines ``x = c`` and horizontal lines ``y = c``."""
    pieces = [np.asarray(vertices, dtype=float)]
    for c in kinks_x:
        nxt = []
        for p in pieces:
            if len(p) < 3 or p[:, 0].min() >= c or p[:, 0].max() <= c:
                nxt.append(p)
                continue
            nxt.append(clip_halfplane(p, 1.0, 0.0, -c))
            nxt.append(clip_halfplane(p, -1.0, 0.0, c))
        pieces = nxt
    for c in kinks_y:
        nxt = []
        for p in pieces:
            if len(p) < 3 or p[:, 1].min() >= c or p[:, 1].max() <= c:
                nxt.append(p)
                continue
            nxt.append(clip_halfplane(p, 0.0, 1.0, -c))
            nxt.append(clip_halfplane(p, 0.0, -1.0, c))
        pieces = nxt
    return [p for p in pieces if polygon_area(p) > _EPS_AREA]


def _fan(polygon) -> np.ndarray:
    p = np.asarray(polygon, dtype=float)
    return np.stack([np.repeat(p[:1], len(p) - 2, axis=0), p[1:-1], p[2:]], axis=1)


def _apply_rule(func, tris, rule):
    s, t, w = rule
    a = tris[:, 0, :]
    e1 = tris[:, 1, :] - a
    e2 = tris[:, 2, :] - a
    x = a[:, 0:1] + s * e1[:, 0:1] + t * e2[:, 0:1]
    y = a[:, 1:2] + s * e1[:, 1:2] + t * e2[:, 1:2]
    jac = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    vals = np.asarray(func(x.ravel(), y.ravel()), dtype=float).reshape(x.shape)
    return jac * (vals @ w)


def _children(tris):
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
    kids = np.stack(
        [
            np.stack([a, ab, ca], axis=1),
            np.stack([ab, b, bc], axis=1),
            np.stack([ca, bc, c], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ],
        axis=1,
    )
    return kids.reshape(-1, 3, 2)


def integrate_polygon(
    func,
    vertices,
    tol: float = 1e-9,
    kinks_x=(),
    kinks_y=(),
    order: int = 8,
    max_level: int = 10,
) -> float:
    """Integrate ``func(x, y)`` over a convex polygon to absolute accuracy ``tol``.

    ``func`` receives flat coordinate arrays and must return an array of the
    same length. Zero-area polygons integrate to exactly ``0.0``.
    """
    pieces = split_polygon(vertices, kinks_x, kinks_y)
    if not pieces:
        return 0.0
    rule = triangle_rule(order)
    tris = np.concatenate([_fan(p) for p in pieces])
    areas = 0.5 * np.abs(
        (tris[:, 1, 0] - tris[:, 0, 0]) * (tris[:, 2, 1] - tris[:, 0, 1])
        - (tris[:, 1, 1] - tris[:, 0, 1]) * (tris[:, 2, 0] - tris[:, 0, 0])
    )
    total_area = areas.sum()
    coarse = _apply_rule(func, tris, rule)

    parts = []
    spent = 0.0
    for _ in range(max_level):
        kids = _children(tris)
        fine = _apply_rule(func, kids, rule).reshape(-1, 4)
        fine_sum = fine.sum(axis=1)
        err = np.abs(fine_sum - coarse)
        budget = tol * areas / total_area
        done = err <= budget
        # slivers from kink splitting can have budgets below roundoff; stop once
        # the total error, not each local share, fits in tol
        if spent + err.sum() <= tol:
            done[:] = True
        spent += err[done].sum()
        parts.append(fine_sum[done].sum())
        if done.all():
            return float(sum(parts))
        keep = ~done
        tris = kids.reshape(-1, 4, 3, 2)[keep].reshape(-1, 3, 2)
        coarse = fine[keep].ravel()
        areas = np.repeat(areas[keep] / 4.0, 4)
    estimate = float(sum(parts) + coarse.sum())
    raise QuadratureError("adaptive quadrature did not converge", estimate, float(err[~done].sum()))
