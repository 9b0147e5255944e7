"""Group-welfare value of offered trades.

For trade type ``i`` the expected change in summed utility is, up to the
positive factor ``2 C / I_partner``,

    s_gain a_i (u_gain + b_i) - s_give c_i (u_give + d_i)

where ``a_i``/``c_i`` are partner mass times pivot factor on the gain/give
issue and ``b_i``/``d_i`` add up the expected utilities of the partner and of
the other voters on that issue in the pivotal configuration. The trade
benefits the group where this is positive; in the wedge frame that is
``|u_give| < (a_i/c_i) |u_gain| + offset_i``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .equilibrium import _check_mode, _check_n, _check_quadrant, trade_terms
from .geometry import (
    PLAYER,
    REGION_SIGNS,
    RegionMassTable,
    clip,
    intersect,
    mass_table,
    region_mass,
    region_moment,
    wedge_region,
)

__all__ = [
    "WelfareBoundarySet",
    "WelfareReport",
    "welfare_coefficients",
    "welfare_coefficients_from_table",
    "group_expected_value",
    "beneficial_trade_probability",
    "beneficial_halfplane",
    "welfare_mask_grid",
]

log = logging.getLogger(__name__)

OVERLAP_NOTE = (
    "utility pairs offered in both directions count half towards each direction; "
    "pairs offered in neither direction count zero"
)


@dataclass
class WelfareBoundarySet:
    """Coefficients ``a, b, c, d`` per trade type (index ``i-1``) and derived boundary lines."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    s_gain: np.ndarray
    s_give: np.ndarray
    undefined: np.ndarray

    @property
    def slope(self) -> np.ndarray:
        """``a_i / c_i``; equals ``tan(theta_i)`` at an equilibrium."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.a / self.c

    @property
    def offset(self) -> np.ndarray:
        """Shift of the boundary in the wedge frame: ``(a/c) s_gain b - s_give d``."""
        return self.slope * self.s_gain * self.b - self.s_give * self.d

    def linear_form(self, trade_type: int):
        """``(alpha_x, alpha_y, const)`` with group value proportional to ``alpha_x x + alpha_y y + const``."""
        k = trade_type - 1
        a, b, c, d = self.a[k], self.b[k], self.c[k], self.d[k]
        sg, sd = self.s_gain[k], self.s_give[k]
        gain_coef, give_coef = sg * a, -sd * c
        const = sg * a * b - sd * c * d
        if PLAYER[trade_type] == 1:
            return gain_coef, give_coef, const
        return give_coef, gain_coef, const

    def to_dict(self):
        return {
            "a": self.a.tolist(), "b": self.b.tolist(), "c": self.c.tolist(), "d": self.d.tolist(),
            "slope": [None if not np.isfinite(v) else float(v) for v in self.slope],
            "offset": [None if not np.isfinite(v) else float(v) for v in self.offset],
            "undefined": self.undefined.tolist(),
        }


@dataclass
class WelfareReport:
    """Group-welfare summary at one profile.

    ``beneficial_probability`` averages the two trade directions: the chance
    that an offer from a voter giving away the second-issue vote helps the
    group, and the same for offers giving away the first-issue vote.
    ``overlap_weighted_probability`` pools both directions instead, counting
    pairs offered both ways half towards each and dividing by the mass of
    pairs that offer anything; ``unconditional_probability`` is that
    numerator without the division.
    """

    beneficial_probability: float
    player_probabilities: tuple
    overlap_weighted_probability: float
    unconditional_probability: float
    per_type_beneficial_mass: np.ndarray
    per_type_offered_mass: np.ndarray
    offered_mass: float
    expected_group_value: float
    coefficients: WelfareBoundarySet
    theta: np.ndarray
    n: int
    mode: str

    def to_dict(self):
        return {
            "probability": self.beneficial_probability,
            "player_probabilities": list(self.player_probabilities),
            "overlap_weighted_probability": self.overlap_weighted_probability,
            "unconditional_probability": self.unconditional_probability,
            "per_type_beneficial_mass": self.per_type_beneficial_mass.tolist(),
            "per_type_offered_mass": self.per_type_offered_mass.tolist(),
            "offered_mass": self.offered_mass,
            "expected_group_value_per_offer": self.expected_group_value,
            "theta": self.theta.tolist(),
            "n": self.n,
            "mode": self.mode,
            "overlap_weighting": OVERLAP_NOTE,
            "coefficients": self.coefficients.to_dict(),
        }


def _axis_stats(table: RegionMassTable, axis: int):
    """Conditional means of the coordinate on ``axis`` given its sign (vote probabilities from Q, not 𝒬)."""
    key = "x" if axis == 0 else "y"
    issue = axis + 1
    return {
        1: table.halfplane_moments[key + "+"] / table.Q(issue, 1),
        -1: table.halfplane_moments[key + "-"] / table.Q(issue, -1),
    }


def welfare_coefficients_from_table(table: RegionMassTable, n: int, mode: str = "myopic") -> WelfareBoundarySet:
    _check_n(n)
    _check_mode(mode)
    if table.region_moments is None or not table.halfplane_moments:
        raise ValueError("mass table lacks the moment integrals; build it with moments=True")
    big, small = (n - 1) // 2, (n - 3) // 2
    a, b, c, d = (np.full(8, np.nan) for _ in range(4))
    sg, sd = np.zeros(8), np.zeros(8)
    undefined = np.zeros(8, dtype=bool)
    # the total group mass normalizes half-plane moments like the Q's
    scale = 1.0 / table.quadrant_masses.sum()
    for i in range(1, 9):
        t = trade_terms(table, n, i, mode)
        g, dd = t["gain_axis"], t["give_axis"]
        s_g, s_d = t["s_gain"], t["s_give"]
        sg[i - 1], sd[i - 1] = s_g, s_d
        partners = range(5, 9) if PLAYER[i] == 1 else range(1, 5)
        pg = [j for j in partners if REGION_SIGNS[j][g] == -s_g]
        pd = [j for j in partners if REGION_SIGNS[j][dd] == -s_d]
        mean_g = _axis_stats(table, g)
        mean_d = _axis_stats(table, dd)
        a[i - 1] = t["mass_gain"] * t["pivot_gain"]
        c[i - 1] = t["mass_give"] * t["pivot_give"]
        if t["mass_gain"] > 0:
            partner_mean = sum(table.region_moments[j - 1, g] for j in pg) / t["mass_gain"]
            # gain issue: (n-1)/2 others oppose the trader, (n-3)/2 agree
            b[i - 1] = partner_mean + scale * (big * mean_g[-s_g] + small * mean_g[s_g])
        else:
            undefined[i - 1] = True
        if t["mass_give"] > 0:
            partner_mean = sum(table.region_moments[j - 1, dd] for j in pd) / t["mass_give"]
            # give issue: (n-1)/2 others agree with the trader, (n-3)/2 oppose
            d[i - 1] = partner_mean + scale * (big * mean_d[s_d] + small * mean_d[-s_d])
        else:
            undefined[i - 1] = True
    return WelfareBoundarySet(a, b, c, d, sg, sd, undefined)


def welfare_coefficients(dist, theta, n: int = 11, mode: str = "myopic", tol: float | None = None):
    """All 32 boundary coefficients at profile ``theta``."""
    theta = np.asarray(getattr(theta, "theta", theta), dtype=float)
    return welfare_coefficients_from_table(mass_table(dist, theta, tol, moments=True), n, mode)


def group_expected_value(
    dist, theta, n: int, trade_type: int, u, mode: str = "myopic", table: RegionMassTable | None = None,
    tol: float | None = None,
):
    """Expected change in summed group utility when a voter at ``u`` offers ``trade_type``."""
    _check_n(n)
    u = np.asarray(u, dtype=float)
    _check_quadrant(trade_type, u)
    if table is None:
        theta = np.asarray(getattr(theta, "theta", theta), dtype=float)
        table = mass_table(dist, theta, tol, moments=True)
    coef = welfare_coefficients_from_table(table, n, mode)
    k = trade_type - 1
    if coef.undefined[k]:
        raise ValueError(f"welfare coefficients undefined for trade type {trade_type}")
    t = trade_terms(table, n, trade_type, mode)
    factor = 2.0 * t["binom"] / t["partner_total"]
    ax, ay, c0 = coef.linear_form(trade_type)
    val = factor * (ax * u[..., 0] + ay * u[..., 1] + c0)
    return float(val) if np.ndim(val) == 0 else val


def beneficial_halfplane(coef: WelfareBoundarySet, trade_type: int):
    """Coefficients ``(a, b, c)`` of the half-plane ``a x + b y + c >= 0`` where type ``i`` helps the group."""
    return coef.linear_form(trade_type)


def beneficial_trade_probability(
    dist, theta, n: int = 11, mode: str = "myopic", tol: float | None = None, check_equilibrium: bool = True
) -> WelfareReport:
    """Probability that an offered trade has positive expected value for the whole group.

    Each direction is scored separately: the beneficial part of that
    player's offered regions divided by their total offered mass. The
    headline number is the mean of the two directions.
    """
    theta = np.asarray(getattr(theta, "theta", theta), dtype=float)
    table = mass_table(dist, theta, tol, moments=True)
    tol = dist.default_tol if tol is None else tol
    if check_equilibrium:
        from .equilibrium import best_response_from_table

        br = best_response_from_table(table, n, mode)
        gap = np.nanmax(np.abs(br - theta))
        if gap > 1e-5:
            log.warning("profile is not an equilibrium (best-response gap %.3g)", gap)
    coef = welfare_coefficients_from_table(table, n, mode)
    regions = [wedge_region(i, theta[i - 1]) for i in range(1, 9)]
    beneficial = np.zeros(8)
    beneficial_w = np.zeros(8)
    offered_w = np.zeros(8)
    values = np.zeros(8)
    for i in range(1, 9):
        k = i - 1
        partner = k + 4 if k < 4 else k - 4
        overlap = intersect(regions[k], regions[partner])
        offered_w[k] = table.I[k] - 0.5 * region_mass(dist, overlap, tol)
        if coef.undefined[k] or table.I[k] == 0:
            continue
        ax, ay, c0 = coef.linear_form(i)
        good = clip(regions[k], ax, ay, c0)
        beneficial[k] = region_mass(dist, good, tol)
        beneficial_w[k] = beneficial[k] - 0.5 * region_mass(dist, intersect(good, regions[partner]), tol)
        t = trade_terms(table, n, i, mode)
        factor = 2.0 * t["binom"] / t["partner_total"]
        r = regions[k]
        values[k] = factor * (
            ax * region_moment(dist, r, "x", tol) + ay * region_moment(dist, r, "y", tol) + c0 * table.I[k]
        )

    def per_player(arr):
        out = []
        for sl, total in ((slice(0, 4), table.I_S1), (slice(4, 8), table.I_S2)):
            out.append(float(arr[sl].sum() / total) if total > 0 else float("nan"))
        return out

    p1, p2 = per_player(beneficial)
    v1, v2 = per_player(values)
    offered_mass = float(offered_w.sum())
    pooled = float(beneficial_w.sum() / offered_mass) if offered_mass > 0 else float("nan")
    return WelfareReport(
        beneficial_probability=float(np.clip(0.5 * (p1 + p2), 0.0, 1.0)),
        player_probabilities=(p1, p2),
        overlap_weighted_probability=float(np.clip(pooled, 0.0, 1.0)),
        unconditional_probability=float(np.clip(beneficial_w.sum(), 0.0, 1.0)),
        per_type_beneficial_mass=beneficial,
        per_type_offered_mass=table.I.copy(),
        offered_mass=offered_mass,
        expected_group_value=0.5 * (v1 + v2),
        coefficients=coef,
        theta=theta,
        n=n,
        mode=mode,
    )


def welfare_mask_grid(report: WelfareReport, resolution: int):
    """Lattice rows ``(x, y, code)`` for plotting.

    Bit 0: offered as a second-issue giver (R1..R4); bit 1: offered as a
    first-issue giver (R5..R8); bit 2: beneficial as the first; bit 3:
    beneficial as the second. Code 0 marks the no-trade region, and codes
    with both low bits set mark pairs offered in both directions.
    """
    from .geometry import region_mask_grid

    rows = region_mask_grid(report.theta, resolution)
    x, y, mask = rows[:, 0], rows[:, 1], rows[:, 2].astype(np.int64)
    code = np.zeros(len(x), dtype=np.int64)
    for i in range(1, 9):
        inside = (mask >> (i - 1)) & 1 == 1
        low = 1 if i <= 4 else 2
        code[inside] |= low
        if report.coefficients.undefined[i - 1]:
            continue
        ax, ay, c0 = report.coefficients.linear_form(i)
        good = inside & (ax * x + ay * y + c0 > 0)
        code[good] |= low << 2
    return np.column_stack([x, y, code])
