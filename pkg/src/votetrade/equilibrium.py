"""Expected value of offered trades, the best-response map and its fixed points.

Trade type ``i`` (1..8) is the offer made from region ``R_i``. Types 1-4 gain a
vote on the first issue and give away the second; types 5-8 the reverse. For
every type the offer is worth

    2 |u_gain| P(partner disagrees on gain issue) P(partner pivotal)
  - 2 |u_give| P(partner disagrees on give issue) P(trader pivotal)

and the best response is the wedge where this is positive.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import DomainError
from .geometry import HALF_PI, PLAYER, REGION_SIGNS, RegionMassTable, mass_table, naive_profile
from .groupwide import effective_q_from_table

__all__ = [
    "MODES",
    "StrategyProfile",
    "SolverOptions",
    "EquilibriumSolution",
    "TradingError",
    "ConvergenceError",
    "pivot_probability",
    "pivot_factor",
    "trade_terms",
    "trade_expected_value",
    "best_response",
    "best_response_from_table",
    "theta_min",
    "project",
    "residual",
    "solve_equilibrium",
    "find_equilibria",
    "offers",
]

log = logging.getLogger(__name__)

MODES = ("myopic", "groupwide")
PAIRS = ((0, 2), (1, 3), (4, 6), (5, 7))


class TradingError(ValueError):
    """The game is degenerate: a vote probability or a partner region has zero mass."""


class ConvergenceError(RuntimeError):
    """Fixed-point iteration hit its iteration cap.

    ``theta`` is the last iterate and ``history`` the residual sequence.
    """

    def __init__(self, message, theta, history):
        super().__init__(message)
        self.theta = theta
        self.history = history


@dataclass(frozen=True)
class StrategyProfile:
    """Eight wedge angles in [0, pi/2]; ``theta[i-1]`` bounds region ``R_i``."""

    theta: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.theta, dtype=float)
        if t.shape != (8,):
            raise DomainError("a strategy profile has exactly eight angles")
        if np.any((t < 0) | (t > HALF_PI)):
            raise DomainError("angles must lie in [0, pi/2]")
        object.__setattr__(self, "theta", t)

    @classmethod
    def naive(cls):
        return cls(naive_profile())

    @property
    def slopes(self) -> np.ndarray:
        return np.tan(self.theta)


@dataclass(frozen=True)
class SolverOptions:
    n: int = 11
    damping: float = 0.5
    max_iterations: int = 500
    tolerance: float = 1e-8
    starts: int = 1
    seed: int = 0
    quad_tol: float | None = None
    workers: int = 1

    def __post_init__(self):
        _check_n(self.n)
        if not (0.0 < self.damping <= 1.0):
            raise ValueError("damping must lie in (0, 1]")
        if self.max_iterations < 1 or self.starts < 1:
            raise ValueError("max_iterations and starts must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


@dataclass
class EquilibriumSolution:
    theta_star: np.ndarray
    residual: float
    iterations: int
    mode: str
    n: int
    converged: bool
    undefined: np.ndarray = field(default_factory=lambda: np.zeros(8, dtype=bool))
    history: list = field(default_factory=list, repr=False)
    table: RegionMassTable | None = field(default=None, repr=False)

    @property
    def profile(self) -> StrategyProfile:
        return StrategyProfile(self.theta_star)


def _check_n(n):
    if isinstance(n, bool) or int(n) != n or n < 3 or n % 2 == 0:
        raise DomainError(f"committee size must be an odd integer >= 3, got {n!r}")


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def pivot_probability(q_minus: float, q_plus: float, n: int) -> float:
    """``C(n-2, (n-3)/2) q_minus^((n-1)/2) q_plus^((n-3)/2)``."""
    _check_n(n)
    n = int(n)
    return math.comb(n - 2, (n - 3) // 2) * q_minus ** ((n - 1) // 2) * q_plus ** ((n - 3) // 2)


def pivot_factor(q_own: float, q_other: float, n: int, role: str) -> float:
    """Pivot probability without the binomial coefficient.

    ``role="gain"``: the trader gains a vote on an issue they favour with sign
    ``own``; the others must split with the majority against them.
    ``role="give"``: the trader's own vote is the one that is lost.
    """
    big, small = (n - 1) // 2, (n - 3) // 2
    if role == "gain":
        return q_other**big * q_own**small
    return q_own**big * q_other**small


def _vote_probs(table, n, mode):
    if mode == "groupwide":
        return effective_q_from_table(table, n)
    return table


def trade_terms(table: RegionMassTable, n: int, trade_type: int, mode: str = "myopic") -> dict:
    """Partner masses and pivot factors entering the value of trade ``trade_type``.

    Returns a dict with ``gain_axis`` / ``give_axis`` (0 = x, 1 = y), own
    signs, the partner region masses ``mass_gain`` (partner disagrees on the
    gain issue) and ``mass_give`` (disagrees on the give issue), the partner
    total ``partner_total`` and the pivot factors ``pivot_gain``/``pivot_give``.
    """
    _check_mode(mode)
    player = PLAYER[trade_type]
    signs = REGION_SIGNS[trade_type]
    g = 0 if player == 1 else 1
    d = 1 - g
    s_g, s_d = signs[g], signs[d]
    partners = range(5, 9) if player == 1 else range(1, 5)
    mass_gain = sum(table.I[j - 1] for j in partners if REGION_SIGNS[j][g] == -s_g)
    mass_give = sum(table.I[j - 1] for j in partners if REGION_SIGNS[j][d] == -s_d)
    probs = _vote_probs(table, n, mode)
    for issue in (1, 2):
        for sign in (1, -1):
            if probs.Q(issue, sign) <= 0:
                raise TradingError("a vote probability is zero; nobody can be pivotal")
    pg = pivot_factor(probs.Q(g + 1, s_g), probs.Q(g + 1, -s_g), n, "gain")
    pd = pivot_factor(probs.Q(d + 1, s_d), probs.Q(d + 1, -s_d), n, "give")
    return {
        "gain_axis": g,
        "give_axis": d,
        "s_gain": s_g,
        "s_give": s_d,
        "mass_gain": float(mass_gain),
        "mass_give": float(mass_give),
        "partner_total": float(table.I_S2 if player == 1 else table.I_S1),
        "pivot_gain": pg,
        "pivot_give": pd,
        "binom": math.comb(n - 2, (n - 3) // 2),
    }


def _check_quadrant(trade_type, u):
    sx, sy = REGION_SIGNS[trade_type]
    if np.any(u[..., 0] * sx < 0) or np.any(u[..., 1] * sy < 0):
        raise DomainError(f"utility pair not in the quadrant of trade type {trade_type}")
    if np.any(np.abs(u) > 1):
        raise DomainError("utility pair outside [-1, 1]^2")


def trade_expected_value(
    dist, theta, n: int, trade_type: int, u, mode: str = "myopic", table: RegionMassTable | None = None,
    tol: float | None = None,
):
    """Expected utility change for a trader at ``u = (x, y)`` offering ``trade_type``.

    ``u`` may be an array of shape ``(..., 2)``; the result has shape ``...``.
    """
    _check_n(n)
    if trade_type not in REGION_SIGNS:
        raise DomainError(f"trade type must be 1..8, got {trade_type!r}")
    u = np.asarray(u, dtype=float)
    _check_quadrant(trade_type, u)
    if table is None:
        table = mass_table(dist, np.asarray(getattr(theta, "theta", theta)), tol, overlaps=False)
    t = trade_terms(table, n, trade_type, mode)
    if t["partner_total"] <= 0:
        raise TradingError(f"no partner offers the complement of trade type {trade_type}")
    c = 2.0 * t["binom"] / t["partner_total"]
    val = c * (
        np.abs(u[..., t["gain_axis"]]) * t["mass_gain"] * t["pivot_gain"]
        - np.abs(u[..., t["give_axis"]]) * t["mass_give"] * t["pivot_give"]
    )
    return float(val) if np.ndim(val) == 0 else val


def best_response_from_table(table: RegionMassTable, n: int, mode: str = "myopic") -> np.ndarray:
    """Angles at which each offer is worth exactly zero.

    Components whose numerator and denominator both vanish are undefined and
    returned as NaN; a vanishing denominator alone gives pi/2.
    """
    out = np.empty(8)
    for i in range(1, 9):
        t = trade_terms(table, n, i, mode)
        num = t["mass_gain"] * t["pivot_gain"]
        den = t["mass_give"] * t["pivot_give"]
        if den <= 0:
            out[i - 1] = np.nan if num <= 0 else HALF_PI
        else:
            out[i - 1] = math.atan(num / den)
    return out


def best_response(dist, theta, n: int = 11, mode: str = "myopic", tol: float | None = None) -> StrategyProfile:
    """Best-response profile; undefined (0/0) components are NaN in ``.theta``."""
    _check_n(n)
    theta = np.asarray(getattr(theta, "theta", theta), dtype=float)
    table = mass_table(dist, theta, tol, overlaps=False)
    br = best_response_from_table(table, n, mode)
    prof = StrategyProfile.__new__(StrategyProfile)
    object.__setattr__(prof, "theta", br)
    return prof


def _q_ratios(probs, n):
    """The eight vote-probability ratios appearing in the best response."""
    big, small = (n - 1) // 2, (n - 3) // 2
    q1p, q1m, q2p, q2m = probs.Q(1, 1), probs.Q(1, -1), probs.Q(2, 1), probs.Q(2, -1)
    r1 = q1m**big * q1p**small / (q2m**small * q2p**big)
    r2 = q1m**small * q1p**big / (q2m**small * q2p**big)
    r3 = q1m**small * q1p**big / (q2m**big * q2p**small)
    r4 = q1m**big * q1p**small / (q2m**big * q2p**small)
    return np.array([r1, r2, r3, r4, 1 / r3, 1 / r4, 1 / r1, 1 / r2])


def theta_min(table: RegionMassTable, n: int, mode: str = "myopic") -> float:
    """Lower bound ``arctan(Q_min)`` on the pair sums of a non-trivial equilibrium."""
    return math.atan(float(_q_ratios(_vote_probs(table, n, mode), n).min()))


def project(theta, tmin: float) -> np.ndarray:
    """Map a profile into the region where every opposite-quadrant pair sums to at least ``tmin``."""
    t = np.clip(np.asarray(theta, dtype=float), 0.0, HALF_PI).copy()
    for a, b in PAIRS:
        s = t[a] + t[b]
        if s < tmin:
            if s <= 0:
                t[a] = t[b] = 0.5 * tmin
            else:
                t[a] *= tmin / s
                t[b] *= tmin / s
    return np.clip(t, 0.0, HALF_PI)


def residual(dist, theta, n: int = 11, mode: str = "myopic", tol: float | None = None) -> float:
    """Sup-norm distance between ``theta`` and its best response (undefined components skipped)."""
    theta = np.asarray(getattr(theta, "theta", theta), dtype=float)
    br = best_response(dist, theta, n, mode, tol).theta
    d = np.abs(theta - br)
    d = d[~np.isnan(d)]
    return float(d.max()) if d.size else 0.0


def solve_equilibrium(
    dist,
    opts: SolverOptions | None = None,
    mode: str = "myopic",
    start=None,
) -> EquilibriumSolution:
    """Damped, projected fixed-point iteration ``theta <- (1 - lam) theta + lam BR(theta)``.

    Starts from the naive profile unless ``start`` is given. The damping
    factor halves whenever the residual grows and recovers towards its
    initial value while the residual falls.
    """
    opts = opts or SolverOptions()
    _check_mode(mode)
    n = opts.n
    theta = naive_profile() if start is None else np.asarray(start, dtype=float).copy()
    lam = opts.damping
    history = []
    prev = math.inf
    br = None
    for it in range(1, opts.max_iterations + 1):
        table = mass_table(dist, theta, opts.quad_tol, overlaps=False)
        br = best_response_from_table(table, n, mode)
        filled = np.where(np.isnan(br), theta, br)
        res = float(np.max(np.abs(theta - filled)))
        history.append(res)
        if res <= opts.tolerance:
            log.debug("converged after %d iterations, residual %.3g", it, res)
            return EquilibriumSolution(
                theta_star=theta, residual=res, iterations=it, mode=mode, n=n, converged=True,
                undefined=np.isnan(br), history=history, table=table,
            )
        if res > prev:
            lam = max(0.5 * lam, 1e-3)
        else:
            lam = min(opts.damping, 1.25 * lam)
        prev = res
        theta = project((1.0 - lam) * theta + lam * filled, theta_min(table, n, mode))
    raise ConvergenceError(
        f"no fixed point within {opts.max_iterations} iterations (residual {history[-1]:.3g})", theta, history
    )


def _random_start(rng, dist, opts, mode):
    tmin = theta_min(mass_table(dist, naive_profile(), opts.quad_tol, overlaps=False), opts.n, mode)
    while True:
        t = rng.uniform(0.0, HALF_PI, size=8)
        if all(t[a] + t[b] >= tmin for a, b in PAIRS):
            return t


def find_equilibria(dist, opts: SolverOptions | None = None, mode: str = "myopic", dedup_tol: float = 1e-4):
    """Multi-start search; returns the distinct converged fixed points.

    Start 0 is the naive profile; start ``k`` draws uniformly from the
    admissible region using ``default_rng([seed, k])``. Non-converged starts
    are logged and skipped.
    """
    opts = opts or SolverOptions()

    def run(k):
        start = None
        if k > 0:
            start = _random_start(np.random.default_rng([opts.seed, k]), dist, opts, mode)
        try:
            return solve_equilibrium(dist, opts, mode, start=start)
        except ConvergenceError as exc:
            log.warning("start %d did not converge: %s", k, exc)
            return None

    if opts.workers > 1:
        with ThreadPoolExecutor(opts.workers) as pool:
            results = list(pool.map(run, range(opts.starts)))
    else:
        results = [run(k) for k in range(opts.starts)]

    distinct = []
    for sol in results:
        if sol is None:
            continue
        if all(np.max(np.abs(sol.theta_star - other.theta_star)) > dedup_tol for other in distinct):
            distinct.append(sol)
    return distinct


def offers(theta, u) -> tuple:
    """Which directions a voter at ``u`` offers: ``(gives_second_issue, gives_first_issue)``."""
    from .geometry import wedge_region

    theta = np.asarray(getattr(theta, "theta", theta), dtype=float)
    x, y = float(u[0]), float(u[1])
    give2 = any(wedge_region(i, theta[i - 1]).contains(x, y) for i in range(1, 5))
    give1 = any(wedge_region(i, theta[i - 1]).contains(x, y) for i in range(5, 9))
    return give2, give1
