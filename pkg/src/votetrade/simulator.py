"""Monte Carlo play of the three-stage committee game.

Stage 1 draws every voter's utility pair from the distribution. Stage 2 pairs
voters (only voters 0 and 1 in single-trade mode, everyone but one in
all-pairs mode) and executes complementary offers. Stage 3 tallies sincere,
delegated ballots by majority and compares with the no-trade outcome.

Trials are processed in fixed-size blocks; block ``b`` draws from
``np.random.default_rng([seed, b])``, so results do not depend on how blocks
are distributed over workers.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import _check_n
from .geometry import HALF_PI, REGION_SIGNS

__all__ = [
    "SIM_MODES",
    "BLOCK_SIZE",
    "CommitteeRecord",
    "SimulationReport",
    "offer_masks",
    "region_index",
    "play_committee",
    "simulate",
    "empirical_trade_value",
    "pivot_frequency",
    "vote_frequencies",
]

SIM_MODES = ("single", "all-pairs")
BLOCK_SIZE = 8192
_FULL = HALF_PI - 1e-12


def _block_rng(seed, block):
    return np.random.default_rng([int(seed), int(block)])


def _check_theta(theta):
    theta = np.asarray(getattr(theta, "theta", theta), dtype=float)
    if theta.shape != (8,) or np.any(theta < 0) or np.any(theta > HALF_PI):
        raise ValueError("theta must be eight angles in [0, pi/2]")
    return theta


def region_index(u, player: int):
    """Trade type a voter at ``u`` would use as ``player`` (1: gives issue 2, 2: gives issue 1)."""
    x, y = u[..., 0], u[..., 1]
    right = x >= 0
    up = y >= 0
    quad = np.where(up, np.where(right, 1, 2), np.where(right, 4, 3))
    return quad if player == 1 else quad + 4


def offer_masks(u, theta):
    """Boolean arrays ``(gives_issue2, gives_issue1)`` for utility pairs ``u[..., 2]``.

    A pair offers when it lies strictly inside the wedge; a wedge at pi/2
    covers the whole quadrant and a wedge at 0 offers nothing.
    """
    ax = np.abs(u[..., 0])
    ay = np.abs(u[..., 1])
    ang1 = np.arctan2(ay, ax)  # measured from the x-axis
    ang2 = np.arctan2(ax, ay)  # measured from the y-axis
    t1 = theta[region_index(u, 1) - 1]
    t2 = theta[region_index(u, 2) - 1]
    give2 = (t1 > 0) & ((ang1 < t1) | (t1 >= _FULL))
    give1 = (t2 > 0) & ((ang2 < t2) | (t2 >= _FULL))
    return give2, give1


def _pairs(rng, trials, n, mode):
    if mode == "single":
        return np.zeros((trials, 1), dtype=np.int64), np.ones((trials, 1), dtype=np.int64)
    perm = np.argsort(rng.random((trials, n)), axis=1)
    m = (n - 1) // 2
    return perm[:, 0 : 2 * m : 2], perm[:, 1 : 2 * m : 2]


def _play(u, theta, mode, rng):
    """Vectorised game over a block; ``u`` has shape ``(T, n, 2)``."""
    T, n, _ = u.shape
    give2, give1 = offer_masks(u, theta)
    first, second = _pairs(rng, T, n, mode)
    coin = rng.random(first.shape) < 0.5
    rows = np.arange(T)[:, None]
    d1 = give2[rows, first] & give1[rows, second]  # first gives issue 2, second gives issue 1
    d2 = give1[rows, first] & give2[rows, second]
    dir1 = d1 & (~d2 | coin)
    dir2 = d2 & (~d1 | ~coin)

    sincere1 = u[..., 0] > 0
    sincere2 = u[..., 1] > 0
    ballot1 = sincere1.copy()
    ballot2 = sincere2.copy()
    xa, ya = u[rows, first, 0], u[rows, first, 1]
    xb, yb = u[rows, second, 0], u[rows, second, 1]
    # dir1: first's issue-2 ballot follows second; second's issue-1 ballot follows first
    b1_second = np.where(dir1, xa > 0, sincere1[rows, second])
    b1_first = np.where(dir2, xb > 0, sincere1[rows, first])
    b2_second = np.where(dir2, ya > 0, sincere2[rows, second])
    b2_first = np.where(dir1, yb > 0, sincere2[rows, first])
    ballot1[rows, first] = b1_first
    ballot2[rows, first] = b2_first
    ballot1[rows, second] = b1_second
    ballot2[rows, second] = b2_second

    half = n / 2.0
    out1 = np.where(ballot1.sum(axis=1) > half, 1, -1)
    out2 = np.where(ballot2.sum(axis=1) > half, 1, -1)
    cf1 = np.where(sincere1.sum(axis=1) > half, 1, -1)
    cf2 = np.where(sincere2.sum(axis=1) > half, 1, -1)
    return {
        "first": first,
        "second": second,
        "dir1": dir1,
        "dir2": dir2,
        "ballot1": ballot1,
        "ballot2": ballot2,
        "outcome": np.stack([out1, out2], axis=1),
        "counterfactual": np.stack([cf1, cf2], axis=1),
    }


@dataclass
class CommitteeRecord:
    utilities: np.ndarray
    trades: list
    outcome: tuple
    counterfactual: tuple
    ballots: np.ndarray
    welfare: float
    counterfactual_welfare: float

    @property
    def welfare_delta(self) -> float:
        return self.welfare - self.counterfactual_welfare


def _welfare(u, outcome):
    return outcome[..., 0] * u[..., 0].sum(axis=-1) + outcome[..., 1] * u[..., 1].sum(axis=-1)


def play_committee(dist, theta, n: int = 11, mode: str = "single", rng=None, utilities=None) -> CommitteeRecord:
    """Play one committee. Pass ``utilities`` (shape ``(n, 2)``) to skip sampling.

    ``trades`` lists ``(gives_issue2, gives_issue1)`` voter-index pairs.
    """
    _check_n(n)
    if mode not in SIM_MODES:
        raise ValueError(f"mode must be one of {SIM_MODES}")
    theta = _check_theta(theta)
    rng = np.random.default_rng() if rng is None else rng
    if utilities is None:
        u = dist.sample(rng, n).reshape(1, n, 2)
    else:
        u = np.asarray(utilities, dtype=float).reshape(1, n, 2)
    r = _play(u, theta, mode, rng)
    trades = []
    for k in range(r["first"].shape[1]):
        a, b = int(r["first"][0, k]), int(r["second"][0, k])
        if r["dir1"][0, k]:
            trades.append((a, b))
        elif r["dir2"][0, k]:
            trades.append((b, a))
    return CommitteeRecord(
        utilities=u[0],
        trades=trades,
        outcome=tuple(int(v) for v in r["outcome"][0]),
        counterfactual=tuple(int(v) for v in r["counterfactual"][0]),
        ballots=np.stack([r["ballot1"][0], r["ballot2"][0]], axis=1),
        welfare=float(_welfare(u, r["outcome"])[0]),
        counterfactual_welfare=float(_welfare(u, r["counterfactual"])[0]),
    )


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return float("nan"), float("nan")
    if x.size == 1:
        return float(x[0]), float("nan")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


@dataclass
class SimulationReport:
    trials: int
    n: int
    mode: str
    seed: int
    trades_executed: int
    trader_delta: tuple
    group_delta: tuple
    positive_group_delta_fraction: tuple
    beneficial_fraction: tuple
    flip_rate: tuple
    per_type_beneficial_fraction: list = field(default_factory=list)
    fitted_group_value: list = field(default_factory=list, repr=False)

    def to_dict(self):
        def pair(t):
            return {"mean": t[0], "se": t[1]}

        return {
            "trials": self.trials,
            "n": self.n,
            "mode": self.mode,
            "seed": self.seed,
            "trades_executed": self.trades_executed,
            "trader_value_delta": pair(self.trader_delta),
            "group_welfare_delta": pair(self.group_delta),
            "positive_group_delta_fraction": pair(self.positive_group_delta_fraction),
            "beneficial_fraction": pair(self.beneficial_fraction),
            "per_type_beneficial_fraction": self.per_type_beneficial_fraction,
            "flip_rate": {"issue1": self.flip_rate[0], "issue2": self.flip_rate[1]},
            "fitted_group_value": self.fitted_group_value,
        }


def _marginal_delta(u, r, w):
    """Group welfare with every trade minus welfare with trade ``k`` alone undone, per pair slot."""
    rows = np.arange(u.shape[0])[:, None]
    n = u.shape[1]
    counts = np.stack([r["ballot1"].sum(axis=1), r["ballot2"].sum(axis=1)], axis=1)[:, None, :]
    sincere = u > 0
    shift = np.zeros(r["first"].shape + (2,))
    for idx in (r["first"], r["second"]):
        cast = np.stack([r["ballot1"][rows, idx], r["ballot2"][rows, idx]], axis=-1)
        shift += cast.astype(float) - sincere[rows, idx]
    without = np.where(counts - shift > n / 2.0, 1, -1)
    totals = u.sum(axis=1)[:, None, :]
    return w[:, None] - (without * totals).sum(axis=-1)


def _run_block(dist, theta, n, mode, seed, block, size):
    rng = _block_rng(seed, block)
    u = dist.sample(rng, size * n).reshape(size, n, 2)
    r = _play(u, theta, mode, rng)
    w = _welfare(u, r["outcome"])
    w0 = _welfare(u, r["counterfactual"])
    rows = np.arange(size)[:, None]
    executed = r["dir1"] | r["dir2"]
    # giver of issue 2 plays role 1, giver of issue 1 role 2
    role1 = np.where(r["dir1"], r["first"], r["second"])
    role2 = np.where(r["dir1"], r["second"], r["first"])
    sides = []
    deltas = []
    gdelta = _marginal_delta(u, r, w)
    for role, idx in ((1, role1), (2, role2)):
        pos = u[rows, idx]
        own = r["outcome"][:, None, :] * pos - r["counterfactual"][:, None, :] * pos
        deltas.append(own.sum(axis=-1)[executed])
        types = region_index(pos, role)[executed]
        sides.append(np.column_stack([types, pos[executed], gdelta[executed]]))
    give2, give1 = offer_masks(u, theta)
    offers = []
    for role, mask in ((1, give2), (2, give1)):
        pos = u[mask]
        offers.append(np.column_stack([region_index(pos, role), pos, np.full(len(pos), role)]))
    return {
        "group_delta": w - w0,
        "trades": executed.sum(axis=1),
        "offers": np.concatenate(offers),
        "trade_positive": (gdelta[executed] > 0),
        "trader_delta": np.concatenate(deltas),
        "sides": np.concatenate(sides),
        "flips": r["outcome"] != r["counterfactual"],
        "utilities": u,
        "outcome": r["outcome"],
        "counterfactual": r["counterfactual"],
    }


def _fit(sides):
    """Per trade type least squares of group delta on (1, x, y)."""
    coefs = {}
    for i in range(1, 9):
        s = sides[sides[:, 0] == i]
        if len(s) < 3:
            continue
        X = np.column_stack([np.ones(len(s)), s[:, 1], s[:, 2]])
        coefs[i], *_ = np.linalg.lstsq(X, s[:, 3], rcond=None)
    return coefs


def _classify(offers, coefs):
    hits = np.zeros(len(offers), dtype=bool)
    known = np.zeros(len(offers), dtype=bool)
    for i, beta in coefs.items():
        m = offers[:, 0] == i
        hits[m] = beta[0] + beta[1] * offers[m, 1] + beta[2] * offers[m, 2] > 0
        known[m] = True
    return hits, known


def _beneficial_share(offers, coefs):
    """Mean over the two directions of the share of offers with positive fitted group value."""
    hits, known = _classify(offers, coefs)
    shares = []
    for role in (1, 2):
        m = known & (offers[:, 3] == role)
        if m.any():
            shares.append(hits[m].mean())
    return float(np.mean(shares)) if shares else float("nan"), hits, known


def simulate(
    dist,
    theta,
    n: int = 11,
    mode: str = "single",
    trials: int = 100_000,
    seed: int = 0,
    workers: int = 1,
    dump_path=None,
    dump_limit: int = 1000,
) -> SimulationReport:
    """Aggregate many committees into a :class:`SimulationReport`.

    The committee welfare delta is measured against each trial's no-trade
    outcome. Each executed trade is credited with its marginal effect: welfare
    with all trades minus welfare with that trade alone undone. The beneficial
    fraction fits, per trade type, a linear model of that marginal delta on
    the trader's utilities, then classifies
    every offered utility pair by the fitted sign and averages the two trade
    directions. Its standard error is a leave-one-block-out jackknife.
    """
    _check_n(n)
    if mode not in SIM_MODES:
        raise ValueError(f"mode must be one of {SIM_MODES}")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    theta = _check_theta(theta)
    nblocks = -(-trials // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, trials - b * BLOCK_SIZE) for b in range(nblocks)]

    def run(b):
        return _run_block(dist, theta, n, mode, seed, b, sizes[b])

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            blocks = list(pool.map(run, range(nblocks)))
    else:
        blocks = [run(b) for b in range(nblocks)]

    if dump_path is not None:
        _dump(dump_path, blocks, dump_limit)

    group = np.concatenate([b["group_delta"] for b in blocks])
    trader = np.concatenate([b["trader_delta"] for b in blocks])
    positive = np.concatenate([b["trade_positive"] for b in blocks])
    flips = np.concatenate([b["flips"] for b in blocks])
    sides_per_block = [b["sides"] for b in blocks]
    offers_per_block = [b["offers"] for b in blocks]
    offers = np.concatenate(offers_per_block)

    coefs = _fit(np.concatenate(sides_per_block))
    share, hits, known = _beneficial_share(offers, coefs)
    per_type = []
    for i in range(1, 9):
        m = (offers[:, 0] == i) & known
        per_type.append(float(hits[m].mean()) if m.any() else None)
    se = _jackknife_se(sides_per_block, offers_per_block) if nblocks >= 2 else float("nan")

    return SimulationReport(
        trials=trials,
        n=n,
        mode=mode,
        seed=seed,
        trades_executed=int(sum(int(b["trades"].sum()) for b in blocks)),
        trader_delta=_mean_se(trader),
        group_delta=_mean_se(group),
        positive_group_delta_fraction=_mean_se(positive.astype(float)),
        beneficial_fraction=(float(share), se),
        flip_rate=tuple(float(v) for v in flips.mean(axis=0)),
        per_type_beneficial_fraction=per_type,
        fitted_group_value={i: c.tolist() for i, c in coefs.items()},
    )


def _jackknife_se(sides_per_block, offers_per_block, groups: int = 20):
    k = min(groups, len(sides_per_block))
    sides = [np.concatenate(sides_per_block[g::k]) for g in range(k)]
    offers = [np.concatenate(offers_per_block[g::k]) for g in range(k)]
    estimates = []
    for g in range(k):
        fit = _fit(np.concatenate([c for j, c in enumerate(sides) if j != g]))
        rest = np.concatenate([c for j, c in enumerate(offers) if j != g])
        estimates.append(_beneficial_share(rest, fit)[0])
    est = np.array(estimates)
    return float(math.sqrt((k - 1) / k * np.sum((est - est.mean()) ** 2)))


def _dump(path, blocks, limit):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "trades", "outcome1", "outcome2", "counterfactual1", "counterfactual2", "group_delta"])
        t = 0
        for b in blocks:
            for k in range(len(b["group_delta"])):
                if t >= limit:
                    return
                w.writerow([
                    t, int(b["trades"][k]), int(b["outcome"][k, 0]), int(b["outcome"][k, 1]),
                    int(b["counterfactual"][k, 0]), int(b["counterfactual"][k, 1]), float(b["group_delta"][k]),
                ])
                t += 1


def _partner_region_sample(dist, rng, size, theta, player, max_rejections=100_000):
    """Draw partners that offer the complement of a ``player``-side trade."""
    out = []
    got = 0
    while got < size:
        batch = max(1024, 2 * (size - got))
        cand = dist.sample(rng, batch)
        give2, give1 = offer_masks(cand, theta)
        ok = give1 if player == 1 else give2
        if not ok.any() and batch >= max_rejections:
            raise ValueError("no partner offers the complementary trade (rejection cap reached)")
        if not ok.any():
            max_rejections -= batch
            if max_rejections <= 0:
                raise ValueError("no partner offers the complementary trade (rejection cap reached)")
            continue
        out.append(cand[ok])
        got += int(ok.sum())
    return np.concatenate(out)[:size]


def empirical_trade_value(dist, theta, n: int, trade_type: int, u, trials: int = 100_000, seed: int = 0):
    """Monte Carlo mean ± standard error of a trader's utility change for a forced trade."""
    _check_n(n)
    theta = _check_theta(theta)
    if trade_type not in REGION_SIGNS:
        raise ValueError("trade type must be 1..8")
    u = np.asarray(u, dtype=float)
    sx, sy = REGION_SIGNS[trade_type]
    if u[0] * sx < 0 or u[1] * sy < 0:
        raise ValueError(f"utility pair not in the quadrant of trade type {trade_type}")
    player = 1 if trade_type <= 4 else 2
    vals = []
    for b in range(-(-trials // BLOCK_SIZE)):
        size = min(BLOCK_SIZE, trials - b * BLOCK_SIZE)
        rng = _block_rng(seed, b)
        partner = _partner_region_sample(dist, rng, size, theta, player)
        others = dist.sample(rng, size * (n - 2)).reshape(size, n - 2, 2)
        b1 = (others[..., 0] > 0).sum(axis=1)
        b2 = (others[..., 1] > 0).sum(axis=1)
        if player == 1:
            # focal gives issue-2 vote, partner gives issue-1 vote
            t1 = b1 + 2 * (u[0] > 0)
            t2 = b2 + 2 * (partner[:, 1] > 0)
        else:
            t1 = b1 + 2 * (partner[:, 0] > 0)
            t2 = b2 + 2 * (u[1] > 0)
        c1 = b1 + (u[0] > 0) + (partner[:, 0] > 0)
        c2 = b2 + (u[1] > 0) + (partner[:, 1] > 0)
        half = n / 2.0
        o1, o2 = np.where(t1 > half, 1, -1), np.where(t2 > half, 1, -1)
        k1, k2 = np.where(c1 > half, 1, -1), np.where(c2 > half, 1, -1)
        vals.append((o1 - k1) * u[0] + (o2 - k2) * u[1])
    return _mean_se(np.concatenate(vals))


def pivot_frequency(dist, n: int, trials: int = 100_000, seed: int = 0, issue: int = 1):
    """Empirical chance that voter 1 is the swing vote on ``issue`` given voters 0 and 1 disagree.

    Voter 0 favours the issue and voter 1 opposes it; voter 1 is the swing
    vote when switching their ballot changes the majority outcome.
    """
    _check_n(n)
    j = issue - 1
    hits = []
    for b in range(-(-trials // BLOCK_SIZE)):
        size = min(BLOCK_SIZE, trials - b * BLOCK_SIZE)
        rng = _block_rng(seed, b)
        u = dist.sample(rng, size * n).reshape(size, n, 2)
        ok = (u[:, 0, j] > 0) & (u[:, 1, j] <= 0)
        votes = u[ok, :, j] > 0
        before = votes.sum(axis=1) > n / 2.0
        votes[:, 1] = True
        after = votes.sum(axis=1) > n / 2.0
        hits.append(before != after)
    return _mean_se(np.concatenate(hits).astype(float))


def vote_frequencies(dist, theta, n: int = 11, trials: int = 100_000, seed: int = 0):
    """Probability that a non-focal voter's final ballot supports each issue under all-pairs trading.

    Voter 0 is the focal voter; trials where voter 0 is the unpaired voter are
    skipped. Per trial, the share of supporting ballots among the voters other
    than voter 0 and their partner is recorded. Returns a dict mapping
    ``"q1_plus"``, ``"q1_minus"``, ``"q2_plus"``, ``"q2_minus"`` to (mean, se).
    """
    _check_n(n)
    theta = _check_theta(theta)
    s1, s2 = [], []
    for b in range(-(-trials // BLOCK_SIZE)):
        size = min(BLOCK_SIZE, trials - b * BLOCK_SIZE)
        rng = _block_rng(seed, b)
        u = dist.sample(rng, size * n).reshape(size, n, 2)
        r = _play(u, theta, "all-pairs", rng)
        first, second = r["first"], r["second"]
        partner = np.where(first == 0, second, np.where(second == 0, first, -1)).max(axis=1)
        ok = partner >= 0
        mask = np.ones((size, n), dtype=bool)
        mask[:, 0] = False
        mask[np.arange(size), np.where(ok, partner, 0)] = False
        mask[~ok] = False
        s1.append(((r["ballot1"] & mask).sum(axis=1) / (n - 2))[ok])
        s2.append(((r["ballot2"] & mask).sum(axis=1) / (n - 2))[ok])
    p1 = _mean_se(np.concatenate(s1))
    p2 = _mean_se(np.concatenate(s2))
    return {
        "q1_plus": p1,
        "q1_minus": (1.0 - p1[0], p1[1]),
        "q2_plus": p2,
        "q2_minus": (1.0 - p2[0], p2[1]),
    }
