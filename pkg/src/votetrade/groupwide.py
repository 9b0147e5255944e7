"""Effective vote probabilities when every voter pair may trade.

A non-focal voter ends up casting a vote for an issue either because they
favour it and kept their vote, or because they handed it to a partner who
favours it. The correction to each half-plane probability only involves the
region masses; the both-directions overlaps ``J`` cancel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import RegionMassTable, intersect, mass_table, region_mass, wedge_region

__all__ = ["EffectiveQSet", "effective_q", "effective_q_from_table", "effective_q_with_overlaps", "j_integrals"]

CLAMP = 1e-12


@dataclass(frozen=True)
class EffectiveQSet:
    q1_plus: float
    q1_minus: float
    q2_plus: float
    q2_minus: float

    def Q(self, issue: int, sign: int) -> float:
        return {(1, 1): self.q1_plus, (1, -1): self.q1_minus, (2, 1): self.q2_plus, (2, -1): self.q2_minus}[
            (issue, sign)
        ]

    def as_tuple(self):
        return (self.q1_plus, self.q1_minus, self.q2_plus, self.q2_minus)

    def to_dict(self):
        return {"q1_plus": self.q1_plus, "q1_minus": self.q1_minus,
                "q2_plus": self.q2_plus, "q2_minus": self.q2_minus}


def _trade_factor(n: int) -> float:
    if n < 3 or n % 2 == 0:
        raise ValueError(f"committee size must be odd and >= 3, got {n}")
    return (n - 3) / (n - 2)


def effective_q_from_table(table: RegionMassTable, n: int, clamp: bool = True) -> EffectiveQSet:
    I = np.concatenate([[0.0], table.I])  # 1-based
    k = _trade_factor(n)
    shift1 = k * ((I[6] + I[7]) * (I[1] + I[4]) - (I[5] + I[8]) * (I[2] + I[3]))
    shift2 = k * ((I[3] + I[4]) * (I[5] + I[6]) - (I[1] + I[2]) * (I[7] + I[8]))
    vals = np.array([
        table.q1_plus + shift1,
        table.q1_minus - shift1,
        table.q2_plus + shift2,
        table.q2_minus - shift2,
    ])
    if clamp:
        vals = np.clip(vals, CLAMP, 1.0 - CLAMP)
    return EffectiveQSet(*map(float, vals))


def effective_q(dist, theta, n: int, tol: float | None = None) -> EffectiveQSet:
    """Probabilities that a random other voter finally votes for/against each issue."""
    return effective_q_from_table(mass_table(dist, theta, tol, overlaps=False), n)


def effective_q_with_overlaps(table: RegionMassTable, n: int) -> EffectiveQSet:
    """The same probabilities written with the explicit half-weighted overlap products.

    Kept as an independent arithmetic route for checking the cancellation.
    """
    I = np.concatenate([[0.0], table.I])
    J = np.concatenate([[0.0], table.J])
    k = _trade_factor(n)
    both_x_pos = J[1] + J[4]
    both_x_neg = J[2] + J[3]
    both_y_pos = J[1] + J[2]
    both_y_neg = J[3] + J[4]
    gain1 = (I[6] + I[7]) * (I[1] + I[4]) - 0.5 * both_x_neg * both_x_pos
    lose1 = (I[5] + I[8]) * (I[2] + I[3]) - 0.5 * both_x_pos * both_x_neg
    gain2 = (I[3] + I[4]) * (I[5] + I[6]) - 0.5 * both_y_neg * both_y_pos
    lose2 = (I[1] + I[2]) * (I[7] + I[8]) - 0.5 * both_y_pos * both_y_neg
    return EffectiveQSet(
        table.q1_plus + k * (gain1 - lose1),
        table.q1_minus + k * (lose1 - gain1),
        table.q2_plus + k * (gain2 - lose2),
        table.q2_minus + k * (lose2 - gain2),
    )


def j_integrals(dist, theta, tol: float | None = None) -> np.ndarray:
    """Masses of the both-directions overlaps ``R_k ∩ R_{k+4}``, k = 1..4."""
    theta = np.asarray(theta, dtype=float)
    return np.array([
        region_mass(dist, intersect(wedge_region(k, theta[k - 1]), wedge_region(k + 4, theta[k + 3])), tol)
        for k in range(1, 5)
    ])
