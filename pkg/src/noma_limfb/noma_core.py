"""Two-user downlink NOMA: SINRs, QoS power-split interval and sum-rate optimum.

User 1 is the strong user throughout: it decodes and cancels user 2's message
before decoding its own.  ``beta`` is the fraction of the total power ``p``
given to user 1.

All functions accept numpy arrays in place of scalars and broadcast, which is
how the Monte Carlo harness evaluates whole batches of samples.  Internally
gains are multiplied by ``p`` (``G = p * g``) so the stationary-point
quadratic keeps its textbook form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

LN2 = math.log(2.0)


@dataclass(frozen=True)
class LinkParams:
    p: float
    sigma2: float = 1.0
    r_th: float = 1.0

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError(f"p must be positive, got {self.p}")
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if not self.r_th >= 0:
            raise ValueError(f"r_th must be nonnegative, got {self.r_th}")

    @property
    def epsilon(self) -> float:
        return 2.0**self.r_th - 1.0

    @classmethod
    def from_snr_db(cls, snr_db: float, r_th: float = 1.0) -> "LinkParams":
        return cls(p=10.0 ** (snr_db / 10.0), sigma2=1.0, r_th=r_th)


@dataclass(frozen=True)
class EffectiveGains:
    """Channel power gains seen by the two receivers.

    g11, g22: own-beam gains of the strong and the weak user.
    g12: strong user's gain on the weak user's beam.
    g21: weak user's gain on the strong user's beam (its interference).
    """

    g11: float
    g22: float
    g12: float
    g21: float


class Candidate(Enum):
    MIN = "min"
    STATIONARY = "stationary"
    MAX = "max"


@dataclass(frozen=True)
class BetaSolution:
    beta1_min: float
    beta2_max: float
    beta_sic_max: float
    beta0: Optional[float]
    beta_star: Optional[float]
    feasible: bool
    active_candidate: Optional[Candidate]

    @property
    def interval(self) -> tuple[float, float]:
        return max(0.0, self.beta1_min), min(self.beta2_max, self.beta_sic_max, 1.0)


@dataclass(frozen=True)
class RateReport:
    r1: float
    r2: float
    r_sum: float
    sinr1: float
    sinr2: float
    sinr_1to2: float


def sinr_all(g: EffectiveGains, lp: LinkParams, beta):
    """Return ``(sinr1, sinr2, sinr_1to2)`` at power split ``beta``."""
    p, s2 = lp.p, lp.sigma2
    sinr1 = beta * p * g.g11 / s2
    sinr2 = (1 - beta) * p * g.g22 / (beta * p * g.g21 + s2)
    sinr_1to2 = (1 - beta) * p * g.g12 / (beta * p * g.g11 + s2)
    return sinr1, sinr2, sinr_1to2


def sum_rate(g: EffectiveGains, lp: LinkParams, beta):
    sinr1, sinr2, _ = sinr_all(g, lp, beta)
    return np.log2(1 + sinr1) + np.log2(1 + sinr2)


def sum_rate_derivative(g: EffectiveGains, lp: LinkParams, beta):
    """Analytic ``d R_sum / d beta`` in bit/s/Hz per unit of ``beta``."""
    s2 = lp.sigma2
    G11, G22, G21 = lp.p * g.g11, lp.p * g.g22, lp.p * g.g21
    strong = s2 * (G11 - G21) / ((beta * G11 + s2) * (beta * G21 + s2))
    weak = (G22 - G21) / (beta * G21 + s2 + (1 - beta) * G22)
    return (strong - weak) / LN2


def rates(g: EffectiveGains, lp: LinkParams, beta: float) -> RateReport:
    sinr1, sinr2, sinr_1to2 = (float(v) for v in sinr_all(g, lp, beta))
    r1, r2 = math.log2(1 + sinr1), math.log2(1 + sinr2)
    return RateReport(r1, r2, r1 + r2, sinr1, sinr2, sinr_1to2)


def beta_bounds(g: EffectiveGains, lp: LinkParams):
    """QoS limits on ``beta``: ``(beta1_min, beta2_max, beta_sic_max)``.

    Nonpositive numerators are kept as negative bounds.  A zero strong-user
    gain gives ``beta1_min = inf``.
    """
    eps, s2, p = lp.epsilon, lp.sigma2, lp.p
    g11, g22, g12, g21 = (np.asarray(v, dtype=float) for v in (g.g11, g.g22, g.g12, g.g21))
    with np.errstate(divide="ignore", invalid="ignore"):
        b1 = np.where(g11 > 0, eps * s2 / (p * g11), np.inf)
        num2 = p * g22 - eps * s2
        den2 = p * g22 + eps * p * g21
        b2 = np.where(den2 > 0, num2 / den2, np.where(num2 >= 0, np.inf, -np.inf))
        num_s = p * g12 - eps * s2
        den_s = p * g12 + eps * p * g11
        bs = np.where(den_s > 0, num_s / den_s, np.where(num_s >= 0, np.inf, -np.inf))
    if b1.ndim == 0 and np.ndim(b2) == 0 and np.ndim(bs) == 0:
        return float(b1), float(b2), float(bs)
    return b1, b2, bs


def quadratic_coefficients(g: EffectiveGains, lp: LinkParams):
    """Coefficients ``(a, b, c)`` whose root in (0, 1) zeroes the sum-rate slope."""
    s2 = lp.sigma2
    G11, G22, G21 = lp.p * g.g11, lp.p * g.g22, lp.p * g.g21
    a = G11 * G21 * (G22 - G21)
    b = 2 * G11 * s2 * (G22 - G21)
    c = s2**2 * (G22 - G11) + s2 * (G21 - G11) * G22
    return a, b, c


def stationary_beta_array(g: EffectiveGains, lp: LinkParams) -> np.ndarray:
    """Vectorized stationary point; NaN where no root lies in (0, 1)."""
    a, b, c = (np.asarray(v, dtype=float) for v in quadratic_coefficients(g, lp))
    a, b, c = np.broadcast_arrays(a, b, c)
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = b * b - 4 * a * c
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        # cancellation-free pair of roots; q/a is infinite when a == 0
        q = -0.5 * (b + np.where(b >= 0, sq, -sq))
        r1 = np.where(a != 0, q / a, np.nan)
        r2 = np.where(q != 0, c / q, np.nan)
    in1 = (r1 > 0) & (r1 < 1)
    in2 = (r2 > 0) & (r2 < 1)
    both = in1 & in2
    out = np.where(in1, r1, np.where(in2, r2, np.nan))
    if np.any(both):
        pick1 = sum_rate(g, lp, r1) >= sum_rate(g, lp, r2)
        out = np.where(both, np.where(pick1, r1, r2), out)
    return out


def stationary_beta(g: EffectiveGains, lp: LinkParams) -> Optional[float]:
    """Root of the sum-rate slope inside (0, 1), or ``None``."""
    r = float(stationary_beta_array(g, lp))
    return None if math.isnan(r) else r


def solve_beta_array(g: EffectiveGains, lp: LinkParams):
    """Vectorized optimal split.

    Returns ``(beta_star, feasible, candidate)`` with ``beta_star`` NaN on
    infeasible entries and ``candidate`` coded 0/1/2 for min/stationary/max
    (-1 when infeasible).
    """
    b1, b2, bs = (np.asarray(v, dtype=float) for v in beta_bounds(g, lp))
    lo = np.maximum(0.0, b1)
    hi = np.minimum(np.minimum(b2, bs), 1.0)
    feasible = (b1 <= 1.0) & (lo <= hi)
    beta0 = stationary_beta_array(g, lp)
    inside = feasible & (beta0 > lo) & (beta0 < hi)

    lo_c = np.where(feasible, lo, 0.0)
    hi_c = np.where(feasible, hi, 0.0)
    mid_c = np.where(inside, beta0, lo_c)
    r = np.stack([sum_rate(g, lp, lo_c), sum_rate(g, lp, mid_c), sum_rate(g, lp, hi_c)])
    r[1] = np.where(inside, r[1], -np.inf)
    # ascending beta order, so argmax resolves ties toward the smaller split
    choice = np.argmax(r, axis=0)
    beta_star = np.choose(choice, [lo_c, mid_c, hi_c])
    beta_star = np.where(feasible, beta_star, np.nan)
    choice = np.where(feasible, choice, -1)
    return beta_star, feasible, choice


def solve_beta(g: EffectiveGains, lp: LinkParams) -> BetaSolution:
    b1, b2, bs = beta_bounds(g, lp)
    beta_star, feasible, choice = solve_beta_array(g, lp)
    feasible = bool(feasible)
    return BetaSolution(
        beta1_min=b1,
        beta2_max=b2,
        beta_sic_max=bs,
        beta0=stationary_beta(g, lp),
        beta_star=float(beta_star) if feasible else None,
        feasible=feasible,
        active_candidate=list(Candidate)[int(choice)] if feasible else None,
    )


def reconstruct_gains(h11_hat, h22_hat, w1, w2) -> EffectiveGains:
    """BS-side gain estimates from quantized CQI and the two selected beams."""
    c2 = np.abs(np.sum(np.conj(np.asarray(w1)) * np.asarray(w2), axis=-1)) ** 2
    if np.ndim(c2) == 0:
        c2 = float(c2)
    return EffectiveGains(
        g11=h11_hat, g22=h22_hat, g12=h11_hat * c2, g21=h22_hat * c2
    )


def full_csi_gains(ch) -> EffectiveGains:
    """Gains under MRT on the true channels, with ``ch.h1`` the strong user."""
    return EffectiveGains(g11=ch.H1, g22=ch.H2, g12=ch.H12_star, g21=ch.H21_star)


def _geometric_conditions(gain1, cos2, rho, lp: LinkParams):
    eps, s2, p = lp.epsilon, lp.sigma2, lp.p
    gain1 = np.asarray(gain1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        margin = p * gain1 - eps * s2
        cos_arg = np.where(margin > 0, eps * s2 * (eps + 1) / margin, np.inf)
        rho_arg = p * gain1 / (eps * s2) - 1 - eps * cos2
        rho_thr = np.where(rho_arg > 0, 1 / np.sqrt(rho_arg), np.inf)
        ok = (margin > 0) & (np.sqrt(cos2) > np.sqrt(cos_arg)) & (rho > rho_thr)
    return ok


def feasibility_geometric(ch, lp: LinkParams):
    """Closed-form (rho, cos theta) test for a nonempty full-CSI interval.

    ``ch.h1`` must be the strong user.  Boundary equalities count as
    infeasible.
    """
    ok = _geometric_conditions(ch.H1, ch.cos_theta**2, ch.rho, lp)
    return bool(ok) if np.ndim(ok) == 0 else ok


class FeasibilityMode(str, Enum):
    OPERATIONAL = "operational"
    CONSERVATIVE = "conservative"


def feasibility_limited_feedback(
    g: EffectiveGains, lp: LinkParams, mode="operational", delta: float = 0.0
):
    """Decide NOMA from reconstructed gains.

    ``operational`` requires a nonempty interval for the reconstructed gains
    with ``p * g11 >= eps * sigma2``.  ``conservative`` additionally applies
    the geometric conditions with the strong gain lowered to ``g11 - delta``,
    a value that cannot exceed the true beamformed gain minus ``delta``.
    ``g`` must come from :func:`reconstruct_gains`.
    """
    mode = FeasibilityMode(mode)
    g11 = np.asarray(g.g11, dtype=float)
    g22 = np.asarray(g.g22, dtype=float)
    _, feasible, _ = solve_beta_array(g, lp)
    ok = feasible & (g11 > 0) & (g22 > 0) & (lp.p * g11 >= lp.epsilon * lp.sigma2)
    if mode is FeasibilityMode.CONSERVATIVE:
        with np.errstate(divide="ignore", invalid="ignore"):
            cos2_hat = np.where(g11 > 0, g.g12 / g11, 0.0)
            rho_hat = np.sqrt(np.where(g11 > 0, g22 / g11, 0.0))
        ok = ok & _geometric_conditions(g11 - delta, cos2_hat, rho_hat, lp)
    return bool(ok) if np.ndim(ok) == 0 else ok


def strong_user_order(g1_cqi, g2_cqi):
    """Return ``(strong, weak)`` user labels (1 or 2); ties go to user 1."""
    return (2, 1) if g2_cqi > g1_cqi else (1, 2)


def tdma_rate(g11, g22, lp: LinkParams):
    """Equal-time TDMA sum rate of the two single-user links."""
    s2 = lp.sigma2
    return 0.5 * np.log2(1 + lp.p * np.asarray(g11) / s2) + 0.5 * np.log2(
        1 + lp.p * np.asarray(g22) / s2
    )
