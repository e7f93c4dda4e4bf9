"""Closed-form rate-loss and gain-gap upper bounds, evaluated per realization.

Labels follow the NOMA convention: user 1 is the strong user in both the
full-CSI and the limited-feedback schemes.  ``w1``/``w2`` are the codebook
beams, ``h/||h||`` the ideal MRT beams.  Every evaluator broadcasts over
numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .noma_core import LN2, EffectiveGains, LinkParams, full_csi_gains, sum_rate


@dataclass(frozen=True)
class BoundInputs:
    H1: float
    H2: float
    eta11: float
    eta22: float
    H21_star: float
    beta_star: float
    beta_q: float
    delta_or_sat: float
    lp: LinkParams

    @property
    def delta_beta(self):
        return self.beta_q - self.beta_star


@dataclass
class BoundReport:
    delta_r_actual: float
    delta_r1_actual: float
    delta_r2_actual: float
    thm1_bound: float
    lemma3_bound: float
    lemma4_bound: float
    s1_gap_actual: float
    s1_gap_bound: float
    interference_gap_actual: float
    interference_gap_bound: float
    violations: dict = field(default_factory=dict)


def _cross(a, b):
    """``|a^H b|^2`` over the last axis."""
    z = np.sum(np.conj(a) * b, axis=-1)
    return z.real**2 + z.imag**2


def _norm2(h):
    return np.sum(h.real**2 + h.imag**2, axis=-1)


def limited_feedback_true_gains(h1, h2, w1, w2) -> EffectiveGains:
    """Gains the two receivers actually see through the codebook beams."""
    return EffectiveGains(
        g11=_cross(h1, w1), g22=_cross(h2, w2), g12=_cross(h1, w2), g21=_cross(h2, w1)
    )


def rate_loss_split(ch, w1, w2, beta_star, beta_q, lp: LinkParams):
    """Split the rate loss into power-allocation and beam-direction parts.

    Returns ``(delta_r, delta_r1, delta_r2)`` with
    ``delta_r1 = R(ideal beams, beta_star) - R(ideal beams, beta_q)`` and
    ``delta_r2 = R(ideal beams, beta_q) - R(codebook beams, beta_q)``.
    ``ch`` carries the strong user in ``h1``.
    """
    full = full_csi_gains(ch)
    lf = limited_feedback_true_gains(ch.h1, ch.h2, np.asarray(w1), np.asarray(w2))
    r_full_star = sum_rate(full, lp, beta_star)
    r_full_q = sum_rate(full, lp, beta_q)
    r_lf_q = sum_rate(lf, lp, beta_q)
    d1 = r_full_star - r_full_q
    d2 = r_full_q - r_lf_q
    return d1 + d2, d1, d2


def lemma3_bound(bi: BoundInputs, form: str = "stated"):
    """Power-allocation loss bound, linear in ``|beta_q - beta_star|``.

    ``form="stated"`` evaluates the strong-user slope at ``beta_star``.
    ``form="min_beta"`` uses ``min(beta_star, beta_q)`` instead, which keeps
    the mean-value argument valid when ``beta_q < beta_star``.
    """
    p, s2 = bi.lp.p, bi.lp.sigma2
    if form == "stated":
        b_ref = bi.beta_star
    elif form == "min_beta":
        b_ref = np.minimum(bi.beta_star, bi.beta_q)
    else:
        raise ValueError(f"unknown form {form!r}")
    coef = (
        bi.H1 / (s2 + b_ref * p * bi.H1)
        + bi.H21_star / s2
        + (bi.H2 - bi.H21_star) / (s2 + p * bi.H21_star)
    )
    return p / LN2 * coef * np.abs(bi.delta_beta)


def lemma4_bound(bi: BoundInputs):
    """Beam-direction loss bound at the limited-feedback split ``beta_q``."""
    p, s2, bq = bi.lp.p, bi.lp.sigma2, bi.beta_q
    cross = (
        2 * (1 - bq) * p**2 * bq * bi.eta22 * bi.H2**2
        * np.sqrt(np.maximum(2 - 2 * bi.eta11, 0.0)) / s2**2
    )
    weak = (1 - bq) * p * bi.H2 * (1 - bi.eta22) / s2
    strong = bq * p * bi.H1 * (1 - bi.eta11) / s2
    return (cross + weak + strong) / LN2


def theorem1_bound(bi: BoundInputs, form: str = "appendix"):
    """Total rate-loss bound.

    ``form="appendix"`` is the fully derived inequality, keeping ``eta22`` and
    ``sqrt(2 - 2 eta11)``.  ``form="statement"`` drops ``eta22`` and uses the
    looser ``sqrt(2 - eta11)``.
    """
    p, s2 = bi.lp.p, bi.lp.sigma2
    if form == "appendix":
        cross = p * bi.eta22 * bi.H2**2 * np.sqrt(np.maximum(2 - 2 * bi.eta11, 0.0)) / (2 * s2**2)
    elif form == "statement":
        cross = p * bi.H2**2 * np.sqrt(2 - bi.eta11) / (2 * s2**2)
    else:
        raise ValueError(f"unknown form {form!r}")
    total = (
        bi.H1 * (1 - bi.eta11) / s2
        + cross
        + bi.H2 * (1 - bi.eta22) / s2
        + (bi.H1 + bi.H2) * np.abs(bi.delta_beta) / s2
    )
    return p / LN2 * total


def s1_gap_bound(H2, eta11, intermediate: bool = False):
    """Bound on ``|H21_star - H21|``; ``intermediate`` gives the tighter sqrt(eta) form."""
    eta11 = np.asarray(eta11, dtype=float)
    inner = 2 - 2 * np.sqrt(eta11) if intermediate else 2 - 2 * eta11
    return 2 * H2 * np.sqrt(np.maximum(inner, 0.0))


def s1_gap_actual(h1, h2, w1):
    """``| |h2^H h1/||h1|| |^2 - |h2^H w1|^2 |`` from raw vectors."""
    h1, h2, w1 = (np.asarray(v) for v in (h1, h2, w1))
    return np.abs(_cross(h2, h1) / _norm2(h1) - _cross(h2, w1))


def interference_gap_bound(H2, eta11, eta22, delta):
    """Bound on the BS's interference-gain estimation error ``|H21_star - H21_hat|``."""
    sq = lambda e: np.sqrt(np.maximum(2 - 2 * np.asarray(e, dtype=float), 0.0))
    return 2 * H2 * (sq(eta11) + sq(eta22)) + delta + (1 - np.asarray(eta22)) * H2


def interference_gap_actual(h1, h2, w1, w2, h22_hat):
    """``|H21_star - H22_hat |w2^H w1|^2|`` from raw vectors and the weak user's CQI."""
    h1, h2, w1, w2 = (np.asarray(v) for v in (h1, h2, w1, w2))
    est = h22_hat * _cross(w2, w1)
    return np.abs(_cross(h2, h1) / _norm2(h1) - est)


def evaluate(ch, w1, w2, h22_hat, bi: BoundInputs, slack: float = 1e-9) -> BoundReport:
    """Compute every actual quantity and bound for one realization.

    ``violations`` maps bound names to the (positive) amount by which the
    actual value exceeds the bound plus ``slack``.  The power-allocation
    bound is compared with ``|delta_r1|``, the other rate bounds with the
    signed losses.
    """
    dr, dr1, dr2 = rate_loss_split(ch, w1, w2, bi.beta_star, bi.beta_q, bi.lp)
    rep = BoundReport(
        delta_r_actual=float(dr),
        delta_r1_actual=float(dr1),
        delta_r2_actual=float(dr2),
        thm1_bound=float(theorem1_bound(bi)),
        lemma3_bound=float(lemma3_bound(bi)),
        lemma4_bound=float(lemma4_bound(bi)),
        s1_gap_actual=float(s1_gap_actual(ch.h1, ch.h2, w1)),
        s1_gap_bound=float(s1_gap_bound(bi.H2, bi.eta11)),
        interference_gap_actual=float(interference_gap_actual(ch.h1, ch.h2, w1, w2, h22_hat)),
        interference_gap_bound=float(
            interference_gap_bound(bi.H2, bi.eta11, bi.eta22, bi.delta_or_sat)
        ),
    )
    pairs = {
        "theorem1": (rep.delta_r_actual, rep.thm1_bound),
        "lemma3": (abs(rep.delta_r1_actual), rep.lemma3_bound),
        "lemma4": (rep.delta_r2_actual, rep.lemma4_bound),
        "s1_gap": (rep.s1_gap_actual, rep.s1_gap_bound),
        "interference_gap": (rep.interference_gap_actual, rep.interference_gap_bound),
    }
    rep.violations = {k: a - b for k, (a, b) in pairs.items() if a > b + slack}
    return rep
