"""Monte Carlo engine for the limited-feedback two-user NOMA downlink.

Every sample index owns a random substream, so a sample's channels are the
same for every (B, B') grid cell (common random numbers) and for any worker
count.  Samples are processed in fixed-size chunks; workers only decide
which process computes which chunk, and reductions use ``math.fsum`` over
arrays assembled in sample order.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import numpy as np

from . import bounds as bnd
from .channel import (
    ChannelRealization,
    complex_normal,
    describe,
    sample_stream,
    shared_stream,
)
from .codebook import MAX_BITS, Codebook, codeword_gains, eta_cdf, rvq_vectors, select_pmi
from .noma_core import (
    BetaSolution,
    EffectiveGains,
    FeasibilityMode,
    LinkParams,
    RateReport,
    feasibility_limited_feedback,
    full_csi_gains,
    rates,
    reconstruct_gains,
    solve_beta,
    solve_beta_array,
    sum_rate,
    tdma_rate,
)
from .quantizer import TABLE1_DELTA, DeltaCache, GainQuantizer, amplitude_error_bound, quantize

log = logging.getLogger(__name__)

CHUNK = 2048
Z95 = 1.959963984540054


@dataclass(frozen=True)
class ExperimentConfig:
    n_t: int = 2
    b: int = 6
    b_prime: int = 6
    snr_db: float = 10.0
    r_th: float = 1.0
    n_samples: int = 100_000
    seed: int = 7
    delta_source: str = "trained"
    codebook_mode: str = "per_sample"
    feasibility_mode: str = "operational"
    independent_user_codebooks: bool = False
    condition_unsaturated: bool = False

    def __post_init__(self):
        if self.n_t < 1:
            raise ValueError(f"n_t must be >= 1, got {self.n_t}")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        for name in ("b", "b_prime"):
            v = getattr(self, name)
            if not 1 <= v <= MAX_BITS:
                raise ValueError(f"{name} must be in [1, {MAX_BITS}], got {v}")
        if self.codebook_mode not in ("per_sample", "fixed"):
            raise ValueError(f"unknown codebook_mode {self.codebook_mode!r}")
        FeasibilityMode(self.feasibility_mode)
        parse_delta_source(self.delta_source)

    @property
    def link(self) -> LinkParams:
        return LinkParams.from_snr_db(self.snr_db, self.r_th)


def parse_delta_source(src: str):
    """``trained`` | ``table1`` | ``explicit:<value>`` -> (kind, value)."""
    if src in ("trained", "table1"):
        return src, None
    if src.startswith("explicit:"):
        value = float(src.split(":", 1)[1])
        if not (value > 0 and math.isfinite(value)):
            raise ValueError(f"explicit delta must be positive, got {value}")
        return "explicit", value
    raise ValueError(f"unknown delta_source {src!r}")


_DEFAULT_CACHE = DeltaCache()


def resolve_delta(cfg: ExperimentConfig, cache: Optional[DeltaCache] = None) -> float:
    kind, value = parse_delta_source(cfg.delta_source)
    if kind == "explicit":
        return value
    if kind == "table1":
        try:
            return TABLE1_DELTA[(cfg.b, cfg.b_prime)]
        except KeyError:
            raise ValueError(f"table1 has no entry for B={cfg.b}, B'={cfg.b_prime}") from None
    cache = cache if cache is not None else _DEFAULT_CACHE
    return cache.get(cfg.b, cfg.b_prime, cfg.n_t, cfg.seed)


# ---------------------------------------------------------------- drawing


def fixed_codebooks(cfg: ExperimentConfig) -> np.ndarray:
    """Run-wide codebook(s), shape ``(n_books, K, n_t)``."""
    n_books = 2 if cfg.independent_user_codebooks else 1
    rng = shared_stream(cfg.seed, tag=cfg.b_prime)
    return np.stack([rvq_vectors(cfg.b_prime, cfg.n_t, rng) for _ in range(n_books)])


def draw_sample(cfg: ExperimentConfig, index: int, fixed=None):
    """Channels ``(2, n_t)`` and codebooks ``(n_books, K, n_t)`` of one sample.

    Channels are always drawn first, so they do not depend on ``b_prime``.
    """
    rng = sample_stream(cfg.seed, index)
    while True:
        h = complex_normal(rng, (2, cfg.n_t))
        if np.all(np.sum(h.real**2 + h.imag**2, axis=-1) > 0):
            break
    if cfg.codebook_mode == "fixed":
        cbs = fixed if fixed is not None else fixed_codebooks(cfg)
    else:
        n_books = 2 if cfg.independent_user_codebooks else 1
        cbs = np.stack([rvq_vectors(cfg.b_prime, cfg.n_t, rng) for _ in range(n_books)])
    return h, cbs


def draw_batch(cfg: ExperimentConfig, start: int, stop: int):
    fixed = fixed_codebooks(cfg) if cfg.codebook_mode == "fixed" else None
    hs, cbs = zip(*(draw_sample(cfg, i, fixed) for i in range(start, stop)))
    return np.stack(hs), np.stack(cbs)


# ---------------------------------------------------------- batch pipeline


def _take(x, idx):
    """Pick entries ``x[n, idx[n]]`` along axis 1."""
    return np.take_along_axis(x, idx[:, None, None], axis=1)[:, 0]


def feedback_batch(h: np.ndarray, cbs: np.ndarray):
    """UE side: PMI choice and effective gains for channels ``(n, 2, n_t)``."""
    n = h.shape[0]
    book = [cbs[:, 0], cbs[:, -1]]
    beams, eff = [], []
    for k in range(2):
        g = codeword_gains(h[:, k], book[k])
        j = np.argmax(g, axis=-1)
        beams.append(_take(book[k], j))
        eff.append(g[np.arange(n), j])
    return np.stack(beams, axis=1), np.stack(eff, axis=1)


def _select(pair, strong_second):
    """Reorder per-user arrays ``(n, 2, ...)`` into (strong, weak)."""
    first = np.where(_expand(strong_second, pair[:, 1]), pair[:, 1], pair[:, 0])
    second = np.where(_expand(strong_second, pair[:, 0]), pair[:, 0], pair[:, 1])
    return first, second


def _expand(mask, like):
    return mask.reshape(mask.shape + (1,) * (like.ndim - 1))


def _cross(a, b):
    z = np.sum(np.conj(a) * b, axis=-1)
    return z.real**2 + z.imag**2


def evaluate_batch(h, beams, eff, delta, cfg: ExperimentConfig) -> dict:
    """Feedback, both schemes, fallback and bounds for one B at fixed beams."""
    lp = cfg.link
    quant = GainQuantizer(delta, cfg.b)
    norms = np.sum(h.real**2 + h.imag**2, axis=-1)
    eta = eff / norms
    cqi = quant(eff)
    saturated = np.any(eff >= quant.max_level, axis=1)

    # limited feedback: BS orders users by CQI and reconstructs gains
    swap_lf = cqi[:, 1] > cqi[:, 0]
    w1, w2 = _select(beams, swap_lf)
    hl1, hl2 = _select(h, swap_lf)
    c1, c2 = _select(cqi, swap_lf)
    g_hat = reconstruct_gains(c1, c2, w1, w2)
    beta_q, _, cand_q = solve_beta_array(g_hat, lp)
    feas_lf = feasibility_limited_feedback(g_hat, lp, cfg.feasibility_mode, delta)
    lf_true = bnd.limited_feedback_true_gains(hl1, hl2, w1, w2)
    r_lf_noma = sum_rate(lf_true, lp, np.where(feas_lf, beta_q, 0.0))
    r_lf_tdma = tdma_rate(eff[:, 0], eff[:, 1], lp)

    # full CSI: order by channel norms, MRT beams
    swap_full = norms[:, 1] > norms[:, 0]
    hf1, hf2 = _select(h, swap_full)
    H1, H2 = _select(norms, swap_full)
    cross = _cross(hf2, hf1)
    full = EffectiveGains(g11=H1, g22=H2, g12=cross / H2, g21=cross / H1)
    beta_star, feas_full, cand_full = solve_beta_array(full, lp)
    r_full_noma = sum_rate(full, lp, np.where(feas_full, beta_star, 0.0))
    r_full_tdma = tdma_rate(norms[:, 0], norms[:, 1], lp)

    both = feas_full & feas_lf
    consistent = swap_lf == swap_full
    delta_r = np.where(both, r_full_noma - r_lf_noma, np.nan)
    delta_beta = np.where(both, beta_q - beta_star, np.nan)

    # bounds, where both schemes share the same strong user
    checked = both & consistent
    eta11 = np.where(swap_full, eta[:, 1], eta[:, 0])
    eta22 = np.where(swap_full, eta[:, 0], eta[:, 1])
    weak_eff = np.where(swap_full, eff[:, 0], eff[:, 1])
    bq = np.where(checked, beta_q, 0.0)
    bs = np.where(checked, beta_star, 0.0)
    bi = bnd.BoundInputs(
        H1=H1, H2=H2, eta11=eta11, eta22=eta22, H21_star=full.g21,
        beta_star=bs, beta_q=bq,
        delta_or_sat=amplitude_error_bound(quant, weak_eff), lp=lp,
    )
    r_full_q = sum_rate(full, lp, bq)
    d1 = sum_rate(full, lp, bs) - r_full_q
    d2 = r_full_q - sum_rate(lf_true, lp, bq)
    s1_act = np.abs(full.g21 - lf_true.g21)
    ig_act = np.abs(full.g21 - g_hat.g21)
    slack = 1e-9
    viol = {
        "theorem1": d1 + d2 > bnd.theorem1_bound(bi) + slack,
        "lemma3": np.abs(d1) > bnd.lemma3_bound(bi) + slack,
        "lemma4": d2 > bnd.lemma4_bound(bi) + slack,
        "s1_gap": s1_act > bnd.s1_gap_bound(H2, eta11) + slack,
        "interference_gap": ig_act
        > bnd.interference_gap_bound(H2, eta11, eta22, bi.delta_or_sat) + slack,
    }
    viol = {k: v & checked for k, v in viol.items()}
    any_viol = np.zeros_like(checked)
    for v in viol.values():
        any_viol |= v
    # reported separately, not counted in ``violation``
    info_lemma3_min = checked & (np.abs(d1) > bnd.lemma3_bound(bi, form="min_beta") + slack)

    return {
        "feas_full": feas_full,
        "feas_lf": feas_lf,
        "both": both,
        "consistent": consistent,
        "checked": checked,
        "saturated": saturated,
        "beta_star": beta_star,
        "beta_q": beta_q,
        "cand_full": cand_full,
        "cand_lf": cand_q,
        "r_full_noma": r_full_noma,
        "r_lf_noma": r_lf_noma,
        "sum_rate_full": np.where(feas_full, r_full_noma, r_full_tdma),
        "sum_rate_lf": np.where(feas_lf, r_lf_noma, r_lf_tdma),
        "delta_r": delta_r,
        "delta_r1": np.where(checked, d1, np.nan),
        "delta_r2": np.where(checked, d2, np.nan),
        "delta_beta": delta_beta,
        "violation": any_viol,
        **{f"viol_{k}": v for k, v in viol.items()},
        "info_lemma3_min_beta": info_lemma3_min,
    }


def _chunk_job(args):
    """Evaluate every grid cell on samples ``[start, stop)``."""
    base, cells, deltas, start, stop = args
    out = {}
    by_bprime: dict[int, list[int]] = {}
    for b, bp in cells:
        by_bprime.setdefault(bp, []).append(b)
    for bp, bs in by_bprime.items():
        cfg_bp = replace(base, b_prime=bp)
        h, cbs = draw_batch(cfg_bp, start, stop)
        beams, eff = feedback_batch(h, cbs)
        for b in bs:
            cfg = replace(cfg_bp, b=b)
            out[(b, bp)] = evaluate_batch(h, beams, eff, deltas[(b, bp)], cfg)
    return out


def _chunks(n):
    return [(s, min(s + CHUNK, n)) for s in range(0, n, CHUNK)]


def simulate_cells(base: ExperimentConfig, cells, workers: int = 1, cache=None) -> dict:
    """Per-sample arrays for each ``(B, B')`` cell, concatenated in sample order."""
    cells = list(dict.fromkeys(cells))
    deltas = {
        (b, bp): resolve_delta(replace(base, b=b, b_prime=bp), cache) for b, bp in cells
    }
    jobs = [(base, cells, deltas, s, e) for s, e in _chunks(base.n_samples)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_chunk_job, jobs))
    else:
        parts = [_chunk_job(j) for j in jobs]
    result = {}
    for cell in cells:
        keys = parts[0][cell].keys()
        result[cell] = {k: np.concatenate([p[cell][k] for p in parts]) for k in keys}
        result[cell]["delta"] = deltas[cell]
    return result


# ------------------------------------------------------------- summaries


def mean_ci(x) -> tuple[float, float, int]:
    """Mean, 95% normal-approximation half-width and count of finite entries."""
    x = np.asarray(x, dtype=float)
    x = x[np.isfinite(x)]
    n = len(x)
    if n == 0:
        return math.nan, math.nan, 0
    m = math.fsum(x) / n
    if n < 2:
        return m, math.nan, n
    var = math.fsum((x - m) ** 2) / (n - 1)
    return m, Z95 * math.sqrt(var / n), n


@dataclass
class SweepSummary:
    b: int
    b_prime: int
    n_t: int
    snr_db: float
    r_th: float
    n_samples: int
    seed: int
    mean_rate_loss: float
    ci_rate_loss: float
    mean_sum_rate_lf: float
    mean_sum_rate_full: float
    frac_feasible_full: float
    frac_feasible_lf: float
    frac_feasible_both: float
    mean_abs_delta_beta: float
    bound_violations: int
    # not part of the CSV schema
    delta: float = math.nan
    ci_sum_rate_lf: float = math.nan
    ci_sum_rate_full: float = math.nan
    n_both: int = 0
    n_bounds_checked: int = 0
    n_order_mismatch: int = 0
    violations_by_bound: dict = field(default_factory=dict)
    lemma3_min_beta_violations: int = 0


CSV_COLUMNS = [
    "B", "Bprime", "Nt", "snr_db", "r_th", "n_samples", "seed",
    "mean_rate_loss", "ci_rate_loss", "mean_sum_rate_lf", "mean_sum_rate_full",
    "frac_feasible_full", "frac_feasible_lf", "frac_feasible_both",
    "mean_abs_delta_beta", "bound_violations",
]


def summarize(cfg: ExperimentConfig, arr: dict) -> SweepSummary:
    n = cfg.n_samples
    loss = arr["delta_r"]
    if cfg.condition_unsaturated:
        loss = np.where(arr["saturated"], np.nan, loss)
    m_loss, ci_loss, n_both = mean_ci(loss)
    m_lf, ci_lf, _ = mean_ci(arr["sum_rate_lf"])
    m_full, ci_full, _ = mean_ci(arr["sum_rate_full"])
    m_db, _, _ = mean_ci(np.abs(arr["delta_beta"]))
    return SweepSummary(
        b=cfg.b, b_prime=cfg.b_prime, n_t=cfg.n_t, snr_db=cfg.snr_db, r_th=cfg.r_th,
        n_samples=n, seed=cfg.seed,
        mean_rate_loss=m_loss, ci_rate_loss=ci_loss,
        mean_sum_rate_lf=m_lf, mean_sum_rate_full=m_full,
        frac_feasible_full=int(arr["feas_full"].sum()) / n,
        frac_feasible_lf=int(arr["feas_lf"].sum()) / n,
        frac_feasible_both=int(arr["both"].sum()) / n,
        mean_abs_delta_beta=m_db,
        bound_violations=int(arr["violation"].sum()),
        delta=arr["delta"],
        ci_sum_rate_lf=ci_lf, ci_sum_rate_full=ci_full,
        n_both=n_both,
        n_bounds_checked=int(arr["checked"].sum()),
        n_order_mismatch=int((arr["both"] & ~arr["consistent"]).sum()),
        violations_by_bound={
            k[5:]: int(v.sum()) for k, v in arr.items() if k.startswith("viol_")
        },
        lemma3_min_beta_violations=int(arr["info_lemma3_min_beta"].sum()),
    )


def run_sweep(base: ExperimentConfig, bs, b_primes, workers: int = 1, cache=None,
              return_samples: bool = False):
    """Summaries for every ``(B, B')`` in ``bs x b_primes``, ordered by B' then B."""
    cells = [(b, bp) for bp in b_primes for b in bs]
    if not cells:
        raise ValueError("empty grid")
    arrays = simulate_cells(base, cells, workers, cache)
    rows = [summarize(replace(base, b=b, b_prime=bp), arrays[(b, bp)]) for b, bp in cells]
    return (rows, arrays) if return_samples else rows


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.6g}"


def summary_csv(rows) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in rows:
        vals = [
            r.b, r.b_prime, r.n_t, r.snr_db, r.r_th, r.n_samples, r.seed,
            r.mean_rate_loss, r.ci_rate_loss, r.mean_sum_rate_lf, r.mean_sum_rate_full,
            r.frac_feasible_full, r.frac_feasible_lf, r.frac_feasible_both,
            r.mean_abs_delta_beta, r.bound_violations,
        ]
        lines.append(",".join(_fmt(v) for v in vals))
    return "\n".join(lines) + "\n"


def read_summary_csv(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split(",") != CSV_COLUMNS:
        raise ValueError("not a sweep summary CSV")
    out = []
    for ln in lines[1:]:
        row = dict(zip(CSV_COLUMNS, ln.split(",")))
        out.append({k: (int(v) if k in ("B", "Bprime", "Nt", "n_samples", "seed",
                                         "bound_violations") else float(v))
                    for k, v in row.items()})
    return out


# --------------------------------------------------- scalar sample trace


@dataclass
class SchemeOutcome:
    strong_user: int
    gains: EffectiveGains
    solution: BetaSolution
    noma: Optional[RateReport]
    tdma_rate: float

    @property
    def sum_rate(self) -> float:
        return self.noma.r_sum if self.solution.feasible else self.tdma_rate


@dataclass
class SampleOutcome:
    sample_index: int
    channel: ChannelRealization  # full-CSI labeling: h1 is the stronger channel
    pmi: tuple
    eta: tuple
    cqi: tuple
    saturated: bool
    full: SchemeOutcome
    lf: SchemeOutcome
    lf_true_gains: EffectiveGains
    feasible_full: bool
    feasible_lf: bool
    feasible_both: bool
    fallback_used: bool
    order_consistent: bool
    delta_r: Optional[float]
    delta_beta: Optional[float]
    bounds: Optional[bnd.BoundReport]

    def as_dict(self) -> dict:
        d = asdict(self)
        d["channel"] = {
            k: v for k, v in d["channel"].items() if k not in ("h1", "h2")
        }
        return d


def run_sample(cfg: ExperimentConfig, sample_index: int, delta: Optional[float] = None,
               cache=None) -> SampleOutcome:
    """Trace one sample through the scalar per-operation API."""
    lp = cfg.link
    if delta is None:
        delta = resolve_delta(cfg, cache)
    quant = GainQuantizer(delta, cfg.b)
    h, cbs = draw_sample(cfg, sample_index)
    books = [Codebook(cbs[0], cfg.b_prime), Codebook(cbs[-1], cfg.b_prime)]

    sel = [select_pmi(h[k], books[k]) for k in range(2)]
    w = [books[k].vectors[sel[k].index] for k in range(2)]
    cqi = [quantize(quant, s.effective_gain)[0] for s in sel]
    saturated = any(s.effective_gain >= quant.max_level for s in sel)

    # limited feedback, ordered by CQI (tie -> user 1)
    s_lf = 1 if cqi[1] > cqi[0] else 0
    o_lf = 1 - s_lf
    g_hat = reconstruct_gains(cqi[s_lf], cqi[o_lf], w[s_lf], w[o_lf])
    sol_lf = solve_beta(g_hat, lp)
    feas_lf = bool(feasibility_limited_feedback(g_hat, lp, cfg.feasibility_mode, delta))
    if not feas_lf:
        sol_lf = replace(sol_lf, feasible=False, beta_star=None, active_candidate=None)
    true_lf = EffectiveGains(
        g11=abs(np.vdot(h[s_lf], w[s_lf])) ** 2,
        g22=abs(np.vdot(h[o_lf], w[o_lf])) ** 2,
        g12=abs(np.vdot(h[s_lf], w[o_lf])) ** 2,
        g21=abs(np.vdot(h[o_lf], w[s_lf])) ** 2,
    )
    lf = SchemeOutcome(
        strong_user=s_lf + 1,
        gains=g_hat,
        solution=sol_lf,
        noma=rates(true_lf, lp, sol_lf.beta_star) if feas_lf else None,
        tdma_rate=float(tdma_rate(sel[0].effective_gain, sel[1].effective_gain, lp)),
    )

    # full CSI, ordered by channel norm
    n2 = [float(np.vdot(x, x).real) for x in h]
    s_f = 1 if n2[1] > n2[0] else 0
    ch = describe(h[s_f], h[1 - s_f])
    g_full = full_csi_gains(ch)
    sol_full = solve_beta(g_full, lp)
    full = SchemeOutcome(
        strong_user=s_f + 1,
        gains=g_full,
        solution=sol_full,
        noma=rates(g_full, lp, sol_full.beta_star) if sol_full.feasible else None,
        tdma_rate=float(tdma_rate(n2[0], n2[1], lp)),
    )

    both = sol_full.feasible and feas_lf
    consistent = s_lf == s_f
    delta_r = full.noma.r_sum - lf.noma.r_sum if both else None
    delta_beta = sol_lf.beta_star - sol_full.beta_star if both else None
    report = None
    if both and consistent:
        weak_eff = sel[1 - s_f].effective_gain
        bi = bnd.BoundInputs(
            H1=ch.H1, H2=ch.H2,
            eta11=sel[s_f].eta, eta22=sel[1 - s_f].eta,
            H21_star=ch.H21_star,
            beta_star=sol_full.beta_star, beta_q=sol_lf.beta_star,
            delta_or_sat=float(amplitude_error_bound(quant, weak_eff)),
            lp=lp,
        )
        report = bnd.evaluate(ch, w[s_f], w[1 - s_f], cqi[1 - s_f], bi)
    return SampleOutcome(
        sample_index=sample_index,
        channel=ch,
        pmi=(sel[0].index, sel[1].index),
        eta=(sel[0].eta, sel[1].eta),
        cqi=tuple(cqi),
        saturated=saturated,
        full=full,
        lf=lf,
        lf_true_gains=true_lf,
        feasible_full=sol_full.feasible,
        feasible_lf=feas_lf,
        feasible_both=both,
        fallback_used=not both,
        order_consistent=consistent,
        delta_r=delta_r,
        delta_beta=delta_beta,
        bounds=report,
    )


# ---------------------------------------------------- statistics checks


@dataclass
class StatCheck:
    name: str
    empirical: float
    target: float
    tolerance: float
    kind: str = "relative"  # relative | absolute | sup
    defined: bool = True

    @property
    def passed(self) -> bool:
        if not self.defined:
            return True
        if self.kind == "relative":
            return abs(self.empirical - self.target) <= self.tolerance * abs(self.target)
        return abs(self.empirical - self.target) <= self.tolerance

    def line(self) -> str:
        if not self.defined:
            return f"{self.name}: not defined"
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: empirical={self.empirical:.6g} "
                f"target={self.target:.6g} tol={self.tolerance:g} ({self.kind})")


def ecdf_sup_deviation(samples, cdf) -> float:
    """Kolmogorov distance between the empirical CDF of ``samples`` and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    f = cdf(x)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def statistics_samples(n_t: int, b_prime: int, n_samples: int, seed: int) -> dict:
    """Per-sample norms, angle and direction qualities with fresh codebooks."""
    cfg = ExperimentConfig(n_t=n_t, b_prime=b_prime, n_samples=n_samples, seed=seed,
                           delta_source="explicit:1")
    H = np.empty((n_samples, 2))
    eta = np.empty((n_samples, 2))
    sin2 = np.empty(n_samples)
    for s, e in _chunks(n_samples):
        h, cbs = draw_batch(cfg, s, e)
        _, eff = feedback_batch(h, cbs)
        norms = np.sum(h.real**2 + h.imag**2, axis=-1)
        H[s:e] = norms
        eta[s:e] = eff / norms
        sin2[s:e] = 1 - _cross(h[:, 0], h[:, 1]) / (norms[:, 0] * norms[:, 1])
    return {"H": H, "eta": eta, "sin2": np.clip(sin2, 0.0, 1.0)}


def validate_statistics(n_t: int, b_primes, n_samples: int, seed: int) -> list[StatCheck]:
    """Empirical moments and CDFs against their closed forms."""
    checks = []
    first = True
    for bp in b_primes:
        d = statistics_samples(n_t, bp, n_samples, seed)
        if first:
            H = d["H"][:, 0]
            checks += [
                StatCheck("E[H]", math.fsum(H) / len(H), n_t, 0.01),
                StatCheck("E[H^2]", math.fsum(H**2) / len(H), n_t * (n_t + 1), 0.02),
            ]
            if n_t > 1:
                checks.append(StatCheck("E[1/H]", math.fsum(1 / H) / len(H), 1 / (n_t - 1), 0.02))
            else:
                checks.append(StatCheck("E[1/H]", math.nan, math.inf, 0.02, defined=False))
            inv = 1 / d["sin2"][d["sin2"] > 0]
            checks.append(StatCheck(
                "E[1/sin^2(theta)]", math.fsum(inv) / len(inv) if n_t > 2 else math.nan,
                (n_t - 1) / (n_t - 2) if n_t > 2 else math.inf, 0.03, defined=n_t > 2,
            ))
            checks.append(StatCheck(
                "sin^2(theta) CDF sup-deviation",
                ecdf_sup_deviation(d["sin2"], lambda x: x ** (n_t - 1)), 0.0, 0.01, "sup",
            ))
            first = False
        eta = d["eta"][:, 0]
        if n_t > 1:
            checks.append(StatCheck(
                f"E[1-eta] (B'={bp})", math.fsum(1 - eta) / len(eta),
                2.0 ** (-bp / (n_t - 1)), 0.15,
            ))
        checks.append(StatCheck(
            f"eta CDF sup-deviation (B'={bp})",
            ecdf_sup_deviation(eta, lambda x: eta_cdf(x, n_t, bp)), 0.0, 0.01, "sup",
        ))
        for k in range(2):
            r = float(np.corrcoef(d["eta"][:, k], d["H"][:, k])[0, 1])
            checks.append(StatCheck(
                f"corr(eta{k + 1}{k + 1}, H{k + 1}) (B'={bp})", abs(r), 0.0, 0.02, "absolute"
            ))
    return checks


def default_workers() -> int:
    return os.cpu_count() or 1


def config_fields() -> list[str]:
    return [f.name for f in fields(ExperimentConfig)]
