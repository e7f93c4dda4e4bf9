"""Uniform saturating CQI quantizer and training of its step size."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import complex_normal, shared_stream
from .codebook import MAX_BITS, codeword_gains

# Step sizes keyed by (B, B'), for N_t = 2 transmit antennas.
TABLE1_DELTA = {
    (b, bp): v
    for bp, row in enumerate(
        [
            [1.59, 0.97, 0.60, 0.36, 0.22, 0.13],
            [1.70, 1.06, 0.65, 0.39, 0.23, 0.13],
            [1.81, 1.11, 0.69, 0.42, 0.24, 0.14],
            [1.92, 1.16, 0.71, 0.43, 0.25, 0.14],
            [1.98, 1.20, 0.73, 0.44, 0.26, 0.15],
            [2.00, 1.22, 0.75, 0.44, 0.26, 0.15],
        ],
        start=1,
    )
    for b, v in enumerate(row, start=1)
}


class NotSaturatedError(ValueError):
    pass


@dataclass(frozen=True)
class GainQuantizer:
    delta: float
    b: int
    max_level: float = field(init=False)

    def __post_init__(self):
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValueError(f"delta must be positive and finite, got {self.delta}")
        if not 1 <= self.b <= MAX_BITS:
            raise ValueError(f"b must be in [1, {MAX_BITS}], got {self.b}")
        object.__setattr__(self, "max_level", (2**self.b - 1) * self.delta)

    @property
    def top_level(self) -> int:
        return 2**self.b - 1

    def levels(self, x):
        """Integer output levels for an array of nonnegative gains."""
        x = np.asarray(x, dtype=float)
        return np.minimum(np.floor(x / self.delta), self.top_level).astype(np.int64)

    def __call__(self, x):
        """Quantized values for an array of nonnegative gains."""
        return self.levels(x) * self.delta


def quantize(quantizer: GainQuantizer, x: float) -> tuple[float, int]:
    """Quantize one gain; returns ``(value, level)``."""
    if not (math.isfinite(x) and x >= 0):
        raise ValueError(f"gain must be finite and nonnegative, got {x}")
    level = int(quantizer.levels(x))
    return level * quantizer.delta, level


def saturation_gap(quantizer: GainQuantizer, x: float) -> float:
    """Distance of a saturated gain above the top quantizer level."""
    if x < quantizer.max_level:
        raise NotSaturatedError(f"{x} is below the top level {quantizer.max_level}")
    return x - quantizer.max_level


def amplitude_error_bound(quantizer: GainQuantizer, x):
    """Per-sample amplitude error cap: ``delta`` below the top level, else the saturation gap."""
    x = np.asarray(x, dtype=float)
    return np.where(x < quantizer.max_level, quantizer.delta, x - quantizer.max_level)


def effective_gain_samples(
    b_prime: int, n_t: int, n: int, rng: np.random.Generator, chunk: int = 8192
) -> np.ndarray:
    """Draw ``max_j |h^H c_j|^2`` with a fresh RVQ codebook per sample."""
    out = np.empty(n)
    for start in range(0, n, chunk):
        m = min(chunk, n - start)
        h = complex_normal(rng, (m, n_t))
        cb = complex_normal(rng, (m, 2**b_prime, n_t))
        cb /= np.sqrt(np.sum(cb.real**2 + cb.imag**2, axis=-1, keepdims=True))
        out[start:start + m] = codeword_gains(h, cb).max(axis=-1)
    return out


TRAIN_CHUNK = 4096


def nested_gain_samples(b_prime: int, n_t: int, n: int, seed: int) -> np.ndarray:
    """Effective gains for training, coupled across codebook sizes.

    Channels depend only on ``(seed, n_t)`` and the codebook of size
    ``2**b_prime`` is the prefix of one long i.i.d. sequence of codewords, so
    each sample's gain is nondecreasing in ``b_prime`` while every set keeps
    the RVQ distribution.
    """
    if not 1 <= b_prime <= MAX_BITS:
        raise ValueError(f"b_prime must be in [1, {MAX_BITS}], got {b_prime}")
    out = np.empty(n)
    for c, start in enumerate(range(0, n, TRAIN_CHUNK)):
        m = min(TRAIN_CHUNK, n - start)
        h = complex_normal(shared_stream(seed, (3, n_t, c, 0)), (m, n_t))
        # codeword-major layout: a larger codebook only appends draws
        cb = complex_normal(shared_stream(seed, (3, n_t, c, 1)), (2**b_prime, m, n_t))
        cb = np.swapaxes(cb, 0, 1)
        cb /= np.sqrt(np.sum(cb.real**2 + cb.imag**2, axis=-1, keepdims=True))
        out[start:start + m] = codeword_gains(h, cb).max(axis=-1)
    return out


def quantization_mse(x: np.ndarray, delta: float, b: int) -> float:
    """Mean squared error of the saturating quantizer; saturated samples count fully."""
    top = 2**b - 1
    q = np.minimum(np.floor(x / delta), top) * delta
    return float(np.mean((x - q) ** 2))


def _golden_min(f, lo: float, hi: float, rtol: float) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > rtol * 0.5 * (a + b):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return c if fc <= fd else d


def fit_delta(x: np.ndarray, b: int, rtol: float = 1e-3) -> float:
    """Step size minimizing the empirical quantization MSE of ``x``.

    The empirical objective has small sample-driven ripples, so a log-spaced
    scan first marks every step within 1% of the best coarse value, a fine
    grid of relative spacing ``rtol / 10`` covers that region, and
    golden-section search polishes the best fine point.
    """
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("no training samples")
    hi = float(x.max()) / (2**b - 1)
    if not hi > 0:
        raise ValueError("training samples are all zero")
    lo = hi * 1e-4
    grid = np.geomspace(lo, hi, int(math.log(hi / lo) / 0.01) + 1)
    vals = np.array([quantization_mse(x, d, b) for d in grid])
    near = np.flatnonzero(vals <= vals.min() * 1.01)
    a = grid[max(near[0] - 1, 0)]
    c = grid[min(near[-1] + 1, len(grid) - 1)]
    step = rtol / 10
    fine = np.exp(np.arange(math.log(a), math.log(c) + step, step))
    fvals = np.array([quantization_mse(x, d, b) for d in fine])
    k = int(np.argmin(fvals))
    best = fine[k]
    if 0 < k < len(fine) - 1:
        cand = _golden_min(lambda d: quantization_mse(x, d, b), fine[k - 1], fine[k + 1], step / 10)
        if quantization_mse(x, cand, b) < fvals[k]:
            best = cand
    return float(best)


def train_delta(
    b: int, b_prime: int, n_t: int, n_train: int, rng: np.random.Generator
) -> float:
    """MSE-trained CQI step size for ``b`` bits on RVQ effective gains."""
    if n_train < 1:
        raise ValueError("n_train must be positive")
    x = effective_gain_samples(b_prime, n_t, n_train, rng)
    return fit_delta(x, b)


class DeltaCache:
    """Trained step sizes stored as ``B,Bprime,Nt,seed,delta`` lines."""

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self.entries: dict[tuple[int, int, int, int], float] = {}
        self._samples: dict[tuple[int, int, int, int], np.ndarray] = {}
        if self.path is not None and self.path.exists():
            self.load()

    def load(self):
        for line in self.path.read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("B,"):
                continue
            b, bp, nt, seed, delta = line.split(",")
            self.entries[(int(b), int(bp), int(nt), int(seed))] = float(delta)

    def save(self):
        if self.path is None:
            return
        rows = ["B,Bprime,Nt,seed,delta"]
        rows += [f"{b},{bp},{nt},{s},{d:.6g}" for (b, bp, nt, s), d in sorted(self.entries.items())]
        self.path.write_text("\n".join(rows) + "\n")

    def samples(self, b_prime, n_t, seed, n_train):
        """Training gains; shared by every B at the same (B', N_t, seed)."""
        if n_train < 1:
            raise ValueError("n_train must be positive")
        skey = (b_prime, n_t, seed, n_train)
        if skey not in self._samples:
            self._samples[skey] = nested_gain_samples(b_prime, n_t, n_train, seed)
        return self._samples[skey]

    def get(self, b, b_prime, n_t, seed, n_train=100_000):
        key = (b, b_prime, n_t, seed)
        if key not in self.entries:
            x = self.samples(b_prime, n_t, seed, n_train)
            self.entries[key] = float(f"{fit_delta(x, b):.6g}")
            self.save()
        return self.entries[key]
