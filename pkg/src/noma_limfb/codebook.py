"""Random vector quantization (RVQ) codebooks and PMI selection."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import complex_normal

MAX_BITS = 20


@dataclass(frozen=True)
class Codebook:
    vectors: np.ndarray  # (2**b_prime, n_t), unit-norm rows
    b_prime: int

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def n_t(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class PmiSelection:
    index: int
    effective_gain: float
    eta: float


def rvq_vectors(b_prime: int, n_t: int, rng: np.random.Generator) -> np.ndarray:
    """``2**b_prime`` i.i.d. vectors uniform on the complex unit sphere."""
    if not 1 <= b_prime <= MAX_BITS:
        raise ValueError(f"b_prime must be in [1, {MAX_BITS}], got {b_prime}")
    if n_t < 1:
        raise ValueError(f"n_t must be >= 1, got {n_t}")
    while True:
        c = complex_normal(rng, (2**b_prime, n_t))
        norms = np.sqrt(np.sum(c.real**2 + c.imag**2, axis=-1))
        if np.all(norms > 0.0):
            return c / norms[:, None]


def generate_rvq(b_prime: int, n_t: int, rng: np.random.Generator) -> Codebook:
    return Codebook(rvq_vectors(b_prime, n_t, rng), b_prime)


def codeword_gains(h: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """``|h^H c_j|^2`` for every codeword; broadcasts over leading axes.

    ``h`` has shape ``(..., n_t)`` and ``vectors`` ``(..., K, n_t)``.
    """
    proj = np.sum(np.conj(h)[..., None, :] * vectors, axis=-1)
    return proj.real**2 + proj.imag**2


def select_pmi(h, cb: Codebook) -> PmiSelection:
    """MRT codeword choice; ``argmax`` breaks ties toward the smallest index."""
    h = np.asarray(h, dtype=complex)
    if h.shape != (cb.n_t,):
        raise ValueError(f"dimension mismatch: {h.shape} vs ({cb.n_t},)")
    gains = codeword_gains(h, cb.vectors)
    j = int(np.argmax(gains))
    hn = float(np.vdot(h, h).real)
    return PmiSelection(index=j, effective_gain=float(gains[j]), eta=float(gains[j] / hn))


def cos_theta_hat(w1, w2) -> float:
    """``|w1^H w2|`` for unit-norm beams, clipped into [0, 1]."""
    return min(abs(np.vdot(np.asarray(w1), np.asarray(w2))), 1.0)


def eta_cdf(eta, n_t: int, b_prime: int):
    """CDF of the RVQ direction quality for i.i.d. Rayleigh channels."""
    eta = np.clip(np.asarray(eta, dtype=float), 0.0, 1.0)
    return (1.0 - (1.0 - eta) ** (n_t - 1)) ** (2**b_prime)


def dump_codebook(cb: Codebook, path) -> None:
    """Write one codeword per line as ``re,im;re,im;...``."""
    lines = [
        ";".join(f"{z.real:.17g},{z.imag:.17g}" for z in row) for row in cb.vectors
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_codebook(path) -> Codebook:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        rows.append([complex(float(re), float(im)) for re, im in
                     (pair.split(",") for pair in line.split(";"))])
    vectors = np.array(rows, dtype=complex)
    size = vectors.shape[0]
    b_prime = size.bit_length() - 1
    if size != 2**b_prime:
        raise ValueError(f"codebook size {size} is not a power of two")
    return Codebook(vectors, b_prime)
