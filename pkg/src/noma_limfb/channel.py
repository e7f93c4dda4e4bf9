"""Two-user Rayleigh channel draws and their geometric descriptors.

Random streams are numpy ``Generator`` objects.  Every Monte Carlo sample
owns a substream derived from ``(seed, sample_index)`` through
``numpy.random.SeedSequence`` so results do not depend on how samples are
split between workers.  Gaussian variates come from numpy's PCG64 bit
generator and its ziggurat normal sampler.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# spawn_key prefixes that keep the per-sample and shared streams disjoint
_SAMPLE_KEY = 1
_SHARED_KEY = 2


class DegenerateChannelError(ValueError):
    """A channel vector has zero norm."""


def sample_stream(seed: int, sample_index: int) -> np.random.Generator:
    """Independent random stream owned by one Monte Carlo sample."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(_SAMPLE_KEY, sample_index))
    return np.random.Generator(np.random.PCG64(ss))


def shared_stream(seed: int, tag=0) -> np.random.Generator:
    """Stream for run-wide objects such as a fixed codebook.

    ``tag`` is an integer or a tuple of integers naming the object.
    """
    tag = tuple(tag) if isinstance(tag, (tuple, list)) else (tag,)
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(_SHARED_KEY, *tag))
    return np.random.Generator(np.random.PCG64(ss))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) entries: real and imaginary parts each have variance 1/2."""
    z = rng.standard_normal(tuple(np.atleast_1d(shape)) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def draw_rayleigh(n_t: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one ``n_t``-dimensional Rayleigh channel vector.

    Zero-norm draws are discarded and redrawn.
    """
    if n_t < 1:
        raise ValueError(f"n_t must be >= 1, got {n_t}")
    while True:
        h = complex_normal(rng, n_t)
        if np.vdot(h, h).real > 0.0:
            return h


def inner_product(a, b) -> complex:
    """Return ``a^H b`` (conjugate-linear in the first argument)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def norm2(h) -> float:
    """Squared Euclidean norm."""
    h = np.asarray(h, dtype=complex)
    return float(np.vdot(h, h).real)


@dataclass(frozen=True)
class ChannelRealization:
    h1: np.ndarray
    h2: np.ndarray
    H1: float
    H2: float
    rho: float
    cos_theta: float
    sin2_theta: float
    H21_star: float
    H12_star: float

    @property
    def n_t(self) -> int:
        return self.h1.shape[0]


def describe(h1, h2) -> ChannelRealization:
    """Compute norms, strength ratio, angle and MRT cross gains of a pair.

    ``H21_star`` is the weak user's gain on the strong user's MRT beam,
    ``|h2^H h1 / ||h1|| |^2``; ``H12_star`` is the symmetric quantity.
    """
    h1 = np.asarray(h1, dtype=complex)
    h2 = np.asarray(h2, dtype=complex)
    if h1.shape != h2.shape:
        raise ValueError(f"dimension mismatch: {h1.shape} vs {h2.shape}")
    H1, H2 = norm2(h1), norm2(h2)
    if H1 == 0.0 or H2 == 0.0:
        raise DegenerateChannelError("zero-norm channel vector")
    cross = abs(np.vdot(h2, h1)) ** 2
    cos2 = min(cross / (H1 * H2), 1.0)
    return ChannelRealization(
        h1=h1,
        h2=h2,
        H1=H1,
        H2=H2,
        rho=float(np.sqrt(H2 / H1)),
        cos_theta=float(np.sqrt(cos2)),
        sin2_theta=1.0 - cos2,
        H21_star=cross / H1,
        H12_star=cross / H2,
    )
