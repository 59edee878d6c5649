"""Deterministic generation of random inputs: Gaussian vector sets and GOE matrices.

All randomness flows through numpy's Philox4x32-10 counter-based bit
generator keyed by a 64-bit seed. Normal variates use the generator's
ziggurat method (an exact rejection sampler, not an approximation); numpy
guarantees stream stability for a fixed (BitGenerator, method) pair, so
the same seed reproduces bit-identical output across runs and machines.

Parallel work splits by handing each trial its own key (see trial_seed),
never by sharing one stream, so results are independent of worker count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_U64_MAX = 2**64 - 1


def _generator(key: int) -> np.random.Generator:
    # Philox is counter-based: distinct keys give statistically independent
    # streams, which is what makes per-trial keying sound.
    return np.random.Generator(np.random.Philox(key=key))


def _check_seed(seed: int) -> None:
    if not isinstance(seed, (int, np.integer)):
        raise ValueError(f"seed must be an integer, got {type(seed).__name__}")
    if not (0 <= int(seed) <= _U64_MAX):
        raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")


@dataclass(frozen=True)
class SampleSet:
    """m Gaussian vectors in R^d, rows of `vectors`, entries N(0, 1/d)."""

    seed: int
    d: int
    m: int
    vectors: np.ndarray  # m x d, row i holds v_i

    def __post_init__(self):
        if self.vectors.shape != (self.m, self.d):
            raise ValueError(
                f"vectors must be {self.m}x{self.d}, got {self.vectors.shape}"
            )

    @property
    def eta(self) -> np.ndarray:
        """Length-m vector of squared-norm deviations, eta_i = |v_i|^2 - 1."""
        return np.einsum("ij,ij->i", self.vectors, self.vectors) - 1.0


@dataclass(frozen=True)
class GoeMatrix:
    """Symmetric Gaussian matrix with zero diagonal."""

    seed: int
    n: int
    entries: np.ndarray  # n x n symmetric, zero diagonal

    def __post_init__(self):
        if self.entries.shape != (self.n, self.n):
            raise ValueError(
                f"entries must be {self.n}x{self.n}, got {self.entries.shape}"
            )


def sample_vectors(seed: int, d: int, m: int) -> SampleSet:
    """Draw m independent vectors v_i ~ N(0, (1/d) I_d), deterministically in seed.

    Entries are standard normals scaled by 1/sqrt(d), so each vector has
    expected squared norm exactly 1.
    """
    _check_seed(seed)
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rng = _generator(int(seed))
    vectors = rng.standard_normal((m, d)) / math.sqrt(d)
    return SampleSet(seed=int(seed), d=d, m=m, vectors=vectors)


def sample_goe(seed: int, n: int, variance: float) -> GoeMatrix:
    """Draw a symmetric n x n matrix, zero diagonal, offdiagonal N(0, variance).

    Upper-triangle entries are i.i.d.; the lower triangle mirrors them.
    """
    _check_seed(seed)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not variance > 0:
        raise ValueError(f"variance must be positive, got {variance}")
    rng = _generator(int(seed))
    x = rng.standard_normal((n, n)) * math.sqrt(variance)
    upper = np.triu(x, 1)
    return GoeMatrix(seed=int(seed), n=n, entries=upper + upper.T)


def trial_seed(seed: int, index: int) -> int:
    """Per-trial key: seed XOR trialIndex, as unsigned 64-bit values.

    Distinct indices give distinct Philox keys, so trials may be generated
    in any order or in parallel with identical results.
    """
    _check_seed(seed)
    if not (0 <= index <= _U64_MAX):
        raise ValueError(f"trial index must fit in u64, got {index}")
    return int(seed) ^ int(index)
