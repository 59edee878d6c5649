"""Truncated Neumann series for A^{-1} and truncation-error measurement.

With T = -(Malpha + Mbeta + MD + (1/d) I) we have A = I - T, so whenever
||T|| < 1 the inverse expands as A^{-1} = sum_k T^k. Full-scale experiments
use plain degree-K partial sums applied by Horner recursion; the per-matrix
occurrence-capped sum over ordered products is kept only as an exact
small-scale oracle (truncated_T0_exact).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .construction import Decomposition
from .sampling import _generator


class DivergentSeriesError(RuntimeError):
    """Power-iteration estimate of ||T|| reached 1; the series cannot converge."""


class SizeLimitError(RuntimeError):
    """Exact-oracle enumeration requested beyond its m/degree guard rails."""


#: per-matrix occurrence caps (Malpha, Mbeta, MD, (1/d)I) in oracle mode
DEFAULT_CAPS = (3, 3, 3, 1)

_ORACLE_MAX_M = 64
_ORACLE_MAX_DEG = 6


@dataclass(frozen=True)
class NeumannConfig:
    """Truncation depth plus optional oracle-mode occurrence caps."""

    K: int
    caps: tuple[int, int, int, int] | None = None

    def __post_init__(self):
        if self.K < 0:
            raise ValueError(f"truncation degree must be >= 0, got {self.K}")
        if self.caps is not None and (len(self.caps) != 4 or min(self.caps) < 0):
            raise ValueError(f"caps must be four nonnegative integers, got {self.caps}")


def default_depth(d: int) -> int:
    """Default truncation degree: ceil(log2 d) + 4."""
    return math.ceil(math.log2(max(2, d))) + 4


def _check_convergent(dec: Decomposition) -> None:
    if dec.t_norm_est >= 1.0:
        raise DivergentSeriesError(
            f"||T|| estimate {dec.t_norm_est:.4f} >= 1: Neumann series diverges"
        )


def neumann_apply(dec: Decomposition, x: np.ndarray, k: int) -> np.ndarray:
    """Apply the degree-k partial sum sum_{j<=k} T^j to x by Horner recursion.

    Each step costs one A matvec: T y = y - A y. Never forms any power of T.
    """
    if k < 0:
        raise ValueError(f"truncation degree must be >= 0, got {k}")
    _check_convergent(dec)
    x = np.asarray(x, dtype=float)
    y = x.copy()
    for _ in range(k):
        y = x + (y - dec.A @ y)
    return y


def truncated_T0_exact(
    dec: Decomposition,
    caps: tuple[int, int, int, int] = DEFAULT_CAPS,
    maxdeg: int = 4,
) -> np.ndarray:
    """Exact capped truncation: sum over ordered products of the four parts.

    Enumerates every sequence (Q_1..Q_k), k <= maxdeg, drawn from
    {Malpha, Mbeta, MD, (1/d)I} with at most caps[i] occurrences of part i,
    and sums (-1)^k Q_1 ... Q_k. Exponential in maxdeg; guarded to m <= 64,
    maxdeg <= 6.
    """
    if dec.m > _ORACLE_MAX_M or maxdeg > _ORACLE_MAX_DEG:
        raise SizeLimitError(
            f"oracle mode limited to m <= {_ORACLE_MAX_M}, maxdeg <= {_ORACLE_MAX_DEG}"
            f" (got m={dec.m}, maxdeg={maxdeg})"
        )
    if len(caps) != 4 or min(caps) < 0:
        raise ValueError(f"caps must be four nonnegative integers, got {caps}")
    if maxdeg < 0:
        raise ValueError(f"maxdeg must be >= 0, got {maxdeg}")
    parts = (
        dec.malpha,
        dec.mbeta,
        np.diag(dec.md),
        np.eye(dec.m) / dec.d,
    )
    total = np.eye(dec.m)  # the empty product

    def extend(prefix: np.ndarray, depth: int, used: list[int]) -> None:
        nonlocal total
        if depth == maxdeg:
            return
        for i, part in enumerate(parts):
            if used[i] == caps[i]:
                continue
            product = prefix @ part
            total += (-1.0) ** (depth + 1) * product
            used[i] += 1
            extend(product, depth + 1, used)
            used[i] -= 1

    extend(np.eye(dec.m), 0, [0, 0, 0, 0])
    return total


def truncation_error(dec: Decomposition, k: int, max_iter: int = 2000) -> float:
    """Spectral-norm estimate of A^{-1} minus the degree-k partial sum.

    Power iteration on the symmetric difference operator, applied through the
    cached A solve and neumann_apply; the operator is never materialized.
    """
    _check_convergent(dec)

    def apply_diff(vec: np.ndarray) -> np.ndarray:
        return dec.apply_ainv(vec) - neumann_apply(dec, vec, k)

    rng = _generator(0)
    v = rng.standard_normal(dec.m)
    v /= np.linalg.norm(v)
    rayleigh = None
    stable = 0
    for _ in range(max_iter):
        w = apply_diff(v)
        norm_w = float(np.linalg.norm(w))
        new = float(v @ w)
        if norm_w < 1e-13:
            # ||Delta v|| bounds the Rayleigh quotient; below this floor the
            # estimate sits in rounding noise and iterating cannot refine it
            return norm_w
        if rayleigh is not None and abs(new - rayleigh) <= 1e-12 * max(
            abs(new), 1e-30
        ):
            stable += 1
            if stable >= 3:
                return abs(new)
        else:
            stable = 0
        rayleigh = new
        v = w / norm_w
    return abs(rayleigh) if rayleigh is not None else 0.0
