"""Connection-probability kernels and target sampling for joining nodes.

Two kernels are provided: the local-world preferential kernel (selection
probability ``M/(m0+t) * k_i / sum_local k``) and the hybrid kernel that mixes
a uniform term with weight ``p`` and a preferential term with weight ``1-p``.
Raw kernel outputs go through :func:`preprocess_and_normalize` and then
:func:`sample_targets`, which draws distinct targets.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

DEFAULT_EPS = 1e-12

# clamped entries sit at eps only up to normalization rounding
_VALID_SLACK = 1.0 + 1e-6


class DegenerateWorldError(ValueError):
    """The local world's degree sum is zero, so the preferential term is undefined."""


@dataclass(frozen=True)
class LocalWorld:
    """Candidate targets of one joining node with a frozen degree snapshot."""

    ids: np.ndarray
    degrees: np.ndarray

    def __post_init__(self) -> None:
        ids = np.asarray(self.ids, dtype=np.int64)
        degrees = np.asarray(self.degrees, dtype=np.int64)
        if ids.shape != degrees.shape or ids.ndim != 1:
            raise ValueError("ids and degrees must be 1-d arrays of equal length")
        if degrees.size and degrees.min() < 0:
            raise ValueError("degrees must be non-negative")
        if np.unique(ids).size != ids.size:
            raise ValueError("duplicate node ids in local world")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "degrees", degrees)

    @classmethod
    def from_pairs(cls, members: Iterable[tuple[int, int]]) -> "LocalWorld":
        members = list(members)
        return cls(
            np.array([m[0] for m in members], dtype=np.int64),
            np.array([m[1] for m in members], dtype=np.int64),
        )

    @property
    def size(self) -> int:
        return int(self.ids.size)

    def __len__(self) -> int:
        return self.size

    @property
    def members(self) -> list[tuple[int, int]]:
        return list(zip(self.ids.tolist(), self.degrees.tolist()))

    @property
    def degree_sum(self) -> int:
        return int(self.degrees.sum())


def _check_index(lw: LocalWorld, i: int) -> None:
    if not 0 <= i < lw.size:
        raise IndexError(f"member index {i} out of range for local world of size {lw.size}")


def baseline_probs(lw: LocalWorld, M: int, m0: int, t: int) -> np.ndarray:
    """Local-world preferential probabilities for every member."""
    if M < 1 or m0 < 1 or t < 0:
        raise ValueError("need M >= 1, m0 >= 1, t >= 0")
    if M > m0 + t:
        raise ValueError(f"local world size M={M} exceeds node count m0+t={m0 + t}")
    total = lw.degree_sum
    if total <= 0:
        raise DegenerateWorldError("zero degree sum in local world")
    return (M / (m0 + t)) * (lw.degrees / total)


def baseline_prob(lw: LocalWorld, M: int, m0: int, t: int, i: int) -> float:
    _check_index(lw, i)
    return float(baseline_probs(lw, M, m0, t)[i])


def hybrid_probs(lw: LocalWorld, p: float) -> np.ndarray:
    """``p/M_i + k_i (1-p) / sum_local k`` for every member.

    At ``p == 1`` the preferential term vanishes and a zero degree sum is fine.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    M = lw.size
    if M < 1:
        raise ValueError("local world is empty")
    uniform = np.full(M, p / M)
    if p == 1.0:
        return uniform
    total = lw.degree_sum
    if total <= 0:
        raise DegenerateWorldError("zero degree sum in local world with p < 1")
    return uniform + lw.degrees * ((1.0 - p) / total)


def hybrid_prob(lw: LocalWorld, p: float, i: int) -> float:
    _check_index(lw, i)
    return float(hybrid_probs(lw, p)[i])


def preprocess_and_normalize(raw, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Clamp entries below ``eps`` up to ``eps`` and rescale to unit sum."""
    arr = np.array(raw, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("probability vector must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)) or arr.min() < 0:
        raise ValueError("probabilities must be finite and non-negative")
    np.maximum(arr, eps, out=arr)
    arr /= arr.sum()
    return arr


def sample_targets(
    lw: LocalWorld,
    probs,
    m: int,
    eps: float = DEFAULT_EPS,
    rng: np.random.Generator | None = None,
) -> list[int]:
    """Draw ``min(m, M_i)`` distinct member ids.

    Members are drawn one at a time, each draw renormalizing over the mass
    still left. If fewer than ``m`` entries carry more than ``eps``, the
    weights are ignored and members are drawn uniformly without replacement.
    """
    if m < 1:
        raise ValueError("m must be positive")
    probs = np.asarray(probs, dtype=np.float64)
    M = lw.size
    if probs.shape != (M,):
        raise ValueError(f"expected {M} probabilities, got shape {probs.shape}")
    if rng is None:
        raise ValueError("a seeded numpy Generator is required")
    if m >= M:
        return lw.ids.tolist()

    n_valid = int(np.count_nonzero(probs > eps * _VALID_SLACK))
    if n_valid < m:
        picks = rng.choice(M, size=m, replace=False)
        return lw.ids[picks].tolist()

    weights = probs.copy()
    picks = []
    for _ in range(m):
        cdf = np.cumsum(weights)
        u = rng.random() * cdf[-1]
        k = int(np.searchsorted(cdf, u, side="right"))
        # side="right" never lands on a zeroed entry; only u == cdf[-1] can overshoot
        if k >= M:
            k = int(np.flatnonzero(weights)[-1])
        picks.append(k)
        weights[k] = 0.0
    return lw.ids[picks].tolist()


__all__ = [
    "DEFAULT_EPS",
    "DegenerateWorldError",
    "LocalWorld",
    "baseline_prob",
    "baseline_probs",
    "hybrid_prob",
    "hybrid_probs",
    "preprocess_and_normalize",
    "sample_targets",
]
