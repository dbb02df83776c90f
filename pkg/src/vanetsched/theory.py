"""Mean-field degree trajectories and degree distributions.

Three regimes, selected by the hybrid weight ``p``:

* ``p == 1``: uniform attachment, exponential law ``(e/m) exp(-k/m)``
* ``p == 0``: preferential attachment, power law ``2 m^2 k^-3``
* ``0 < p < 1``: shifted power law ``C (k + a)^-gamma`` with
  ``gamma = (3-p)/(1-p)``

All densities live on the continuous domain ``k >= m``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class Regime(str, Enum):
    EXPONENTIAL = "exponential"
    POWER_LAW = "powerlaw"
    TUNABLE = "tunable"


def regime_for(p: float) -> Regime:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p == 1.0:
        return Regime.EXPONENTIAL
    if p == 0.0:
        return Regime.POWER_LAW
    return Regime.TUNABLE


@dataclass(frozen=True)
class TheoryCurve:
    regime: Regime
    m: int
    p: float
    beta: float
    A: float
    B: float
    a: float
    gamma: float
    C: float


def _check_m(m) -> None:
    if m <= 0:
        raise ValueError(f"m must be positive, got {m}")


def _check_k(k: float, m) -> None:
    if k < m:
        raise ValueError(f"degree k={k} lies below the minimum degree m={m}")


def tunable_params(m: int, p: float) -> TheoryCurve:
    """Constants of the shifted power law; only defined for ``0 < p < 1``."""
    _check_m(m)
    if not 0.0 < p < 1.0:
        raise ValueError(f"tunable regime needs 0 < p < 1, got {p}")
    q = 1.0 - p
    A = m * (1.0 + p) / q
    B = 2.0 * m * p / q
    exponent = 2.0 / q
    log_c = math.log(exponent) + exponent * math.log(A)
    return TheoryCurve(
        regime=Regime.TUNABLE,
        m=m,
        p=p,
        beta=q / 2.0,
        A=A,
        B=B,
        a=B,
        gamma=(3.0 - p) / q,
        C=math.exp(log_c) if log_c < 709.0 else math.inf,
    )


def exponential_pdf(k: float, m: int) -> float:
    _check_m(m)
    _check_k(k, m)
    return (math.e / m) * math.exp(-k / m)


def powerlaw_pdf(k: float, m: int) -> float:
    _check_m(m)
    _check_k(k, m)
    return 2.0 * m * m * k**-3.0


def tunable_pdf(k: float, m: int, p: float) -> float:
    c = tunable_params(m, p)
    _check_k(k, m)
    if math.isfinite(c.C):
        return c.C * (k + c.a) ** -c.gamma
    # C alone overflows for p close to 1
    return math.exp(
        math.log(2.0 / (1.0 - p))
        + (2.0 / (1.0 - p)) * math.log(c.A)
        - c.gamma * math.log(k + c.a)
    )


def degree_pdf(k: float, m: int, p: float) -> float:
    """Density for any ``p`` in [0, 1], dispatching to the matching regime."""
    regime = regime_for(p)
    if regime is Regime.EXPONENTIAL:
        return exponential_pdf(k, m)
    if regime is Regime.POWER_LAW:
        return powerlaw_pdf(k, m)
    return tunable_pdf(k, m, p)


def degree_ccdf(k: float, m: int, p: float) -> float:
    """Closed-form tail mass ``P(K >= k)``; equals 1 for ``k <= m``."""
    _check_m(m)
    regime = regime_for(p)
    if k <= m:
        return 1.0
    if regime is Regime.EXPONENTIAL:
        return math.exp(1.0 - k / m)
    if regime is Regime.POWER_LAW:
        return (m / k) ** 2
    c = tunable_params(m, p)
    return (c.A / (k + c.a)) ** (c.gamma - 1.0)


def bin_probability(k_lo: float, k_hi: float, m: int, p: float) -> float:
    """Probability mass the density places on ``[k_lo, k_hi)``."""
    if k_hi < k_lo:
        raise ValueError("k_hi must not be below k_lo")
    if k_hi <= m:
        return 0.0
    return degree_ccdf(max(k_lo, m), m, p) - degree_ccdf(k_hi, m, p)


def degree_trajectory(t: float, t_i: float, m: int, p: float, m0: float) -> float:
    """Mean-field degree at time ``t`` of a node that joined at ``t_i``.

    The uniform regime keeps the finite-``m0`` logarithm; the other two use
    the large-``t`` forms. ``m0 = 0`` is accepted for the ``t >> m0`` limit.
    """
    _check_m(m)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if t_i <= 0 or t_i > t:
        raise ValueError(f"need 0 < t_i <= t, got t_i={t_i}, t={t}")
    if m0 < 0:
        raise ValueError("m0 must be non-negative")
    if p == 1.0:
        return m * (math.log((m0 + t) / (m0 + t_i)) + 1.0)
    if p == 0.0:
        return m * math.sqrt(t / t_i)
    c = tunable_params(m, p)
    return c.A * (t / t_i) ** c.beta - c.B


__all__ = [
    "Regime",
    "TheoryCurve",
    "bin_probability",
    "degree_ccdf",
    "degree_pdf",
    "degree_trajectory",
    "exponential_pdf",
    "powerlaw_pdf",
    "regime_for",
    "tunable_params",
    "tunable_pdf",
]
