"""Decoherence budget: thermal enhancement, beta factor, Purcell factor."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import AtomRates


class UndefinedRatioError(ValueError):
    """Raised when a figure of merit has a vanishing denominator."""


@dataclass(frozen=True)
class DecoherenceBudget:
    """Inputs to the thermally enhanced intrinsic decoherence (rad/s).

    gamma_prime0:       intrinsic decoherence at zero temperature.
    n_th:               thermal occupation of the waveguide bath.
    gamma_1d:           total waveguide emission rate.
    hybridization_term: measured coupler-induced decoherence addition.
    """

    gamma_prime0: float
    n_th: float
    gamma_1d: float
    hybridization_term: float = 0.0

    def __post_init__(self):
        for name in ("gamma_prime0", "n_th", "gamma_1d", "hybridization_term"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def thermal_gamma_prime(b: DecoherenceBudget, hybridization_thermalized: bool = False) -> float:
    """Intrinsic decoherence with thermal enhancement.

    gamma' = 2 n_th (gamma_1d + gamma'_0) + gamma'_0 + hybridization, using
    the approximation gamma_2_th = gamma_1_th / 2.  By default the measured
    hybridization term is added after the thermal enhancement; pass
    ``hybridization_thermalized=True`` to include it inside (the source data
    does not determine the ordering, so both are exposed).
    """
    if hybridization_thermalized:
        base = b.gamma_prime0 + b.hybridization_term
        return 2.0 * b.n_th * (b.gamma_1d + base) + base
    return 2.0 * b.n_th * (b.gamma_1d + b.gamma_prime0) + b.gamma_prime0 + b.hybridization_term


def beta_factor(rates: AtomRates) -> float:
    """Fraction of the total decoherence that is forward waveguide emission."""
    denom = rates.gamma_f + rates.gamma_b + rates.gamma_prime
    if denom <= 0:
        raise UndefinedRatioError("beta undefined for an atom with all-zero rates")
    return rates.gamma_f / denom


def purcell_factor(rates: AtomRates) -> float:
    """Ratio of forward emission to intrinsic decoherence, gamma_f / gamma'.

    Returns +inf for a lossless atom; for vanishing backward coupling it
    equals beta / (1 - beta).
    """
    if rates.gamma_prime == 0.0:
        return math.inf
    return rates.gamma_f / rates.gamma_prime
