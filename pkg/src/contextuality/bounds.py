"""Noncontextual bounds corrected for imperfect compatibility.

``winter_bound`` relaxes an ideal bound ``alpha`` when outcomes of the same
event may differ between contexts with probability at most ``epsilon``.
``operational_pm`` is the PM criterion for measurements blurred by
depolarizing noise of visibility ``r``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

STRICT = 1e-12


@dataclass(frozen=True)
class EpsilonOncInstance:
    alpha: float
    weights: tuple
    multiplicities: tuple
    epsilon: float

    def __post_init__(self):
        if len(self.weights) != len(self.multiplicities):
            raise ValueError("one multiplicity per weight required")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")
        if any(int(k) != k or k < 1 for k in self.multiplicities):
            raise ValueError("multiplicities must be integers >= 1")
        _check_epsilon(self.epsilon)

    @property
    def slope(self):
        return sum(w * (k - 1) for w, k in zip(self.weights, self.multiplicities))


@dataclass(frozen=True)
class PresetInstance:
    """Bound given directly by its constant and slope."""

    alpha: float
    slope: float
    epsilon: float

    def __post_init__(self):
        _check_epsilon(self.epsilon)


def _check_epsilon(eps):
    if not 0 <= eps <= 1:
        raise ValueError(f"epsilon must lie in [0, 1], got {eps}")


#: PM square in its event form: ideal bound 5, slope 72 (quantum value 6)
PRESETS = {"pm-winter": {"alpha": 5, "slope": 72, "quantum_value": 6}}


def preset(name: str, epsilon) -> PresetInstance:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    p = PRESETS[name]
    return PresetInstance(p["alpha"], p["slope"], epsilon)


def winter_bound(instance):
    """``alpha + epsilon * sum_i lambda_i (k_i - 1)``."""
    return instance.alpha + instance.epsilon * instance.slope


def winter_verdict(quantum_value, instance) -> bool:
    """True when ``quantum_value`` strictly beats the corrected bound."""
    return bool(quantum_value > winter_bound(instance) + STRICT)


def operational_pm(r: float) -> tuple[float, bool]:
    """Value ``9 r^2`` and whether it beats the noncontextual bound 5."""
    if not 0 <= r <= 1:
        raise ValueError(f"r must lie in [0, 1], got {r}")
    value = 9 * r * r
    return value, bool(value > 5 + STRICT)


OPERATIONAL_THRESHOLD = math.sqrt(5) / 3
