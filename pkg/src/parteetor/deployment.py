"""Deployment scenarios: which relays become TEE-based.

Population-fraction scenarios (random, bandwidth weighted, inverse bandwidth
weighted) mark exactly ``round(p * relays)`` relays. Circuit-position weighted
scenarios mark fixed fractions of the entry-capable, all, and exit-capable
relays in three phases whose picks are unioned.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence, Union

import numpy as np

from .model import NetworkModel


class InsufficientPositiveWeight(ValueError):
    pass


def round_half_up(fraction: float, count: int) -> int:
    """``round(fraction * count)`` with halves rounded up, computed in decimal."""
    value = Decimal(repr(float(fraction))) * count
    return int(value.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def _check_fraction(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


def _fmt(value: float) -> str:
    return format(float(value), "g")


@dataclass(frozen=True)
class PopulationFraction:
    """Base of the scenarios that mark a fraction ``p`` of all relays."""

    p: float
    kind = "population"

    def __post_init__(self):
        _check_fraction("p", self.p)

    @property
    def param_label(self) -> str:
        return _fmt(self.p)

    @property
    def x_value(self) -> float:
        return self.p

    def relay_weights(self, bandwidths: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Random(PopulationFraction):
    kind = "random"

    def relay_weights(self, bandwidths):
        return np.ones(bandwidths.size)


class BandwidthWeighted(PopulationFraction):
    kind = "bandwidth"

    def relay_weights(self, bandwidths):
        return bandwidths.astype(float)


class InverseBandwidthWeighted(PopulationFraction):
    kind = "inverse-bandwidth"

    def relay_weights(self, bandwidths):
        return 1.0 / np.maximum(bandwidths.astype(float), 1.0)


class Distribution(str, enum.Enum):
    ENTRY = "entry"
    EXIT = "exit"
    ENTRY_EXIT = "entry-exit"
    ENTRY_MIDDLE_EXIT = "entry-middle-exit"

    @property
    def weights(self) -> tuple[str, ...]:
        """Names of the weights this distribution varies."""
        return {
            Distribution.ENTRY: ("we",),
            Distribution.EXIT: ("wx",),
            Distribution.ENTRY_EXIT: ("we", "wx"),
            Distribution.ENTRY_MIDDLE_EXIT: ("we", "wm", "wx"),
        }[self]


@dataclass(frozen=True)
class CircuitPositionWeighted:
    distribution: Distribution
    w_e: float = 0.0
    w_m: float = 0.0
    w_x: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "distribution", Distribution(self.distribution))
        used = self.distribution.weights
        for name, value in (("we", self.w_e), ("wm", self.w_m), ("wx", self.w_x)):
            _check_fraction(name, value)
            if name not in used and value != 0:
                raise ValueError(f"{name} is unused by the {self.distribution.value} distribution and must be 0")

    @property
    def kind(self) -> str:
        return f"position:{self.distribution.value}"

    @property
    def weight_values(self) -> dict[str, float]:
        return {"we": self.w_e, "wm": self.w_m, "wx": self.w_x}

    @property
    def param_label(self) -> str:
        values = self.weight_values
        return ";".join(f"{name}={_fmt(values[name])}" for name in self.distribution.weights)

    @property
    def x_value(self) -> float:
        # the last varied weight (w_x for the multi-weight distributions)
        return self.weight_values[self.distribution.weights[-1]]


DeploymentScenario = Union[Random, BandwidthWeighted, InverseBandwidthWeighted, CircuitPositionWeighted]


def point_key(scenario: DeploymentScenario) -> str:
    """Canonical label of a scenario, used to key random substreams."""
    return f"{scenario.kind}|{scenario.param_label}"


def weighted_sample_without_replacement(weights: Sequence[float], k: int, rng: np.random.Generator) -> set[int]:
    """Draw ``k`` distinct indices, each draw proportional to weight among those left.

    Implemented with exponential keys: index ``i`` gets ``E_i / w_i`` with
    ``E_i ~ Exp(1)`` and the ``k`` smallest keys win. The winners, read in key
    order, have exactly the law of ``k`` successive weighted draws.
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    positive = int(np.count_nonzero(w > 0))
    if k < 0 or k > positive:
        raise InsufficientPositiveWeight(f"cannot draw {k} items from {positive} with positive weight")
    if k == 0:
        return set()
    noise = rng.exponential(size=w.size)
    with np.errstate(divide="ignore"):
        keys = np.where(w > 0, noise / w, np.inf)
    winners = np.argpartition(keys, k - 1)[:k]
    return {int(i) for i in winners}


def _sample_from(candidates: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    picked = weighted_sample_without_replacement(np.ones(candidates.size), k, rng)
    return candidates[sorted(picked)]


def assign_tees(network: NetworkModel, scenario: DeploymentScenario, rng: np.random.Generator) -> NetworkModel:
    """Copy of ``network`` with TEE status drawn under ``scenario``."""
    m = len(network)
    if m == 0:
        raise ValueError("cannot deploy TEEs on an empty network")

    if isinstance(scenario, CircuitPositionWeighted):
        chosen: set[int] = set()
        all_relays = np.arange(m)
        phases = (
            (np.flatnonzero(network.entry_mask), scenario.w_e),
            (all_relays, scenario.w_m),
            (np.flatnonzero(network.exit_mask), scenario.w_x),
        )
        for members, fraction in phases:
            k = round_half_up(fraction, members.size)
            chosen.update(int(i) for i in _sample_from(members, k, rng))
        return network.with_tee(chosen)

    if not isinstance(scenario, PopulationFraction):
        raise TypeError(f"unknown scenario {scenario!r}")
    k = round_half_up(scenario.p, m)
    weights = scenario.relay_weights(network.bandwidths)
    return network.with_tee(weighted_sample_without_replacement(weights, k, rng))
