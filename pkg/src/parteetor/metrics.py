"""Security, performance and privacy metrics over circuits and networks."""

from __future__ import annotations

import math
import statistics
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .deployment import round_half_up
from .model import Circuit, NetworkModel, Position
from .selection import POLICIES, SecurityPolicy, complies

MAX_ENUMERATION_RELAYS = 200


class EmptyInput(ValueError):
    pass


class MissingLoadEntry(KeyError):
    pass


class NetworkTooLarge(ValueError):
    pass


# -- security -----------------------------------------------------------------


@dataclass(frozen=True)
class SecurityReport:
    fractions: dict[SecurityPolicy, float]
    circuits: int = 0
    failures: int = 0

    def __getitem__(self, policy: SecurityPolicy) -> float:
        return self.fractions[policy]

    def chain_holds(self) -> bool:
        f = self.fractions
        return (
            f[SecurityPolicy.NONE] == 1.0
            and f[SecurityPolicy.ENTRY_MIDDLE_EXIT] <= f[SecurityPolicy.ENTRY_EXIT]
            and f[SecurityPolicy.ENTRY_EXIT] <= min(f[SecurityPolicy.ENTRY], f[SecurityPolicy.EXIT])
        )


def security_compliance(circuits: Sequence[Circuit], failures: int = 0) -> SecurityReport:
    """Fraction of ``circuits`` that complies with each policy."""
    if not circuits:
        raise EmptyInput("no circuits to score")
    n = len(circuits)
    fractions = {policy: sum(complies(c, policy) for c in circuits) / n for policy in POLICIES}
    return SecurityReport(fractions, circuits=n, failures=failures)


# -- performance --------------------------------------------------------------


def circuit_load(circuits: Iterable[Circuit]) -> Counter:
    """Number of circuits each relay (by fingerprint) takes part in."""
    load: Counter = Counter()
    for circuit in circuits:
        load.update(circuit.fingerprints)
    return load


def expected_bandwidth(circuit: Circuit, load: Mapping[str, int]) -> float:
    """Bottleneck bandwidth once each relay's bandwidth is shared among its circuits."""
    shares = []
    for relay in circuit:
        count = load.get(relay.fingerprint, 0)
        if count < 1:
            raise MissingLoadEntry(relay.fingerprint)
        shares.append(relay.bandwidth_kbps / count)
    return min(shares)


def median(values: Sequence[float]) -> float:
    if len(values) == 0:
        raise EmptyInput("median of an empty sequence")
    return float(statistics.median(values))


@dataclass(frozen=True)
class PerformanceReport:
    median_bandwidth: float
    bandwidths: list[float] = field(default_factory=list)
    load: dict[str, int] = field(default_factory=dict)
    failures: int = 0


def performance_report(circuits: Sequence[Circuit], failures: int = 0) -> PerformanceReport:
    """Median expected bandwidth over a batch; load is counted over the same batch.

    A batch with no circuits has a NaN median.
    """
    load = circuit_load(circuits)
    bandwidths = [expected_bandwidth(c, load) for c in circuits]
    value = median(bandwidths) if bandwidths else math.nan
    return PerformanceReport(value, bandwidths, dict(load), failures)


# -- privacy ------------------------------------------------------------------


def _clamped_product(*factors: int) -> int:
    if any(f <= 0 for f in factors):
        return 0
    return math.prod(factors)


def count_unique_circuits(network: NetworkModel, policy: SecurityPolicy) -> int:
    """Exact number of distinct policy-compliant (entry, middle, exit) triples.

    Entry and exit must be different relays, so ordered endpoint pairs are the
    product of the two endpoint sets minus the relays present in both. Any
    remaining relay (any remaining TEE relay under the full policy) fills the
    middle. Bandwidth plays no part.
    """
    c = network.counts
    if policy is SecurityPolicy.NONE:
        pairs = c.entry * c.exit - c.dual
    elif policy is SecurityPolicy.ENTRY:
        pairs = c.tee_entry * c.exit - c.tee_dual
    elif policy is SecurityPolicy.EXIT:
        pairs = c.entry * c.tee_exit - c.tee_dual
    else:
        pairs = c.tee_entry * c.tee_exit - c.tee_dual
    middles = c.tee - 2 if policy is SecurityPolicy.ENTRY_MIDDLE_EXIT else c.relays - 2
    return _clamped_product(pairs, middles)


def enumerate_circuits(network: NetworkModel, policy: SecurityPolicy) -> list[Circuit]:
    """Every policy-compliant circuit, by exhaustive search. Small networks only."""
    relays = network.relays
    if len(relays) > MAX_ENUMERATION_RELAYS:
        raise NetworkTooLarge(f"{len(relays)} relays exceeds the enumeration limit of {MAX_ENUMERATION_RELAYS}")
    need = policy.positions
    entries = [r for r in relays if r.entry_capable and (r.tee or Position.ENTRY not in need)]
    middles = [r for r in relays if r.tee or Position.MIDDLE not in need]
    exits = [r for r in relays if r.exit_capable and (r.tee or Position.EXIT not in need)]
    found = []
    for e in entries:
        for x in exits:
            if x is e:
                continue
            for m in middles:
                if m is not e and m is not x:
                    found.append(Circuit(e, m, x))
    return found


@dataclass(frozen=True)
class PrivacyReport:
    counts: dict[SecurityPolicy, int]

    def __getitem__(self, policy: SecurityPolicy) -> int:
        return self.counts[policy]

    def chain_holds(self) -> bool:
        c = self.counts
        P = SecurityPolicy
        return (
            c[P.ENTRY_MIDDLE_EXIT] <= c[P.ENTRY_EXIT] <= c[P.ENTRY] <= c[P.NONE]
            and c[P.ENTRY_EXIT] <= c[P.EXIT] <= c[P.NONE]
        )


def privacy_report(network: NetworkModel) -> PrivacyReport:
    return PrivacyReport({policy: count_unique_circuits(network, policy) for policy in POLICIES})


def uniform_class_deployment(network: NetworkModel, p: float) -> NetworkModel:
    """Mark ``round(p * size)`` relays TEE-based within each capability class.

    The classes are dual-capable, entry-only, exit-only and middle-only relays.
    Members are taken in network order; unique-circuit counts depend only on
    the class sizes, so the choice of members does not matter.
    """
    entry, exit_ = network.entry_mask, network.exit_mask
    classes = (entry & exit_, entry & ~exit_, ~entry & exit_, ~entry & ~exit_)
    chosen: list[int] = []
    for mask in classes:
        members = np.flatnonzero(mask)
        chosen.extend(int(i) for i in members[: round_half_up(p, members.size)])
    return network.with_tee(chosen)
