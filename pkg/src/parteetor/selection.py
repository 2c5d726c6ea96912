"""Security policies and bandwidth-weighted circuit construction."""

from __future__ import annotations

import enum
from bisect import bisect_right
from itertools import accumulate
from typing import Sequence

import numpy as np

from .model import Circuit, NetworkModel, Position, Relay

ENTRY, MIDDLE, EXIT = Position.ENTRY, Position.MIDDLE, Position.EXIT


class EmptyCandidates(ValueError):
    pass


class NoEligibleRelay(RuntimeError):
    def __init__(self, position: Position):
        super().__init__(f"no eligible relay for the {position.label} position")
        self.position = position


class SecurityPolicy(str, enum.Enum):
    """Positions of a circuit that must be TEE-based.

    Policies are partially ordered by inclusion of their requirement sets, so
    ``a <= b`` means every circuit complying with ``b`` also complies with ``a``.
    """

    NONE = "none"
    ENTRY = "entry"
    EXIT = "exit"
    ENTRY_EXIT = "entry-exit"
    ENTRY_MIDDLE_EXIT = "entry-middle-exit"

    @property
    def positions(self) -> frozenset[Position]:
        return _POLICY_POSITIONS[self]

    def tee_required(self, position: Position) -> bool:
        return position in self.positions

    def __le__(self, other):
        if not isinstance(other, SecurityPolicy):
            return NotImplemented
        return self.positions <= other.positions

    def __lt__(self, other):
        if not isinstance(other, SecurityPolicy):
            return NotImplemented
        return self.positions < other.positions

    def __ge__(self, other):
        if not isinstance(other, SecurityPolicy):
            return NotImplemented
        return self.positions >= other.positions

    def __gt__(self, other):
        if not isinstance(other, SecurityPolicy):
            return NotImplemented
        return self.positions > other.positions


_POLICY_POSITIONS = {
    SecurityPolicy.NONE: frozenset(),
    SecurityPolicy.ENTRY: frozenset({ENTRY}),
    SecurityPolicy.EXIT: frozenset({EXIT}),
    SecurityPolicy.ENTRY_EXIT: frozenset({ENTRY, EXIT}),
    SecurityPolicy.ENTRY_MIDDLE_EXIT: frozenset({ENTRY, MIDDLE, EXIT}),
}

POLICIES = tuple(SecurityPolicy)


class Attack(str, enum.Enum):
    REPLAY = "replay"
    FINGERPRINTING = "fingerprinting"
    ONION_SERVICE = "onion-service"
    BAD_APPLE = "bad-apple"
    BANDWIDTH_INFLATION = "bandwidth-inflation"


# minimal policy under which each attack class is mitigated
MITIGATION_TABLE = {
    Attack.REPLAY: SecurityPolicy.ENTRY,
    Attack.FINGERPRINTING: SecurityPolicy.ENTRY,
    Attack.ONION_SERVICE: SecurityPolicy.EXIT,
    Attack.BAD_APPLE: SecurityPolicy.EXIT,
    Attack.BANDWIDTH_INFLATION: SecurityPolicy.ENTRY_MIDDLE_EXIT,
}


def mitigated_attacks(policy: SecurityPolicy) -> frozenset[Attack]:
    return frozenset(attack for attack, needed in MITIGATION_TABLE.items() if needed <= policy)


def complies(circuit: Circuit, policy: SecurityPolicy) -> bool:
    return all(circuit.at(position).tee for position in policy.positions)


def select_weighted(candidates: Sequence[Relay], rng: np.random.Generator) -> Relay:
    """Pick one relay with probability proportional to its bandwidth.

    An integer ``r`` is drawn uniformly from ``[0, total)`` and the first
    candidate whose cumulative bandwidth exceeds ``r`` wins.
    """
    if not candidates:
        raise EmptyCandidates("no candidates to select from")
    if any(c.bandwidth_kbps <= 0 for c in candidates):
        raise ValueError("candidates must have positive bandwidth")
    cumulative = list(accumulate(c.bandwidth_kbps for c in candidates))
    r = int(rng.integers(cumulative[-1]))
    return candidates[bisect_right(cumulative, r)]


def _draw_skipping(indices: np.ndarray, cumulative: np.ndarray, excluded: Sequence[int], rng) -> int:
    """Weighted draw from a candidate table with some entries removed.

    Equivalent to rebuilding the cumulative sums without the excluded entries
    and drawing as in :func:`select_weighted`: the draw ``r`` lives on the
    reduced axis and is shifted past each removed interval that precedes it.
    """
    slots = []
    for i in excluded:
        slot = int(np.searchsorted(indices, i))
        if slot < indices.size and indices[slot] == i:
            slots.append(slot)
    slots.sort()
    weights = [int(cumulative[s] - (cumulative[s - 1] if s else 0)) for s in slots]
    total = int(cumulative[-1]) - sum(weights)
    if total <= 0:
        raise EmptyCandidates
    r = int(rng.integers(total))
    slot = int(np.searchsorted(cumulative, r, side="right"))
    for s, w in zip(slots, weights):
        if s <= slot:
            r += w
            slot = int(np.searchsorted(cumulative, r, side="right"))
    return int(indices[slot])


def build_circuit(network: NetworkModel, policy: SecurityPolicy, rng: np.random.Generator) -> Circuit:
    """Choose entry, middle and exit in that order, each by bandwidth among eligible relays.

    Relays already in the circuit are not eligible again. Draws match
    ``select_weighted(eligible(...), rng)`` step for step, using cached
    per-position candidate tables instead of rescanning the relay list.
    """
    chosen: list[int] = []
    for position in Position:
        indices, cumulative = network.candidate_table(position, policy.tee_required(position))
        if indices.size == 0:
            raise NoEligibleRelay(position)
        try:
            chosen.append(_draw_skipping(indices, cumulative, chosen, rng))
        except EmptyCandidates:
            raise NoEligibleRelay(position) from None
    relays = network.relays
    return Circuit(relays[chosen[0]], relays[chosen[1]], relays[chosen[2]])


def build_circuits(network: NetworkModel, policy: SecurityPolicy, count: int, rng) -> tuple[list[Circuit], int]:
    """Build ``count`` circuits; returns the circuits and the number of failed attempts."""
    circuits = []
    failures = 0
    for _ in range(count):
        try:
            circuits.append(build_circuit(network, policy, rng))
        except NoEligibleRelay:
            failures += 1
    return circuits, failures
