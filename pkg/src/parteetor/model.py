"""Relay population, circuit positions and circuits.

A :class:`NetworkModel` is immutable once built. Alongside the relay tuple it
keeps numpy views of bandwidth and capability flags so that selection and
counting do not rescan Python objects.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np


class Position(enum.IntEnum):
    """Circuit position, ordered the way circuits are built."""

    ENTRY = 0
    MIDDLE = 1
    EXIT = 2

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class Relay:
    fingerprint: str
    nickname: str
    bandwidth_kbps: int
    entry_capable: bool = False
    exit_capable: bool = False
    tee: bool = False

    def __post_init__(self):
        if self.bandwidth_kbps < 0:
            raise ValueError(f"negative bandwidth for relay {self.fingerprint}")

    def can_serve(self, position: Position) -> bool:
        if position is Position.ENTRY:
            return self.entry_capable
        if position is Position.EXIT:
            return self.exit_capable
        return True  # every relay is middle-capable


@dataclass(frozen=True)
class CapabilityCounts:
    """Sizes of the capability classes, optionally intersected with the TEE set."""

    relays: int
    entry: int
    exit: int
    dual: int
    tee: int = 0
    tee_entry: int = 0
    tee_exit: int = 0
    tee_dual: int = 0


class NetworkModel:
    """Ordered, read-only collection of relays indexed by fingerprint."""

    def __init__(self, relays: Iterable[Relay] = ()):
        self.relays: tuple[Relay, ...] = tuple(relays)
        self._index: dict[str, int] = {}
        for i, relay in enumerate(self.relays):
            if relay.fingerprint in self._index:
                raise ValueError(f"duplicate fingerprint {relay.fingerprint!r}")
            self._index[relay.fingerprint] = i

        n = len(self.relays)
        self.bandwidths = _frozen(np.fromiter((r.bandwidth_kbps for r in self.relays), np.int64, n))
        self.entry_mask = _frozen(np.fromiter((r.entry_capable for r in self.relays), bool, n))
        self.exit_mask = _frozen(np.fromiter((r.exit_capable for r in self.relays), bool, n))
        self.tee_mask = _frozen(np.fromiter((r.tee for r in self.relays), bool, n))
        self.counts = _count(self.entry_mask, self.exit_mask, self.tee_mask)
        self._selection_cache: dict = {}

    def __len__(self) -> int:
        return len(self.relays)

    def __iter__(self) -> Iterator[Relay]:
        return iter(self.relays)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NetworkModel):
            return NotImplemented
        return self.relays == other.relays

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        c = self.counts
        return f"NetworkModel(relays={c.relays}, entry={c.entry}, exit={c.exit}, dual={c.dual}, tee={c.tee})"

    def __contains__(self, fingerprint: object) -> bool:
        return fingerprint in self._index

    def get(self, fingerprint: str) -> Relay:
        return self.relays[self._index[fingerprint]]

    def index_of(self, fingerprint: str) -> int:
        return self._index[fingerprint]

    def with_tee(self, indices: Iterable[int]) -> NetworkModel:
        """Copy of this network where exactly the relays at ``indices`` are TEE-based."""
        chosen = set(int(i) for i in indices)
        relays = []
        for i, relay in enumerate(self.relays):
            tee = i in chosen
            relays.append(relay if relay.tee == tee else _replace_tee(relay, tee))
        return NetworkModel(relays)

    def capability_mask(self, position: Position) -> np.ndarray:
        if position is Position.ENTRY:
            return self.entry_mask
        if position is Position.EXIT:
            return self.exit_mask
        return np.ones(len(self.relays), dtype=bool)

    def candidate_table(self, position: Position, tee_required: bool) -> tuple[np.ndarray, np.ndarray]:
        """Indices of selectable relays for a position and their cumulative bandwidth.

        Exclusion of already chosen relays is not applied here; see
        :func:`parteetor.selection.build_circuit`.
        """
        key = (position, bool(tee_required))
        table = self._selection_cache.get(key)
        if table is None:
            mask = self.capability_mask(position) & (self.bandwidths > 0)
            if tee_required:
                mask = mask & self.tee_mask
            idx = np.flatnonzero(mask)
            table = (_frozen(idx), _frozen(np.cumsum(self.bandwidths[idx])))
            self._selection_cache[key] = table
        return table


@dataclass(frozen=True)
class Circuit:
    entry: Relay
    middle: Relay
    exit: Relay

    def __post_init__(self):
        fps = {self.entry.fingerprint, self.middle.fingerprint, self.exit.fingerprint}
        if len(fps) != 3:
            raise ValueError("circuit relays must be pairwise distinct")
        if not self.entry.entry_capable:
            raise ValueError(f"{self.entry.fingerprint} is not entry-capable")
        if not self.exit.exit_capable:
            raise ValueError(f"{self.exit.fingerprint} is not exit-capable")

    def __iter__(self) -> Iterator[Relay]:
        return iter((self.entry, self.middle, self.exit))

    def at(self, position: Position) -> Relay:
        return (self.entry, self.middle, self.exit)[position]

    @property
    def fingerprints(self) -> tuple[str, str, str]:
        return (self.entry.fingerprint, self.middle.fingerprint, self.exit.fingerprint)


def eligible(
    network: NetworkModel,
    position: Position,
    tee_required: bool,
    excluded: Iterable[str] = frozenset(),
) -> list[Relay]:
    """Relays that may fill ``position``, in network order.

    A relay qualifies when it has the capability, is TEE-based if
    ``tee_required``, is not in ``excluded`` and has positive bandwidth.
    """
    excluded = set(excluded)
    return [
        relay
        for relay in network.relays
        if relay.can_serve(position)
        and (relay.tee or not tee_required)
        and relay.fingerprint not in excluded
        and relay.bandwidth_kbps > 0
    ]


def _replace_tee(relay: Relay, tee: bool) -> Relay:
    return Relay(relay.fingerprint, relay.nickname, relay.bandwidth_kbps, relay.entry_capable, relay.exit_capable, tee)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _count(entry: np.ndarray, exit_: np.ndarray, tee: np.ndarray) -> CapabilityCounts:
    dual = entry & exit_
    return CapabilityCounts(
        relays=int(entry.size),
        entry=int(entry.sum()),
        exit=int(exit_.sum()),
        dual=int(dual.sum()),
        tee=int(tee.sum()),
        tee_entry=int((entry & tee).sum()),
        tee_exit=int((exit_ & tee).sum()),
        tee_dual=int((dual & tee).sum()),
    )
