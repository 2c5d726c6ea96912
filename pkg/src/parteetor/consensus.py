"""Building a :class:`NetworkModel` from consensus text, synthetic specs or the native format.

Only the ``r``, ``s`` and ``w`` lines of a network-status consensus are read.
The native format is a header line followed by one tab-separated record per
relay::

    parteetor-network v1
    <fingerprint>\t<nickname>\t<bandwidth_kbps>\tentry:<0|1>\texit:<0|1>\ttee:<0|1>
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .model import NetworkModel, Relay

NATIVE_HEADER = "parteetor-network v1"


class MalformedEntry(ValueError):
    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class InvalidSpec(ValueError):
    pass


class DecodeError(ValueError):
    pass


@dataclass
class RawRouterEntry:
    nickname: str
    identity: str
    published: str
    address: str
    or_port: int
    dir_port: int
    flags: frozenset[str] = frozenset()
    bandwidth_kbps: int = 0
    line_number: int = 0

    def to_relay(self) -> Relay:
        return Relay(
            fingerprint=self.identity,
            nickname=self.nickname,
            bandwidth_kbps=self.bandwidth_kbps,
            entry_capable="Guard" in self.flags,
            exit_capable="Exit" in self.flags and "BadExit" not in self.flags,
            tee=False,
        )


def _parse_port(token: str, line_number: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise MalformedEntry(line_number, f"bad port {token!r}") from None


def iter_router_entries(document_text: str) -> Iterable[RawRouterEntry]:
    """Yield one :class:`RawRouterEntry` per ``r`` line, in document order."""
    current: RawRouterEntry | None = None
    for line_number, line in enumerate(document_text.splitlines(), start=1):
        keyword, _, rest = line.partition(" ")
        if keyword == "r":
            if current is not None:
                yield current
            fields = rest.split()
            if len(fields) < 8:
                raise MalformedEntry(line_number, f"router line has {len(fields)} fields, expected 8")
            current = RawRouterEntry(
                nickname=fields[0],
                identity=fields[1],
                published=f"{fields[3]} {fields[4]}",
                address=fields[5],
                or_port=_parse_port(fields[6], line_number),
                dir_port=_parse_port(fields[7], line_number),
                line_number=line_number,
            )
        elif keyword == "s" and current is not None:
            current.flags = frozenset(rest.split())
        elif keyword == "w" and current is not None:
            for token in rest.split():
                name, eq, value = token.partition("=")
                if name == "Bandwidth" and eq:
                    if not (value.isascii() and value.isdigit()):
                        raise MalformedEntry(line_number, f"bandwidth {value!r} is not a non-negative integer")
                    current.bandwidth_kbps = int(value)
    if current is not None:
        yield current


def parse_consensus(document_text: str) -> NetworkModel:
    relays = []
    seen: set[str] = set()
    for entry in iter_router_entries(document_text):
        if entry.identity in seen:
            raise MalformedEntry(entry.line_number, f"duplicate identity {entry.identity}")
        seen.add(entry.identity)
        relays.append(entry.to_relay())
    return NetworkModel(relays)


# -- synthetic networks -------------------------------------------------------


@dataclass(frozen=True)
class BandwidthDistribution:
    """``constant(v)``, ``uniform(lo, hi)`` or ``pareto(scale, shape)``."""

    kind: str
    params: tuple[float, ...]

    _ARITY = {"constant": 1, "uniform": 2, "pareto": 2}

    def __post_init__(self):
        if self.kind not in self._ARITY:
            raise InvalidSpec(f"unknown bandwidth distribution {self.kind!r}")
        if len(self.params) != self._ARITY[self.kind]:
            raise InvalidSpec(f"{self.kind} takes {self._ARITY[self.kind]} parameter(s)")
        if any(not math.isfinite(v) or v < 0 for v in self.params):
            raise InvalidSpec("bandwidth parameters must be finite and non-negative")
        if self.kind == "uniform" and self.params[0] > self.params[1]:
            raise InvalidSpec("uniform bandwidth needs lo <= hi")
        if self.kind == "pareto" and self.params[1] <= 0:
            raise InvalidSpec("pareto shape must be positive")

    @classmethod
    def parse(cls, text: str) -> BandwidthDistribution:
        """Parse ``constant:100``, ``uniform:10:1000`` or ``pareto:500:1.5``."""
        kind, *params = text.split(":")
        try:
            values = tuple(float(p) for p in params)
        except ValueError:
            raise InvalidSpec(f"bad bandwidth distribution {text!r}") from None
        return cls(kind, values)

    def __str__(self) -> str:
        return ":".join([self.kind, *(f"{v:g}" for v in self.params)])

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "constant":
            values = np.full(n, self.params[0])
        elif self.kind == "uniform":
            values = rng.uniform(self.params[0], self.params[1], size=n)
        else:
            scale, shape = self.params
            values = (rng.pareto(shape, size=n) + 1.0) * scale
        return np.maximum(np.rint(values), 0).astype(np.int64)


def constant(v: float) -> BandwidthDistribution:
    return BandwidthDistribution("constant", (float(v),))


def uniform(lo: float, hi: float) -> BandwidthDistribution:
    return BandwidthDistribution("uniform", (float(lo), float(hi)))


def pareto(scale: float, shape: float) -> BandwidthDistribution:
    return BandwidthDistribution("pareto", (float(scale), float(shape)))


@dataclass(frozen=True)
class SyntheticNetworkSpec:
    total_relays: int
    entry_capable_count: int
    exit_capable_count: int
    dual_capable_count: int
    bandwidth_distribution: BandwidthDistribution = field(default_factory=lambda: constant(1000))
    seed: int = 0

    def validate(self) -> None:
        n, e, x, d = (self.total_relays, self.entry_capable_count, self.exit_capable_count, self.dual_capable_count)
        if n < 1:
            raise InvalidSpec("total_relays must be positive")
        if min(e, x, d) < 0:
            raise InvalidSpec("capability counts must be non-negative")
        if d > min(e, x):
            raise InvalidSpec("dual_capable_count exceeds entry or exit count")
        if e + x - d > n:
            raise InvalidSpec("capability counts exceed total_relays")


def generate_synthetic(spec: SyntheticNetworkSpec) -> NetworkModel:
    """Random network with exactly the requested capability counts.

    Capability classes are laid out, then shuffled into a random relay order;
    bandwidths are drawn independently of capability.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed & (2**64 - 1))
    n, d = spec.total_relays, spec.dual_capable_count
    e_only = spec.entry_capable_count - d
    x_only = spec.exit_capable_count - d
    entry = np.zeros(n, dtype=bool)
    exit_ = np.zeros(n, dtype=bool)
    entry[: d + e_only] = True
    exit_[:d] = True
    exit_[d + e_only : d + e_only + x_only] = True
    order = rng.permutation(n)
    entry, exit_ = entry[order], exit_[order]
    bandwidths = spec.bandwidth_distribution.sample(rng, n)
    digests = rng.integers(0, 2**63, size=n)
    relays = [
        Relay(
            fingerprint=f"{int(digests[i]):016X}{i:06d}",
            nickname=f"synth{i}",
            bandwidth_kbps=int(bandwidths[i]),
            entry_capable=bool(entry[i]),
            exit_capable=bool(exit_[i]),
        )
        for i in range(n)
    ]
    return NetworkModel(relays)


# -- native format ------------------------------------------------------------


def save_network(model: NetworkModel) -> bytes:
    lines = [NATIVE_HEADER]
    for r in model:
        for text in (r.fingerprint, r.nickname):
            if not text or any(c in text for c in "\t\r\n"):
                raise ValueError(f"field {text!r} cannot be stored in the native format")
        lines.append(
            f"{r.fingerprint}\t{r.nickname}\t{r.bandwidth_kbps}"
            f"\tentry:{int(r.entry_capable)}\texit:{int(r.exit_capable)}\ttee:{int(r.tee)}"
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def _flag(token: str, name: str, line_number: int) -> bool:
    prefix = name + ":"
    if token == prefix + "0":
        return False
    if token == prefix + "1":
        return True
    raise DecodeError(f"line {line_number}: expected {prefix}0 or {prefix}1, got {token!r}")


def load_network(serialized: bytes) -> NetworkModel:
    if not serialized:
        return NetworkModel()
    try:
        text = serialized.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DecodeError(f"payload is not UTF-8: {exc}") from None
    if not text.endswith("\n"):
        raise DecodeError("payload is truncated (no trailing newline)")
    lines = text[:-1].split("\n")
    if lines[0] != NATIVE_HEADER:
        raise DecodeError(f"line 1: expected header {NATIVE_HEADER!r}")
    relays = []
    for line_number, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 6:
            raise DecodeError(f"line {line_number}: expected 6 fields, got {len(fields)}")
        fingerprint, nickname, bandwidth, entry, exit_, tee = fields
        if not (bandwidth.isascii() and bandwidth.isdigit()):
            raise DecodeError(f"line {line_number}: bad bandwidth {bandwidth!r}")
        relays.append(
            Relay(
                fingerprint=fingerprint,
                nickname=nickname,
                bandwidth_kbps=int(bandwidth),
                entry_capable=_flag(entry, "entry", line_number),
                exit_capable=_flag(exit_, "exit", line_number),
                tee=_flag(tee, "tee", line_number),
            )
        )
    try:
        return NetworkModel(relays)
    except ValueError as exc:
        raise DecodeError(str(exc)) from None


def read_network(path) -> NetworkModel:
    """Load a native network file, or parse the file as a consensus otherwise."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data.startswith(NATIVE_HEADER.encode()) or not data:
        return load_network(data)
    return parse_consensus(data.decode("utf-8", errors="replace"))
