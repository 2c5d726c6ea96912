"""Small builders shared by the test modules."""

from parteetor.consensus import SyntheticNetworkSpec, constant, generate_synthetic
from parteetor.model import NetworkModel, Relay


def relay(fp, bw=10, entry=False, exit=False, tee=False, nickname=None):
    return Relay(fp, nickname or fp.lower(), bw, entry, exit, tee)


def synthetic(total, entry, exit, dual, bw=None, seed=0):
    return generate_synthetic(SyntheticNetworkSpec(total, entry, exit, dual, bw or constant(100), seed))


def counts_network(m, entry, exit, dual, tee_by_class=(0, 0, 0, 0)):
    """Network with the given capability counts.

    ``tee_by_class`` marks that many TEE members in each class: dual, entry-only,
    exit-only, middle-only.
    """
    sizes = (dual, entry - dual, exit - dual, m - entry - exit + dual)
    flags = ((True, True), (True, False), (False, True), (False, False))
    relays = []
    for (e, x), size, tees in zip(flags, sizes, tee_by_class):
        for j in range(size):
            relays.append(relay(f"R{len(relays)}", entry=e, exit=x, tee=j < tees))
    return NetworkModel(relays)
