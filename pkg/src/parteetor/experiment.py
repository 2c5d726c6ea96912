"""Seeded Monte Carlo sweeps over deployment scenarios.

Each trial re-draws the TEE deployment and then builds a batch of circuits.
Within a trial every policy sees the same deployment. Random streams come
from :func:`parteetor.streams.substream` keyed by ``(seed, point label,
trial, phase)``, so results do not depend on grid order or on how the work
is split across processes.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .consensus import SyntheticNetworkSpec, generate_synthetic, read_network
from .deployment import (
    BandwidthWeighted,
    CircuitPositionWeighted,
    DeploymentScenario,
    Distribution,
    InverseBandwidthWeighted,
    Random,
    assign_tees,
    point_key,
)
from .metrics import (
    PerformanceReport,
    SecurityReport,
    performance_report,
    privacy_report,
    security_compliance,
)
from .model import NetworkModel
from .selection import POLICIES, SecurityPolicy, build_circuits
from .streams import substream

METRICS = ("security", "performance", "privacy")
SCENARIO_KINDS = ("random", "bandwidth", "inverse-bandwidth") + tuple(f"position:{d.value}" for d in Distribution)

NetworkSource = Union[NetworkModel, SyntheticNetworkSpec, str, Path]


def resolve_network(source: NetworkSource) -> NetworkModel:
    if isinstance(source, NetworkModel):
        return source
    if isinstance(source, SyntheticNetworkSpec):
        return generate_synthetic(source)
    return read_network(source)


def scenario_grid(
    kind: str,
    p: Sequence[float] = (),
    we: Sequence[float] = (),
    wm: Sequence[float] = (),
    wx: Sequence[float] = (),
) -> list[DeploymentScenario]:
    """Expand a scenario kind and its parameter lists into sweep points.

    Position-weighted kinds take the cartesian product of the weights their
    distribution uses; weights it does not use must not be given.
    """
    simple = {"random": Random, "bandwidth": BandwidthWeighted, "inverse-bandwidth": InverseBandwidthWeighted}
    if kind in simple:
        if we or wm or wx:
            raise ValueError(f"scenario {kind} takes --p, not position weights")
        if not p:
            raise ValueError(f"scenario {kind} needs at least one p value")
        return [simple[kind](float(v)) for v in p]
    if not kind.startswith("position:"):
        raise ValueError(f"unknown scenario {kind!r}; expected one of {', '.join(SCENARIO_KINDS)}")
    try:
        dist = Distribution(kind.split(":", 1)[1])
    except ValueError:
        raise ValueError(f"unknown position distribution in {kind!r}") from None
    if p:
        raise ValueError("position-weighted scenarios take --we/--wm/--wx, not --p")
    given = {"we": list(we), "wm": list(wm), "wx": list(wx)}
    for name, values in given.items():
        if name in dist.weights and not values:
            raise ValueError(f"distribution {dist.value} needs --{name}")
        if name not in dist.weights and any(v != 0 for v in values):
            raise ValueError(f"distribution {dist.value} does not use --{name}")
    grids = [given[name] if name in dist.weights else [0.0] for name in ("we", "wm", "wx")]
    return [CircuitPositionWeighted(dist, float(a), float(b), float(c)) for a, b, c in itertools.product(*grids)]


@dataclass
class ExperimentConfig:
    network: NetworkSource
    scenarios: Sequence[DeploymentScenario]
    policies: Sequence[SecurityPolicy] = POLICIES
    metric: str = "security"
    trials: int = 10
    circuits_per_trial: int = 1000
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        if self.trials < 1 or self.circuits_per_trial < 1:
            raise ValueError("trials and circuits_per_trial must be at least 1")
        if not self.scenarios:
            raise ValueError("no sweep points")
        if not self.policies:
            raise ValueError("no policies")
        self.policies = tuple(SecurityPolicy(p) for p in self.policies)

    def report_policies(self) -> tuple[SecurityPolicy, ...]:
        # performance sweeps always carry the no-requirement baseline
        if self.metric == "performance" and SecurityPolicy.NONE not in self.policies:
            return (SecurityPolicy.NONE,) + tuple(self.policies)
        return tuple(self.policies)


@dataclass
class SweepRow:
    scenario: str
    param: str
    x: float
    policy: SecurityPolicy
    metric: str
    values: list[float] = field(default_factory=list)
    failures: int = 0
    attempts: int = 0

    @property
    def mean(self) -> float:
        return sum(self.values) / len(self.values) if self.values else math.nan

    @property
    def all_failed(self) -> bool:
        return self.attempts > 0 and self.failures == self.attempts


@dataclass
class SweepResult:
    metric: str
    rows: list[SweepRow]

    def row(self, scenario: DeploymentScenario, policy: SecurityPolicy) -> SweepRow:
        for r in self.rows:
            if r.scenario == scenario.kind and r.param == scenario.param_label and r.policy is policy:
                return r
        raise KeyError((point_key(scenario), policy))

    @property
    def failed_rows(self) -> list[SweepRow]:
        return [r for r in self.rows if r.all_failed]


def measure(deployed: NetworkModel, policy: SecurityPolicy, circuits_per_trial: int, rng, metric: str):
    """Build a batch of circuits under ``policy`` and score it."""
    circuits, failures = build_circuits(deployed, policy, circuits_per_trial, rng)
    if metric == "security":
        if not circuits:
            return SecurityReport({p: math.nan for p in POLICIES}, circuits=0, failures=failures)
        return security_compliance(circuits, failures)
    if metric == "performance":
        return performance_report(circuits, failures)
    raise ValueError(f"metric {metric!r} is not measured from circuits")


def run_trial(
    network: NetworkModel,
    scenario: DeploymentScenario,
    policy: SecurityPolicy,
    circuits_per_trial: int,
    rng: np.random.Generator,
    metric: str = "security",
) -> SecurityReport | PerformanceReport:
    """One trial: draw a deployment, build circuits under ``policy``, score them.

    ``rng`` is split into a deployment stream and a circuit stream.
    """
    deploy_rng, circuit_rng = rng.spawn(2)
    deployed = assign_tees(network, scenario, deploy_rng)
    return measure(deployed, policy, circuits_per_trial, circuit_rng, metric)


def _run_point(
    network: NetworkModel,
    scenario: DeploymentScenario,
    policies: tuple[SecurityPolicy, ...],
    metric: str,
    trials: int,
    circuits_per_trial: int,
    seed: int,
) -> list[SweepRow]:
    key = point_key(scenario)
    rows = {
        policy: SweepRow(scenario.kind, scenario.param_label, scenario.x_value, policy, metric) for policy in policies
    }
    for trial in range(trials):
        deployed = assign_tees(network, scenario, substream(seed, key, trial, "deploy"))
        if metric == "privacy":
            report = privacy_report(deployed)
            for policy, row in rows.items():
                row.values.append(float(report[policy]))
        elif metric == "security":
            # non-policy mode: circuits ignore TEE status, compliance is incidental
            rng = substream(seed, key, trial, "circuits", SecurityPolicy.NONE.value)
            report = measure(deployed, SecurityPolicy.NONE, circuits_per_trial, rng, metric)
            for policy, row in rows.items():
                row.values.append(report[policy] if report.circuits else math.nan)
                row.failures += report.failures
                row.attempts += circuits_per_trial
        else:
            for policy, row in rows.items():
                rng = substream(seed, key, trial, "circuits", policy.value)
                report = measure(deployed, policy, circuits_per_trial, rng, metric)
                row.values.append(report.median_bandwidth)
                row.failures += report.failures
                row.attempts += circuits_per_trial
    return list(rows.values())


def run_sweep(config: ExperimentConfig) -> SweepResult:
    network = resolve_network(config.network)
    policies = config.report_policies()
    args = [
        (network, scenario, policies, config.metric, config.trials, config.circuits_per_trial, config.seed)
        for scenario in config.scenarios
    ]
    if config.jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            chunks = list(pool.map(_run_point, *zip(*args)))
    else:
        chunks = [_run_point(*a) for a in args]
    return SweepResult(config.metric, [row for chunk in chunks for row in chunk])
