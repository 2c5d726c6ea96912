"""``parteetor`` command line.

Exit codes: 0 success, 2 usage, configuration or parse error, 3 when every
circuit of some sweep point failed (all other points are still written).
"""

from __future__ import annotations

import argparse
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path

from . import __version__
from .consensus import (
    BandwidthDistribution,
    DecodeError,
    InvalidSpec,
    MalformedEntry,
    SyntheticNetworkSpec,
    generate_synthetic,
    parse_consensus,
    read_network,
    save_network,
)
from .deployment import InsufficientPositiveWeight
from .experiment import METRICS, ExperimentConfig, run_sweep, scenario_grid
from .metrics import privacy_report, uniform_class_deployment
from .report import aggregate_csv, read_trial_csv, result_json, series_from_groups, series_from_rows, svg_chart, trial_csv
from .selection import POLICIES, SecurityPolicy
from .streams import default_seed

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL = 0, 2, 3

# every simulate option that may also come from a config file
SIMULATE_KEYS = ("network", "metric", "scenario", "p", "we", "wm", "wx", "policy", "trials", "circuits", "seed",
                 "out-dir", "svg", "jobs")
LIST_KEYS = ("p", "we", "wm", "wx")


class ConfigError(ValueError):
    pass


def parse_values(text: str) -> list[float]:
    """``0.1,0.2,0.5`` or an inclusive range ``start:stop:step`` such as ``0.01:1:0.01``."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (Decimal(t) for t in text.split(":"))
            if step <= 0:
                raise ConfigError(f"range step must be positive in {text!r}")
            values = []
            v = start
            while v <= stop:
                values.append(float(v))
                v += step
            return values
        return [float(Decimal(t)) for t in text.split(",") if t.strip()]
    except (InvalidOperation, ValueError):
        raise ConfigError(f"bad value list {text!r}") from None


def parse_policies(text: str) -> tuple[SecurityPolicy, ...]:
    if text == "all":
        return POLICIES
    try:
        return tuple(SecurityPolicy(t.strip()) for t in text.split(","))
    except ValueError:
        names = ", ".join(p.value for p in POLICIES)
        raise ConfigError(f"unknown policy in {text!r}; expected all or one of {names}") from None


def read_config(path: str) -> dict[str, str | list[str]]:
    """Flat ``key = value`` file; ``sweep.<key>`` lines may repeat to build a grid."""
    settings: dict[str, str | list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_number, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not eq:
                raise ConfigError(f"{path}:{line_number}: expected key = value")
            if key.startswith("sweep."):
                name = key[len("sweep."):]
                if name not in LIST_KEYS:
                    raise ConfigError(f"{path}:{line_number}: unknown sweep key {key!r}")
                current = settings.setdefault(name, [])
                if not isinstance(current, list):
                    raise ConfigError(f"{path}:{line_number}: {name} given both plainly and as sweep.{name}")
                current.append(value)
            elif key in SIMULATE_KEYS:
                settings[key] = value
            else:
                raise ConfigError(f"{path}:{line_number}: unknown key {key!r}")
    return settings


def _values(setting) -> list[float]:
    if setting is None:
        return []
    if isinstance(setting, list):
        return [v for item in setting for v in parse_values(item)]
    return parse_values(setting)


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    if str(text).lower() in ("1", "true", "yes", "on"):
        return True
    if str(text).lower() in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _int(text, name: str) -> int:
    try:
        return int(str(text), 0)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {text!r}") from None


# -- subcommands ----------------------------------------------------------------


def cmd_parse(args) -> int:
    text = Path(args.consensus).read_text(encoding="utf-8", errors="replace")
    network = parse_consensus(text)
    Path(args.out).write_bytes(save_network(network))
    c = network.counts
    print(f"relays={c.relays} entry={c.entry} exit={c.exit} dual={c.dual}")
    return EXIT_OK


def cmd_generate(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    spec = SyntheticNetworkSpec(
        total_relays=args.relays,
        entry_capable_count=args.entry,
        exit_capable_count=args.exit,
        dual_capable_count=args.dual,
        bandwidth_distribution=BandwidthDistribution.parse(args.bw),
        seed=seed,
    )
    network = generate_synthetic(spec)
    Path(args.out).write_bytes(save_network(network))
    c = network.counts
    print(f"relays={c.relays} entry={c.entry} exit={c.exit} dual={c.dual}")
    return EXIT_OK


def _simulate_settings(args) -> dict:
    settings: dict = read_config(args.config) if args.config else {}
    for key in SIMULATE_KEYS:
        value = getattr(args, key.replace("-", "_"))
        if value is not None:
            settings[key] = value
    return settings


def build_config(settings: dict) -> tuple[ExperimentConfig, Path, bool]:
    for required in ("network", "scenario"):
        if required not in settings:
            raise ConfigError(f"missing required setting {required!r}")
    metric = settings.get("metric", "security")
    if metric not in METRICS:
        raise ConfigError(f"metric must be one of {', '.join(METRICS)}")
    seed = _int(settings["seed"], "seed") if "seed" in settings else default_seed()
    try:
        scenarios = scenario_grid(
            settings["scenario"],
            p=_values(settings.get("p")),
            we=_values(settings.get("we")),
            wm=_values(settings.get("wm")),
            wx=_values(settings.get("wx")),
        )
        config = ExperimentConfig(
            network=read_network(settings["network"]),
            scenarios=scenarios,
            policies=parse_policies(settings.get("policy", "all")),
            metric=metric,
            trials=_int(settings.get("trials", 10), "trials"),
            circuits_per_trial=_int(settings.get("circuits", 1000), "circuits"),
            seed=seed,
            jobs=_int(settings.get("jobs", 1), "jobs"),
        )
    except ValueError as exc:
        if isinstance(exc, (ConfigError, DecodeError, MalformedEntry)):
            raise
        raise ConfigError(str(exc)) from None
    out_dir = Path(settings.get("out-dir", "."))
    return config, out_dir, _bool(settings.get("svg", False))


def cmd_simulate(args) -> int:
    config, out_dir, want_svg = build_config(_simulate_settings(args))
    result = run_sweep(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    metric = config.metric
    (out_dir / f"{metric}.csv").write_text(trial_csv(result), encoding="utf-8", newline="\n")
    (out_dir / f"{metric}_aggregate.csv").write_text(aggregate_csv(result), encoding="utf-8", newline="\n")
    (out_dir / f"{metric}.json").write_text(result_json(result), encoding="utf-8", newline="\n")
    if want_svg:
        scenario = result.rows[0].scenario
        chart = svg_chart(series_from_rows(result.rows), title=f"{metric}: {scenario}",
                          x_label="parameter", y_label=_y_label(metric))
        (out_dir / f"{metric}.svg").write_text(chart, encoding="utf-8", newline="\n")
    print(f"wrote {len(result.rows)} rows to {out_dir}")
    failed = result.failed_rows
    for row in failed:
        print(f"warning: every circuit failed for {row.scenario} {row.param} policy={row.policy.value}",
              file=sys.stderr)
    return EXIT_PARTIAL if failed else EXIT_OK


def _y_label(metric: str) -> str:
    return {"security": "compliant fraction", "performance": "median expected bandwidth (KB/s)",
            "privacy": "unique circuits"}.get(metric, "value")


def cmd_privacy(args) -> int:
    network = read_network(args.network)
    lines = ["p,policy,count"]
    for p in parse_values(args.p):
        report = privacy_report(uniform_class_deployment(network, p))
        for policy in POLICIES:
            lines.append(f"{p:g},{policy.value},{report[policy]}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_report(args) -> int:
    path = Path(args.results)
    groups = read_trial_csv(path.read_text(encoding="utf-8"))
    metric = args.metric or path.stem
    print("scenario,param,policy,mean,trials")
    for (scenario, param, policy), values in groups.items():
        mean = sum(values) / len(values)
        print(f"{scenario},{param},{policy},{mean:.6g},{len(values)}")
    if args.svg:
        chart = svg_chart(series_from_groups(groups), title=metric, y_label=_y_label(metric))
        Path(args.svg).write_text(chart, encoding="utf-8", newline="\n")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="parteetor", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="convert a consensus document to the native network format")
    p.add_argument("--consensus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("generate", help="write a synthetic network")
    p.add_argument("--relays", type=int, required=True)
    p.add_argument("--entry", type=int, required=True)
    p.add_argument("--exit", type=int, required=True)
    p.add_argument("--dual", type=int, default=0)
    p.add_argument("--bw", default="constant:1000", help="constant:V | uniform:LO:HI | pareto:SCALE:SHAPE")
    p.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="run a deployment sweep")
    p.add_argument("--config", help="key = value settings file; flags override it")
    p.add_argument("--network")
    p.add_argument("--metric", choices=METRICS)
    p.add_argument("--scenario", help="random | bandwidth | inverse-bandwidth | position:<entry|exit|entry-exit|entry-middle-exit>")
    p.add_argument("--p", help="list 0.1,0.2 or inclusive range 0.01:1:0.01")
    p.add_argument("--we")
    p.add_argument("--wm")
    p.add_argument("--wx")
    p.add_argument("--policy", help="policy name, comma list, or all")
    p.add_argument("--trials")
    p.add_argument("--circuits")
    p.add_argument("--seed")
    p.add_argument("--out-dir")
    p.add_argument("--svg", action="store_const", const="true", default=None)
    p.add_argument("--jobs")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("privacy", help="unique-circuit counts under uniform per-class deployments")
    p.add_argument("--network", required=True)
    p.add_argument("--p", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_privacy)

    p = sub.add_parser("report", help="summarize a per-trial CSV and optionally chart it")
    p.add_argument("--results", required=True, help="security.csv or performance.csv from simulate")
    p.add_argument("--metric", choices=METRICS)
    p.add_argument("--svg")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except MalformedEntry as exc:
        print(f"parse error: {exc}", file=sys.stderr)
    except (ConfigError, DecodeError, InvalidSpec, InsufficientPositiveWeight, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
