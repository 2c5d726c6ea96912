"""CSV, JSON and SVG output for sweep results."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from typing import Iterable, Mapping, Sequence
from xml.sax.saxutils import escape

from .experiment import SweepResult, SweepRow

TRIAL_HEADER = ("scenario", "param", "policy", "trial", "value")
AGGREGATE_HEADER = ("scenario", "param", "policy", "mean", "trials", "failures", "attempts")

_DIGITS = {"security": 6, "performance": 1, "privacy": 1}


def format_value(value: float, metric: str) -> str:
    if value is None or math.isnan(value):
        return "nan"
    return f"{value:.{_DIGITS.get(metric, 6)}f}"


def _write(rows: Iterable[Sequence[str]], header: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def trial_csv(result: SweepResult) -> str:
    return _write(
        (
            (r.scenario, r.param, r.policy.value, str(t), format_value(v, result.metric))
            for r in result.rows
            for t, v in enumerate(r.values)
        ),
        TRIAL_HEADER,
    )


def aggregate_csv(result: SweepResult) -> str:
    return _write(
        (
            (
                r.scenario,
                r.param,
                r.policy.value,
                format_value(r.mean, result.metric),
                str(len(r.values)),
                str(r.failures),
                str(r.attempts),
            )
            for r in result.rows
        ),
        AGGREGATE_HEADER,
    )


def _json_number(value: float):
    return None if math.isnan(value) else value


def result_json(result: SweepResult) -> str:
    payload = {
        "metric": result.metric,
        "rows": [
            {
                "scenario": r.scenario,
                "param": r.param,
                "x": r.x,
                "policy": r.policy.value,
                "mean": _json_number(r.mean),
                "values": [_json_number(v) for v in r.values],
                "failures": r.failures,
                "attempts": r.attempts,
            }
            for r in result.rows
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def read_trial_csv(text: str) -> dict[tuple[str, str, str], list[float]]:
    """Per-trial values grouped by ``(scenario, param, policy)``, in file order."""
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != TRIAL_HEADER:
        raise ValueError(f"expected header {','.join(TRIAL_HEADER)}")
    groups: dict[tuple[str, str, str], list[float]] = {}
    for rec in reader:
        groups.setdefault((rec["scenario"], rec["param"], rec["policy"]), []).append(float(rec["value"]))
    return groups


def param_x(param: str) -> tuple[float, str]:
    """Split a param label into the plotted value and the label of the remaining weights.

    ``"0.25"`` gives ``(0.25, "")``; ``"we=0.1;wx=0.7"`` gives ``(0.7, "we=0.1")``.
    """
    if "=" not in param:
        return float(param), ""
    parts = param.split(";")
    x = float(parts[-1].split("=", 1)[1])
    return x, ";".join(parts[:-1])


def series_from_rows(rows: Iterable[SweepRow]) -> dict[str, list[tuple[float, float]]]:
    series: dict[str, list[tuple[float, float]]] = defaultdict(list)
    for r in rows:
        _, rest = param_x(r.param)
        label = r.policy.value if not rest else f"{r.policy.value} {rest}"
        series[label].append((r.x, r.mean))
    return dict(series)


def series_from_groups(groups: Mapping[tuple[str, str, str], list[float]]) -> dict[str, list[tuple[float, float]]]:
    series: dict[str, list[tuple[float, float]]] = defaultdict(list)
    for (_scenario, param, policy), values in groups.items():
        x, rest = param_x(param)
        label = policy if not rest else f"{policy} {rest}"
        series[label].append((x, sum(values) / len(values)))
    return dict(series)


_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def svg_chart(
    series: Mapping[str, Sequence[tuple[float, float]]],
    title: str = "",
    x_label: str = "parameter",
    y_label: str = "value",
    width: int = 720,
    height: int = 440,
) -> str:
    """Standalone SVG line chart with one polyline per series. NaN points are dropped."""
    left, right, top, bottom = 70, 190, 40, 50
    pw, ph = width - left - right, height - top - bottom
    points = {
        name: sorted((x, y) for x, y in pts if not math.isnan(y)) for name, pts in series.items()
    }
    xs = [x for pts in points.values() for x, _ in pts] or [0.0, 1.0]
    ys = [y for pts in points.values() for _, y in pts] or [0.0, 1.0]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(0.0, min(ys)), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(x):
        return left + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y):
        return top + ph - (y - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for t in _ticks(x_lo, x_hi):
        out.append(f'<line x1="{sx(t):.1f}" y1="{top + ph}" x2="{sx(t):.1f}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.1f}" y="{top + ph + 16}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y_lo, y_hi):
        out.append(f'<line x1="{left - 4}" y1="{sy(t):.1f}" x2="{left}" y2="{sy(t):.1f}" stroke="black"/>')
        out.append(f'<text x="{left - 6}" y="{sy(t) + 4:.1f}" text-anchor="end">{t:.4g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{escape(x_label)}</text>')
    out.append(
        f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(y_label)}</text>'
    )
    for i, (name, pts) in enumerate(points.items()):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
        out.append(
            f'<polyline class="series" data-series="{escape(name, {chr(34): "&quot;"})}" '
            f'points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        ly = top + 14 * i + 8
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 34}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
