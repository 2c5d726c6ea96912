import csv
import io
import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from helpers import synthetic
from parteetor.cli import ConfigError, main, parse_policies, parse_values, read_config
from parteetor.consensus import load_network, pareto, save_network
from parteetor.selection import POLICIES

TWO_RELAYS = (
    "network-status-version 3\n"
    "r alpha AAAA BBBB 2023-02-25 12:00:00 1.2.3.4 9001 0\ns Guard Running\nw Bandwidth=5000\n"
    "r beta CCCC DDDD 2023-02-25 11:00:00 5.6.7.8 443 0\ns Exit Guard\nw Bandwidth=700\n"
)


@pytest.fixture
def net_path(tmp_path):
    path = tmp_path / "net.txt"
    path.write_bytes(save_network(synthetic(120, 60, 40, 15, pareto(100, 1.5), seed=7)))
    return path


def rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_parse_summary(tmp_path, capsys):
    doc = tmp_path / "consensus"
    doc.write_text(TWO_RELAYS)
    out = tmp_path / "net.txt"
    assert main(["parse", "--consensus", str(doc), "--out", str(out)]) == 0
    assert capsys.readouterr().out.strip() == "relays=2 entry=2 exit=1 dual=1"
    assert len(load_network(out.read_bytes())) == 2


def test_parse_malformed_w_line(tmp_path, capsys):
    doc = tmp_path / "consensus"
    doc.write_text(TWO_RELAYS.replace("Bandwidth=700", "Bandwidth=7x0"))
    assert main(["parse", "--consensus", str(doc), "--out", str(tmp_path / "o")]) == 2
    assert "line 7" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_generate(tmp_path, capsys):
    out = tmp_path / "g.txt"
    assert main(["generate", "--relays", "50", "--entry", "20", "--exit", "10", "--dual", "4",
                 "--bw", "uniform:5:10", "--seed", "3", "--out", str(out)]) == 0
    assert capsys.readouterr().out.strip() == "relays=50 entry=20 exit=10 dual=4"
    first = out.read_bytes()
    main(["generate", "--relays", "50", "--entry", "20", "--exit", "10", "--dual", "4",
          "--bw", "uniform:5:10", "--seed", "3", "--out", str(out)])
    assert out.read_bytes() == first


def test_generate_invalid(tmp_path):
    assert main(["generate", "--relays", "5", "--entry", "4", "--exit", "4", "--dual", "1",
                 "--out", str(tmp_path / "g")]) == 2
    assert main(["generate", "--relays", "5", "--entry", "1", "--exit", "1", "--bw", "lognormal:3",
                 "--out", str(tmp_path / "g")]) == 2


def test_simulate_random_extremes(tmp_path, net_path):
    out = tmp_path / "out"
    code = main(["simulate", "--network", str(net_path), "--scenario", "random", "--p", "0,1", "--trials", "2",
                 "--circuits", "100", "--seed", "1", "--out-dir", str(out)])
    assert code == 0
    aggregate = {(r["param"], r["policy"]): r for r in rows(out / "security_aggregate.csv")}
    assert float(aggregate[("0", "entry")]["mean"]) == 0.0
    assert float(aggregate[("1", "entry")]["mean"]) == 1.0
    assert float(aggregate[("1", "entry-middle-exit")]["mean"]) == 1.0
    text = (out / "security.csv").read_text()
    assert text.splitlines()[0] == "scenario,param,policy,trial,value"
    assert "\r" not in text and text.endswith("\n")
    assert len(rows(out / "security.csv")) == 2 * 5 * 2
    payload = json.loads((out / "security.json").read_text())
    assert payload["metric"] == "security" and len(payload["rows"]) == 10


def test_simulate_config_file_and_override(tmp_path, net_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        f"network = {net_path}\n"
        "scenario = bandwidth\n"
        "sweep.p = 0.1\n"
        "sweep.p = 0.3\n"
        "policy = entry,exit\n"
        "metric = performance  # median bandwidth\n"
        "trials = 2\ncircuits = 100\nseed = 5\n"
        f"out-dir = {tmp_path / 'a'}\n"
    )
    assert main(["simulate", "--config", str(cfg)]) == 0
    got = rows(tmp_path / "a" / "performance_aggregate.csv")
    assert [(r["param"], r["policy"]) for r in got] == [
        ("0.1", "none"), ("0.1", "entry"), ("0.1", "exit"), ("0.3", "none"), ("0.3", "entry"), ("0.3", "exit")
    ]
    assert main(["simulate", "--config", str(cfg), "--p", "0.5", "--out-dir", str(tmp_path / "b")]) == 0
    assert {r["param"] for r in rows(tmp_path / "b" / "performance_aggregate.csv")} == {"0.5"}


def test_simulate_same_run_is_byte_identical(tmp_path, net_path):
    args = ["simulate", "--network", str(net_path), "--scenario", "inverse-bandwidth", "--p", "0.1:0.3:0.1",
            "--metric", "performance", "--trials", "2", "--circuits", "100", "--seed", "11"]
    main(args + ["--out-dir", str(tmp_path / "a")])
    main(args + ["--out-dir", str(tmp_path / "b")])
    for name in ("performance.csv", "performance_aggregate.csv", "performance.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_environment_variable(tmp_path, net_path, monkeypatch):
    args = ["simulate", "--network", str(net_path), "--scenario", "random", "--p", "0.4", "--trials", "1",
            "--circuits", "200"]
    monkeypatch.setenv("PARTEETOR_SEED", "77")
    main(args + ["--out-dir", str(tmp_path / "env")])
    main(args + ["--seed", "77", "--out-dir", str(tmp_path / "flag")])
    main(args + ["--seed", "78", "--out-dir", str(tmp_path / "other")])
    env = (tmp_path / "env" / "security.csv").read_bytes()
    assert env == (tmp_path / "flag" / "security.csv").read_bytes()
    assert env != (tmp_path / "other" / "security.csv").read_bytes()


def test_simulate_partial_failure_exit_code(tmp_path, net_path, capsys):
    code = main(["simulate", "--network", str(net_path), "--scenario", "random", "--p", "0,0.5",
                 "--metric", "performance", "--policy", "entry", "--trials", "1", "--circuits", "50",
                 "--out-dir", str(tmp_path)])
    assert code == 3
    assert "every circuit failed" in capsys.readouterr().err
    got = {(r["param"], r["policy"]): r["mean"] for r in rows(tmp_path / "performance_aggregate.csv")}
    assert got[("0", "entry")] == "nan" and got[("0.5", "entry")] != "nan"


@pytest.mark.parametrize(
    "extra",
    [
        ["--scenario", "sideways", "--p", "0.1"],
        ["--scenario", "random"],
        ["--scenario", "random", "--p", "0.1", "--policy", "middle"],
        ["--scenario", "random", "--p", "abc"],
        ["--scenario", "random", "--p", "0.1", "--trials", "0"],
        ["--scenario", "position:entry", "--we", "0.1", "--wx", "0.2"],
    ],
)
def test_simulate_config_errors(tmp_path, net_path, extra):
    assert main(["simulate", "--network", str(net_path), "--out-dir", str(tmp_path)] + extra) == 2


def test_simulate_missing_network(tmp_path):
    assert main(["simulate", "--network", str(tmp_path / "nope"), "--scenario", "random", "--p", "0.1"]) == 2


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as err:
        main(["simulate", "--bogus"])
    assert err.value.code == 2


def test_svg_has_one_polyline_per_policy(tmp_path, net_path):
    assert main(["simulate", "--network", str(net_path), "--scenario", "random", "--p", "0.2,0.6,1",
                 "--trials", "1", "--circuits", "100", "--svg", "--out-dir", str(tmp_path)]) == 0
    root = ET.parse(tmp_path / "security.svg").getroot()
    lines = [e for e in root.iter() if e.tag.endswith("polyline")]
    assert sorted(e.get("data-series") for e in lines) == sorted(p.value for p in POLICIES)
    assert all(len(e.get("points").split()) == 3 for e in lines)


def test_position_sweep_svg(tmp_path, net_path):
    assert main(["simulate", "--network", str(net_path), "--scenario", "position:entry-exit", "--we", "0.1,0.2",
                 "--wx", "0.3,0.5", "--policy", "entry-exit", "--trials", "1", "--circuits", "50", "--svg",
                 "--out-dir", str(tmp_path)]) == 0
    root = ET.parse(tmp_path / "security.svg").getroot()
    assert len([e for e in root.iter() if e.tag.endswith("polyline")]) == 2


def test_privacy_command(tmp_path, net_path):
    out = tmp_path / "privacy.csv"
    assert main(["privacy", "--network", str(net_path), "--p", "0,1", "--out", str(out)]) == 0
    got = {(r["p"], r["policy"]): int(r["count"]) for r in rows(out)}
    baseline = got[("1", "none")]
    assert baseline > 0
    assert all(got[("1", p.value)] == baseline for p in POLICIES)
    assert got[("0", "none")] == baseline
    assert all(got[("0", p.value)] == 0 for p in POLICIES if p.value != "none")


def test_privacy_to_stdout(net_path, capsys):
    assert main(["privacy", "--network", str(net_path), "--p", "0.5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "p,policy,count" and len(lines) == 6


def test_privacy_bad_network(tmp_path):
    bad = tmp_path / "bad"
    bad.write_bytes(b"parteetor-network v1\nbroken\n")
    assert main(["privacy", "--network", str(bad), "--p", "0.5"]) == 2


def test_report_command(tmp_path, net_path, capsys):
    main(["simulate", "--network", str(net_path), "--scenario", "random", "--p", "0.3,0.7", "--trials", "2",
          "--circuits", "100", "--out-dir", str(tmp_path)])
    capsys.readouterr()
    svg = tmp_path / "again.svg"
    assert main(["report", "--results", str(tmp_path / "security.csv"), "--svg", str(svg)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "scenario,param,policy,mean,trials" and len(lines) == 11
    assert len([e for e in ET.parse(svg).getroot().iter() if e.tag.endswith("polyline")]) == 5


def test_parse_values():
    assert parse_values("0.1,0.2") == [0.1, 0.2]
    assert parse_values("0.01:0.05:0.01") == [0.01, 0.02, 0.03, 0.04, 0.05]
    assert len(parse_values("0.01:1:0.01")) == 100
    for bad in ("0.1:0.2:0", "x", "1:2"):
        with pytest.raises(ConfigError):
            parse_values(bad)


def test_parse_policies():
    assert parse_policies("all") == POLICIES
    assert [p.value for p in parse_policies("entry,exit")] == ["entry", "exit"]
    with pytest.raises(ConfigError):
        parse_policies("entry,sideways")


def test_read_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "c"
    cfg.write_text("colour = blue\n")
    with pytest.raises(ConfigError, match="unknown key"):
        read_config(str(cfg))
    cfg.write_text("sweep.q = 1\n")
    with pytest.raises(ConfigError):
        read_config(str(cfg))
    cfg.write_text("just words\n")
    with pytest.raises(ConfigError):
        read_config(str(cfg))


def test_console_script(tmp_path):
    out = tmp_path / "g"
    proc = subprocess.run(
        [sys.executable, "-m", "parteetor.cli", "generate", "--relays", "4", "--entry", "2", "--exit", "2",
         "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and proc.stdout.strip() == "relays=4 entry=2 exit=2 dual=0"
