#!/usr/bin/env python3
"""
测试命令行入口：各子命令的输出与退出码
"""

import json
import math

import pytest

from core.entangler_app import main, parse_angle, parse_angles
from core.errors import UsageError

HALF_STATE = '{"sigma": "1/2", "amplitudes": [0, 1, 0, 0]}'


@pytest.fixture
def state_file(tmp_path):
    path = tmp_path / "in.json"
    path.write_text(HALF_STATE, encoding="utf-8")
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


@pytest.mark.parametrize("token, value", [
    ("0", 0.0), ("0.25", 0.25), ("pi", math.pi), ("pi/4", math.pi / 4), ("-3pi/4", -0.75 * math.pi),
    ("0.5*pi", 0.5 * math.pi), ("π/2", math.pi / 2), ("2pi", 2 * math.pi),
])
def test_parse_angle(token, value):
    assert parse_angle(token) == pytest.approx(value)


def test_parse_angles_counts_values():
    assert parse_angles("0, pi/4", 2) == pytest.approx([0.0, math.pi / 4])
    with pytest.raises(UsageError):
        parse_angles("0,pi/4", 3)
    with pytest.raises(UsageError):
        parse_angle("quarter")


def test_cgc_table_half_spin(capsys):
    code, out = run(capsys, "cgc-table", "--sigma", "1/2")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "s,m,mu1,mu2,value"
    assert len(lines) == 7


def test_cgc_table_spin_zero(capsys):
    code, out = run(capsys, "cgc-table", "--sigma", "0")
    assert code == 0
    assert out.splitlines()[1:] == ["0,0,0,0,1"]


def test_cgc_table_json(capsys):
    code, out = run(capsys, "cgc-table", "--sigma", "1", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["sigma"] == "1"
    assert all(set(e) == {"s", "m", "mu1", "mu2", "value"} for e in payload["entries"])


@pytest.mark.parametrize("sigma", ["-1", "1/3", "spin"])
def test_bad_sigma_exits_with_usage_code(capsys, sigma):
    code, out = run(capsys, "cgc-table", "--sigma", sigma)
    assert code == 2
    assert out == ""


def test_missing_subcommand_exits_with_usage_code(capsys):
    assert main([]) == 2


def test_scatter_produces_maximal_entanglement(capsys, state_file):
    code, out = run(capsys, "scatter", "--sigma", "1/2", "--deltas", "0,pi/4", "--state", state_file)
    assert code == 0
    payload = json.loads(out)
    assert payload["entropy"] == pytest.approx(1.0, abs=1e-12)
    assert payload["in_entropy"] == 0.0
    amplitudes = payload["out_state"]["amplitudes"]
    assert amplitudes[1] == pytest.approx([0.5, 0.5])
    assert amplitudes[2] == pytest.approx([-0.5, 0.5])


def test_scatter_with_zero_phases_keeps_state(capsys, state_file):
    code, out = run(capsys, "scatter", "--sigma", "1/2", "--deltas", "0,0", "--state", state_file)
    assert code == 0
    assert json.loads(out)["entropy"] == 0.0


@pytest.mark.parametrize("deltas", ["0.1,pi/4", "0", "0,pi/4,0", "0,nan"])
def test_scatter_rejects_bad_deltas(capsys, state_file, deltas):
    code, _ = run(capsys, "scatter", "--sigma", "1/2", "--deltas", deltas, "--state", state_file)
    assert code == 2


def test_scatter_rejects_malformed_state(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{oops", encoding="utf-8")
    code, out = run(capsys, "scatter", "--sigma", "1/2", "--deltas", "0,pi/4", "--state", str(path))
    assert code == 2
    assert out == ""


def test_scatter_rejects_sigma_mismatch(capsys, state_file):
    code, _ = run(capsys, "scatter", "--sigma", "1", "--deltas", "0,0,0", "--state", state_file)
    assert code == 2


def test_scatter_rejects_csv(capsys, state_file):
    code, _ = run(capsys, "scatter", "--sigma", "1/2", "--deltas", "0,0", "--state", state_file, "--format", "csv")
    assert code == 2


def test_entropy_of_bell_state(capsys, tmp_path):
    h = 1 / math.sqrt(2)
    path = tmp_path / "bell.json"
    path.write_text(json.dumps({"sigma": "1/2", "amplitudes": [h, 0, 0, h]}), encoding="utf-8")
    code, out = run(capsys, "entropy", "--sigma", "1/2", "--state", str(path))
    assert code == 0
    payload = json.loads(out)
    assert payload["entropy"] == pytest.approx(1.0, abs=1e-12)
    assert payload["maximally_entangled"] is True
    assert payload["permutation"] == [0, 1]


def test_entropy_search(capsys, state_file):
    code, out = run(capsys, "entropy", "--sigma", "1/2", "--state", state_file, "--search", "--grid", "24")
    assert code == 0
    search = json.loads(out)["search"]
    assert search["best_entropy"] == pytest.approx(1.0, abs=1e-10)


def test_entropy_search_needs_separable_state(capsys, tmp_path):
    h = 1 / math.sqrt(2)
    path = tmp_path / "bell.json"
    path.write_text(json.dumps({"sigma": "1/2", "amplitudes": [h, 0, 0, h]}), encoding="utf-8")
    code, _ = run(capsys, "entropy", "--sigma", "1/2", "--state", str(path), "--search")
    assert code == 2


def test_solve_half_spin(capsys):
    code, out = run(capsys, "solve", "--sigma", "1/2", "--lambda", "1/2")
    assert code == 0
    payload = json.loads(out)
    assert payload["lambda"] == "1/2"
    assert len(payload["points"]) == 4
    assert payload["families"] == []
    deltas = sorted(p["deltas"][1] for p in payload["points"])
    assert deltas == pytest.approx([-0.75 * math.pi, -0.25 * math.pi, 0.25 * math.pi, 0.75 * math.pi], abs=1e-9)


def test_solve_csv_to_file(capsys, tmp_path):
    target = tmp_path / "solutions.csv"
    code, out = run(capsys, "solve", "--sigma", "1/2", "--format", "csv", "--out", str(target), "--jobs", "2")
    assert code == 0
    assert out == ""
    lines = target.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "family,nullity,residual_max,delta0,delta1"
    assert len(lines) == 5


def test_solve_reads_yaml_config(capsys, tmp_path):
    config = tmp_path / "solver.yml"
    config.write_text("solver:\n  grid_points_per_axis: 16\n  refine_tol: 1.0e-12\n", encoding="utf-8")
    code, out = run(capsys, "solve", "--sigma", "1/2", "--config", str(config))
    assert code == 0
    assert len(json.loads(out)["points"]) == 4

    config.write_text("solver:\n  grid: 16\n", encoding="utf-8")
    code, _ = run(capsys, "solve", "--sigma", "1/2", "--config", str(config))
    assert code == 2


def test_solve_rejects_bad_grid(capsys):
    code, _ = run(capsys, "solve", "--sigma", "1/2", "--grid", "0")
    assert code == 2


def test_verify_three_halves(capsys):
    code, out = run(capsys, "verify", "--sigma", "3/2", "--samples", "200")
    assert code == 0
    payload = json.loads(out)
    assert payload["max_residual"] <= 1e-9
    assert all(e["agrees"] for e in payload["equations"])


def test_verify_spin_one_reports_mismatch(capsys):
    code, out = run(capsys, "verify", "--sigma", "1", "--samples", "200")
    assert code == 0
    first = json.loads(out)["equations"][0]
    assert not first["agrees"]
    assert first["mismatches"][0]["fitted"] == pytest.approx(2.0, abs=1e-9)


def test_verify_unsupported_sigma(capsys):
    code, _ = run(capsys, "verify", "--sigma", "2")
    assert code == 2


def test_scan_half_spin(capsys):
    code, out = run(capsys, "scan", "--sigma", "1/2", "--lambda", "1/2", "--axes", "1", "--samples", "360")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "delta1,entropy"
    assert len(lines) == 361
    rows = [tuple(float(x) for x in line.split(",")) for line in lines[1:]]
    best = max(rows, key=lambda r: r[1])
    assert best[1] == pytest.approx(1.0, abs=1e-12)
    assert min(abs(abs(best[0]) - q) for q in (math.pi / 4, 3 * math.pi / 4)) <= 1e-12


@pytest.mark.parametrize("axes", ["x", "2", "1,1"])
def test_scan_rejects_bad_axes(capsys, axes):
    code, _ = run(capsys, "scan", "--sigma", "1/2", "--axes", axes)
    assert code == 2
