#!/usr/bin/env python3
"""
测试 JSON/CSV 编解码
"""

import json
import math

import numpy as np
import pytest

from core.angular_momentum import HalfInt, coupling_table
from core.errors import DomainError, UsageError
from core.scattering import PhaseShiftVector
from core.serialization import CsvCodec, JsonCodec, read_text
from core.solver import SolutionFamily, SolutionPoint, SolutionSet
from core.states import Basis


def test_decode_state_accepts_pairs_and_reals():
    h = 1 / math.sqrt(2)
    state = JsonCodec.decode_state({"sigma": "1/2", "amplitudes": [0, [h, 0], [0, h], 0]})
    assert state.basis is Basis.PRODUCT
    np.testing.assert_allclose(state.amplitudes, [0, h, 1j * h, 0])
    coupled = JsonCodec.decode_state({"sigma": "1/2", "basis": "coupled", "amplitudes": [1, 0, 0, 0]})
    assert coupled.basis is Basis.COUPLED


@pytest.mark.parametrize("payload", [
    [],
    {"amplitudes": [1, 0, 0, 0]},
    {"sigma": "1/2"},
    {"sigma": "1/2", "basis": "spherical", "amplitudes": [1, 0, 0, 0]},
    {"sigma": "1/2", "amplitudes": "1,0,0,0"},
    {"sigma": "1/2", "amplitudes": [1, 0, 0, [0, 0, 0]]},
    {"sigma": "1/2", "amplitudes": [True, 0, 0, 0]},
    {"sigma": "1/2", "amplitudes": [1, 0, 0]},
])
def test_decode_state_rejects_malformed_input(payload):
    with pytest.raises(UsageError):
        JsonCodec.decode_state(payload)


def test_decode_state_rejects_unnormalised_amplitudes():
    with pytest.raises(DomainError):
        JsonCodec.decode_state({"sigma": "1/2", "amplitudes": [1, 1, 0, 0]})


def test_loads_reports_malformed_json():
    with pytest.raises(UsageError):
        JsonCodec.loads("{not json")


def test_state_encoding_normalises_negative_zero():
    state = JsonCodec.decode_state({"sigma": "1/2", "amplitudes": [[-0.0, -0.0], 1, 0, 0]})
    text = JsonCodec.dumps(JsonCodec.encode_state(state))
    assert "-0.0" not in text
    assert json.loads(text)["amplitudes"][1] == [1.0, 0.0]


def test_phase_encoding():
    delta = PhaseShiftVector("1/2", [0.0, math.pi / 4])
    payload = JsonCodec.encode_phases(delta)
    assert list(payload) == ["sigma", "deltas"]
    assert payload["deltas"] == pytest.approx([0.0, math.pi / 4], abs=1e-15)
    shifted = PhaseShiftVector("1/2", [0.5, 0.5 + math.pi / 4])
    payload = JsonCodec.encode_phases(shifted)
    assert payload["offset"] == pytest.approx(0.5)
    decoded = JsonCodec.decode_phases(payload)
    np.testing.assert_allclose(decoded.phase_factors, shifted.phase_factors, atol=1e-15)
    with pytest.raises(UsageError):
        JsonCodec.decode_phases({"sigma": "1/2", "deltas": [0, "x"]})


def make_solution_set():
    samples = np.array([[0.0, 0.1, math.pi / 2], [0.0, 0.2, math.pi / 2]])
    return SolutionSet(
        HalfInt(2), HalfInt(0),
        (SolutionPoint((0.0, math.pi / 3, -math.pi / 3), 1e-15, 0),),
        (SolutionFamily(1, samples, 2e-13, True, 7),),
        2304, 900,
    )


def test_solution_set_json_layout():
    payload = JsonCodec.encode_solution_set(make_solution_set())
    assert list(payload) == ["sigma", "lambda", "points", "families"]
    assert payload["sigma"] == "1" and payload["lambda"] == "0"
    assert list(payload["points"][0]) == ["deltas", "residual_max", "nullity"]
    assert list(payload["families"][0]) == ["nullity", "samples", "residual_max", "closed", "members"]
    assert payload["families"][0]["members"] == 7
    assert JsonCodec.dumps(payload).endswith("}\n")


def test_solution_set_csv():
    lines = CsvCodec.solution_set(make_solution_set()).splitlines()
    assert lines[0] == "family,nullity,residual_max,delta0,delta1,delta2"
    assert len(lines) == 4
    assert lines[1].startswith("0,0,")
    assert lines[2].startswith("1,1,")
    assert float(lines[1].split(",")[4]) == math.pi / 3


def test_cgc_table_csv():
    lines = CsvCodec.cgc_table(coupling_table("1/2")).splitlines()
    assert lines[0] == "s,m,mu1,mu2,value"
    assert len(lines) == 7
    singlet = [row.split(",") for row in lines if row.startswith("0,0,-1/2,1/2,")]
    assert float(singlet[0][4]) == pytest.approx(-1 / math.sqrt(2), abs=1e-12)
    assert CsvCodec.cgc_table(coupling_table(0)).splitlines() == ["s,m,mu1,mu2,value", "0,0,0,0,1"]


def test_read_text(tmp_path):
    path = tmp_path / "state.json"
    path.write_text('{"sigma": "0", "amplitudes": [1]}', encoding="utf-8")
    assert JsonCodec.decode_state(JsonCodec.loads(read_text(str(path)))).dim == 1
    with pytest.raises(UsageError):
        read_text(str(tmp_path / "missing.json"))
