#!/usr/bin/env python3
"""
Serialization Module

JSON 与 CSV 编解码：状态向量、相移向量、解集与各类报告。

JSON layouts (field order is stable, floats use the shortest round-trip repr):

    StateVector       {"sigma": "1/2", "basis": "product", "amplitudes": [[re, im], ...]}
    PhaseShiftVector  {"sigma": "3/2", "deltas": [0.0, d1, d2, d3]}
    SolutionSet       {"sigma": "1", "lambda": "0", "points": [...], "families": [...]}

CSV uses '.' decimals and 17 significant digits.
"""
import csv
import io
import json
import sys
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

from core.angular_momentum import CouplingTable, HalfInt
from core.entropy_landscape import EntropyScan, EntropySearchResult
from core.errors import UsageError
from core.reference_systems import LambdaIndependenceReport, VerificationReport
from core.scattering import PhaseShiftVector
from core.solver import SolutionSet
from core.states import Basis, StateVector
from core.utils import build_logger

logger = build_logger(__name__)


def _floats(values: Iterable[float]) -> List[float]:
    # -0.0 prints as "-0.0"; normalise so equal sets give identical text
    return [float(v) + 0.0 for v in values]


class JsonCodec:
    """
    JSON 编解码器，所有方法均为 classmethod
    """
    INDENT = 2

    @classmethod
    def dumps(cls, payload: Dict[str, Any]) -> str:
        return json.dumps(payload, indent=cls.INDENT, ensure_ascii=False, allow_nan=False) + "\n"

    @classmethod
    def loads(cls, text: str) -> Any:
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise UsageError(f"Malformed JSON: {e}") from e

    # ---- states -------------------------------------------------------------

    @classmethod
    def encode_state(cls, state: StateVector) -> Dict[str, Any]:
        return {
            "sigma": str(state.sigma),
            "basis": state.basis.value,
            "amplitudes": [_floats((a.real, a.imag)) for a in state.amplitudes],
        }

    @classmethod
    def decode_state(cls, payload: Any) -> StateVector:
        """
        解码状态向量; amplitudes may be [re, im] pairs or plain reals

        Raises:
            UsageError: missing fields or wrong shapes
        """
        if not isinstance(payload, dict):
            raise UsageError("State JSON must be an object")
        try:
            sigma = HalfInt.of(str(payload["sigma"]))
            basis = Basis(payload.get("basis", Basis.PRODUCT.value))
            raw = payload["amplitudes"]
        except KeyError as e:
            raise UsageError(f"State JSON is missing field {e}") from e
        except ValueError as e:
            raise UsageError(f"Bad basis in state JSON: {payload.get('basis')!r}") from e
        if not isinstance(raw, list):
            raise UsageError("'amplitudes' must be a list")

        amplitudes = []
        for entry in raw:
            if isinstance(entry, (int, float)) and not isinstance(entry, bool):
                amplitudes.append(complex(entry))
            elif (isinstance(entry, list) and len(entry) == 2
                  and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)):
                amplitudes.append(complex(entry[0], entry[1]))
            else:
                raise UsageError(f"Amplitude {entry!r} is neither a number nor a [re, im] pair")
        return StateVector(sigma, basis, np.array(amplitudes, dtype=complex))

    # ---- phase shifts ----------------------------------------------------------

    @classmethod
    def encode_phases(cls, delta: PhaseShiftVector) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"sigma": str(delta.sigma), "deltas": _floats(delta.deltas)}
        if delta.offset:
            payload["offset"] = float(delta.offset)
        return payload

    @classmethod
    def decode_phases(cls, payload: Any) -> PhaseShiftVector:
        if not isinstance(payload, dict):
            raise UsageError("Phase-shift JSON must be an object")
        try:
            sigma = HalfInt.of(str(payload["sigma"]))
            deltas = [float(x) for x in payload["deltas"]]
            offset = float(payload.get("offset", 0.0))
        except KeyError as e:
            raise UsageError(f"Phase-shift JSON is missing field {e}") from e
        except (TypeError, ValueError) as e:
            raise UsageError(f"Phase-shift JSON has a non-numeric entry: {e}") from e
        return PhaseShiftVector(sigma, deltas, offset)

    # ---- solver output ---------------------------------------------------------

    @classmethod
    def encode_solution_set(cls, solutions: SolutionSet) -> Dict[str, Any]:
        return {
            "sigma": str(solutions.sigma),
            "lambda": str(solutions.lam),
            "points": [
                {"deltas": _floats(p.deltas), "residual_max": float(p.residual_max), "nullity": p.nullity}
                for p in solutions.points
            ],
            "families": [
                {
                    "nullity": f.nullity,
                    "samples": [_floats(row) for row in f.samples],
                    "residual_max": float(f.residual_max),
                    "closed": f.closed,
                    "members": f.members,
                }
                for f in solutions.families
            ],
        }

    @classmethod
    def encode_verification(cls, report: VerificationReport) -> Dict[str, Any]:
        return {
            "sigma": str(report.sigma),
            "max_residual": float(report.max_residual),
            "solutions": [
                {"lambda": str(c.lam), "evaluated": c.evaluated, "max_residual": float(c.max_residual)}
                for c in report.solutions
            ],
            "equations": [
                {
                    "chi": str(e.chi),
                    "printed": e.printed,
                    "max_deviation": float(e.max_deviation),
                    "agrees": e.agrees,
                    "fitted_constant": float(e.fitted_constant),
                    "fitted_coefficients": _floats(e.fitted_coefficients),
                    "mismatches": [
                        {"term": index, "printed": printed, "fitted": fitted}
                        for index, printed, fitted in e.mismatches
                    ],
                }
                for e in report.equations
            ],
        }

    @classmethod
    def encode_lambda_report(cls, report: LambdaIndependenceReport) -> Dict[str, Any]:
        return {
            "sigma": str(report.sigma),
            "independent": report.independent,
            "comparisons": [
                {
                    "lambda_a": str(c.first),
                    "lambda_b": str(c.second),
                    "same_points": c.same_points,
                    "same_family_nullities": c.same_family_nullities,
                    "cross_residual": float(c.cross_residual),
                    "coincide": c.coincide,
                }
                for c in report.comparisons
            ],
            "solution_sets": [cls.encode_solution_set(s) for s in report.solution_sets],
        }

    @classmethod
    def encode_entropy_search(cls, result: EntropySearchResult) -> Dict[str, Any]:
        return {
            "best_delta": cls.encode_phases(result.best_delta),
            "best_entropy": float(result.best_entropy),
            "grid_best_entropy": float(result.grid_best_entropy),
            "evaluations": result.evaluations,
        }


class CsvCodec:
    """
    CSV 输出，固定 17 位有效数字
    """
    FLOAT_FORMAT = "%.17g"

    @classmethod
    def _cell(cls, value: Any) -> str:
        if isinstance(value, (float, np.floating)):
            return cls.FLOAT_FORMAT % (float(value) + 0.0)
        return str(value)

    @classmethod
    def format_rows(cls, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([cls._cell(v) for v in row])
        return buffer.getvalue()

    @classmethod
    def cgc_table(cls, table: CouplingTable) -> str:
        """Every nonzero ⟨s m|μ₁,μ₂⟩ as (s, m, mu1, mu2, value)."""
        rows = [
            (str(s), str(m), str(mu1), str(mu2), value)
            for s, m, mu1, mu2, value in table.iter_entries()
            if value != 0.0
        ]
        return cls.format_rows(("s", "m", "mu1", "mu2", "value"), rows)

    @classmethod
    def scan(cls, scan: EntropyScan) -> str:
        header = [f"delta{a}" for a in scan.axes] + ["entropy"]
        rows = [list(coords) + [value] for coords, value in zip(scan.coordinates, scan.entropy)]
        return cls.format_rows(header, rows)

    @classmethod
    def solution_set(cls, solutions: SolutionSet) -> str:
        """One row per isolated point and per family sample; family 0 marks isolated points."""
        k = solutions.sigma.twice_value
        header = ["family", "nullity", "residual_max"] + [f"delta{s}" for s in range(k + 1)]
        rows: List[List[Any]] = [
            [0, p.nullity, p.residual_max] + list(p.deltas) for p in solutions.points
        ]
        for index, family in enumerate(solutions.families, start=1):
            rows += [[index, family.nullity, family.residual_max] + list(row) for row in family.samples]
        return cls.format_rows(header, rows)


def read_text(source: str) -> str:
    """Read a file path, or standard input for '-'."""
    try:
        if source == "-":
            return sys.stdin.read()
        with open(source, "r", encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise UsageError(f"Cannot read {source}: {e}") from e

