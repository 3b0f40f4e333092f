#!/usr/bin/env python3
"""
Spin Entangler Command-Line Application

Batch front end for the rotationally-invariant spin S-matrix library. Machine-readable
results go to standard output (or ``--out``); logs and progress bars go to standard error.

Usage:
    spin-entangler cgc-table --sigma 1/2
    spin-entangler scatter --sigma 1/2 --deltas 0,pi/4 --state in.json
    spin-entangler entropy --sigma 1/2 --state in.json [--search]
    spin-entangler solve --sigma 1 --lambda 1 [--grid 48 --tol 1e-12 --jobs 4 --progress]
    spin-entangler verify --sigma 3/2 [--lambda-check]
    spin-entangler scan --sigma 1/2 --lambda 1/2 --axes 1 --samples 360

Solver settings may come from a YAML file (``--config config_solver.yml``, section
``solver:``); explicit flags override the file.

Exit codes: 0 success, 2 invalid input, 1 internal failure.
"""

import argparse
import contextlib
import logging
import math
import re
import sys
from pathlib import Path
from typing import Iterator, List, Optional, Sequence

from core.angular_momentum import HalfInt, as_spin, coupling_table
from core.entanglement import certify_max_entangled, entropy_of_entanglement, schmidt_decomposition
from core.entropy_landscape import max_entropy_search, scan_entropy
from core.errors import DomainError, UsageError
from core.progress_observer import IProgressObserver
from core.reference_systems import lambda_independence_check, verify_published_solutions
from core.rich_progress_observer import create_progress_observer
from core.scattering import PhaseShiftVector, scatter
from core.serialization import CsvCodec, JsonCodec, read_text
from core.solver import SolverConfig, solve
from core.states import SeparableSpec, StateVector
from core.utils import ConfigLoader, build_logger, set_package_log_level

logger = build_logger(__name__)

_ANGLE = re.compile(r"^(?P<sign>[+-]?)(?P<num>\d*\.?\d*)\*?(?:pi|π)(?:/(?P<den>\d+\.?\d*))?$")
# a state counts as separable when its leading Schmidt probability is this close to 1
SEPARABLE_TOLERANCE = 1e-9


def parse_angle(token: str) -> float:
    """A float, or a multiple of pi such as ``pi/4``, ``-3pi/4``, ``0.5*pi``."""
    token = token.strip().replace(" ", "")
    try:
        return float(token)
    except ValueError:
        pass
    match = _ANGLE.match(token.lower())
    if not match:
        raise UsageError(f"Cannot parse angle {token!r}")
    value = float(match.group("num")) if match.group("num") not in ("", ".") else 1.0
    if match.group("den"):
        value /= float(match.group("den"))
    return (-1 if match.group("sign") == "-" else 1) * value * math.pi


def parse_angles(text: str, expected: Optional[int] = None, what: str = "angles") -> List[float]:
    values = [parse_angle(t) for t in text.split(",") if t.strip()]
    if expected is not None and len(values) != expected:
        raise UsageError(f"--{what} needs {expected} comma-separated values, got {len(values)}")
    if not all(math.isfinite(v) for v in values):
        raise UsageError(f"--{what} values must be finite")
    return values


def parse_deltas(text: str, sigma: HalfInt) -> PhaseShiftVector:
    """(δ_0, ..., δ_2σ) with δ_0 = 0."""
    values = parse_angles(text, sigma.twice_value + 1, "deltas")
    if values[0] != 0.0:
        raise UsageError(f"The first phase shift delta_0 must be 0 (gauge), got {values[0]}")
    return PhaseShiftVector(sigma, values)


class EntanglerApp:
    """
    One command-line invocation: parsed arguments, solver configuration, output sink
    """

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.sigma = as_spin(args.sigma)

    # ---- helpers ---------------------------------------------------------------

    def solver_config(self) -> SolverConfig:
        config = SolverConfig()
        if getattr(self.args, "config", None):
            config = SolverConfig.from_mapping(ConfigLoader(self.args.config).solver_section())
        return config.with_overrides(
            grid_points_per_axis=getattr(self.args, "grid", None),
            refine_tol=getattr(self.args, "tol", None),
            n_jobs=getattr(self.args, "jobs", None),
        )

    def lam(self) -> HalfInt:
        text = getattr(self.args, "lam", None)
        return self.sigma if text is None else HalfInt.of(text)

    def output_format(self, default: str, allowed: Sequence[str] = ("json", "csv")) -> str:
        fmt = self.args.format or default
        if fmt not in allowed:
            raise UsageError(f"{self.args.command} supports --format {'|'.join(allowed)}, not {fmt}")
        return fmt

    def read_state(self) -> StateVector:
        state = JsonCodec.decode_state(JsonCodec.loads(read_text(self.args.state)))
        if state.sigma != self.sigma:
            raise UsageError(f"State has sigma={state.sigma}, but --sigma is {self.sigma}")
        return state

    @contextlib.contextmanager
    def observers(self) -> Iterator[List[IProgressObserver]]:
        if not getattr(self.args, "progress", False):
            yield []
            return
        with create_progress_observer(use_rich=True) as observer:
            yield [observer]

    def emit(self, text: str) -> None:
        if self.args.out:
            try:
                Path(self.args.out).write_text(text, encoding="utf-8")
            except OSError as e:
                raise UsageError(f"Cannot write {self.args.out}: {e}") from e
            logger.info(f"Wrote {self.args.out}")
        else:
            sys.stdout.write(text)
            sys.stdout.flush()

    # ---- subcommands -----------------------------------------------------------

    def cmd_cgc_table(self) -> None:
        table = coupling_table(self.sigma)
        if self.output_format("csv") == "csv":
            self.emit(CsvCodec.cgc_table(table))
            return
        rows = [
            {"s": str(s), "m": str(m), "mu1": str(mu1), "mu2": str(mu2), "value": value}
            for s, m, mu1, mu2, value in table.iter_entries() if value != 0.0
        ]
        self.emit(JsonCodec.dumps({"sigma": str(self.sigma), "entries": rows}))

    def cmd_scatter(self) -> None:
        self.output_format("json", ("json",))
        delta = parse_deltas(self.args.deltas, self.sigma)
        state = self.read_state()
        out = scatter(state, delta)
        self.emit(JsonCodec.dumps({
            "phases": JsonCodec.encode_phases(delta),
            "out_state": JsonCodec.encode_state(out),
            "in_entropy": entropy_of_entanglement(state),
            "entropy": entropy_of_entanglement(out),
        }))

    def cmd_entropy(self) -> None:
        self.output_format("json", ("json",))
        state = self.read_state()
        certificate = certify_max_entangled(state)
        payload = {
            "sigma": str(self.sigma),
            "entropy": entropy_of_entanglement(state),
            "schmidt": [float(c) ** 2 for c in schmidt_decomposition(state).coefficients],
            "maximally_entangled": certificate.is_maximal,
        }
        if certificate.is_maximal:
            payload["permutation"] = list(certificate.permutation)
            payload["phases"] = list(certificate.phases)
        if self.args.search:
            payload["search"] = JsonCodec.encode_entropy_search(self._search(state))
        self.emit(JsonCodec.dumps(payload))

    def _search(self, state: StateVector):
        decomposition = schmidt_decomposition(state)
        if decomposition.coefficients[0] ** 2 < 1.0 - SEPARABLE_TOLERANCE:
            raise DomainError("--search needs a separable in-state")
        spec = SeparableSpec(
            decomposition.left[:, 0] * decomposition.coefficients[0],
            decomposition.right[:, 0],
        )
        with self.observers() as observers:
            return max_entropy_search(self.sigma, spec, self.solver_config(), observers)

    def cmd_solve(self) -> None:
        fmt = self.output_format("json")
        with self.observers() as observers:
            solutions = solve(self.sigma, self.lam(), self.solver_config(), observers)
        if fmt == "csv":
            self.emit(CsvCodec.solution_set(solutions))
        else:
            self.emit(JsonCodec.dumps(JsonCodec.encode_solution_set(solutions)))

    def cmd_verify(self) -> None:
        self.output_format("json", ("json",))
        payload = JsonCodec.encode_verification(
            verify_published_solutions(self.sigma, samples=self.args.samples, seed=self.args.seed)
        )
        if self.args.lambda_check:
            with self.observers() as observers:
                report = lambda_independence_check(self.sigma, self.solver_config(), observers)
            payload["lambda_independence"] = JsonCodec.encode_lambda_report(report)
        self.emit(JsonCodec.dumps(payload))

    def cmd_scan(self) -> None:
        fmt = self.output_format("csv")
        try:
            axes = [int(a) for a in self.args.axes.split(",") if a.strip()]
        except ValueError as e:
            raise UsageError(f"--axes must list phase indices such as 1 or 1,2, got {self.args.axes!r}") from e
        base = parse_deltas(self.args.deltas, self.sigma) if self.args.deltas else None
        with self.observers() as observers:
            scan = scan_entropy(self.sigma, self.lam(), axes, self.args.samples, base, observers)
        if fmt == "csv":
            self.emit(CsvCodec.scan(scan))
        else:
            self.emit(JsonCodec.dumps({
                "sigma": str(scan.sigma),
                "lambda": str(scan.lam),
                "axes": list(scan.axes),
                "coordinates": [[float(x) for x in row] for row in scan.coordinates],
                "entropy": [float(x) for x in scan.entropy],
            }))

    def run(self) -> None:
        handler = {
            "cgc-table": self.cmd_cgc_table,
            "scatter": self.cmd_scatter,
            "entropy": self.cmd_entropy,
            "solve": self.cmd_solve,
            "verify": self.cmd_verify,
            "scan": self.cmd_scan,
        }[self.args.command]
        handler()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--sigma', required=True, help='Spin of each particle: "n" or "n/2"')
    common.add_argument('--format', choices=('json', 'csv'), default=None, help='Output format')
    common.add_argument('--out', default=None, help='Write output to this file instead of stdout')
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', action='store_true', help='Debug logging')
    verbosity.add_argument('--quiet', action='store_true', help='Warnings and errors only')

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument('--config', default=None, help='YAML file with a "solver:" section')
    solver.add_argument('--grid', type=int, default=None, help='Seed grid points per phase axis')
    solver.add_argument('--tol', type=float, default=None, help='Residual tolerance for accepted solutions')
    solver.add_argument('--jobs', type=int, default=None, help='Parallel workers (-1: all cores)')
    solver.add_argument('--progress', action='store_true', help='Show rich progress bars on stderr')

    parser = argparse.ArgumentParser(
        prog='spin-entangler',
        description='Rotationally-invariant spin S-matrices and perfect-entangler phase shifts',
    )
    sub = parser.add_subparsers(dest='command', required=True)

    sub.add_parser('cgc-table', parents=[common], help='Nonzero Clebsch-Gordan coefficients for two spins')

    p = sub.add_parser('scatter', parents=[common], help='Apply S(delta) to a state')
    p.add_argument('--deltas', required=True, help='delta_0..delta_2sigma, comma-separated, delta_0 = 0')
    p.add_argument('--state', required=True, help='State JSON file, or - for stdin')

    p = sub.add_parser('entropy', parents=[common, solver], help='Entanglement entropy of a state')
    p.add_argument('--state', required=True, help='State JSON file, or - for stdin')
    p.add_argument('--search', action='store_true',
                   help='Also search the phase torus for the most entangling S (separable states only)')

    p = sub.add_parser('solve', parents=[common, solver], help='Find all perfect-entangler phase shifts')
    p.add_argument('--lambda', dest='lam', default=None, help='In-state parameter lambda (default: sigma)')

    p = sub.add_parser('verify', parents=[common, solver], help='Check the published solution sets')
    p.add_argument('--samples', type=int, default=1000, help='Random phase vectors for the printed systems')
    p.add_argument('--seed', type=int, default=2024, help='Random seed')
    p.add_argument('--lambda-check', action='store_true', help='Also solve at every lambda and compare')

    p = sub.add_parser('scan', parents=[common, solver], help='Entropy landscape over one or two phases')
    p.add_argument('--lambda', dest='lam', default=None, help='In-state parameter lambda (default: sigma)')
    p.add_argument('--axes', default='1', help='Scanned phase indices: "1" or "1,2"')
    p.add_argument('--samples', type=int, default=360, help='Samples per scanned axis')
    p.add_argument('--deltas', default=None, help='Values of the phases that are not scanned')
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if args.verbose:
        set_package_log_level(logging.DEBUG)
    elif args.quiet:
        set_package_log_level(logging.WARNING)

    try:
        EntanglerApp(args).run()
    except (UsageError, DomainError) as e:
        logger.error(f"{args.command}: {e}")
        return 2
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        logger.debug("Traceback", exc_info=True)
        return 1
    finally:
        if args.verbose or args.quiet:
            set_package_log_level(logging.INFO)
    return 0


if __name__ == "__main__":
    sys.exit(main())
