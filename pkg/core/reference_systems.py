"""reference_systems.py

Published perfect-entangler solutions for σ = 1/2, 1, 3/2, the printed trigonometric
form of the condition |g_χ(σ)|² = 1/d, and the checks that compare both against the
computed residual: ``verify_published_solutions`` and ``lambda_independence_check``.

The printed systems are kept exactly as published, including the first σ = 1 equation
whose cos 2δ₂ coefficient does not reproduce |g_1|²; the verification report carries
the coefficient that does.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from core.angular_momentum import HalfInt, HalfIntLike, as_spin, wrap_phase
from core.errors import DomainError
from core.progress_observer import IProgressObserver
from core.solution_families import near_any
from core.solver import PerfectEntanglerProblem, SolutionSet, SolverConfig, solve
from core.utils import build_logger

logger = build_logger(__name__)

HALF = HalfInt(1)
ONE = HalfInt(2)
THREE_HALVES = HalfInt(3)
PI = np.pi

# coefficient below this counts as reproducing the computed |g_χ|²
COEFFICIENT_MATCH = 1e-6


@dataclass(frozen=True)
class PrintedEquation:
    """(constant + Σ coef·cos(2 Σ_s f_s δ_s)) / denominator, printed as the value of |g_χ(σ)|².

    ``terms`` holds (coef, (f_1, ..., f_2σ)) pairs.
    """
    chi: HalfInt
    text: str
    denominator: float
    constant: float
    terms: Tuple[Tuple[float, Tuple[int, ...]], ...]

    def evaluate(self, free: np.ndarray) -> np.ndarray:
        """Right-hand side at rows of free phases (δ_1, ..., δ_2σ)."""
        free = np.atleast_2d(free)
        total = np.full(free.shape[0], self.constant, dtype=float)
        for coef, frequencies in self.terms:
            total += coef * np.cos(2 * free @ np.asarray(frequencies, dtype=float))
        return total / self.denominator


PRINTED_SYSTEMS: Dict[HalfInt, Tuple[PrintedEquation, ...]] = {
    HALF: (
        PrintedEquation(HALF, "cos^2(d1)", 2, 1, ((1, (1,)),)),
        PrintedEquation(-HALF, "sin^2(d1)", 2, 1, ((-1, (1,)),)),
    ),
    ONE: (
        PrintedEquation(ONE, "(7 + 6cos(2d1) + 3cos(2d1-2d2) + cos(2d2))/18", 18, 7,
                        ((6, (1, 0)), (3, (1, -1)), (1, (0, 1)))),
        PrintedEquation(HalfInt(0), "4/9 sin^2(d2)", 9, 2, ((-2, (0, 1)),)),
        PrintedEquation(-ONE, "(7 - 6cos(2d1) - 3cos(2d1-2d2) + 2cos(2d2))/18", 18, 7,
                        ((-6, (1, 0)), (-3, (1, -1)), (2, (0, 1)))),
    ),
    THREE_HALVES: (
        PrintedEquation(THREE_HALVES, "(132 + 90c1 + 90c12 + 18c13 + 50c2 + 10c23 + 10c3)/400", 400, 132,
                        ((90, (1, 0, 0)), (90, (1, -1, 0)), (18, (1, 0, -1)),
                         (50, (0, 1, 0)), (10, (0, 1, -1)), (10, (0, 0, 1)))),
        PrintedEquation(-THREE_HALVES, "(132 - 90c1 - 90c12 + 18c13 + 50c2 - 10c23 - 10c3)/400", 400, 132,
                        ((-90, (1, 0, 0)), (-90, (1, -1, 0)), (18, (1, 0, -1)),
                         (50, (0, 1, 0)), (-10, (0, 1, -1)), (-10, (0, 0, 1)))),
        PrintedEquation(-HALF, "(68 - 30c1 + 30c12 - 18c13 - 50c2 - 30c23 + 30c3)/400", 400, 68,
                        ((-30, (1, 0, 0)), (30, (1, -1, 0)), (-18, (1, 0, -1)),
                         (-50, (0, 1, 0)), (-30, (0, 1, -1)), (30, (0, 0, 1)))),
        PrintedEquation(HALF, "(68 + 30c1 - 30c12 - 18c13 - 50c2 + 30c23 - 30c3)/400", 400, 68,
                        ((30, (1, 0, 0)), (-30, (1, -1, 0)), (-18, (1, 0, -1)),
                         (-50, (0, 1, 0)), (30, (0, 1, -1)), (-30, (0, 0, 1)))),
    ),
}


def published_points(sigma: HalfIntLike) -> np.ndarray:
    """Published isolated solutions as rows of free phases; empty for σ = 3/2."""
    sigma = as_spin(sigma)
    if sigma == HALF:
        return np.array([[PI / 4], [-PI / 4], [3 * PI / 4], [-3 * PI / 4]])
    if sigma == ONE:
        rows = []
        for base1, base2 in ((PI / 12, -PI / 6), (-PI / 12, PI / 6)):
            for s1, s2 in itertools.product((1, -1), repeat=2):
                rows.append([base1 + s1 * PI / 4, base2 + s2 * PI / 2])
        return wrap_phase(np.array(rows))
    if sigma == THREE_HALVES:
        return np.zeros((0, 3))
    raise DomainError(f"No published solutions for sigma={sigma}")


def published_families(sigma: HalfIntLike) -> List[Callable[[np.ndarray], np.ndarray]]:
    """Generators t -> rows (t, ±π/2, t) and (t, ±π/2, t ± π) for σ = 3/2."""
    sigma = as_spin(sigma)
    if sigma != THREE_HALVES:
        return []

    def family(delta2: float, shift: float) -> Callable[[np.ndarray], np.ndarray]:
        def generate(t: np.ndarray) -> np.ndarray:
            t = np.asarray(t, dtype=float).reshape(-1)
            return wrap_phase(np.stack([t, np.full_like(t, delta2), t + shift], axis=1))
        return generate

    return [family(d2, shift) for d2 in (PI / 2, -PI / 2) for shift in (0.0, PI)]


@dataclass(frozen=True)
class PublishedCheck:
    lam: HalfInt
    evaluated: int
    max_residual: float


@dataclass(frozen=True)
class EquationCheck:
    chi: HalfInt
    printed: str
    max_deviation: float
    fitted_constant: float
    fitted_coefficients: Tuple[float, ...]
    # (term index, printed coefficient, fitted coefficient) where they disagree
    mismatches: Tuple[Tuple[int, float, float], ...]

    @property
    def agrees(self) -> bool:
        return not self.mismatches


@dataclass(frozen=True)
class VerificationReport:
    sigma: HalfInt
    solutions: Tuple[PublishedCheck, ...]
    equations: Tuple[EquationCheck, ...]

    @property
    def max_residual(self) -> float:
        return max((c.max_residual for c in self.solutions), default=0.0)


def _check_equation(problem: PerfectEntanglerProblem, equation: PrintedEquation,
                    free: np.ndarray) -> EquationCheck:
    chi_index = problem.sigma.index_of(equation.chi)
    computed = problem.residuals(free)[:, chi_index] + 1.0 / problem.sigma.dim
    deviation = float(np.max(np.abs(equation.evaluate(free) - computed)))

    # least-squares refit of the printed terms against denominator·|g_χ|²
    design = np.column_stack(
        [np.ones(free.shape[0])]
        + [np.cos(2 * free @ np.asarray(f, dtype=float)) for _, f in equation.terms]
    )
    fitted, *_ = np.linalg.lstsq(design, equation.denominator * computed, rcond=None)
    mismatches = tuple(
        (i, float(coef), float(fitted[i + 1]))
        for i, (coef, _) in enumerate(equation.terms)
        if abs(fitted[i + 1] - coef) > COEFFICIENT_MATCH
    )
    if abs(fitted[0] - equation.constant) > COEFFICIENT_MATCH:
        mismatches = ((-1, float(equation.constant), float(fitted[0])),) + mismatches
    for index, printed, refit in mismatches:
        logger.warning(
            f"sigma={problem.sigma}, chi={equation.chi}: printed {equation.text} term {index} has "
            f"coefficient {printed:g}, computed |g|^2 needs {refit:.6g} (max deviation {deviation:.3g})"
        )
    return EquationCheck(
        equation.chi, equation.text, deviation, float(fitted[0]),
        tuple(float(x) for x in fitted[1:]), mismatches,
    )


def verify_published_solutions(sigma: HalfIntLike, samples: int = 1000, family_samples: int = 100,
                               seed: int = 2024) -> VerificationReport:
    """Residuals of the published solutions at every λ, and the printed systems against |g_χ(σ)|².

    Family generators are sampled at ``family_samples`` random t; the printed systems are
    compared at ``samples`` random phase vectors.
    """
    sigma = as_spin(sigma)
    if sigma not in PRINTED_SYSTEMS:
        raise DomainError(f"verify is defined for sigma in 1/2, 1, 3/2; got {sigma}")
    rng = np.random.default_rng(seed)

    rows = [published_points(sigma)]
    t = rng.uniform(-PI, PI, family_samples)
    rows += [generate(t) for generate in published_families(sigma)]
    candidates = np.concatenate(rows, axis=0)

    solutions = []
    for lam in sigma.magnetic_range():
        problem = PerfectEntanglerProblem(sigma, lam)
        worst = float(np.max(np.abs(problem.residuals(candidates))))
        solutions.append(PublishedCheck(lam, candidates.shape[0], worst))
        logger.info(f"sigma={sigma}, lambda={lam}: max residual {worst:.3g} over {candidates.shape[0]} published solutions")

    problem = PerfectEntanglerProblem(sigma, sigma)
    free = rng.uniform(-PI, PI, (samples, sigma.twice_value))
    equations = tuple(_check_equation(problem, eq, free) for eq in PRINTED_SYSTEMS[sigma])
    return VerificationReport(sigma, tuple(solutions), equations)


@dataclass(frozen=True)
class LambdaComparison:
    first: HalfInt
    second: HalfInt
    same_points: bool
    same_family_nullities: bool
    cross_residual: float      # worst residual of either set's solutions under the other λ
    coincide: bool


@dataclass(frozen=True, eq=False)
class LambdaIndependenceReport:
    sigma: HalfInt
    solution_sets: Tuple[SolutionSet, ...]
    comparisons: Tuple[LambdaComparison, ...]

    @property
    def independent(self) -> bool:
        return all(c.coincide for c in self.comparisons)


def _same_points(a: np.ndarray, b: np.ndarray, radius: float) -> bool:
    if a.shape[0] != b.shape[0]:
        return False
    return bool(near_any(a, b, radius).all() and near_any(b, a, radius).all())


def compare_solution_sets(a: SolutionSet, b: SolutionSet, config: SolverConfig,
                          verify_tol: float = 1e-9) -> LambdaComparison:
    """Whether two solution sets of the same σ describe the same phase vectors."""
    same_points = _same_points(a.point_array(), b.point_array(), config.dedup_radius)
    same_nullities = sorted(f.nullity for f in a.families) == sorted(f.nullity for f in b.families)
    cross = 0.0
    for source, target in ((a, b), (b, a)):
        rows = source.all_samples()
        if rows.shape[0]:
            problem = PerfectEntanglerProblem(target.sigma, target.lam)
            cross = max(cross, float(np.max(np.abs(problem.residuals(rows)))))
    coincide = same_points and same_nullities and cross <= verify_tol
    return LambdaComparison(a.lam, b.lam, same_points, same_nullities, cross, coincide)


def lambda_independence_check(sigma: HalfIntLike, config: Optional[SolverConfig] = None,
                              observers: Optional[Iterable[IProgressObserver]] = None,
                              verify_tol: float = 1e-9) -> LambdaIndependenceReport:
    """Solve at every λ and compare each pair of solution sets."""
    sigma = as_spin(sigma)
    config = (config or SolverConfig()).validate()
    observers = list(observers or ())
    sets = tuple(solve(sigma, lam, config, observers) for lam in sigma.magnetic_range())
    comparisons = tuple(
        compare_solution_sets(a, b, config, verify_tol) for a, b in itertools.combinations(sets, 2)
    )
    for c in comparisons:
        if not c.coincide:
            logger.warning(
                f"sigma={sigma}: solution sets differ between lambda={c.first} and lambda={c.second} "
                f"(points match: {c.same_points}, family nullities match: {c.same_family_nullities}, "
                f"cross residual {c.cross_residual:.3g})"
            )
    return LambdaIndependenceReport(sigma, sets, comparisons)
