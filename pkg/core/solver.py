"""solver.py

Perfect-entangler phase shifts: all gauge-fixed δ on the torus (-π, π]^{2σ} for which

    |g_χ(λ)|² = 1/d   for every χ,

i.e. S takes the invariant in-state φ(u, λ) to a maximally entangled out-state.

Search strategy
---------------
1. Regular seed grid, n points per free phase, seeds at -π + 2π(i + ½)/n.
2. Seeds whose residual max-norm is below ``seed_threshold`` are refined by damped
   Newton on 2σ of the 2σ+1 residual components (the components sum to zero).
3. Converged points are merged in grid order and deduplicated on the torus.
4. The central-difference Jacobian at each point classifies it: nullity 0 is an
   isolated solution, nullity k ≥ 1 a member of a k-parameter family. A Jacobian with
   singular values between ``family_rank_tol`` and a tenth of ``spread_radius`` belongs
   to a root where the residual vanishes to second order; there the nullity is the
   local dimension of the solution set, measured by projecting nearby points back.
   One-parameter families are traced as closed curves; higher ones are reported as
   point clusters.

Seeds are refined in fixed-size chunks and merged in chunk order, so the result does
not depend on ``n_jobs``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Any, Iterable, List, Mapping, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from core.angular_momentum import HalfInt, HalfIntLike, as_spin, wrap_phase
from core.errors import DomainError, UsageError
from core.progress_events import (
    ProgressAdvancedEvent, TaskErrorEvent, TaskFinishedEvent, TaskStartedEvent, generate_task_id,
)
from core.progress_observer import IProgressObserver, ProgressSubject
from core.scattering import PhaseShiftVector, channel_weights, g_values, g_vector
from core.solution_families import (
    TANGENT_SPREAD, canonical_order, cluster_points, deduplicate, degenerate_roots,
    jacobian_nullity, local_dimension, near_any, thin_samples, trace_family,
)
from core.states import check_lambda
from core.utils import build_logger

logger = build_logger(__name__)


_INTEGER_SETTINGS = {"grid_points_per_axis", "max_newton_iters", "n_jobs", "chunk_size",
                     "max_family_samples", "max_line_search"}


def _coerce(name: str, value: Any) -> Any:
    """Numbers written as strings (YAML 1.1 reads 1e-12 as text) become numbers."""
    if not isinstance(value, str):
        return value
    try:
        return int(value) if name in _INTEGER_SETTINGS else float(value)
    except ValueError as e:
        raise UsageError(f"Solver setting {name} is not a number: {value!r}") from e


@dataclass
class SolverConfig:
    grid_points_per_axis: int = 48
    refine_tol: float = 1e-12
    dedup_radius: float = 1e-6
    family_rank_tol: float = 1e-8
    max_newton_iters: int = 50
    seed_threshold: float = 0.2
    jacobian_step: float = 1e-6
    n_jobs: int = 1
    chunk_size: int = 4096
    max_family_samples: int = 256
    trace_step: Optional[float] = None     # None: half the grid spacing
    max_line_search: int = 12
    spread_radius: float = 1e-3

    def validate(self) -> "SolverConfig":
        for name in ("grid_points_per_axis", "max_newton_iters", "chunk_size",
                     "max_family_samples", "max_line_search"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value <= 0:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")
        for name in ("refine_tol", "dedup_radius", "family_rank_tol", "seed_threshold", "jacobian_step",
                     "spread_radius"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
                raise DomainError(f"{name} must be a positive number, got {value!r}")
        if self.trace_step is not None and not (math.isfinite(self.trace_step) and self.trace_step > 0):
            raise DomainError(f"trace_step must be positive, got {self.trace_step!r}")
        if not isinstance(self.n_jobs, (int, np.integer)) or not (self.n_jobs >= 1 or self.n_jobs == -1):
            raise DomainError(f"n_jobs must be a positive integer or -1, got {self.n_jobs!r}")
        return self

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> "SolverConfig":
        """Build from a mapping (YAML ``solver:`` section); ``None`` values keep defaults."""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise UsageError(f"Unknown solver setting(s): {', '.join(unknown)}")
        return cls(**{k: _coerce(k, v) for k, v in mapping.items() if v is not None}).validate()

    def with_overrides(self, **overrides: Any) -> "SolverConfig":
        """Copy with every non-None override applied."""
        return self.from_mapping({**{f.name: getattr(self, f.name) for f in fields(self)},
                                  **{k: v for k, v in overrides.items() if v is not None}})

    @property
    def grid_spacing(self) -> float:
        return 2 * math.pi / self.grid_points_per_axis

    @property
    def step(self) -> float:
        return self.trace_step if self.trace_step is not None else self.grid_spacing / 2


@dataclass(frozen=True, eq=False)
class Residual:
    """|g_χ(λ)|² - 1/d for χ = σ..-σ."""
    sigma: HalfInt
    lam: HalfInt
    values: np.ndarray

    @property
    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def residual(sigma: HalfIntLike, lam: HalfIntLike, delta: PhaseShiftVector) -> Residual:
    sigma = as_spin(sigma)
    g = g_vector(sigma, lam, delta)
    return Residual(sigma, g.lam, g.probabilities - 1.0 / sigma.dim)


class PerfectEntanglerProblem:
    """Batched residual |g_χ|² - 1/d over points of the torus (rows = free phases)."""

    def __init__(self, sigma: HalfIntLike, lam: HalfIntLike):
        self.sigma = as_spin(sigma)
        self.lam = check_lambda(self.sigma, lam)
        self.weights = channel_weights(self.sigma, self.lam)

    @property
    def dimension(self) -> int:
        return self.sigma.twice_value

    def _full(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, self.dimension)
        return np.concatenate([np.zeros((points.shape[0], 1)), points], axis=1)

    def residuals(self, points: np.ndarray) -> np.ndarray:
        g = g_values(self.weights, self._full(points))
        return np.abs(g) ** 2 - 1.0 / self.sigma.dim

    def jacobian(self, points: np.ndarray) -> np.ndarray:
        """Analytic ∂r_χ/∂δ_s = -4 Im(conj(g_χ) e^{2iδ_s} W[s, χ]), shape (n, d, 2σ)."""
        full = self._full(points)
        factors = np.exp(2j * full)
        g = g_values(self.weights, full)
        # (n, s, χ) -> (n, χ, s), free phases only
        terms = np.conj(g)[:, None, :] * factors[:, :, None] * self.weights[None, :, :]
        return np.transpose(-4.0 * terms.imag, (0, 2, 1))[:, :, 1:]

    def numerical_jacobian(self, points: np.ndarray, step: float) -> np.ndarray:
        """Central differences, shape (n, d, 2σ)."""
        points = np.asarray(points, dtype=float).reshape(-1, self.dimension)
        columns = []
        for j in range(self.dimension):
            shift = np.zeros(self.dimension)
            shift[j] = step
            columns.append((self.residuals(points + shift) - self.residuals(points - shift)) / (2 * step))
        return np.stack(columns, axis=-1)

    def refine(self, seeds: np.ndarray, config: SolverConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Damped Newton from every seed; returns (points, residual max-norms, converged mask)."""
        x = np.array(seeds, dtype=float).reshape(-1, self.dimension)
        r = self.residuals(x)
        worst = np.max(np.abs(r), axis=1)
        active = worst > config.refine_tol

        for iteration in range(config.max_newton_iters):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            xa, ra = x[idx], r[idx]
            square = self.jacobian(xa)[:, :-1, :]
            step = -np.einsum("nij,nj->ni", np.linalg.pinv(square, rcond=1e-10), ra[:, :-1])

            alpha = np.ones(idx.size)
            trial = xa + step
            r_trial = self.residuals(trial)
            w_trial = np.max(np.abs(r_trial), axis=1)
            improving = w_trial < worst[idx]
            for _ in range(config.max_line_search):
                if improving.all():
                    break
                bad = ~improving
                alpha[bad] /= 2
                trial[bad] = xa[bad] + alpha[bad, None] * step[bad]
                r_trial[bad] = self.residuals(trial[bad])
                w_trial[bad] = np.max(np.abs(r_trial[bad]), axis=1)
                improving = w_trial < worst[idx]

            accepted = idx[improving]
            x[accepted] = trial[improving]
            r[accepted] = r_trial[improving]
            worst[accepted] = w_trial[improving]
            active[idx[~improving]] = False     # stalled
            active &= worst > config.refine_tol
            logger.debug(f"Newton iteration {iteration}: {int(active.sum())} of {x.shape[0]} still active")

        return wrap_phase(x), worst, worst <= config.refine_tol


@dataclass(frozen=True)
class SolutionPoint:
    deltas: Tuple[float, ...]    # (0, δ_1, ..., δ_2σ)
    residual_max: float
    nullity: int


@dataclass(frozen=True, eq=False)
class SolutionFamily:
    nullity: int
    samples: np.ndarray          # rows (0, δ_1, ..., δ_2σ)
    residual_max: float
    closed: bool
    members: int                 # converged grid points attributed to the family


@dataclass(frozen=True, eq=False)
class SolutionSet:
    sigma: HalfInt
    lam: HalfInt
    points: Tuple[SolutionPoint, ...]
    families: Tuple[SolutionFamily, ...] = ()
    seeds_total: int = 0
    seeds_refined: int = 0

    @property
    def is_empty(self) -> bool:
        return not self.points and not self.families

    def point_array(self) -> np.ndarray:
        """Isolated points as rows of free phases."""
        return np.array([p.deltas[1:] for p in self.points], dtype=float).reshape(-1, self.sigma.twice_value)

    def all_samples(self) -> np.ndarray:
        """Isolated points and every family sample, as rows of free phases."""
        rows = [self.point_array()] + [f.samples[:, 1:] for f in self.families]
        return np.concatenate(rows, axis=0) if rows else np.zeros((0, self.sigma.twice_value))


def _seed_chunk(problem: PerfectEntanglerProblem, config: SolverConfig,
                start: int, stop: int) -> Tuple[np.ndarray, int]:
    """Refine the seeds with flat grid indices [start, stop); returns (converged points, seeds refined)."""
    n, k = config.grid_points_per_axis, problem.dimension
    grid_index = np.stack(np.unravel_index(np.arange(start, stop), (n,) * k), axis=1)
    seeds = -math.pi + 2 * math.pi * (grid_index + 0.5) / n
    worst = np.max(np.abs(problem.residuals(seeds)), axis=1)
    seeds = seeds[worst < config.seed_threshold]
    if seeds.shape[0] == 0:
        return np.zeros((0, k)), 0
    points, _, converged = problem.refine(seeds, config)
    return deduplicate(points[converged], config.dedup_radius), seeds.shape[0]


def _with_gauge(rows: np.ndarray) -> np.ndarray:
    return np.concatenate([np.zeros((rows.shape[0], 1)), rows], axis=1)


class PerfectEntanglerSolver(ProgressSubject):
    """
    Grid-seeded Newton search for perfect entanglers, publishing progress events
    for the "seeds" and "families" stages.
    """

    def __init__(self, config: Optional[SolverConfig] = None,
                 observers: Optional[Iterable[IProgressObserver]] = None):
        super().__init__(observers)
        self.config = (config or SolverConfig()).validate()

    def solve(self, sigma: HalfIntLike, lam: HalfIntLike) -> SolutionSet:
        sigma = as_spin(sigma)
        lam = check_lambda(sigma, lam)
        if sigma.twice_value == 0:
            # d = 1: every state is trivially maximal
            return SolutionSet(sigma, lam, (SolutionPoint((0.0,), 0.0, 0),), (), 1, 0)

        problem = PerfectEntanglerProblem(sigma, lam)
        points, seeds_total, seeds_refined = self._search(problem)
        if points.shape[0] == 0:
            logger.warning(f"sigma={sigma}, lambda={lam}: no seed converged, solution set is empty")
            return SolutionSet(sigma, lam, (), (), seeds_total, seeds_refined)

        worst = np.max(np.abs(problem.residuals(points)), axis=1)
        nullity, tangents = self._classify(problem, points)
        isolated = tuple(
            SolutionPoint(tuple(float(x) for x in row), float(w), 0)
            for row, w in zip(_with_gauge(points[nullity == 0]), worst[nullity == 0])
        )
        members = nullity > 0
        families = self._families(problem, points[members], nullity[members], tangents[members])
        logger.info(
            f"sigma={sigma}, lambda={lam}: {len(isolated)} isolated point(s), {len(families)} famil"
            f"{'y' if len(families) == 1 else 'ies'} from {points.shape[0]} distinct converged point(s)"
        )
        return SolutionSet(sigma, lam, isolated, families, seeds_total, seeds_refined)

    def _search(self, problem: PerfectEntanglerProblem) -> Tuple[np.ndarray, int, int]:
        config = self.config
        seeds_total = config.grid_points_per_axis ** problem.dimension
        bounds = [(start, min(start + config.chunk_size, seeds_total))
                  for start in range(0, seeds_total, config.chunk_size)]
        task_id = generate_task_id()
        self.notify_observers(TaskStartedEvent(
            task_id, f"sigma={problem.sigma} lambda={problem.lam}: refining seeds",
            total=len(bounds), stage="seeds",
        ))

        collected: List[np.ndarray] = []
        seeds_refined = 0
        found = 0
        try:
            results = Parallel(n_jobs=config.n_jobs, prefer="threads", return_as="generator")(
                delayed(_seed_chunk)(problem, config, start, stop) for start, stop in bounds
            )
            for converged, refined in results:
                collected.append(converged)
                seeds_refined += refined
                found += converged.shape[0]
                self.notify_observers(ProgressAdvancedEvent(task_id, 1, stage="seeds", found=found))
        except Exception as e:
            self.notify_observers(TaskErrorEvent(task_id, str(e), stage="seeds"))
            raise

        points = deduplicate(np.concatenate(collected, axis=0), config.dedup_radius)
        self.notify_observers(TaskFinishedEvent(
            task_id, stage="seeds", description=f"{points.shape[0]} distinct solution point(s)",
        ))
        logger.info(
            f"{seeds_total} seeds, {seeds_refined} below threshold {config.seed_threshold}, "
            f"{points.shape[0]} distinct converged point(s)"
        )
        return points, seeds_total, seeds_refined

    def _classify(self, problem: PerfectEntanglerProblem,
                  points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Nullity of every root, plus a tangent (NaN rows: use the Jacobian null vector)."""
        config = self.config
        jacobian = problem.numerical_jacobian(points, config.jacobian_step)
        nullity = jacobian_nullity(jacobian, config.family_rank_tol)
        tangents = np.full(points.shape, np.nan)
        degenerate = degenerate_roots(jacobian, config.family_rank_tol, TANGENT_SPREAD * config.spread_radius)
        if degenerate.any():
            dimension, directions = local_dimension(
                problem, points[degenerate], config.spread_radius, config.refine_tol,
                config.max_newton_iters, batch=config.chunk_size,
            )
            nullity[degenerate] = dimension
            tangents[degenerate] = directions
            logger.info(f"{int(degenerate.sum())} root(s) with a degenerate Jacobian classified by local projection")
        return nullity, tangents

    def _families(self, problem: PerfectEntanglerProblem, points: np.ndarray,
                  nullity: np.ndarray, tangents: np.ndarray) -> Tuple[SolutionFamily, ...]:
        config = self.config
        families: List[SolutionFamily] = []
        task_id = generate_task_id()
        self.notify_observers(TaskStartedEvent(
            task_id, "tracing solution families", total=max(points.shape[0], 1), stage="families",
        ))

        curve_points = points[nullity == 1]
        curve_tangents = tangents[nullity == 1]
        unassigned = np.ones(curve_points.shape[0], dtype=bool)
        while unassigned.any():
            start_index = int(np.flatnonzero(unassigned)[0])
            tangent = curve_tangents[start_index]
            traced = trace_family(problem, curve_points[start_index], config.step,
                                  config.refine_tol, config.max_newton_iters,
                                  tangent=None if np.isnan(tangent).any() else tangent)
            members = unassigned & near_any(curve_points, traced.samples, config.step)
            members[start_index] = True
            unassigned &= ~members
            families.append(self._family(problem, 1, traced.samples, traced.closed, int(members.sum())))
            self.notify_observers(ProgressAdvancedEvent(
                task_id, int(members.sum()), stage="families", found=len(families),
            ))

        for k in np.unique(nullity[nullity > 1]):
            for cluster in cluster_points(points[nullity == k], 1.5 * config.grid_spacing):
                families.append(self._family(problem, int(k), cluster, False, cluster.shape[0]))
                self.notify_observers(ProgressAdvancedEvent(
                    task_id, cluster.shape[0], stage="families", found=len(families),
                ))

        self.notify_observers(TaskFinishedEvent(
            task_id, stage="families", description=f"{len(families)} solution famil{'y' if len(families) == 1 else 'ies'}",
        ))
        families.sort(key=lambda f: tuple(f.samples[canonical_order(f.samples)[0]]))
        return tuple(families)

    def _family(self, problem: PerfectEntanglerProblem, nullity: int, samples: np.ndarray,
                closed: bool, members: int) -> SolutionFamily:
        worst = float(np.max(np.abs(problem.residuals(samples))))
        samples = _with_gauge(thin_samples(samples, self.config.max_family_samples))
        samples.setflags(write=False)
        logger.debug(f"Family of nullity {nullity}: {samples.shape[0]} samples, closed={closed}, "
                     f"residual {worst:.3g}")
        return SolutionFamily(nullity, samples, worst, closed, members)


def solve(sigma: HalfIntLike, lam: HalfIntLike, config: Optional[SolverConfig] = None,
          observers: Optional[Iterable[IProgressObserver]] = None) -> SolutionSet:
    """All perfect-entangler phase vectors for spin σ and in-state parameter λ."""
    return PerfectEntanglerSolver(config, observers).solve(sigma, lam)
