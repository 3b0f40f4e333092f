"""entropy_landscape.py

Out-state entanglement as a function of the phase shifts: the best perfect-entangling
attempt for an arbitrary separable in-state, and regular one- or two-phase scans for
the invariant in-state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from core.angular_momentum import HalfInt, HalfIntLike, as_spin, coupling_table, wrap_phase
from core.entanglement import batch_entropy, entropy_from_probabilities
from core.errors import UsageError
from core.progress_events import ProgressAdvancedEvent, TaskFinishedEvent, TaskStartedEvent, generate_task_id
from core.progress_observer import IProgressObserver, ProgressSubject
from core.scattering import PhaseShiftVector, channel_weights, g_values
from core.solution_families import canonical_order
from core.solver import SolverConfig
from core.states import SeparableSpec, check_lambda, separable_state
from core.utils import build_logger

logger = build_logger(__name__)

# entropies closer than this are ties, broken by the lexicographically smallest phases
ENTROPY_TIE = 1e-12
REFINED_CANDIDATES = 8


@dataclass(frozen=True, eq=False)
class EntropySearchResult:
    best_delta: PhaseShiftVector
    best_entropy: float
    grid_best_entropy: float
    evaluations: int


class OutStateEntropy:
    """E(S(δ)ψ) for a fixed product-basis state ψ, batched over rows of free phases."""

    def __init__(self, sigma: HalfInt, amplitudes: np.ndarray):
        self.sigma = sigma
        table = coupling_table(sigma)
        self._matrix = table.matrix
        self._spins = table.column_spins
        self._coupled = table.matrix.T @ amplitudes

    def __call__(self, free: np.ndarray) -> np.ndarray:
        free = np.atleast_2d(free)
        deltas = np.concatenate([np.zeros((free.shape[0], 1)), free], axis=1)
        factors = np.exp(2j * deltas)[:, self._spins]
        out = (factors * self._coupled[None, :]) @ self._matrix.T
        d = self.sigma.dim
        return batch_entropy(out.reshape(-1, d, d))


def _grid_chunk(n: int, k: int, start: int, stop: int) -> np.ndarray:
    index = np.stack(np.unravel_index(np.arange(start, stop), (n,) * k), axis=1)
    return -math.pi + 2 * math.pi * (index + 0.5) / n


def _pick_best(points: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, float]:
    top = float(np.max(values))
    tied = wrap_phase(points[values >= top - ENTROPY_TIE])
    return tied[canonical_order(tied)[0]], top


def max_entropy_search(sigma: HalfIntLike, spec: SeparableSpec, config: Optional[SolverConfig] = None,
                       observers: Optional[Iterable[IProgressObserver]] = None) -> EntropySearchResult:
    """Largest entanglement entropy reachable from the separable state ``spec`` by any S.

    Grid search over the torus, then Nelder-Mead ascent from the best grid cells.
    """
    sigma = as_spin(sigma)
    config = (config or SolverConfig()).validate()
    state = separable_state(sigma, spec)
    k = sigma.twice_value
    if k == 0:
        return EntropySearchResult(PhaseShiftVector(sigma, [0.0]), 0.0, 0.0, 1)

    entropy = OutStateEntropy(sigma, state.amplitudes)
    n = config.grid_points_per_axis
    total = n ** k
    subject = ProgressSubject(observers)
    task_id = generate_task_id()
    chunks = range(0, total, config.chunk_size)
    subject.notify_observers(TaskStartedEvent(task_id, f"sigma={sigma}: entropy grid", len(chunks), stage="entropy"))

    # running shortlist of the best grid cells
    best_points = np.zeros((0, k))
    best_values = np.zeros(0)
    for start in chunks:
        points = _grid_chunk(n, k, start, min(start + config.chunk_size, total))
        values = entropy(points)
        best_points = np.concatenate([best_points, points])
        best_values = np.concatenate([best_values, values])
        keep = np.argsort(-best_values, kind="stable")[:REFINED_CANDIDATES]
        best_points, best_values = best_points[keep], best_values[keep]
        subject.notify_observers(ProgressAdvancedEvent(task_id, 1, stage="entropy"))
    grid_best = float(best_values[0])

    candidates: List[np.ndarray] = [best_points]
    values: List[np.ndarray] = [best_values]
    evaluations = total
    for x0 in best_points:
        result = minimize(lambda x: -float(entropy(x)[0]), x0, method="Nelder-Mead",
                          options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000 * k})
        evaluations += int(result.nfev)
        candidates.append(np.atleast_2d(result.x))
        values.append(np.array([-float(result.fun)]))
    point, best = _pick_best(np.concatenate(candidates), np.concatenate(values))
    best = min(max(best, 0.0), 1.0)

    subject.notify_observers(TaskFinishedEvent(task_id, stage="entropy", description=f"best entropy {best:.12g}"))
    logger.info(f"sigma={sigma}: best out-state entropy {best:.12g} (grid {grid_best:.6g}) at {np.round(point, 6)}")
    return EntropySearchResult(PhaseShiftVector.from_free(sigma, point), best, grid_best, evaluations)


@dataclass(frozen=True, eq=False)
class EntropyScan:
    sigma: HalfInt
    lam: HalfInt
    axes: Tuple[int, ...]
    coordinates: np.ndarray    # (rows, len(axes)) values of δ_axis
    entropy: np.ndarray        # (rows,)


def scan_axes(sigma: HalfInt, axes: Sequence[int]) -> Tuple[int, ...]:
    axes = tuple(int(a) for a in axes)
    if len(axes) not in (1, 2) or len(set(axes)) != len(axes):
        raise UsageError(f"Scan needs one or two distinct phase indices, got {axes}")
    for a in axes:
        if not 1 <= a <= sigma.twice_value:
            raise UsageError(f"Phase index {a} outside 1..{sigma.twice_value} for sigma={sigma}")
    return axes


def scan_entropy(sigma: HalfIntLike, lam: HalfIntLike, axes: Sequence[int], samples: int,
                 base: Optional[PhaseShiftVector] = None,
                 observers: Optional[Iterable[IProgressObserver]] = None) -> EntropyScan:
    """Out-state entropy of the invariant in-state over δ_axis ∈ {-π + 2π(i+1)/N}.

    Phases not scanned keep their values from ``base`` (all zero by default). The
    entropy does not depend on the in-state rotation u.
    """
    sigma = as_spin(sigma)
    lam = check_lambda(sigma, lam)
    axes = scan_axes(sigma, axes)
    if samples <= 0:
        raise UsageError(f"samples must be positive, got {samples}")
    base = base or PhaseShiftVector(sigma, np.zeros(sigma.twice_value + 1))
    if base.sigma != sigma:
        raise UsageError(f"sigma mismatch: scan has {sigma}, base phases have {base.sigma}")

    subject = ProgressSubject(observers)
    task_id = generate_task_id()
    subject.notify_observers(TaskStartedEvent(task_id, f"sigma={sigma}: entropy scan", 1, stage="scan"))

    line = -math.pi + 2 * math.pi * (np.arange(samples) + 1) / samples
    mesh = np.meshgrid(*([line] * len(axes)), indexing="ij")
    coordinates = np.stack([m.reshape(-1) for m in mesh], axis=1)
    deltas = np.tile(base.deltas, (coordinates.shape[0], 1))
    deltas[:, list(axes)] = coordinates
    g = g_values(channel_weights(sigma, lam), deltas)
    entropy = entropy_from_probabilities(np.abs(g) ** 2, sigma.dim)

    subject.notify_observers(ProgressAdvancedEvent(task_id, 1, stage="scan"))
    subject.notify_observers(TaskFinishedEvent(task_id, stage="scan"))
    logger.debug(f"Scanned {coordinates.shape[0]} phase vectors, max entropy {float(entropy.max()):.6g}")
    return EntropyScan(sigma, lam, axes, coordinates, entropy)
