"""solution_families.py

Geometry of solution sets on the phase torus (-π, π]^k: the flat torus metric,
deduplication of converged Newton points, the local dimension of the solution set at
a root and tracing of one-parameter solution curves.

Where the residual vanishes only to second order (the σ = 3/2 curves), the Jacobian
shrinks with the distance to the curve and is nearly zero at every converged root, so
its numerical rank says nothing. Such roots are classified by ``local_dimension``:
nearby points are projected back onto the solution set and the rank of their spread
is the dimension of the set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Protocol, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from core.angular_momentum import wrap_phase
from core.utils import build_logger

logger = build_logger(__name__)

TWO_PI = 2 * np.pi
# spread singular values above this fraction of the spread radius are tangent directions
TANGENT_SPREAD = 0.1


class ResidualSystem(Protocol):
    """What family tracing needs from a residual problem."""

    @property
    def dimension(self) -> int: ...

    def residuals(self, points: np.ndarray) -> np.ndarray: ...

    def jacobian(self, points: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class TracedFamily:
    nullity: int
    samples: np.ndarray   # (n, k), in tracing order
    closed: bool


def torus_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """max over components of min(|Δ|, 2π - |Δ|); broadcasts over leading axes."""
    diff = np.mod(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)), TWO_PI)
    return np.max(np.minimum(diff, TWO_PI - diff), axis=-1, initial=0.0)


def _box(points: np.ndarray) -> np.ndarray:
    """Shift torus points into [0, 2π) for periodic KD-trees."""
    shifted = np.mod(points + np.pi, TWO_PI)
    return np.where(shifted >= TWO_PI, 0.0, shifted)


def canonical_order(points: np.ndarray) -> np.ndarray:
    """Indices sorting points lexicographically (first component most significant)."""
    if points.shape[0] == 0 or points.shape[1] == 0:
        return np.arange(points.shape[0])
    return np.lexsort(points.T[::-1])


def deduplicate(points: np.ndarray, radius: float) -> np.ndarray:
    """Drop points within ``radius`` (torus metric) of an earlier kept point.

    Points are visited in canonical order; returns the kept points in that order.
    Only kept points query the tree, so many copies of one root cost one query.
    """
    points = np.asarray(points, dtype=float)
    if points.shape[0] == 0:
        return points
    points = wrap_phase(points)
    ordered = points[canonical_order(points)]
    n, k = ordered.shape
    if n <= 1 or k == 0:
        return ordered[:1] if k == 0 else ordered

    boxed = _box(ordered)
    tree = cKDTree(boxed, boxsize=TWO_PI)
    kept = np.zeros(n, dtype=bool)
    covered = np.zeros(n, dtype=bool)
    for i in range(n):
        if covered[i]:
            continue
        kept[i] = True
        covered[tree.query_ball_point(boxed[i], radius, p=np.inf)] = True
    logger.debug(f"Deduplicated {n} points to {int(kept.sum())} (radius {radius:g})")
    return ordered[kept]


def jacobian_nullity(jacobian: np.ndarray, rank_tol: float) -> np.ndarray:
    """Number of singular values below ``rank_tol`` among the k columns; batched."""
    jacobian = np.asarray(jacobian)
    k = jacobian.shape[-1]
    if k == 0:
        return np.zeros(jacobian.shape[:-2], dtype=int)
    singular = np.linalg.svd(jacobian, compute_uv=False)
    rank = np.sum(singular > rank_tol, axis=-1)
    return k - rank


def degenerate_roots(jacobian: np.ndarray, rank_tol: float, floor: float) -> np.ndarray:
    """Mask of roots whose Jacobian cannot tell the dimension of the solution set; batched.

    That is a singular value in [rank_tol, floor), neither clearly zero nor clearly
    nonzero, or a Jacobian that vanishes altogether (the residual is not identically zero,
    so the solution set never fills a neighbourhood).
    """
    jacobian = np.asarray(jacobian)
    if jacobian.shape[-1] == 0:
        return np.zeros(jacobian.shape[:-2], dtype=bool)
    singular = np.linalg.svd(jacobian, compute_uv=False)
    unresolved = np.any((singular >= rank_tol) & (singular < floor), axis=-1)
    return unresolved | np.all(singular < rank_tol, axis=-1)


def project(system: ResidualSystem, points: np.ndarray, tol: float,
            max_iters: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Minimum-norm Gauss-Newton from every row; returns (points, residual max-norms, converged)."""
    x = np.array(points, dtype=float).reshape(-1, system.dimension)
    r = system.residuals(x)
    worst = np.max(np.abs(r), axis=1)
    active = worst > tol
    for _ in range(max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        step = np.einsum("nij,nj->ni", np.linalg.pinv(system.jacobian(x[idx]), rcond=1e-10), r[idx])
        x[idx] -= step
        r[idx] = system.residuals(x[idx])
        worst[idx] = np.max(np.abs(r[idx]), axis=1)
        active[idx] = worst[idx] > tol
    return wrap_phase(x), worst, worst <= tol


def local_dimension(system: ResidualSystem, points: np.ndarray, radius: float, tol: float,
                    max_iters: int, batch: int = 1024) -> Tuple[np.ndarray, np.ndarray]:
    """Dimension of the solution set at each root, and its leading tangent direction.

    Every root is displaced by ±radius along each axis and projected back. Tangent
    displacements survive the projection, normal ones do not, so the singular values
    of the 2k shifts are about √2·radius per tangent direction and near zero otherwise.
    """
    points = np.asarray(points, dtype=float)
    n, k = points.shape
    offsets = radius * np.concatenate([np.eye(k), -np.eye(k)])
    dimension = np.zeros(n, dtype=int)
    tangents = np.zeros((n, k))
    for start in range(0, n, batch):
        block = points[start:start + batch]
        m = block.shape[0]
        trial = (block[:, None, :] + offsets[None, :, :]).reshape(-1, k)
        landed, _, converged = project(system, trial, tol, max_iters)
        shift = wrap_phase(landed.reshape(m, 2 * k, k) - block[:, None, :])
        usable = converged.reshape(m, 2 * k) & (np.max(np.abs(shift), axis=-1) < 2 * radius)
        shift[~usable] = 0.0
        _, singular, vh = np.linalg.svd(shift, full_matrices=False)
        dimension[start:start + m] = np.sum(singular > TANGENT_SPREAD * radius, axis=-1)
        tangents[start:start + m] = vh[:, 0, :]
    logger.debug(f"Local dimension of {n} root(s): {np.bincount(dimension, minlength=k + 1).tolist()}")
    return dimension, tangents


def _null_vector(jacobian: np.ndarray) -> np.ndarray:
    _, _, vh = np.linalg.svd(jacobian)
    return vh[-1]


def _correct(system: ResidualSystem, point: np.ndarray, tol: float,
             max_iters: int) -> Tuple[Optional[np.ndarray], float]:
    """Project one point back onto the solution set; None when it does not converge."""
    x, worst, converged = project(system, point[None, :], tol, max_iters)
    return (x[0], float(worst[0])) if converged[0] else (None, float(worst[0]))


def trace_family(system: ResidualSystem, start: np.ndarray, step: float, tol: float,
                 max_iters: int = 50, tangent: Optional[np.ndarray] = None) -> TracedFamily:
    """Follow a one-parameter curve of solutions from ``start``.

    The first predictor follows ``tangent`` (the Jacobian null vector when omitted),
    later ones the secant through the last two samples; the corrector is Gauss-Newton.
    Stops when the curve returns to ``start`` (closed) or the corrector fails (open).
    """
    k = system.dimension
    max_steps = math.ceil(TWO_PI * k / step) + 1
    x = np.asarray(start, dtype=float)
    if tangent is None:
        tangent = _null_vector(system.jacobian(x[None, :])[0])
    tangent = np.asarray(tangent, dtype=float) / np.linalg.norm(tangent)
    # deterministic orientation: first significant component positive
    lead = np.flatnonzero(np.abs(tangent) > 1e-8)
    if lead.size and tangent[lead[0]] < 0:
        tangent = -tangent

    samples = [x]
    closed = False
    for n_step in range(1, max_steps + 1):
        corrected, worst = _correct(system, x + step * tangent, tol, max_iters)
        if corrected is None:
            logger.warning(f"Family tracing stopped after {n_step} steps: corrector residual {worst:.3g}")
            break
        secant = wrap_phase(corrected - x)
        length = float(np.linalg.norm(secant))
        if not 0.25 * step <= length <= 2 * step:
            logger.warning(f"Family tracing left the curve after {n_step} steps (secant {length:.3g})")
            break
        x, tangent = corrected, secant / length
        if n_step > 2 and float(torus_distance(x, start)) < 0.75 * step:
            closed = True
            break
        samples.append(x)

    logger.debug(f"Traced family with {len(samples)} samples (closed={closed})")
    return TracedFamily(nullity=1, samples=np.array(samples), closed=closed)


def cluster_points(points: np.ndarray, link_radius: float) -> List[np.ndarray]:
    """Single-linkage clusters of ``points`` under the torus metric, each in canonical order."""
    n = points.shape[0]
    if n == 0:
        return []
    tree = cKDTree(_box(points), boxsize=TWO_PI)
    pairs = tree.query_pairs(link_radius, p=np.inf, output_type="ndarray").reshape(-1, 2)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    n_clusters, labels = connected_components(graph, directed=False)
    clusters = [points[labels == c] for c in range(n_clusters)]
    clusters = [c[canonical_order(c)] for c in clusters]
    clusters.sort(key=lambda c: tuple(c[0]))
    return clusters


def near_any(points: np.ndarray, samples: np.ndarray, radius: float) -> np.ndarray:
    """Mask of ``points`` lying within ``radius`` of some sample."""
    if points.shape[0] == 0 or samples.shape[0] == 0:
        return np.zeros(points.shape[0], dtype=bool)
    tree = cKDTree(_box(samples), boxsize=TWO_PI)
    distances, _ = tree.query(_box(points), k=1, p=np.inf)
    return distances < radius


def thin_samples(samples: np.ndarray, limit: int) -> np.ndarray:
    """At most ``limit`` evenly spaced rows, first and last kept."""
    if samples.shape[0] <= limit:
        return samples
    picks = np.unique(np.round(np.linspace(0, samples.shape[0] - 1, limit)).astype(int))
    return samples[picks]
