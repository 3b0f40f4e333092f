#!/usr/bin/env python3
"""
测试完美纠缠相移求解器：孤立解、解族、确定性与配置校验
"""

import math

import numpy as np
import pytest

from core.angular_momentum import HalfInt, wigner_matrix
from core.entanglement import certify_max_entangled, entropy_of_entanglement
from core.errors import DomainError, UsageError
from core.progress_events import ProgressAdvancedEvent, TaskFinishedEvent, TaskStartedEvent
from core.progress_observer import IProgressObserver
from core.reference_systems import published_points
from core.scattering import PhaseShiftVector, build_s_matrix, scatter
from core.serialization import JsonCodec
from core.solution_families import torus_distance
from core.solver import PerfectEntanglerProblem, SolverConfig, residual, solve
from core.states import InStateSpec, invariant_in_state


class RecordingObserver(IProgressObserver):
    """记录收到的所有事件"""

    def __init__(self):
        self.events = []

    def on_event(self, event):
        self.events.append(event)


def nearest(points, target):
    return float(np.min(torus_distance(points, target[None, :])))


def test_residual_of_half_spin_solution():
    r = residual("1/2", "1/2", PhaseShiftVector("1/2", [0.0, math.pi / 4]))
    assert r.max_norm <= 1e-12
    r = residual("1/2", "1/2", PhaseShiftVector("1/2", [0.0, 0.0]))
    np.testing.assert_allclose(r.values, [0.5, -0.5])


@pytest.mark.parametrize("sigma, lam", [("1", "1"), ("3/2", "1/2"), ("2", "0")])
def test_analytic_jacobian_matches_finite_differences(sigma, lam):
    problem = PerfectEntanglerProblem(sigma, lam)
    points = np.random.default_rng(41).uniform(-np.pi, np.pi, (6, problem.dimension))
    np.testing.assert_allclose(problem.jacobian(points), problem.numerical_jacobian(points, 1e-6), atol=1e-8)


@pytest.mark.parametrize("lam", ["1/2", "-1/2"])
def test_half_spin_solutions(lam):
    solutions = solve("1/2", lam)
    assert not solutions.families
    assert len(solutions.points) == 4
    found = solutions.point_array()
    for target in published_points("1/2"):
        assert nearest(found, target) <= 1e-9
    for point in solutions.points:
        assert point.deltas[0] == 0.0
        assert point.residual_max <= 1e-12
        assert point.nullity == 0


def test_spin_one_isolated_points():
    """λ = ±1：16 个孤立解，即已发表的 8 个解及其 δ₁ ± π 像"""
    published = published_points(1)
    images = published + np.array([math.pi, 0.0])
    for lam in ("1", "-1"):
        solutions = solve(1, lam)
        assert not solutions.families
        found = solutions.point_array()
        assert found.shape == (16, 2)
        for target in published:
            assert nearest(found, target) <= 1e-9
        allowed = np.concatenate([published, images])
        for row in found:
            assert nearest(allowed, row) <= 1e-9
        assert max(p.residual_max for p in solutions.points) <= 1e-12


def test_phase_shift_by_pi_gives_same_s_matrix():
    a = build_s_matrix(1, PhaseShiftVector.from_free(1, [math.pi / 3, math.pi / 3]))
    b = build_s_matrix(1, PhaseShiftVector.from_free(1, [math.pi / 3 - math.pi, math.pi / 3]))
    np.testing.assert_allclose(a.matrix, b.matrix, atol=1e-12)


def test_spin_one_lambda_zero_families():
    """λ = 0：|g|² 与 δ₁ 无关，得到 δ₂ ∈ {±π/3, ±2π/3} 四条闭合曲线"""
    solutions = solve(1, 0)
    assert not solutions.points
    assert len(solutions.families) == 4
    levels = []
    for family in solutions.families:
        assert family.nullity == 1
        assert family.closed
        assert family.residual_max <= 1e-9
        delta2 = family.samples[:, 2]
        np.testing.assert_allclose(delta2, delta2[0], atol=1e-9)
        levels.append(delta2[0])
    np.testing.assert_allclose(sorted(levels), [-2 * math.pi / 3, -math.pi / 3, math.pi / 3, 2 * math.pi / 3],
                               atol=1e-9)


@pytest.mark.parametrize("lam", ["1/2", "-1/2", "1"])
def test_solutions_entangle_for_any_rotation(lam):
    sigma = "1/2" if lam != "1" else "1"
    solutions = solve(sigma, lam)
    rng = np.random.default_rng(43)
    for point in solutions.points:
        delta = PhaseShiftVector(sigma, point.deltas)
        euler = tuple(rng.uniform(-np.pi, np.pi, 3))
        out = scatter(invariant_in_state(sigma, InStateSpec(euler, HalfInt.of(lam))), delta)
        assert entropy_of_entanglement(out) == pytest.approx(1.0, abs=1e-10)
        frame = wigner_matrix(sigma, euler).matrix
        assert certify_max_entangled(out, tol=1e-9, local_frame=frame).is_maximal


def test_solve_is_deterministic_across_jobs():
    config = SolverConfig(chunk_size=256)
    first = JsonCodec.dumps(JsonCodec.encode_solution_set(solve(1, 1, config)))
    again = JsonCodec.dumps(JsonCodec.encode_solution_set(solve(1, 1, config)))
    parallel = JsonCodec.dumps(JsonCodec.encode_solution_set(solve(1, 1, config.with_overrides(n_jobs=2))))
    assert first == again == parallel


def test_spin_zero_is_trivial():
    solutions = solve(0, 0)
    assert len(solutions.points) == 1
    assert solutions.points[0].deltas == (0.0,)


def test_solve_rejects_bad_lambda():
    with pytest.raises(DomainError):
        solve("1/2", 1)


def test_solver_reports_progress():
    observer = RecordingObserver()
    solve(1, 0, SolverConfig(chunk_size=512), observers=[observer])
    stages = {(type(e).__name__, e.stage) for e in observer.events}
    assert ("TaskStartedEvent", "seeds") in stages
    assert ("TaskFinishedEvent", "seeds") in stages
    assert ("TaskStartedEvent", "families") in stages
    assert ("TaskFinishedEvent", "families") in stages
    seeds = [e for e in observer.events if isinstance(e, ProgressAdvancedEvent) and e.stage == "seeds"]
    start = next(e for e in observer.events if isinstance(e, TaskStartedEvent) and e.stage == "seeds")
    assert len(seeds) == start.total == math.ceil(48 ** 2 / 512)
    assert all(isinstance(e, (TaskStartedEvent, ProgressAdvancedEvent, TaskFinishedEvent)) for e in observer.events)


@pytest.mark.slow
def test_three_halves_families():
    """σ = 3/2：四条闭合曲线 δ₂ = ±π/2, δ₃ - δ₁ ∈ {0, π}，无孤立解"""
    solutions = solve("3/2", "3/2", SolverConfig(grid_points_per_axis=24))
    assert not solutions.points
    assert len(solutions.families) == 4
    for family in solutions.families:
        assert family.nullity == 1 and family.closed
        assert family.residual_max <= 1e-9
        free = family.samples[:, 1:]
        # second-order roots: samples sit about sqrt(refine_tol) off the exact curve
        assert np.max(np.abs(np.abs(free[:, 1]) - math.pi / 2)) <= 1e-5
        gap = free[:, 2] - free[:, 0]
        to_line = np.minimum(torus_distance(gap[:, None], np.zeros((1, 1))),
                             torus_distance(gap[:, None], np.full((1, 1), math.pi)))
        assert float(np.max(to_line)) <= 1e-5


@pytest.mark.slow
def test_spin_two_solutions_verify():
    solutions = solve(2, 0, SolverConfig(grid_points_per_axis=24))
    assert not solutions.is_empty
    problem = PerfectEntanglerProblem(2, 0)
    rows = solutions.all_samples()
    assert rows.shape[0] > 0
    assert float(np.max(np.abs(problem.residuals(rows)))) <= 1e-9


def test_config_validation():
    assert SolverConfig().validate().grid_points_per_axis == 48
    with pytest.raises(DomainError):
        SolverConfig(grid_points_per_axis=0).validate()
    with pytest.raises(DomainError):
        SolverConfig(refine_tol=-1.0).validate()
    with pytest.raises(DomainError):
        SolverConfig(n_jobs=0).validate()
    assert SolverConfig(n_jobs=-1).validate().n_jobs == -1


def test_config_from_mapping():
    config = SolverConfig.from_mapping({"grid_points_per_axis": "24", "refine_tol": "1e-11", "trace_step": None})
    assert config.grid_points_per_axis == 24
    assert config.refine_tol == pytest.approx(1e-11)
    assert config.step == pytest.approx(math.pi / 24)
    with pytest.raises(UsageError):
        SolverConfig.from_mapping({"grid": 10})
    with pytest.raises(UsageError):
        SolverConfig.from_mapping({"refine_tol": "tight"})
    assert config.with_overrides(n_jobs=4, chunk_size=None).n_jobs == 4
