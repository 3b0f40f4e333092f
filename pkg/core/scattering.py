"""scattering.py

Rotationally-invariant spin S-matrix built from one phase shift per total spin s,

    S = Σ_{s m} |s m⟩ e^{2iδ_s} ⟨s m|,

its action on two-spin states, and the coupled-channel amplitudes

    g_χ(λ) = Σ_s e^{2iδ_s} ⟨s 0|λ,-λ⟩ ⟨χ,-χ|s 0⟩

whose squared moduli are the Schmidt coefficients of S|λ,-λ⟩.

Phase vectors are indexed by s ascending (δ_0, ..., δ_2σ); coupled-basis columns
follow the CouplingTable order (s descending).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from core.angular_momentum import HalfInt, HalfIntLike, as_spin, coupling_table, wrap_phase
from core.entanglement import SchmidtSpectrum
from core.errors import DomainError, UsageError
from core.states import Basis, StateVector, check_lambda
from core.utils import build_logger

logger = build_logger(__name__)


@dataclass(frozen=True, eq=False)
class PhaseShiftVector:
    """Gauge-fixed phases (δ_0 = 0, ..., δ_2σ), each in (-π, π].

    A non-zero δ_0 on input is moved into ``offset``: the S-matrix is then
    e^{2i·offset} times the gauge-fixed one.
    """
    sigma: HalfInt
    deltas: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        sigma = as_spin(self.sigma)
        deltas = np.array(self.deltas, dtype=float).reshape(-1)
        if deltas.size != sigma.twice_value + 1:
            raise UsageError(
                f"sigma={sigma} needs {sigma.twice_value + 1} phase shifts (delta_0..delta_{sigma.twice_value}), "
                f"got {deltas.size}"
            )
        if not np.all(np.isfinite(deltas)) or not np.isfinite(self.offset):
            raise DomainError("Phase shifts must be finite")

        offset = float(self.offset) + float(deltas[0])
        deltas = wrap_phase(deltas - deltas[0])
        deltas[0] = 0.0
        deltas.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "deltas", deltas)
        object.__setattr__(self, "offset", wrap_phase(offset) if offset else 0.0)

    @classmethod
    def from_free(cls, sigma: HalfIntLike, free: Sequence[float]) -> "PhaseShiftVector":
        """Build from the free phases (δ_1, ..., δ_2σ)."""
        return cls(as_spin(sigma), np.concatenate(([0.0], np.asarray(free, dtype=float).reshape(-1))))

    @property
    def free(self) -> np.ndarray:
        """(δ_1, ..., δ_2σ), a point of the torus."""
        return self.deltas[1:]

    @property
    def phase_factors(self) -> np.ndarray:
        """e^{2iδ_s} for s = 0..2σ, gauge offset included."""
        return np.exp(2j * (self.deltas + self.offset))


@dataclass(frozen=True, eq=False)
class SpinSMatrix:
    sigma: HalfInt
    matrix: np.ndarray   # product basis

    def unitarity_deviation(self) -> float:
        """max |S†S - I|"""
        identity = np.eye(self.matrix.shape[0])
        return float(np.max(np.abs(self.matrix.conj().T @ self.matrix - identity)))


@dataclass(frozen=True, eq=False)
class GVector:
    lam: HalfInt
    values: np.ndarray   # g_χ for χ = σ, σ-1, ..., -σ

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.values) ** 2


def _check_sigma(sigma: HalfInt, delta: PhaseShiftVector) -> None:
    if delta.sigma != sigma:
        raise UsageError(f"sigma mismatch: state/operation has {sigma}, phase shifts have {delta.sigma}")


def _column_factors(delta: PhaseShiftVector) -> np.ndarray:
    """e^{2iδ_s} repeated over every coupled column of spin s."""
    table = coupling_table(delta.sigma)
    return delta.phase_factors[table.column_spins]


def build_s_matrix(sigma: HalfIntLike, delta: PhaseShiftVector) -> SpinSMatrix:
    """S = M · diag(e^{2iδ_s}) · Mᵀ in the product basis."""
    sigma = as_spin(sigma)
    _check_sigma(sigma, delta)
    m = coupling_table(sigma).matrix
    matrix = (m * _column_factors(delta)[None, :]) @ m.T
    matrix.setflags(write=False)
    return SpinSMatrix(sigma, matrix)


def coupled_form(smatrix: SpinSMatrix) -> np.ndarray:
    """Mᵀ S M, diagonal for a rotationally-invariant S."""
    m = coupling_table(smatrix.sigma).matrix
    return m.T @ smatrix.matrix @ m


def scatter(state: StateVector, delta: PhaseShiftVector) -> StateVector:
    """|φ'⟩ = S|φ⟩, returned in the basis of the input state."""
    _check_sigma(state.sigma, delta)
    if state.basis is Basis.COUPLED:
        return StateVector(state.sigma, Basis.COUPLED, _column_factors(delta) * state.amplitudes)
    smatrix = build_s_matrix(state.sigma, delta)
    return StateVector(state.sigma, Basis.PRODUCT, smatrix.matrix @ state.amplitudes)


@lru_cache(maxsize=None)
def channel_weights(sigma: HalfInt, lam: HalfInt) -> np.ndarray:
    """W[s, χ] = ⟨s 0|λ,-λ⟩ ⟨χ,-χ|s 0⟩, rows s = 0..2σ, columns χ descending.

    ``sigma`` and ``lam`` must already be validated HalfInt values.
    """
    table = coupling_table(sigma)
    lam_row = table.row_of(lam, -lam)
    chi_rows = [table.row_of(chi, -chi) for chi in sigma.magnetic_range()]
    weights = np.zeros((sigma.twice_value + 1, sigma.dim), dtype=float)
    for s in range(sigma.twice_value + 1):
        column = table.matrix[:, table.column_of(s, 0)]
        weights[s] = column[lam_row] * column[chi_rows]
    weights.setflags(write=False)
    return weights


def g_values(weights: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    """g_χ for a batch of phase vectors ``deltas[..., s]``.

    Summed term by term over s so every batch size gives bitwise identical rows.
    """
    factors = np.exp(2j * np.asarray(deltas, dtype=float))
    g = np.zeros(factors.shape[:-1] + (weights.shape[1],), dtype=complex)
    for s in range(weights.shape[0]):
        g += factors[..., s, None] * weights[s]
    return g


def g_vector(sigma: HalfIntLike, lam: HalfIntLike, delta: PhaseShiftVector) -> GVector:
    sigma = as_spin(sigma)
    _check_sigma(sigma, delta)
    lam = check_lambda(sigma, lam)
    values = g_values(channel_weights(sigma, lam), delta.deltas) * np.exp(2j * delta.offset)
    values.setflags(write=False)
    return GVector(lam, values)


def schmidt_from_g(g: GVector) -> SchmidtSpectrum:
    """Schmidt coefficients |g_χ|², descending."""
    return SchmidtSpectrum(tuple(float(p) for p in np.sort(g.probabilities)[::-1]))


def out_state_tilde(sigma: HalfIntLike, lam: HalfIntLike, delta: PhaseShiftVector) -> StateVector:
    """S|λ,-λ⟩ = Σ_χ g_χ |χ,-χ⟩, the out-state before U(u) is applied."""
    sigma = as_spin(sigma)
    g = g_vector(sigma, lam, delta)
    amplitudes = np.zeros((sigma.dim, sigma.dim), dtype=complex)
    for i, chi in enumerate(sigma.magnetic_range()):
        amplitudes[i, sigma.index_of(-chi)] = g.values[i]
    return StateVector(sigma, Basis.PRODUCT, amplitudes.reshape(-1))
