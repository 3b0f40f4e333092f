"""states.py

Two-spin pure states in the product basis |μ₁,μ₂⟩ or the coupled basis |s m⟩,
separable-state construction, basis transforms and the rotated in-state
φ(u, λ) = (D^σ(u) ⊗ D^σ(u)) |λ, -λ⟩.

Amplitude order always follows the CouplingTable row/column order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, Tuple

import numpy as np

from core.angular_momentum import (
    HalfInt, HalfIntLike, as_spin, coupling_table, spin_operators, wigner_matrix,
)
from core.errors import DomainError, UsageError
from core.utils import build_logger

logger = build_logger(__name__)

# Inputs within this distance of unit norm are renormalized, anything else is rejected
NORM_TOLERANCE = 1e-9


class Basis(Enum):
    PRODUCT = "product"
    COUPLED = "coupled"


def normalized(vector: np.ndarray, what: str = "vector") -> np.ndarray:
    """Return ``vector`` scaled to unit norm, if it is already unit norm to NORM_TOLERANCE."""
    norm = float(np.linalg.norm(vector))
    if norm == 0.0 or not np.isfinite(norm):
        raise DomainError(f"{what} has zero or non-finite norm")
    if abs(norm - 1.0) > NORM_TOLERANCE:
        raise DomainError(f"{what} has norm {norm:.12g}, expected 1 within {NORM_TOLERANCE}")
    return vector / norm


@dataclass(frozen=True, eq=False)
class StateVector:
    sigma: HalfInt
    basis: Basis
    amplitudes: np.ndarray

    def __post_init__(self):
        sigma = as_spin(self.sigma)
        amplitudes = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amplitudes.size != sigma.dim ** 2:
            raise UsageError(
                f"A two-spin state for sigma={sigma} needs {sigma.dim ** 2} amplitudes, got {amplitudes.size}"
            )
        if not isinstance(self.basis, Basis):
            raise UsageError(f"basis must be a Basis, got {self.basis!r}")
        amplitudes = normalized(amplitudes, "state")
        amplitudes.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def dim(self) -> int:
        return self.sigma.dim

    def amplitude_matrix(self) -> np.ndarray:
        """c[μ₁, μ₂] as a d×d matrix (product basis only)."""
        if self.basis is not Basis.PRODUCT:
            raise UsageError("amplitude_matrix needs a product-basis state")
        return self.amplitudes.reshape(self.dim, self.dim)

    def in_product_basis(self) -> "StateVector":
        return self if self.basis is Basis.PRODUCT else to_product(self)

    def overlap(self, other: "StateVector") -> complex:
        """⟨self|other⟩, converting ``other`` to this state's basis."""
        if other.sigma != self.sigma:
            raise UsageError(f"sigma mismatch: {self.sigma} vs {other.sigma}")
        if other.basis is not self.basis:
            other = to_product(other) if self.basis is Basis.PRODUCT else to_coupled(other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class SeparableSpec:
    """Single-spin factors a (spin 1) and b (spin 2), m-descending."""
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = normalized(np.array(self.a, dtype=complex).reshape(-1), "factor a")
        b = normalized(np.array(self.b, dtype=complex).reshape(-1), "factor b")
        if a.size != b.size:
            raise UsageError(f"Factors have different dimensions: {a.size} vs {b.size}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class InStateSpec:
    euler: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    lam: HalfInt = field(default_factory=lambda: HalfInt(0))


def basis_state(sigma: HalfIntLike, mu1: HalfIntLike, mu2: HalfIntLike) -> StateVector:
    """|μ₁, μ₂⟩"""
    sigma = as_spin(sigma)
    amplitudes = np.zeros(sigma.dim ** 2, dtype=complex)
    amplitudes[coupling_table(sigma).row_of(mu1, mu2)] = 1.0
    return StateVector(sigma, Basis.PRODUCT, amplitudes)


def separable_state(sigma: HalfIntLike, spec: SeparableSpec) -> StateVector:
    """|a⟩ ⊗ |b⟩ with c[μ₁,μ₂] = a[μ₁] b[μ₂]."""
    sigma = as_spin(sigma)
    if spec.a.size != sigma.dim:
        raise UsageError(f"Factors of length {spec.a.size} do not match sigma={sigma} (d={sigma.dim})")
    return StateVector(sigma, Basis.PRODUCT, np.kron(spec.a, spec.b))


def to_coupled(state: StateVector) -> StateVector:
    if state.basis is not Basis.PRODUCT:
        raise UsageError("to_coupled expects a product-basis state")
    table = coupling_table(state.sigma)
    return StateVector(state.sigma, Basis.COUPLED, table.matrix.T @ state.amplitudes)


def to_product(state: StateVector) -> StateVector:
    if state.basis is not Basis.COUPLED:
        raise UsageError("to_product expects a coupled-basis state")
    table = coupling_table(state.sigma)
    return StateVector(state.sigma, Basis.PRODUCT, table.matrix @ state.amplitudes)


def check_lambda(sigma: HalfInt, lam: HalfIntLike) -> HalfInt:
    """Validate λ ∈ {σ, σ-1, ..., -σ}."""
    lam = HalfInt.of(lam)
    if abs(lam.twice_value) > sigma.twice_value or (sigma.twice_value - lam.twice_value) % 2:
        raise DomainError(f"lambda = {lam} is not in the magnetic range of sigma = {sigma}")
    return lam


def local_rotation(sigma: HalfIntLike, euler: Sequence[float]) -> np.ndarray:
    """U(u) = D^σ(u) ⊗ D^σ(u) on the product basis."""
    d = wigner_matrix(sigma, euler).matrix
    return np.kron(d, d)


def invariant_in_state(sigma: HalfIntLike, spec: InStateSpec) -> StateVector:
    """φ(u, λ) = U(u)|λ, -λ⟩, the zero eigenvector of the rotated total Σ₃."""
    sigma = as_spin(sigma)
    lam = check_lambda(sigma, spec.lam)
    d = wigner_matrix(sigma, spec.euler).matrix
    first = d[:, sigma.index_of(lam)]
    second = d[:, sigma.index_of(-lam)]
    return StateVector(sigma, Basis.PRODUCT, np.kron(first, second))


def total_spin_component(sigma: HalfIntLike, euler: Sequence[float] = (0.0, 0.0, 0.0)) -> np.ndarray:
    """Σ₃' = U(u) (Σ₃ ⊗ 1 + 1 ⊗ Σ₃) U(u)† on the product basis."""
    sigma = as_spin(sigma)
    _, _, sz = spin_operators(sigma)
    identity = np.eye(sigma.dim)
    total = np.kron(sz, identity) + np.kron(identity, sz)
    rotation = local_rotation(sigma, euler)
    return rotation @ total @ rotation.conj().T


def apply_local(state: StateVector, first: np.ndarray, second: np.ndarray) -> StateVector:
    """(V ⊗ W)ψ for single-spin unitaries V, W."""
    state = state.in_product_basis()
    return StateVector(state.sigma, Basis.PRODUCT, np.kron(first, second) @ state.amplitudes)
