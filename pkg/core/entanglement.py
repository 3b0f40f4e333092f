"""entanglement.py

Partial trace, base-d von Neumann entropy, Schmidt data and a certificate for the
maximally entangled form (1/√d) Σ_j e^{iα_j} |j⟩ ⊗ |π_j⟩.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from core.angular_momentum import wrap_phase
from core.errors import DomainError, UsageError
from core.states import Basis, StateVector
from core.utils import build_logger

logger = build_logger(__name__)

HERMITIAN_TOLERANCE = 1e-12
TRACE_TOLERANCE = 1e-12
NEGATIVE_EIGENVALUE_TOLERANCE = 1e-10
# 0·log 0 := 0 below this eigenvalue
ZERO_EIGENVALUE = 1e-14
ENTROPY_CEILING = 1.0 + 1e-12


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def check(self) -> None:
        """Raise DomainError unless Hermitian, unit trace and positive semi-definite."""
        rho = self.entries
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise DomainError(f"Density matrix must be square, got shape {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T), initial=0.0) > HERMITIAN_TOLERANCE:
            raise DomainError("Density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > TRACE_TOLERANCE:
            raise DomainError(f"Density matrix has trace {np.trace(rho).real:.12g}")
        smallest = float(np.linalg.eigvalsh(rho)[0]) if rho.size else 0.0
        if smallest < -NEGATIVE_EIGENVALUE_TOLERANCE:
            raise DomainError(f"Density matrix has negative eigenvalue {smallest:.3g}")

    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues of the Hermitian part."""
        rho = self.entries
        return np.linalg.eigvalsh((rho + rho.conj().T) / 2)


@dataclass(frozen=True)
class SchmidtSpectrum:
    values: Tuple[float, ...]

    def flatness_deviation(self) -> float:
        """max_j |p_j - 1/d|"""
        values = np.asarray(self.values)
        return float(np.max(np.abs(values - 1.0 / values.size)))


@dataclass(frozen=True)
class SchmidtDecomposition:
    coefficients: np.ndarray   # √p_j, descending
    left: np.ndarray           # columns: spin-1 Schmidt vectors
    right: np.ndarray          # columns: spin-2 Schmidt vectors


@dataclass(frozen=True)
class MaxEntCertificate:
    is_maximal: bool
    permutation: Tuple[int, ...]
    phases: Tuple[float, ...]
    deviation: float


def partial_trace(state: StateVector, keep: int = 1) -> DensityMatrix:
    """ρ_keep = tr_other |ψ⟩⟨ψ|."""
    if keep not in (1, 2):
        raise UsageError(f"keep must be 1 or 2, got {keep}")
    c = state.in_product_basis().amplitude_matrix()
    if keep == 1:
        rho = c @ c.conj().T
    else:
        rho = c.T @ c.conj()
    return DensityMatrix(rho)


def entropy_from_probabilities(probabilities: np.ndarray, log_base: int) -> np.ndarray:
    """Base-``log_base`` Shannon entropy along the last axis, 0·log 0 := 0."""
    p = np.asarray(probabilities, dtype=float)
    if log_base <= 1:
        return np.zeros(p.shape[:-1])
    safe = np.where(p > ZERO_EIGENVALUE, p, 1.0)
    terms = np.where(p > ZERO_EIGENVALUE, -p * np.log(safe), 0.0)
    entropy = terms.sum(axis=-1) / np.log(log_base)
    entropy = np.where(entropy < ZERO_EIGENVALUE, 0.0, entropy)
    return np.minimum(entropy, ENTROPY_CEILING)


def von_neumann_entropy(rho: DensityMatrix, log_base: Optional[int] = None) -> float:
    """S(ρ) = -tr ρ log_d ρ from the eigenvalues, clamped to [0, 1 + 1e-12]."""
    rho.check()
    base = rho.dim if log_base is None else int(log_base)
    return float(entropy_from_probabilities(rho.eigenvalues(), base))


def schmidt_decomposition(state: StateVector) -> SchmidtDecomposition:
    c = state.in_product_basis().amplitude_matrix()
    left, coefficients, right_h = np.linalg.svd(c)
    return SchmidtDecomposition(coefficients=coefficients, left=left, right=right_h.T)


def schmidt_spectrum(state: StateVector) -> SchmidtSpectrum:
    """Eigenvalues of ρ₁, descending."""
    coefficients = np.linalg.svd(state.in_product_basis().amplitude_matrix(), compute_uv=False)
    return SchmidtSpectrum(tuple(float(x) for x in coefficients ** 2))


def batch_entropy(amplitude_matrices: np.ndarray) -> np.ndarray:
    """Entanglement entropies of a stack of d×d amplitude matrices."""
    d = amplitude_matrices.shape[-1]
    singular = np.linalg.svd(amplitude_matrices, compute_uv=False)
    return entropy_from_probabilities(singular ** 2, d)


def entropy_of_entanglement(state: StateVector) -> float:
    """E(ψ) = S(ρ₁), base d."""
    return von_neumann_entropy(partial_trace(state, 1), state.dim)


def certify_max_entangled(state: StateVector, tol: float = 1e-9,
                          local_frame: Optional[np.ndarray] = None) -> MaxEntCertificate:
    """Check for the form (1/√d) Σ_j e^{iα_j} |j⟩ ⊗ |π_j⟩.

    With ``local_frame`` V the check runs on (V† ⊗ V†)ψ.
    """
    psi = state.in_product_basis()
    if local_frame is not None:
        undo = np.asarray(local_frame).conj().T
        psi = StateVector(psi.sigma, Basis.PRODUCT, np.kron(undo, undo) @ psi.amplitudes)

    spectrum = schmidt_spectrum(psi)
    flatness = spectrum.flatness_deviation()
    if flatness > tol:
        return MaxEntCertificate(False, (), (), flatness)

    c = psi.amplitude_matrix()
    d = psi.dim
    permutation = tuple(int(k) for k in np.argmax(np.abs(c), axis=1))
    phases = tuple(wrap_phase(float(np.angle(c[j, k]))) for j, k in enumerate(permutation))

    reconstruction = np.zeros_like(c)
    for j, (k, alpha) in enumerate(zip(permutation, phases)):
        reconstruction[j, k] = np.exp(1j * alpha) / np.sqrt(d)
    deviation = float(np.max(np.abs(c - reconstruction)))

    is_permutation = sorted(permutation) == list(range(d))
    if not is_permutation:
        logger.debug(f"Row maxima {permutation} do not form a permutation")
    return MaxEntCertificate(is_permutation and deviation <= tol, permutation, phases, deviation)
