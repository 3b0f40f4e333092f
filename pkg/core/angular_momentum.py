"""angular_momentum.py

Exact half-integer quantum numbers, Clebsch-Gordan coefficients, the coupling
table between the product basis |μ₁,μ₂⟩ and the coupled basis |s m⟩ of two equal
spins, and Wigner rotation matrices.

Conventions
-----------
- Condon-Shortley phases: every CGC is real.
- Single-spin basis ordered by m descending (σ, σ-1, ..., -σ).
- Product basis rows ordered (μ₁ descending, μ₂ descending), i.e. row = i(μ₁)·d + i(μ₂).
- Coupled basis columns ordered (s descending, m descending).
- D^σ(α, β, γ) = exp(-iαΣ₃) d^σ(β) exp(-iγΣ₃) (active rotation, z-y-z Euler angles).
  A rotation corresponds to two SU(2) elements; for half-integer σ the two
  matrices differ by a sign, which is a global phase on every two-spin state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterator, List, Sequence, Tuple, Union

import numpy as np

from core.errors import DomainError, UsageError
from core.utils import build_logger

logger = build_logger(__name__)

HalfIntLike = Union["HalfInt", int, str, Fraction]


@dataclass(frozen=True, order=True)
class HalfInt:
    """A half-integer stored as twice its value."""
    twice_value: int

    def __post_init__(self):
        if isinstance(self.twice_value, bool) or not isinstance(self.twice_value, (int, np.integer)):
            raise UsageError(f"twice_value must be an integer, got {self.twice_value!r}")
        object.__setattr__(self, "twice_value", int(self.twice_value))

    @classmethod
    def of(cls, value: HalfIntLike) -> "HalfInt":
        """Build from a HalfInt, an int, a Fraction or a string such as ``"3/2"``, ``"-1"``."""
        if isinstance(value, HalfInt):
            return value
        if isinstance(value, bool):
            raise UsageError(f"Not a quantum number: {value!r}")
        if isinstance(value, (int, np.integer)):
            return cls(2 * int(value))
        if isinstance(value, str):
            try:
                value = Fraction(value.strip())
            except (ValueError, ZeroDivisionError) as e:
                raise UsageError(f"Cannot parse {value!r} as an integer or half-integer") from e
        if isinstance(value, Fraction):
            doubled = 2 * value
            if doubled.denominator != 1:
                raise DomainError(f"{value} is not an integer or half-integer")
            return cls(int(doubled))
        raise UsageError(f"Unsupported quantum number type: {type(value).__name__}")

    def __add__(self, other: HalfIntLike) -> "HalfInt":
        return HalfInt(self.twice_value + HalfInt.of(other).twice_value)

    def __sub__(self, other: HalfIntLike) -> "HalfInt":
        return HalfInt(self.twice_value - HalfInt.of(other).twice_value)

    def __neg__(self) -> "HalfInt":
        return HalfInt(-self.twice_value)

    def __abs__(self) -> "HalfInt":
        return HalfInt(abs(self.twice_value))

    def __float__(self) -> float:
        return self.twice_value / 2

    def __str__(self) -> str:
        if self.twice_value % 2 == 0:
            return str(self.twice_value // 2)
        return f"{self.twice_value}/2"

    @property
    def is_integer(self) -> bool:
        return self.twice_value % 2 == 0

    @property
    def dim(self) -> int:
        """Multiplicity 2j+1 of a spin j."""
        return self.twice_value + 1

    def magnetic_range(self) -> List["HalfInt"]:
        """Magnetic quantum numbers j, j-1, ..., -j."""
        if self.twice_value < 0:
            raise DomainError(f"Spin must be non-negative, got {self}")
        return [HalfInt(self.twice_value - 2 * k) for k in range(self.twice_value + 1)]

    def index_of(self, m: HalfIntLike) -> int:
        """Position of m in ``magnetic_range()``."""
        m = HalfInt.of(m)
        offset = self.twice_value - m.twice_value
        if abs(m.twice_value) > self.twice_value or offset % 2:
            raise DomainError(f"m = {m} is not a magnetic quantum number of spin {self}")
        return offset // 2


def as_spin(sigma: HalfIntLike) -> HalfInt:
    """Parse and validate a spin σ ≥ 0."""
    spin = HalfInt.of(sigma)
    if spin.twice_value < 0:
        raise DomainError(f"Spin must be non-negative, got {spin}")
    return spin


@dataclass(frozen=True)
class CgcQuery:
    """⟨J M | j1 m1, j2 m2⟩"""
    j1: HalfInt
    m1: HalfInt
    j2: HalfInt
    m2: HalfInt
    J: HalfInt
    M: HalfInt

    @classmethod
    def of(cls, j1: HalfIntLike, m1: HalfIntLike, j2: HalfIntLike,
           m2: HalfIntLike, J: HalfIntLike, M: HalfIntLike) -> "CgcQuery":
        return cls(*(HalfInt.of(v) for v in (j1, m1, j2, m2, J, M)))

    def validate(self) -> None:
        for j, m, label in ((self.j1, self.m1, "j1"), (self.j2, self.m2, "j2"), (self.J, self.M, "J")):
            if j.twice_value < 0:
                raise DomainError(f"{label} = {j} must be non-negative")
            if abs(m.twice_value) > j.twice_value:
                raise DomainError(f"|m| = {abs(m)} exceeds {label} = {j}")
            if (j.twice_value - m.twice_value) % 2:
                raise DomainError(f"{label} = {j} and its projection {m} differ in integer/half-integer parity")


@lru_cache(maxsize=None)
def _factorial(n: int) -> int:
    return math.factorial(n)


@lru_cache(maxsize=None)
def _cgc_squared(tj1: int, tm1: int, tj2: int, tm2: int, tJ: int, tM: int) -> Tuple[int, Fraction]:
    """Sign and exact square of the CGC by Racah's formula (arguments are twice-values)."""
    if tM != tm1 + tm2:
        return 0, Fraction(0)
    if tJ < abs(tj1 - tj2) or tJ > tj1 + tj2 or (tj1 + tj2 + tJ) % 2:
        return 0, Fraction(0)

    def half(n: int) -> int:
        return n // 2

    a = half(tj1 + tj2 - tJ)      # j1 + j2 - J
    b = half(tj1 - tm1)           # j1 - m1
    c = half(tj2 + tm2)           # j2 + m2
    e = half(tJ - tj2 + tm1)      # J - j2 + m1
    f = half(tJ - tj1 - tm2)      # J - j1 - m2

    prefactor = Fraction(
        (tJ + 1)
        * _factorial(half(tJ + tj1 - tj2))
        * _factorial(half(tJ - tj1 + tj2))
        * _factorial(a),
        _factorial(half(tj1 + tj2 + tJ) + 1),
    ) * (
        _factorial(half(tJ + tM)) * _factorial(half(tJ - tM))
        * _factorial(half(tj1 - tm1)) * _factorial(half(tj1 + tm1))
        * _factorial(half(tj2 - tm2)) * _factorial(half(tj2 + tm2))
    )

    total = Fraction(0)
    for k in range(max(0, -e, -f), min(a, b, c) + 1):
        denominator = (
            _factorial(k) * _factorial(a - k) * _factorial(b - k)
            * _factorial(c - k) * _factorial(e + k) * _factorial(f + k)
        )
        total += Fraction((-1) ** k, denominator)

    if total == 0:
        return 0, Fraction(0)
    return (1 if total > 0 else -1), total * total * prefactor


def cgc(q: CgcQuery) -> float:
    """⟨J M | j1 m1, j2 m2⟩ under the Condon-Shortley convention.

    Zero (exactly) when M ≠ m1 + m2 or the triangle rule fails.
    Raises DomainError for malformed quantum numbers.
    """
    q.validate()
    sign, squared = _cgc_squared(
        q.j1.twice_value, q.m1.twice_value, q.j2.twice_value,
        q.m2.twice_value, q.J.twice_value, q.M.twice_value,
    )
    if sign == 0:
        return 0.0
    return sign * math.sqrt(squared)


@dataclass(frozen=True, eq=False)
class CouplingTable:
    """Orthogonal change of basis for two spins σ: rows |μ₁,μ₂⟩, columns |s m⟩.

    Product coordinates map to coupled coordinates as ``matrix.T @ psi``.
    """
    sigma: HalfInt
    matrix: np.ndarray
    product_labels: Tuple[Tuple[HalfInt, HalfInt], ...]
    coupled_labels: Tuple[Tuple[HalfInt, HalfInt], ...]
    _rows: Dict[Tuple[HalfInt, HalfInt], int] = field(repr=False, default_factory=dict)
    _columns: Dict[Tuple[HalfInt, HalfInt], int] = field(repr=False, default_factory=dict)

    @property
    def dim(self) -> int:
        """Single-spin dimension d."""
        return self.sigma.dim

    def row_of(self, mu1: HalfIntLike, mu2: HalfIntLike) -> int:
        return self._rows[(HalfInt.of(mu1), HalfInt.of(mu2))]

    def column_of(self, s: HalfIntLike, m: HalfIntLike) -> int:
        return self._columns[(HalfInt.of(s), HalfInt.of(m))]

    @property
    def column_spins(self) -> np.ndarray:
        """Total spin s of every coupled column, as integers."""
        return np.array([s.twice_value // 2 for s, _ in self.coupled_labels], dtype=int)

    def iter_entries(self) -> Iterator[Tuple[HalfInt, HalfInt, HalfInt, HalfInt, float]]:
        """Yield (s, m, μ₁, μ₂, value) in column order, then row order."""
        for col, (s, m) in enumerate(self.coupled_labels):
            for row, (mu1, mu2) in enumerate(self.product_labels):
                yield s, m, mu1, mu2, float(self.matrix[row, col])


def total_spins(sigma: HalfInt) -> List[HalfInt]:
    """s = 2σ, 2σ-1, ..., 0 for two spins σ."""
    return [HalfInt(2 * s) for s in range(sigma.twice_value, -1, -1)]


@lru_cache(maxsize=None)
def coupling_table(sigma: HalfIntLike) -> CouplingTable:
    """Full CGC matrix between the product and coupled bases of two spins σ."""
    sigma = as_spin(sigma)
    mus = sigma.magnetic_range()
    product_labels = tuple((mu1, mu2) for mu1 in mus for mu2 in mus)
    coupled_labels = tuple((s, m) for s in total_spins(sigma) for m in s.magnetic_range())

    size = sigma.dim ** 2
    matrix = np.zeros((size, size), dtype=float)
    for col, (s, m) in enumerate(coupled_labels):
        for row, (mu1, mu2) in enumerate(product_labels):
            if mu1.twice_value + mu2.twice_value != m.twice_value:
                continue
            matrix[row, col] = cgc(CgcQuery(sigma, mu1, sigma, mu2, s, m))
    matrix.setflags(write=False)

    logger.debug(f"Built {size}x{size} coupling table for sigma={sigma}")
    return CouplingTable(
        sigma=sigma,
        matrix=matrix,
        product_labels=product_labels,
        coupled_labels=coupled_labels,
        _rows={label: i for i, label in enumerate(product_labels)},
        _columns={label: i for i, label in enumerate(coupled_labels)},
    )


@dataclass(frozen=True, eq=False)
class WignerRotation:
    sigma: HalfInt
    euler_angles: Tuple[float, float, float]
    matrix: np.ndarray


def _small_d(sigma: HalfInt, beta: float) -> np.ndarray:
    """Wigner small-d matrix d^σ_{m'm}(β), rows m' and columns m both descending."""
    tj = sigma.twice_value
    mus = sigma.magnetic_range()
    cos_half = math.cos(beta / 2)
    sin_half = math.sin(beta / 2)
    d = np.zeros((sigma.dim, sigma.dim), dtype=float)
    for row, mp in enumerate(mus):
        for col, m in enumerate(mus):
            jpmp = (tj + mp.twice_value) // 2
            jmmp = (tj - mp.twice_value) // 2
            jpm = (tj + m.twice_value) // 2
            jmm = (tj - m.twice_value) // 2
            shift = (mp.twice_value - m.twice_value) // 2   # m' - m
            norm = math.sqrt(_factorial(jpmp) * _factorial(jmmp) * _factorial(jpm) * _factorial(jmm))
            value = 0.0
            for k in range(max(0, -shift), min(jpm, jmmp) + 1):
                denominator = (
                    _factorial(jpm - k) * _factorial(k)
                    * _factorial(jmmp - k) * _factorial(k + shift)
                )
                value += (
                    (-1) ** (k + shift) * norm / denominator
                    * cos_half ** (tj - 2 * k - shift)
                    * sin_half ** (2 * k + shift)
                )
            d[row, col] = value
    return d


def wigner_matrix(sigma: HalfIntLike, euler: Sequence[float]) -> WignerRotation:
    """D^σ(α, β, γ) in the m-descending basis."""
    sigma = as_spin(sigma)
    alpha, beta, gamma = (float(x) for x in euler)
    if not all(math.isfinite(x) for x in (alpha, beta, gamma)):
        raise DomainError(f"Euler angles must be finite, got {(alpha, beta, gamma)}")

    m_values = np.array([float(m) for m in sigma.magnetic_range()])
    left = np.exp(-1j * alpha * m_values)
    right = np.exp(-1j * gamma * m_values)
    matrix = left[:, None] * _small_d(sigma, beta) * right[None, :]
    matrix.setflags(write=False)
    return WignerRotation(sigma=sigma, euler_angles=(alpha, beta, gamma), matrix=matrix)


@lru_cache(maxsize=None)
def spin_operators(sigma: HalfIntLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Single-spin (Σ₁, Σ₂, Σ₃) in the m-descending basis."""
    sigma = as_spin(sigma)
    j = float(sigma)
    mus = [float(m) for m in sigma.magnetic_range()]
    raising = np.zeros((sigma.dim, sigma.dim), dtype=complex)
    # Σ₊|m⟩ lands on m+1, one row above in descending order
    for col in range(1, sigma.dim):
        m = mus[col]
        raising[col - 1, col] = math.sqrt(j * (j + 1) - m * (m + 1))
    lowering = raising.conj().T
    sx = (raising + lowering) / 2
    sy = (raising - lowering) / 2j
    sz = np.diag(np.array(mus, dtype=complex))
    for op in (sx, sy, sz):
        op.setflags(write=False)
    return sx, sy, sz


def wrap_phase(angle):
    """Map angles into (-π, π]; -π goes to π. Works on scalars and arrays."""
    wrapped = np.pi - np.mod(np.pi - np.asarray(angle, dtype=float), 2 * np.pi)
    wrapped = np.where(wrapped <= -np.pi, wrapped + 2 * np.pi, wrapped)
    return float(wrapped) if wrapped.ndim == 0 else wrapped
