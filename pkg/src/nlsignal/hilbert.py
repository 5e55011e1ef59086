"""Finite-dimensional bipartite state algebra.

States live on H_A (x) H_B with the product basis |jk> flattened row-major,
so |jk> sits at index ``j * dim_b + k``.  For two qubits this is the ordering
(a00, a01, a10, a11).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, ShapeError, UnsupportedDimensionError, ValidationError

NORM_TOL = 1e-9


@dataclass(frozen=True)
class BipartiteShape:
    dim_a: int
    dim_b: int

    def __post_init__(self):
        for name in ("dim_a", "dim_b"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ShapeError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def total(self) -> int:
        return self.dim_a * self.dim_b

    def index(self, j: int, k: int) -> int:
        if not (0 <= j < self.dim_a and 0 <= k < self.dim_b):
            raise ShapeError(f"basis label ({j}, {k}) outside {self.dim_a}x{self.dim_b}")
        return j * self.dim_b + k

    def labels(self, flat: int) -> tuple[int, int]:
        if not 0 <= flat < self.total:
            raise ShapeError(f"flat index {flat} outside 0..{self.total - 1}")
        return divmod(flat, self.dim_b)


QUBITS = BipartiteShape(2, 2)


def _frozen(array):
    array = np.array(array, dtype=np.complex128)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state on a bipartite product space.

    Construction checks the norm to within ``NORM_TOL``; use
    :meth:`from_amplitudes` with ``normalize=True`` to rescale arbitrary input.
    """

    shape: BipartiteShape
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = _frozen(self.amps).reshape(-1)
        if amps.size != self.shape.total:
            raise ShapeError(
                f"expected {self.shape.total} amplitudes for a "
                f"{self.shape.dim_a}x{self.shape.dim_b} system, got {amps.size}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValidationError("amplitudes must be finite")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"state is not normalized (norm = {norm!r})")
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_amplitudes(cls, amps, shape: BipartiteShape | None = None, normalize=False):
        amps = np.asarray(amps, dtype=np.complex128).reshape(-1)
        if shape is None:
            if amps.size != 4:
                raise ShapeError("shape must be given unless the state has 4 amplitudes")
            shape = QUBITS
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0 or not np.isfinite(norm):
                raise ValidationError("cannot normalize a zero or non-finite vector")
            amps = amps / norm
        return cls(shape, amps)

    @property
    def matrix(self) -> np.ndarray:
        """Amplitudes as a ``(dim_a, dim_b)`` array, ``matrix[j, k] = alpha_jk``."""
        return self.amps.reshape(self.shape.dim_a, self.shape.dim_b)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def renormalized(self) -> "StateVector":
        return StateVector(self.shape, self.amps / np.linalg.norm(self.amps))

    def amplitude(self, j: int, k: int) -> complex:
        return complex(self.amps[self.shape.index(j, k)])


def basis_state(j: int, k: int, shape: BipartiteShape = QUBITS) -> StateVector:
    amps = np.zeros(shape.total, dtype=complex)
    amps[shape.index(j, k)] = 1.0
    return StateVector(shape, amps)


def bell_state() -> StateVector:
    """(|00> + |11>)/sqrt(2)."""
    return family_psi_x(0.0)


def family_psi_x(x: float) -> StateVector:
    """((1+x)|00> + (1-x)|11>) / sqrt(2(1+x^2)) for x in [0, 1].

    x = 0 gives the Bell state, x = 1 the product state |00>.  Concurrence
    falls monotonically as (1 - x^2)/(1 + x^2).
    """
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    amps = np.array([1 + x, 0, 0, 1 - x], dtype=complex) / np.sqrt(2 * (1 + x * x))
    return StateVector(QUBITS, amps)


def psi_x_for_overlap(overlap: float) -> float:
    """x such that |<Psi_0|Psi_x>| equals ``overlap``.

    <Psi_0|Psi_x> = 1/sqrt(1 + x^2), which is inverted in closed form.
    """
    if not 1 / np.sqrt(2) <= overlap <= 1:
        raise DomainError(f"overlap with the Bell state must lie in [1/sqrt(2), 1], got {overlap}")
    return float(np.sqrt(max(1.0 / overlap**2 - 1.0, 0.0)))


def psi_x_for_concurrence(conc: float) -> float:
    """x such that the concurrence of Psi_x equals ``conc``."""
    if not 0 <= conc <= 1:
        raise DomainError(f"concurrence must lie in [0, 1], got {conc}")
    return float(np.sqrt((1 - conc) / (1 + conc)))


def separable_eps_state(eps: float) -> StateVector:
    """|0> ((1-eps)|0> + eps|1>), normalized; a product state close to |00>."""
    amps = np.array([1 - eps, eps, 0, 0], dtype=complex)
    return StateVector(QUBITS, amps / np.sqrt(1 + 2 * (eps - 1) * eps))


def random_state(rng: np.random.Generator, shape: BipartiteShape = QUBITS) -> StateVector:
    """Haar-random pure state (normalized complex Gaussian vector)."""
    v = rng.normal(size=shape.total) + 1j * rng.normal(size=shape.total)
    return StateVector(shape, v / np.linalg.norm(v))


# -- matrices ---------------------------------------------------------------

def hermitian(matrix, name="matrix") -> np.ndarray:
    """Return a read-only copy of ``matrix`` after checking exact Hermiticity."""
    m = np.array(matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ShapeError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.array_equal(m, m.conj().T):
        raise ValidationError(f"{name} is not Hermitian")
    m.setflags(write=False)
    return m


def validate_density_matrix(rho, tol=NORM_TOL) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ShapeError(f"density matrix must be square, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValidationError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1) > tol:
        raise ValidationError(f"density matrix trace is {np.trace(rho).real!r}")
    if np.min(np.linalg.eigvalsh(rho)) < -tol:
        raise ValidationError("density matrix has a negative eigenvalue")
    return rho


def _as_matrix(amps, shape: BipartiteShape):
    amps = np.asarray(amps)
    if amps.shape[-1] != shape.total:
        raise ShapeError(f"amplitude axis has length {amps.shape[-1]}, expected {shape.total}")
    return amps.reshape(amps.shape[:-1] + (shape.dim_a, shape.dim_b))


def reduced_b(amps, shape: BipartiteShape) -> np.ndarray:
    """rho_B for one amplitude vector or a stack of them (leading axes kept)."""
    m = _as_matrix(amps, shape)
    return np.einsum("...jk,...jl->...kl", m, m.conj())


def reduced_a(amps, shape: BipartiteShape) -> np.ndarray:
    m = _as_matrix(amps, shape)
    return np.einsum("...jk,...lk->...jl", m, m.conj())


def partial_trace_b(state: StateVector) -> np.ndarray:
    """Bob's reduced state Tr_A |psi><psi|.

    The name follows the returned subsystem: ``<k|rho_B|k'> = sum_j a_jk conj(a_jk')``.
    """
    return reduced_b(state.amps, state.shape)


def partial_trace_a(state: StateVector) -> np.ndarray:
    """Alice's reduced state Tr_B |psi><psi|."""
    return reduced_a(state.amps, state.shape)


# -- qubit observables ------------------------------------------------------

PAULI = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex
)


def bloch_vector(rho) -> np.ndarray:
    """Bloch vector (n_x, n_y, n_z) of a qubit density matrix.

    Accepts a single 2x2 matrix or a stack ``(..., 2, 2)``; the result has
    shape ``(..., 3)``.
    """
    rho = np.asarray(rho)
    if rho.shape[-2:] != (2, 2):
        raise UnsupportedDimensionError(
            f"Bloch vectors need 2x2 density matrices, got trailing shape {rho.shape[-2:]}"
        )
    off = rho[..., 1, 0]
    return np.stack(
        [2 * off.real, 2 * off.imag, (rho[..., 0, 0] - rho[..., 1, 1]).real], axis=-1
    )


def fano_reconstruct(n) -> np.ndarray:
    """Inverse of :func:`bloch_vector`: (1 + n . sigma) / 2."""
    n = np.asarray(n, dtype=float)
    if n.shape[-1] != 3:
        raise ShapeError("Bloch vectors have three components")
    return 0.5 * (np.eye(2) + np.einsum("...i,ijk->...jk", n, PAULI))


def purity(rho) -> np.ndarray:
    rho = np.asarray(rho)
    return np.einsum("...ij,...ji->...", rho, rho).real


def _require_qubits(shape: BipartiteShape):
    if (shape.dim_a, shape.dim_b) != (2, 2):
        raise UnsupportedDimensionError(
            f"concurrence is implemented for two qubits, got {shape.dim_a}x{shape.dim_b}"
        )


def concurrence(state: StateVector) -> float:
    """Pure-state concurrence sqrt(2 (1 - Tr rho_B^2)), clipped to [0, 1].

    Evaluated as 2 |a00 a11 - a01 a10|, which is the same quantity for a
    normalized two-qubit state but keeps full relative accuracy near
    separable states, where 1 - Tr rho_B^2 cancels.
    """
    _require_qubits(state.shape)
    return float(concurrence_from_amps(state.amps, state.shape))


def concurrence_from_amps(amps, shape: BipartiteShape = QUBITS) -> np.ndarray:
    _require_qubits(shape)
    m = _as_matrix(amps, shape)
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    return np.clip(2.0 * np.abs(det), 0.0, 1.0)


def overlap(a: StateVector, b: StateVector) -> float:
    """|<a|b>|."""
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(abs(np.vdot(a.amps, b.amps)))



def psi_x_partner(x0: float, overlap_target: float) -> float:
    """x with |<Psi_x0|Psi_x>| = ``overlap_target``, preferring x below x0.

    The overlap (1 + x x0) / sqrt((1 + x^2)(1 + x0^2)) is monotone on each
    side of x0, so a bracketing root search on [0, x0] (else [x0, 1]) is safe.
    """
    def gap(x):
        return (1 + x * x0) / np.sqrt((1 + x * x) * (1 + x0 * x0)) - overlap_target

    if overlap_target == 1:
        return float(x0)
    if x0 > 0 and gap(0.0) < 0:
        return float(brentq(gap, 0.0, x0, xtol=1e-15))
    if x0 < 1 and gap(1.0) < 0:
        return float(brentq(gap, x0, 1.0, xtol=1e-15))
    raise DomainError(f"no member of the family has overlap {overlap_target} with Psi_{x0}")
