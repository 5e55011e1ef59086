"""Projective measurement branching and the three signalling protocols.

Alice acts on her factor at t0 = 0; Bob's effective state is the
probability-weighted average of the reduced states of independently evolved
branches.  Measuring at a later t0 is the same as measuring at 0 with the
source replaced by psi(t0), so nothing is lost by fixing t0.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DEFAULT_DT, DEFAULT_SAMPLE_EVERY, HamiltonianPair, Nonlinearity, TimeGrid, integrate
from .errors import DivergenceError, PreconditionError, ShapeError, ValidationError
from .hilbert import StateVector, bloch_vector, reduced_b

PROJECTOR_TOL = 1e-12
PRUNE_BELOW = 1e-12


def projector(vector) -> np.ndarray:
    """Rank-one projector |v><v| for a (not necessarily normalized) vector."""
    v = np.asarray(vector, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    p = np.outer(v, v.conj())
    return 0.5 * (p + p.conj().T)


def phi_eps(eps: float) -> np.ndarray:
    """sqrt(1 - eps^2)|0> + eps|1>."""
    return np.array([np.sqrt(1 - eps**2), eps], dtype=complex)


KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)
P0 = projector(KET_0)
PPLUS = projector(KET_PLUS)


def validate_projector(p, tol=PROJECTOR_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=complex)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ShapeError(f"projector must be square, got shape {p.shape}")
    if np.max(np.abs(p - p.conj().T)) > tol:
        raise ValidationError("projector is not Hermitian")
    if np.max(np.abs(p @ p - p)) > tol:
        raise ValidationError("projector is not idempotent")
    return p


@dataclass(frozen=True)
class BranchEnsemble:
    """Weighted post-measurement pure states; weights sum to one."""

    branches: tuple = field()

    def __post_init__(self):
        kept = tuple((float(w), s) for w, s in self.branches if w >= PRUNE_BELOW)
        if not kept:
            raise ValidationError("ensemble has no branch with positive weight")
        total = sum(w for w, _ in kept)
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"branch weights sum to {total!r}")
        shapes = {s.shape for _, s in kept}
        if len(shapes) != 1:
            raise ShapeError("branches must share one shape")
        object.__setattr__(self, "branches", kept)

    @classmethod
    def pure(cls, state: StateVector) -> "BranchEnsemble":
        return cls(((1.0, state),))

    @property
    def shape(self):
        return self.branches[0][1].shape

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.branches])

    def __len__(self):
        return len(self.branches)

    def __iter__(self):
        return iter(self.branches)


def _apply_on_a(op, state: StateVector) -> np.ndarray:
    return (op @ state.matrix).reshape(-1)


def measure_on_a(state: StateVector, x) -> BranchEnsemble:
    """Von Neumann update for the two-outcome measurement {X, 1 - X} on A.

    Outcome 1 has probability <psi|X x 1|psi> and leaves (X x 1)psi
    normalized; outcome 0 is the complement.  Outcomes with probability
    below 1e-12 are dropped.
    """
    x = validate_projector(x)
    if x.shape[0] != state.shape.dim_a:
        raise ShapeError(f"projector acts on dimension {x.shape[0]}, H_A has {state.shape.dim_a}")
    return _branch(state, [x, np.eye(x.shape[0]) - x])


def measure_observable_on_a(state: StateVector, observable) -> BranchEnsemble:
    """Measurement of a Hermitian observable M = sum_r m_r P^r on A.

    Eigenvalues closer than 1e-9 are merged into one spectral projector.
    """
    m = np.asarray(observable, dtype=complex)
    if m.shape != (state.shape.dim_a,) * 2:
        raise ShapeError(f"observable must be {state.shape.dim_a}x{state.shape.dim_a}")
    if np.max(np.abs(m - m.conj().T)) > PROJECTOR_TOL:
        raise ValidationError("observable is not Hermitian")
    return _branch(state, spectral_projectors(m))


def spectral_projectors(m, tol=1e-9) -> list[np.ndarray]:
    vals, vecs = np.linalg.eigh(m)
    projs, start = [], 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or vals[i] - vals[start] > tol:
            v = vecs[:, start:i]
            projs.append(v @ v.conj().T)
            start = i
    return projs


def _branch(state: StateVector, projs) -> BranchEnsemble:
    branches = []
    for p in projs:
        v = _apply_on_a(p, state)
        prob = float(np.vdot(v, v).real)
        if prob >= PRUNE_BELOW:
            branches.append((prob, StateVector(state.shape, v / np.sqrt(prob))))
    total = sum(w for w, _ in branches)
    return BranchEnsemble(tuple((w / total, s) for w, s in branches))


@dataclass(frozen=True)
class ReducedSeries:
    """Bob's effective reduced state sampled on a time grid."""

    times: np.ndarray = field(repr=False)
    rhos: np.ndarray = field(repr=False)  # (n_samples, dim_b, dim_b)

    @property
    def blochs(self) -> np.ndarray:
        """(n_samples, 3) Bloch vectors; qubit B only."""
        return bloch_vector(self.rhos)

    @property
    def diagonals(self) -> np.ndarray:
        return np.einsum("tkk->tk", self.rhos).real

    def expectation(self, observable) -> np.ndarray:
        return np.einsum("ij,tji->t", np.asarray(observable), self.rhos).real

    def __len__(self):
        return len(self.times)


def evolve_ensemble(
    ens: BranchEnsemble,
    h: HamiltonianPair,
    nl: Nonlinearity,
    grid: TimeGrid,
) -> ReducedSeries:
    """rho_B(t) = sum_x p_x Tr_A |xi_x(t)><xi_x(t)|, weights frozen at t0 = 0."""
    rho = None
    for i, (w, s) in enumerate(ens):
        try:
            traj = integrate(s, h, nl, grid.t_end, grid.dt, grid.sample_every)
        except DivergenceError as err:
            err.branch = i
            raise
        part = w * reduced_b(traj.amps, s.shape)
        rho = part if rho is None else rho + part
    return ReducedSeries(grid.times, rho)


def evolve_state(state: StateVector, h, nl, grid: TimeGrid) -> ReducedSeries:
    return evolve_ensemble(BranchEnsemble.pure(state), h, nl, grid)


def _as_grid(t_grid) -> TimeGrid:
    if isinstance(t_grid, TimeGrid):
        return t_grid
    if isinstance(t_grid, (int, float)):
        return TimeGrid(float(t_grid), DEFAULT_DT, DEFAULT_SAMPLE_EVERY)
    return TimeGrid(*t_grid)


def protocol_observable_choice(source: StateVector, x, x_prime, h, nl, t_grid):
    """Bob's series when Alice measures X versus X' at t0 = 0."""
    x = validate_projector(x)
    x_prime = validate_projector(x_prime)
    if np.max(np.abs(x @ x_prime - x_prime @ x)) < PROJECTOR_TOL:
        warnings.warn("X and X' commute; the observable-choice protocol is vacuous", stacklevel=2)
    grid = _as_grid(t_grid)
    return (evolve_ensemble(measure_on_a(source, x), h, nl, grid),
            evolve_ensemble(measure_on_a(source, x_prime), h, nl, grid))


def protocol_measure_or_not(source: StateVector, x, h, nl, t_grid):
    """(unmeasured evolution, evolution after measuring X at t0 = 0)."""
    grid = _as_grid(t_grid)
    return (evolve_state(source, h, nl, grid),
            evolve_ensemble(measure_on_a(source, x), h, nl, grid))


def protocol_intervention(source: StateVector, h: HamiltonianPair, h_prime: HamiltonianPair, nl, t_grid):
    """Bob's series under Alice's Hamiltonian H_A versus H_A'; no measurement."""
    if not np.array_equal(h.h_b, h_prime.h_b):
        raise PreconditionError("local intervention must leave Bob's Hamiltonian unchanged")
    grid = _as_grid(t_grid)
    return evolve_state(source, h, nl, grid), evolve_state(source, h_prime, nl, grid)


def _check_aligned(s1: ReducedSeries, s2: ReducedSeries):
    if s1.times.shape != s2.times.shape or not np.allclose(s1.times, s2.times, rtol=0, atol=1e-12):
        raise ShapeError("series are sampled on different time grids")


def distinguishability(s1: ReducedSeries, s2: ReducedSeries, observable=P0) -> np.ndarray:
    """|Tr(O rho_B(t)) - Tr(O rho_B'(t))| for a single observable O on B."""
    _check_aligned(s1, s2)
    return np.abs(s1.expectation(observable) - s2.expectation(observable))


def max_distinguishability(s1, s2, observable=P0) -> float:
    return float(np.max(distinguishability(s1, s2, observable)))


def trace_distance_series(s1: ReducedSeries, s2: ReducedSeries) -> np.ndarray:
    """(1/2) ||rho_B(t) - rho_B'(t)||_1, the best any Bob measurement can do."""
    _check_aligned(s1, s2)
    return 0.5 * np.abs(np.linalg.eigvalsh(s1.rhos - s2.rhos)).sum(axis=1)


def first_crossing(times, signal, threshold) -> float | None:
    idx = np.flatnonzero(np.asarray(signal) > threshold)
    return float(times[idx[0]]) if idx.size else None
