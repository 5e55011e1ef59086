"""Nonlinear Schroedinger dynamics on a bipartite product basis.

The generator is

    i d/dt psi = (H_A x 1 + 1 x H_B) psi + K(psi),
    K(psi)_jk  = f_jk(|<psi|A_jk|jk>|) * alpha_jk,

with K singling out the product basis.  Time is integrated with fixed-step
classic RK4; the built-in Gross-Pitaevskii and logarithmic nonlinearities run
in a compiled kernel, anything else goes through a numpy loop.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numba
import numpy as np

from .errors import DivergenceError, NumericError, PreconditionError, ShapeError
from .hilbert import BipartiteShape, StateVector, hermitian

DEFAULT_DT = 1e-3
DEFAULT_SAMPLE_EVERY = 100
LOG_CLAMP = 1e-15

GROSS_PITAEVSKII = "gross_pitaevskii"
LOGARITHMIC = "logarithmic"
CUSTOM = "custom"
_KIND_CODES = {GROSS_PITAEVSKII: 0, LOGARITHMIC: 1}


# -- system description -----------------------------------------------------

@dataclass(frozen=True)
class HamiltonianPair:
    """Local Hamiltonians; the global one is always H_A x 1 + 1 x H_B."""

    h_a: np.ndarray = field(repr=False)
    h_b: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "h_a", hermitian(self.h_a, "h_a"))
        object.__setattr__(self, "h_b", hermitian(self.h_b, "h_b"))

    @classmethod
    def zeros(cls, shape: BipartiteShape) -> "HamiltonianPair":
        return cls(np.zeros((shape.dim_a,) * 2), np.zeros((shape.dim_b,) * 2))

    @property
    def shape(self) -> BipartiteShape:
        return BipartiteShape(self.h_a.shape[0], self.h_b.shape[0])

    def global_matrix(self) -> np.ndarray:
        return (np.kron(self.h_a, np.eye(self.h_b.shape[0]))
                + np.kron(np.eye(self.h_a.shape[0]), self.h_b))

    def is_diagonal(self) -> bool:
        return _is_diag(self.h_a) and _is_diag(self.h_b)

    def with_h_a(self, h_a) -> "HamiltonianPair":
        return HamiltonianPair(h_a, self.h_b)

    def shifted(self, energy: float) -> "HamiltonianPair":
        """Add ``energy`` times the identity (applied on the A factor)."""
        return HamiltonianPair(self.h_a + energy * np.eye(self.h_a.shape[0]), self.h_b)

    def __eq__(self, other):
        if not isinstance(other, HamiltonianPair):
            return NotImplemented
        return np.array_equal(self.h_a, other.h_a) and np.array_equal(self.h_b, other.h_b)

    __hash__ = None


def _is_diag(m) -> bool:
    return not np.any(m - np.diag(np.diag(m)))


@dataclass(frozen=True)
class QubitParams:
    """Two-qubit parametrisation

        H_A = [[a1, c], [conj(c), a2]],   H_B = [[b1, d], [conj(d), b2]]

    plus the Gross-Pitaevskii coupling ``g``.
    """

    a1: float = 0.0
    a2: float = 0.0
    b1: float = 0.0
    b2: float = 0.0
    c: complex = 0.0
    d: complex = 0.0
    g: float = 0.0

    def hamiltonians(self) -> HamiltonianPair:
        c, d = complex(self.c), complex(self.d)
        h_a = np.array([[self.a1, c], [c.conjugate(), self.a2]], dtype=complex)
        h_b = np.array([[self.b1, d], [d.conjugate(), self.b2]], dtype=complex)
        return HamiltonianPair(h_a, h_b)

    def nonlinearity(self) -> "Nonlinearity":
        return Nonlinearity.gross_pitaevskii(self.g)

    def replace(self, **changes) -> "QubitParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class Nonlinearity:
    """Self-potential specification.

    Use the constructors :meth:`gross_pitaevskii`, :meth:`logarithmic` and
    :meth:`custom`.  For ``custom`` either pass one vectorised callable used
    for every basis element or a sequence with one scalar callable per flat
    index.  ``operators`` (optional, one Hermitian matrix per flat index on
    the full product space) replaces the amplitude modulus |alpha_jk| by
    |<psi|A_jk|jk>|.
    """

    kind: str
    g: float = 0.0
    funcs: Callable | Sequence[Callable] | None = None
    operators: tuple | None = field(default=None, repr=False)

    @classmethod
    def gross_pitaevskii(cls, g: float) -> "Nonlinearity":
        return cls(GROSS_PITAEVSKII, float(g))

    @classmethod
    def logarithmic(cls, g: float) -> "Nonlinearity":
        return cls(LOGARITHMIC, float(g))

    @classmethod
    def custom(cls, funcs, operators=None) -> "Nonlinearity":
        if operators is not None:
            operators = tuple(hermitian(a, f"operators[{i}]") for i, a in enumerate(operators))
        return cls(CUSTOM, 0.0, funcs, operators)

    def __post_init__(self):
        if self.kind not in (GROSS_PITAEVSKII, LOGARITHMIC, CUSTOM):
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if self.kind == CUSTOM and self.funcs is None:
            raise ValueError("custom nonlinearity needs funcs")

    @property
    def is_linear(self) -> bool:
        return self.kind != CUSTOM and self.g == 0.0

    @property
    def has_identity_operators(self) -> bool:
        return self.operators is None

    def arguments(self, amps, shape: BipartiteShape) -> np.ndarray:
        """Moduli fed to f_jk: |<psi|A_jk|jk>|, or |alpha_jk| for A_jk = 1."""
        if self.operators is None:
            return np.abs(amps)
        if len(self.operators) != shape.total:
            raise ShapeError(f"need {shape.total} operators, got {len(self.operators)}")
        return np.array([abs(np.dot(a[n], amps)) for n, a in enumerate(self.operators)])

    def values(self, x, shape: BipartiteShape) -> np.ndarray:
        """f_jk evaluated at the moduli ``x`` (one per flat index)."""
        x = np.asarray(x, dtype=float)
        if self.kind == GROSS_PITAEVSKII:
            out = self.g * x * x
        elif self.kind == LOGARITHMIC:
            out = self.g * np.log(np.maximum(x, LOG_CLAMP))
        elif callable(self.funcs):
            out = np.broadcast_to(np.asarray(self.funcs(x), dtype=float), x.shape)
        else:
            if len(self.funcs) != shape.total:
                raise ShapeError(f"need {shape.total} functions, got {len(self.funcs)}")
            out = np.array([float(f(v)) for f, v in zip(self.funcs, x)])
        bad = np.flatnonzero(~np.isfinite(out))
        if bad.size:
            n = int(bad[0])
            raise NumericError(
                f"nonlinearity returned {out[n]!r} at basis index {n} "
                f"(|jk> = {shape.labels(n)}, argument {x[n]!r})",
                index=shape.labels(n),
            )
        return out


# -- generator --------------------------------------------------------------

def _check_dims(shape: BipartiteShape, h: HamiltonianPair | None):
    if h is not None and h.shape != shape:
        raise ShapeError(f"Hamiltonian dims {h.shape} do not match state dims {shape}")


def _potential(amps, nl: Nonlinearity, shape):
    return nl.values(nl.arguments(amps, shape), shape) * amps


def self_potential(state: StateVector, nl: Nonlinearity) -> np.ndarray:
    """K(psi): component |jk> is f_jk(|<psi|A_jk|jk>|) alpha_jk."""
    return _potential(state.amps, nl, state.shape)


def rhs(state: StateVector, h: HamiltonianPair, nl: Nonlinearity) -> np.ndarray:
    """d psi/dt = -i [H psi + K(psi)]."""
    _check_dims(state.shape, h)
    return -1j * (h.global_matrix() @ state.amps + self_potential(state, nl))


# -- integration ------------------------------------------------------------

@dataclass(frozen=True)
class TimeGrid:
    """Fixed-step schedule: ``n_steps = round(t_end / dt)``, a sample every
    ``sample_every`` steps and always one at the final step."""

    t_end: float
    dt: float = DEFAULT_DT
    sample_every: int = DEFAULT_SAMPLE_EVERY

    def __post_init__(self):
        if not self.dt > 0 or not math.isfinite(self.dt):
            raise PreconditionError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise PreconditionError(f"t_end must be non-negative, got {self.t_end}")
        if int(self.sample_every) != self.sample_every or self.sample_every < 1:
            raise PreconditionError(f"sample_every must be a positive integer, got {self.sample_every}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def sample_steps(self) -> np.ndarray:
        steps = np.arange(0, self.n_steps + 1, int(self.sample_every))
        if steps[-1] != self.n_steps:
            steps = np.append(steps, self.n_steps)
        return steps

    @property
    def times(self) -> np.ndarray:
        return self.sample_steps * self.dt


@dataclass(frozen=True)
class Trajectory:
    shape: BipartiteShape
    times: np.ndarray = field(repr=False)
    amps: np.ndarray = field(repr=False)  # (n_samples, dim_a * dim_b)

    def __len__(self):
        return len(self.times)

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.amps, axis=1)

    def max_norm_drift(self) -> float:
        return float(np.max(np.abs(self.norms() - 1.0)))

    def renormalized(self) -> "Trajectory":
        return Trajectory(self.shape, self.times, self.amps / self.norms()[:, None])

    def state(self, i: int) -> StateVector:
        """Sample ``i`` as a StateVector (renormalized to absorb integration drift)."""
        a = self.amps[i]
        return StateVector(self.shape, a / np.linalg.norm(a))

    @property
    def final(self) -> StateVector:
        return self.state(-1)


@numba.njit(cache=True, nogil=True)
def _deriv(y, H, kind, g, out):
    n = y.shape[0]
    for i in range(n):
        acc = 0j
        for j in range(n):
            acc += H[i, j] * y[j]
        r = abs(y[i])
        if kind == 0:
            f = g * r * r
        else:
            f = g * math.log(max(r, 1e-15))
        acc += f * y[i]
        out[i] = complex(acc.imag, -acc.real)  # -1j * acc


@numba.njit(cache=True, nogil=True)
def _rk4_kernel(y0, H, kind, g, dt, sample_steps, out):
    """Fixed-step RK4; returns the failing step index or -1."""
    n = y0.shape[0]
    y = y0.copy()
    k1 = np.empty(n, np.complex128)
    k2 = np.empty(n, np.complex128)
    k3 = np.empty(n, np.complex128)
    k4 = np.empty(n, np.complex128)
    tmp = np.empty(n, np.complex128)
    out[0, :] = y
    slot = 1
    n_steps = sample_steps[-1]
    h2 = 0.5 * dt
    h6 = dt / 6.0
    for step in range(1, n_steps + 1):
        _deriv(y, H, kind, g, k1)
        for i in range(n):
            tmp[i] = y[i] + h2 * k1[i]
        _deriv(tmp, H, kind, g, k2)
        for i in range(n):
            tmp[i] = y[i] + h2 * k2[i]
        _deriv(tmp, H, kind, g, k3)
        for i in range(n):
            tmp[i] = y[i] + dt * k3[i]
        _deriv(tmp, H, kind, g, k4)
        ok = True
        for i in range(n):
            y[i] = y[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not (math.isfinite(y[i].real) and math.isfinite(y[i].imag)):
                ok = False
        if not ok:
            return step
        if slot < sample_steps.shape[0] and step == sample_steps[slot]:
            out[slot, :] = y
            slot += 1
    return -1


def _rk4_numpy(y0, H, nl, shape, dt, sample_steps, out, energy_shift):
    def f(t, y):
        hy = H @ y
        if energy_shift is not None:
            hy = hy - energy_shift(t) * y
        return -1j * (hy + _potential(y, nl, shape))

    y = y0.copy()
    out[0] = y
    slot = 1
    for step in range(1, int(sample_steps[-1]) + 1):
        t = (step - 1) * dt
        k1 = f(t, y)
        k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = f(t + dt, y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            return step
        if slot < len(sample_steps) and step == sample_steps[slot]:
            out[slot] = y
            slot += 1
    return -1


def integrate(
    psi0: StateVector,
    h: HamiltonianPair,
    nl: Nonlinearity,
    t_end: float,
    dt: float = DEFAULT_DT,
    sample_every: int = DEFAULT_SAMPLE_EVERY,
    *,
    energy_shift: Callable[[float], float] | None = None,
    backend: str = "auto",
) -> Trajectory:
    """Integrate from ``psi0`` over [0, t_end] with classic RK4.

    No renormalization happens inside the stepper, so ``Trajectory.norms``
    measures the integration error.  ``energy_shift(t)`` is subtracted from
    the Hamiltonian as a multiple of the identity (used for gauge checks).
    ``backend`` is ``"auto"``, ``"compiled"`` or ``"numpy"``.

    Raises
    ------
    DivergenceError
        On the first step that produces a non-finite amplitude; the partial
        trajectory up to the last stored sample is attached.
    """
    _check_dims(psi0.shape, h)
    grid = TimeGrid(t_end, dt, sample_every)
    steps = grid.sample_steps
    out = np.zeros((len(steps), psi0.shape.total), dtype=np.complex128)
    H = np.ascontiguousarray(h.global_matrix(), dtype=np.complex128)
    compiled_ok = nl.kind in _KIND_CODES and energy_shift is None
    if backend == "compiled" and not compiled_ok:
        raise ValueError("compiled backend only supports built-in nonlinearities without energy shifts")
    if backend not in ("auto", "compiled", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    y0 = np.array(psi0.amps, dtype=np.complex128)
    if compiled_ok and backend != "numpy":
        bad = _rk4_kernel(y0, H, _KIND_CODES[nl.kind], float(nl.g), float(dt), steps, out)
    else:
        bad = _rk4_numpy(y0, H, nl, psi0.shape, float(dt), steps, out, energy_shift)
    times = steps * dt
    if bad >= 0:
        kept = int(np.searchsorted(steps, bad))
        partial = Trajectory(psi0.shape, times[:kept], out[:kept])
        raise DivergenceError(f"non-finite amplitude at step {bad} (t = {bad * dt:g})", bad, partial)
    return Trajectory(psi0.shape, times, out)


# -- closed forms and symmetries -------------------------------------------

def _diagonal_energies(h: HamiltonianPair) -> np.ndarray:
    if not h.is_diagonal():
        raise PreconditionError("analytic evolution needs both local Hamiltonians diagonal")
    a = np.diag(h.h_a).real
    b = np.diag(h.h_b).real
    return (a[:, None] + b[None, :]).reshape(-1)


def analytic_diagonal_evolve(psi0: StateVector, h: HamiltonianPair, nl: Nonlinearity, t) -> StateVector | np.ndarray:
    """Exact solution for diagonal local Hamiltonians.

    Every amplitude keeps its modulus and rotates with frequency
    ``a_j + b_k + f_jk(|alpha_jk(0)|)``.  Scalar ``t`` returns a
    StateVector; an array of times returns the ``(len(t), N)`` amplitude
    array.
    """
    _check_dims(psi0.shape, h)
    if not nl.has_identity_operators:
        raise PreconditionError("analytic evolution needs identity operators A_jk")
    energies = _diagonal_energies(h)
    freq = energies + nl.values(np.abs(psi0.amps), psi0.shape)
    t_arr = np.asarray(t, dtype=float)
    amps = psi0.amps * np.exp(-1j * np.multiply.outer(t_arr, freq))
    if t_arr.ndim == 0:
        return StateVector(psi0.shape, amps)
    return amps


def gauge_transform(traj: Trajectory, lam: Callable[[np.ndarray], np.ndarray]) -> Trajectory:
    """Multiply each sample by exp(i lam(t))."""
    phase = np.exp(1j * np.asarray(lam(traj.times), dtype=float) * np.ones_like(traj.times))
    return Trajectory(traj.shape, traj.times, traj.amps * phase[:, None])


def gauge_deviation(
    psi0: StateVector,
    h: HamiltonianPair,
    nl: Nonlinearity,
    lam: Callable,
    dlam: Callable,
    t_end: float,
    dt: float = DEFAULT_DT,
    sample_every: int = DEFAULT_SAMPLE_EVERY,
) -> float:
    """Max amplitude difference between exp(i lam) psi(t) and the evolution
    under H - lam'(t) 1 started from exp(i lam(0)) psi0."""
    base = integrate(psi0, h, nl, t_end, dt, sample_every, backend="numpy")
    start = StateVector(psi0.shape, psi0.amps * np.exp(1j * float(lam(0.0))))
    shifted = integrate(start, h, nl, t_end, dt, sample_every, energy_shift=dlam)
    return float(np.max(np.abs(gauge_transform(base, lam).amps - shifted.amps)))
