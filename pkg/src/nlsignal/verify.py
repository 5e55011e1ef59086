"""Executable checks of the exact no-signalling and solvability statements.

Each ``check_*`` returns a :class:`PropertyReport`.  ``control=True`` runs the
same metric on a configuration where the statement's hypothesis is broken;
those reports are expected to fail and a passing control means the harness
is not sensitive enough.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .dynamics import (
    HamiltonianPair,
    Nonlinearity,
    QubitParams,
    TimeGrid,
    analytic_diagonal_evolve,
    gauge_deviation,
    integrate,
    self_potential,
)
from .hilbert import QUBITS, BipartiteShape, StateVector, bell_state, bloch_vector, random_state, reduced_a, reduced_b
from .protocols import (
    P0,
    PPLUS,
    evolve_ensemble,
    evolve_state,
    measure_observable_on_a,
    measure_on_a,
    projector,
    protocol_intervention,
    protocol_measure_or_not,
    protocol_observable_choice,
    trace_distance_series,
)

DIAG_BOUND = 2.0
OFFDIAG_RADIUS = 2.0

# Configurations quoted for the sharpness controls and the z = 0 plane run.
FIG4 = QubitParams(a1=0.1, c=0.1, d=0.3, g=2)
FIG9 = QubitParams(a1=1, a2=1, b2=1, b1=2, c=2, d=2, g=3)
FIG10 = QubitParams(a1=0.3, a2=0.1, b1=0.1, b2=0.1, c=0.4, d=0.1, g=1)
FIG12 = QubitParams(a1=1, a2=1, b1=2, b2=1, c=2, d=0, g=3)
W_STATE = StateVector.from_amplitudes([1, 1, 1, 0], normalize=True)


@dataclass
class PropertyReport:
    name: str
    max_violation: float
    tolerance: float
    passed: bool
    run_config: str
    control: bool = False

    @property
    def as_expected(self) -> bool:
        return self.passed != self.control

    def to_json(self) -> str:
        d = asdict(self)
        d["as_expected"] = self.as_expected
        return json.dumps(d, sort_keys=True)


def _report(name, violation, tol, config, control=False):
    violation = float(violation)
    return PropertyReport(name, violation, float(tol), bool(violation <= tol),
                          json.dumps(config, sort_keys=True), control)


def random_hermitian(rng, dim, diagonal=False, diag_bound=DIAG_BOUND, offdiag_radius=OFFDIAG_RADIUS):
    """Diagonal uniform in [-diag_bound, diag_bound]; off-diagonal uniform in
    the complex disc of radius ``offdiag_radius``."""
    m = np.diag(rng.uniform(-diag_bound, diag_bound, dim)).astype(complex)
    if not diagonal:
        for i in range(dim):
            for j in range(i + 1, dim):
                r = offdiag_radius * np.sqrt(rng.uniform())
                z = r * np.exp(2j * np.pi * rng.uniform())
                m[i, j], m[j, i] = z, np.conj(z)
    return m


def _seeds(seed, name):
    return np.random.default_rng([seed, sum(map(ord, name))])


def check_diagonal_closed_form(seed=0, n_configs=5, t_end=50.0, dt=1e-3, tol=1e-6, g_max=7.0, shape=QUBITS):
    """Integrator against the closed-form diagonal solution."""
    rng = _seeds(seed, "closed_form")
    worst = 0.0
    cases = [(HamiltonianPair.zeros(shape), 1.0, bell_state() if shape == QUBITS else random_state(rng, shape))]
    for _ in range(n_configs):
        h = HamiltonianPair(random_hermitian(rng, shape.dim_a, True), random_hermitian(rng, shape.dim_b, True))
        cases.append((h, rng.uniform(0, g_max), random_state(rng, shape)))
    for h, g, psi in cases:
        nl = Nonlinearity.gross_pitaevskii(g)
        traj = integrate(psi, h, nl, t_end, dt, 100)
        exact = analytic_diagonal_evolve(psi, h, nl, traj.times)
        worst = max(worst, np.max(np.abs(traj.amps - exact)))
    return _report("diagonal_closed_form", worst, tol,
                   dict(seed=seed, n_configs=n_configs, t_end=t_end, dt=dt))


def _diag_drift(rhos):
    d = np.einsum("tkk->tk", rhos).real
    return np.max(np.abs(d - d[0]))


def check_frozen_populations(seed=0, n_configs=5, t_end=50.0, dt=1e-3, tol=1e-6, control=False):
    """Diagonal of rho_B frozen when H_B is diagonal (and rho_A when H_A is)."""
    config = dict(seed=seed, n_configs=n_configs, t_end=t_end, dt=dt, control=control)
    if control:
        traj = integrate(W_STATE, FIG9.hamiltonians(), FIG9.nonlinearity(), t_end, dt, 100)
        config["params"] = asdict(FIG9)
        return _report("populations_control_nondiagonal_hb", _diag_drift(reduced_b(traj.amps, QUBITS)), tol,
                       _jsonable(config), control=True)
    rng = _seeds(seed, "populations")
    worst = 0.0
    for _ in range(n_configs):
        g = rng.uniform(0, 7)
        psi = random_state(rng, QUBITS)
        h = HamiltonianPair(random_hermitian(rng, 2), random_hermitian(rng, 2, True))
        traj = integrate(psi, h, Nonlinearity.gross_pitaevskii(g), t_end, dt, 100)
        worst = max(worst, _diag_drift(reduced_b(traj.amps, QUBITS)))
        h = HamiltonianPair(random_hermitian(rng, 2, True), random_hermitian(rng, 2))
        traj = integrate(psi, h, Nonlinearity.gross_pitaevskii(g), t_end, dt, 100)
        worst = max(worst, _diag_drift(reduced_a(traj.amps, QUBITS)))
    for a1 in (1.0, 2.0):
        p = FIG12.replace(a1=a1)
        traj = integrate(bell_state(), p.hamiltonians(), p.nonlinearity(), 100.0, dt, 100)
        n_z = bloch_vector(reduced_b(traj.amps, QUBITS))[:, 2]
        worst = max(worst, np.max(np.abs(n_z)))
    return _report("diagonal_populations_frozen", worst, tol, config)


def closed_form_rho_b(psi0: StateVector, h: HamiltonianPair, nl: Nonlinearity, times) -> np.ndarray:
    """Bob's reduced state for diagonal Hamiltonians written out entrywise:

    <k|rho_B|k'> = sum_j |a_jk||a_jk'| exp(-i[b_k - b_k' + f_jk - f_jk'] t + i(phi_jk - phi_jk')).

    Only Bob's energies enter; this is evaluated independently of
    :func:`analytic_diagonal_evolve`.
    """
    m = psi0.matrix
    mod, ph = np.abs(m), np.angle(m)
    f = nl.values(mod.reshape(-1), psi0.shape).reshape(m.shape)
    b = np.diag(h.h_b).real
    t = np.asarray(times, float)[:, None, None, None]
    # axes: t, j, k, k'
    w = mod[:, :, None] * mod[:, None, :]
    freq = b[None, :, None] - b[None, None, :] + f[:, :, None] - f[:, None, :]
    dphi = ph[:, :, None] - ph[:, None, :]
    return np.sum(w * np.exp(-1j * freq * t + 1j * dphi), axis=1)


def check_intervention_blind(seed=0, t_end=50.0, dt=1e-3, tol=1e-6, control=False, a1_values=(0.0, 1.0, 7.0), g=3.0):
    """Bob's state is blind to Alice's diagonal Hamiltonian when both are diagonal."""
    config = dict(seed=seed, t_end=t_end, dt=dt, control=control)
    grid = TimeGrid(t_end, dt, 100)
    if control:
        s1, s2 = protocol_intervention(bell_state(), FIG10.hamiltonians(),
                                       FIG10.replace(a1=0.2).hamiltonians(), FIG10.nonlinearity(), grid)
        config.update(params=asdict(FIG10), a1_prime=0.2)
        return _report("intervention_control_nondiagonal", np.max(np.abs(s1.rhos - s2.rhos)), tol,
                       _jsonable(config), control=True)
    rng = _seeds(seed, "intervention")
    nl = Nonlinearity.gross_pitaevskii(g)
    h_b = random_hermitian(rng, 2, True)
    a2 = rng.uniform(-DIAG_BOUND, DIAG_BOUND)
    config.update(a1_values=list(a1_values), g=g, h_b=np.diag(h_b).real.tolist(), a2=a2)
    worst = 0.0
    for psi in (bell_state(), W_STATE, random_state(rng, QUBITS)):
        series = [evolve_state(psi, HamiltonianPair(np.diag([a1, a2]), h_b), nl, grid) for a1 in a1_values]
        closed = closed_form_rho_b(psi, HamiltonianPair(np.diag([a1_values[0], a2]), h_b), nl, grid.times)
        for s in series:
            worst = max(worst, np.max(np.abs(s.rhos - series[0].rhos)), np.max(np.abs(s.rhos - closed)))
    return _report("diagonal_intervention_blind", worst, tol, config)


def check_measurement_blind(seed=0, n_configs=3, t_end=50.0, dt=1e-3, tol=1e-6, control=False):
    """Diagonal of rho_B unaffected by any measurement on A when H_B is diagonal."""
    config = dict(seed=seed, n_configs=n_configs, t_end=t_end, dt=dt, control=control)
    grid = TimeGrid(t_end, dt, 100)
    if control:
        s1, s2 = protocol_measure_or_not(W_STATE, P0, FIG9.hamiltonians(), FIG9.nonlinearity(), grid)
        config["params"] = asdict(FIG9)
        return _report("measurement_control_nondiagonal_hb",
                       np.max(np.abs(s1.diagonals - s2.diagonals)), tol, _jsonable(config), control=True)
    rng = _seeds(seed, "measurement")
    worst = 0.0
    for i in range(n_configs):
        psi = bell_state() if i == 0 else random_state(rng, QUBITS)
        h = HamiltonianPair(random_hermitian(rng, 2), random_hermitian(rng, 2, True))
        nl = Nonlinearity.gross_pitaevskii(rng.uniform(0, 7))
        ref = evolve_state(psi, h, nl, grid)
        ensembles = [measure_on_a(psi, P0), measure_observable_on_a(psi, random_hermitian(rng, 2)),
                     measure_observable_on_a(psi, np.eye(2))]
        for ens in ensembles:
            s = evolve_ensemble(ens, h, nl, grid)
            worst = max(worst, np.max(np.abs(s.diagonals - ref.diagonals)),
                        np.max(np.abs(s.diagonals - ref.diagonals[0])))
    return _report("measurement_blind_diagonal_hb", worst, tol, config)


def check_linear_limit(seed=0, n_cases=30, t_end=10.0, dt=1e-3, tol=1e-7):
    """g = 0: all three protocols leave rho_B untouched (trace distance bound,
    which dominates every single-observable signal)."""
    rng = _seeds(seed, "linear")
    nl = Nonlinearity.gross_pitaevskii(0.0)
    grid = TimeGrid(t_end, dt, 100)
    worst = 0.0
    for i in range(n_cases):
        psi = bell_state() if i == 0 else random_state(rng, QUBITS)
        h = HamiltonianPair(random_hermitian(rng, 2), random_hermitian(rng, 2))
        kind = i % 3
        if kind == 0:
            x = P0 if i == 0 else projector(rng.normal(size=2) + 1j * rng.normal(size=2))
            x2 = PPLUS if i == 0 else projector(rng.normal(size=2) + 1j * rng.normal(size=2))
            s1, s2 = protocol_observable_choice(psi, x, x2, h, nl, grid)
        elif kind == 1:
            x = projector(rng.normal(size=2) + 1j * rng.normal(size=2))
            s1, s2 = protocol_measure_or_not(psi, x, h, nl, grid)
        else:
            s1, s2 = protocol_intervention(psi, h, h.with_h_a(random_hermitian(rng, 2)), nl, grid)
        worst = max(worst, np.max(trace_distance_series(s1, s2)))
    return _report("linear_limit_no_signalling", worst, tol,
                   dict(seed=seed, n_cases=n_cases, t_end=t_end, dt=dt))


def check_norm(seed=0, n_configs=5, t_end=100.0, dt=1e-3, tol=1e-6, bound=3.0, g_max=7.0):
    rng = _seeds(seed, "norm")
    worst = 0.0
    for _ in range(n_configs):
        h = HamiltonianPair(random_hermitian(rng, 2, diag_bound=bound, offdiag_radius=bound),
                            random_hermitian(rng, 2, diag_bound=bound, offdiag_radius=bound))
        traj = integrate(random_state(rng, QUBITS), h, Nonlinearity.gross_pitaevskii(rng.uniform(0, g_max)),
                         t_end, dt, 100)
        worst = max(worst, traj.max_norm_drift())
    return _report("norm_conservation", worst, tol, dict(seed=seed, n_configs=n_configs, t_end=t_end, dt=dt))


def check_gauge(seed=0, t_end=5.0, dt=1e-3, tol=1e-8):
    """exp(i lam(t)) psi(t) solves the dynamics with H - lam'(t) 1."""
    rng = _seeds(seed, "gauge")
    h = HamiltonianPair(random_hermitian(rng, 2), random_hermitian(rng, 2))
    dev = gauge_deviation(random_state(rng, QUBITS), h, Nonlinearity.gross_pitaevskii(2.0),
                          lambda t: np.sin(t) + 0.5 * t, lambda t: np.cos(t) + 0.5, t_end, dt, 100)
    return _report("gauge_symmetry", dev, tol, dict(seed=seed, t_end=t_end, dt=dt, lam="sin(t) + t/2"))


def check_noncommutation(tol=1e-6):
    """Commutation of H_A x 1 with the self-potential.

    The two operators share an eigenbasis but do not commute, so this is run
    as a control: the reported gap |(H_A x 1)K(psi) - K((H_A x 1)psi)| must
    exceed the tolerance for a diagonal H_A and the state below.
    """
    h = HamiltonianPair(np.diag([0.5, 2.0]), np.zeros((2, 2)))
    nl = Nonlinearity.gross_pitaevskii(1.0)
    psi = StateVector.from_amplitudes([0.6, 0.0, 0.0, 0.8])
    hpsi = h.global_matrix() @ psi.amps
    hk = h.global_matrix() @ self_potential(psi, nl)
    kh = nl.values(np.abs(hpsi), QUBITS) * hpsi
    return _report("commutation_h_k", np.max(np.abs(hk - kh)), tol,
                   dict(state=[0.6, 0, 0, 0.8], h_a_diag=[0.5, 2.0], g=1.0), control=True)


def _jsonable(d):
    def conv(v):
        if isinstance(v, complex):
            return [v.real, v.imag]
        if isinstance(v, dict):
            return {k: conv(x) for k, x in v.items()}
        return v
    return conv(d)


def suite_checks(seed=0, tolerance_scale=1.0, include_controls=True, controls_only=False):
    """(name, zero-argument callable) pairs making up the suite."""
    sc = tolerance_scale
    checks = [
        ("norm_conservation", lambda: check_norm(seed, tol=1e-6 * sc)),
        ("diagonal_closed_form", lambda: check_diagonal_closed_form(seed, tol=1e-6 * sc)),
        ("diagonal_populations_frozen", lambda: check_frozen_populations(seed, tol=1e-6 * sc)),
        ("diagonal_intervention_blind", lambda: check_intervention_blind(seed, tol=1e-6 * sc)),
        ("measurement_blind_diagonal_hb", lambda: check_measurement_blind(seed, tol=1e-6 * sc)),
        ("linear_limit_no_signalling", lambda: check_linear_limit(seed, tol=1e-7 * sc)),
        ("gauge_symmetry", lambda: check_gauge(seed, tol=1e-8 * sc)),
    ]
    controls = [
        ("populations_control_nondiagonal_hb", lambda: check_frozen_populations(seed, control=True, tol=1e-6 * sc)),
        ("intervention_control_nondiagonal", lambda: check_intervention_blind(seed, control=True, tol=1e-6 * sc)),
        ("measurement_control_nondiagonal_hb", lambda: check_measurement_blind(seed, control=True, tol=1e-6 * sc)),
        ("commutation_h_k", lambda: check_noncommutation(tol=1e-6 * sc)),
    ]
    if controls_only:
        return controls
    return checks + controls if include_controls else checks


def run_suite(seed=0, tolerance_scale=1.0, include_controls=True, controls_only=False,
              jobs=1) -> list[PropertyReport]:
    """Run every check, then the controls, and return reports in that order.

    ``tolerance_scale`` multiplies every tolerance (a scale far below 1 forces
    failures; used to test exit codes).  Checks are independent and run on up
    to ``jobs`` threads; the report order does not depend on ``jobs``.
    """
    fns = [fn for _, fn in suite_checks(seed, tolerance_scale, include_controls, controls_only)]
    if jobs <= 1:
        return [fn() for fn in fns]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda fn: fn(), fns))


def suite_ok(reports) -> bool:
    return all(r.as_expected for r in reports)
