"""Nonlocal nonlinear Schroedinger dynamics on bipartite systems.

Submodules
----------
hilbert
    States, partial traces, Bloch vectors, concurrence.
dynamics
    Local Hamiltonians, nonlinear self-potentials, RK4 integration.
protocols
    Measurement branching and the three signalling protocols.
chaos
    Trajectory distances and finite-window Lyapunov fits.
verify
    Executable no-signalling checks with sharpness controls.
config, cli
    JSON experiments and the ``nlsignal`` command.
"""
from .chaos import DistanceSeries, LyapunovEstimate, estimate_lyapunov, state_sensitivity, parameter_sensitivity
from .dynamics import HamiltonianPair, Nonlinearity, QubitParams, TimeGrid, Trajectory, integrate
from .errors import NLSignalError
from .hilbert import QUBITS, BipartiteShape, StateVector, bell_state, concurrence, family_psi_x, partial_trace_b
from .protocols import (
    distinguishability,
    protocol_intervention,
    protocol_measure_or_not,
    protocol_observable_choice,
)

__version__ = "0.1.0"

__all__ = [
    "BipartiteShape", "StateVector", "QUBITS", "bell_state", "family_psi_x", "partial_trace_b", "concurrence",
    "HamiltonianPair", "QubitParams", "Nonlinearity", "TimeGrid", "Trajectory", "integrate",
    "protocol_observable_choice", "protocol_measure_or_not", "protocol_intervention", "distinguishability",
    "DistanceSeries", "LyapunovEstimate", "estimate_lyapunov", "state_sensitivity", "parameter_sensitivity",
    "NLSignalError",
]
