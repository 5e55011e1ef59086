"""
Three ways Alice could signal
=============================

Alice's local choice (which observable to measure, whether to measure at all,
or how to set her local Hamiltonian) changes Bob's reduced state under the
nonlinear dynamics. With g = 0 the same protocols are silent.
"""
import numpy as np

from nlsignal.dynamics import QubitParams, TimeGrid
from nlsignal.hilbert import StateVector, bell_state
from nlsignal.protocols import (
    P0,
    PPLUS,
    distinguishability,
    first_crossing,
    protocol_intervention,
    protocol_measure_or_not,
    protocol_observable_choice,
    trace_distance_series,
)

grid = TimeGrid(100.0)
w_like = StateVector.from_amplitudes([1, 1, 1, 0], normalize=True)


def report(label, arm_a, arm_b):
    d = distinguishability(arm_a, arm_b, P0)
    td = trace_distance_series(arm_a, arm_b)
    t = first_crossing(arm_a.times, d, 0.02)
    print(f"{label:34s} max |d<P0>| = {d.max():.4f}   max trace distance = {td.max():.4f}   first > 0.02 at t = {t}")


# Alice measures |0><0| or |+><+| on a shared Bell pair.
p = QubitParams(a1=1, a2=1, b1=2, b2=1, c=1, d=2, g=3)
report("observable choice", *protocol_observable_choice(bell_state(), P0, PPLUS, p.hamiltonians(), p.nonlinearity(), grid))

# Alice measures |0><0| or leaves her qubit alone.
p = QubitParams(a1=1, a2=1, b1=2, b2=1, c=2, d=2, g=3)
report("measure or not", *protocol_measure_or_not(w_like, P0, p.hamiltonians(), p.nonlinearity(), grid))

# No measurement at all: Alice nudges a1 from 0.2 to 0.3.
p = QubitParams(a1=0.2, a2=0.1, b1=0.1, b2=0.1, c=0.4, d=0.1, g=1)
report("local intervention", *protocol_intervention(bell_state(), p.hamiltonians(), p.replace(a1=0.3).hamiltonians(),
                                                    p.nonlinearity(), grid))

# The linear limit: same intervention with g = 0 leaves Bob untouched.
lin = p.replace(g=0)
report("local intervention, g = 0", *protocol_intervention(bell_state(), lin.hamiltonians(),
                                                           lin.replace(a1=0.3).hamiltonians(), lin.nonlinearity(), grid))

# Diagonal local Hamiltonians also hide Alice's diagonal choice from Bob.
diag = QubitParams(a1=0.2, a2=0.1, b1=0.1, b2=0.7, g=3)
report("intervention, both diagonal", *protocol_intervention(bell_state(), diag.hamiltonians(),
                                                             diag.replace(a1=2.0).hamiltonians(), diag.nonlinearity(), grid))
