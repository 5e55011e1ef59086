"""
Entangled two-qubit states and Bob's reduced state
==================================================

Build the Psi_x family, look at what Bob sees locally, and check how the
concurrence falls off as the state approaches a product state.
"""
import numpy as np

from nlsignal.hilbert import (
    bell_state,
    bloch_vector,
    concurrence,
    family_psi_x,
    overlap,
    partial_trace_b,
    psi_x_partner,
    separable_eps_state,
)

# The Bell state leaves Bob with the maximally mixed state: the centre of the ball.
rho = partial_trace_b(bell_state())
print("rho_B(Bell) =\n", rho.real)
print("Bloch vector:", bloch_vector(rho))

# Walking x from 0 to 1 moves Bob's Bloch vector up the z axis while the
# concurrence drops from 1 to 0.
print("\n   x    concurrence   n_z")
for x in np.linspace(0, 1, 6):
    psi = family_psi_x(x)
    n = bloch_vector(partial_trace_b(psi))
    print(f"{x:5.2f}  {concurrence(psi):10.6f}  {n[2]:8.5f}")

# Two nearby family members: find the partner of the Bell state at overlap 1 - 0.001.
x = psi_x_partner(0.0, 0.999)
print(f"\npartner of the Bell state at overlap 0.999: x = {x:.12f}")
print("check:", overlap(bell_state(), family_psi_x(x)))

# A product state and its eps-neighbour stay product states.
print("concurrence of the separable neighbour:", concurrence(separable_eps_state(0.001)))
