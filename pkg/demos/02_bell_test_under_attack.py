"""
Bell test under a collective attack
===================================

Eve entangles an ancilla with each pair so that the sifted key shows error
rate e in both wave bases. The CHSH value of the shared state then falls
linearly, and security is lost once it reaches the classical bound of 2.
"""

import math

import numpy as np

from sepm_qkd.attacks import (bs_guess_probability, chsh_value, collective_attack_state,
                              holevo_collective, holevo_exact, tolerable_error_rate)

for e in (0.0, 0.05, 0.1, 0.146, 0.2):
    m = collective_attack_state(e)
    print(f"e={e:.3f}  QBER(Z)={m.qber(0.0):.3f}  QBER(Y)={m.qber(math.pi / 2):.3f}  "
          f"S={chsh_value(m):.4f}  chi1 bound={holevo_collective(e):.3f}  "
          f"exact Holevo={holevo_exact(m):.3f}")

print(f"S reaches 2 at e = {tolerable_error_rate():.4f}")

###############################################################################
# The beam-splitting attack is different: Eve keeps the light lost in the
# fiber and interferes it with her own oscillator. Her chance of guessing the
# key bit wrongly is furthest from 1/2 at intermediate transmittance.

for eta in np.linspace(0.0, 1.0, 11):
    print(f"eta={eta:.1f}  P(wrong guess)={bs_guess_probability(eta, 0.001):.4f}")
