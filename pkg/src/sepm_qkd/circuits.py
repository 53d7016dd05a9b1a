"""First-principles optical circuits built from :mod:`sepm_qkd.fock`.

These construct the measurement and eavesdropping setups photon by photon
and serve as an independent check on the closed-form expressions in
:mod:`sepm_qkd.protocol` and :mod:`sepm_qkd.attacks`. Local oscillators use
the two-term ``|0> + gamma e^{i phi}|1>`` form, which is not normalized; the
returned probabilities are rescaled to that convention.
"""
from __future__ import annotations

import math

from .fock import (DetectorConfig, FockState, apply_beamsplitter, click_distribution,
                   entangled_pair, loss_channel, normalize, tensor, weak_coherent)

# modes: 0 A (-> A1), 1 B (-> B1), 2 E_A, 3 E_B, 4 LO_A (-> A2), 5 LO_B (-> B2)
_HOMODYNE_DETECTORS = (0, 4, 1, 5)


def homodyne_state(gamma: float, eta: float, alpha: float, beta: float,
                   theta: float = 0.0, cutoff: int = 2) -> FockState:
    """Distributed pair, per-arm loss, then interference with both oscillators."""
    state = entangled_pair(theta, cutoff)
    state = loss_channel(state, 0, eta)
    state = loss_channel(state, 1, eta)
    state = tensor(state, weak_coherent(gamma, alpha, cutoff, literal=True))
    state = tensor(state, weak_coherent(gamma, beta, cutoff, literal=True))
    state = apply_beamsplitter(state, 0, 4)
    return apply_beamsplitter(state, 1, 5)


def homodyne_coincidences(gamma: float, eta: float, alpha: float, beta: float,
                          theta: float = 0.0, efficiency: float = 1.0,
                          dark_prob: float = 0.0) -> dict:
    """``{(i, j): p}`` for exactly one click on each side, detector i at Alice, j at Bob."""
    raw = homodyne_state(gamma, eta, alpha, beta, theta)
    scale = raw.norm() ** 2  # (1 + gamma^2)^2 for the two-term oscillators
    clicks = click_distribution(normalize(raw),
                                DetectorConfig(_HOMODYNE_DETECTORS, efficiency, dark_prob))
    out = {}
    for i in (1, 2):
        for j in (1, 2):
            pattern = (i == 1, i == 2, j == 1, j == 2)
            out[(i, j)] = clicks[pattern] * scale
    return out


# modes: 0 A, 1 B, 2 E_A, 3 E_B, then oscillators 4 LO_A, 5 LO_B, 6 LO_EA, 7 LO_EB.
# After the beam splitters mode k is detector "k1" and mode k+4 detector "k2".

def bs_attack_circuit(gamma: float, eta: float, theta_a: float, theta_b: float,
                      theta_ea: float, theta_eb: float = 0.0, cutoff: int = 2) -> FockState:
    """Lossy pair with Eve holding the lost photon, all four ports interfered."""
    state = entangled_pair(0.0, cutoff)
    state = loss_channel(state, 0, eta)
    state = loss_channel(state, 1, eta)
    for phase in (theta_a, theta_b, theta_ea, theta_eb):
        state = tensor(state, weak_coherent(gamma, phase, cutoff, literal=True))
    for mode in range(4):
        state = apply_beamsplitter(state, mode, mode + 4)
    return state


def bs_three_fold_probability(gamma: float, eta: float, theta: float, eve_detector: int,
                              eve_phase: float = 0.0) -> float:
    """Probability of the three-photon event A1, B1 and E_A{eve_detector}.

    Only the configuration with exactly one photon in each of the three
    detectors and none elsewhere is counted: that is the leading
    (gamma**4) contribution, since each additional oscillator photon costs
    another factor gamma**2.
    """
    state = bs_attack_circuit(gamma, eta, theta, theta, eve_phase)
    occ = [0] * 8
    occ[0] = occ[1] = 1
    occ[2 if eve_detector == 1 else 6] = 1
    return state.probability(occ)
