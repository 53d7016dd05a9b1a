"""Simulation and analysis of phase-matching QKD with single-photon entanglement.

Modules:
    fock        few-photon state-vector simulation (beam splitters, loss, detectors)
    circuits    first-principles measurement and eavesdropping circuits
    protocol    settings, coincidence statistics, sifting, QBER and CHSH estimators
    attacks     collective and beam-splitting attack models
    keyrate     closed-form error rate, key-rate bound and distance sweeps
    montecarlo  seeded conditional-coincidence sessions
    cli         command-line interface
"""
from .errors import ContractError, DegenerateInputError, EstimationError, ParameterError
from .params import ProtocolParams

__version__ = "0.1.0"

__all__ = ["ProtocolParams", "ParameterError", "ContractError", "EstimationError",
           "DegenerateInputError"]
