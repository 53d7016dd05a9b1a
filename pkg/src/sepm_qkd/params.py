"""Physical and protocol constants shared by the rate model and the sessions."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

from .errors import ParameterError

DARK_MODES = ("quadratic", "literal")


@dataclass(frozen=True)
class ProtocolParams:
    """Defaults are the 1550 nm fiber parameter set used for the rate curves.

    Attributes:
        gamma: local-oscillator amplitude (mean photon number gamma**2).
        eta_d: single-photon detector efficiency.
        p_dark: dark-count probability per detector per gate.
        e_d: phase-misalignment error fraction.
        f: error-correction inefficiency.
        beta_l: fiber loss in dB/km.
        dark_mode: ``"quadratic"`` counts dark coincidences as 4 p_dark**2;
            ``"literal"`` puts p_dark itself into the coincidence rate.
        include_bs_attack: charge the beam-splitting attack term in the rate.
    """

    gamma: float = 0.001
    eta_d: float = 0.145
    p_dark: float = 8e-8
    e_d: float = 0.015
    f: float = 1.2
    beta_l: float = 0.2
    dark_mode: str = "quadratic"
    include_bs_attack: bool = True

    def __post_init__(self):
        if self.gamma < 0:
            raise ParameterError("gamma must be non-negative")
        for name in ("eta_d", "p_dark", "e_d"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name}={v} outside [0, 1]")
        if self.f < 1.0:
            raise ParameterError(f"f={self.f} must be >= 1")
        if self.beta_l <= 0:
            raise ParameterError(f"beta_l={self.beta_l} must be > 0")
        if self.dark_mode not in DARK_MODES:
            raise ParameterError(f"dark_mode must be one of {DARK_MODES}, got {self.dark_mode!r}")

    @property
    def alpha_f(self) -> float:
        """Fiber absorption coefficient in 1/km."""
        return self.beta_l * math.log(10) / 10

    def replace(self, **changes) -> "ProtocolParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)
