"""Round engine: settings, coincidence statistics, sifting and estimators.

Phases are drawn from ``PHASES``; a party's local oscillator phase is
``phi + k * pi``. Detector ordinals are 1 and 2 on each side. The shared
parity of a coincidence is ``(i + j + k_a + k_b) mod 2``: even means the
sifted bits agree after Bob's flip rule, and it is also the sign used for
the CHSH correlators.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping

import numpy as np

from .errors import EstimationError, ParameterError
from .params import ProtocolParams

PHASES = (-math.pi / 4, 0.0, math.pi / 4, math.pi / 2)
PHASE_LABELS = ("-pi/4", "0", "pi/4", "pi/2")
OUTCOMES = ((1, 1), (1, 2), (2, 1), (2, 2))

# (phi_a, phi_b, sign) terms of the CHSH combination
CHSH_TERMS = (
    (0.0, math.pi / 4, 1),
    (0.0, -math.pi / 4, 1),
    (math.pi / 2, math.pi / 4, 1),
    (math.pi / 2, -math.pi / 4, -1),
)


def phase_index(phi: float) -> int:
    for idx, p in enumerate(PHASES):
        if math.isclose(phi, p, abs_tol=1e-12):
            return idx
    raise ParameterError(f"phase {phi} is not one of {PHASE_LABELS}")


@dataclass(frozen=True)
class Settings:
    phi_a: float
    k_a: int
    phi_b: float
    k_b: int

    def __post_init__(self):
        phase_index(self.phi_a)
        phase_index(self.phi_b)
        if self.k_a not in (0, 1) or self.k_b not in (0, 1):
            raise ParameterError("key bits must be 0 or 1")

    @property
    def alpha(self) -> float:
        return self.phi_a + self.k_a * math.pi

    @property
    def beta(self) -> float:
        return self.phi_b + self.k_b * math.pi

    @classmethod
    def all(cls) -> list:
        """The 64 combinations of (phi_a, k_a, phi_b, k_b)."""
        return [cls(pa, ka, pb, kb) for pa, ka, pb, kb in product(PHASES, (0, 1), PHASES, (0, 1))]


class SiftClass(enum.IntEnum):
    KEPT = 0
    CHECK = 1
    CHSH = 2
    DISCARDED = 3


@dataclass(frozen=True)
class SiftDecision:
    """Outcome of sifting one round; bits are set only for key candidates."""

    kind: str  # "key", "chsh" or "discard"
    bit_a: int | None = None
    bit_b: int | None = None


@dataclass(frozen=True)
class RoundRecord:
    settings: Settings
    outcome: tuple | None  # (i, j), or None without a coincidence
    sift_result: SiftClass | None = None


def coincidence_distribution(gamma: float, eta: float, settings: Settings,
                             theta: float = 0.0, particle_term: bool = True) -> dict:
    """Coincidence probabilities ``p(A_i, B_j)`` for one pair of settings.

    Returns ``{"joint": {(i, j): p}, "conditional": {(i, j): p / sum}}``.
    ``theta`` is the phase of the distributed pair and shifts the fringe;
    ``particle_term=False`` drops the phase-insensitive gamma**4 background.
    """
    if not 0.0 <= eta <= 1.0:
        raise ParameterError(f"eta={eta} outside [0, 1]")
    g2 = gamma * gamma
    fringe = math.cos(settings.alpha - settings.beta - theta)
    background = g2 * g2 / 4 if particle_term else 0.0
    joint = {(i, j): g2 * eta / 4 * (1 + (-1) ** (i + j) * fringe) + background
             for i, j in OUTCOMES}
    total = sum(joint.values())
    conditional = {k: (v / total if total > 0 else 0.0) for k, v in joint.items()}
    return {"joint": joint, "conditional": conditional}


def visibility(gamma: float, eta: float) -> float:
    """Fringe visibility after the particle-like background: 1 / (1 + gamma^2/eta)."""
    g2 = gamma * gamma
    if eta == 0 and g2 == 0:
        raise EstimationError("visibility undefined for eta = gamma = 0")
    return eta / (eta + g2)


def parity(settings: Settings, outcome: tuple) -> int:
    i, j = outcome
    return (i + j + settings.k_a + settings.k_b) % 2


def sift(record: RoundRecord) -> SiftDecision:
    """Apply the sifting rule to one announced round.

    Matched phases with a coincidence give key candidates; when ``i + j`` is
    odd Bob flips his bit. Phase differences of pi/4 or 3pi/4 feed the Bell
    test. Everything else is discarded.
    """
    s = record.settings
    if record.outcome is None:
        return SiftDecision("discard")
    diff = abs(phase_index(s.phi_a) - phase_index(s.phi_b))
    if diff == 0:
        i, j = record.outcome
        bit_b = s.k_b ^ ((i + j) % 2)
        return SiftDecision("key", s.k_a, bit_b)
    if diff in (1, 3):
        return SiftDecision("chsh")
    return SiftDecision("discard")


def estimate_qber(check_bits: Iterable) -> float:
    """Disagreement fraction of ``(bit_a, bit_b)`` pairs (Bob's flip already applied)."""
    pairs = list(check_bits)
    if not pairs:
        raise EstimationError("no check bits")
    return sum(a != b for a, b in pairs) / len(pairs)


def _lookup(counts: Mapping, phi_a: float, phi_b: float):
    want = (phase_index(phi_a), phase_index(phi_b))
    for (pa, pb), value in counts.items():
        if (phase_index(pa), phase_index(pb)) == want:
            return value
    return None


def correlator(n_even: float, n_odd: float) -> float:
    total = n_even + n_odd
    if total <= 0:
        raise EstimationError("no coincidences for this setting pair")
    return (n_even - n_odd) / total


def chsh_from_counts(counts: Mapping) -> float:
    """Bell function from ``{(phi_a, phi_b): (n_even, n_odd)}``.

    Uses E(0, pi/4) + E(0, -pi/4) + E(pi/2, pi/4) - E(pi/2, -pi/4).
    Counts may be integers or probabilities.
    """
    s = 0.0
    for pa, pb, sign in CHSH_TERMS:
        value = _lookup(counts, pa, pb)
        if value is None:
            raise EstimationError(f"missing counts for ({pa:.4f}, {pb:.4f})")
        s += sign * correlator(*value)
    return s


def pair_label(phi_a: float, phi_b: float) -> str:
    return f"{PHASE_LABELS[phase_index(phi_a)]}|{PHASE_LABELS[phase_index(phi_b)]}"


@dataclass
class SessionStats:
    sifted_count: int | None
    qber: float
    chsh_S: float
    correlations: dict = field(default_factory=dict)  # (phi_a, phi_b) -> E

    def to_json(self, rounds: int | None = None, coincidences: int | None = None) -> str:
        return json.dumps({
            "rounds": rounds,
            "coincidences": coincidences,
            "sifted": self.sifted_count,
            "qber": self.qber,
            "S": self.chsh_S,
            "correlations": {pair_label(a, b): e for (a, b), e in self.correlations.items()},
        }, sort_keys=True)


def session_expectations(params: ProtocolParams, eta: float, theta: float = 0.0,
                         particle_term: bool = True) -> SessionStats:
    """Closed-form values of every session estimator at transmittance ``eta``.

    Built from the exact conditional coincidence table, so the particle-like
    background enters as E = cos(dphi) / (1 + gamma^2/eta).
    """
    gamma = params.gamma
    if eta == 0 and gamma == 0:
        raise EstimationError("no coincidences when eta = gamma = 0")
    even_odd = {}
    for pa, pb in product(PHASES, repeat=2):
        ne = no = 0.0
        for ka, kb in product((0, 1), repeat=2):
            s = Settings(pa, ka, pb, kb)
            for out, p in coincidence_distribution(gamma, eta, s, theta, particle_term)["joint"].items():
                if parity(s, out):
                    no += p
                else:
                    ne += p
        even_odd[(pa, pb)] = (ne, no)
    correlations = {k: correlator(*v) for k, v in even_odd.items()}
    err = sum(even_odd[(p, p)][1] for p in PHASES)
    tot = sum(sum(even_odd[(p, p)]) for p in PHASES)
    if tot <= 0:
        raise EstimationError("no coincidences for matched phases")
    return SessionStats(None, err / tot, chsh_from_counts(even_odd), correlations)
