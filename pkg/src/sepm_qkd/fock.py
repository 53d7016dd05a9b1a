"""State-vector simulation of few-photon optical circuits.

States are dense complex arrays of shape ``(cutoff + 1,) * mode_count``; the
flat (serialized) order is row-major over occupation tuples, so the last mode
varies fastest. Every operation returns a new :class:`FockState`.

Beam-splitter convention (used everywhere in the package): on modes ``(u, v)``
the creation operators map as

    u -> (c + i d) / sqrt(2),    v -> (i c + d) / sqrt(2),

where ``c`` is the output occupying the slot of ``u`` and ``d`` the slot of
``v``; the reflected port picks up the factor ``i``.

Amplitude that would need more than ``cutoff`` photons in a mode is dropped.
Circuits in this package are sized so that this never happens.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np

from .errors import ContractError, ParameterError

DEFAULT_CUTOFF = 2
NORM_TOL = 1e-9

ClickPattern = tuple  # tuple[bool, ...], one flag per monitored mode


@dataclass(frozen=True)
class FockState:
    """Pure multimode state in a truncated photon-number basis."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim == 0:
            raise ParameterError("a FockState needs at least one mode")
        dims = set(amps.shape)
        if len(dims) != 1 or amps.shape[0] < 2:
            raise ParameterError(f"inconsistent mode dimensions {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, occupations: Sequence[int], cutoff: int = DEFAULT_CUTOFF) -> "FockState":
        """The number state ``|n_0, n_1, ...>``."""
        if cutoff < 1:
            raise ParameterError("cutoff must be >= 1")
        if any(n < 0 or n > cutoff for n in occupations):
            raise ParameterError(f"occupations {tuple(occupations)} exceed cutoff {cutoff}")
        amps = np.zeros((cutoff + 1,) * len(occupations), dtype=complex)
        amps[tuple(occupations)] = 1.0
        return cls(amps)

    @classmethod
    def vacuum(cls, mode_count: int = 1, cutoff: int = DEFAULT_CUTOFF) -> "FockState":
        return cls.basis((0,) * mode_count, cutoff)

    @classmethod
    def from_terms(cls, terms, mode_count: int, cutoff: int = DEFAULT_CUTOFF) -> "FockState":
        """Build from ``{occupation_tuple: amplitude}`` (no normalization)."""
        amps = np.zeros((cutoff + 1,) * mode_count, dtype=complex)
        for occ, amp in dict(terms).items():
            if len(occ) != mode_count or any(n < 0 or n > cutoff for n in occ):
                raise ParameterError(f"bad occupation tuple {occ}")
            amps[tuple(occ)] += amp
        return cls(amps)

    @property
    def mode_count(self) -> int:
        return self.amplitudes.ndim

    @property
    def cutoff(self) -> int:
        return self.amplitudes.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, occupations: Sequence[int]) -> complex:
        return complex(self.amplitudes[tuple(occupations)])

    def probability(self, occupations: Sequence[int]) -> float:
        return abs(self.amplitude(occupations)) ** 2

    def terms(self, atol: float = 0.0) -> dict:
        """Nonzero amplitudes keyed by occupation tuple."""
        idx = np.argwhere(np.abs(self.amplitudes) > atol)
        return {tuple(int(n) for n in k): complex(self.amplitudes[tuple(k)]) for k in idx}

    def to_json(self) -> str:
        flat = self.amplitudes.ravel(order="C")
        return json.dumps({
            "mode_count": self.mode_count,
            "cutoff": self.cutoff,
            "amplitudes": [[float(a.real), float(a.imag)] for a in flat],
        })

    @classmethod
    def from_json(cls, text: str) -> "FockState":
        data = json.loads(text)
        m, c = int(data["mode_count"]), int(data["cutoff"])
        flat = np.array([complex(re, im) for re, im in data["amplitudes"]])
        if flat.size != (c + 1) ** m:
            raise ParameterError("amplitude count does not match (cutoff+1)**mode_count")
        return cls(flat.reshape((c + 1,) * m))


def _check_mode(state: FockState, mode: int) -> None:
    if not 0 <= mode < state.mode_count:
        raise ParameterError(f"mode {mode} out of range for {state.mode_count} modes")


def normalize(state: FockState) -> FockState:
    n = state.norm()
    if n == 0.0:
        raise ContractError("cannot normalize the zero vector")
    return FockState(state.amplitudes / n)


def inner_product(a: FockState, b: FockState) -> complex:
    """<a|b>, antilinear in the first argument."""
    if a.amplitudes.shape != b.amplitudes.shape:
        raise ParameterError("states live in different spaces")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def tensor(a: FockState, b: FockState) -> FockState:
    if a.cutoff != b.cutoff:
        raise ParameterError(f"cutoff mismatch: {a.cutoff} vs {b.cutoff}")
    return FockState(np.multiply.outer(a.amplitudes, b.amplitudes))


def weak_coherent(gamma: float, phase: float = 0.0, cutoff: int = DEFAULT_CUTOFF,
                  literal: bool = False) -> FockState:
    """Single-mode coherent state ``|gamma e^{i phase}>`` truncated at ``cutoff``.

    By default the amplitudes ``gamma^n e^{i n phase} / sqrt(n!)`` are
    renormalized after truncation. With ``literal=True`` the unnormalized
    two-term form ``|0> + gamma e^{i phase} |1>`` is returned instead.
    """
    if gamma < 0:
        raise ParameterError("gamma must be non-negative")
    if cutoff < 1:
        raise ParameterError("cutoff must be >= 1")
    amps = np.zeros(cutoff + 1, dtype=complex)
    if literal:
        amps[0] = 1.0
        amps[1] = gamma * np.exp(1j * phase)
        return FockState(amps)
    for n in range(cutoff + 1):
        amps[n] = gamma ** n * np.exp(1j * n * phase) / math.sqrt(math.factorial(n))
    return FockState(amps / np.linalg.norm(amps))


def entangled_pair(theta: float = 0.0, cutoff: int = DEFAULT_CUTOFF) -> FockState:
    """One photon shared by two path modes: ``(e^{i theta}|1,0> + |0,1>)/sqrt(2)``."""
    s = 1 / math.sqrt(2)
    return FockState.from_terms({(1, 0): s * np.exp(1j * theta), (0, 1): s}, 2, cutoff)


@lru_cache(maxsize=64)
def _two_mode_transfer(m00: complex, m01: complex, m10: complex, m11: complex,
                       cutoff: int) -> np.ndarray:
    """Transfer tensor ``T[p, q, n, m]`` of a linear two-mode map.

    Input creation operators map as ``a_u -> m00 c + m10 d`` and
    ``a_v -> m01 c + m11 d``. Output terms beyond ``cutoff`` are dropped.
    """
    d = cutoff + 1
    t = np.zeros((d, d, d, d), dtype=complex)
    fact = [math.factorial(k) for k in range(2 * cutoff + 1)]
    for n, m in product(range(d), repeat=2):
        pref = 1 / math.sqrt(fact[n] * fact[m])
        for k in range(n + 1):
            for l in range(m + 1):
                p, q = k + l, (n - k) + (m - l)
                if p > cutoff or q > cutoff:
                    continue
                coeff = (math.comb(n, k) * math.comb(m, l)
                         * m00 ** k * m10 ** (n - k) * m01 ** l * m11 ** (m - l))
                t[p, q, n, m] += pref * coeff * math.sqrt(fact[p] * fact[q])
    t.setflags(write=False)
    return t


def apply_two_mode(state: FockState, mode_u: int, mode_v: int, matrix) -> FockState:
    """Apply the linear-optics map given by a 2x2 mode matrix to two modes."""
    _check_mode(state, mode_u)
    _check_mode(state, mode_v)
    if mode_u == mode_v:
        raise ParameterError("beam splitter needs two distinct modes")
    (m00, m01), (m10, m11) = np.asarray(matrix, dtype=complex)
    t = _two_mode_transfer(complex(m00), complex(m01), complex(m10), complex(m11), state.cutoff)
    out = np.tensordot(t, state.amplitudes, axes=([2, 3], [mode_u, mode_v]))
    # tensordot puts the two output axes first; move them back into place
    return FockState(np.moveaxis(out, [0, 1], [mode_u, mode_v]))


_BS_MATRIX = np.array([[1, 1j], [1j, 1]]) / math.sqrt(2)


def apply_beamsplitter(state: FockState, mode_u: int, mode_v: int) -> FockState:
    """50:50 beam splitter with the package-wide ``i``-on-reflection convention."""
    return apply_two_mode(state, mode_u, mode_v, _BS_MATRIX)


def loss_channel(state: FockState, mode: int, eta: float) -> FockState:
    """Purified loss: append an environment mode that receives the lost light.

    ``a -> sqrt(eta) a + sqrt(1 - eta) e`` with the new mode ``e`` appended last.
    """
    _check_mode(state, mode)
    if not 0.0 <= eta <= 1.0:
        raise ParameterError(f"transmittance {eta} outside [0, 1]")
    t, r = math.sqrt(eta), math.sqrt(1.0 - eta)
    env = FockState.vacuum(1, state.cutoff)
    return apply_two_mode(tensor(state, env), mode, state.mode_count, [[t, -r], [r, t]])


@dataclass(frozen=True)
class WaveDecomposition:
    """Coefficients of one mode on the wave basis ``|alpha>_w, |alpha+pi>_w``.

    For a multimode state ``plus`` and ``minus`` are the (unnormalized)
    amplitude arrays of the remaining modes; for a single mode they are
    scalars. ``residual`` is the squared norm carried by occupations >= 2.
    """

    plus: np.ndarray | complex
    minus: np.ndarray | complex
    residual: float
    alpha: float

    def reconstruct(self) -> tuple:
        """Back to the ``|0>, |1>`` components of the decomposed mode."""
        s = 1 / math.sqrt(2)
        zero = s * (self.plus + self.minus)
        one = s * np.exp(1j * self.alpha) * (self.plus - self.minus)
        return zero, one


def wave_state(alpha: float, cutoff: int = DEFAULT_CUTOFF) -> FockState:
    """``(|0> + e^{i alpha}|1>)/sqrt(2)``."""
    s = 1 / math.sqrt(2)
    return FockState.from_terms({(0,): s, (1,): s * np.exp(1j * alpha)}, 1, cutoff)


def wave_basis_decompose(state: FockState, mode: int, alpha: float) -> WaveDecomposition:
    _check_mode(state, mode)
    amps = np.moveaxis(state.amplitudes, mode, 0)
    s = 1 / math.sqrt(2)
    phase = np.exp(-1j * alpha)
    plus = s * (amps[0] + phase * amps[1])
    minus = s * (amps[0] - phase * amps[1])
    residual = float(np.sum(np.abs(amps[2:]) ** 2))
    if state.mode_count == 1:
        plus, minus = complex(plus), complex(minus)
    return WaveDecomposition(plus, minus, residual, alpha)


@dataclass(frozen=True)
class DetectorConfig:
    """Threshold detectors with finite efficiency and dark clicks."""

    monitored_modes: tuple = ()
    efficiency: float = 1.0
    dark_prob: float = 0.0

    def __post_init__(self):
        for name in ("efficiency", "dark_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name}={v} outside [0, 1]")
        object.__setattr__(self, "monitored_modes", tuple(int(m) for m in self.monitored_modes))


def photon_number_distribution(state: FockState, modes: Sequence[int]) -> np.ndarray:
    """Joint photon-number probabilities of ``modes`` (others traced out)."""
    for m in modes:
        _check_mode(state, m)
    probs = np.abs(state.amplitudes) ** 2
    others = tuple(m for m in range(state.mode_count) if m not in modes)
    marg = probs.sum(axis=others) if others else probs
    kept = sorted(modes)
    return np.transpose(marg, [kept.index(m) for m in modes])


def click_distribution(state: FockState, det: DetectorConfig) -> dict:
    """Probability of every click pattern on the monitored modes.

    Each detector sees its mode through an efficiency-``eta_d`` loss, clicks
    on one or more photons, and additionally fires on an independent dark
    count with probability ``p_dark``.
    """
    if abs(state.norm() - 1.0) > NORM_TOL:
        raise ContractError(f"state norm {state.norm():.3e} is not 1")
    modes = det.monitored_modes
    if not modes:
        raise ParameterError("no monitored modes")
    n = np.arange(state.cutoff + 1)
    silent = (1.0 - det.efficiency) ** n * (1.0 - det.dark_prob)
    response = np.stack([silent, 1.0 - silent], axis=1)  # [photons, click]
    table = photon_number_distribution(state, modes)
    for _ in modes:
        # contract the leading photon axis; the click axis lands at the end
        table = np.tensordot(table, response, axes=([0], [0]))
    return {tuple(bool(b) for b in pattern): float(table[pattern])
            for pattern in product((0, 1), repeat=len(modes))}
