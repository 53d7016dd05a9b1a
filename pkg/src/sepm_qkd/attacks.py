"""Eavesdropping models: collective attack in the ZY plane and beam splitting.

Two-level systems here use the photon-number basis ``{|0>, |1>}`` of each
path mode. The wave-space Z and Y bases are the eigenbases of
``cos(phi) sx + sin(phi) sy`` at phi = 0 and pi/2, so the protocol's phase
settings are angles in the Bloch-sphere xy plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ContractError, ParameterError
from .fock import FockState, entangled_pair, loss_channel
from .protocol import CHSH_TERMS

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)
# swaps the wave-space Z and Y axes (and inverts the photon-number axis)
H_ZY = (SX + SY) / math.sqrt(2)

_S = 1 / math.sqrt(2)
# Bell states written in the wave Z basis, expressed in photon-number components
PHI_MINUS_Z = np.array([0, _S, _S, 0], dtype=complex)  # the distributed pair itself
PHI_PLUS_Z = np.array([_S, 0, 0, _S], dtype=complex)


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def von_neumann_entropy(rho: np.ndarray) -> float:
    w = np.linalg.eigvalsh(rho)
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log2(w)))


def phase_observable(phi: float) -> np.ndarray:
    """+-1 observable measured by a party with oscillator phase ``phi``."""
    return math.cos(phi) * SX + math.sin(phi) * SY


@dataclass(frozen=True)
class CollectiveAttackModel:
    """Pure A-B-Eve state; Eve holds a symmetrization flag and a qubit.

    ``psi`` has shape ``(2, 2, 4)`` indexed by (A, B, Eve).
    """

    e: float
    psi: np.ndarray

    @property
    def rho_ab(self) -> np.ndarray:
        m = self.psi.reshape(4, -1)
        return m @ m.conj().T

    def qber(self, phi: float) -> float:
        """Error rate when both parties measure at the same phase ``phi``."""
        o = phase_observable(phi)
        corr = float(np.real(np.trace(self.rho_ab @ np.kron(o, o))))
        return (1 - corr) / 2

    def marginals(self, phi: float) -> tuple:
        o = phase_observable(phi)
        rho = self.rho_ab
        return (float(np.real(np.trace(rho @ np.kron(o, I2)))),
                float(np.real(np.trace(rho @ np.kron(I2, o)))))


def _eve_branch(e: float) -> np.ndarray:
    """sqrt(1-2e)|E0>|Phi->_z + sqrt(2e)|E1>|Phi+>_z as an (AB, Eve-qubit) matrix."""
    return np.stack([math.sqrt(1 - 2 * e) * PHI_MINUS_Z,
                     math.sqrt(2 * e) * PHI_PLUS_Z], axis=1)


def collective_attack_state(e: float, variant: str = "twirl") -> CollectiveAttackModel:
    """Eve's symmetric collective attack inducing error rate ``e``.

    ``variant="twirl"`` (default) reads the ``(I + H_A H_B)/2`` symmetrizer as
    an equal mixture of the identity and the Z<->Y swap, purified by a flag
    qubit held by Eve; this gives error rate ``e`` in both the Z and Y bases
    and S = 2 sqrt(2) (1 - 2e). ``variant="coherent"`` applies the operator
    to the pure state and renormalizes; it is kept for comparison only and
    yields error rate e / (2 (1 - e)).
    """
    if not 0.0 <= e <= 0.5:
        raise ParameterError(f"error rate {e} outside [0, 1/2]")
    branch = _eve_branch(e)  # (4, 2)
    hh = np.kron(H_ZY, H_ZY)
    if variant == "twirl":
        psi = np.concatenate([branch, hh @ branch], axis=1) * _S  # Eve = flag (x) qubit
    elif variant == "coherent":
        sym = 0.5 * (branch + hh @ branch)
        sym = sym / np.linalg.norm(sym)
        psi = np.concatenate([sym, np.zeros_like(sym)], axis=1)
    else:
        raise ParameterError(f"unknown variant {variant!r}")
    return CollectiveAttackModel(e, psi.reshape(2, 2, 4))


def _check_density_matrix(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ContractError(f"expected a 4x4 two-qubit density matrix, got {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=1e-10):
        raise ContractError("density matrix is not Hermitian")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ContractError("density matrix is not positive semidefinite")
    if abs(np.trace(rho) - 1) > 1e-10:
        raise ContractError("density matrix trace is not 1")
    return rho


def correlation(rho: np.ndarray, phi_a: float, phi_b: float) -> float:
    o = np.kron(phase_observable(phi_a), phase_observable(phi_b))
    return float(np.real(np.trace(rho @ o)))


def chsh_value(rho_ab, settings=CHSH_TERMS) -> float:
    """Bell function over ``(phi_a, phi_b, sign)`` terms (protocol pairs by default)."""
    if isinstance(rho_ab, CollectiveAttackModel):
        rho_ab = rho_ab.rho_ab
    rho = _check_density_matrix(rho_ab)
    return sum(sign * correlation(rho, a, b) for a, b, sign in settings)


def chsh_max_zy(rho_ab) -> float:
    """Largest Bell value reachable with measurement directions in the ZY plane.

    With T the 2x2 block of the correlation matrix for those directions, the
    optimum is 2 sqrt(s1^2 + s2^2) over its singular values.
    """
    if isinstance(rho_ab, CollectiveAttackModel):
        rho_ab = rho_ab.rho_ab
    rho = _check_density_matrix(rho_ab)
    paulis = (SX, SY)
    t = np.array([[np.real(np.trace(rho @ np.kron(p, q))) for q in paulis] for p in paulis])
    s = np.linalg.svd(t, compute_uv=False)
    return 2 * math.sqrt(s[0] ** 2 + s[1] ** 2)


def tolerable_error_rate() -> float:
    """Error rate at which the collective attack drives S down to the classical bound 2."""
    return brentq(lambda e: chsh_value(collective_attack_state(e)) - 2.0, 0.0, 0.5, xtol=1e-14)


def holevo_collective(e: float) -> float:
    """Eve's information charge per sifted bit under the collective attack: 2e."""
    if not 0.0 <= e <= 0.5:
        raise ParameterError(f"error rate {e} outside [0, 1/2]")
    return 2.0 * e


def eve_overlap(p_e: float) -> float:
    """Overlap <E_p|E_q> of Eve's probe states that produces bit error rate ``p_e``.

    Follows from 1 - <E_p|E_q> = 4 p_e; Eve's information is then
    (1 - <E_p|E_q>) / 2 = 2 p_e.
    """
    if not 0.0 <= p_e <= 0.25:
        raise ParameterError("p_e must lie in [0, 1/4]")
    return 1.0 - 4.0 * p_e


def holevo_exact(model: CollectiveAttackModel, phi: float = 0.0) -> float:
    """Holevo information between Alice's key bit (measured at ``phi``) and Eve.

    A diagnostic only: the rate formula charges :func:`holevo_collective`.
    """
    o = phase_observable(phi)
    _, vecs = np.linalg.eigh(o)
    psi = model.psi
    rho_e = np.einsum("abe,abf->ef", psi, psi.conj())
    chi = von_neumann_entropy(rho_e)
    for k in range(2):
        v = vecs[:, k]
        cond = np.einsum("a,abe->be", v.conj(), psi)
        rho = cond.T @ cond.conj()
        p = float(np.real(np.trace(rho)))
        if p > 1e-15:
            chi -= p * von_neumann_entropy(rho / p)
    return chi


# --- beam-splitting attack -------------------------------------------------

def _check_eta(eta: float) -> None:
    if not 0.0 <= eta <= 1.0:
        raise ParameterError(f"eta={eta} outside [0, 1]")


def bs_attack_state(eta: float, cutoff: int = 2) -> FockState:
    """Four-mode W state (A, B, E_A, E_B): the lossy pair with Eve keeping the loss."""
    _check_eta(eta)
    state = loss_channel(entangled_pair(0.0, cutoff), 0, eta)
    return loss_channel(state, 1, eta)


def bs_joint_probs(eta: float, gamma: float, theta: float, which_detector: int,
                   eve_phase: float = 0.0) -> float:
    """Leading-order probability of A1, B1 and Eve's detector ``which_detector`` (1 or 2).

    Alice and Bob share the key phase ``theta``; Eve's oscillator has phase
    ``eve_phase`` (0 in the standard attack).
    """
    _check_eta(eta)
    if which_detector not in (1, 2):
        raise ParameterError("which_detector must be 1 or 2")
    sign = 1 if which_detector == 1 else -1
    cross = 4 * math.sqrt(eta * (1 - eta)) * math.cos(theta - eve_phase)
    return gamma ** 4 / 16 * (1 + 3 * eta + sign * cross)


def _guess_terms(eta: float, gamma: float) -> tuple:
    _check_eta(eta)
    base = 1 + 3 * eta + 2 * gamma ** 2
    cross = 4 * math.sqrt(eta * (1 - eta))
    return base, cross


@dataclass(frozen=True)
class BsProbabilityMatrix:
    """Key phase (rows: theta = 0, pi) vs Eve's detector (columns: E_A1, E_A2).

    ``conditional`` rows sum to one, ``joint`` assumes a uniform key phase,
    and ``as_written`` is the un-normalized table ``scale * conditional``.
    """

    scale: float
    conditional: np.ndarray
    joint: np.ndarray

    @property
    def as_written(self) -> np.ndarray:
        return self.scale * self.conditional


def bs_probability_matrix(eta: float, gamma: float) -> BsProbabilityMatrix:
    base, cross = _guess_terms(eta, gamma)
    hit = (base + cross) / (2 * base)
    miss = (base - cross) / (2 * base)
    cond = np.array([[hit, miss], [miss, hit]])
    return BsProbabilityMatrix(gamma ** 4 * base / 8, cond, cond / 2)


def bs_guess_probability(eta: float, gamma: float) -> float:
    """Probability that Eve's inference of the key phase is wrong.

    Equals 1/2 identically at eta = 1, where Eve holds nothing.
    """
    base, cross = _guess_terms(eta, gamma)
    return (base - cross) / (2 * base)


def holevo_bs(eta: float, gamma: float) -> float:
    """Information Eve gains per pulse from the stored loss."""
    base, _ = _guess_terms(eta, gamma)
    return gamma ** 4 * base / 4 * (1 - binary_entropy(bs_guess_probability(eta, gamma)))


@dataclass(frozen=True)
class AttackReport:
    chsh_S: float
    chi1: float
    chi2: float
    guess_p: float

    def __post_init__(self):
        if self.chi1 < 0 or self.chi2 < 0 or not 0 <= self.guess_p <= 1:
            raise ContractError("attack report out of range")


def collective_report(e: float) -> dict:
    model = collective_attack_state(e)
    return {"e": e, "S": chsh_value(model), "chi1": holevo_collective(e),
            "chi1_exact": holevo_exact(model), "S_max_zy": chsh_max_zy(model)}


def bs_report(eta: float, gamma: float) -> dict:
    g2 = gamma * gamma
    vis = eta / (eta + g2) if eta + g2 > 0 else 0.0
    return {"eta": eta, "gamma": gamma, "S": 2 * math.sqrt(2) * vis,
            "chi2": holevo_bs(eta, gamma), "guess_p": bs_guess_probability(eta, gamma)}
