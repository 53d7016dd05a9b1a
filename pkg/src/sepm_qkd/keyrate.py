"""Closed-form rate model: transmittance, error rate and the key-rate bound.

Distances ``x_km`` are per arm (source in the middle). Reference capacity
bounds are evaluated on the end-to-end transmittance ``eta**2``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from .attacks import binary_entropy, bs_guess_probability, holevo_bs
from .errors import DegenerateInputError, ParameterError
from .params import ProtocolParams

CSV_COLUMNS = ("x_km", "total_km", "eta", "Q", "qber", "chi2_term", "rate", "plob", "srb")


def h2(p: float) -> float:
    """Binary entropy in bits; raises on arguments outside [0, 1]."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"binary entropy argument {p} outside [0, 1]")
    return binary_entropy(p)


def transmittance(x_km: float, beta_l: float = 0.2) -> float:
    if x_km < 0:
        raise ParameterError("distance must be non-negative")
    return math.exp(-beta_l * math.log(10) / 10 * x_km)


def plob_bound(eta_total: float) -> float:
    """Repeaterless secret-key capacity -log2(1 - eta)."""
    return math.inf if eta_total >= 1 else -math.log2(1 - eta_total)


def single_repeater_bound(eta_total: float) -> float:
    """-log2(1 - sqrt(eta)) for a channel split by one middle node."""
    return plob_bound(math.sqrt(eta_total))


@dataclass(frozen=True)
class DetectionRates:
    p_d: float        # wave-state coincidences of the ideal pair
    p_hom: float      # phase-insensitive two-photon coincidences
    p_e_hom: float
    p_r_hom: float
    p_e_dark: float
    p_r_dark: float


def detection_rates(params: ProtocolParams, eta: float) -> DetectionRates:
    g2 = params.gamma ** 2
    ed2 = params.eta_d ** 2
    p_hom = g2 * g2 * ed2 / 4
    dark = 2 * params.p_dark ** 2
    return DetectionRates(g2 * ed2 * eta / 2, p_hom, p_hom / 2, p_hom / 2, dark, dark)


def coincidence_rate(params: ProtocolParams, eta: float) -> float:
    """Q, the rate of joint wave-state detections per pulse."""
    r = detection_rates(params, eta)
    dark = r.p_e_dark + r.p_r_dark if params.dark_mode == "quadratic" else params.p_dark
    return dark + r.p_hom + r.p_d


def error_rate(params: ProtocolParams, eta: float) -> float:
    r = detection_rates(params, eta)
    q = coincidence_rate(params, eta)
    if q <= 0:
        raise DegenerateInputError("no coincidences: error rate undefined")
    e = (r.p_e_dark + r.p_e_hom + r.p_d * params.e_d) / q
    return min(max(e, 0.0), 0.5)


def bs_attack_term(params: ProtocolParams, eta: float) -> float:
    """Beam-splitting charge of the rate bracket, gamma^2 (1+3 eta+2 gamma^2)/eta (1-H(p))."""
    if eta <= 0:
        return math.inf
    g2 = params.gamma ** 2
    return g2 * (1 + 3 * eta + 2 * g2) / eta * (1 - binary_entropy(bs_guess_probability(eta, params.gamma)))


def first_principles_rates(params: ProtocolParams, eta: float) -> dict:
    """Coincidence sums over all four detector pairs, times eta_d^2.

    Shown next to the per-pulse rates above; no sifting factor is applied.
    """
    g2, ed2 = params.gamma ** 2, params.eta_d ** 2
    return {"wave": g2 * eta * ed2, "hom": g2 * g2 * ed2}


@dataclass(frozen=True)
class KeyRatePoint:
    x_km: float
    eta: float
    Q: float
    qber: float
    chi2_term: float
    rate: float
    plob: float
    srb: float
    chi2_raw: float = 0.0

    @property
    def total_km(self) -> float:
        return 2 * self.x_km

    def csv_row(self) -> list:
        return [self.x_km, self.total_km, self.eta, self.Q, self.qber,
                self.chi2_term, self.rate, self.plob, self.srb]


def key_rate(params: ProtocolParams, x_km: float) -> KeyRatePoint:
    """Key-rate lower bound per pulse at per-arm distance ``x_km`` (clamped at 0)."""
    eta = transmittance(x_km, params.beta_l)
    q = coincidence_rate(params, eta)
    e = error_rate(params, eta)
    bs = bs_attack_term(params, eta)
    bracket = 1 - params.f * binary_entropy(e) - 2 * e
    if params.include_bs_attack:
        bracket -= bs
    rate = max(q * bracket, 0.0)
    eta_total = eta * eta
    return KeyRatePoint(x_km, eta, q, e, bs, rate, plob_bound(eta_total),
                        single_repeater_bound(eta_total), holevo_bs(eta, params.gamma))


def sweep(params: ProtocolParams, x_grid: Sequence[float]) -> list:
    xs = list(x_grid)
    if not xs:
        raise ParameterError("empty distance grid")
    if any(b < a for a, b in zip(xs, xs[1:])):
        raise ParameterError("distance grid must be sorted ascending")
    return [key_rate(params, float(x)) for x in xs]


def distance_grid(x_min: float, x_max: float, step: float) -> np.ndarray:
    if step <= 0 or x_max < x_min:
        raise ParameterError("need step > 0 and x_min <= x_max")
    n = int(math.floor((x_max - x_min) / step + 1e-9))
    return x_min + step * np.arange(n + 1)


def cutoff_distance(params: ProtocolParams, tol_km: float = 0.01, x_limit: float = 5000.0) -> float:
    """Largest per-arm distance with a positive rate, by bisection to ``tol_km``.

    Returns ``math.inf`` if the rate stays positive up to ``x_limit``.
    """
    if key_rate(params, 0.0).rate <= 0:
        return 0.0
    lo, hi = 0.0, 1.0
    while key_rate(params, hi).rate > 0:
        lo, hi = hi, 2 * hi
        if hi > x_limit:
            return math.inf
    while hi - lo > tol_km:
        mid = 0.5 * (lo + hi)
        if key_rate(params, mid).rate > 0:
            lo = mid
        else:
            hi = mid
    return lo


def _fmt(v: float) -> str:
    return f"{v:.9e}"


def write_csv(points: Iterable[KeyRatePoint], stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in points:
        w.writerow([_fmt(v) for v in p.csv_row()])


def to_csv(points: Iterable[KeyRatePoint]) -> str:
    buf = io.StringIO()
    write_csv(points, buf)
    return buf.getvalue()


def read_csv(stream) -> list:
    """Parse a CSV written by :func:`write_csv` back into points (chi2_raw is not stored)."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.DictReader(stream)
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ParameterError(f"unexpected CSV header {reader.fieldnames}")
    return [KeyRatePoint(float(r["x_km"]), float(r["eta"]), float(r["Q"]), float(r["qber"]),
                         float(r["chi2_term"]), float(r["rate"]), float(r["plob"]), float(r["srb"]))
            for r in reader]
