"""Seeded sessions sampled conditionally on a coincidence.

Per-pulse coincidence probabilities are ~1e-8, so rounds are drawn directly
from the conditional table given that both sides registered exactly one
click; absolute rates live in :mod:`sepm_qkd.keyrate`.

Randomness is counter based: round ``r`` belongs to block ``r // BLOCK`` and
that block's stream is a Philox generator keyed by the seed with the block
index in its counter. Every round is therefore a pure function of
``(seed, r)`` and the worker count cannot change the output.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EstimationError, ParameterError
from .params import ProtocolParams
from .protocol import (CHSH_TERMS, OUTCOMES, PHASE_LABELS, PHASES, RoundRecord, SessionStats,
                       Settings, SiftClass, coincidence_distribution, pair_label,
                       session_expectations)

BLOCK = 1 << 16
_SETTINGS = Settings.all()  # index = ((ia*2 + ka)*4 + ib)*2 + kb


@dataclass(frozen=True)
class McConfig:
    seed: int
    n_coincidences: int
    eta: float
    params: ProtocolParams = field(default_factory=ProtocolParams)
    theta: float = 0.0
    particle_term: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.n_coincidences < 1:
            raise ParameterError("n_coincidences must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ParameterError("seed must be a 64-bit unsigned integer")
        if not 0.0 <= self.eta <= 1.0:
            raise ParameterError(f"eta={self.eta} outside [0, 1]")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")


@dataclass(frozen=True)
class SessionRecords:
    """Columnar round records: setting index (0-63), outcome index (0-3), sift class."""

    setting: np.ndarray
    outcome: np.ndarray
    sift: np.ndarray

    def __len__(self) -> int:
        return len(self.setting)

    def __getitem__(self, r: int) -> RoundRecord:
        return RoundRecord(_SETTINGS[self.setting[r]], OUTCOMES[self.outcome[r]],
                           SiftClass(int(self.sift[r])))

    def __iter__(self):
        return (self[r] for r in range(len(self)))

    @property
    def phi_a_index(self) -> np.ndarray:
        return self.setting.astype(np.int64) // 16

    @property
    def k_a(self) -> np.ndarray:
        return (self.setting.astype(np.int64) // 8) % 2

    @property
    def phi_b_index(self) -> np.ndarray:
        return (self.setting.astype(np.int64) // 2) % 4

    @property
    def k_b(self) -> np.ndarray:
        return self.setting.astype(np.int64) % 2

    @property
    def i(self) -> np.ndarray:
        return self.outcome.astype(np.int64) // 2 + 1

    @property
    def j(self) -> np.ndarray:
        return self.outcome.astype(np.int64) % 2 + 1

    @property
    def parity(self) -> np.ndarray:
        return (self.i + self.j + self.k_a + self.k_b) % 2

    def tobytes(self) -> bytes:
        return self.setting.tobytes() + self.outcome.tobytes() + self.sift.tobytes()

    def write_csv(self, stream) -> None:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(["index", "phi_a", "k_a", "phi_b", "k_b", "i", "j", "sift_class"])
        cols = zip(self.phi_a_index, self.k_a, self.phi_b_index, self.k_b, self.i, self.j, self.sift)
        for r, (pa, ka, pb, kb, i, j, sc) in enumerate(cols):
            w.writerow([r, PHASE_LABELS[pa], ka, PHASE_LABELS[pb], kb, i, j, SiftClass(sc).name.lower()])


def conditional_table(cfg: McConfig) -> np.ndarray:
    """Cumulative conditional outcome probabilities, shape (64, 4)."""
    rows = []
    for s in _SETTINGS:
        cond = coincidence_distribution(cfg.params.gamma, cfg.eta, s, cfg.theta,
                                        cfg.particle_term)["conditional"]
        rows.append([cond[o] for o in OUTCOMES])
    table = np.cumsum(np.array(rows), axis=1)
    if not np.all(table[:, -1] > 0):
        raise EstimationError("no coincidences possible at these parameters")
    return table / table[:, -1:]


def sift_classes(setting: np.ndarray, coin: np.ndarray) -> np.ndarray:
    """Vectorized sifting: matched phases -> kept/check by coin, pi/4 or 3pi/4 -> CHSH."""
    s = setting.astype(np.int64)
    diff = np.abs(s // 16 - (s // 2) % 4)
    out = np.full(setting.shape, SiftClass.DISCARDED, dtype=np.uint8)
    out[(diff == 1) | (diff == 3)] = SiftClass.CHSH
    matched = diff == 0
    out[matched & (coin == 0)] = SiftClass.KEPT
    out[matched & (coin == 1)] = SiftClass.CHECK
    return out


def _block(seed: int, b: int, cum: np.ndarray) -> tuple:
    rng = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, b, 0]))
    setting = rng.integers(0, 64, size=BLOCK, dtype=np.uint8)
    u = rng.random(BLOCK)
    coin = rng.integers(0, 2, size=BLOCK, dtype=np.uint8)
    outcome = (u[:, None] >= cum[setting][:, :3]).sum(axis=1).astype(np.uint8)
    return setting, outcome, sift_classes(setting, coin)


def run_session(cfg: McConfig) -> SessionRecords:
    cum = conditional_table(cfg)
    n_blocks = -(-cfg.n_coincidences // BLOCK)

    def work(b):
        return _block(cfg.seed, b, cum)

    if cfg.workers == 1:
        parts = [work(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(work, range(n_blocks)))
    n = cfg.n_coincidences
    return SessionRecords(*(np.concatenate(col)[:n] for col in zip(*parts)))


@dataclass
class McReport:
    n_coincidences: int
    sifted: int
    check_bits: int
    qber: float
    qber_stderr: float
    chsh_S: float
    chsh_stderr: float
    correlations: dict            # (phi_a, phi_b) -> E
    correlation_stderr: dict
    pair_counts: dict             # (phi_a, phi_b) -> (n_even, n_odd)
    z_scores: dict = field(default_factory=dict)

    def to_json(self) -> str:
        lab = lambda d: {pair_label(a, b): v for (a, b), v in d.items()}
        return json.dumps({
            "rounds": self.n_coincidences,
            "coincidences": self.n_coincidences,
            "sifted": self.sifted,
            "check_bits": self.check_bits,
            "qber": self.qber,
            "qber_stderr": self.qber_stderr,
            "S": self.chsh_S,
            "S_stderr": self.chsh_stderr,
            "correlations": lab(self.correlations),
            "correlation_stderr": lab(self.correlation_stderr),
            "z_scores": self.z_scores,
        }, sort_keys=True)

    def as_session_stats(self) -> SessionStats:
        return SessionStats(self.sifted, self.qber, self.chsh_S, dict(self.correlations))


def _binomial_stderr(k: int, n: int) -> float:
    # smoothed so a run with no errors still has a positive spread
    p = (k + 0.5) / (n + 1)
    return math.sqrt(p * (1 - p) / n)


def summarize(records: SessionRecords, params: ProtocolParams | None = None,
              eta: float | None = None) -> McReport:
    """Empirical estimators of a session; z-scores are filled when ``params`` and ``eta`` are given."""
    n = len(records)
    if n == 0:
        raise EstimationError("no records")
    check = records.sift == SiftClass.CHECK
    n_check = int(check.sum())
    if n_check == 0:
        raise EstimationError("no check bits")
    errors = int(records.parity[check].sum())
    qber = errors / n_check

    pair = records.phi_a_index * 4 + records.phi_b_index
    even = np.bincount(pair[records.parity == 0], minlength=16)
    odd = np.bincount(pair[records.parity == 1], minlength=16)
    counts, corr, corr_se = {}, {}, {}
    for ia, pa in enumerate(PHASES):
        for ib, pb in enumerate(PHASES):
            ne, no = int(even[ia * 4 + ib]), int(odd[ia * 4 + ib])
            counts[(pa, pb)] = (ne, no)
            tot = ne + no
            if tot:
                e = (ne - no) / tot
                corr[(pa, pb)] = e
                corr_se[(pa, pb)] = math.sqrt(max(1 - e * e, 1.0 / tot) / tot)
    s, var = 0.0, 0.0
    for pa, pb, sign in CHSH_TERMS:
        if (pa, pb) not in corr:
            raise EstimationError("a CHSH setting pair has no coincidences")
        s += sign * corr[(pa, pb)]
        var += corr_se[(pa, pb)] ** 2
    report = McReport(n, int(np.isin(records.sift, (SiftClass.KEPT, SiftClass.CHECK)).sum()),
                      n_check, qber, _binomial_stderr(errors, n_check), s, math.sqrt(var),
                      corr, corr_se, counts)
    if params is not None and eta is not None:
        report.z_scores = {k: z for k, (z, _) in compare_to_analytic(report, params, eta).items()}
    return report


def compare_to_analytic(report: McReport, params: ProtocolParams, eta: float,
                        expected: SessionStats | None = None, threshold: float = 3.0) -> dict:
    """``{statistic: (z, passed)}`` for the QBER, S and the four CHSH correlators."""
    if expected is None:
        expected = session_expectations(params, eta)
    out = {
        "qber": (report.qber - expected.qber) / report.qber_stderr,
        "S": (report.chsh_S - expected.chsh_S) / report.chsh_stderr,
    }
    for pa, pb, _ in CHSH_TERMS:
        key = (pa, pb)
        out[f"E[{pair_label(pa, pb)}]"] = ((report.correlations[key] - expected.correlations[key])
                                           / report.correlation_stderr[key])
    return {k: (z, abs(z) <= threshold) for k, z in out.items()}
