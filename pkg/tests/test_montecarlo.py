import io
import math

import numpy as np
import pytest

from sepm_qkd.errors import EstimationError, ParameterError
from sepm_qkd.montecarlo import (McConfig, SessionRecords, compare_to_analytic, run_session,
                                 sift_classes, summarize)
from sepm_qkd.params import ProtocolParams
from sepm_qkd.protocol import SessionStats, SiftClass, session_expectations, sift

GAMMA = 0.001


def _cfg(seed=7, n=20_000, eta=0.01, **kw):
    return McConfig(seed=seed, n_coincidences=n, eta=eta, params=ProtocolParams(gamma=kw.pop("gamma", GAMMA)), **kw)


def test_same_seed_same_records():
    a, b = run_session(_cfg()), run_session(_cfg())
    assert a.tobytes() == b.tobytes()
    assert run_session(_cfg(seed=8)).tobytes() != a.tobytes()


def test_worker_count_irrelevant():
    n = 3 * (1 << 16) + 123
    one = run_session(_cfg(n=n, workers=1))
    four = run_session(_cfg(n=n, workers=4))
    assert len(one) == n
    assert one.tobytes() == four.tobytes()


def test_prefix_stability():
    # round r depends only on (seed, r)
    short = run_session(_cfg(n=1000))
    long = run_session(_cfg(n=70_000))
    assert np.array_equal(short.setting, long.setting[:1000])
    assert np.array_equal(short.outcome, long.outcome[:1000])


def test_vectorized_sift_matches_scalar_rule():
    rec = run_session(_cfg(n=4000))
    for r in range(0, 4000, 7):
        kind = sift(rec[r]).kind
        cls = SiftClass(int(rec.sift[r]))
        expected = {"key": (SiftClass.KEPT, SiftClass.CHECK), "chsh": (SiftClass.CHSH,),
                    "discard": (SiftClass.DISCARDED,)}[kind]
        assert cls in expected


def test_sift_classes_matched_only():
    setting = np.arange(64, dtype=np.uint8)
    coin = np.zeros(64, dtype=bool)
    cls = sift_classes(setting, coin)
    ia = (setting // 16).astype(int)
    ib = ((setting // 2) % 4).astype(int)
    assert np.array_equal(cls == SiftClass.KEPT, ia == ib)
    assert np.array_equal(cls == SiftClass.CHSH, (ia - ib) % 2 == 1)


def test_settings_roughly_uniform():
    rec = run_session(_cfg(n=64_000))
    counts = np.bincount(rec.setting, minlength=64)
    assert counts.min() > 800 and counts.max() < 1200


def test_degenerate_distribution_gives_zero_qber():
    rec = run_session(_cfg(n=50_000, particle_term=False))
    rep = summarize(rec)
    assert rep.qber == 0.0
    assert rep.qber_stderr > 0


def test_flip_rule_agreement_within_3_sigma():
    cfg = _cfg(n=100_000, eta=0.5)
    rec = run_session(cfg)
    matched = np.isin(rec.sift, (SiftClass.KEPT, SiftClass.CHECK))
    agree = np.mean(rec.parity[matched] == 0)
    v = 1 / (1 + GAMMA ** 2 / cfg.eta)
    se = math.sqrt(agree * (1 - agree) / matched.sum()) or 1 / matched.sum()
    assert abs(agree - (1 + v) / 2) <= 3 * max(se, 1 / matched.sum())


def test_visibility_half_gives_sqrt2():
    gamma = 0.1
    cfg = _cfg(n=200_000, eta=gamma ** 2, gamma=gamma, seed=3)
    rep = summarize(run_session(cfg))
    assert abs(rep.chsh_S - math.sqrt(2)) <= 3 * rep.chsh_stderr
    assert abs(rep.qber - 0.25) <= 3 * rep.qber_stderr


def test_default_point_passes():
    cfg = _cfg(n=200_000)
    rep = summarize(run_session(cfg), cfg.params, cfg.eta)
    res = compare_to_analytic(rep, cfg.params, cfg.eta)
    assert set(res) >= {"qber", "S"}
    assert all(ok for _, ok in res.values())
    assert set(rep.z_scores) == set(res)


def test_mismatched_analytic_is_flagged():
    cfg = _cfg(n=200_000)
    rep = summarize(run_session(cfg))
    true = session_expectations(cfg.params, cfg.eta)
    halved = SessionStats(true.sifted_count, (1 - 0.5) / 2, true.chsh_S / 2,
                          {k: v / 2 for k, v in true.correlations.items()})
    res = compare_to_analytic(rep, cfg.params, cfg.eta, expected=halved)
    assert not res["qber"][1]
    assert not res["S"][1]


def test_empty_and_invalid():
    empty = SessionRecords(*(np.zeros(0, dtype=np.uint8) for _ in range(3)))
    with pytest.raises(EstimationError):
        summarize(empty)
    with pytest.raises(ParameterError):
        McConfig(seed=1, n_coincidences=0, eta=0.1)
    with pytest.raises(ParameterError):
        McConfig(seed=-1, n_coincidences=1, eta=0.1)


def test_estimator_consistency_scales_as_root_n():
    # RMS deviation over seeds should drop about 10x for 100x more rounds
    gamma = 0.1
    def rms(n, seeds):
        dq, ds = [], []
        for s in seeds:
            cfg = _cfg(seed=s, n=n, eta=gamma ** 2, gamma=gamma)
            rep = summarize(run_session(cfg))
            dq.append(rep.qber - 0.25)
            ds.append(rep.chsh_S - math.sqrt(2))
        return math.sqrt(np.mean(np.square(dq))), math.sqrt(np.mean(np.square(ds)))
    small = rms(10_000, range(100, 160))
    large = rms(1_000_000, range(200, 212))
    for a, b in zip(small, large):
        assert 5 < a / b < 20


def test_round_csv():
    rec = run_session(_cfg(n=10))
    buf = io.StringIO()
    rec.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "index,phi_a,k_a,phi_b,k_b,i,j,sift_class"
    assert len(lines) == 11


def test_report_json_round_trips_keys():
    import json
    rep = summarize(run_session(_cfg(n=5000)))
    data = json.loads(rep.to_json())
    assert data["rounds"] == 5000
    assert set(data["correlations"]) == {"-pi/4|-pi/4", "-pi/4|0", "-pi/4|pi/4", "-pi/4|pi/2",
                                         "0|-pi/4", "0|0", "0|pi/4", "0|pi/2",
                                         "pi/4|-pi/4", "pi/4|0", "pi/4|pi/4", "pi/4|pi/2",
                                         "pi/2|-pi/4", "pi/2|0", "pi/2|pi/4", "pi/2|pi/2"}
