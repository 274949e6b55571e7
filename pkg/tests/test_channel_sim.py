import json
import math

import numpy as np
import pytest

from ida_fec import channel_sim
from ida_fec.channel_sim import (
    ChannelConfig,
    FixedLevel,
    OracleDepth,
    TrialRecords,
    TrialStream,
    ebn0_to_sigma,
    estimate_bler_complexity,
    load_records,
    minp_table,
    reliability_distributions,
    run_trials,
    transmit,
)
from ida_fec.chase import hard_decision
from ida_fec.ida_policy import ConfigError, IdaConfig, MIdaConfig, chase_p, orb_npat
from ida_fec.orbgrand import generate_pattern_book

from oracles import gaussian_tail

BOOK = generate_pattern_book(10)
DEPTH = OracleDepth(p_max=4, book=BOOK, n_store=8)


def test_sigma_examples():
    assert ebn0_to_sigma(0.0, 0.5) == pytest.approx(1.0)
    # independent evaluation: Eb/N0 = 10**0.65, R = 239/255
    assert ebn0_to_sigma(6.5, 239 / 255) == pytest.approx(0.3455860011, abs=1e-9)
    s = [ebn0_to_sigma(x, 0.9) for x in np.linspace(0, 10, 21)]
    assert np.all(np.diff(s) < 0)
    for bad in (0.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            ebn0_to_sigma(1.0, bad)


def test_zero_noise_transmit(spec):
    cfg = ChannelConfig(6.5, spec.rate)
    y = transmit(np.zeros(255, np.uint8), cfg, np.zeros(255))
    assert np.allclose(y, 2.0 / cfg.sigma ** 2)
    c = np.arange(255) % 2
    assert np.array_equal(hard_decision(transmit(c, cfg, np.zeros(255))), c)


def test_trial_stream_is_pure():
    a, b = TrialStream(5, 123), TrialStream(5, 123)
    assert np.array_equal(a.normal(), b.normal())
    assert np.array_equal(a.message(), b.message())
    assert not np.array_equal(a.normal(), TrialStream(5, 124).normal())
    assert not np.array_equal(a.normal(), TrialStream(6, 123).normal())
    z, bits = channel_sim._raw_block(5, 120, 10, 255, 239)
    assert np.array_equal(z[3], a.normal()) and np.array_equal(bits[3], a.message())
    assert abs(z.mean()) < 0.2 and set(np.unique(bits)) == {0, 1}


def test_bit_error_rate_matches_gaussian_tail(spec):
    ebn0 = 4.0
    cfg = ChannelConfig(ebn0, spec.rate, seed=31)
    rec = run_trials(spec, cfg, 4000, OracleDepth(p_max=-1, n_store=1))
    bits = 4000 * 255
    p = gaussian_tail(math.sqrt(2 * spec.rate * 10 ** (ebn0 / 10)))
    se = math.sqrt(p * (1 - p) / bits)
    assert abs(rec.n_errors.sum() / bits - p) < 3 * se


def test_noiseless_single_trial(spec):
    rec = run_trials(spec, ChannelConfig(6.5, spec.rate), 1, DEPTH, noiseless=True)
    assert len(rec) == 1 and rec.minp_mask.all()
    assert (rec.orb_true[0], rec.orb_any[0]) == (0, 0)
    assert minp_table(rec) == {0: 1.0, 1: 0.0, 2: 0.0, 3: 0.0, 4: 0.0, None: 0.0}


def _same(a: TrialRecords, b: TrialRecords):
    for c in TrialRecords.COLUMNS:
        assert np.array_equal(getattr(a, c), getattr(b, c)), c


def test_determinism_across_chunks_and_workers(spec):
    cfg = ChannelConfig(5.0, spec.rate, seed=9)
    base = run_trials(spec, cfg, 700, DEPTH, chunk=700)
    _same(base, run_trials(spec, cfg, 700, DEPTH, chunk=64))
    _same(base, run_trials(spec, cfg, 700, DEPTH, chunk=128, workers=2))
    assert base.trial_index.tolist() == list(range(700))


def test_early_stop_extends_until_min_errors(spec):
    cfg = ChannelConfig(5.5, spec.rate, seed=3)
    rec = run_trials(spec, cfg, 100, DEPTH, chunk=100, min_errors=40, stop_level=chase_p(0), max_trials=5000)
    fails = int((~rec.success(chase_p(0))).sum())
    assert len(rec) > 100 and fails >= 40
    # the stopping chunk is the first at which the running count reached 40
    prefix = int((~rec.head(len(rec) - 100).success(chase_p(0))).sum())
    assert prefix < 40
    capped = run_trials(spec, cfg, 100, DEPTH, chunk=100, min_errors=10 ** 6, stop_level=chase_p(0), max_trials=300)
    assert len(capped) == 300
    _same(capped.head(100), run_trials(spec, cfg, 100, DEPTH))


def test_records_roundtrip_and_sink(spec, tmp_path):
    cfg = ChannelConfig(5.0, spec.rate, seed=4)
    rec = run_trials(spec, cfg, 300, DEPTH, chunk=128, sink=tmp_path / "rec")
    body = json.loads((tmp_path / "rec" / "records.json").read_text())
    assert body["complete"] and len(body["parts"]) == 3
    _same(rec, load_records(tmp_path / "rec"))
    rec.save(tmp_path / "one.npz")
    back = load_records(tmp_path / "one.npz")
    _same(rec, back)
    assert (back.ebn0_db, back.seed, back.p_max, back.book_size) == (5.0, 4, 4, len(BOOK))


def test_sink_failure_leaves_partial_manifest(spec, tmp_path, monkeypatch):
    real = channel_sim._write_part

    def flaky(sink, rec, i):
        if i == 1:
            raise OSError("disk full")
        real(sink, rec, i)

    monkeypatch.setattr(channel_sim, "_write_part", flaky)
    with pytest.raises(OSError):
        run_trials(spec, ChannelConfig(5.0, spec.rate), 300, DEPTH, chunk=128, sink=tmp_path)
    body = json.loads((tmp_path / "records.json").read_text())
    assert body["complete"] is False and "disk full" in body["error"]


def test_fixed_policies_and_consistency(spec):
    rec = run_trials(spec, ChannelConfig(4.5, spec.rate, seed=8), 2000, DEPTH)
    hi = estimate_bler_complexity(rec, FixedLevel(chase_p(4), chase_p(4)))
    assert hi.complexity_pct == 100.0
    assert hi.block_errors == int((~rec.minp_mask[:, 4]).sum()) and hi.bler == hi.block_errors / 2000
    lo = estimate_bler_complexity(rec, FixedLevel(chase_p(2), chase_p(4)))
    assert lo.complexity_pct == 25.0 and lo.block_errors >= hi.block_errors
    orb = estimate_bler_complexity(rec, FixedLevel(orb_npat(20), orb_npat(40)))
    assert orb.complexity_pct == 50.0
    assert hi.bler_ci == pytest.approx(1.96 * math.sqrt(hi.bler * (1 - hi.bler) / 2000))
    assert hi.low_confidence == (hi.block_errors < 100)
    # IDA with a gamma grid point: fractions sum to 1 and errors are between the two levels'
    ida = estimate_bler_complexity(rec, IdaConfig(4.0, 3, chase_p(2), chase_p(4)))
    assert sum(ida.deltas) == pytest.approx(1.0)
    assert hi.block_errors <= ida.block_errors <= lo.block_errors
    with pytest.raises(ConfigError):
        estimate_bler_complexity(rec, IdaConfig(4.2, 3, chase_p(2), chase_p(4)))
    with pytest.raises(ConfigError):
        estimate_bler_complexity(rec, MIdaConfig(5.0, 20, chase_p(2), chase_p(4)))
    with pytest.raises(ConfigError):
        estimate_bler_complexity(rec, FixedLevel(chase_p(5), chase_p(6)))


def test_minp_table_sums_and_conditioning(spec):
    rec = run_trials(spec, ChannelConfig(5.0, spec.rate, seed=2), 3000, DEPTH)
    t = minp_table(rec)
    assert sum(t.values()) == pytest.approx(1.0)
    g = minp_table(rec, given_errors=True)
    assert sum(g.values()) == pytest.approx(1.0)
    noisy = int((rec.n_errors > 0).sum())
    assert g[1] == pytest.approx(t[1] * 3000 / noisy)
    assert minp_table(rec, p_max=2)[None] >= t[None]
    with pytest.raises(ConfigError):
        minp_table(rec, p_max=5)


def test_reliability_distributions(spec, caplog):
    rec = run_trials(spec, ChannelConfig(5.0, spec.rate, seed=2), 3000, DEPTH)
    stats = reliability_distributions(rec, 6)
    assert [d.condition for d in stats] == [0, 1, 2, 3, 4]
    assert sum(d.sample_count for d in stats) == int((rec.required_p() >= 0).sum())
    for d in stats:
        if d.sample_count:
            assert d.mean_diff[0] == 0.0
            assert np.all(np.diff(d.mean_diff) >= 0)
    empty = reliability_distributions(rec.head(1), 3)
    assert any(d.sample_count == 0 and np.isnan(d.mean_mag).all() for d in empty)
    w = reliability_distributions(rec, 4, "orb_weight", BOOK)
    assert len(w) == 11 and w[0].sample_count > 0
    with pytest.raises(ConfigError):
        reliability_distributions(rec, 9)
