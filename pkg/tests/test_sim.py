import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lfb_vblast.channel import complex_gaussian
from lfb_vblast.codebook import build_codebook, get_family, mu_ratios
from lfb_vblast.errors import ConfigError, InsufficientStatisticsError
from lfb_vblast.modulation import qam
from lfb_vblast.sim import (
    CSV_HEADER,
    BerRecord,
    SimConfig,
    emit_results,
    estimate_diversity,
    read_results_csv,
    run_ber,
    run_complexity,
    snr_at_ber,
)


def fake_curve(d, snrs, errors=1000, scale=1.0):
    return [
        BerRecord("x", 2, 2, 4, 0, float(s), 1000, 10**6, errors, scale * 10 ** (-d * s / 10), 0.0, 0.0, 0)
        for s in snrs
    ]


@pytest.mark.parametrize("scheme", ["vblast-plain", "vblast-lfb", "golden"])
def test_error_free_at_high_snr(scheme):
    cfg = SimConfig(scheme=scheme, snr_db=(60.0,), min_trials=1000, max_trials=1000, min_bit_errors=10, feedback_bits=2)
    (r,) = run_ber(cfg)
    assert r.bit_errors == 0 and r.ber == 0.0
    assert r.censored
    assert r.trials == 1024  # whole chunks
    assert r.bits_sent == r.trials * 2 * 2 * 2


def test_ber_decreases_with_snr():
    cfg = SimConfig(scheme="vblast-plain", snr_db=(0.0, 10.0), min_trials=500, min_bit_errors=100, seed=4)
    lo, hi = run_ber(cfg)
    assert lo.ber > hi.ber > 0


@pytest.mark.parametrize("scheme", ["vblast-lfb", "golden"])
def test_seed_determinism_across_workers(tmp_path, scheme):
    paths = []
    for w in (1, 3):
        cfg = SimConfig(scheme=scheme, snr_db=(6.0, 10.0), min_trials=300, min_bit_errors=150, seed=9, workers=w, chunk_blocks=64)
        p = tmp_path / f"w{w}.csv"
        emit_results(run_ber(cfg), "csv", p)
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_different_seeds_differ():
    a = run_ber(SimConfig(scheme="vblast-plain", snr_db=(8.0,), min_trials=256, max_trials=256, seed=1))[0]
    b = run_ber(SimConfig(scheme="vblast-plain", snr_db=(8.0,), min_trials=256, max_trials=256, seed=2))[0]
    assert a.bit_errors != b.bit_errors


def test_stopping_rule():
    cfg = SimConfig(scheme="vblast-plain", snr_db=(4.0,), min_trials=100, min_bit_errors=50, chunk_blocks=32, seed=3)
    (r,) = run_ber(cfg)
    assert r.trials >= 100 and r.bit_errors >= 50 and not r.censored
    assert r.trials % 32 == 0
    # the previous chunk boundary must not have satisfied the rule
    cap = SimConfig(**{**cfg.to_dict(), "min_bit_errors": 10**9, "max_trials": 64})
    (c,) = run_ber(cap)
    assert c.trials == 64 and c.censored


def test_ber_stderr_reasonable():
    (r,) = run_ber(SimConfig(scheme="vblast-plain", snr_db=(6.0,), min_trials=2000, min_bit_errors=0, seed=5))
    # binomial bound as a sanity envelope; blocks correlate errors so stderr is larger
    binom = math.sqrt(r.ber * (1 - r.ber) / r.bits_sent)
    assert binom <= r.ber_stderr < 10 * binom


@pytest.mark.parametrize(
    "kw",
    [
        dict(scheme="alamouti"),
        dict(scheme="golden", nt=3, nr=3),
        dict(mod_order=8),
        dict(feedback_bits=-1),
        dict(nt=3, nr=3, family="u2"),
        dict(workers=0),
        dict(max_trials=0),
        dict(snr_db=()),
        dict(seed=-1),
    ],
)
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        SimConfig(**kw).validate()


@pytest.mark.parametrize("d", [1.0, 2.0, 4.0])
def test_diversity_on_synthetic_curves(d):
    assert estimate_diversity(fake_curve(d, range(0, 21, 2), scale=0.3), 10, 20) == pytest.approx(d, rel=1e-9)


def test_diversity_refuses_weak_statistics():
    recs = fake_curve(2.0, [14, 16, 18, 20])
    recs[-1].bit_errors = 12
    with pytest.raises(InsufficientStatisticsError, match="20"):
        estimate_diversity(recs, 14, 20)
    with pytest.raises(InsufficientStatisticsError):
        estimate_diversity(recs, 30, 40)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.5, 4.0), st.floats(1e-5, 1e-1))
def test_snr_at_ber_inverts_power_law(d, target):
    recs = fake_curve(d, np.arange(-20, 121, 4.0))
    assert snr_at_ber(recs, target) == pytest.approx(-10 / d * math.log10(target), abs=1e-9)


def test_snr_at_ber_unbracketed():
    with pytest.raises(InsufficientStatisticsError):
        snr_at_ber(fake_curve(2.0, [0, 2]), 1e-9)


def test_csv_round_trip(tmp_path):
    recs = run_ber(SimConfig(scheme="vblast-lfb", snr_db=(4.0, 8.0), min_trials=256, min_bit_errors=20, feedback_bits=3))
    p = tmp_path / "r.csv"
    emit_results(recs, "csv", p)
    assert p.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    assert list(CSV_HEADER[:13]) == (
        "scheme,nt,nr,mod,B,snr_db,trials,bits_sent,bit_errors,ber,ops_per_symbol,selection_ops,seed".split(",")
    )
    assert read_results_csv(p) == recs


def test_empty_csv_is_header_only(tmp_path):
    p = tmp_path / "e.csv"
    emit_results([], "csv", p)
    assert p.read_text() == ",".join(CSV_HEADER) + "\n"


def test_json_summary(tmp_path):
    cfg = SimConfig(scheme="golden", snr_db=(10.0,), min_trials=256, max_trials=256)
    p = tmp_path / "r.json"
    emit_results(run_ber(cfg), "json", p, cfg)
    doc = json.loads(p.read_text())
    assert doc["version"].startswith("v0.1.0")
    assert doc["config"]["scheme"] == "golden"
    assert doc["records"][0]["trials"] == 256
    assert "timestamp" in doc


def test_emit_errors(tmp_path):
    with pytest.raises(ConfigError):
        emit_results([], "xml", tmp_path / "x")
    with pytest.raises(OSError, match="nope"):
        emit_results([], "csv", tmp_path / "nope" / "x.csv")


def test_complexity_zero_decodes():
    r = run_complexity(SimConfig(), 10.0, decodes=0)
    assert r.decodes == 0 and r.ops_per_symbol == 0.0


def test_complexity_golden_exceeds_lfb():
    g = run_complexity(SimConfig(scheme="golden"), 12.0, decodes=2000)
    f = run_complexity(SimConfig(scheme="vblast-lfb"), 12.0, decodes=2000)
    assert g.decodes >= 2000 and f.decodes >= 2000
    assert g.ops_per_symbol > f.ops_per_symbol > 0
    assert f.selection_ops_per_block > 0 and g.selection_ops_per_block == 0


def test_nested_grid_feedback_never_hurts_selection():
    hs = complex_gaussian(np.random.default_rng(30), (200, 2, 2))
    fam = get_family("u2")
    for b in (1, 2, 3):
        coarse = mu_ratios(hs, build_codebook(fam, b), qam(4))
        fine = mu_ratios(hs, build_codebook(fam, b + 1), qam(4))
        assert np.all(fine >= coarse * (1 - 1e-9))
