"""End-to-end reproduction criteria, one printed PASS/FAIL line each.

The BER sweeps are long (tens of minutes on one core); they are shared
between criteria through a cache.
"""

import functools
import math

import numpy as np
import pytest

from lfb_vblast.codebook import build_codebook, family_u2, family_u2_example, family_u3, family_u_recursive, get_family
from lfb_vblast.lattice import RealLattice, brute_force_min, constrained_svp, realify, sphere_decode
from lfb_vblast.modulation import qam
from lfb_vblast.sim import SimConfig, emit_results, estimate_diversity, run_ber, run_complexity, snr_at_ber

pytestmark = pytest.mark.acceptance

SEED = 20240917
DIV_GRID = (14.0, 16.0, 18.0, 20.0)
DIV_ERRORS = 1000
WIDE_GRID = (14.0, 17.0, 20.0)
WIDE_ERRORS = 25
WIDE_CAP = 12_000_000


@functools.lru_cache(maxsize=None)
def sweep(scheme, nt=2, bits=4, snr=DIV_GRID, errors=DIV_ERRORS, cap=10**8):
    cfg = SimConfig(
        scheme=scheme, nt=nt, nr=nt, feedback_bits=bits, snr_db=snr, min_bit_errors=errors, max_trials=cap, seed=SEED
    )
    return tuple(run_ber(cfg))


def curve(recs):
    return ", ".join(f"{r.snr_db:g}dB {r.ber:.3e} ({r.bit_errors} err)" for r in recs)


def rotation(t):
    return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])


def test_worked_example_distances(criterion):
    h = np.array([[-1.0, 5.0], [1.0, 3.0]])
    d = [-1, 0, 1]
    a = constrained_svp(RealLattice(h, d))[0]
    b = constrained_svp(RealLattice(h @ rotation(math.pi / 6), d))[0]
    ok = abs(a - 1.4142) <= 1e-3 and abs(b - 2.8758) <= 2e-3
    assert criterion(ok, f"identity {a:.5f} (1.4142 +- 1e-3), rotated {b:.5f} (2.8758 +- 2e-3)")


def test_four_entry_codebook_listing(criterion):
    s = 1 / math.sqrt(2)
    listed = np.array(
        [
            [[s, s], [s, -s]],
            [[(1 - 1j) / 2, -1j * s], [(-1 + 1j) / 2, -1j * s]],
            [[-1j * s, -s], [-1j * s, s]],
            [[(-1 - 1j) / 2, 1j * s], [(1 + 1j) / 2, 1j * s]],
        ]
    )
    err = np.max(np.abs(build_codebook(get_family("u2-example"), 2).entries - listed))
    assert criterion(err <= 1e-12, f"max entry error {err:.2e} (<= 1e-12)")


@pytest.mark.parametrize("nt, m", [(2, 4), (2, 16), (3, 4)])
def test_oracle_equivalence(criterion, nt, m):
    rng = np.random.default_rng(SEED + nt * 100 + m)
    c = qam(m)
    n_inst = 500
    svp_ok = sd_ok = 0
    for _ in range(n_inst):
        h = (rng.standard_normal((nt, nt)) + 1j * rng.standard_normal((nt, nt))) / math.sqrt(2)
        b = realify(h)
        d_fast = constrained_svp(RealLattice(b, c.diff))[0]
        d_ref = brute_force_min(b, None, c.diff)[0]
        svp_ok += abs(d_fast - d_ref) <= 1e-9 * d_ref
        x = rng.choice(c.pam, 2 * nt)
        y = b @ x + rng.standard_normal(2 * nt) * math.sqrt(c.es / 2)
        x_hat, _ = sphere_decode(b, y, c.pam)
        ref, _ = brute_force_min(b, y, c.pam)
        sd_ok += abs(np.linalg.norm(y - b @ x_hat) - ref) <= 1e-9 * max(ref, 1.0)
    ok = svp_ok == n_inst and sd_ok == n_inst
    assert criterion(ok, f"{nt}x{nt} {m}-QAM: svp {svp_ok}/{n_inst}, sphere decoder {sd_ok}/{n_inst} agree with brute force")


def test_family_unitarity(criterion):
    angles = np.random.default_rng(SEED).uniform(-50, 50, 1000)
    worst = {}
    for name, fam in [
        ("u2-example", family_u2_example),
        ("u2", family_u2),
        ("u3", family_u3),
        ("u4", lambda t: family_u_recursive(1, t)),
    ]:
        worst[name] = max(np.max(np.abs(fam(t).conj().T @ fam(t) - np.eye(fam(t).shape[0]))) for t in angles)
    ok = max(worst.values()) <= 1e-9
    assert criterion(ok, "max |U^H U - I| " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (<= 1e-9)")


@pytest.mark.parametrize(
    "scheme, lo, hi",
    [("vblast-plain", 1.5, 2.6), ("vblast-lfb", 3.2, 4.8), ("golden", 3.2, 4.8)],
)
def test_diversity_2x2(criterion, scheme, lo, hi):
    recs = sweep(scheme)
    d = estimate_diversity(recs, 14, 20, min_errors=200)
    assert criterion(lo <= d <= hi, f"{scheme} d = {d:.3f} (want [{lo}, {hi}]); {curve(recs)}")


def test_coding_gain_over_golden(criterion):
    s_lfb = snr_at_ber(sweep("vblast-lfb"), 1e-3)
    s_gold = snr_at_ber(sweep("golden"), 1e-3)
    gap = s_gold - s_lfb
    ok = abs(gap - 0.6) <= 0.4
    assert criterion(ok, f"SNR at 1e-3: golden {s_gold:.2f} dB, lfb {s_lfb:.2f} dB, gap {gap:.2f} dB (0.6 +- 0.4)")


def test_feedback_bits(criterion):
    r = {b: sweep("vblast-lfb", bits=b, snr=(16.0,))[0] for b in (3, 4, 8)}
    tol = 2 * math.hypot(r[4].ber_stderr, r[8].ber_stderr)
    overlap = abs(r[4].ber - r[8].ber) <= tol
    ordered = r[3].ber >= r[4].ber
    detail = ", ".join(f"B={b} {x.ber:.3e} +- {x.ber_stderr:.1e}" for b, x in r.items())
    assert criterion(overlap and ordered, f"16 dB: {detail}; |B4-B8| <= {tol:.1e}: {overlap}, B3 >= B4: {ordered}")


def test_complexity_ordering(criterion):
    grid = (4.0, 6.0, 8.0, 10.0, 12.0)
    out = {}
    for scheme in ("vblast-lfb", "golden"):
        snr = snr_at_ber(sweep(scheme, snr=grid, errors=500), 1e-2)
        out[scheme] = (snr, run_complexity(SimConfig(scheme=scheme, seed=SEED), snr, decodes=10_000))
    lfb, gold = out["vblast-lfb"][1], out["golden"][1]
    ok = lfb.ops_per_symbol < gold.ops_per_symbol
    detail = "; ".join(f"{k} at {s:.2f} dB: {c.ops_per_symbol:.1f} ops/symbol" for k, (s, c) in out.items())
    assert criterion(ok, detail + f" (lfb selection {lfb.selection_ops_per_block:.0f} ops/block, reported separately)")


@pytest.mark.parametrize("nt", [3, 4])
def test_larger_arrays_gain_diversity(criterion, nt):
    d = {}
    for scheme in ("vblast-plain", "vblast-lfb"):
        recs = sweep(scheme, nt=nt, snr=WIDE_GRID, errors=WIDE_ERRORS, cap=WIDE_CAP)
        d[scheme] = (estimate_diversity(recs, 14, 20, min_errors=10), curve(recs))
    gain = d["vblast-lfb"][0] - d["vblast-plain"][0]
    detail = "; ".join(f"{k} d = {v:.2f} [{c}]" for k, (v, c) in d.items())
    assert criterion(gain >= 1.0, f"{nt}x{nt}: gain {gain:.2f} (>= 1.0); {detail}")


def test_determinism_across_workers(criterion, tmp_path):
    rows = {}
    for w in (1, 4):
        for scheme in ("vblast-lfb", "golden"):
            cfg = SimConfig(scheme=scheme, snr_db=(8.0, 12.0), min_bit_errors=300, seed=SEED, workers=w)
            p = tmp_path / f"{scheme}-{w}.csv"
            emit_results(run_ber(cfg), "csv", p)
            rows[scheme, w] = p.read_bytes().splitlines()[1:]
    ok = all(rows[s, 1] == rows[s, 4] and rows[s, 1] for s in ("vblast-lfb", "golden"))
    assert criterion(ok, "CSV data rows byte-identical for 1 and 4 workers" if ok else "CSV rows differ between worker counts")
