"""Monte-Carlo BER and decoding-complexity experiments.

Each trial is one quasi-static block: a fresh channel held for ``nt``
channel uses. V-BLAST sends ``nt`` independent symbol vectors per block
(with one feedback decision per block in the precoded scheme); the
Golden code sends one codeword spanning both uses.

Randomness is drawn per chunk of ``chunk_blocks`` blocks from a Philox
stream keyed by ``(seed, snr_index, chunk_index)``. Chunks are reduced
in index order and the stopping rule is checked after each one, so the
tallies are identical for any number of workers.
"""

from __future__ import annotations

import csv
import json
import math
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .channel import complex_gaussian, noise_sigma2
from .codebook import build_codebook, default_family, get_family, select_precoders
from .errors import ConfigError, InsufficientStatisticsError, UnsupportedModulationError
from .golden import EQUIV_CHANNEL_OPS, golden_equivalent_channels
from .lattice import coord_grid, realify
from .modulation import qam

__all__ = [
    "SCHEMES",
    "SimConfig",
    "BerRecord",
    "ComplexityRecord",
    "run_ber",
    "run_complexity",
    "estimate_diversity",
    "snr_at_ber",
    "bisect_snr_for_ber",
    "emit_results",
    "read_results_csv",
    "CSV_HEADER",
]

SCHEMES = ("vblast-plain", "vblast-lfb", "golden")
DEFAULT_SNR_DB = tuple(float(s) for s in range(4, 25, 2))


@dataclass
class SimConfig:
    scheme: str = "vblast-lfb"
    nt: int = 2
    nr: int = 2
    mod_order: int = 4
    feedback_bits: int = 4
    family: str | None = None
    snr_db: tuple = DEFAULT_SNR_DB
    min_trials: int = 1000
    min_bit_errors: int = 200
    max_trials: int = 100_000
    seed: int = 0
    workers: int = 1
    chunk_blocks: int = 256

    def __post_init__(self):
        self.snr_db = tuple(float(s) for s in np.atleast_1d(self.snr_db))

    def validate(self) -> "SimConfig":
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        if self.nt < 1 or self.nr < 1:
            raise ConfigError("nt and nr must be >= 1")
        if self.scheme == "golden" and (self.nt, self.nr) != (2, 2):
            raise ConfigError("golden scheme requires nt = nr = 2")
        if self.scheme == "vblast-lfb":
            if self.feedback_bits < 0:
                raise ConfigError("feedback_bits must be >= 0")
            fam = self.precoder_family()
            if fam.nt != self.nt:
                raise ConfigError(f"family {fam.name!r} is {fam.nt}x{fam.nt}, but nt = {self.nt}")
        try:
            qam(self.mod_order)
        except UnsupportedModulationError as exc:
            raise ConfigError(str(exc)) from exc
        if not self.snr_db:
            raise ConfigError("empty SNR list")
        if min(self.min_trials, self.min_bit_errors) < 0 or self.max_trials < 1:
            raise ConfigError("trial and error counts must be non-negative, max_trials >= 1")
        if self.workers < 1 or self.chunk_blocks < 1:
            raise ConfigError("workers and chunk_blocks must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        return self

    def precoder_family(self):
        return get_family(self.family) if self.family else default_family(self.nt)

    @property
    def bits_label(self) -> int:
        return self.feedback_bits if self.scheme == "vblast-lfb" else 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snr_db"] = list(self.snr_db)
        return d


@dataclass
class BerRecord:
    scheme: str
    nt: int
    nr: int
    mod: int
    b: int
    snr_db: float
    trials: int
    bits_sent: int
    bit_errors: int
    ber: float
    mean_ops_per_symbol: float
    mean_selection_ops: float
    seed: int
    censored: bool = False
    ber_stderr: float = float("nan")


CSV_HEADER = (
    "scheme", "nt", "nr", "mod", "B", "snr_db", "trials", "bits_sent", "bit_errors",
    "ber", "ops_per_symbol", "selection_ops", "seed", "censored", "ber_stderr",
)
_CSV_TO_FIELD = {"B": "b", "ops_per_symbol": "mean_ops_per_symbol", "selection_ops": "mean_selection_ops"}


@dataclass
class ComplexityRecord:
    scheme: str
    nt: int
    nr: int
    snr_db: float
    decodes: int
    ops_per_symbol: float
    selection_ops_per_block: float


@dataclass
class _Tally:
    blocks: int = 0
    bits: int = 0
    errors: int = 0
    err_sq: int = 0
    dec_ops: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=np.int64))
    sel_ops: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=np.int64))

    def add(self, other: "_Tally") -> None:
        self.blocks += other.blocks
        self.bits += other.bits
        self.errors += other.errors
        self.err_sq += other.err_sq
        self.dec_ops += other.dec_ops
        self.sel_ops += other.sel_ops


class _Link:
    """Per-config constants shared read-only by all chunk workers."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.const = qam(cfg.mod_order)
        self.lo, self.step, self.nlev = coord_grid(self.const.pam)
        self.lut = self.const.axis_bit_errors()
        if cfg.scheme == "golden":
            self.vectors, self.dim = 1, 8
            self.symbols = 4
        else:
            self.vectors, self.dim = cfg.nt, 2 * cfg.nt
            self.symbols = cfg.nt * cfg.nt
        self.bits_per_block = self.symbols * self.const.bits_per_symbol
        self.entries = None
        if cfg.scheme == "vblast-lfb":
            self.entries = build_codebook(cfg.precoder_family(), cfg.feedback_bits).entries

    def chunk(self, sigma2: float, snr_index: int, chunk_index: int) -> _Tally:
        cfg = self.cfg
        nb = cfg.chunk_blocks
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([cfg.seed, snr_index, chunk_index])))
        h = complex_gaussian(rng, (nb, cfg.nr, cfg.nt))
        idx = rng.integers(0, self.nlev, size=(nb, self.vectors, self.dim))
        rx_dim = 2 * cfg.nr * (2 if cfg.scheme == "golden" else 1)
        noise = rng.standard_normal((nb, rx_dim, self.vectors)) * math.sqrt(sigma2 / 2.0)

        t = _Tally(blocks=nb, bits=nb * self.bits_per_block)
        if cfg.scheme == "golden":
            basis = realify(golden_equivalent_channels(h))
            t.dec_ops[0] += nb * EQUIV_CHANNEL_OPS.real_mults
            t.dec_ops[1] += nb * EQUIV_CHANNEL_OPS.real_adds
        elif cfg.scheme == "vblast-lfb":
            p, _, sel = select_precoders(h, self.entries, self.const.diff)
            t.sel_ops += (sel.real_mults, sel.real_adds, sel.nodes_visited)
            basis = realify(h @ self.entries[p])
            cmacs = nb * cfg.nr * cfg.nt * cfg.nt
            t.dec_ops[0] += 4 * cmacs
            t.dec_ops[1] += 4 * cmacs - 2 * nb * cfg.nr * cfg.nt
        else:
            basis = realify(h)
        x = self.lo + self.step * idx
        y = np.einsum("bij,bvj->biv", basis, x) + noise
        out = np.zeros_like(idx)
        _kernels.decode_batch(np.ascontiguousarray(basis), y, self.lo, self.step, self.nlev, out, t.dec_ops)
        per_block = self.lut[idx, out].sum(axis=(1, 2))
        t.errors = int(per_block.sum())
        t.err_sq = int((per_block * per_block).sum())
        return t


def _done(t: _Tally, cfg: SimConfig) -> bool:
    if t.blocks >= cfg.max_trials:
        return True
    return t.blocks >= cfg.min_trials and t.errors >= cfg.min_bit_errors


def _run_point(link: _Link, snr_index: int, snr_db: float, pool) -> _Tally:
    cfg = link.cfg
    sigma2 = noise_sigma2(snr_db, cfg.nt, link.const.es)
    total = _Tally()
    wave = cfg.workers
    start = 0
    while True:
        ids = range(start, start + wave)
        if pool is None:
            results = (link.chunk(sigma2, snr_index, i) for i in ids)
        else:
            results = pool.map(lambda i: link.chunk(sigma2, snr_index, i), ids)
        for r in results:
            total.add(r)
            if _done(total, cfg):
                return total
        start += wave


def _record(link: _Link, snr_db: float, t: _Tally) -> BerRecord:
    cfg = link.cfg
    n = t.blocks
    ber = t.errors / t.bits if t.bits else 0.0
    if n > 1:
        mean = t.errors / n
        var = max(t.err_sq / n - mean * mean, 0.0) * n / (n - 1)
        stderr = math.sqrt(var / n) / link.bits_per_block
    else:
        stderr = float("nan")
    symbols = n * link.symbols
    return BerRecord(
        scheme=cfg.scheme,
        nt=cfg.nt,
        nr=cfg.nr,
        mod=cfg.mod_order,
        b=cfg.bits_label,
        snr_db=float(snr_db),
        trials=n,
        bits_sent=t.bits,
        bit_errors=t.errors,
        ber=ber,
        mean_ops_per_symbol=float(t.dec_ops[0] + t.dec_ops[1]) / symbols if symbols else 0.0,
        mean_selection_ops=float(t.sel_ops[0] + t.sel_ops[1]) / n if n else 0.0,
        seed=cfg.seed,
        censored=t.errors < cfg.min_bit_errors,
        ber_stderr=stderr,
    )


def run_ber(config: SimConfig) -> list[BerRecord]:
    """Simulate every SNR point of ``config`` and return one record per point."""
    config.validate()
    link = _Link(config)
    pool = ThreadPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        return [_record(link, s, _run_point(link, i, s, pool)) for i, s in enumerate(config.snr_db)]
    finally:
        if pool is not None:
            pool.shutdown()


def run_complexity(config: SimConfig, snr_db: float | None = None, decodes: int = 10_000) -> ComplexityRecord:
    """Mean decoding operations per symbol at one SNR.

    At least ``decodes`` sphere-decoder calls are averaged. Precoder
    selection cost is reported separately, per block, and is not part of
    ``ops_per_symbol``.
    """
    config.validate()
    snr = float(config.snr_db[0] if snr_db is None else snr_db)
    if decodes <= 0:
        return ComplexityRecord(config.scheme, config.nt, config.nr, snr, 0, 0.0, 0.0)
    vectors = 1 if config.scheme == "golden" else config.nt
    blocks = math.ceil(decodes / vectors)
    cfg = SimConfig(**{**config.to_dict(), "snr_db": (snr,), "min_trials": blocks, "max_trials": blocks, "min_bit_errors": 0})
    rec = run_ber(cfg)[0]
    return ComplexityRecord(
        config.scheme, config.nt, config.nr, snr, rec.trials * vectors, rec.mean_ops_per_symbol, rec.mean_selection_ops
    )


def estimate_diversity(records, lo_db: float, hi_db: float, min_errors: int = 50) -> float:
    """Diversity order from a least-squares fit of log10(BER) against SNR in dB.

    With ``BER ~ SNR^-d`` the fitted slope ``s`` (per dB) gives ``d = -10 s``.
    """
    pts = [r for r in records if lo_db <= r.snr_db <= hi_db]
    if len(pts) < 2:
        raise InsufficientStatisticsError(f"need >= 2 points in [{lo_db}, {hi_db}] dB, got {len(pts)}")
    weak = [(r.snr_db, r.bit_errors) for r in pts if r.bit_errors < min_errors]
    if weak:
        raise InsufficientStatisticsError(f"points with fewer than {min_errors} bit errors (snr_db, errors): {weak}")
    snr = np.array([r.snr_db for r in pts])
    slope = np.polyfit(snr, np.log10([r.ber for r in pts]), 1)[0]
    return float(-10.0 * slope)


def snr_at_ber(records, target: float) -> float:
    """SNR where the BER curve crosses ``target``, by log-linear interpolation."""
    pts = sorted(records, key=lambda r: r.snr_db)
    for a, b in zip(pts, pts[1:]):
        if a.ber >= target >= b.ber and a.ber > 0 and b.ber > 0:
            la, lb, lt = np.log10([a.ber, b.ber, target])
            if la == lb:
                return a.snr_db
            return float(a.snr_db + (la - lt) / (la - lb) * (b.snr_db - a.snr_db))
    raise InsufficientStatisticsError(f"BER curve does not bracket {target}")


def bisect_snr_for_ber(config: SimConfig, target: float, lo_db: float, hi_db: float, tol_db: float = 0.25) -> float:
    """Bisect for the SNR at which ``run_ber`` gives ``target``.

    Each probe is a single-point ``run_ber`` call with the config's
    stopping rule; the answer is the log-linear interpolation between the
    final bracketing probes.
    """
    def probe(s):
        return run_ber(SimConfig(**{**config.to_dict(), "snr_db": (s,)}))[0]

    lo, hi = probe(lo_db), probe(hi_db)
    if not lo.ber >= target >= hi.ber:
        raise InsufficientStatisticsError(f"[{lo_db}, {hi_db}] dB does not bracket BER {target}")
    while hi.snr_db - lo.snr_db > tol_db:
        mid = probe(0.5 * (lo.snr_db + hi.snr_db))
        if mid.ber >= target:
            lo = mid
        else:
            hi = mid
    return snr_at_ber([lo, hi], target)


def version_string() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"v{__version__}-g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"v{__version__}"


def _csv_row(r: BerRecord) -> list[str]:
    d = asdict(r)
    row = []
    for col in CSV_HEADER:
        v = d[_CSV_TO_FIELD.get(col, col)]
        if isinstance(v, bool):
            row.append(str(int(v)))
        elif isinstance(v, float):
            row.append(repr(v))
        else:
            row.append(str(v))
    return row


def emit_results(records, fmt: str, path, config: SimConfig | None = None) -> None:
    """Write records as CSV (one row per SNR point) or a JSON summary."""
    path = Path(path)
    try:
        if fmt == "csv":
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(CSV_HEADER)
                for r in records:
                    w.writerow(_csv_row(r))
        elif fmt == "json":
            doc = {
                "version": version_string(),
                "timestamp": datetime.now(timezone.utc).isoformat(),
                "config": config.to_dict() if config is not None else None,
                "records": [asdict(r) for r in records],
            }
            path.write_text(json.dumps(doc, indent=2, default=_json_default) + "\n")
        else:
            raise ConfigError(f"unknown output format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def read_results_csv(path) -> list[BerRecord]:
    types = {f.name: f.type for f in fields(BerRecord)}
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for col, raw in row.items():
                name = _CSV_TO_FIELD.get(col, col)
                t = types[name]
                if t == "bool":
                    kw[name] = raw == "1"
                elif t == "int":
                    kw[name] = int(raw)
                elif t == "float":
                    kw[name] = float(raw)
                else:
                    kw[name] = raw
            out.append(BerRecord(**kw))
    return out
