"""Command-line entry point.

Subcommands: ``ber``, ``mu``, ``dmin``, ``complexity``, ``codebook-export``.
A JSON file given with ``--config`` may supply any flag (keys are flag
names, with either dashes or underscores); explicit flags win.

Exit status: 0 on success, 2 on a configuration error, 3 when every
simulated BER point is censored.
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .channel import ChannelRealization, sample_channel
from .codebook import build_codebook, default_family, dmin_for_index, get_family, mu_metric, select_precoder
from .errors import ConfigError, UnsupportedModulationError
from .modulation import qam
from .sim import SimConfig, bisect_snr_for_ber, emit_results, run_ber, run_complexity

EXIT_CONFIG = 2
EXIT_CENSORED = 3

_DEFAULTS = {
    "scheme": "vblast-lfb",
    "nt": 2,
    "nr": None,
    "mod": 4,
    "bits": 4,
    "family": None,
    "snr": "4:24:2",
    "trials": None,
    "min_errors": 200,
    "max_trials": 100_000,
    "seed": 0,
    "workers": 1,
    "chunk": 256,
    "out": None,
    "format": "csv",
    "matrix": None,
    "target_ber": None,
}


def parse_snr(text) -> tuple[float, ...]:
    """``start:stop:step`` (stop inclusive), a comma list, or a single value."""
    if isinstance(text, (int, float)):
        return (float(text),)
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    text = str(text)
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0 or stop < start:
                raise ConfigError(f"bad SNR range {text!r}")
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + i * step, 10) for i in range(n))
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad SNR specification {text!r}") from exc


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file supplying any of the flags below")
    common.add_argument("--scheme", help="vblast-plain | vblast-lfb | golden")
    common.add_argument("--nt", type=int)
    common.add_argument("--nr", type=int, help="defaults to nt")
    common.add_argument("--mod", type=int, help="square QAM order")
    common.add_argument("--bits", type=int, help="feedback bits B")
    common.add_argument("--family", help="precoder family (u2, u2-example, u3, u4, u8, identityN)")
    common.add_argument("--snr", help="start:stop:step in dB, stop inclusive, or a comma list")
    common.add_argument("--trials", type=int, help="minimum blocks (ber), channel samples (mu), decodes (complexity)")
    common.add_argument("--min-errors", dest="min_errors", type=int)
    common.add_argument("--max-trials", dest="max_trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--chunk", type=int, help="blocks per random-stream chunk")
    common.add_argument("--out", help="output path (stdout if omitted)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--matrix", help="dmin: channel as JSON [[re or [re, im], ...], ...]")
    common.add_argument("--target-ber", dest="target_ber", type=float, help="complexity: bisect SNR for this BER")

    p = argparse.ArgumentParser(prog="lfb-vblast", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("ber", "Monte-Carlo BER sweep"),
        ("mu", "codebook quality metric"),
        ("dmin", "per-index minimum distances for one channel"),
        ("complexity", "decoding operations per symbol"),
        ("codebook-export", "write a codebook as JSON"),
    ]:
        sub.add_parser(name, parents=[common], help=help_)
    return p


def _merge(ns: argparse.Namespace) -> dict:
    opts = dict(_DEFAULTS)
    if ns.config:
        try:
            doc = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from exc
        for k, v in doc.items():
            key = k.replace("-", "_")
            if key not in opts:
                raise ConfigError(f"unknown config key {k!r}")
            opts[key] = v
    for k in opts:
        v = getattr(ns, k, None)
        if v is not None:
            opts[k] = v
    if opts["nr"] is None:
        opts["nr"] = opts["nt"]
    return opts


def _sim_config(o: dict) -> SimConfig:
    kw = dict(
        scheme=o["scheme"],
        nt=int(o["nt"]),
        nr=int(o["nr"]),
        mod_order=int(o["mod"]),
        feedback_bits=int(o["bits"]),
        family=o["family"],
        snr_db=parse_snr(o["snr"]),
        min_bit_errors=int(o["min_errors"]),
        max_trials=int(o["max_trials"]),
        seed=int(o["seed"]),
        workers=int(o["workers"]),
        chunk_blocks=int(o["chunk"]),
    )
    if o["trials"] is not None:
        kw["min_trials"] = int(o["trials"])
    return SimConfig(**kw).validate()


def _write(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _family(o: dict):
    return get_family(o["family"]) if o["family"] else default_family(int(o["nt"]))


def _cmd_ber(o: dict) -> int:
    cfg = _sim_config(o)
    records = run_ber(cfg)
    if o["out"]:
        emit_results(records, o["format"], o["out"], cfg)
    else:
        with tempfile.TemporaryDirectory() as d:
            path = Path(d) / "out"
            emit_results(records, o["format"], path, cfg)
            sys.stdout.write(path.read_text())
    if records and all(r.censored for r in records):
        return EXIT_CENSORED
    return 0


def _cmd_mu(o: dict) -> int:
    fam = _family(o)
    samples = int(o["trials"] or 1000)
    mu, se = mu_metric(fam, int(o["bits"]), qam(int(o["mod"])), samples, int(o["seed"]), nr=int(o["nr"]), workers=int(o["workers"]))
    doc = {"family": fam.name, "bits": int(o["bits"]), "mod": int(o["mod"]), "samples": samples, "seed": int(o["seed"]), "mu": mu, "stderr": se}
    _write(json.dumps(doc, indent=2) + "\n", o["out"])
    return 0


def _parse_matrix(text: str) -> np.ndarray:
    rows = json.loads(text)
    return np.array([[complex(v[0], v[1]) if isinstance(v, list) else complex(v) for v in row] for row in rows])


def _cmd_dmin(o: dict) -> int:
    fam = _family(o)
    c = qam(int(o["mod"]))
    if o["matrix"]:
        try:
            h = ChannelRealization(_parse_matrix(o["matrix"]))
        except (ValueError, TypeError, IndexError) as exc:
            raise ConfigError(f"bad --matrix: {exc}") from exc
    else:
        h = sample_channel(fam.nt, int(o["nr"]), int(o["seed"]))
    if h.nt != fam.nt:
        raise ConfigError(f"channel has {h.nt} columns, family {fam.name} needs {fam.nt}")
    cb = build_codebook(fam, int(o["bits"]))
    d = [dmin_for_index(h, cb, i, c) for i in range(len(cb))]
    p, best = select_precoder(h, cb, c)
    doc = {"family": fam.name, "bits": cb.b, "dmin": d, "selected": p, "selected_dmin": best}
    _write(json.dumps(doc, indent=2) + "\n", o["out"])
    return 0


def _cmd_complexity(o: dict) -> int:
    cfg = _sim_config(o)
    decodes = int(o["trials"] if o["trials"] is not None else 10_000)
    if o["target_ber"] is not None:
        snrs = [bisect_snr_for_ber(cfg, float(o["target_ber"]), cfg.snr_db[0], cfg.snr_db[-1])]
    else:
        snrs = list(cfg.snr_db)
    recs = [asdict(run_complexity(cfg, s, decodes)) for s in snrs]
    if o["format"] == "json":
        text = json.dumps(recs, indent=2) + "\n"
    else:
        cols = list(recs[0]) if recs else []
        text = ",".join(cols) + "\n" + "".join(",".join(repr(r[k]) if isinstance(r[k], float) else str(r[k]) for k in cols) + "\n" for r in recs)
    _write(text, o["out"])
    return 0


def _cmd_codebook_export(o: dict) -> int:
    cb = build_codebook(_family(o), int(o["bits"]))
    _write(cb.to_json() + "\n", o["out"])
    return 0


_COMMANDS = {
    "ber": _cmd_ber,
    "mu": _cmd_mu,
    "dmin": _cmd_dmin,
    "complexity": _cmd_complexity,
    "codebook-export": _cmd_codebook_export,
}


def main(argv=None) -> int:
    ns = _parser().parse_args(argv)
    try:
        return _COMMANDS[ns.command](_merge(ns))
    except (ConfigError, UnsupportedModulationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
