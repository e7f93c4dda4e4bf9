"""Command-line entry point: ``noma-limfb <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 a verification subcommand
found violations or out-of-tolerance statistics.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

from . import harness
from .harness import ExperimentConfig
from .quantizer import TABLE1_DELTA, DeltaCache

EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION = 0, 2, 3
SEED_ENV = "NOMA_LIMFB_SEED"

log = logging.getLogger("noma_limfb")


class ConfigError(Exception):
    pass


def parse_range(text) -> list[int]:
    """``"3"``, ``"1..6"`` (inclusive) or ``"1,3,6"``."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ConfigError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise ConfigError(f"empty range {text!r}")
    return out


def format_range(values) -> str:
    values = list(values)
    if len(values) > 1 and values == list(range(values[0], values[-1] + 1)):
        return f"{values[0]}..{values[-1]}"
    return ",".join(str(v) for v in values)


# n_t / b / b_prime accept ranges
_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_FLAGS = {
    "n_t": "--nt",
    "b": "--b",
    "b_prime": "--bprime",
    "snr_db": "--snr-db",
    "r_th": "--rth",
    "n_samples": "--samples",
    "seed": "--seed",
    "delta_source": "--delta-source",
    "codebook_mode": "--codebook-mode",
    "feasibility_mode": "--feasibility-mode",
    "independent_user_codebooks": "--independent-user-codebooks",
    "condition_unsaturated": "--condition-unsaturated",
}
_RANGE_KEYS = ("n_t", "b", "b_prime")


def _convert(key, value):
    if key in _RANGE_KEYS:
        return parse_range(value)
    kind = _FIELD_TYPES[key]
    if kind in ("bool", bool):
        if isinstance(value, bool):
            return value
        v = str(value).strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: not a boolean: {value!r}")
    if kind in ("int", int):
        return int(value)
    if kind in ("float", float):
        return float(value)
    return str(value).strip()


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _convert(key, value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return values


def dump_config(settings: dict) -> str:
    lines = []
    for f in fields(ExperimentConfig):
        v = settings[f.name]
        if f.name in _RANGE_KEYS:
            v = format_range(v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def effective_settings(args, defaults: dict) -> dict:
    """Defaults < config file < environment seed (if unset) < flags."""
    settings = {f.name: f.default for f in fields(ExperimentConfig)}
    for k in _RANGE_KEYS:
        settings[k] = [settings[k]]
    settings.update(defaults)
    from_file = read_config_file(args.config) if args.config else {}
    settings.update(from_file)
    if "seed" not in from_file and args.seed is None and os.environ.get(SEED_ENV):
        try:
            settings["seed"] = int(os.environ[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} is not an integer") from None
    for key in _FLAGS:
        v = getattr(args, key, None)
        if v is not None:
            settings[key] = _convert(key, v)
    return settings


def make_config(settings: dict, **overrides) -> ExperimentConfig:
    kw = {k: v for k, v in settings.items() if k not in _RANGE_KEYS}
    kw.update(n_t=settings["n_t"][0], b=settings["b"][0], b_prime=settings["b_prime"][0])
    kw.update(overrides)
    try:
        return ExperimentConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _write(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cache(args):
    return DeltaCache(args.delta_cache) if getattr(args, "delta_cache", None) else None


# --------------------------------------------------------------- commands


def cmd_sweep(args, settings):
    base = make_config(settings)
    rows = harness.run_sweep(base, settings["b"], settings["b_prime"],
                             workers=args.workers, cache=_cache(args))
    _write(harness.summary_csv(rows), args.out)
    if args.series_dir:
        from .plotting import emit_plot_data

        emit_plot_data(rows, args.series_dir)
    if args.figures:
        from .plotting import render_figures

        render_figures(rows, args.figures)
    return EXIT_OK


def cmd_train_delta(args, settings):
    cache = DeltaCache(args.out) if args.out else DeltaCache()
    seed, n_t = settings["seed"], settings["n_t"][0]
    lines = ["B,Bprime,Nt,seed,delta"]
    for bp in settings["b_prime"]:
        for b in settings["b"]:
            d = cache.get(b, bp, n_t, seed, n_train=settings["n_samples"])
            lines.append(f"{b},{bp},{n_t},{seed},{d:.6g}")
            ref = TABLE1_DELTA.get((b, bp))
            if ref is not None and n_t == 2:
                log.info("B=%d B'=%d trained=%.4g table1=%.2f rel.diff=%+.1f%%",
                         b, bp, d, ref, 100 * (d - ref) / ref)
    if not args.out:
        sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_validate_stats(args, settings):
    bps = settings["b_prime"] if args.b_prime is not None else [4, 6, 8]
    n_t = settings["n_t"][0] if args.n_t is not None else 4
    checks = harness.validate_statistics(n_t, bps, settings["n_samples"], settings["seed"])
    text = "\n".join(c.line() for c in checks) + "\n"
    _write(text, args.out)
    if args.out:
        sys.stdout.write(text)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VIOLATION


def cmd_bounds_check(args, settings):
    n_ts = settings["n_t"] if args.n_t is not None else [2, 4]
    bs = settings["b"] if args.b is not None else [1, 3, 6]
    bps = settings["b_prime"] if args.b_prime is not None else [1, 3, 6]
    total, checked, info, by_bound = 0, 0, 0, {}
    lines = []
    for n_t in n_ts:
        base = make_config(settings, n_t=n_t)
        for r in harness.run_sweep(base, bs, bps, workers=args.workers, cache=_cache(args)):
            total += r.bound_violations
            checked += r.n_bounds_checked
            info += r.lemma3_min_beta_violations
            for k, v in r.violations_by_bound.items():
                by_bound[k] = by_bound.get(k, 0) + v
            detail = " ".join(f"{k}={v}" for k, v in r.violations_by_bound.items())
            lines.append(f"Nt={n_t} B={r.b} B'={r.b_prime} checked={r.n_bounds_checked} "
                         f"order_mismatch={r.n_order_mismatch} violations={r.bound_violations} "
                         f"[{detail}]")
    lines.append(" ".join(f"{k}={v}" for k, v in by_bound.items())
                 + f" (informational: lemma3 min_beta form={info})")
    lines.append(f"{total} violations over {checked} checked samples")
    text = "\n".join(lines) + "\n"
    _write(text, args.out)
    if args.out:
        sys.stdout.write(lines[-1] + "\n")
    return EXIT_OK if total == 0 else EXIT_VIOLATION


def cmd_single(args, settings):
    cfg = make_config(settings)
    outcome = harness.run_sample(cfg, args.sample_index, cache=_cache(args))
    text = json.dumps(outcome.as_dict(), indent=2, default=_json_default) + "\n"
    _write(text, args.out)
    return EXIT_OK


def _json_default(o):
    import numpy as np
    from enum import Enum

    if isinstance(o, Enum):
        return o.value
    if isinstance(o, np.ndarray):
        return [[z.real, z.imag] for z in o.ravel()] if np.iscomplexobj(o) else o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o)}")


COMMANDS = {
    "sweep": (cmd_sweep, "B x B' grid summary CSV (rate loss, sum rates, feasibility)"),
    "train-delta": (cmd_train_delta, "MSE-trained CQI step sizes"),
    "validate-stats": (cmd_validate_stats, "closed-form channel / RVQ statistics"),
    "bounds-check": (cmd_bounds_check, "sample-wise rate-loss bound verification"),
    "single": (cmd_single, "trace one Monte Carlo sample as JSON"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noma-limfb", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value config file")
        for key, flag in _FLAGS.items():
            kind = _FIELD_TYPES[key]
            if kind in ("bool", bool):
                p.add_argument(flag, dest=key, nargs="?", const="true", default=None)
            else:
                p.add_argument(flag, dest=key, default=None)
        p.add_argument("--workers", type=int, default=harness.default_workers())
        p.add_argument("--out", help="output file (default: standard output)")
        p.add_argument("--dump-config", help="write the effective configuration and exit")
        p.add_argument("--delta-cache", help="trained-delta cache file")
        if name == "sweep":
            p.add_argument("--series-dir", help="write per-B' series files here")
            p.add_argument("--figures", help="render PNG figures into this directory")
        if name == "single":
            p.add_argument("--sample-index", type=int, default=0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    defaults = {"n_samples": 100_000}
    try:
        settings = effective_settings(args, defaults)
        if args.dump_config:
            make_config(settings)
            Path(args.dump_config).write_text(dump_config(settings))
            return EXIT_OK
        handler = COMMANDS[args.command][0]
        return handler(args, settings)
    except (ConfigError, ValueError) as exc:
        print(f"noma-limfb: error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
