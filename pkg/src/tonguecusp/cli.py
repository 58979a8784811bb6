"""Command-line front end.

Every subcommand resolves its options from built-in defaults, then an optional
``key = value`` config file, then command-line flags.  Output starts with a
``#`` line holding the resolved configuration; numbers in CSV are written with
17 significant digits.  Exit codes: 0 success, 1 numerical failure, 2 usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .core import ConvergenceError, Param
from .normal_form import build_chart, cubic_discriminant, cusp_coordinates, split_roots
from .qdiff import independence_det, verify_dAdB
from .tongues import (boundary_pair, contact_exponent, find_tip, scan_grid,
                      trace_boundary)

# seeds within 0.05 of a tip for each small period, with their winding
DEFAULT_TIPS = {
    1: (1, (0.49, 0.51, 0.52)),
    2: (1, (0.11, 0.11, 0.85)),
    3: (3, (0.18, 0.18, 0.93)),
    4: (7, (0.05, 0.31, 0.96)),
}


class UsageError(Exception):
    pass


def parse_seed(text: str):
    parts = [s for s in str(text).replace(" ", "").split(",") if s]
    try:
        vals = tuple(float(s) for s in parts)
    except ValueError:
        vals = ()
    if len(vals) != 3 or not all(map(math.isfinite, vals)):
        raise argparse.ArgumentTypeError(f"seed must be three numbers 'x,a,b', got {text!r}")
    return vals


def parse_floats(text: str):
    try:
        vals = [float(s) for s in str(text).split(",") if s.strip()]
    except ValueError:
        vals = []
    if not vals:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")
    return vals


def _fmt_value(v):
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class Opt:
    type: Callable[[str], Any]
    default: Any
    help: str


TIP_OPTS = {
    "p": Opt(int, 1, "period of the tongue"),
    "k": Opt(int, None, "winding integer (default: the shipped seed's)"),
    "seed": Opt(parse_seed, None, "tip seed 'x,a,b' (default: shipped for p <= 4)"),
    "tol": Opt(float, 1e-11, "tip residual tolerance"),
    "tip_file": Opt(str, None, "JSON record written by 'tip'; supplies p, k and the seed"),
}

OPTIONS: dict[str, dict[str, Opt]] = {
    "scan": {
        "a_min": Opt(float, 0.0, "left end of the a range"),
        "a_max": Opt(float, 1.0, "right end of the a range (excluded)"),
        "b_min": Opt(float, 0.5, "lower end of the b range"),
        "b_max": Opt(float, 1.0, "upper end of the b range (excluded)"),
        "na": Opt(int, 600, "grid cells in a"),
        "nb": Opt(int, 300, "grid cells in b"),
        "max_period": Opt(int, 8, "largest period detected"),
        "transient": Opt(int, 2000, "iterations before period detection"),
        "tol": Opt(float, 1e-6, "period detection tolerance"),
        "seeds": Opt(int, 16, "initial points per cell"),
    },
    "boundary": {
        **TIP_OPTS,
        "b_end": Opt(float, 0.9, "trace both branches up to this b"),
        "start_offset": Opt(float, 1e-3, "first b above the tip"),
        "h0": Opt(float, 1e-3, "largest continuation step"),
    },
    "tip": dict(TIP_OPTS),
    "cusp": {
        **TIP_OPTS,
        "offsets": Opt(parse_floats, [float(x) for x in np.logspace(-4, -2, 8)],
                       "offsets db above the tip"),
    },
    "transversality": {
        **TIP_OPTS,
        "h": Opt(float, 1e-5, "finite-difference step in a and b"),
    },
    "selftest": {},
}

DEFAULT_FORMAT = {"scan": "csv", "boundary": "csv", "cusp": "csv",
                  "tip": "jsonl", "transversality": "jsonl", "selftest": "csv"}


# configuration ---------------------------------------------------------------

def read_config(path: str) -> dict[str, str]:
    out = {}
    try:
        lines = open(path, encoding="utf-8").read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc}") from exc
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve(command: str, ns: argparse.Namespace) -> dict[str, Any]:
    opts = OPTIONS[command]
    cfg = {name: o.default for name, o in opts.items()}
    cfg["out"] = "-"
    cfg["format"] = DEFAULT_FORMAT[command]
    if ns.config:
        for key, text in read_config(ns.config).items():
            if key in ("out", "format"):
                cfg[key] = text
                continue
            if key not in opts:
                raise UsageError(f"unknown config key {key!r} for '{command}'")
            try:
                cfg[key] = opts[key].type(text)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"bad value for {key!r}: {exc}") from exc
    for name in list(opts) + ["out", "format"]:
        v = getattr(ns, name, None)
        if v is not None:
            cfg[name] = v
    if cfg["format"] not in ("csv", "jsonl"):
        raise UsageError("format must be csv or jsonl")
    if "seed" in opts:
        _resolve_tip_seed(cfg)
    return cfg


def config_comment(command: str, cfg: dict[str, Any]) -> str:
    items = " ".join(f"{k}={_fmt_value(cfg[k])}" for k in sorted(cfg))
    return f"# tonguecusp {command} {items}"


# output ----------------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


class Sink:
    """Row writer that opens its target on first use."""

    def __init__(self, path: str, fmt: str, comment: str):
        self.path, self.fmt, self.header = path, fmt, comment
        self.fh = None
        self.columns = None

    def _open(self):
        if self.fh is not None:
            return
        if self.path == "-":
            self.fh = sys.stdout
        else:
            try:
                self.fh = open(self.path, "w", encoding="utf-8", newline="")
            except OSError as exc:
                raise UsageError(f"cannot write {self.path!r}: {exc}") from exc
        self.fh.write(self.header + "\n")
        self.writer = csv.writer(self.fh, lineterminator="\n")

    def row(self, record: dict):
        self._open()
        if self.fmt == "jsonl":
            self.fh.write(json.dumps(record) + "\n")
            return
        if self.columns is None:
            self.columns = list(record)
            self.writer.writerow(self.columns)
        self.writer.writerow([_cell(record.get(c)) for c in self.columns])

    def comment(self, text: str):
        self._open()
        self.fh.write(f"# {text}\n")

    def close(self):
        if self.fh is None:
            return
        self.fh.flush()
        if self.fh is not sys.stdout:
            self.fh.close()


# subcommands -------------------------------------------------------------

def _read_tip_file(path):
    try:
        lines = open(path, encoding="utf-8").read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read tip file {path!r}: {exc}") from exc
    for line in lines:
        if line.strip() and not line.lstrip().startswith("#"):
            try:
                rec = json.loads(line)
                return int(rec["p"]), int(rec["k"]), (float(rec["x"]), float(rec["a"]),
                                                      float(rec["b"]))
            except (ValueError, KeyError, TypeError) as exc:
                raise UsageError(f"{path}: not a tip record: {exc}") from exc
    raise UsageError(f"{path}: no tip record found")


def _resolve_tip_seed(cfg):
    if cfg.get("tip_file"):
        cfg["p"], cfg["k"], cfg["seed"] = _read_tip_file(cfg["tip_file"])
    p, k, seed = cfg["p"], cfg["k"], cfg["seed"]
    if p < 1:
        raise UsageError("p must be >= 1")
    if seed is None:
        if p not in DEFAULT_TIPS:
            raise UsageError(f"no shipped seed for p={p}; pass --seed x,a,b")
        k0, seed = DEFAULT_TIPS[p]
        if k is None:
            k = k0
        shift, rem = divmod(k - k0, 2 ** p - 1)
        if rem:
            raise UsageError(f"no shipped seed for p={p}, k={k}; pass --seed x,a,b")
        # moving a by an integer m changes k by (2^p - 1) m
        seed = (seed[0], seed[1] + shift, seed[2])
    elif k is None:
        raise UsageError("k is required together with an explicit seed")
    cfg["k"], cfg["seed"] = k, tuple(seed)


def _tip(cfg):
    return find_tip(cfg["seed"], cfg["p"], cfg["k"], tol=cfg["tol"])


def _tip_record(tip):
    return {"p": tip.p, "k": tip.k, "x": tip.x_star, "a": tip.a_star, "b": tip.b_star,
            "residual": tip.residual_norm, "third_derivative": tip.third_deriv}


def cmd_scan(cfg, sink):
    recs = scan_grid((cfg["a_min"], cfg["a_max"]), (cfg["b_min"], cfg["b_max"]),
                     cfg["na"], cfg["nb"], cfg["max_period"], cfg["transient"],
                     cfg["tol"], cfg["seeds"])
    for r in recs:
        sink.row({"a": r.a, "b": r.b, "period": r.period, "multiplier": r.multiplier})


def cmd_boundary(cfg, sink):
    tip = _tip(cfg)
    b0 = tip.b_star + cfg["start_offset"]
    if not b0 < cfg["b_end"] < 1.0:
        raise UsageError("b_end must lie between the first traced b and 1")
    for start in boundary_pair(tip, b0):
        curve = trace_boundary((start.x, start.a), tip.p, tip.k, b0, cfg["b_end"], h0=cfg["h0"])
        for s in curve.samples:
            sink.row({"side": curve.side, "b": s.b, "a": s.a, "x": s.x,
                      "residual_value": s.residual_value,
                      "residual_multiplier": s.residual_multiplier})
        sink.comment(f"{curve.side} branch: {len(curve.samples)} samples, {curve.stop_reason}")


def cmd_tip(cfg, sink):
    sink.row(_tip_record(_tip(cfg)))


def cmd_cusp(cfg, sink):
    tip = _tip(cfg)
    chart = build_chart(tip)
    offsets = cfg["offsets"]
    for db in offsets:
        b = tip.b_star + db
        try:
            left, right = boundary_pair(tip, b)
        except ConvergenceError as exc:
            sink.comment(f"db={_cell(db)} skipped: {exc}")
            continue
        width = right.a - left.a
        points = {"left": left.a, "right": right.a,
                  "inside": 0.5 * (left.a + right.a), "outside": right.a + 0.5 * width}
        for name, a in points.items():
            s = split_roots(Param(a, b), tip, chart)
            sink.row({"db": db, "point": name, "a": a, "b": b, "a_left": left.a,
                      "a_right": right.a, "width": width, "alpha": s.alpha, "beta": s.beta,
                      "disc": s.disc, "rel_cusp_defect": s.relative_cusp_defect})
    fit = contact_exponent(tip, offsets)
    summary = {"exponent": fit.exponent, "prefactor": fit.prefactor,
               "fit_residual": fit.residual, "points_used": int(fit.offsets.size)}
    if sink.fmt == "jsonl":
        sink.row({"summary": summary})
    else:
        sink.comment("summary " + " ".join(f"{k}={_cell(v)}" for k, v in summary.items()))


def cmd_transversality(cfg, sink):
    tip = _tip(cfg)
    rep = verify_dAdB(tip, build_chart(tip), h=cfg["h"])
    sink.row({"tip": _tip_record(tip), **rep.as_dict()})


def cmd_selftest(cfg, sink):
    rng = np.random.default_rng(12345)
    checks = []
    tip = find_tip(DEFAULT_TIPS[1][1], 1, 1)
    checks.append(("period-1 tip", max(abs(tip.x_star - 0.5), abs(tip.a_star - 0.5),
                                       abs(tip.b_star - 0.5)), 1e-9))
    abc = rng.uniform(-1, 1, size=(200, 3))
    worst = 0.0
    for A, B, C in abc:
        al, be = cusp_coordinates(A, B, C)
        d = cubic_discriminant(A, B, C)
        worst = max(worst, abs(d - 108 * (be ** 3 - al ** 2)) / max(1.0, abs(d)))
    checks.append(("discriminant identity", worst, 1e-12))
    bs = rng.uniform(0, 1, 50)
    checks.append(("independence determinant",
                   max(abs(independence_det(b) - 2 * b) for b in bs), 1e-14))
    rep = verify_dAdB(tip, build_chart(tip))
    checks.append(("residue vs finite differences", rep.max_rel_diff, 1e-5))
    cell = scan_grid((0.5, 0.6), (0.75, 0.8), 2, 2)[0]
    checks.append(("fixed point at (0.5, 0.75)", abs((cell.multiplier or 9.0) - 0.5), 1e-9))
    failed = 0
    for name, value, limit in checks:
        ok = value <= limit
        failed += not ok
        sink.row({"check": name, "value": value, "limit": limit, "pass": ok})
    return 1 if failed else 0


COMMANDS = {"scan": cmd_scan, "boundary": cmd_boundary, "tip": cmd_tip,
            "cusp": cmd_cusp, "transversality": cmd_transversality,
            "selftest": cmd_selftest}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tonguecusp",
                                     description="Tongues, tips and cusps of the sine family "
                                                 "of degree-2 circle maps.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in OPTIONS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="plain 'key = value' file")
        sp.add_argument("--out", help="output path ('-' for stdout)")
        sp.add_argument("--format", choices=("csv", "jsonl"))
        for key, o in opts.items():
            shown = _fmt_value(o.default) if o.default is not None else "none"
            sp.add_argument("--" + key.replace("_", "-"), dest=key, type=o.type,
                            help=f"{o.help} (default {shown})")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(ns.command, ns)
        sink = Sink(cfg["out"], cfg["format"], config_comment(ns.command, cfg))
    except UsageError as exc:
        print(f"tonguecusp: error: {exc}", file=sys.stderr)
        return 2
    try:
        code = COMMANDS[ns.command](cfg, sink) or 0
    except UsageError as exc:
        print(f"tonguecusp: error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"tonguecusp: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    finally:
        sink.close()
    return code


if __name__ == "__main__":
    raise SystemExit(main())
