"""Command-line interface: ``simulate``, ``estimate``, ``bandwidth`` and ``verify``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.
Options may also come from a JSON file given with ``--config``; flags on the
command line override it, and it overrides the built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .bandwidth import reference_bandwidth, rule_of_thumb
from .cdf import CdfEstimate, F_minus, F_plus, validate_bandwidth_coupling
from .density import GEstimate, default_grid, f_final, f_minus, f_plus
from .errors import CSKDEError, DataError
from .families import parse_family
from .io import dumps_json, read_sample_csv, write_curves_csv, write_json, write_sample_csv
from .kernels import get_kernel
from .observation import Q_FLOOR, analytic_density
from .qestimate import default_level_bandwidth, estimated_observation_density
from .simulation import ScenarioConfig, generate_css
from .transform import CurrentStatusSample, transform
from .verify import CHECKS, PROFILES, VerifyConfig, verify_all

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


DEFAULTS = {
    "simulate": {"n": None, "x": "beta:2,2", "t": "truncnorm:0.5,0.3", "seed": 0,
                 "out": None, "with_truth": False},
    "estimate": {"input": None, "out": None, "sidecar": None, "q": "uniform",
                 "h1": None, "h2": None, "bandwidth": "beta-reference", "grid": 401,
                 "target": "both", "support": "0,1", "kernel": "biweight",
                 "clamp": False},
    "bandwidth": {"input": None, "q": "uniform", "bandwidth": "beta-reference",
                  "support": "0,1", "kernel": "biweight", "json": None},
    "verify": {"check": None, "profile": "full", "n": None, "reps": None, "seed": 0,
               "out": None},
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cskde", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"cskde {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON file of option values")

    s = sub.add_parser("simulate", help="draw a current status sample to CSV")
    common(s)
    s.add_argument("--n", type=int)
    s.add_argument("--x", help="event-time family, e.g. beta:2,2")
    s.add_argument("--t", help="observation-time family, e.g. truncnorm:0.5,0.3")
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("--with-truth", action="store_const", const=True, default=None,
                   help="add the hidden event times as column x")

    e = sub.add_parser("estimate", help="estimate density and CDF curves on a grid")
    common(e)
    e.add_argument("--input")
    e.add_argument("--out", help="curves CSV")
    e.add_argument("--sidecar", help="JSON sidecar (default: OUT with .json suffix)")
    e.add_argument("--q", help="uniform | truncnorm:mu,sigma | beta:a,b | estimate[:htilde]")
    e.add_argument("--h1", type=float)
    e.add_argument("--h2", type=float)
    e.add_argument("--bandwidth", help="fixed:<h> | beta-reference | rule-of-thumb")
    e.add_argument("--grid", type=int, help="number of grid points")
    e.add_argument("--target", choices=["density", "cdf", "both"])
    e.add_argument("--support", help="observation window a,b")
    e.add_argument("--kernel")
    e.add_argument("--clamp", action="store_const", const=True, default=None,
                   help="clip the final weight into [0, 1]")

    b = sub.add_parser("bandwidth", help="select h1 and print the audit trail")
    common(b)
    b.add_argument("--input")
    b.add_argument("--q")
    b.add_argument("--bandwidth")
    b.add_argument("--support")
    b.add_argument("--kernel")
    b.add_argument("--json", help="also write the report here")

    v = sub.add_parser("verify", help="run Monte Carlo and numerical checks")
    common(v)
    v.add_argument("check", nargs="?", choices=list(CHECKS) + ["all"])
    v.add_argument("--profile", choices=list(PROFILES))
    v.add_argument("--n", type=int)
    v.add_argument("--reps", type=int)
    v.add_argument("--seed", type=int)
    v.add_argument("--out", help="JSON report path")
    return p


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Merge defaults, the optional config file and explicit flags."""
    cfg = dict(DEFAULTS[command])
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(loaded) - set(cfg))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(loaded)
    for k in cfg:
        val = getattr(args, k, None)
        if val is not None:
            cfg[k] = val
    return cfg


def _require(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) in (None, "")]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k for k in missing))


def _family(spec):
    try:
        return parse_family(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _support(spec):
    try:
        a, b = (float(s) for s in str(spec).split(","))
    except ValueError:
        raise UsageError(f"--support must be 'a,b', got {spec!r}") from None
    if not a < b:
        raise UsageError(f"--support needs a < b, got {spec!r}")
    return a, b


def _kernel(name):
    try:
        return get_kernel(name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(cfg) -> CurrentStatusSample:
    path = Path(cfg["input"])
    if not path.is_file():
        raise DataError(f"input file {path} not found")
    return read_sample_csv(path, _support(cfg["support"]))


def _observation_density(spec: str, unit: CurrentStatusSample, kernel):
    """Known density from a family spec or a kernel estimate from the times."""
    spec = str(spec)
    if spec == "estimate" or spec.startswith("estimate:"):
        _, _, h = spec.partition(":")
        try:
            ht = float(h) if h else None
        except ValueError:
            raise UsageError(f"bad htilde in --q {spec!r}") from None
        qd = estimated_observation_density(unit.times, ht, kernel)
        level = estimated_observation_density(unit.times, default_level_bandwidth(unit.times,
                                                                                  kernel), kernel)
        return qd, level
    qd = analytic_density(_family(spec))
    return qd, qd


def _select_bandwidth(spec: str, v, qd, moment_q, kernel) -> dict:
    spec = str(spec)
    if spec.startswith("fixed:"):
        try:
            h = float(spec[6:])
        except ValueError:
            raise UsageError(f"bad fixed bandwidth {spec!r}") from None
        if not h > 0:
            raise UsageError("fixed bandwidth must be positive")
        return {"h": h, "method": "fixed"}
    if spec == "rule-of-thumb":
        return {"h": rule_of_thumb(v), "method": "rule-of-thumb"}
    if spec == "beta-reference":
        return reference_bandwidth(v, qd, kernel, moment_q=moment_q).as_dict()
    raise UsageError(f"unknown bandwidth selector {spec!r}")


def cmd_simulate(cfg) -> int:
    _require(cfg, "n", "out")
    if cfg["n"] < 2:
        raise UsageError("--n must be at least 2")
    sc = ScenarioConfig(n=cfg["n"], reps=1, x_family=_family(cfg["x"]),
                        q_family=_family(cfg["t"]), master_seed=cfg["seed"])
    s, x = generate_css(sc, 0, with_truth=True)
    try:
        write_sample_csv(cfg["out"], s, x if cfg["with_truth"] else None)
    except OSError as exc:
        raise DataError(f"cannot write {cfg['out']}: {exc}") from None
    return EXIT_OK


def _masked(fn, x, ok):
    out = np.full(x.shape, np.nan)
    if ok.any():
        out[ok] = fn(x[ok])
    return out


def cmd_estimate(cfg) -> int:
    _require(cfg, "input", "out")
    if cfg["grid"] < 2:
        raise UsageError("--grid needs at least 2 points")
    kernel = _kernel(cfg["kernel"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        s = _load(cfg)
        unit = s.to_unit()
        a, b = s.support
        qd, moment_q = _observation_density(cfg["q"], unit, kernel)
        v = transform(unit)
        n = len(s)
        bw = None
        if cfg["h1"] is not None:
            h1 = float(cfg["h1"])
        else:
            bw = _select_bandwidth(cfg["bandwidth"], v.values, qd, moment_q, kernel)
            h1 = bw["h"]
        h2 = float(cfg["h2"]) if cfg["h2"] is not None else n ** -0.2
        if not (h1 > 0 and h2 > 0):
            raise UsageError("bandwidths must be positive")
        m = int(cfg["grid"])
        xu = default_grid(m)
        qx = qd.q(xu)
        ok = qx > Q_FLOOR
        notes = []
        if not ok.all():
            notes.append(f"q at or below floor {Q_FLOOR:g} at {int((~ok).sum())} grid "
                         "points; estimates set to NaN there")
        coupling = validate_bandwidth_coupling(h1, h2, n)
        notes += coupling.messages()
        scale = b - a
        cols = {"x": a + scale * xu}
        if cfg["target"] in ("density", "both"):
            e = GEstimate(v, h1, kernel)
            Fh = CdfEstimate(v, h2, kernel, qd, 0.5)
            cols["f_minus"] = _masked(lambda z: f_minus(e, qd, z), xu, ok) / scale
            cols["f_plus"] = _masked(lambda z: f_plus(e, qd, z), xu, ok) / scale
            cols["f_final"] = _masked(lambda z: f_final(e, qd, z, Fhat=Fh, clamp=cfg["clamp"]),
                                      xu, ok) / scale
        if cfg["target"] in ("cdf", "both"):
            c = CdfEstimate(v, h2, kernel, qd, 0.5)
            cols["F_minus"] = _masked(lambda z: F_minus(c, z), xu, ok)
            cols["F_plus"] = _masked(lambda z: F_plus(c, z), xu, ok)
            cols["F_half"] = _masked(c, xu, ok)
    try:
        write_curves_csv(cfg["out"], cols)
        sidecar = cfg["sidecar"] or str(Path(cfg["out"]).with_suffix(".json"))
        write_json(sidecar, {
            "config": cfg, "n": n, "support": [a, b], "h1": h1, "h2": h2,
            "bandwidth_report": bw, "q_mode": qd.mode, "htilde": qd.htilde,
            "coupling": {"ok": coupling.ok, "h1_threshold": coupling.h1_threshold,
                         "h2_reference": coupling.h2_reference},
            "warnings": [str(w.message) for w in caught] + notes,
        })
    except OSError as exc:
        raise DataError(f"cannot write output: {exc}") from None
    return EXIT_OK


def cmd_bandwidth(cfg) -> int:
    _require(cfg, "input")
    kernel = _kernel(cfg["kernel"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        s = _load(cfg)
        unit = s.to_unit()
        qd, moment_q = _observation_density(cfg["q"], unit, kernel)
        rep = _select_bandwidth(cfg["bandwidth"], transform(unit).values, qd, moment_q, kernel)
    scale = s.support[1] - s.support[0]
    rep = dict(rep)
    rep["h_unit"] = rep["h"]
    rep["h"] = rep["h"] * scale
    rep["n"] = len(s)
    rep["warnings"] = list(rep.get("warnings", [])) + [
        str(w.message) for w in caught if str(w.message) not in rep.get("warnings", [])]
    for msg in rep["warnings"]:
        print(f"warning: {msg}", file=sys.stderr)
    text = dumps_json(rep)
    sys.stdout.write(text)
    if cfg["json"]:
        try:
            Path(cfg["json"]).write_text(text, encoding="utf-8", newline="\n")
        except OSError as exc:
            raise DataError(f"cannot write {cfg['json']}: {exc}") from None
    return EXIT_OK


def cmd_verify(cfg) -> int:
    _require(cfg, "check")
    if cfg["check"] not in CHECKS and cfg["check"] != "all":
        raise UsageError(f"unknown check {cfg['check']!r}")
    vc = VerifyConfig(profile=cfg["profile"], master_seed=int(cfg["seed"]),
                      n=cfg["n"], reps=cfg["reps"])
    names = None if cfg["check"] == "all" else [cfg["check"]]

    def show(r):
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}", file=sys.stderr)
        for c in r.criteria:
            if not c.passed:
                print(f"    {c.label}: observed {c.observed!r}, tolerance {c.tolerance!r}",
                      file=sys.stderr)

    report = verify_all(vc, names, progress=show)
    text = report.to_json()
    if cfg["out"]:
        try:
            Path(cfg["out"]).write_text(text, encoding="utf-8", newline="\n")
        except OSError as exc:
            raise DataError(f"cannot write {cfg['out']}: {exc}") from None
    else:
        sys.stdout.write(text)
    return EXIT_OK if report.passed else EXIT_VERIFY


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate,
            "bandwidth": cmd_bandwidth, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args.command, args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"cskde {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CSKDEError, ValueError) as exc:
        print(f"cskde {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
