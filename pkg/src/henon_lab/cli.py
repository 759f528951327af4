"""Command-line front end.

Every run is described by a manifest (config snapshot, subcommand,
arguments, seed, versions).  Its hash is embedded in every output file, so
identical manifests give byte-identical outputs.  The wall-clock time is
kept out of the hashed part and only written to the sidecar manifest file.
"""

from __future__ import annotations

import argparse
import os
import sys

THREAD_ENV = "HENON_LAB_THREADS"
CHECKS_FAILED = 1


def _limit_threads() -> None:
    n = os.environ.get(THREAD_ENV)
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, n)


_limit_threads()

import datetime  # noqa: E402
import math  # noqa: E402
import platform  # noqa: E402
from pathlib import Path  # noqa: E402

import numpy as np  # noqa: E402
import scipy  # noqa: E402

from henon_lab import __version__  # noqa: E402
from henon_lab.config import MapConfig, format_config_text, parse_config_text  # noqa: E402
from henon_lab.errors import ConfigError, LabError  # noqa: E402
from henon_lab.io import csv_text, digest, dumps, fmt  # noqa: E402

CONFIG_FLAGS = ("a", "b", "s", "eps", "delta", "tau", "seed")


# configuration


def load_config(args: argparse.Namespace) -> MapConfig:
    """Defaults, then the config file, then ``--set key=value`` pairs, then the named flags."""
    data: dict[str, str] = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        data.update(parse_config_text(text))
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        data[k.strip()] = v.strip()
    for key in CONFIG_FLAGS:
        v = getattr(args, f"cfg_{key}", None)
        if v is not None:
            data[key] = str(v)
    return MapConfig.from_mapping(data)


def manifest(cfg: MapConfig, args: argparse.Namespace) -> dict:
    skip = {"func", "config", "set", "out", "outdir"} | {f"cfg_{k}" for k in CONFIG_FLAGS}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return {
        "config": cfg.to_dict(),
        "subcommand": args.command,
        "arguments": params,
        "seed": cfg.seed,
        "versions": {"henon_lab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
    }


class Output:
    """Writes result files stamped with the manifest hash."""

    def __init__(self, cfg: MapConfig, args: argparse.Namespace):
        self.manifest = manifest(cfg, args)
        self.hash = digest(dumps(self.manifest))
        self.args = args
        self.written: list[str] = []

    def json(self, payload: dict, name: str | None = None) -> None:
        doc = {"manifest_hash": self.hash, "manifest": self.manifest, "result": payload}
        self._emit(dumps(doc), name)

    def csv(self, header: list[str], rows, name: str | None = None) -> None:
        self._emit(f"# manifest_hash {self.hash}\n" + csv_text(header, rows), name)

    def _emit(self, text: str, name: str | None) -> None:
        target = None
        outdir = getattr(self.args, "outdir", None)
        if name and outdir:
            target = Path(outdir) / name
        elif self.args.out:
            target = Path(self.args.out)
        if target is None:
            sys.stdout.write(text)
            return
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
        self.written.append(str(target))

    def close(self) -> None:
        if not self.written:
            return
        side = Path(self.written[0]).with_name(Path(self.written[0]).name + ".manifest.json")
        doc = dict(self.manifest, manifest_hash=self.hash, outputs=self.written,
                   wall_clock=datetime.datetime.now(datetime.timezone.utc).isoformat())
        side.write_text(dumps(doc))


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


# subcommands


def cmd_print_config(cfg, args, out):
    sys.stdout.write(format_config_text(cfg))
    return 0


def cmd_find_astar(cfg, args, out):
    from henon_lab.manifolds import find_first_tangency

    rows = []
    for b in _floats(args.b_list) if args.b_list else [cfg.b]:
        c = cfg.replace(b=b)
        t = find_first_tangency(c, tuple(args.bracket))
        rows.append([b, c.s, t.a_star, t.bracket[0], t.bracket[1], t.g_lo, t.g_hi, t.iterations,
                     t.zeta0[0], t.zeta0[1]])
    out.csv(["b", "s", "a_star", "bracket_lo", "bracket_hi", "g_lo", "g_hi", "iterations", "zeta0_x", "zeta0_y"],
            rows, "astar.csv")
    return 0


def cmd_grow_manifolds(cfg, args, out):
    from henon_lab.core import fixed_saddles
    from henon_lab.experiments import prepare
    from henon_lab.manifolds import grow_stable, grow_unstable

    regions = prepare(cfg)
    c = regions.cfg
    P, Q = fixed_saddles(c)
    curves = {
        "Wu_P": grow_unstable(c, P, args.budget),
        "Wu_Q": grow_unstable(c, Q, args.budget),
        "Ws_P": grow_stable(c, P, args.budget),
        "Ws_Q": grow_stable(c, Q, args.budget),
    }
    if args.out and not args.outdir:
        raise ConfigError("grow-manifolds writes several files: use --outdir")
    for name, curve in curves.items():
        out.csv(["x", "y", "tx", "ty"], curve.rows(), f"{name}.csv")
    return 0


def cmd_build_regions(cfg, args, out):
    from henon_lab.experiments import prepare

    regions = prepare(cfg)
    doc = regions.to_json_dict()
    if args.boundaries:
        doc["boundaries"] = {k: v.rows() for k, v in regions.boundary_curves(args.boundaries).items()}
    out.json(doc, "regions.json")
    return 0


def cmd_code(cfg, args, out):
    from henon_lab.coding import Word, decode, encode
    from henon_lab.experiments import prepare

    regions = prepare(cfg)
    c = regions.cfg
    if args.action == "decode":
        if not args.word:
            raise ConfigError("decode needs --word")
        w = Word.parse(args.word, anchor=args.anchor if args.anchor is not None else len(args.word) // 2)
        depth = min(w.anchor, len(w) - w.anchor)
        z = decode(c, regions, w, depth)
        out.json({"word": args.word, "anchor": w.anchor, "depth": depth, "point": z.tolist()})
    else:
        if args.point is None:
            raise ConfigError("encode needs --point X Y")
        w, amb = encode(c, regions, np.array(args.point), args.n)
        out.json({"point": list(args.point), "n": args.n, "word": str(w), "ambiguous": amb.tolist()})
    return 0


def cmd_periodic_orbits(cfg, args, out):
    from henon_lab.coding import enumerate_periodic
    from henon_lab.experiments import prepare

    regions = prepare(cfg)
    orbs = enumerate_periodic(regions.cfg, regions, args.n)
    out.json({"n": args.n, "a": regions.cfg.a, "orbits": [o.to_json_dict() for o in orbs],
              "orbit_count": len(orbs), "point_count": sum(o.period for o in orbs)}, "orbits.json")
    return 0


def _t_grid(args) -> list[float]:
    if args.t is not None:
        return _floats(args.t)
    lo, hi, num = args.t_grid
    return list(np.linspace(float(lo), float(hi), int(num)))


def cmd_pressure_curve(cfg, args, out):
    from henon_lab.coding import enumerate_periodic
    from henon_lab.experiments import prepare
    from henon_lab.thermo import PressureCurve

    regions = prepare(cfg)
    curve = PressureCurve(regions.cfg, enumerate_periodic(regions.cfg, regions, args.n), args.n)
    rows = []
    for t in _t_grid(args):
        s = curve.sample(t)
        rows.append([s.t, s.n, s.P_n, s.lambda_u, s.entropy])
    out.csv(["t", "n", "P_n", "lambda_u", "h"], rows, "pressure.csv")
    return 0


def cmd_thermo_report(cfg, args, out):
    from henon_lab.experiments import prepare, thermo_suite

    regions = prepare(cfg)
    rep = thermo_suite(regions, args.n, competitors=args.competitors, seed=regions.cfg.seed)
    out.json(rep, "thermo.json")
    return 0 if all(rep["checks"].values()) else CHECKS_FAILED


def cmd_binding_check(cfg, args, out):
    from henon_lab.experiments import binding_suite, prepare

    regions = prepare(cfg)
    rep = binding_suite(regions, range(args.j_min, args.j_max + 1))
    out.json(rep, "binding.json")
    return 0 if all(rep["checks"].values()) else CHECKS_FAILED


def cmd_excursions(cfg, args, out):
    from henon_lab.experiments import prepare
    from henon_lab.thermo import excursion_average, zero_block_family

    regions = prepare(cfg)
    c = regions.cfg
    family = zero_block_family(c, regions, range(args.m_min, args.m_max + 1))
    rows = []
    for o in family:
        for r in excursion_average(c, regions, o, args.k, args.M):
            rows.append([r["word"].count("0"), r["k"], r["M"], r["start"], r["length"], r["average"],
                         r["margin_lower"], r["margin_upper"], r["ok"]])
    out.csv(["m", "k", "M", "start", "length", "average", "margin_lower", "margin_upper", "ok"], rows,
            "excursions.csv")
    return 0 if all(r[-1] for r in rows) else CHECKS_FAILED


def cmd_drop_experiment(cfg, args, out):
    from henon_lab.experiments import drop_suite, excursion_suite, prepare

    regions = prepare(cfg)
    exc = excursion_suite(regions, range(args.m_min, args.m_max + 1))
    family = exc.pop("_family")
    k = args.k if args.k is not None else exc["k0"]
    M = args.M if args.M is not None else exc["M0"]
    rep = drop_suite(regions, family, k, M, t=args.t_nu)
    rep["u_targets"] = _floats(args.u) if args.u else []
    if rep["u_targets"]:
        us = np.array([r["u"] for r in rep["rows"]])
        rep["closest_to_target"] = [
            {"u_target": u, "m": rep["rows"][int(np.argmin(np.abs(us - u)))]["m"],
             "u": float(us[int(np.argmin(np.abs(us - u)))])} for u in rep["u_targets"]]
    out.json(rep, "drop.json")
    return 0 if rep["violations"] == 0 else CHECKS_FAILED


def cmd_selfcheck(cfg, args, out):
    from henon_lab.experiments import selfcheck

    rep = selfcheck(cfg)
    out.json(rep, "selfcheck.json")
    if not rep["ok"]:
        sys.stderr.write("failed checks: " + ", ".join(rep["failed"]) + "\n")
    return 0 if rep["ok"] else CHECKS_FAILED


# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    for key in CONFIG_FLAGS:
        typ = int if key in ("s", "seed") else float
        common.add_argument(f"--{key}", dest=f"cfg_{key}", type=typ, help=f"override config key {key}")
    common.add_argument("--out", help="output file (default: stdout)")

    p = argparse.ArgumentParser(prog="henon-lab", description="Hénon map at the first bifurcation: numerical laboratory")
    p.add_argument("--version", action="version", version=f"henon-lab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(func=func)
        return sp

    add("print-config", cmd_print_config, "print the effective configuration")
    sp = add("find-astar", cmd_find_astar, "first tangency parameter a* per b")
    sp.add_argument("--b-list", help="comma-separated b values (default: config b)")
    sp.add_argument("--bracket", nargs=2, type=float, default=[1.9, 2.2], metavar=("LO", "HI"))
    sp = add("grow-manifolds", cmd_grow_manifolds, "stable and unstable manifolds of P and Q as CSV")
    sp.add_argument("--budget", type=float, default=2.0, help="arclength budget per branch")
    sp.add_argument("--outdir", help="directory for the curve files")
    sp = add("build-regions", cmd_build_regions, "regions R, S, I(delta), U and zeta_0 as JSON")
    sp.add_argument("--boundaries", type=int, default=0, metavar="N", help="also export boundary polylines")
    sp = add("code", cmd_code, "decode a word or encode a point")
    sp.add_argument("action", choices=["decode", "encode"])
    sp.add_argument("--word")
    sp.add_argument("--anchor", type=int)
    sp.add_argument("--point", nargs=2, type=float, metavar=("X", "Y"))
    sp.add_argument("--n", type=int, default=20)
    sp = add("periodic-orbits", cmd_periodic_orbits, "all periodic orbits with period dividing n")
    sp.add_argument("--n", type=int, required=True)
    sp = add("pressure-curve", cmd_pressure_curve, "P_n(t) table")
    sp.add_argument("--n", type=int, default=12)
    sp.add_argument("--t", help="comma-separated t values")
    sp.add_argument("--t-grid", nargs=3, default=["0", "3", "31"], metavar=("LO", "HI", "NUM"))
    sp = add("thermo-report", cmd_thermo_report, "roots t^u, t_0 and identity checks")
    sp.add_argument("--n", type=int, default=12)
    sp.add_argument("--competitors", type=int, default=100)
    sp = add("binding-check", cmd_binding_check, "binding estimates at dyadic distances from zeta_0")
    sp.add_argument("--j-min", type=int, default=8)
    sp.add_argument("--j-max", type=int, default=24)
    sp = add("excursions", cmd_excursions, "V_{k,M} excursion averages for the 0^m 1 family")
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--M", type=int, default=1)
    sp.add_argument("--m-min", type=int, default=5)
    sp.add_argument("--m-max", type=int, default=60)
    sp = add("drop-experiment", cmd_drop_experiment, "mixture bounds for the 0^m 1 family")
    sp.add_argument("--u", help="comma-separated target occupation fractions")
    sp.add_argument("--k", type=int)
    sp.add_argument("--M", type=int)
    sp.add_argument("--m-min", type=int, default=5)
    sp.add_argument("--m-max", type=int, default=60)
    sp.add_argument("--t-nu", type=float, default=1.0, help="potential parameter of the reference measure")
    add("selfcheck", cmd_selfcheck, "run every invariant suite")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else ConfigError.exit_code
    try:
        cfg = load_config(args)
        out = Output(cfg, args)
        code = args.func(cfg, args, out)
        out.close()
        return code
    except LabError as exc:
        sys.stderr.write(f"henon-lab: {type(exc).__name__}: {exc}\n")
        return exc.exit_code


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
