"""Command-line interface: ``entire-laplace <command> [flags]``.

Every parameter can come from an INI file (``--config``; section ``[run]`` for
the shared keys, a section named after the command for the rest); explicit
flags win over the file, the file wins over built-in defaults. Each run writes
its outputs plus ``manifest.json`` (config hash, versions, seed, output
digests) to the output directory. With ``--deterministic`` nothing
time-dependent is written, so identical configurations give byte-identical
files.

Exit codes: 0 success, 2 precondition or parameter error, 3 numerical
non-convergence, 4 budget exhausted.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .contour import (build_gamma, cauchy_check, choose_truncation, contour_csv_rows,
                      contour_to_expsum)
from .errors import ConvergenceError, EntireLaplaceError
from .expr import to_json
from .fit import density_demo, fit_coefficients, node_grid
from .geometry import Rectangle
from .laplace import boundary_trace, v_norm
from .plot import line_chart
from .registry import (INSTANCES, STANDARD_CONTOUR, instance, load_target, parse_complex,
                       parse_family, standard_points)
from .tauberian import remainder_probe, wiener_ikehara_transfer

OUT_ENV = "ENTIRE_LAPLACE_OUT"
EXIT_OK, EXIT_PRECONDITION, EXIT_NUMERIC, EXIT_BUDGET = 0, 2, 3, 4

_CONTOUR = [("h", float, STANDARD_CONTOUR["h"], "damping shift h (rays at Re = -h)"),
            ("alpha_prime", float, STANDARD_CONTOUR["alpha_prime"], "left edge of R'"),
            ("r_prime", float, STANDARD_CONTOUR["r_prime"], "half-height of R'"),
            ("xi", str, "40", "ray truncation, or 'auto' to meet 0.1 * tol"),
            ("nodes_per_unit", int, STANDARD_CONTOUR["nodes_per_unit"], "nodes per unit length"),
            ("panel_order", int, STANDARD_CONTOUR["panel_order"], "Gauss-Legendre panel order"),
            ("tol", float, 1e-6, "target tolerance for automatic truncation")]

COMMANDS = {
    "norm": [("target", str, "instance:exp_unit", "target JSON file or instance:NAME"),
             ("alpha", float, -0.5, "rectangle left edge"),
             ("r", float, 1.0, "rectangle half-height"),
             ("boundary_n", int, 64, "initial boundary points per edge"),
             ("deriv_n", int, 257, "initial derivative grid size"),
             ("trace_n", int, 64, "points per edge in the boundary trace CSV")],
    "cauchy": [("target", str, "instance:standard", "target JSON file or instance:NAME"),
               *_CONTOUR,
               ("s", str, "standard", "'standard' or semicolon-separated points re,im"),
               ("extra_s", int, 0, "additional seeded random points"),
               ("reference", str, "direct", "left side from 'direct' or 'transform'")],
    "reconstruct": [("target", str, "instance:standard", "target JSON file or instance:NAME"),
                    *_CONTOUR,
                    ("alpha", float, -0.15, "norm rectangle left edge"),
                    ("r", float, 1.5, "norm rectangle half-height"),
                    ("x_max", float, 20.0, "sup-error window [0, x_max]"),
                    ("n_x", int, 2001, "points in the error window")],
    "contour": [*_CONTOUR[:6]],
    "fit": [("target", str, "instance:zeta0", "target JSON file or instance:NAME"),
            ("alpha", float, -0.5, "rectangle left edge"),
            ("r", float, 1.0, "rectangle half-height"),
            ("beta", float, -2.0, "nodes satisfy Re < beta"),
            ("delta", float, 0.5, "spacing of node lines"),
            ("n_lines", int, 2, "vertical node lines"),
            ("n_per_line", int, 15, "nodes per line"),
            ("im_lo", float, -6.0, "lowest imaginary part"),
            ("im_hi", float, 6.0, "highest imaginary part"),
            ("method", str, "minimax", "minimax or least-squares")],
    "demo": [("target", str, "instance:bump", "target JSON file or instance:NAME"),
             ("alpha", float, -0.5, "rectangle left edge"),
             ("r", float, 1.0, "rectangle half-height"),
             ("beta", float, -2.0, "nodes satisfy Re < beta"),
             ("eps", float, 1e-2, "required certified error"),
             ("h", float, 0.1, "damping used for diagnostics"),
             ("delta", float, 0.5, "spacing of node lines"),
             ("budget", int, 60, "maximum number of nodes"),
             ("im_lo", float, -6.0, "lowest imaginary part"),
             ("im_hi", float, 6.0, "highest imaginary part"),
             ("method", str, "minimax", "minimax or least-squares")],
    "probe": [("L", str, "powerdecay:0.5", "L family"),
              ("rho", str, "powerdecay:1", "rho family (powerdecay:p or log)"),
              ("alpha", float, -0.5, "rectangle left edge"),
              ("r", float, 1.0, "rectangle half-height"),
              ("b_samples", int, 16, "samples of b in [M, M + 1]"),
              ("x_max", float, 1e4, "largest tabulated X"),
              ("n_x", int, 41, "tabulated X values"),
              ("C", float, 1.0, "probe constant")],
    "wi": [("tau", str, "instance:exp_unit", "tau JSON file or instance:NAME"),
           ("a", float, 1.0, "shift a"),
           ("s", str, "3", "semicolon-separated points with Re s > 1"),
           ("grid_x", float, 20.0, "monotonicity grid end"),
           ("grid_n", int, 100000, "monotonicity grid size")],
    "targets": [],
}
COMMON = [("deterministic", bool, False, "omit timestamps so outputs are byte-identical"),
          ("seed", int, 0, "seed for any random sampling"),
          ("plot", bool, False, "also write SVG line plots")]


# ------------------------------------------------------------------- config

def _parse_value(typ, text):
    if typ is bool:
        if isinstance(text, bool):
            return text
        low = str(text).strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    return typ(text)


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class RunConfig:
    command: str
    params: dict
    deterministic: bool = False
    seed: int = 0
    plot: bool = False
    out_dir: str = field(default="", compare=False)

    def canonical(self) -> dict:
        return {"command": self.command, "params": self.params,
                "deterministic": self.deterministic, "seed": self.seed, "plot": self.plot}

    @property
    def config_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["run"] = {"command": self.command, "deterministic": _format_value(self.deterministic),
                     "seed": str(self.seed), "plot": _format_value(self.plot)}
        cp[self.command] = {k: _format_value(v) for k, v in self.params.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str, command: str | None = None) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp.read_string(text)
        run = cp["run"] if cp.has_section("run") else {}
        command = command or run.get("command")
        if command not in COMMANDS:
            raise ValueError(f"unknown command {command!r}")
        params = {name: default for name, _, default, _ in COMMANDS[command]}
        if cp.has_section(command):
            types = {name: typ for name, typ, _, _ in COMMANDS[command]}
            for key, val in cp[command].items():
                if key not in types:
                    raise ValueError(f"unknown key {key!r} in section [{command}]")
                params[key] = _parse_value(types[key], val)
        common = {name: _parse_value(typ, run.get(name, default)) for name, typ, default, _
                  in COMMON}
        return cls(command, params, **common)


def _flag(name):
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entire-laplace",
                                     description="Laplace-transform norms, contour sums, "
                                                 "exponential fitting and remainder probes.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, spec in COMMANDS.items():
        p = sub.add_parser(cmd)
        p.add_argument("--config", help="INI file with [run] and [%s] sections" % cmd)
        p.add_argument("--out-dir", help=f"output directory (default ${OUT_ENV} or ./el_out)")
        for name, typ, default, help_ in COMMON:
            if typ is bool:
                p.add_argument(_flag(name), action=argparse.BooleanOptionalAction, default=None,
                               help=help_)
            else:
                p.add_argument(_flag(name), type=typ, default=None, help=help_)
        for name, typ, default, help_ in spec:
            p.add_argument(_flag(name), dest=name, type=typ, default=None,
                           help=f"{help_} (default {default})")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    if args.config:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = RunConfig.from_ini(text, args.command)
    else:
        cfg = RunConfig(args.command, {n: d for n, _, d, _ in COMMANDS[args.command]})
    for name, _, _, _ in COMMANDS[args.command]:
        v = getattr(args, name)
        if v is not None:
            cfg.params[name] = v
    for name, _, _, _ in COMMON:
        v = getattr(args, name)
        if v is not None:
            setattr(cfg, name, v)
    cfg.out_dir = args.out_dir or os.environ.get(OUT_ENV) or "el_out"
    return cfg


# ------------------------------------------------------------------ output

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


class Writer:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.dir = Path(cfg.out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: dict[str, str] = {}

    def _write(self, name: str, text: str):
        data = text.encode("utf-8")
        (self.dir / name).write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()

    def json(self, name: str, payload: dict):
        doc = {"config_hash": self.cfg.config_hash, **_jsonable(payload)}
        self._write(name, json.dumps(doc, sort_keys=True, indent=2) + "\n")

    def csv(self, name: str, header, rows):
        buf = io.StringIO()
        buf.write(f"# config_hash={self.cfg.config_hash}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                        for v in row])
        self._write(name, buf.getvalue())

    def svg(self, name: str, *series, **kwargs):
        if self.cfg.plot:
            self._write(name, line_chart(list(series), **kwargs))

    def manifest(self, status: str, exit_code: int):
        doc = {"config_hash": self.cfg.config_hash, "config": self.cfg.canonical(),
               "config_ini": self.cfg.to_ini(), "status": status, "exit_code": exit_code,
               "seed": self.cfg.seed,
               "versions": {"entire_laplace": __version__, "numpy": np.__version__,
                            "scipy": scipy.__version__, "python": platform.python_version()},
               "outputs": dict(sorted(self.files.items()))}
        if not self.cfg.deterministic:
            doc["created_utc"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        (self.dir / "manifest.json").write_text(
            json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- commands

def _spec_from(p, target=None, r=0.0):
    xi = p["xi"]
    if str(xi).lower() == "auto":
        xi = choose_truncation(target, p["h"], p["r_prime"], p["tol"], r)
    return build_gamma(p["h"], p["alpha_prime"], p["r_prime"], float(xi), p["nodes_per_unit"],
                       panel_order=p["panel_order"])


def _points(text: str, seed: int, extra: int):
    if text == "standard":
        return standard_points(seed, extra)
    pts = [parse_complex(t) for t in text.split(";") if t.strip()]
    if extra:
        pts += list(standard_points(seed, extra)[10:])
    return np.array(pts, dtype=complex)


def cmd_norm(cfg: RunConfig, out: Writer) -> int:
    p = cfg.params
    f = load_target(p["target"])
    rep = v_norm(f, p["alpha"], p["r"], deriv_n=p["deriv_n"], boundary_n=p["boundary_n"])
    s, L = boundary_trace(f, Rectangle(p["alpha"], p["r"]), p["trace_n"])
    out.json("norm.json", {"target": f.to_dict(), "report": rep.to_dict()})
    out.csv("boundary_trace.csv", ["s_re", "s_im", "L_re", "L_im"],
            zip(s.real, s.imag, L.real, L.imag))
    out.svg("boundary_trace.svg", ("|L|", list(range(s.size)), list(np.abs(L))),
            title="|L| along the rectangle boundary", xlabel="boundary index", ylabel="|L|")
    return EXIT_OK


def cmd_cauchy(cfg: RunConfig, out: Writer) -> int:
    p = cfg.params
    f = load_target(p["target"])
    spec = _spec_from(p, f)
    s = _points(p["s"], cfg.seed, p["extra_s"])
    reps = cauchy_check(f, spec, s, reference=p["reference"])
    finer = build_gamma(spec.h, spec.alpha_prime, spec.r_prime, spec.xi,
                        2 * spec.nodes_per_unit, panel_order=spec.panel_order)
    reps2 = cauchy_check(f, finer, s, reference=p["reference"])
    out.json("cauchy.json", {
        "target": f.to_dict(), "contour": spec.to_dict(),
        "checks": [r.to_dict() for r in reps],
        "max_residual": max(r.residual for r in reps),
        "max_budget": max(r.budget for r in reps),
        "max_residual_doubled": max(r.residual for r in reps2)})
    out.csv("contour.csv", ["re", "im", "w_re", "w_im", "segment"], contour_csv_rows(spec))
    out.svg("contour.svg", ("contour nodes", list(spec.nodes.real), list(spec.nodes.imag)),
            title="contour nodes", xlabel="Re", ylabel="Im", markers=True)
    return EXIT_OK


def cmd_reconstruct(cfg: RunConfig, out: Writer) -> int:
    p = cfg.params
    f = load_target(p["target"])
    spec = _spec_from(p, f, p["r"])
    rec = contour_to_expsum(f, spec, alpha=p["alpha"], r=p["r"])
    x = np.linspace(0.0, p["x_max"], p["n_x"])
    g = rec.expsum._value(x)
    fx = f._value(x)
    diff = v_norm(rec.expsum - f, p["alpha"], p["r"])
    out.json("reconstruct.json", {
        "target": f.to_dict(), "contour": spec.to_dict(), "n_terms": len(rec.expsum),
        "sup_error": float(np.abs(g - fx).max()), "norm_error": diff.total,
        "norm_report": diff.to_dict(), "tail_bound": rec.tail_bound,
        "quadrature_estimate": rec.quadrature_estimate, "budget": rec.budget,
        "max_imag_part": float(np.abs(np.imag(rec.expsum._eval_terms(x, False))).max())
        if not rec.expsum.is_real else 0.0})
    (out.dir / "expsum.json").write_text(to_json(rec.expsum, sort_keys=True) + "\n",
                                         encoding="utf-8")
    out._write("expsum.json", (out.dir / "expsum.json").read_text(encoding="utf-8"))
    out.csv("reconstruction.csv", ["x", "reconstruction", "target", "error"],
            zip(x, g, fx, g - fx))
    out.svg("reconstruction.svg", ("|error|", list(x), list(np.abs(g - fx) + 1e-300)),
            title="reconstruction error", xlabel="x", ylabel="|error|", logy=True)
    return EXIT_OK


def cmd_contour(cfg: RunConfig, out: Writer) -> int:
    p = dict(cfg.params, tol=1e-6)
    if str(p["xi"]).lower() == "auto":
        p["xi"] = "40"
    spec = _spec_from(p)
    out.json("contour.json", spec.to_dict(include_nodes=False))
    out.csv("contour.csv", ["re", "im", "w_re", "w_im", "segment"], contour_csv_rows(spec))
    out.svg("contour.svg", ("contour nodes", list(spec.nodes.real), list(spec.nodes.imag)),
            title="contour nodes", xlabel="Re", ylabel="Im", markers=True)
    return EXIT_OK


def cmd_fit(cfg: RunConfig, out: Writer) -> int:
    p = cfg.params
    f = load_target(p["target"])
    nodes = node_grid(p["beta"], p["delta"], p["n_lines"], p["n_per_line"],
                      (p["im_lo"], p["im_hi"]))
    res = fit_coefficients(f, nodes, p["alpha"], p["r"], p["method"])
    out.json("certificate.json", {"target": f.to_dict(), "alpha": p["alpha"], "r": p["r"],
                                  "beta": p["beta"], "fit": res.to_dict()})
    return EXIT_OK


def cmd_demo(cfg: RunConfig, out: Writer) -> int:
    p = cfg.params
    f = load_target(p["target"])
    res = density_demo(f, p["alpha"], p["r"], p["beta"], p["eps"], h=p["h"],
                       delta=p["delta"], budget=p["budget"], im_range=(p["im_lo"], p["im_hi"]),
                       method=p["method"], target_id=p["target"])
    out.json("certificate.json", res.certificate)
    out.csv("demo_history.csv", ["n_nodes", "achieved_error"], res.history)
    out.svg("demo_history.svg", ("certified error", [h[0] for h in res.history],
                                 [h[1] for h in res.history]),
            ("eps", [h[0] for h in res.history], [p["eps"]] * len(res.history)),
            title="certified error vs node count", xlabel="nodes", ylabel="error", logy=True)
    return EXIT_OK if res.achieved else EXIT_BUDGET


def cmd_probe(cfg: RunConfig, out: Writer) -> int:
    p = cfg.params
    L = parse_family(p["L"])
    rho = parse_family(p["rho"])
    rep = remainder_probe(L, rho, p["alpha"], p["r"], p["b_samples"], p["x_max"], C=p["C"],
                          n_X=p["n_x"], L_id=p["L"], rho_id=p["rho"])
    out.json("probe.json", rep.to_dict())
    out.csv("probe.csv", ["X", "windowed_ratio", "C_norm_sup"], rep.csv_rows())
    out.svg("probe.svg", ("sup L/rho", list(rep.X), list(rep.windowed_ratio)),
            ("C * norm_sup", list(rep.X), [rep.threshold] * rep.X.size),
            title="remainder probe", xlabel="X", ylabel="ratio", logx=True, logy=True)
    return EXIT_OK


def cmd_wi(cfg: RunConfig, out: Writer) -> int:
    p = cfg.params
    tau = load_target(p["tau"])
    tr = wiener_ikehara_transfer(tau, p["a"])
    pts = [parse_complex(t) for t in p["s"].split(";") if t.strip()]
    out.json("wi.json", {"transfer": tr.to_dict(),
                         "checks": [tr.residual_check(s) for s in pts],
                         "monotone_on_grid": tr.monotone_on_grid(p["grid_x"], p["grid_n"]),
                         "grid": [p["grid_x"], p["grid_n"]]})
    return EXIT_OK


def cmd_targets(cfg: RunConfig, out: Writer) -> int:
    for name in sorted(INSTANCES):
        out._write(f"{name}.json", to_json(instance(name), sort_keys=True) + "\n")
    return EXIT_OK


HANDLERS = {"norm": cmd_norm, "cauchy": cmd_cauchy, "reconstruct": cmd_reconstruct,
            "contour": cmd_contour, "fit": cmd_fit, "demo": cmd_demo, "probe": cmd_probe,
            "wi": cmd_wi, "targets": cmd_targets}


def _error_payload(exc: Exception) -> dict:
    loc = getattr(exc, "location", None)
    if loc is not None:
        loc = [complex(loc).real, complex(loc).imag]
    d = {"error": type(exc).__name__, "message": str(exc), "location": loc}
    if hasattr(exc, "a_min"):
        d["a_min"] = exc.a_min
    return d


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (OSError, ValueError, KeyError, configparser.Error) as exc:
        print(json.dumps({"error": "ConfigError", "message": str(exc)}), file=sys.stderr)
        return EXIT_PRECONDITION
    out = Writer(cfg)
    try:
        code = HANDLERS[cfg.command](cfg, out)
    except ConvergenceError as exc:
        payload = _error_payload(exc)
        out.json("error.json", payload)
        out.manifest("non-convergence", EXIT_NUMERIC)
        print(json.dumps(payload), file=sys.stderr)
        return EXIT_NUMERIC
    except (EntireLaplaceError, ValueError) as exc:
        payload = _error_payload(exc)
        out.json("error.json", payload)
        out.manifest("precondition", EXIT_PRECONDITION)
        print(json.dumps(payload), file=sys.stderr)
        return EXIT_PRECONDITION
    out.manifest("ok" if code == EXIT_OK else "budget exhausted", code)
    return code


if __name__ == "__main__":
    sys.exit(main())
