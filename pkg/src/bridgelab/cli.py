"""Command-line driver: ``bridgelab <subcommand> [options]``.

Settings resolve as command-line flag, then the ``--config`` INI file (any
section; keys are option names with dashes or underscores), then
``BRIDGELAB_SEED`` for the seed, then built-in defaults.  Every artifact
carries the resolved configuration and library versions, and contains no
timestamps, so equal configurations give byte-identical files.

Exit codes: 0 ok, 2 usage (bad flags, unknown subcommand), 3 invalid
configuration, 4 runtime or numerical failure (including unreadable or
missing input files), 5 insufficient data.  Failures also print a one-line
JSON error record on stderr and write it to ``<output_dir>/error.json``.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME, EXIT_DATA = 0, 2, 3, 4, 5
SEED_ENV = "BRIDGELAB_SEED"


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code, self.kind = code, kind


@dataclass
class RunConfig:
    alpha: float = 5.0 / 8.0
    kappa: float = 8.0 / 3.0
    eps: float = 0.01
    dt: float = 1e-4
    n_steps: int = 10000
    n_samples: int = 10000
    n_traces: int = 10
    seed: int = 0
    output_dir: str = "bridgelab_out"
    override_kappa: bool = False

    def validate(self):
        from .analytic import restriction_params

        for f in ("alpha", "eps", "dt", "n_steps", "n_samples", "n_traces"):
            v = getattr(self, f)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise CliError(EXIT_CONFIG, "config", f"{f} must be positive, got {v!r}")
        if self.seed < 0:
            raise CliError(EXIT_CONFIG, "config", "seed must be non-negative")
        if not self.override_kappa:
            try:
                derived = restriction_params(self.alpha).kappa
            except ValueError as e:
                raise CliError(EXIT_CONFIG, "config", str(e)) from e
            if not math.isclose(self.kappa, derived, rel_tol=1e-12, abs_tol=1e-12):
                raise CliError(EXIT_CONFIG, "config",
                               f"kappa={self.kappa} disagrees with alpha={self.alpha} "
                               f"(expects {derived}); set kappa explicitly to override")


# per-subcommand options: name -> (type, default, help)
_COMMON = {
    "alpha": (float, None, "restriction exponent; fixes kappa = 6/(2 alpha + 1)"),
    "kappa": (float, None, "SLE parameter; overrides the value derived from alpha"),
    "eps": (float, None, "gap half-width / bridge tolerance"),
    "dt": (float, None, "time step"),
    "n_steps": (int, None, "steps per trace"),
    "n_samples": (int, None, "Monte-Carlo samples"),
    "n_traces": (int, None, "number of traces"),
    "seed": (int, None, "root seed"),
    "output_dir": (str, None, "artifact directory"),
}

_EXTRA = {
    "saw-enumerate": {"n_max": (int, 12, "largest walk length")},
    "saw-decompose": {"n": (int, 10, "walk length; enumerated up to 14, pivot-sampled above"),
                      "thin": (int, 100, "pivot moves between samples")},
    "kesten-check": {"n_max": (int, 12, "largest walk length"),
                     "mu": (float, 2.63816, "connective constant")},
    "phi-prime": {"center": (str, "0+1i", "gap centers, comma separated (e.g. 0+1i,0+2i)"),
                  "method": (str, "direct", "direct or splitting"),
                  "n_shards": (int, 10, "independent shards"),
                  "height_cap": (float, None, "stopping height")},
    "kernel-compare": {"x_min": (float, -2.0, ""), "x_max": (float, 2.0, ""),
                       "n_x": (int, 41, ""), "lam_max": (float, 0.9, ""), "n_lam": (int, 19, "")},
    "sle-sample": {"csv": (bool, False, "write CSV traces instead of BLT1"),
                   "coarsen_after": (float, None, "capacity time after which steps grow"),
                   "growth": (float, 2e-4, "step growth factor after coarsen_after")},
    "excursion-sample": {"csv": (bool, False, "write CSV traces instead of BLT1"),
                         "height_cap": (float, 2.0, "stop at this height")},
    "bridges-detect": {"input": (str, None, "trace files or a directory")},
    "decompose": {"input": (str, None, "trace files or a directory")},
    "dim-estimate": {"input": (str, None, "trace files or a directory")},
    "tail-estimate": {"input": (str, None, "trace files or a directory"),
                      "l_min": (float, None, "smallest grid height"),
                      "l_max": (float, None, "largest grid height"),
                      "n_grid": (int, 8, "grid points")},
    "renewal-test": {"n_repeats": (int, 10, "independent repetitions"),
                     "split": (float, 0.6, "renewal level; pieces are read below it"),
                     "min_size": (float, 0.1, "smallest piece height counted")},
    "scale-test": {"n_repeats": (int, 10, "independent repetitions"),
                   "r": (float, 2.0, "scale factor"),
                   "low": (float, 0.3, "lowest bridge height")},
}

# defaults that differ from RunConfig per subcommand
_DEFAULTS = {
    "phi-prime": {"eps": 0.1, "n_samples": 100000},
    "sle-sample": {"dt": 1e-4, "n_steps": 10000, "n_traces": 1},
    "excursion-sample": {"n_traces": 1},
    "renewal-test": {"n_traces": 500, "dt": 2e-3, "n_steps": 600, "eps": 0.05},
    "scale-test": {"n_traces": 500, "dt": 2e-3, "n_steps": 600, "eps": 0.05},
}

COMMANDS = tuple(_EXTRA)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_USAGE, "usage", f"{self.prog}: {message}")


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bridgelab", description="bridge-point experiments")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", metavar="subcommand", parser_class=_Parser)
    for name, extra in _EXTRA.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="INI file with option values")
        for key, (typ, _, hlp) in {**_COMMON, **extra}.items():
            if typ is bool:
                sp.add_argument(_flag(key), dest=key, action="store_true", default=None, help=hlp)
            else:
                sp.add_argument(_flag(key), dest=key, type=typ, default=None, help=hlp)
    return p


def _read_ini(path: str) -> dict:
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except FileNotFoundError as e:
        raise CliError(EXIT_CONFIG, "config", f"config file not found: {path}") from e
    except configparser.Error as e:
        raise CliError(EXIT_CONFIG, "config", f"unreadable config file: {e}") from e
    out = {}
    for sec in cp.sections():
        for k, v in cp.items(sec):
            out[k.replace("-", "_")] = v
    return out


def _coerce(key: str, typ, raw):
    if typ is bool:
        if isinstance(raw, bool):
            return raw
        s = str(raw).strip().lower()
        if s in ("1", "true", "yes", "on"):
            return True
        if s in ("0", "false", "no", "off"):
            return False
        raise CliError(EXIT_CONFIG, "config", f"{key}: not a boolean: {raw!r}")
    try:
        return typ(raw)
    except (TypeError, ValueError) as e:
        raise CliError(EXIT_CONFIG, "config", f"{key}: cannot read {raw!r} as {typ.__name__}") from e


def resolve(args: argparse.Namespace) -> tuple[RunConfig, dict, set]:
    """Merge flags, INI file, environment and defaults.

    Returns the config, the subcommand options and the set of keys that were
    set explicitly (flag or INI).  Without an explicit kappa it is derived
    from alpha; an explicit kappa counts as an override.
    """
    name = args.command
    options = {**_COMMON, **_EXTRA[name]}
    ini = _read_ini(args.config) if args.config else {}
    unknown = sorted(set(ini) - set(options))
    if unknown:
        raise CliError(EXIT_CONFIG, "config", f"unknown config keys for {name}: {unknown}")
    base = {f.name: f.default for f in fields(RunConfig)}
    base.update(_DEFAULTS.get(name, {}))
    for k, (_, d, _) in _EXTRA[name].items():
        base[k] = d
    if SEED_ENV in os.environ:
        base["seed"] = _coerce(SEED_ENV, int, os.environ[SEED_ENV])
    for k, raw in ini.items():
        base[k] = _coerce(k, options[k][0], raw)
    explicit = set(ini)
    for k in options:
        v = getattr(args, k, None)
        if v is not None:
            base[k] = v
            explicit.add(k)
    if name == "excursion-sample" and "dt" not in explicit:
        # keep the walk's per-step jitter well below the gap width
        base["dt"] = 1e-4 if base["eps"] >= 0.05 else (base["eps"] / 10) ** 2
    if "kappa" in explicit:
        base["override_kappa"] = True
    else:
        from .analytic import restriction_params
        try:
            base["kappa"] = restriction_params(base["alpha"]).kappa
        except ValueError as e:
            raise CliError(EXIT_CONFIG, "config", str(e)) from e
    cfg = RunConfig(**{f.name: base[f.name] for f in fields(RunConfig)})
    cfg.validate()
    extra = {k: base[k] for k in _EXTRA[name]}
    return cfg, extra, explicit


# ---------------------------------------------------------------- helpers

def _echo(name: str, cfg: RunConfig, extra: dict) -> dict:
    return {"command": name, **asdict(cfg), **extra}


def _inputs(paths: str | None) -> list[Path]:
    if not paths:
        raise CliError(EXIT_USAGE, "usage", "--input is required")
    out = []
    for part in paths.split(","):
        p = Path(part)
        if p.is_dir():
            out.extend(sorted(q for q in p.iterdir() if q.suffix in (".blt", ".csv")
                              and q.name.startswith("trace_")))
        elif p.exists():
            out.append(p)
        else:
            raise CliError(EXIT_RUNTIME, "missing_input", f"input not found: {p}")
    if not out:
        raise CliError(EXIT_DATA, "insufficient_data", f"no trace files in {paths}")
    return out


def _load(path: Path):
    from .io import load_curve

    try:
        return load_curve(path)
    except (OSError, ValueError, IndexError, KeyError) as e:
        raise CliError(EXIT_RUNTIME, "bad_input", f"cannot read trace {path}: {e}") from e


def _parse_point(s: str) -> complex:
    try:
        return complex(s.replace(" ", "").replace("i", "j"))
    except ValueError as e:
        raise CliError(EXIT_CONFIG, "config", f"not a complex number: {s!r}") from e


def _out(cfg: RunConfig) -> Path:
    d = Path(cfg.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


# ---------------------------------------------------------------- subcommands

def cmd_saw_enumerate(cfg, extra, echo):
    from .io import write_csv
    from .lattice import count_half_plane_walks, enumerate_half_plane_bridges, enumerate_saws

    rows = []
    for n in range(0, extra["n_max"] + 1):
        b, lam = enumerate_half_plane_bridges(n) if n else (1, 0)
        rows.append([n, enumerate_saws(n), count_half_plane_walks(n) if n else 1, b, lam])
    return [write_csv(_out(cfg) / "saw_counts.csv",
                      ["n", "c_n", "half_plane_walks", "bridges", "irreducible_bridges"], rows, echo)]


def cmd_saw_decompose(cfg, extra, echo):
    from collections import Counter

    from .io import write_csv
    from .lattice import concat_walks, decompose_walk, enumerate_half_plane_walks, pivot_chain

    n = extra["n"]
    if n < 1:
        raise CliError(EXIT_CONFIG, "config", "n must be >= 1")
    if n <= 14:
        walks = enumerate_half_plane_walks(n)
    else:
        chain = pivot_chain(n, cfg.seed, thin=extra["thin"])
        walks = (next(chain) for _ in range(cfg.n_samples))
    hist = Counter()
    total = failures = 0
    for w in walks:
        f = decompose_walk(w)
        hist[(len(f.bridges), f.tail is not None)] += 1
        total += 1
        failures += concat_walks(f.parts()) != w
    if failures:
        raise CliError(EXIT_RUNTIME, "numeric", f"{failures} of {total} walks failed the round trip")
    rows = [[k, int(t), c] for (k, t), c in sorted(hist.items())]
    return [write_csv(_out(cfg) / "saw_decompose.csv", ["n_bridges", "has_tail", "count"], rows,
                      {**echo, "walks": total, "round_trip_failures": failures})]


def cmd_kesten_check(cfg, extra, echo):
    from .io import write_csv
    from .lattice import irreducible_counts, kesten_partial_sum

    lam = irreducible_counts(extra["n_max"])
    mu = extra["mu"]
    rows = [[n, lam[n - 1], kesten_partial_sum(n, mu, lam)] for n in range(1, extra["n_max"] + 1)]
    return [write_csv(_out(cfg) / "kesten.csv", ["n_max", "lambda_n", "partial_sum"], rows, echo)]


def cmd_phi_prime(cfg, extra, echo):
    from .analytic import bridge_density_U, two_point_phi_scale
    from .io import write_json
    from .samplers import estimate_phi_prime_mc
    from .types import GapLine

    centers = [_parse_point(s) for s in extra["center"].split(",")]
    try:
        gaps = [GapLine(c, cfg.eps) for c in centers]
    except ValueError as e:
        raise CliError(EXIT_CONFIG, "config", str(e)) from e
    dt = cfg.dt if "dt" in echo["explicit"] else None
    est = estimate_phi_prime_mc(gaps, cfg.n_samples, dt=dt, seed=cfg.seed,
                                method=extra["method"], n_shards=extra["n_shards"],
                                height_cap=extra["height_cap"])
    res = est.to_dict()
    if len(gaps) == 1:
        res["reference"] = bridge_density_U(centers[0]) * cfg.eps ** 2
    elif len(gaps) == 2:
        w, z = sorted(centers, key=lambda c: c.imag)
        res["reference"] = two_point_phi_scale(z, w, cfg.eps, cfg.eps)
    if "reference" in res:
        res["ratio"] = res["mean"] / res["reference"]
    return [write_json(_out(cfg) / "phi_prime.json", res, echo)]


def cmd_kernel_compare(cfg, extra, echo):
    from .analytic import (bridge_density_U, integrated_strip_kernel, strip_kernel_asymptotic,
                           strip_kernel_exact)
    from .io import write_csv

    xs = np.linspace(extra["x_min"], extra["x_max"], extra["n_x"])
    lams = np.linspace(-extra["lam_max"], extra["lam_max"], extra["n_lam"])
    rows = []
    for x in xs:
        for lam in lams:
            e = strip_kernel_exact(cfg.eps, lam, x)
            a = strip_kernel_asymptotic(cfg.eps, lam, x)
            rows.append([float(x), float(lam), e, a, e / a])
    out = [write_csv(_out(cfg) / "kernel_pointwise.csv",
                     ["x", "lam", "exact", "asymptotic", "ratio"], rows, echo)]
    rows = []
    for x in xs:
        i = integrated_strip_kernel(cfg.eps, x)
        u = bridge_density_U(complex(x, 1.0)) * cfg.eps ** 2
        rows.append([float(x), i, u, i / u])
    out.append(write_csv(_out(cfg) / "kernel_integrated.csv",
                         ["x", "integrated_exact", "U_eps2", "ratio"], rows, echo))
    return out


def _write_traces(cfg, extra, echo, make):
    from .experiments import spawn_seeds
    from .io import write_trace, write_trace_csv

    out = []
    ext = ".csv" if extra["csv"] else ".blt"
    for k, s in enumerate(spawn_seeds(cfg.seed, cfg.n_traces)):
        path = _out(cfg) / f"trace_{k:05d}{ext}"
        if not path.exists():  # resume: earlier traces are kept
            curve = make(s)
            cfg_k = {**echo, "trace_index": k, "trace_seed": s, "dt": curve.dt, "seed": s}
            (write_trace_csv if extra["csv"] else write_trace)(path, curve, cfg_k)
        out.append(path)
    return out


def cmd_sle_sample(cfg, extra, echo):
    from .sle import sample_sle_trace

    try:
        return _write_traces(cfg, extra, echo, lambda s: sample_sle_trace(
            cfg.kappa, cfg.n_steps, cfg.dt, s, coarsen_after=extra["coarsen_after"],
            growth=extra["growth"]))
    except ValueError as e:
        raise CliError(EXIT_CONFIG, "config", str(e)) from e


def cmd_excursion_sample(cfg, extra, echo):
    from .samplers import sample_halfplane_excursion

    return _write_traces(cfg, extra, echo,
                         lambda s: sample_halfplane_excursion(cfg.dt, extra["height_cap"], s))


def cmd_bridges_detect(cfg, extra, echo):
    from .bridges import find_bridge_points
    from .io import write_csv

    rows = []
    for path in _inputs(extra["input"]):
        b = find_bridge_points(_load(path), cfg.eps)
        rows += [[path.name, int(i), float(z.real), float(z.imag)]
                 for i, z in zip(b.time_indices, b.points)]
    return [write_csv(_out(cfg) / "bridges.csv", ["trace", "index", "re", "im"], rows, echo)]


def cmd_decompose(cfg, extra, echo):
    from .bridges import decompose_curve
    from .io import write_csv

    rows = []
    for path in _inputs(extra["input"]):
        for k, s in enumerate(decompose_curve(_load(path), cfg.eps)):
            rows.append([path.name, k, s.start_index, s.end_index, s.height, ";".join(s.flags)])
    return [write_csv(_out(cfg) / "segments.csv",
                      ["trace", "segment", "start", "end", "height", "flags"], rows, echo)]


def cmd_dim_estimate(cfg, extra, echo):
    from .estimators import InsufficientDataError
    from .experiments import bridge_dimension
    from .io import read_json, write_json

    ckdir = _out(cfg) / "dim_checkpoints"
    ckdir.mkdir(exist_ok=True)
    fits = []
    for path in _inputs(extra["input"]):
        ck = ckdir / f"{path.stem}_eps{cfg.eps!r}.json"
        if ck.exists():
            fits.append(read_json(ck)["result"])
            continue
        try:
            fit = bridge_dimension(_load(path), cfg.eps).to_dict()
        except InsufficientDataError as e:
            raise CliError(EXIT_DATA, "insufficient_data", f"{path.name}: {e}") from e
        fit["trace"] = path.name
        write_json(ck, fit, echo)
        fits.append(fit)
    ex = np.array([f["exponent"] for f in fits])
    res = {"mean_exponent": float(ex.mean()),
           "std_error": float(ex.std(ddof=1) / math.sqrt(len(ex))) if len(ex) > 1 else None,
           "n_traces": len(fits), "fits": fits}
    return [write_json(_out(cfg) / "dimension.json", res, echo)]


def cmd_tail_estimate(cfg, extra, echo):
    from .estimators import tail_exponent
    from .experiments import segment_heights, tail_grid
    from .io import write_json

    hs, H = [], []
    for path in _inputs(extra["input"]):
        c = _load(path)
        hs.append(segment_heights(c, cfg.eps))
        H.append(c.height())
    hs = np.concatenate(hs)
    if len(hs) == 0:
        raise CliError(EXIT_DATA, "insufficient_data", "no complete segments")
    grid = tail_grid(cfg.eps, float(np.median(H)), extra["n_grid"])
    if extra["l_min"] is not None or extra["l_max"] is not None:
        grid = np.geomspace(extra["l_min"] or grid[0], extra["l_max"] or grid[-1], extra["n_grid"])
    fit = tail_exponent(hs, grid)
    return [write_json(_out(cfg) / "tail.json", fit.to_dict(), echo)]


def _repeats(cfg, extra, echo, fn, fname):
    from .experiments import spawn_seeds
    from .io import write_json

    reps = []
    for k, s in enumerate(spawn_seeds(cfg.seed, extra["n_repeats"])):
        r = fn(s)
        r["repeat"], r["seed"] = k, s
        reps.append(r)
    passed = sum(r["p_value"] > 0.01 for r in reps)
    res = {"repeats": reps, "n_pass": passed, "n_repeats": len(reps)}
    return [write_json(_out(cfg) / fname, res, echo)]


def cmd_renewal_test(cfg, extra, echo):
    from .experiments import renewal_test

    return _repeats(cfg, extra, echo, lambda s: renewal_test(
        cfg.kappa, cfg.n_traces, s, n_steps=cfg.n_steps, dt=cfg.dt, split=extra["split"],
        min_size=extra["min_size"], eps=cfg.eps), "renewal.json")


def cmd_scale_test(cfg, extra, echo):
    from .experiments import scale_test

    return _repeats(cfg, extra, echo, lambda s: scale_test(
        cfg.kappa, cfg.n_traces, s, r=extra["r"], n_steps=cfg.n_steps, dt=cfg.dt,
        eps=cfg.eps, low=extra["low"]), "scale.json")


HANDLERS = {name: globals()["cmd_" + name.replace("-", "_")] for name in COMMANDS}


def _record(err: CliError, output_dir: str | None) -> None:
    rec = {"error": err.kind, "exit_code": err.code, "message": str(err)}
    line = json.dumps(rec, sort_keys=True)
    print(line, file=sys.stderr)
    if output_dir:
        try:
            d = Path(output_dir)
            d.mkdir(parents=True, exist_ok=True)
            (d / "error.json").write_text(line + "\n", encoding="utf-8")
        except OSError:
            pass


def run_subcommand(name: str, argv: list[str] | None = None) -> int:
    return main([name, *(argv or [])])


def main(argv: list[str] | None = None) -> int:
    from .estimators import InsufficientDataError

    parser = build_parser()
    output_dir = None
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise CliError(EXIT_USAGE, "usage", "no subcommand given; choose from "
                           + ", ".join(COMMANDS))
        output_dir = args.output_dir
        cfg, extra, explicit = resolve(args)
        output_dir = cfg.output_dir
        echo = {**_echo(args.command, cfg, extra), "explicit": sorted(explicit)}
        paths = HANDLERS[args.command](cfg, extra, echo)
    except CliError as e:
        _record(e, output_dir)
        return e.code
    except InsufficientDataError as e:
        _record(CliError(EXIT_DATA, "insufficient_data", str(e)), output_dir)
        return EXIT_DATA
    except (ValueError, ZeroDivisionError, ArithmeticError, RuntimeError, OSError) as e:
        _record(CliError(EXIT_RUNTIME, "runtime", f"{type(e).__name__}: {e}"), output_dir)
        return EXIT_RUNTIME
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
