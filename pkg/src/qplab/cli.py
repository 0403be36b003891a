"""Command-line driver: scan campaigns with CSV/JSON tables and SVG plots.

Pipeline shape: a JSON config file (all keys optional) supplies the model
and grid; a handful of flags override individual keys; every artifact
embeds the resolved, result-determining config plus its sha256 so a file
can always be traced back to the run that wrote it.  Precedence is

    built-in defaults  <  --config file  <  command-line flags

Outputs are written in grid order with fixed float formatting, so a
repeated run with the same config produces byte-identical files.

Exit codes: 0 success, 2 config problems, 3 numeric-module errors,
4 resource limits.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import svgplot
from .cocycle import lyapunov_scan
from .errors import QplabError, ResourceError
from .fourier import FourierSeries, ModelParams, cosine_profile, normalize_c1
from .frequencies import (DiophantineParams, Frequency, beta, check_dc,
                          check_sdc, make_liouville)
from .gordon import criterion, gordon_report
from .reducibility import build_conjugation, perturbation_report
from .spectrum import analyze_window, build_finite


class ConfigError(ValueError):
    """Bad or missing configuration input (maps to exit code 2)."""


_FLOAT_FMT = "%.12g"

_SCAN_DEFAULTS = {
    "scan-lyapunov": {
        "E": {"min": -1.0, "max": 6.0, "step": 0.05},
        "n": 100_000,
        "phases": 64,
    },
    "spectrum": {
        "N": 400,
        "theta": 0.0,
        "interval": None,      # null -> Gershgorin bounds of the instance
        "tol": 1e-10,
    },
    "reduce": {
        "divisor_floor": 1e-10,
        "e_max": 0.01,
    },
    "gordon-probe": {
        "E": 0.0,
        "theta": 0.0,
        "stages": None,        # null -> every stage within max_q
        "max_q": 50_000,
    },
    "classify-freq": {
        "n_max": 30,
        "kappa": 0.001,
        "tau": 2.0,
        "n_range": 10_000,
    },
    "phase-diagram": {
        "K_list": [0.5, 1.0, 2.0],
        "E": {"min": 0.0, "max": 4.0, "step": 0.05},
        "n": 20_000,
        "phases": 16,
    },
}

_MODEL_DEFAULTS = {"K": 1.0, "omega": {"golden": 40}, "strip_h": 1.0,
                   "f_modes": None}


# -- config assembly --------------------------------------------------------

def _load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    return doc


def _resolve(args: argparse.Namespace) -> tuple[dict, dict]:
    """Merge defaults, config file, and flags.

    Returns (resolved, runtime): resolved is the result-determining part
    (hashed and embedded in outputs); runtime carries out/workers, which
    change where and how fast results appear but not what they are.
    """
    file_cfg = _load_config_file(args.config) if args.config else {}
    model = dict(_MODEL_DEFAULTS)
    model.update(_section(file_cfg, "model"))
    scan = dict(_SCAN_DEFAULTS[args.command])
    scan.update(_section(file_cfg, "scan"))
    scan.pop("kind", None)  # command name is authoritative

    if args.K is not None:
        model["K"] = args.K
    for key in ("n", "phases", "theta", "N", "n_max", "n_range", "E_probe"):
        val = getattr(args, key, None)
        if val is not None:
            scan["E" if key == "E_probe" else key] = val
    for key in ("E_min", "E_max", "E_step"):
        val = getattr(args, key, None)
        if val is not None:
            grid = dict(scan.get("E") or {})
            grid[key[2:].lower()] = val
            scan["E"] = grid
    if getattr(args, "K_list", None) is not None:
        try:
            scan["K_list"] = [float(tok) for tok in args.K_list.split(",") if tok]
        except ValueError as exc:
            raise ConfigError(f"bad --k-list value: {args.K_list!r}") from exc

    seed = args.seed if args.seed is not None else file_cfg.get("seed", 0)
    if not isinstance(seed, int) or seed < 0 or seed > 2**64 - 1:
        raise ConfigError("seed must be an integer in [0, 2^64)")
    resolved = {"command": args.command, "model": model, "scan": scan,
                "seed": seed}
    runtime = {
        "out": Path(args.out if args.out is not None
                    else file_cfg.get("out", "qplab-out")),
        "workers": int(args.workers if args.workers is not None
                       else file_cfg.get("workers", 1)),
    }
    if runtime["workers"] < 1:
        raise ConfigError("workers must be >= 1")
    return resolved, runtime


def _section(cfg: dict, name: str) -> dict:
    sec = cfg.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    return sec


def _build_frequency(spec) -> Frequency:
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError(
            "omega must be exactly one of "
            '{"golden": terms}, {"cf": [...]}, {"fraction": [p, q]}, '
            '{"liouville": {"target_beta": b, "n_terms": n}}'
        )
    kind, body = next(iter(spec.items()))
    try:
        if kind == "golden":
            return Frequency.golden(int(body))
        if kind == "cf":
            return Frequency.from_cf([int(a) for a in body], note="config")
        if kind == "fraction":
            p, q = body
            return Frequency.from_fraction(Fraction(int(p), int(q)))
        if kind == "liouville":
            return make_liouville(
                float(body["target_beta"]), int(body["n_terms"]),
                max_digits=int(body.get("max_digits", 10_000)))
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad omega spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown omega kind {kind!r}")


def _build_model(model_cfg: dict, K_override: float | None = None) -> ModelParams:
    try:
        K = float(model_cfg["K"] if K_override is None else K_override)
        strip_h = float(model_cfg["strip_h"])
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad model section: {exc}") from exc
    omega = _build_frequency(model_cfg["omega"])
    modes_cfg = model_cfg.get("f_modes")
    if modes_cfg is None:
        profile = cosine_profile(strip_h)
    else:
        try:
            modes = {int(k): float(v) for k, v in modes_cfg.items()}
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(
                "f_modes must map mode index to a real coefficient") from exc
        profile = normalize_c1(
            FourierSeries.from_modes(modes, strip_h=strip_h))
    return ModelParams(profile, K, omega)


def _omega_id(omega: Frequency) -> str:
    if omega.note == "golden":
        return "golden"
    digest = hashlib.sha256(
        json.dumps([int(a) for a in omega.cf]).encode()).hexdigest()
    return "w-" + digest[:8]


def _energy_grid(grid_cfg) -> np.ndarray:
    try:
        lo = float(grid_cfg["min"])
        hi = float(grid_cfg["max"])
        step = float(grid_cfg["step"])
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"E grid needs min/max/step: {exc}") from exc
    if not (step > 0.0 and math.isfinite(step)):
        raise ConfigError("E grid step must be positive")
    if hi < lo:
        raise ConfigError("E grid max must be >= min")
    count = int(round((hi - lo) / step)) + 1
    return lo + np.arange(count) * step


# -- artifact writers -------------------------------------------------------

def _canonical(resolved: dict) -> tuple[str, str]:
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return blob, hashlib.sha256(blob.encode()).hexdigest()


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _FLOAT_FMT % v
    return str(v)


def _write_csv(path: Path, resolved: dict, columns: list[str], rows) -> None:
    blob, sha = _canonical(resolved)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# qplab={__version__} numpy={np.__version__} "
                 f"scipy={scipy.__version__} config_sha256={sha}\n")
        fh.write(f"# config={blob}\n")
        fh.write(f"# columns={','.join(columns)}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _sanitize(obj):
    """JSON-safe copy: non-finite floats become their repr strings."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    return obj


def _write_json(path: Path, resolved: dict, payload: dict) -> None:
    blob, sha = _canonical(resolved)
    doc = {"qplab": __version__, "numpy": np.__version__,
           "scipy": scipy.__version__, "config_sha256": sha,
           "config": json.loads(blob), "result": _sanitize(payload)}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- commands ---------------------------------------------------------------

def _scan_chunk(params: ModelParams, energies: list[float], n: int,
                phases: int) -> list[tuple[float, float, float]]:
    ests = lyapunov_scan(params, energies, n=n, phase_grid_size=phases)
    return [(e.energy, e.value, e.stderr) for e in ests]


def _scan_energies(params: ModelParams, energies: np.ndarray, n: int,
                   phases: int, workers: int) -> list[tuple[float, float, float]]:
    if workers <= 1 or energies.size <= 1:
        return _scan_chunk(params, energies.tolist(), n, phases)
    chunks = np.array_split(energies, min(workers, energies.size))
    out: list[tuple[float, float, float]] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_scan_chunk, params, c.tolist(), n, phases)
                   for c in chunks if c.size]
        for fut in futures:
            out.extend(fut.result())
    return out


def _cmd_scan_lyapunov(resolved: dict, runtime: dict) -> int:
    scan = resolved["scan"]
    params = _build_model(resolved["model"])
    energies = _energy_grid(scan["E"])
    n = int(scan["n"])
    phases = int(scan["phases"])
    rows_raw = _scan_energies(params, energies, n, phases, runtime["workers"])
    oid = _omega_id(params.omega)
    rows = [(e, oid, params.K, n, phases, val, err)
            for e, val, err in rows_raw]
    out = runtime["out"]
    _write_csv(out / "lyapunov.csv", resolved,
               ["E", "omega_id", "K", "n", "phases", "L", "stderr"], rows)
    svgplot.line_plot(out / "lyapunov.svg", [r[0] for r in rows],
                      [[r[5] for r in rows]], [f"K={params.K:g}"],
                      "Lyapunov exponent scan", "E", "L(E)")
    return 0


def _cmd_spectrum(resolved: dict, runtime: dict) -> int:
    scan = resolved["scan"]
    params = _build_model(resolved["model"])
    N = int(scan["N"])
    theta = float(scan["theta"])
    interval = scan.get("interval")
    if interval is None:
        interval = build_finite(params, theta, N).gershgorin()
    result = analyze_window(params, theta, N, tuple(map(float, interval)),
                            tol=float(scan["tol"]))
    rows = [(theta, N, i, float(result.eigenvalues[i]),
             float(result.residuals[i]), float(result.decay_rates[i]),
             float(result.fit_qualities[i]))
            for i in range(result.eigenvalues.size)]
    out = runtime["out"]
    _write_csv(out / "spectrum.csv", resolved,
               ["theta", "N", "index", "E", "residual", "decay_rate",
                "fit_quality"], rows)
    if rows:
        svgplot.ladder_plot(out / "spectrum.svg", [r[3] for r in rows],
                            f"Eigenvalues, N={N}, theta={theta:g}")
    return 0


def _cmd_reduce(resolved: dict, runtime: dict) -> int:
    scan = resolved["scan"]
    params = _build_model(resolved["model"])
    conj = build_conjugation(params, float(scan["divisor_floor"]))
    pert = perturbation_report(conj, float(scan["e_max"]))
    payload = {"report": conj.report(),
               "perturbation": dataclasses.asdict(pert)}
    _write_json(runtime["out"] / "reduce.json", resolved, payload)
    return 0


def _cmd_gordon(resolved: dict, runtime: dict) -> int:
    scan = resolved["scan"]
    params = _build_model(resolved["model"])
    stages = scan.get("stages")
    report = gordon_report(params, float(scan["E"]), float(scan["theta"]),
                           stages=stages, max_q=int(scan["max_q"]))
    payload = report.to_dict()
    payload["E"] = float(scan["E"])
    payload["theta"] = float(scan["theta"])
    _write_json(runtime["out"] / "gordon.json", resolved, payload)
    return 0


def _cmd_classify(resolved: dict, runtime: dict) -> int:
    scan = resolved["scan"]
    params = _build_model(resolved["model"])
    omega = params.omega
    est = beta(omega, int(scan["n_max"]))
    dc = check_dc(omega, DiophantineParams(float(scan["kappa"]),
                                           float(scan["tau"])),
                  int(scan["n_range"]))
    sdc = check_sdc(omega, float(scan["kappa"]), int(scan["n_range"]))
    crit = criterion(params)
    payload = {
        "omega_id": _omega_id(omega),
        "omega": omega.to_json(),
        "beta": {
            "value": est.value, "tail": est.tail, "n_max": est.n_max,
            "stages": [{"n": s.n, "q": s.q_n, "a_next": s.a_next,
                        "growth": s.growth, "full": s.full}
                       for s in est.stages],
        },
        "dc": _check_dict(dc),
        "sdc": _check_dict(sdc),
        "criterion": dataclasses.asdict(crit),
    }
    _write_json(runtime["out"] / "classify.json", resolved, payload)
    return 0


def _check_dict(check) -> dict:
    d = {"kind": check.kind, "passed": check.passed,
         "indeterminate": check.indeterminate, "n_range": check.n_range,
         "margin": check.margin}
    if check.witness is not None:
        d["witness"] = {"n": check.witness.n,
                        "distance": check.witness.distance,
                        "threshold": check.witness.threshold,
                        "margin": check.witness.margin}
    return d


def _cmd_phase_diagram(resolved: dict, runtime: dict) -> int:
    scan = resolved["scan"]
    K_list = [float(k) for k in scan["K_list"]]
    if not K_list:
        raise ConfigError("phase-diagram needs a non-empty K_list")
    energies = _energy_grid(scan["E"])
    n = int(scan["n"])
    phases = int(scan["phases"])
    rows = []
    curves = []
    oid = None
    for K in K_list:
        params = _build_model(resolved["model"], K_override=K)
        oid = oid or _omega_id(params.omega)
        got = _scan_energies(params, energies, n, phases, runtime["workers"])
        curves.append([val for _, val, _ in got])
        rows.extend((K, e, oid, n, phases, val, err) for e, val, err in got)
    out = runtime["out"]
    _write_csv(out / "phase_diagram.csv", resolved,
               ["K", "E", "omega_id", "n", "phases", "L", "stderr"], rows)
    svgplot.line_plot(out / "phase_diagram.svg", energies.tolist(), curves,
                      [f"K={K:g}" for K in K_list],
                      "Lyapunov exponent by coupling", "E", "L(E)")
    return 0


_COMMANDS = {
    "scan-lyapunov": _cmd_scan_lyapunov,
    "spectrum": _cmd_spectrum,
    "reduce": _cmd_reduce,
    "gordon-probe": _cmd_gordon,
    "classify-freq": _cmd_classify,
    "phase-diagram": _cmd_phase_diagram,
}


# -- argument parsing and entry point ---------------------------------------

def _add_shared(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", metavar="PATH",
                     help="JSON config file (see README for the schema)")
    sub.add_argument("--out", metavar="DIR",
                     help="output directory (default qplab-out)")
    sub.add_argument("--workers", type=int, metavar="N",
                     help="worker processes for grid scans (default 1)")
    sub.add_argument("--seed", type=int, metavar="U64",
                     help="recorded in output headers; reserved for "
                          "randomized probes")
    sub.add_argument("--K", type=float, help="coupling strength override")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qplab",
        description="Scans and probes for a quasi-periodic operator family.")
    parser.add_argument("--version", action="version",
                        version=f"qplab {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("scan-lyapunov",
                        help="Lyapunov exponent over an energy grid")
    _add_shared(p)
    p.add_argument("--E-min", dest="E_min", type=float)
    p.add_argument("--E-max", dest="E_max", type=float)
    p.add_argument("--E-step", dest="E_step", type=float)
    p.add_argument("--n", type=int, help="cocycle steps per estimate")
    p.add_argument("--phases", type=int, help="phase-average grid size")

    p = subs.add_parser("spectrum",
                        help="finite-volume eigenvalues with decay fits")
    _add_shared(p)
    p.add_argument("--N", type=int, help="truncation size")
    p.add_argument("--theta", type=float, help="orbit starting phase")

    p = subs.add_parser("reduce",
                        help="energy-zero conjugation report")
    _add_shared(p)

    p = subs.add_parser("gordon-probe",
                        help="approximant gaps and period-block bounds")
    _add_shared(p)
    p.add_argument("--E", dest="E_probe", type=float, help="probe energy")
    p.add_argument("--theta", type=float, help="probe phase")

    p = subs.add_parser("classify-freq",
                        help="beta proxy, Diophantine checks, criterion")
    _add_shared(p)
    p.add_argument("--n-max", dest="n_max", type=int,
                   help="continued-fraction stages for the beta proxy")
    p.add_argument("--n-range", dest="n_range", type=int,
                   help="scan range for the Diophantine checks")

    p = subs.add_parser("phase-diagram",
                        help="Lyapunov curves for a list of couplings")
    _add_shared(p)
    p.add_argument("--k-list", dest="K_list", metavar="K1,K2,...",
                   help="comma-separated coupling values")
    p.add_argument("--E-min", dest="E_min", type=float)
    p.add_argument("--E-max", dest="E_max", type=float)
    p.add_argument("--E-step", dest="E_step", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--phases", type=int)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        resolved, runtime = _resolve(args)
        runtime["out"].mkdir(parents=True, exist_ok=True)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](resolved, runtime)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 4
    except QplabError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
