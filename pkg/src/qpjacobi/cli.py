"""Command-line front end: ``qpjacobi <subcommand> --config cfg.json``."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import __version__
from .avalanche import PartitionScheme, ap_residual, pregner_bound
from .cache import ResultCache, inputs_digest
from .complexan import (
    ContourThroughZero,
    Disk,
    NoAdjustedInteger,
    NonConvergence,
    adjusted_radius,
    find_adjusted,
    jensen_average,
    winding_count,
    zero_count_disk,
)
from .config import ConfigError, ExperimentConfig
from .ids import (
    EtaOutOfRange,
    InsufficientSignal,
    holder_energies,
    holder_fit,
    ids_curve,
    theorem_gate,
    wegner_integral,
)
from .lyapunov import estimate_L
from .orbit import IndexInterval, phase_grid
from .transfer import det_f_a, identity_residuals

SUBCOMMANDS = ("lyapunov", "ids", "wegner", "holder", "zeros", "jensen", "ap", "adjust", "identities", "gate")
AP_PARTS = 8
AP_DPS = 60
IDS_CURVE_POINTS = 201


def _energies(cfg):
    g = cfg.grids
    return [float(e) for e in np.linspace(g.energy_interval[0], g.energy_interval[1], g.energy_count)]


def _mid_energy(cfg):
    es = _energies(cfg)
    return es[len(es) // 2]


def _trial_phases(cfg):
    return [float(x) for x in phase_grid(cfg.grids.trials, cfg.seed)]


# Each runner returns (columns, rows, extras).  Rows hold plain JSON-able values.


def run_lyapunov(cfg, model, omega, pool):
    jobs = [(N, E) for N in cfg.scales.N for E in _energies(cfg)]

    def one(job):
        N, E = job
        est = estimate_L(model, 0.0, omega, E, N, cfg.grids.M, cfg.seed)
        return [N, E, est.L, est.L_a, est.D, est.std_error]

    rows = list(pool.map(one, jobs))
    return ["N", "E", "L", "L_a", "D", "std_error"], rows, {}


def run_ids(cfg, model, omega, pool):
    bound = model.sup_norm_bound()
    energies = np.linspace(-bound, bound, IDS_CURVE_POINTS)
    curves = list(pool.map(lambda N: ids_curve(model, omega, N, energies, cfg.grids.M, cfg.seed), cfg.scales.N))
    rows = [[c.N, E, v, s] for c in curves for E, v, s in zip(c.energies, c.values, c.std_errors)]
    plot = [{"N": c.N, "energies": list(c.energies), "values": list(c.values)} for c in curves]
    return ["N", "E", "ids", "std_error"], rows, {"curves": plot}


def run_wegner(cfg, model, omega, pool):
    p = float(model.p)
    errors = []
    jobs = [(N, f / N, E) for N in cfg.scales.N for f in cfg.grids.eta_factors for E in _energies(cfg)]
    phases = _trial_phases(cfg)

    def one(job):
        N, eta, E = job
        try:
            w = wegner_integral(model, omega, N, E, eta, cfg.grids.M, cfg.seed, cfg.grids.eps_holder, p)
        except EtaOutOfRange as exc:
            return None, {"N": N, "eta": eta, "E": E, "error": str(exc)}
        reps = [pregner_bound(model, x, omega, E, eta, N, eta**cfg.grids.rho_power) for x in phases]
        K_size = float(np.mean([r.K_size for r in reps]))
        holds = float(np.mean([r.holds for r in reps]))
        return [N, E, eta, w.integral, w.bound, w.passed, K_size, cfg.seed, holds], None

    rows = []
    for row, err in pool.map(one, jobs):
        if err:
            errors.append(err)
        else:
            rows.append(row)
    cols = ["E", "eta", "integral", "bound", "pass", "K_size", "seed", "pregner_holds"]
    return ["N"] + cols, rows, {"errors": errors}


def run_holder(cfg, model, omega, pool):
    g, N = cfg.grids, cfg.scales.holder_N
    eta = np.geomspace(g.holder_eta[0], g.holder_eta[1], g.holder_eta_count)
    energies = holder_energies(model, omega, N, g.holder_energy_count, g.M, cfg.seed)

    def one(E):
        try:
            return holder_fit(model, omega, N, float(E), eta, g.M, cfg.seed, g.eps_holder), None
        except InsufficientSignal as exc:
            return None, {"E": float(E), "error": str(exc)}

    rows, fits, errors = [], [], []
    for fit, err in pool.map(one, energies):
        if err:
            errors.append(err)
            continue
        fits.append({"E": fit.E, "eta_grid": list(fit.eta_grid), "moduli": list(fit.moduli), "exponent": fit.exponent})
        rows.append([N, fit.E, fit.exponent, fit.r_squared, fit.predicted_p, fit.exponent_vs_p, fit.points_used])
    cols = ["N", "E", "exponent", "r_squared", "predicted_p", "exponent_vs_p", "points_used"]
    return cols, rows, {"fits": fits, "errors": errors}


def run_zeros(cfg, model, omega, pool):
    E = _mid_energy(cfg)
    jobs = [(N, x) for N in cfg.scales.N for x in _trial_phases(cfg)]

    def one(job):
        N, x = job
        bound = math.log(N) ** 3
        try:
            res = zero_count_disk(model, omega, E, N, x, 1.0 / N)
            return [N, E, x, 1.0 / N, res.count, bound, res.count <= bound], None
        except (ContourThroughZero, NonConvergence) as exc:
            return None, {"N": N, "x0": x, "error": str(exc)}

    rows, errors = _collect(pool.map(one, jobs))
    return ["N", "E", "x0", "r", "count", "log_bound", "within"], rows, {"errors": errors}


def run_jensen(cfg, model, omega, pool):
    E, eps = _mid_energy(cfg), cfg.grids.jensen_eps
    jobs = [(N, x) for N in cfg.scales.N for x in _trial_phases(cfg)]

    def one(job):
        N, x = job
        r = 1.0 / N
        f = lambda z: det_f_a(model, z, omega, E, N)  # noqa: E731
        try:
            J = jensen_average(lambda Z: np.asarray(f(Z).log_abs()), x, r, eps).value
            inner = winding_count(f, Disk(complex(x), (1 - eps) * r)).count
            outer = winding_count(f, Disk(complex(x), (1 + eps) * r)).count
        except (ArithmeticError, NonConvergence) as exc:
            return None, {"N": N, "x0": x, "error": str(exc)}
        return [N, E, x, r, eps, J, inner, outer, inner - 0.05 <= J <= outer + 0.05], None

    rows, errors = _collect(pool.map(one, jobs))
    cols = ["N", "E", "x0", "r", "epsilon", "J", "nu_inner", "nu_outer", "bracketed"]
    return cols, rows, {"errors": errors}


def run_ap(cfg, model, omega, pool):
    E = _mid_energy(cfg)
    jobs = [(l, x) for l in (cfg.scales.l, 2 * cfg.scales.l) for x in _trial_phases(cfg)]

    def one(job):
        l, x = job
        scheme = PartitionScheme.regular(AP_PARTS, l)
        hi = ap_residual(model, x, omega, E, scheme, "determinant", dps=AP_DPS)
        lo = ap_residual(model, x, omega, E, scheme, "determinant")
        return [l, AP_PARTS, E, x, hi, lo]

    rows = list(pool.map(one, jobs))
    return ["l", "m", "E", "x", "residual", "residual_float64"], rows, {}


def run_adjust(cfg, model, omega, pool):
    E, l = _mid_energy(cfg), cfg.scales.l
    r0 = adjusted_radius(l)

    def one(x):
        try:
            s1 = find_adjusted(model, omega, E, x, r0, l, 0)
            s2 = find_adjusted(model, omega, E, x, r0, l, s1 + l * l, search_radius=l * l // 2)
            count = zero_count_disk(model, omega, E, IndexInterval(s1, s2 - 1), x, r0).count
        except (NoAdjustedInteger, ContourThroughZero, NonConvergence) as exc:
            return None, {"x0": x, "error": str(exc)}
        return [l, E, x, r0, s1, s2, count, 2 * model.d0, count <= 2 * model.d0], None

    rows, errors = _collect(pool.map(one, _trial_phases(cfg)))
    cols = ["l", "E", "x0", "r0", "start", "end", "count", "bound", "within"]
    return cols, rows, {"errors": errors}


def run_identities(cfg, model, omega, pool):
    tol = cfg.tolerances.identity
    jobs = [(N, E) for N in cfg.scales.N for E in _energies(cfg)]
    phases = np.array(_trial_phases(cfg))

    def one(job):
        N, E = job
        res = identity_residuals(model, phases, omega, E, IndexInterval.of_length(N))
        out = []
        for i, x in enumerate(phases):
            vals = [float(np.atleast_1d(res[k])[i]) for k in ("mu_ma", "ma_fa", "det")]
            ok = all(v < tol for v in vals if not math.isnan(v))
            out.append([N, E, float(x)] + vals + [ok])
        return out

    rows = [r for block in pool.map(one, jobs) for r in block]
    return ["N", "E", "x", "mu_ma", "ma_fa", "det", "pass"], rows, {}


def run_gate(cfg, model, omega, pool):
    rep = theorem_gate(cfg).to_dict()
    rows = []
    for r in rep["lyapunov"]:
        rows.append(["lyapunov", "", r["E"], "", r["L"], cfg.tolerances.gamma, r["above_gamma"]])
    for r in rep["wegner"]:
        rows.append(["wegner", r["N"], r["E"], r["eta"], r["integral"], r["bound"], r["pass"]])
    for r in rep["holder"]:
        if "exponent" in r:
            rows.append(["holder", cfg.scales.holder_N, r["E"], "", r["exponent"],
                         r["predicted_p"] - cfg.grids.eps_holder, r["exponent"] >= r["predicted_p"] - cfg.grids.eps_holder])
    rows.append(["gate", "", "", "", rep["p"], "", rep["pass"]])
    return ["stage", "N", "E", "eta", "value", "bound", "pass"], rows, {"report": rep}


RUNNERS = {name: globals()[f"run_{name}"] for name in SUBCOMMANDS}


def _collect(results):
    rows, errors = [], []
    for row, err in results:
        if err:
            errors.append(err)
        else:
            rows.append(row)
    return rows, errors


# ---------------------------------------------------------------------------
# output


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(columns, rows, config_hash) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["config_hash"] + list(columns))
    for row in rows:
        w.writerow([config_hash] + [_cell(v) for v in row])
    return buf.getvalue()


def _plain(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write_svgs(sub, extras, out: Path, stem: str) -> list:
    from .plots import ids_staircase_svg, loglog_moduli_svg

    written = []
    curves = extras.get("curves")
    fits = extras.get("fits")
    if sub == "gate":
        fits = [f for f in extras["report"]["holder"] if "exponent" in f]
    if curves:
        path = out / f"{stem}_ids.svg"
        ids_staircase_svg([(c["N"], c["energies"], c["values"]) for c in curves], path)
        written.append(path.name)
    if fits:
        path = out / f"{stem}_moduli.svg"
        loglog_moduli_svg([SimpleNamespace(**f) for f in fits], path)
        written.append(path.name)
    return written


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpjacobi", description="Quasi-periodic Jacobi operator experiments.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default=None, help="output directory (default: config output_dir)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--svg", action="store_true", help="also write SVG figures")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--no-cache", action="store_true")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config)
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {args.config}: {exc}", file=sys.stderr)
        return 1
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = cfg.build_model()
    omega = cfg.frequency.value
    chash = cfg.digest()
    sub = args.subcommand

    cache = None if args.no_cache else ResultCache(out / ".cache")
    digest = inputs_digest({"subcommand": sub, "config": cfg.to_dict()})
    payload = cache.get(chash, sub, digest) if cache else None
    if payload is None:
        t0 = time.perf_counter()
        with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
            columns, rows, extras = RUNNERS[sub](cfg, model, omega, pool)
        payload = _plain({"columns": columns, "rows": rows, "extras": extras})
        if cache:
            cache.put(chash, sub, digest, payload, time.perf_counter() - t0)

    columns, rows, extras = payload["columns"], payload["rows"], payload["extras"]
    if args.format == "csv":
        (out / f"{sub}.csv").write_text(render_csv(columns, rows, chash), encoding="utf-8")
    else:
        records = [dict(zip(["config_hash"] + columns, [chash] + r)) for r in rows]
        (out / f"{sub}.json").write_text(_dump(records), encoding="utf-8")
    svgs = _write_svgs(sub, extras, out, sub) if args.svg else []
    sidecar = {
        "subcommand": sub,
        "version": __version__,
        "config_hash": chash,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "columns": ["config_hash"] + columns,
        "extras": extras,
        "svg": svgs,
    }
    (out / f"{sub}.meta.json").write_text(_dump(sidecar), encoding="utf-8")
    if sub == "gate" and extras["report"]["hypothesis_violated"]:
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
