"""Command-line interface: ``ehaoi {analyze,sweep,simulate,qbd,selftest}``.

Exit codes: 0 ok, 2 invalid parameters, 3 divergent penalty,
4 unsupported combination, 5 solver non-convergence.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import analysis, asymptotics, qbd
from .errors import AoIError, InvalidParams, ModeUnsupported, NotConverged, PenaltyDiverges
from .model import (MAX_CAPACITY, Discipline, Exponential, Linear, Penalty, Step,
                    SystemParams, parse_penalty, validate_params)
from .sim import SimConfig, run_sim, write_event_log

ENV_OUTPUT_DIR = "EHAOI_OUTPUT_DIR"

EXIT_OK, EXIT_INVALID, EXIT_DIVERGES, EXIT_UNSUPPORTED, EXIT_NOT_CONVERGED = 0, 2, 3, 4, 5

ANALYZE_COLUMNS = ("theta", "lambda", "r", "K", "B", "discipline", "penalty", "alpha", "beta",
                   "valid_rate", "avg_aoi", "peak_mean", "avg_penalty", "engine_penalty",
                   "violation_prob", "agreement")
SWEEP_COLUMNS = ("theta", "lambda", "r", "K", "B", "discipline", "penalty", "alpha", "beta",
                 "metric", "value", "method")
SWEEP_METRICS = ("valid_rate", "avg_aoi", "peak_mean", "avg_penalty", "engine_penalty",
                 "violation_prob", "asymptotic_penalty")
SWEEPABLE = ("theta", "lambda", "r", "K", "B", "beta", "alpha")
COMPARE_COLUMNS = ("metric", "analytic", "simulated", "relative_error")
QBD_COLUMNS = ("lambda", "r", "mu", "B", "avg_peak_aoi", "mean_sojourn", "mean_queue_length",
               "iterations", "residual", "spectral_radius", "status")


# --------------------------------------------------------------------------
# output formatting


def _json_value(x) -> str:
    if isinstance(x, (bool, np.bool_)) or x is None:
        return json.dumps(None if x is None else bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(v)}" for k, v in x.items()) + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_json_value(v) for v in x) + "]"
    raise TypeError(f"cannot serialize {type(x).__name__}")


def to_json(obj) -> str:
    """JSON with every float at 17 significant digits; NaN and inf become null."""
    return _json_value(obj) + "\n"


def _csv_cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return str(x)


def to_csv(rows: Sequence[Dict], columns: Sequence[str]) -> str:
    """CSV with floats at 12 significant digits and a fixed column order."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_csv_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def output_path(path: Optional[str]) -> Optional[str]:
    """Resolve relative output paths against ``$EHAOI_OUTPUT_DIR`` when it is set."""
    if path is None or path == "-":
        return None
    base = os.environ.get(ENV_OUTPUT_DIR)
    if base and not os.path.isabs(path):
        os.makedirs(base, exist_ok=True)
        return os.path.join(base, path)
    return path


def _emit(text: str, path: Optional[str]) -> None:
    target = output_path(path)
    if target is None:
        sys.stdout.write(text)
    else:
        with open(target, "w", newline="") as fh:
            fh.write(text)


# --------------------------------------------------------------------------
# parameter handling


def _penalty_from_args(kind: str, alpha, beta) -> Penalty:
    if kind in ("exp", "exponential") and alpha == 0:
        raise InvalidParams("alpha must be nonzero; alpha -> 0 is the linear penalty")
    try:
        return parse_penalty(kind, alpha, beta)
    except InvalidParams:
        raise
    except ValueError as exc:
        raise InvalidParams(str(exc)) from exc


def _params_from_args(args, mu=None) -> SystemParams:
    r = float(args.rate)
    if args.theta is not None:
        if args.lam is not None:
            raise InvalidParams("give either --lambda or --theta, not both")
        lam = float(args.theta) * r
    elif args.lam is not None:
        lam = float(args.lam)
    else:
        raise InvalidParams("--lambda (or --theta) is required")
    return validate_params(SystemParams(lam, r, args.buffer, args.battery, mu))


def _add_point_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--discipline", choices=[d.value for d in Discipline])
    sp.add_argument("--lambda", dest="lam", type=float, help="status arrival rate")
    sp.add_argument("--theta", type=float, help="lambda / r; alternative to --lambda")
    sp.add_argument("--rate", type=float, help="energy arrival rate r")
    sp.add_argument("--buffer", type=int, help="data buffer capacity K")
    sp.add_argument("--battery", type=int, help="battery capacity B")
    sp.add_argument("--penalty", choices=["linear", "exp", "step"])
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--beta", type=float)


def _add_io_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--format", choices=["json", "csv"])
    sp.add_argument("--output", help="file to write (default stdout)")
    sp.add_argument("--config", help="flat key = value file mirroring the flags")


POINT_DEFAULTS = {"discipline": "fcfs", "rate": 1.0, "buffer": 5, "battery": 1,
                  "penalty": "linear", "format": "json"}


def apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace,
                 defaults: Dict[str, object]) -> argparse.Namespace:
    """Fill unset flags from ``--config``, then from ``defaults``.

    Keys in the file are flag names without dashes; flags given on the command
    line win.
    """
    by_flag = {}
    for act in parser._actions:
        for opt in act.option_strings:
            if opt.startswith("--"):
                by_flag[opt[2:]] = act
    if getattr(args, "config", None):
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        with open(args.config) as fh:
            cp.read_string("[config]\n" + fh.read())
        for key, raw in cp["config"].items():
            act = by_flag.get(key.replace("_", "-")) or by_flag.get(key)
            if act is None:
                raise InvalidParams(f"unknown config key {key!r}")
            if getattr(args, act.dest) not in (None, False):
                continue
            if isinstance(act, argparse._StoreTrueAction):
                val = raw.strip().lower() in ("1", "true", "yes", "on")
            else:
                val = act.type(raw) if act.type else raw
                if act.choices is not None and val not in act.choices:
                    raise InvalidParams(f"config {key}={raw!r} is not one of {list(act.choices)}")
            setattr(args, act.dest, val)
    for dest, val in defaults.items():
        if getattr(args, dest, None) is None:
            setattr(args, dest, val)
    return args


# --------------------------------------------------------------------------
# analyze


def cmd_analyze(args) -> int:
    p = _params_from_args(args)
    spec = _penalty_from_args(args.penalty, args.alpha, args.beta)
    rec = analysis.analyze_point(p, Discipline(args.discipline), spec, args.beta)
    if args.format == "csv":
        _emit(to_csv([rec], ANALYZE_COLUMNS), args.output)
    else:
        _emit(to_json({c: rec[c] for c in ANALYZE_COLUMNS}), args.output)
    return EXIT_OK


# --------------------------------------------------------------------------
# sweep


@dataclass
class SweepSpec:
    swept: str
    start: float
    stop: float
    steps: int
    log: bool = False
    fixed: Dict[str, object] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=lambda: ["avg_penalty"])

    def grid(self) -> np.ndarray:
        if self.swept not in SWEEPABLE:
            raise InvalidParams(f"cannot sweep {self.swept!r}; choose from {SWEEPABLE}")
        if self.steps < 2:
            raise InvalidParams("steps must be >= 2")
        if self.log:
            if self.start <= 0 or self.stop <= 0:
                raise InvalidParams("log spacing needs positive endpoints")
            g = np.geomspace(self.start, self.stop, self.steps)
        else:
            g = np.linspace(self.start, self.stop, self.steps)
            # linspace leaves round-off where the grid crosses zero
            g[np.abs(g) < 1e-12 * max(abs(self.start), abs(self.stop))] = 0.0
        if self.swept in ("K", "B"):
            rounded = np.round(g)
            if np.any(np.abs(rounded - g) > 1e-9):
                raise InvalidParams(f"{self.swept} grid must land on integers")
            g = rounded.astype(int)
        return g

    def point(self, x) -> "SweepPoint":
        f = dict(self.fixed)
        f[self.swept] = x
        r = float(f["r"])
        if self.swept == "theta" or (f.get("theta") is not None and self.swept != "lambda"):
            lam = float(f["theta"]) * r
        else:
            lam = float(f["lambda"])
        p = validate_params(SystemParams(lam, r, int(f["K"]), int(f["B"])))
        kind = f["penalty"]
        alpha, beta = f.get("alpha"), f.get("beta")
        if kind == "exp" and alpha == 0:
            spec: Penalty = Linear()  # the alpha -> 0 limit
        else:
            spec = _penalty_from_args(kind, alpha, beta)
        return SweepPoint(p, Discipline(f["discipline"]), spec,
                          None if alpha is None else float(alpha),
                          None if beta is None else float(beta))


@dataclass
class SweepPoint:
    params: SystemParams
    discipline: Discipline
    spec: Penalty
    alpha: Optional[float]
    beta: Optional[float]


def _metric(pt: SweepPoint, metric: str):
    p, d, spec = pt.params, pt.discipline, pt.spec
    if metric == "valid_rate":
        return analysis.valid_rate(p, d), "closed_form"
    if metric == "avg_aoi":
        return analysis.theorem_penalty(p, d, Linear()), "closed_form"
    if metric == "peak_mean":
        return analysis.avg_peak_from_stats(analysis.update_stats(p, d)), "engine"
    if metric == "avg_penalty":
        return analysis.theorem_penalty(p, d, spec), "closed_form"
    if metric == "engine_penalty":
        return analysis.engine_penalty(p, d, spec), "engine"
    if metric == "violation_prob":
        return analysis.violation_prob(p, d, pt.beta), "closed_form"
    if metric == "asymptotic_penalty":
        return asymptotics.asymptotic_penalty(p, d, spec), "asymptotic"
    raise InvalidParams(f"unknown metric {metric!r}")


def _sweep_rows(pt: SweepPoint, outputs: Sequence[str]) -> List[Dict]:
    p = pt.params
    base = {"theta": p.theta, "lambda": p.lam, "r": p.r, "K": p.K, "B": p.B,
            "discipline": pt.discipline.value, "penalty": pt.spec.id,
            "alpha": math.nan if pt.alpha is None else pt.alpha,
            "beta": math.nan if pt.beta is None else pt.beta}
    rows = []
    for m in outputs:
        try:
            value, method = _metric(pt, m)
        except PenaltyDiverges:
            value, method = math.nan, "diverged"
        rows.append(dict(base, metric=m, value=value, method=method))
    return rows


def run_sweep(spec: SweepSpec, jobs: int = 1) -> List[Dict]:
    """Evaluate every grid point; rows come back in grid order whatever ``jobs`` is."""
    unknown = [m for m in spec.outputs if m not in SWEEP_METRICS]
    if unknown:
        raise InvalidParams(f"unknown metrics {unknown}; choose from {SWEEP_METRICS}")
    if "violation_prob" in spec.outputs and spec.fixed.get("beta") is None and spec.swept != "beta":
        raise InvalidParams("violation_prob needs --beta")
    points = [spec.point(x) for x in spec.grid()]  # validates every point up front
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        chunks = list(pool.map(lambda pt: _sweep_rows(pt, spec.outputs), points))
    return [row for chunk in chunks for row in chunk]


def cmd_sweep(args) -> int:
    fixed = {"discipline": args.discipline, "lambda": args.lam, "theta": args.theta,
             "r": args.rate, "K": args.buffer, "B": args.battery, "penalty": args.penalty,
             "alpha": args.alpha, "beta": args.beta}
    if args.param not in ("theta", "lambda") and fixed["lambda"] is None and fixed["theta"] is None:
        raise InvalidParams("--lambda or --theta is required unless sweeping one of them")
    if args.param == "lambda":
        fixed["theta"] = None
    if args.param in ("alpha", "beta") and args.penalty == "linear":
        fixed["penalty"] = "exp" if args.param == "alpha" else "step"
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    spec = SweepSpec(args.param, args.start, args.stop, args.steps, args.log, fixed, metrics)
    rows = run_sweep(spec, args.jobs)
    if args.format == "csv":
        _emit(to_csv(rows, SWEEP_COLUMNS), args.output)
    else:
        _emit(to_json([{c: r[c] for c in SWEEP_COLUMNS} for r in rows]), args.output)
    return EXIT_OK


# --------------------------------------------------------------------------
# simulate


def _rel(a: float, b: float) -> float:
    if not (math.isfinite(a) and math.isfinite(b)):
        return math.nan
    return (b - a) / abs(a) if a != 0 else math.nan


def simulate_record(cfg: SimConfig, spec: Penalty, beta: Optional[float]):
    """Run ``cfg`` and return ``(record, SimResult)``."""
    res = run_sim(cfg)
    p, d = cfg.params, Discipline(cfg.discipline)
    summary = res.summary()
    comparison = []

    def add(metric, analytic, simulated):
        comparison.append({"metric": metric, "analytic": analytic, "simulated": simulated,
                           "relative_error": _rel(analytic, simulated)})

    if cfg.service == "zero":
        stats = analysis.update_stats(p, d)
        add("valid_rate", stats.valid_rate, res.valid_rate_hat)
        add("avg_aoi", analysis.theorem_penalty(p, d, Linear()), res.avg_aoi)
        add("mean_peak", analysis.avg_peak_from_stats(stats), res.mean_peak)
        add("mean_sojourn", stats.sojourn.moment(1), res.mean_sojourn)
        add("zero_sojourn_fraction", stats.sojourn.atom, res.zero_sojourn_fraction)
        if not isinstance(spec, Linear):
            try:
                val = analysis.theorem_penalty(p, d, spec)
            except PenaltyDiverges:
                val = math.nan
            add(f"penalty[{spec.id}]", val, res.time_avg_penalty[spec.id])
        if beta is not None and not isinstance(spec, Step):
            add(f"penalty[{Step(beta).id}]", analysis.violation_prob(p, d, beta),
                res.time_avg_penalty[Step(beta).id])
    elif p.K >= MAX_CAPACITY:
        # the matrix-geometric model has an unbounded buffer; only compare at the ceiling
        sol = qbd.solve_qbd(p)
        et = qbd.qbd_mean_sojourn(sol, p)
        add("mean_peak", 1.0 / p.lam + et, res.mean_peak)
        add("mean_sojourn", et, res.mean_sojourn)
        add("mean_queue_length", qbd.mean_queue_length(sol), res.mean_queue_length)
    counts = res.counts
    return {
        "config": {"discipline": d.value, "service": cfg.service, "lambda": p.lam, "r": p.r,
                   "mu": p.mu, "K": p.K, "B": p.B, "horizon_kind": cfg.horizon_kind,
                   "horizon": float(cfg.horizon), "seed": cfg.seed,
                   "warmup_fraction": cfg.warmup_fraction},
        "summary": summary,
        "stderr": res.stderr,
        "counts": {k: getattr(counts, k) for k in counts.__dataclass_fields__},
        "comparison": comparison,
    }, res


def cmd_simulate(args) -> int:
    if args.service == "exp" and args.discipline == "lcfs":
        raise ModeUnsupported("unsupported combination: LCFS with exponential service")
    if args.service == "exp" and args.mu is None:
        raise InvalidParams("--service exp requires --mu")
    p = _params_from_args(args, args.mu if args.service == "exp" else None)
    spec = _penalty_from_args(args.penalty, args.alpha, args.beta)
    pens: List[Penalty] = [Linear()]
    for extra in (spec, Step(args.beta) if args.beta is not None else None):
        if extra is not None and extra.id not in {q.id for q in pens}:
            pens.append(extra)
    if args.time is not None:
        kind, horizon = "time", args.time
    elif args.updates is not None:
        kind, horizon = "updates", args.updates
    else:
        kind, horizon = "events", args.events if args.events is not None else 1e6
    cfg = SimConfig(p, Discipline(args.discipline), args.service, kind, horizon, args.seed,
                    args.warmup, tuple(pens),
                    log_capacity=args.log_capacity if args.event_log else 0)
    rec, res = simulate_record(cfg, spec, args.beta)
    if args.event_log:
        write_event_log(res, output_path(args.event_log))
    if args.format == "csv":
        rows = list(rec["comparison"])
        seen = {r["metric"] for r in rows}
        rows += [{"metric": k, "analytic": math.nan, "simulated": v, "relative_error": math.nan}
                 for k, v in rec["summary"].items() if k not in seen]
        _emit(to_csv(rows, COMPARE_COLUMNS), args.output)
    else:
        _emit(to_json(rec), args.output)
    return EXIT_OK


# --------------------------------------------------------------------------
# qbd


def qbd_record(p: SystemParams, eps: float, max_iter: int) -> Dict:
    sol = qbd.solve_qbd(p, eps, max_iter)
    et = qbd.qbd_mean_sojourn(sol, p)
    return {"lambda": p.lam, "r": p.r, "mu": p.mu, "B": p.B,
            "avg_peak_aoi": 1.0 / p.lam + et, "mean_sojourn": et,
            "mean_queue_length": qbd.mean_queue_length(sol),
            "iterations": sol.iterations, "residual": sol.residual,
            "spectral_radius": sol.spectral_radius, "status": "ok"}


def cmd_qbd(args) -> int:
    if args.lam is None or args.rate is None or args.mu is None:
        raise InvalidParams("qbd needs --lambda, --rate and --mu")
    base = validate_params(SystemParams(args.lam, args.rate, MAX_CAPACITY, args.battery, args.mu),
                           require_mu=True)
    if args.sweep is None:
        rows = [qbd_record(base, args.eps, args.max_iter)]
    else:
        if args.steps < 2:
            raise InvalidParams("steps must be >= 2")
        grid = np.linspace(args.start, args.stop, args.steps)
        pts = [validate_params(base.with_(lam=float(x)), require_mu=True) for x in grid]
        rows = []
        for p in pts:
            try:
                rows.append(qbd_record(p, args.eps, args.max_iter))
            except NotConverged as exc:
                rows.append({"lambda": p.lam, "r": p.r, "mu": p.mu, "B": p.B,
                             "avg_peak_aoi": math.nan, "mean_sojourn": math.nan,
                             "mean_queue_length": math.nan, "iterations": exc.iterations,
                             "residual": math.nan, "spectral_radius": exc.spectral_radius,
                             "status": "not_converged"})
    if args.format == "csv":
        _emit(to_csv(rows, QBD_COLUMNS), args.output)
    else:
        _emit(to_json(rows[0] if args.sweep is None else rows), args.output)
    return EXIT_OK


# --------------------------------------------------------------------------
# selftest


def selftest_checks(quick_sim_updates: int = 200_000):
    """Yield ``(name, passed, detail)`` for a fast cross-validation suite."""
    from .sim import kolmogorov_distance

    worst = 0.0
    for th in (0.2, 0.5, 0.8):
        for K in (0, 1, 5, 20):
            for B in (1, 3, 10):
                p = SystemParams(th * 2.0, 2.0, K, B)
                for d in Discipline:
                    for spec in (Linear(), Exponential(0.2), Exponential(-0.2), Step(2.0)):
                        worst = max(worst, analysis.relative_gap(
                            analysis.theorem_penalty(p, d, spec),
                            analysis.engine_penalty(p, d, spec)))
    yield "closed form vs engine", worst <= 1e-9, f"max rel gap {worst:.2e}"

    worst = 0.0
    for th in (0.2, 0.5, 0.8):
        for B in (1, 3):
            p = SystemParams(th, 1.0, 200, B)
            for d in Discipline:
                for spec in (Linear(), Step(2.0)):
                    worst = max(worst, analysis.relative_gap(
                        analysis.theorem_penalty(p, d, spec),
                        asymptotics.asymptotic_penalty(p, d, spec)))
    yield "large buffer limit", worst <= 1e-6, f"max rel gap {worst:.2e}"

    p = SystemParams(0.4, 1.0, MAX_CAPACITY, 5, 1.0)
    m = qbd.build_qbd(p)
    sol = qbd.solve_qbd(p)
    bal = qbd.balance_residual(m, sol)
    yield "qbd residuals", sol.residual < 1e-7 and bal < 1e-8, \
        f"R residual {sol.residual:.1e}, balance {bal:.1e}"

    for d in Discipline:
        p = SystemParams(0.5, 1.0, 1, 1)
        res = run_sim(SimConfig(p, d, horizon_kind="updates", horizon=quick_sim_updates, seed=7))
        exact = analysis.theorem_penalty(p, d, Linear())
        err = abs(res.avg_aoi - exact) / exact
        ks = kolmogorov_distance(res.peak_samples, analysis.update_stats(p, d).peak)
        yield f"simulation {d.value}", err < 0.02 and ks < 0.01, \
            f"avg AoI rel err {err:.1e}, peak KS {ks:.1e}"


def cmd_selftest(args) -> int:
    ok = True
    lines = []
    for name, passed, detail in selftest_checks():
        ok &= passed
        lines.append(f"{'PASS' if passed else 'FAIL':4}  {name:24}  {detail}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if ok else 1


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ehaoi", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="closed-form metrics at one point")
    _add_point_flags(a)
    _add_io_flags(a)

    s = sub.add_parser("sweep", help="closed-form metrics over a one-parameter grid")
    _add_point_flags(s)
    _add_io_flags(s)
    s.add_argument("--param", choices=SWEEPABLE)
    s.add_argument("--from", dest="start", type=float)
    s.add_argument("--to", dest="stop", type=float)
    s.add_argument("--steps", type=int)
    s.add_argument("--log", action="store_true", help="geometric spacing")
    s.add_argument("--metrics", help=f"comma-separated subset of {','.join(SWEEP_METRICS)}")
    s.add_argument("--jobs", type=int, help="grid points evaluated concurrently")

    m = sub.add_parser("simulate", help="discrete-event simulation with analytic comparison")
    _add_point_flags(m)
    _add_io_flags(m)
    hz = m.add_mutually_exclusive_group()
    hz.add_argument("--events", type=float)
    hz.add_argument("--time", type=float)
    hz.add_argument("--updates", type=float, help="valid updates after warmup")
    m.add_argument("--seed", type=int)
    m.add_argument("--service", choices=["zero", "exp"])
    m.add_argument("--mu", type=float)
    m.add_argument("--warmup", type=float, help="fraction of the horizon discarded")
    m.add_argument("--event-log", help="write the first --log-capacity events here")
    m.add_argument("--log-capacity", type=int)

    q = sub.add_parser("qbd", help="matrix-geometric solve for exponential service")
    q.add_argument("--lambda", dest="lam", type=float)
    q.add_argument("--rate", type=float)
    q.add_argument("--mu", type=float)
    q.add_argument("--battery", type=int)
    q.add_argument("--eps", type=float)
    q.add_argument("--max-iter", type=int)
    q.add_argument("--sweep", choices=["lambda"])
    q.add_argument("--from", dest="start", type=float)
    q.add_argument("--to", dest="stop", type=float)
    q.add_argument("--steps", type=int)
    _add_io_flags(q)

    sub.add_parser("selftest", help="run the cross-validation checks")
    return ap


DEFAULTS = {
    "analyze": POINT_DEFAULTS,
    "sweep": dict(POINT_DEFAULTS, metrics="avg_penalty", jobs=1, steps=10, log=False),
    "simulate": dict(POINT_DEFAULTS, seed=0, service="zero", warmup=0.1, log_capacity=100_000),
    "qbd": {"battery": 1, "eps": 1e-8, "max_iter": 1_000_000, "format": "json",
            "start": 0.05, "stop": 0.95, "steps": 10},
    "selftest": {},
}
COMMANDS = {"analyze": cmd_analyze, "sweep": cmd_sweep, "simulate": cmd_simulate,
            "qbd": cmd_qbd, "selftest": cmd_selftest}


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    sub = ap._subparsers._group_actions[0].choices[args.command]
    try:
        apply_config(sub, args, DEFAULTS[args.command])
        if args.command == "sweep" and (args.param is None or args.start is None
                                        or args.stop is None):
            raise InvalidParams("sweep needs --param, --from and --to")
        return COMMANDS[args.command](args)
    except ModeUnsupported as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except PenaltyDiverges as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGES
    except NotConverged as exc:
        print(f"error: {exc} ({exc.iterations} iterations)", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (InvalidParams, AoIError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
