"""Command-line entry point: ``discrete-copula <command> [options]``.

Dimensions are 1-based on the command line.  Usage errors exit with status 2,
data errors with status 1.  Every artifact carries the seed, the package version
and a hash of the resolved configuration.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from . import _rng
from .checkerboard import build_checkerboard, copula_density, entropy, sample, to_joint
from .couplings import CouplingSpec, sample_coupled
from .dependence import CONCEPTS, check_concept, kendall_tau, kendall_tau_copula, preservation_suite, spearman_rho
from .experiments import bivariate_normal, concomitant_rank_check, run_table1
from .io import (
    copula_from_dict,
    joint_from_dict,
    joint_to_dict,
    load_json,
    read_columns,
    read_returns,
)
from .joint import joint_from_samples
from .portfolio import backtest
from .risk import Distortion, MesRequest, StressSpec, covar, marginal_es_exact, marginal_es_mc, stress_distribution

# flags that must be present once the config file and the command line are merged
REQUIRED = {
    "sample": ["n"],
    "sample-coupled": ["n"],
    "density": ["at"],
    "check": ["concept"],
    "mes": ["p"],
    "covar": ["p", "q"],
    "minmes": ["p"],
}
# JSON output schema shipped for each command
SCHEMAS = {
    "fit-joint": "joint",
    "entropy": "scalars",
    "density": "scalars",
    "tau": "scalars",
    "rho": "scalars",
    "check": "verdict",
    "mes": "mes",
    "covar": "mes",
    "stress": "stress",
    "minmes": "portfolio",
    "table1": "table1",
    "concomitants": "concomitants",
}
# never part of the config hash: results do not depend on them
UNHASHED = {"threads", "config", "func", "values_out"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing helpers


def _floats(v) -> list[float]:
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    if isinstance(v, (int, float)):
        return [float(v)]
    try:
        return [float(x) for x in str(v).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {v!r}") from None


def _rounding(v):
    if v is None or str(v).lower() == "none":
        return None
    if isinstance(v, (list, tuple)):
        return [None if x is None else int(x) for x in v]
    parts = [s.strip() for s in str(v).split(",")]
    try:
        vals = [None if s.lower() == "none" else int(s) for s in parts]
    except ValueError:
        raise UsageError(f"--round expects integers, got {v!r}") from None
    return vals[0] if len(vals) == 1 else vals


def _spec(text: str) -> CouplingSpec:
    try:
        return CouplingSpec.parse(text, one_based=True)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _dim(v: int, name: str) -> int:
    if v < 1:
        raise UsageError(f"--{name} is 1-based")
    return v - 1


def load_schema(command: str) -> dict:
    text = resources.files(__package__).joinpath("schemas", SCHEMAS[command] + ".json").read_text()
    return json.loads(text)


# ---------------------------------------------------------------- loading


def _load_doc(path: Path) -> dict:
    d = load_json(path)
    if not isinstance(d, dict):
        raise ValueError(f"{path}: expected a JSON object")
    # accept fit-joint output as written, metadata and all
    return d["joint"] if isinstance(d.get("joint"), dict) else d


def _load_joint(args):
    path = Path(args.input)
    if path.suffix.lower() == ".json":
        d = _load_doc(path)
        if d.get("type") == "checkerboard":
            return to_joint(copula_from_dict(d))
        return joint_from_dict(d)
    return joint_from_samples(read_columns(path), rounding=_rounding(args.round), rule=args.rule)


def _load_copula(args):
    path = Path(args.input)
    if path.suffix.lower() == ".json":
        d = _load_doc(path)
        if d.get("type") == "checkerboard":
            return copula_from_dict(d)
    return build_checkerboard(_load_joint(args))


# ---------------------------------------------------------------- output


def _clean(x):
    """JSON-safe plain Python: arrays to lists, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        f = float(x)
        if math.isnan(f):
            return None
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f + 0.0  # no negative zero
    return x


def config_hash(args) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in UNHASHED}
    h = hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode())
    path = getattr(args, "input", None)
    if path and Path(path).is_file():
        h.update(Path(path).read_bytes())
    return h.hexdigest()[:16]


def meta(args) -> dict:
    return {"command": args.command, "seed": args.seed, "version": __version__, "config_hash": config_hash(args)}


def emit_json(args, payload: dict, out) -> None:
    out.write(json.dumps(_clean({"meta": meta(args), **payload}), indent=2) + "\n")


def emit_csv(args, header: list[str], rows, out) -> None:
    m = meta(args)
    out.write("# " + " ".join(f"{k}={m[k]}" for k in ("command", "seed", "version", "config_hash")) + "\n")
    out.write(",".join(header) + "\n")
    for r in rows:
        out.write(",".join(_num(x) for x in r) + "\n")


def _num(x) -> str:
    # shortest text that round-trips the double; no negative zero
    return x if isinstance(x, str) else repr(float(x) + 0.0)


def emit_scalars(args, values: dict, out) -> None:
    if args.format == "csv":
        emit_csv(args, list(values), [[_clean(v) for v in values.values()]], out)
    else:
        emit_json(args, values, out)


# ---------------------------------------------------------------- commands


def cmd_fit_joint(args, out):
    j = _load_joint(args)
    emit_json(args, {"joint": joint_to_dict(j)}, out)


def cmd_sample(args, out):
    c = _load_copula(args)
    u = sample(c, args.n, args.seed, threads=args.threads)
    emit_csv(args, [f"u{i + 1}" for i in range(c.dims)], u, out)


def cmd_sample_coupled(args, out):
    j = _load_joint(args)
    s = sample_coupled(j, _spec(args.spec), args.n, args.seed, threads=args.threads)
    d = j.dims
    header = [f"{b}{i + 1}" for b in ("x", "v", "u") for i in range(d)]
    emit_csv(args, header, np.hstack([s.x, s.v, s.u]), out)


def cmd_entropy(args, out):
    emit_scalars(args, {"entropy": entropy(_load_copula(args))}, out)


def cmd_density(args, out):
    c = _load_copula(args)
    at = _floats(args.at)
    if len(at) != c.dims:
        raise UsageError(f"--at needs {c.dims} coordinates")
    emit_scalars(args, {"density": copula_density(c, np.array(at))}, out)


def cmd_tau(args, out):
    j = _load_joint(args)
    vals = {"tau": kendall_tau(j)}
    if args.mc:
        est, se = kendall_tau_copula(build_checkerboard(j), args.mc, args.seed, threads=args.threads)
        vals.update(tau_copula_mc=est, tau_copula_se=se)
    emit_scalars(args, vals, out)


def cmd_rho(args, out):
    emit_scalars(args, {"rho": spearman_rho(_load_copula(args))}, out)


def cmd_check(args, out):
    concept = args.concept.upper()
    j = _load_joint(args)
    if args.preservation:
        rep = preservation_suite(j, concept, budget=args.budget, seed=args.seed)
        emit_json(args, {"concept": concept, "joint": rep.joint.to_dict(), "copula": rep.copula.to_dict(), "agree": rep.agree}, out)
        return
    obj = build_checkerboard(j) if args.on == "copula" else j
    emit_json(args, check_concept(obj, concept, budget=args.budget, seed=args.seed).to_dict(), out)


def _mes_request(args, j) -> MesRequest:
    if args.mode not in ("step", "interp"):
        raise UsageError("--mode must be step or interp")
    cond, target = _dim(args.cond, "cond"), _dim(args.target, "target")
    if not (0 <= cond < j.dims and 0 <= target < j.dims):
        raise ValueError(f"--cond/--target out of range for a {j.dims}-dimensional law")
    spec = _spec(args.spec)
    spec.validate_for(j.dims)
    return MesRequest(cond, target, args.p, spec, args.mode, args.n, args.seed)


def _method(args, spec: CouplingSpec) -> str:
    if args.method:
        return args.method
    return "mc" if (args.n or not spec.exact) else "exact"


def cmd_mes(args, out):
    j = _load_joint(args)
    req = _mes_request(args, j)
    if _method(args, req.spec) == "exact":
        est = marginal_es_exact(j, req.cond_dim, req.target_dim, req.p, req.spec, req.mode)
        payload = {"estimate": est, "se": 0.0, "mode": req.mode, "spec": req.spec.label(), "method": "exact"}
    else:
        payload = marginal_es_mc(j, req, threads=args.threads).to_dict()
    emit_json(args, payload, out)


def cmd_covar(args, out):
    j = _load_joint(args)
    req = _mes_request(args, j)
    method = args.method or ("exact" if req.mode == "step" and not args.n else "mc")
    res = covar(j, req, args.q, method=method, threads=args.threads)
    emit_json(args, {**res.to_dict(), "q": args.q, "p": args.p}, out)


def _stress_spec(args, d: int) -> StressSpec:
    try:
        g = Distortion.parse(args.g)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    name, _, arg = args.combine.partition(":")
    if name == "single":
        dim = _dim(int(arg or 1), "combine single")
        if dim >= d:
            raise ValueError(f"stress dimension {dim + 1} out of range")
        return StressSpec(g, "single", dim)
    if name in ("mean", "product"):
        return StressSpec(g, name)
    raise UsageError(f"--combine must be single:i, mean or product, got {args.combine!r}")


def cmd_stress(args, out):
    j = _load_joint(args)
    spec = _spec(args.spec)
    spec.validate_for(j.dims)
    res = stress_distribution(
        j, spec, _stress_spec(args, j.dims), method=args.method, n=args.n or 1_000_000, seed=args.seed, threads=args.threads
    )
    margs = []
    for i, m in enumerate(res.marginals):
        entry = {"dim": i + 1, "support": m.support, "mass": m.masses, "cdf": m.breakpoints[1:]}
        if res.cdf_se is not None:
            entry["cdf_se"] = res.cdf_se[i]
        margs.append(entry)
    emit_json(args, {"method": res.method, "spec": spec.label(), "g": args.g, "combine": args.combine, "marginals": margs}, out)


def cmd_minmes(args, out):
    dates, idx, R = read_returns(args.input)
    if args.mode not in ("step", "interp"):
        raise UsageError("--mode must be step or interp")
    spec = _spec(args.spec)
    spec.validate_for(2)
    rep = backtest(R, idx, dates, args.p, spec, args.mode, resolution=args.resolution, condition=args.condition)
    emit_json(args, rep.to_dict(), out)
    if args.values_out:
        with open(args.values_out, "w") as fh:
            emit_csv(args, ["date", "value"], ([d, v] for d, v in zip(rep.value_dates, rep.value_path)), fh)


TABLE1_MEASURES = [
    ("normal formula", "normal_formula"),
    ("average with C_perp", "avg_perp"),
    ("average with C_plus", "avg_plus"),
    ("MSE with C_perp", "mse_perp"),
    ("MSE with C_plus", "mse_plus"),
]


def cmd_table1(args, out):
    rows = [
        run_table1(r, p, args.sigma, args.samples, args.runs, args.seed, args.mode, threads=args.threads)
        for p in _floats(args.p)
        for r in _floats(args.r)
    ]
    if (args.format or "csv") == "json":
        emit_json(args, {"rows": [row.to_dict() for row in rows]}, out)
    elif args.layout == "long":
        fields = ["r", "p", "sigma", "normal_formula", "avg_perp", "avg_plus", "se_perp", "se_plus", "mse_perp", "mse_plus"]
        emit_csv(args, fields, ([getattr(row, f) for f in fields] for row in rows), out)
    else:
        header = ["measure"] + [f"p={row.p:g} r={row.r:g}" for row in rows]
        emit_csv(args, header, ([label] + [getattr(row, f) for row in rows] for label, f in TABLE1_MEASURES), out)


def cmd_concomitants(args, out):
    rep = concomitant_rank_check(
        bivariate_normal(args.r), args.N, args.k, args.reps, args.seed, xi_decimals=args.xi_decimals, threads=args.threads
    )
    emit_json(args, {"r": args.r, **rep.to_dict()}, out)


# ---------------------------------------------------------------- parser


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--threads", type=int, default=None, help=f"worker threads (default ${_rng.THREADS_ENV} or 1)")
    p.add_argument("--config", help="JSON file of option values; command-line flags take precedence")
    p.add_argument("--format", choices=("json", "csv"), default=None, help="output format (default json; csv for table1)")
    return p


def _data() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("input", help="CSV of samples (one column per dimension) or a joint/copula JSON file")
    p.add_argument("--round", default=None, help="decimals per dimension, e.g. 1,1 (default: no rounding)")
    p.add_argument("--rule", choices=("half_away", "half_even"), default="half_away")
    return p


def _mes_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cond", type=int, default=1, help="conditioning dimension (1-based)")
    p.add_argument("--target", type=int, default=2, help="target dimension (1-based)")
    p.add_argument("--p", type=float, help="tail level in (0, 1)")
    p.add_argument("--spec", default="independent", help="independent | comonotone:t,r | antitone:t,r")
    p.add_argument("--mode", choices=("step", "interp"), default="step")
    p.add_argument("--n", type=int, default=None, help="Monte Carlo draws (implies --method mc)")
    p.add_argument("--method", choices=("exact", "mc"), default=None)


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="discrete-copula", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    common, data = _common(), _data()
    subs: dict[str, argparse.ArgumentParser] = {}

    def add(name: str, func: Callable, help_: str, with_data: bool = True) -> argparse.ArgumentParser:
        parents = [common, data] if with_data else [common]
        p = sub.add_parser(name, parents=parents, help=help_, description=help_)
        p.set_defaults(func=func)
        subs[name] = p
        return p

    add("fit-joint", cmd_fit_joint, "fit the empirical joint law of a sample")
    p = add("sample", cmd_sample, "draw from the checkerboard copula")
    p.add_argument("--copula", choices=("checkerboard",), default="checkerboard")
    p.add_argument("--n", type=int)
    p = add("sample-coupled", cmd_sample_coupled, "draw (x, v, u) under a coupling")
    p.add_argument("--spec", default="independent", help="independent | comonotone:t,r | antitone:t,r")
    p.add_argument("--n", type=int)
    add("entropy", cmd_entropy, "differential entropy of the checkerboard copula")
    p = add("density", cmd_density, "checkerboard copula density at a point")
    p.add_argument("--at", help="comma-separated point in the unit cube")
    p = add("tau", cmd_tau, "Kendall's tau (exact, ties count zero)")
    p.add_argument("--mc", type=int, default=0, help="also estimate 4E[C(U)]-1 from this many copula draws")
    add("rho", cmd_rho, "Spearman's rho of the checkerboard copula")
    p = add("check", cmd_check, "check a dependence concept")
    p.add_argument("--concept", type=str.lower, choices=[c.lower() for c in CONCEPTS])
    p.add_argument("--budget", type=int, default=5000, help="sampled sets when enumeration is too large")
    p.add_argument("--on", choices=("joint", "copula"), default="joint")
    p.add_argument("--preservation", action="store_true", help="compare the joint's verdict with its copula's")
    p = add("mes", cmd_mes, "Marginal Expected Shortfall E[X_target | U_cond > p]")
    _mes_flags(p)
    p = add("covar", cmd_covar, "q-quantile of X_target given U_cond > p")
    _mes_flags(p)
    p.add_argument("--q", type=float)
    p = add("stress", cmd_stress, "marginals under the distortion dQ/dP = g(U)")
    p.add_argument("--g", default="linear", help="linear | identity | power:kappa")
    p.add_argument("--combine", default="single:1", help="single:i | mean | product")
    p.add_argument("--spec", default="independent")
    p.add_argument("--method", choices=("exact", "mc"), default=None)
    p.add_argument("--n", type=int, default=None)
    p = add("minmes", cmd_minmes, "yearly minimum-MES portfolio backtest")
    p.set_defaults(round=None, rule="half_away")
    p.add_argument("--p", type=float)
    p.add_argument("--spec", default="independent", help="coupling of (market, loss), dims 1 and 2")
    p.add_argument("--mode", choices=("step", "interp"), default="step")
    p.add_argument("--resolution", type=int, default=20)
    p.add_argument("--condition", choices=("loss", "return"), default="loss", help="tail of the market loss (default) or return")
    p.add_argument("--values-out", default=None, help="write the cumulative value path as CSV here")
    p = add("table1", cmd_table1, "MES simulation on rounded bivariate normal data", with_data=False)
    p.add_argument("--r", default="0.2,0.3,0.4")
    p.add_argument("--p", default="0.9,0.95,0.975")
    p.add_argument("--sigma", type=float, default=10.0)
    p.add_argument("--runs", type=int, default=2000)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--mode", choices=("step", "interp"), default="interp")
    p.add_argument("--layout", choices=("wide", "long"), default="wide")
    p = add("concomitants", cmd_concomitants, "rank means of concomitant powers", with_data=False)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--N", type=int, default=10)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--xi-decimals", type=int, default=None)
    return parser, subs


def _parse(argv):
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    sp = subs[args.command]
    if args.config:
        try:
            cfg = load_json(args.config)
        except OSError as exc:
            sp.error(f"cannot read --config: {exc}")
        except ValueError as exc:
            sp.error(str(exc))
        if not isinstance(cfg, dict):
            sp.error("--config must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        known = set(vars(args)) - {"func", "command", "config"}
        unknown = sorted(set(cfg) - known)
        if unknown:
            sp.error(f"unknown config keys: {', '.join(unknown)}")
        if "input" in cfg and "input" in vars(args):
            sp.error("the input path cannot come from --config")
        sp.set_defaults(**cfg)
        args = parser.parse_args(argv)
    if args.format is None and args.command != "table1":
        args.format = "json"
    for dest in REQUIRED.get(args.command, []):
        if getattr(args, dest) is None:
            sp.error(f"the following arguments are required: --{dest.replace('_', '-')}")
    return args, sp


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    try:
        args, sp = _parse(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args, out)
    except UsageError as exc:
        sp.print_usage(sys.stderr)
        print(f"{sp.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError) as exc:
        print(f"{sp.prog}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
