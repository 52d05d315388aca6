"""Command-line entry point.

Every command prints ``key=value`` lines (vectors comma separated) followed,
with ``--json``, by one JSON document holding the same fields. Output always
carries the seed and the library version and contains no timings, so identical
invocations are byte-identical.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import confidence_region, limit_law_sample, quantile
from .errors import DegenerateModelError, GibbsError, ModelError
from .hypothesis_testing import calibrate_np_constant, lr_test_influence, lr_test_simple, np_test
from .inference import MleConfig, mle, moment_covariance, mpe, pressure_root
from .sampling import read_sample, sample_path, write_sample
from .shift_core import ModelConfig, load_model
from .thermo import asymptotic_covariance, cohomology_independence_check, solve_gibbs

COMMANDS = ("simulate", "fit", "mpe", "test-simple", "test-influence", "np-test", "ci",
            "pressure", "dimroot", "limit-sample", "validate-model")

EXIT_MODEL_ERROR = 1
EXIT_USAGE = 2


@dataclass(frozen=True)
class RunConfig:
    command: str
    model_path: str | None
    sample_path: str | None
    seed: int
    reps: int | None
    alpha: float
    eta: float | None
    output_path: str | None
    threads: int
    json: bool


def bundled(name: str) -> Path:
    """Path of a bundled model or sample file (``gibbsest/models/<name>``)."""
    return Path(str(resources.files("gibbsest") / "models" / name))


def _resolve(path: str) -> Path:
    p = Path(path)
    if not p.exists() and not p.is_absolute() and bundled(path).exists():
        return bundled(path)
    return p


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return ",".join(_fmt(x) for x in np.asarray(v).ravel().tolist())
    return str(v)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating,)):
        v = float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def _report(fields: dict, cfg: RunConfig, out) -> None:
    head = {"command": cfg.command, "version": __version__, "seed": cfg.seed}
    fields = {**head, **fields}
    lines = [f"{k}={_fmt(v)}" for k, v in fields.items()]
    if cfg.json:
        lines.append(json.dumps({k: _jsonable(v) for k, v in fields.items()}, sort_keys=False))
    out.write("\n".join(lines) + "\n")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="JSON model file (bundled names are accepted)")
    common.add_argument("--data", help="sample file of whitespace-separated 1-based symbols")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--reps", type=int, default=None, help="Monte Carlo replications")
    common.add_argument("--alpha", type=float, default=0.05)
    common.add_argument("--eta", type=float, default=None)
    common.add_argument("--threads", type=int, default=1, help="upper bound on worker threads")
    common.add_argument("--out", default=None, help="output file (sample, CSV of draws, or report copy)")
    common.add_argument("--json", action="store_true", help="append a JSON document")
    common.add_argument("--theta", default=None, help="comma-separated parameter (overrides the model)")

    ap = argparse.ArgumentParser(prog="gibbsest", description="Inference for Gibbs measures on subshifts of finite type.")
    ap.add_argument("--version", action="version", version=f"gibbsest {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", parents=[common], help="draw a stationary sample path")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--stream", type=int, default=0)
    sub.add_parser("fit", parents=[common], help="constrained maximum likelihood estimate")
    sub.add_parser("mpe", parents=[common], help="maximum-potential estimate")
    p = sub.add_parser("test-simple", parents=[common], help="likelihood ratio test of theta = theta0")
    p.add_argument("--theta0", default=None)
    p = sub.add_parser("test-influence", parents=[common], help="test whether coordinate k vanishes")
    p.add_argument("--k", type=int, required=True, help="1-based coordinate")
    p = sub.add_parser("np-test", parents=[common], help="likelihood ratio test of two simple hypotheses")
    p.add_argument("--theta0", required=True)
    p.add_argument("--theta1", required=True)
    p.add_argument("--c", type=float, default=None, help="level constant (calibrated by simulation if omitted)")
    sub.add_parser("ci", parents=[common], help="confidence box from the limit law")
    sub.add_parser("pressure", parents=[common], help="pressure, eigendata summary and covariance")
    p = sub.add_parser("dimroot", parents=[common], help="parameter with vanishing pressure")
    p.add_argument("--interval", default=None, help="lo,hi (overrides the model)")
    p.add_argument("--tol", type=float, default=1e-12)
    sub.add_parser("limit-sample", parents=[common], help="draws of the estimator limit law")
    sub.add_parser("validate-model", parents=[common], help="cohomology independence of the directions")
    return ap


def _vec(text: str | None, d: int, what: str):
    if text is None:
        return None
    try:
        vals = [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise ModelError(f"{what} must be a comma-separated list of numbers") from exc
    if len(vals) != d:
        raise ModelError(f"{what} has {len(vals)} entries, the model has {d} directions")
    return np.array(vals)


def _model(args) -> ModelConfig:
    if args.model is None:
        raise ModelError("--model is required")
    return load_model(_resolve(args.model))


def _theta(args, m: ModelConfig, required=True):
    t = _vec(args.theta, m.family.d, "--theta")
    if t is None:
        t = m.theta
    if t is None and required:
        raise ModelError("no parameter: give --theta or a 'theta' entry in the model")
    return t


def _sample(args, m: ModelConfig):
    if args.data is None:
        raise ModelError("--data is required")
    return read_sample(_resolve(args.data), m.spec)


def _mle_cfg(args, m: ModelConfig) -> MleConfig:
    return MleConfig(eta=args.eta, box=m.box)


def _estimation_fields(res) -> dict:
    return {
        "n": res.n_used, "theta_hat": res.theta_hat, "loglik": res.loglik,
        "converged": res.converged, "constraint_active": res.constraint_active,
        "box_active": res.box_active, "moment_active": res.moment_active,
        "moment_gap": res.moment_gap, "eta": res.eta, "null_dim": res.null_dim,
    }


def _test_fields(res) -> dict:
    out = {
        "statistic": res.statistic, "log_statistic": res.log_statistic,
        "critical_value": res.critical_value, "reject": res.reject,
    }
    if res.alpha is not None:
        out["alpha"] = res.alpha
    if res.z_used is not None:
        out["z"] = res.z_used
    if res.theta_null_hat is not None:
        out["theta_null"] = res.theta_null_hat
    if res.theta_hat is not None:
        out["theta_hat"] = res.theta_hat
    out["null_feasible"] = res.null_feasible
    return out


def _cmd_simulate(args, cfg):
    m = _model(args)
    theta = _theta(args, m)
    if args.n < 1:
        raise ValueError("--n must be positive")
    seq = sample_path(solve_gibbs(None, m.family, theta), args.n, args.seed, args.stream)
    if cfg.output_path:
        write_sample(cfg.output_path, seq.symbols)
    counts = np.bincount(seq.symbols.codes, minlength=m.spec.alphabet_size)
    fields = {"n": args.n, "stream": args.stream, "theta": theta, "symbol_counts": counts}
    if not cfg.output_path:
        fields["symbols"] = " ".join(str(s) for s in seq.symbols.symbols)
    return fields


def _cmd_fit(args, cfg):
    m = _model(args)
    return _estimation_fields(mle(None, m.family, _sample(args, m), _mle_cfg(args, m)))


def _cmd_mpe(args, cfg):
    m = _model(args)
    res = mpe(None, m.family, _sample(args, m), _mle_cfg(args, m))
    return {"theta_tilde": res.theta_tilde, "objective": res.objective, "newton_iters": res.newton_iters,
            "converged": res.converged, "gradient_norm": res.gradient_norm, "null_dim": res.null_dim}


def _cmd_test_simple(args, cfg):
    m = _model(args)
    t0 = _vec(args.theta0, m.family.d, "--theta0")
    if t0 is None:
        t0 = _theta(args, m)
    res = lr_test_simple(None, m.family, _sample(args, m), t0, args.alpha, _mle_cfg(args, m),
                         args.reps or 100_000, args.seed)
    return {"theta0": t0, **_test_fields(res)}


def _cmd_test_influence(args, cfg):
    m = _model(args)
    res = lr_test_influence(None, m.family, _sample(args, m), args.k, args.alpha, _mle_cfg(args, m),
                            args.reps or 100_000, args.seed)
    return {"k": args.k, **_test_fields(res)}


def _cmd_np_test(args, cfg):
    m = _model(args)
    d = m.family.d
    t0 = _vec(args.theta0, d, "--theta0")
    t1 = _vec(args.theta1, d, "--theta1")
    w = _sample(args, m)
    c = args.c
    fields = {}
    if c is None:
        c = calibrate_np_constant(None, m.family, t0, t1, len(w), args.alpha, args.reps or 2000, args.seed)
        fields["calibrated"] = True
    res = np_test(None, m.family, w, t0, t1, c)
    return {"theta0": t0, "theta1": t1, **fields, **_test_fields(res)}


def _cmd_ci(args, cfg):
    m = _model(args)
    w = _sample(args, m)
    est = mle(None, m.family, w, _mle_cfg(args, m))
    sigma = asymptotic_covariance(None, m.family, est.theta_hat)
    region = confidence_region(est.theta_hat, sigma, len(w), args.alpha, args.reps or 100_000, args.seed)
    return {"n": len(w), "theta_hat": est.theta_hat, "alpha": args.alpha, "lower": region.lower,
            "upper": region.upper, "sigma_hat": sigma,
            "sigma_moment": moment_covariance(m.family, w), "convention": "per-coordinate two-sided mass alpha/d"}


def _cmd_pressure(args, cfg):
    m = _model(args)
    theta = _theta(args, m, required=False)
    if theta is None:
        theta = np.zeros(m.family.d)
    sys_ = solve_gibbs(None, m.family, theta)
    grad = sys_.layout.edge_values[1:] @ sys_.edge_mu
    return {"theta": theta, "pressure": sys_.pressure, "eigenvalue": sys_.lam, "order": sys_.order,
            "gradient": grad, "covariance": asymptotic_covariance(None, m.family, system=sys_)}


def _cmd_dimroot(args, cfg):
    m = _model(args)
    interval = m.interval
    if args.interval is not None:
        interval = tuple(_vec(args.interval, 2, "--interval"))
    if interval is None:
        raise ModelError("no search interval: give --interval or an 'interval' entry in the model")
    root = pressure_root(None, m.family, interval, args.tol)
    return {"interval": list(interval), "root": root,
            "pressure_at_root": solve_gibbs(None, m.family, [root]).pressure}


def _cmd_limit_sample(args, cfg):
    m = _model(args)
    theta = _theta(args, m, required=False)
    if theta is None:
        theta = np.zeros(m.family.d)
    sigma = asymptotic_covariance(None, m.family, theta)
    sample = limit_law_sample(sigma, args.reps or 100_000, args.seed)
    if cfg.output_path:
        d = sigma.shape[0]
        header = ",".join([f"x{i + 1}" for i in range(d)] + ["xi"])
        np.savetxt(cfg.output_path, np.column_stack([sample.draws, sample.xi]), delimiter=",",
                   header=header, comments="", fmt="%.17g")
    qs = (args.alpha / 2, 0.5, 1 - args.alpha / 2)
    fields = {"theta": theta, "sigma": sigma, "reps": sample.reps, "rejected": sample.rejected}
    for i in range(sigma.shape[0]):
        fields[f"quantiles_x{i + 1}"] = [quantile(sample.draws[:, i], q) for q in qs]
    fields["xi_upper_alpha"] = quantile(sample.xi, 1 - args.alpha)
    return fields


def _cmd_validate(args, cfg):
    m = _model(args)
    theta = _theta(args, m, required=False)
    ok, min_eig = cohomology_independence_check(None, m.family, theta)
    fields = {"alphabet_size": m.spec.alphabet_size, "d": m.family.d, "depth": m.family.common_depth,
              "independent": ok, "min_eigenvalue": min_eig}
    if not ok:
        raise _Reported(fields, DegenerateModelError(
            f"directions are dependent modulo coboundaries and constants (min eigenvalue {min_eig:.3e})"))
    return fields


class _Reported(Exception):
    def __init__(self, fields, error):
        super().__init__(str(error))
        self.fields = fields
        self.error = error


HANDLERS = {
    "simulate": _cmd_simulate, "fit": _cmd_fit, "mpe": _cmd_mpe, "test-simple": _cmd_test_simple,
    "test-influence": _cmd_test_influence, "np-test": _cmd_np_test, "ci": _cmd_ci,
    "pressure": _cmd_pressure, "dimroot": _cmd_dimroot, "limit-sample": _cmd_limit_sample,
    "validate-model": _cmd_validate,
}


def run(argv=None, stdout=None, stderr=None) -> int:
    """Run one command; returns the process exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    cfg = RunConfig(args.command, args.model, args.data, args.seed, args.reps, args.alpha, args.eta,
                    args.out, args.threads, args.json)
    if cfg.threads < 1:
        stderr.write("error[usage]: --threads must be at least 1\n")
        return EXIT_USAGE
    if cfg.reps is not None and cfg.reps < 1:
        stderr.write("error[usage]: --reps must be at least 1\n")
        return EXIT_USAGE
    if not 0 < cfg.alpha < 1:
        stderr.write("error[usage]: --alpha must lie in (0, 1)\n")
        return EXIT_USAGE
    try:
        fields = HANDLERS[args.command](args, cfg)
    except _Reported as exc:
        _report(exc.fields, cfg, stdout)
        stderr.write(f"error[{exc.error.category}]: {exc.error}\n")
        return EXIT_MODEL_ERROR
    except GibbsError as exc:
        stderr.write(f"error[{exc.category}]: {exc}\n")
        return EXIT_MODEL_ERROR
    except (ValueError, OSError) as exc:
        stderr.write(f"error[usage]: {exc}\n")
        return EXIT_USAGE
    if cfg.output_path and args.command not in ("simulate", "limit-sample"):
        with open(cfg.output_path, "w") as fh:
            _report(fields, cfg, fh)
    _report(fields, cfg, stdout)
    return 0


def main() -> None:
    sys.exit(run())
