"""Command-line front end.

One executable, five commands selected with --command:

  fit       fit an estimator on a CSV file, write estimate + weights
  cv        cross-validate (lambda, h) grids on a CSV file
  simulate  run a replicated scenario and write per-replication scores
  bench     time partial minimization against full alternate minimization
  theory    print regularization choices, error bounds and lemma sweeps

Settings resolve with precedence: built-in defaults < config file
(--config, flat key=value lines, '#' comments) < command-line flags.
Unknown config keys are rejected.  Exit codes: 0 success, 2 usage or
input error, 3 numerical failure.  All data files are byte-reproducible
for a fixed seed; wall-clock measurements go to separate timing files.
"""

import argparse
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import tableio
from .errors import CliInputError, LineSearchFailed, NotPositiveDefinite, TrimfitError
from .estimators import (CVPlan, EstimatorSpec, TRIMMED_GLASSO, TRIMMED_LOGISTIC,
                         cross_validate, fit)
from .linalg import cholesky_logdet, symmetrize
from .simulate import (EstimatorRun, ScenarioSpec, run_experiment)
from .solver import SolverConfig, fit_alternate_min, fit_partial_min
from .theory import (gaussian_outlier_bound, general_error_bounds,
                     glasso_frobenius_bound, glasso_lambda_choice,
                     lts_error_bounds, lts_lambda_choice,
                     sample_cov_deviation_rate, check_logdet_curvature,
                     TheoryParams)
from .randomness import rng_from_seed, normal_samples

ESTIMATOR_DATA_KIND = {
    "sparse_lts": "regression",
    "trimmed_logistic": "regression",
    "trimmed_glasso": "ggm",
    "tracenorm_lts": "multiresponse",
}

_SOLVER_KEYS = {
    "max_iter": int,
    "tol_rel_obj": float,
    "tol_grad_map": float,
    "ls_shrink": float,
    "ls_init_step": float,
    "weight_stable_iters": int,
}

_COMMON_KEYS = {"seed": int, "threads": int, "output": str}

_KEYS = {
    "fit": {
        **_COMMON_KEYS, **_SOLVER_KEYS,
        "input": str, "estimator": str, "lambda": float, "h": int,
        "trim_frac": float, "rho": float,
    },
    "cv": {
        **_COMMON_KEYS, **_SOLVER_KEYS,
        "input": str, "estimator": str, "lambda_grid": str, "h_grid": str,
        "folds": int, "scoring": str, "rho": float,
    },
    "simulate": {
        **_COMMON_KEYS, **_SOLVER_KEYS,
        "scenario": str, "n": int, "p": int, "q": int, "rank": int, "k": int,
        "p_out": float, "variant": str, "contamination": float,
        "flip_rule": str, "flip_frac": float, "outlier_mean": float,
        "outlier_sd": float, "ar1": float, "outlier_model": str,
        "outlier_shift": float, "reps": int, "estimator": str,
        "lambda": float, "lambda_grid": str, "h": int, "trim_frac": float,
        "untrimmed_baseline": str,
    },
    "bench": {
        **_COMMON_KEYS, **_SOLVER_KEYS,
        "n": int, "p": int, "q": int, "rank": int, "contamination": float,
        "lambda": float, "trim_frac": float,
    },
    "theory": {
        **_COMMON_KEYS,
        "calc": str, "input": str, "tau": float, "trials": int, "n": int,
        "p": int, "c": float, "c2": float, "k": int, "b": int, "f": float,
        "curvature": float, "compat": float, "tol_l2": float, "lambda": float,
        "a": float, "spectral": float, "kept": int, "slack": float,
    },
}

_DEFAULTS = {
    "seed": 0, "threads": 1, "scoring": None, "folds": 5, "reps": 20,
    "tau": 3.0, "trials": 500, "rho": math.inf,
}


def _parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="trimfit",
        description="Trimmed regularized M-estimators: fitting, tuning, "
                    "simulation, benchmarking and bound calculators.",
    )
    parser.add_argument("--command", required=True,
                        choices=["fit", "cv", "simulate", "bench", "theory"])
    parser.add_argument("--input")
    parser.add_argument("--output")
    parser.add_argument("--estimator")
    parser.add_argument("--lambda", dest="lam")
    parser.add_argument("--h", dest="h")
    parser.add_argument("--trim-frac", dest="trim_frac")
    parser.add_argument("--seed")
    parser.add_argument("--config")
    parser.add_argument("--threads")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="extra command-specific setting; repeatable")
    return parser.parse_args(argv)


def _resolve_settings(args):
    known = _KEYS[args.command]
    settings = {k: v for k, v in _DEFAULTS.items() if k in known}
    if args.config:
        for key, value in tableio.read_config(args.config).items():
            if key not in known:
                raise CliInputError(f"unknown config key {key!r} for command {args.command}")
            settings[key] = value
    flag_values = {
        "input": args.input, "output": args.output, "estimator": args.estimator,
        "lambda": args.lam, "h": args.h, "trim_frac": args.trim_frac,
        "seed": args.seed, "threads": args.threads,
    }
    for key, value in flag_values.items():
        if value is not None:
            if key not in known:
                raise CliInputError(f"flag --{key} is not valid for command {args.command}")
            settings[key] = value
    for item in args.set:
        if "=" not in item:
            raise CliInputError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        if key not in known:
            raise CliInputError(f"unknown setting {key!r} for command {args.command}")
        settings[key] = value
    out = {}
    for key, value in settings.items():
        if value is None:
            out[key] = None
            continue
        conv = known[key]
        try:
            out[key] = conv(value) if not isinstance(value, conv) else value
        except (TypeError, ValueError):
            raise CliInputError(f"setting {key!r}: cannot parse {value!r}") from None
    return out


def _require(settings, *keys):
    for key in keys:
        if settings.get(key) is None:
            raise CliInputError(f"required setting {key!r} is missing")


def _solver_config(settings):
    cfg = SolverConfig(seed=settings.get("seed", 0))
    overrides = {k: settings[k] for k in _SOLVER_KEYS if settings.get(k) is not None}
    return replace(cfg, **overrides) if overrides else cfg


def _estimator_spec(settings, n=None):
    _require(settings, "estimator")
    kind = settings["estimator"]
    if kind not in ESTIMATOR_DATA_KIND:
        raise CliInputError(f"unknown estimator {kind!r}")
    lam = settings.get("lambda")
    h = settings.get("h")
    trim_frac = settings.get("trim_frac")
    if h is None and trim_frac is None:
        trim_frac = 0.0  # untrimmed default
    return EstimatorSpec(
        kind=kind,
        lam=0.0 if lam is None else lam,
        h=h,
        trim_fraction=trim_frac,
        ball_radius=settings.get("rho", math.inf),
        solver=_solver_config(settings),
    )


def _out_dir(settings):
    _require(settings, "output")
    out = Path(settings["output"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _float_grid(text):
    try:
        grid = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliInputError(f"could not parse grid {text!r}") from None
    if not grid:
        raise CliInputError("empty grid")
    return grid


def _manifest_base(command, settings):
    manifest = {"command": command}
    for key, value in settings.items():
        if value is not None:
            manifest[key] = value
    return manifest


def cmd_fit(settings):
    _require(settings, "input", "estimator")
    spec = _estimator_spec(settings)
    dataset = tableio.dataset_from_csv(settings["input"],
                                       ESTIMATOR_DATA_KIND[spec.kind])
    t0 = time.perf_counter()
    result = fit(spec, dataset)
    elapsed = time.perf_counter() - t0
    out = _out_dir(settings)
    if result.theta.ndim == 1:
        tableio.write_vector_csv(out / "estimate.csv", result.theta)
    else:
        tableio.write_matrix_csv(out / "estimate.csv", result.theta)
    from .losses import make_loss  # local import to avoid cycle at module load
    from .estimators import build_problem
    loss, _, _, _ = build_problem(spec, dataset)
    losses = loss.sample_losses(result.theta)
    tableio.write_csv(out / "weights.csv", ["sample_index", "included", "loss"],
                      [[i, int(result.weights.indicators[i]), losses[i]]
                       for i in range(dataset.n)])
    manifest = _manifest_base("fit", settings)
    manifest.update({
        "resolved_h": spec.resolve_h(dataset.n),
        "n": dataset.n, "p": dataset.p,
        "iterations": result.iterations,
        "converged": result.converged,
        "degenerate": result.degenerate,
        "final_objective": tableio.fmt(result.final_objective),
        "first_objective": tableio.fmt(result.objective_trace[0]),
        "ls_backtracks": result.ls_backtracks,
        "pd_rejections": result.pd_rejections,
        "ball_projections": result.ball_projections,
        "weight_stabilized_at": result.weight_stabilized_at,
    })
    tableio.write_keyvalues(out / "manifest.txt", manifest)
    tableio.write_keyvalues(out / "timing.txt", {"wall_time_seconds": elapsed})
    return 0


def cmd_cv(settings):
    _require(settings, "input", "estimator", "lambda_grid", "h_grid")
    kind = settings["estimator"]
    if kind not in ESTIMATOR_DATA_KIND:
        raise CliInputError(f"unknown estimator {kind!r}")
    dataset = tableio.dataset_from_csv(settings["input"], ESTIMATOR_DATA_KIND[kind])
    lambda_grid = _float_grid(settings["lambda_grid"])
    h_grid = [int(v) for v in settings["h_grid"].split(",") if v.strip()]
    scoring = settings.get("scoring")
    if scoring is None:
        scoring = {"trimmed_logistic": "deviance",
                   "trimmed_glasso": "heldout_loglik"}.get(kind, "trimmed_mse")
    plan = CVPlan(tuple(lambda_grid), tuple(h_grid), folds=settings["folds"],
                  scoring=scoring, seed=settings["seed"])
    template = EstimatorSpec(kind=kind, lam=lambda_grid[0], h=h_grid[0],
                             ball_radius=settings.get("rho", math.inf),
                             solver=_solver_config(settings))
    t0 = time.perf_counter()
    best_lam, best_h, table = cross_validate(template, plan, dataset,
                                             threads=settings["threads"])
    elapsed = time.perf_counter() - t0
    out = _out_dir(settings)
    rows = [[rec["lambda"], rec["h"], rec["mean_score"],
             *rec["fold_scores"]] for rec in table]
    header = ["lambda", "h", "mean_score"] + [f"fold{i + 1}" for i in range(plan.folds)]
    tableio.write_csv(out / "cv_scores.csv", header, rows)
    manifest = _manifest_base("cv", settings)
    manifest.update({"best_lambda": tableio.fmt(best_lam), "best_h": best_h,
                     "scoring": scoring, "n": dataset.n, "p": dataset.p})
    tableio.write_keyvalues(out / "manifest.txt", manifest)
    tableio.write_keyvalues(out / "timing.txt", {"wall_time_seconds": elapsed})
    print(f"best lambda={tableio.fmt(best_lam)} h={best_h}")
    return 0


def _scenario_from_settings(settings):
    _require(settings, "scenario", "n", "p")
    kind = settings["scenario"]
    base = dict(n=settings["n"], p=settings["p"], seed=settings["seed"])
    if kind == "logistic_flip":
        return ScenarioSpec.logistic_flip(
            flip_rule=settings.get("flip_rule") or "frac",
            flip_frac=settings.get("flip_frac") or 0.1,
            k=settings.get("k"), **base)
    if kind == "tracenorm":
        _require(settings, "q")
        return ScenarioSpec.tracenorm(
            q=settings["q"], rank=settings.get("rank") or 3,
            contamination=settings.get("contamination") or 0.0,
            outlier_mean=settings.get("outlier_mean") or 2.0,
            outlier_sd=settings.get("outlier_sd") or 1.0, **base)
    if kind == "ggm_mixture":
        return ScenarioSpec.ggm_mixture(
            p_out=settings.get("p_out") or 0.1,
            variant=settings.get("variant") or "M1", **base)
    if kind == "linear_generic":
        _require(settings, "k")
        return ScenarioSpec.linear_generic(
            k=settings["k"], ar1=settings.get("ar1") or 0.6,
            contamination=settings.get("contamination") or 0.0,
            outlier_model=settings.get("outlier_model") or "vertical",
            outlier_shift=settings.get("outlier_shift") or 20.0, **base)
    raise CliInputError(f"unknown scenario {kind!r}")


def cmd_simulate(settings):
    if settings["reps"] < 1:
        raise CliInputError("reps must be at least 1")
    scenario = _scenario_from_settings(settings)
    spec = _estimator_spec(settings)
    grid = settings.get("lambda_grid")
    lambda_grid = tuple(sorted(_float_grid(grid), reverse=True)) if grid else None
    runs = [EstimatorRun(label=spec.kind, spec=spec, lambda_grid=lambda_grid)]
    if str(settings.get("untrimmed_baseline", "")).lower() in ("1", "true", "yes"):
        base_spec = replace(spec, h=None, trim_fraction=0.0)
        runs.append(EstimatorRun(label=spec.kind + "_untrimmed", spec=base_spec,
                                 lambda_grid=lambda_grid))
    t0 = time.perf_counter()
    report = run_experiment(scenario, runs, settings["reps"],
                            threads=settings["threads"])
    elapsed = time.perf_counter() - t0
    out = _out_dir(settings)
    header = ["replication", "estimator", "lambda", "h", "l2_error", "l1_error",
              "frobenius_error", "offdiag_l1_error", "tpr", "fpr", "trimmed_mse"]
    rows = [[r.replication, r.estimator, r.lam, r.h, r.metrics.l2_error,
             r.metrics.l1_error, r.metrics.frobenius_error,
             r.metrics.offdiag_l1_error, r.metrics.tpr, r.metrics.fpr,
             r.metrics.trimmed_mse] for r in report.rows]
    tableio.write_csv(out / "results.csv", header, rows)
    sum_header = ["estimator", "lambda", "h", "l2_error", "l1_error",
                  "frobenius_error", "offdiag_l1_error", "tpr", "fpr", "mean_auc"]
    sum_rows = [[s["estimator"], s["lambda"], s["h"], s["l2_error"], s["l1_error"],
                 s["frobenius_error"], s["offdiag_l1_error"], s["tpr"], s["fpr"],
                 s.get("mean_auc", math.nan)] for s in report.summary]
    tableio.write_csv(out / "summary.csv", sum_header, sum_rows)
    manifest = _manifest_base("simulate", settings)
    manifest.update({"rows": len(rows)})
    tableio.write_keyvalues(out / "manifest.txt", manifest)
    tableio.write_csv(out / "fit_times.csv",
                      ["replication", "estimator", "lambda", "wall_time_seconds"],
                      [[r, label, lam, sec] for r, label, lam, sec in report.wall_times])
    tableio.write_keyvalues(out / "timing.txt", {"wall_time_seconds": elapsed})
    return 0


def cmd_bench(settings):
    from .estimators import build_problem
    n = settings.get("n") or 50
    p = settings.get("p") or 300
    q = settings.get("q") or 10
    contamination = settings.get("contamination") or 0.2
    scenario = ScenarioSpec.tracenorm(n=n, p=p, q=q,
                                      rank=settings.get("rank") or 3,
                                      contamination=contamination,
                                      seed=settings["seed"])
    from .simulate import generate
    dataset, _, _ = generate(scenario)
    lam = settings.get("lambda")
    spec = EstimatorSpec(kind="tracenorm_lts",
                         lam=0.1 if lam is None else lam,
                         trim_fraction=settings.get("trim_frac") or contamination,
                         solver=_solver_config(settings))
    loss, reg, h, theta0 = build_problem(spec, dataset)
    t0 = time.perf_counter()
    partial = fit_partial_min(loss, reg, h, theta0, spec.solver)
    t_partial = time.perf_counter() - t0
    t0 = time.perf_counter()
    alternate = fit_alternate_min(loss, reg, h, theta0, spec.solver)
    t_alternate = time.perf_counter() - t0
    out = _out_dir(settings)
    tableio.write_csv(out / "bench.csv",
                      ["solver", "iterations", "converged", "final_objective"],
                      [["partial_min", partial.iterations, int(partial.converged),
                        partial.final_objective],
                       ["alternate_min", alternate.iterations, int(alternate.converged),
                        alternate.final_objective]])
    tableio.write_csv(out / "bench_times.csv", ["solver", "wall_time_seconds"],
                      [["partial_min", t_partial], ["alternate_min", t_alternate]])
    manifest = _manifest_base("bench", settings)
    manifest.update({"n": n, "p": p, "q": q, "resolved_h": h})
    tableio.write_keyvalues(out / "manifest.txt", manifest)
    print(f"partial_min {t_partial:.3f}s vs alternate_min {t_alternate:.3f}s")
    return 0


def cmd_theory(settings):
    _require(settings, "calc")
    calc = settings["calc"]
    lines = []
    if calc == "glasso_lambda":
        _require(settings, "kept", "b", "f")
        sigma = (tableio.read_matrix_csv(settings["input"])
                 if settings.get("input") else np.eye(settings.get("p") or 1))
        lam = glasso_lambda_choice(sigma, settings["kept"], settings["b"],
                                   settings["f"], tau=settings["tau"])
        lines.append(("lambda", lam))
    elif calc == "glasso_bound":
        _require(settings, "c", "k", "p", "n", "f", "b", "curvature")
        bound = glasso_frobenius_bound(settings["c"], settings["k"], settings["p"],
                                       settings["n"], settings["f"], settings["b"],
                                       settings["curvature"])
        lines.append(("frobenius_bound", bound))
        if settings.get("a") is not None and settings.get("spectral") is not None:
            lines.append(("gaussian_outlier_bound",
                          gaussian_outlier_bound(settings["a"], settings["p"],
                                                 settings["spectral"])))
    elif calc == "lts":
        _require(settings, "kept", "p", "c")
        lines.append(("lambda", lts_lambda_choice(settings["kept"], settings["p"],
                                                  settings["c"])))
        if settings.get("c2") is not None and settings.get("k") is not None:
            l2, l1 = lts_error_bounds(settings["c"], settings["c2"], settings["k"],
                                      settings.get("b") or 0, settings["kept"],
                                      settings["p"])
            lines.append(("l2_bound", l2))
            lines.append(("l1_bound", l1))
    elif calc == "general":
        _require(settings, "curvature", "lambda", "compat")
        tp = TheoryParams(curvature=settings["curvature"],
                          tol_l2=settings.get("tol_l2") or 0.0,
                          compatibility=settings["compat"],
                          reg_strength=settings["lambda"])
        l2, reg_bound = general_error_bounds(tp)
        lines.append(("l2_bound", l2))
        lines.append(("reg_bound", reg_bound))
    elif calc == "rsc_sweep":
        _require(settings, "p", "trials")
        passes = _rsc_sweep(settings["p"], settings["trials"], settings["seed"])
        lines.append(("trials", settings["trials"]))
        lines.append(("passes", passes))
    elif calc == "samplecov":
        _require(settings, "n", "p", "trials")
        sigma = (tableio.read_matrix_csv(settings["input"])
                 if settings.get("input") else np.eye(settings["p"]))
        rate = sample_cov_deviation_rate(sigma, settings["n"], settings["tau"],
                                         settings["trials"], seed=settings["seed"])
        allowed = 4.0 / settings["p"] ** (settings["tau"] - 2.0)
        lines.append(("violation_rate", rate))
        lines.append(("theoretical_rate", allowed))
    else:
        raise CliInputError(f"unknown calc {calc!r}")
    for name, value in lines:
        print(f"{name}={tableio.fmt(value)}")
    return 0


def _rsc_sweep(p, trials, seed):
    rng = rng_from_seed(seed)
    passes = 0
    for _ in range(trials):
        dim = int(rng.integers(2, p + 1))
        a = normal_samples(rng, (dim, dim))
        precision = a @ a.T / dim + 0.5 * np.eye(dim)
        d = normal_samples(rng, (dim, dim))
        d = 0.5 * (d + d.T)
        d *= rng.random() / max(1e-12, np.linalg.norm(d, "fro"))
        while True:
            try:
                cholesky_logdet(symmetrize(precision + d, rtol=1.0))
                break
            except NotPositiveDefinite:
                d *= 0.5
        if check_logdet_curvature(precision, d):
            passes += 1
    return passes


_COMMANDS = {"fit": cmd_fit, "cv": cmd_cv, "simulate": cmd_simulate,
             "bench": cmd_bench, "theory": cmd_theory}


def main(argv=None):
    args = _parse_args(sys.argv[1:] if argv is None else argv)
    try:
        settings = _resolve_settings(args)
        return _COMMANDS[args.command](settings)
    except (LineSearchFailed, NotPositiveDefinite) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (TrimfitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
