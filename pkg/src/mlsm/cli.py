"""Command-line surface: simulate | fit | infer | changepoints | coverage | scree.

Exit codes: 0 ok, 2 config error, 3 data error, 4 convergence failure,
5 conditioning failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import families as fam
from . import inference, simulate, tensorio
from .errors import (ConditioningError, ConvergenceError, MlsmError, ParseError,
                     RankDeficiencyError, SupportError)
from .factor import FitConfig
from .pipeline import estimate, scree_singular_values

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4
EXIT_CONDITIONING = 5


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config file; flags override it")
    p.add_argument("--family", choices=fam.KINDS, default=None)
    p.add_argument("--dispersion", type=float, default=None)
    p.add_argument("--clamp", type=float, default=None)
    p.add_argument("--k1", type=int, default=None)
    p.add_argument("--k2", type=int, default=None)
    p.add_argument("--k-alpha", type=int, default=None)
    p.add_argument("--k-beta", type=int, default=None)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--tol-loglik", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None,
                   help="cap internal parallelism (also via MLSM_THREADS)")


_DEFAULTS = {
    "family": "gaussian", "dispersion": 1.0, "clamp": fam.DEFAULT_CLAMP,
    "k1": 2, "k2": 2, "k_alpha": 1, "k_beta": 1,
    "max_iters": 500, "tol_loglik": 1e-8, "seed": 0, "threads": None,
}


def _resolve(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < explicit flags."""
    cfg = dict(_DEFAULTS)
    if getattr(args, "config", None):
        try:
            cfg.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as e:
            raise ParseError(f"cannot read config {args.config}: {e}")
    for key in cfg:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    threads = cfg.get("threads") or os.environ.get("MLSM_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(threads))
    return cfg


def _family_from(cfg: dict) -> fam.FamilySpec:
    disp = cfg["dispersion"] if cfg["family"] == "gaussian" else 1.0
    return fam.FamilySpec(cfg["family"], dispersion=disp, clamp=cfg["clamp"])


def _fit_config_from(cfg: dict) -> FitConfig:
    return FitConfig(k1=cfg["k1"], k2=cfg["k2"], k_alpha=cfg["k_alpha"],
                     k_beta=cfg["k_beta"], max_iters=cfg["max_iters"],
                     tol_loglik=cfg["tol_loglik"], seed=cfg["seed"])


def cmd_simulate(args) -> int:
    cfg = _resolve(args)
    f = _family_from(cfg)
    rng = np.random.default_rng(cfg["seed"])
    truth = simulate.gen_params(args.n, args.T, cfg["k1"], cfg["k2"],
                                cfg["k_alpha"], cfg["k_beta"], rng,
                                signal=args.signal, degree_scale=args.degree_scale)
    Y = simulate.gen_network(truth, f, rng)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tensorio.write_tensor(out / "y.mlsm", Y, fmt=args.format)
    tensorio.write_matrix_csv(out / "truth_theta.csv", truth.Theta)
    tensorio.write_matrix_csv(out / "truth_phi.csv", truth.Phi)
    from .tensor import unfold

    tensorio.write_matrix_csv(out / "truth_core_mode1.csv", unfold(truth.core, 1))
    (out / "meta.json").write_text(json.dumps(
        {"n": args.n, "T": args.T, "family": f.to_dict(), "seed": cfg["seed"],
         "signal": args.signal, "degree_scale": args.degree_scale,
         "k1": cfg["k1"], "k2": cfg["k2"], "k_alpha": cfg["k_alpha"],
         "k_beta": cfg["k_beta"]}, indent=2, sort_keys=True) + "\n")
    print(f"wrote tensor and ground truth to {out}")
    return EXIT_OK


def _load_and_fit(args, cfg):
    Y = tensorio.read_tensor(args.tensor)
    f = _family_from(cfg)
    fit = estimate(Y, f, _fit_config_from(cfg))
    return Y, f, fit


def cmd_fit(args) -> int:
    cfg = _resolve(args)
    _, _, fit = _load_and_fit(args, cfg)
    tensorio.save_fit(fit, args.out)
    print(f"fit written to {args.out}")
    return EXIT_OK


def cmd_infer(args) -> int:
    cfg = _resolve(args)
    Y, f, fit = _load_and_fit(args, cfg)
    f_inf = f
    if f.kind == "gaussian" and args.estimate_dispersion:
        s2 = inference.gaussian_sigma0_hat(Y, fit)
        f_inf = fam.FamilySpec("gaussian", dispersion=s2, clamp=f.clamp)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for which in ("theta", "phi"):
        for node in args.node:
            ci = inference.ci_position(fit, which, node - 1, args.level, f_inf)
            for r in range(len(ci["center"])):
                rows.append([which, node, r + 1, ci["center"][r], ci["lower"][r],
                             ci["upper"][r], ci["se"][r]])
    with (out / "ci_positions.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["target", "node", "coord", "estimate", "lower", "upper", "se"])
        w.writerows(rows)
    core_rows = []
    from scipy.stats import norm

    q = norm.ppf(0.5 + args.level / 2.0)
    for (i, j, t) in args.core_entry or []:
        est = fit.core.values[i - 1, j - 1, t - 1]
        se = np.sqrt(inference.core_variance(fit, i - 1, j - 1, t - 1, f_inf))
        core_rows.append([i, j, t, est, est - q * se, est + q * se, se])
    with (out / "ci_core.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "t", "estimate", "lower", "upper", "se"])
        w.writerows(core_rows)
    print(f"confidence intervals written to {out}")
    return EXIT_OK


def cmd_changepoints(args) -> int:
    cfg = _resolve(args)
    Y, f, fit = _load_and_fit(args, cfg)
    f_inf = f
    if f.kind == "gaussian" and args.estimate_dispersion:
        s2 = inference.gaussian_sigma0_hat(Y, fit)
        f_inf = fam.FamilySpec("gaussian", dispersion=s2, clamp=f.clamp)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    detected = []
    with (out / "layer_tests.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "t_prime", "reject", "max_abs_z", "rejecting_entries"])
        for t in range(1, fit.T):
            res = inference.layer_test(fit, t, t - 1, args.alpha, f_inf)
            if res.reject:
                detected.append(t + 1)
            zmax = max(abs(tr.z) for tr in res.tests)
            w.writerow([t + 1, t, int(res.reject), f"{zmax:.6g}",
                        ";".join(f"{i + 1}-{j + 1}" for i, j in res.rejecting_entries)])
    (out / "changepoints.json").write_text(json.dumps(
        {"alpha": args.alpha, "detected_layers": detected}, indent=2) + "\n")
    print(f"detected change points (1-based layers): {detected}")
    return EXIT_OK


def cmd_coverage(args) -> int:
    cfg = _resolve(args)
    res = simulate.coverage_experiment(cfg["family"], args.n, args.T, args.reps,
                                       args.level, seed=cfg["seed"],
                                       k1=cfg["k1"], k2=cfg["k2"],
                                       k_alpha=cfg["k_alpha"], k_beta=cfg["k_beta"],
                                       signal=args.signal,
                                       sigma0=cfg["dispersion"], progress=args.progress)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "n", "T", "reps", "level", "target", "coverage",
                    "binomial_se", "failures"])
        for tgt in ("theta", "phi", "lambda"):
            w.writerow([res["scenario"], res["n"], res["T"], res["reps"], res["level"],
                        tgt, f"{res['coverage'][tgt]:.4f}",
                        f"{res['binomial_se'][tgt]:.4f}", res["failures"]])
    print(f"coverage table written to {out}")
    return EXIT_OK


def cmd_scree(args) -> int:
    _resolve(args)
    Y = tensorio.read_tensor(args.tensor)
    sv = scree_singular_values(Y)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mode", "index", "singular_value"])
        for mode in (1, 2):
            for idx, s in enumerate(sv[mode], start=1):
                w.writerow([mode, idx, f"{s:.10g}"])
    print(f"singular values written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mlsm",
                                description="Multilayer latent space model estimation and inference")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="generate a synthetic tensor with ground truth")
    ps.add_argument("--n", type=int, required=True)
    ps.add_argument("--T", type=int, required=True)
    ps.add_argument("--signal", type=float, default=4.0)
    ps.add_argument("--degree-scale", type=float, default=1.0)
    ps.add_argument("--format", choices=["binary", "triples"], default="binary")
    ps.add_argument("--out", type=Path, required=True)
    _add_common(ps)
    ps.set_defaults(func=cmd_simulate)

    pf = sub.add_parser("fit", help="estimate latent positions and connection matrices")
    pf.add_argument("tensor", type=Path)
    pf.add_argument("--out", type=Path, required=True)
    _add_common(pf)
    pf.set_defaults(func=cmd_fit)

    pi = sub.add_parser("infer", help="confidence intervals for fitted quantities")
    pi.add_argument("tensor", type=Path)
    pi.add_argument("--out", type=Path, required=True)
    pi.add_argument("--node", type=int, nargs="+", default=[1])
    pi.add_argument("--core-entry", type=int, nargs=3, action="append", metavar=("I", "J", "T"))
    pi.add_argument("--level", type=float, default=0.95)
    pi.add_argument("--estimate-dispersion", action="store_true",
                    help="gaussian only: use the residual noise-variance estimate")
    _add_common(pi)
    pi.set_defaults(func=cmd_infer)

    pc = sub.add_parser("changepoints", help="scan consecutive layers for structural change")
    pc.add_argument("tensor", type=Path)
    pc.add_argument("--out", type=Path, required=True)
    pc.add_argument("--alpha", type=float, default=0.05)
    pc.add_argument("--estimate-dispersion", action="store_true")
    _add_common(pc)
    pc.set_defaults(func=cmd_changepoints)

    pv = sub.add_parser("coverage", help="Monte Carlo confidence-interval coverage")
    pv.add_argument("--n", type=int, required=True)
    pv.add_argument("--T", type=int, required=True)
    pv.add_argument("--reps", type=int, default=200)
    pv.add_argument("--level", type=float, default=0.95)
    pv.add_argument("--signal", type=float, default=4.0)
    pv.add_argument("--progress", action="store_true")
    pv.add_argument("--out", type=Path, required=True)
    _add_common(pv)
    pv.set_defaults(func=cmd_coverage)

    pr = sub.add_parser("scree", help="singular values of the centered unfoldings")
    pr.add_argument("tensor", type=Path)
    pr.add_argument("--out", type=Path, required=True)
    _add_common(pr)
    pr.set_defaults(func=cmd_scree)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ParseError, SupportError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (ConvergenceError, RankDeficiencyError) as e:
        print(f"convergence error: {e}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ConditioningError as e:
        print(f"conditioning error: {e}", file=sys.stderr)
        return EXIT_CONDITIONING
    except MlsmError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
