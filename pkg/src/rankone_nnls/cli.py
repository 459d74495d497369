"""Command-line front end.

Subcommands: phase, noise, covmatch, certify, diagnose.  Runs are
configured by a JSON file plus flag overrides (flags win), emit CSV data
files and JSON summaries with LF line endings and shortest round-trip
float formatting, and are accompanied by a manifest whose digest covers
the effective configuration, so reruns with equal manifests produce
byte-identical CSVs.

Exit codes: 0 success, 2 config error, 3 infeasible parameters,
4 precondition violation, 5 solver non-convergence.
"""

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .certificates import constant_chain, rip_to_nsp
from .diagnostics import (
    fourth_order_tail_check,
    norm_concentration_check,
    nsp_sampled_check,
    psi_r_estimate,
    rip_exhaustive,
    rip_sampled,
)
from .ensemble import SubgaussianLaw, build_phi, sample_ensemble
from .errors import (
    ConfigError,
    ConvergenceError,
    InfeasibleError,
    ParameterError,
    PreconditionError,
)
from .experiments import (
    CovarianceScenario,
    PhaseConfig,
    run_covariance_matching,
    run_noise_linearity,
    run_phase_transition,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_PRECONDITION = 4
EXIT_NONCONVERGENCE = 5


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows):
    """Canonical CSV: LF endings, '.' decimals, shortest round-trip floats."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row[k]) for k in header])


def write_json(path, doc):
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def config_digest(command, config):
    canon = json.dumps({"command": command, "config": config}, sort_keys=True,
                       separators=(",", ":"), default=_json_default)
    return hashlib.sha256(canon.encode()).hexdigest()


def write_manifest(out_dir, command, config, base_seed, artifacts):
    digest = config_digest(command, config)
    doc = {
        "command": command,
        "config_digest": digest,
        "base_seed": base_seed,
        "artifacts": [str(a) for a in artifacts],
        "tool_version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    write_json(Path(out_dir) / "manifest.json", doc)
    return digest


def load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as err:
        raise ConfigError(f"malformed config {path}: line {err.lineno} column {err.colno}: {err.msg}")


def merged_config(args, keys, required=()):
    """Config values with flag overrides; flags win over file values."""
    cfg = load_config(args.config)
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    out = dict(cfg)
    for key in keys:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            out[key] = flag
    for key in required:
        if key not in out or out[key] is None:
            raise ConfigError(f"missing required config key: {key!r}")
    return out


def _law_from_name(name):
    try:
        return SubgaussianLaw.named(name)
    except ParameterError:
        raise ConfigError(f"unknown law {name!r}")


def cmd_phase(args):
    cfg = merged_config(
        args,
        keys=("seed", "trials", "n_values", "s_values", "n_rule", "entries",
              "algorithm", "success_threshold", "workers"),
        required=("seed",),
    )
    pc = PhaseConfig(
        n_values=tuple(cfg.get("n_values", (20, 25, 30))),
        s_values=tuple(cfg.get("s_values", tuple(range(20, 151, 10)))),
        trials_per_cell=int(cfg.get("trials", 20)),
        success_threshold=float(cfg.get("success_threshold", 1e-4)),
        n_rule=str(cfg.get("n_rule", "4n(n-1)")),
        entries=str(cfg.get("entries", "real")),
        algorithm=str(cfg.get("algorithm", "active-set")),
        base_seed=int(cfg["seed"]),
        workers=int(cfg["workers"]) if cfg.get("workers") is not None else None,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    diagram = run_phase_transition(pc)
    header = ["n", "s", "trial", "seed", "success", "error_l2", "residual", "iterations"]
    csv_path = out_dir / "phase.csv"
    write_csv(csv_path, header, diagram.rows)
    effective = {k: (list(v) if isinstance(v, tuple) else v)
                 for k, v in vars(pc).items()}
    digest = write_manifest(out_dir, "phase", effective, pc.base_seed,
                            [csv_path, out_dir / "phase_summary.json"])
    summary = diagram.summary()
    summary["manifest_hash"] = digest
    write_json(out_dir / "phase_summary.json", summary)
    print(f"phase: {len(diagram.rows)} trials -> {csv_path}")
    return EXIT_OK


def cmd_noise(args):
    cfg = merged_config(
        args,
        keys=("seed", "n", "N", "s", "trials", "scales", "algorithm"),
        required=("seed",),
    )
    n = int(cfg.get("n", 25))
    N = int(cfg.get("N", 4 * n * (n - 1)))
    s = int(cfg.get("s", 20))
    trials = int(cfg.get("trials", 5))
    scales = cfg.get("scales")
    if scales is None:
        scales = np.logspace(-2, 0, 10).tolist()
    algorithm = str(cfg.get("algorithm", "active-set"))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows, summary = run_noise_linearity(n, N, s, scales, trials=trials,
                                        seed=int(cfg["seed"]), algorithm=algorithm)
    header = ["scale", "trial", "seed", "e_frob", "error_l2", "residual", "iterations", "bound"]
    csv_path = out_dir / "noise.csv"
    write_csv(csv_path, header, rows)
    effective = {"n": n, "N": N, "s": s, "trials": trials, "scales": scales,
                 "algorithm": algorithm, "seed": int(cfg["seed"])}
    digest = write_manifest(out_dir, "noise", effective, int(cfg["seed"]),
                            [csv_path, out_dir / "noise_summary.json"])
    summary["manifest_hash"] = digest
    write_json(out_dir / "noise_summary.json", summary)
    print(f"noise: R^2 = {summary['r_squared']:.6f}, slope = {summary['slope']:.6g}")
    return EXIT_OK


def cmd_covmatch(args):
    cfg = merged_config(
        args,
        keys=("seed", "n", "N", "s", "M_values", "trials", "noise_power", "algorithm"),
        required=("seed",),
    )
    n = int(cfg.get("n", 20))
    N = int(cfg.get("N", 200))
    s = int(cfg.get("s", 6))
    m_values = [int(m) for m in cfg.get("M_values", (1, 10, 100, 1000))]
    trials = int(cfg.get("trials", 5))
    noise_power = float(cfg.get("noise_power", 0.0))
    algorithm = str(cfg.get("algorithm", "active-set"))
    base_seed = int(cfg["seed"])
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for M in m_values:
        for trial in range(trials):
            sc = CovarianceScenario(n=n, N=N, s=s, M=M, noise_power=noise_power)
            rep = run_covariance_matching(sc, seed=base_seed + 7919 * trial + M,
                                          algorithm=algorithm)
            rows.append({
                "M": M, "trial": trial, "seed": rep["seed"],
                "error_l2_rel": rep["error_l2_rel"], "precision": rep["precision"],
                "recall": rep["recall"], "e_frob": rep["e_frob"],
                "residual": rep["residual"],
            })
    rows.sort(key=lambda r: (r["M"], r["trial"]))
    header = ["M", "trial", "seed", "error_l2_rel", "precision", "recall", "e_frob", "residual"]
    csv_path = out_dir / "covmatch.csv"
    write_csv(csv_path, header, rows)
    effective = {"n": n, "N": N, "s": s, "M_values": m_values, "trials": trials,
                 "noise_power": noise_power, "algorithm": algorithm, "seed": base_seed}
    digest = write_manifest(out_dir, "covmatch", effective, base_seed,
                            [csv_path, out_dir / "covmatch_summary.json"])
    med = {str(M): float(np.median([r["error_l2_rel"] for r in rows if r["M"] == M]))
           for M in m_values}
    write_json(out_dir / "covmatch_summary.json",
               {"median_error_l2_rel": med, "manifest_hash": digest, **effective})
    print(f"covmatch: median relative errors {med}")
    return EXIT_OK


def cmd_certify(args):
    chain = constant_chain(eta=args.eta, delta=args.delta, n=args.n,
                           N=args.N, alpha=args.alpha)
    text = json.dumps(chain, indent=2, sort_keys=True)
    print(text)
    if args.out:
        chain["manifest_hash"] = config_digest("certify", {
            "eta": args.eta, "delta": args.delta, "n": args.n,
            "N": args.N, "alpha": args.alpha})
        write_json(args.out, chain)
    return EXIT_OK


def _diag_out(args, doc, name):
    doc = dict(doc)
    doc["manifest_hash"] = config_digest(name, {k: v for k, v in vars(args).items()
                                                if k not in ("func", "out")})
    if args.out:
        write_json(args.out, doc)
    print(json.dumps(doc, indent=2, sort_keys=True, default=_json_default))
    return EXIT_OK


def cmd_diagnose_rip(args):
    if args.n is not None:
        e = sample_ensemble(args.n, args.N, law=_law_from_name(args.law), seed=args.seed)
        phi = build_phi(e)
        source = {"kind": "ensemble", "n": args.n, "N": args.N, "law": args.law}
    else:
        rng = np.random.default_rng(args.seed)
        phi = rng.standard_normal((args.rows, args.cols)) / np.sqrt(args.rows)
        source = {"kind": "gaussian-matrix", "rows": args.rows, "cols": args.cols}
    est = rip_sampled(phi, args.s, samples=args.samples, seed=args.seed) if args.sampled \
        else rip_exhaustive(phi, args.s)
    doc = est.to_dict()
    doc.update({"seed": args.seed, "source": source})
    return _diag_out(args, doc, "diagnose-rip")


def cmd_diagnose_nsp(args):
    e = sample_ensemble(args.n, args.N, law=_law_from_name(args.law), seed=args.seed)
    cert = rip_to_nsp(args.delta, args.s)
    violations = nsp_sampled_check(e, cert, trials=args.trials, seed=args.seed)
    doc = {"violations": violations, "trials": args.trials, "n": args.n, "N": args.N,
           "delta": args.delta, "s": args.s, "rho": cert.rho, "tau": cert.tau,
           "seed": args.seed}
    return _diag_out(args, doc, "diagnose-nsp")


def cmd_diagnose_tails(args):
    law = _law_from_name(args.law)
    norm_rep = norm_concentration_check(law, args.n, args.N, args.eta,
                                        samples=args.samples, seed=args.seed)
    fourth_rep = fourth_order_tail_check(law, args.n, args.omega,
                                         samples=args.samples, seed=args.seed)
    doc = {"norm_check": norm_rep.to_dict(), "fourth_order_check": fourth_rep.to_dict()}
    return _diag_out(args, doc, "diagnose-tails")


def cmd_diagnose_psi(args):
    rng = np.random.default_rng(args.seed)
    samples = rng.standard_normal(args.samples)
    est = psi_r_estimate(samples, args.r, p_max=args.p_max)
    doc = {"estimate": est, "r": args.r, "samples": args.samples, "p_max": args.p_max,
           "seed": args.seed, "source": "standard-gaussian"}
    return _diag_out(args, doc, "diagnose-psi")


def build_parser():
    ap = argparse.ArgumentParser(prog="rankone-nnls",
                                 description="Sparse nonnegative recovery from rank-one "
                                             "matrix observations: experiments and diagnostics")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phase", help="success-rate grid over (n, s)")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out-dir", default="phase_out")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--entries", choices=("real", "complex"))
    p.add_argument("--algorithm", choices=("active-set", "projected-gradient"))
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("noise", help="error versus noise-scale sweep")
    p.add_argument("--config")
    p.add_argument("--out-dir", default="noise_out")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--algorithm", choices=("active-set", "projected-gradient"))
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("covmatch", help="covariance-matching simulation over antenna counts")
    p.add_argument("--config")
    p.add_argument("--out-dir", default="covmatch_out")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--noise-power", dest="noise_power", type=float)
    p.add_argument("--algorithm", choices=("active-set", "projected-gradient"))
    p.set_defaults(func=cmd_covmatch)

    p = sub.add_parser("certify", help="emit the recovery-guarantee constant chain")
    p.add_argument("--eta", type=float, default=1.0 / 3.0)
    p.add_argument("--delta", type=float, default=1.0 / 6.0)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--N", type=int, default=4 * 20 * 19)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("diagnose", help="desk-scale verifiers")
    dsub = p.add_subparsers(dest="diagnostic", required=True)

    d = dsub.add_parser("rip", help="restricted isometry constant by enumeration")
    d.add_argument("--n", type=int, help="ensemble dimension (build the embedded matrix)")
    d.add_argument("--N", type=int, default=12)
    d.add_argument("--rows", type=int, default=8)
    d.add_argument("--cols", type=int, default=12)
    d.add_argument("--s", type=int, default=2)
    d.add_argument("--law", default="complex-gaussian")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--sampled", action="store_true")
    d.add_argument("--samples", type=int, default=1000)
    d.add_argument("--out")
    d.set_defaults(func=cmd_diagnose_rip)

    d = dsub.add_parser("nsp", help="sampled nullspace-property check")
    d.add_argument("--n", type=int, default=4)
    d.add_argument("--N", type=int, default=12)
    d.add_argument("--delta", type=float, default=0.3)
    d.add_argument("--s", type=int, default=2)
    d.add_argument("--law", default="complex-gaussian")
    d.add_argument("--trials", type=int, default=1000)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out")
    d.set_defaults(func=cmd_diagnose_nsp)

    d = dsub.add_parser("tails", help="concentration tail checks")
    d.add_argument("--n", type=int, default=16)
    d.add_argument("--N", type=int, default=1000)
    d.add_argument("--eta", type=float, default=0.5)
    d.add_argument("--omega", type=float, default=0.5)
    d.add_argument("--law", default="complex-gaussian")
    d.add_argument("--samples", type=int, default=10_000)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out")
    d.set_defaults(func=cmd_diagnose_tails)

    d = dsub.add_parser("psi", help="moment-based tail-norm estimate")
    d.add_argument("--r", type=float, default=2.0)
    d.add_argument("--samples", type=int, default=10_000)
    d.add_argument("--p-max", dest="p_max", type=int, default=32)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out")
    d.set_defaults(func=cmd_diagnose_psi)

    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as err:
        print(f"infeasible parameters: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except PreconditionError as err:
        print(f"precondition violation: {err}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ConvergenceError as err:
        print(f"solver did not converge: {err}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
