"""Batch command-line front-end.

Each command reads a measure spec (JSON; the built-in reference measure
when --spec is omitted), runs one named experiment, and writes a CSV
table plus a summary document echoing the fully resolved configuration
and seed.  Reruns with the same configuration and seed produce
byte-identical CSV files.

Exit status: 0 on pass/complete, 2 when a verdict fails, 1 on input
errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import estimators as est
from . import harness as hz
from .cones import lorentz_cone, orthant_cone, psd_cone, psd_map_congruence, psd_map_rank_one
from .measures import MeasureSpec
from .simplex import contraction_coefficient, hilbert_distance, sample_point
from .walk import backward_invariant_sample, detect_contraction

COMMANDS = ("validate-spec", "detect-contraction", "lyapunov", "invariant-sample",
            "coupling-decay", "variance", "normality", "berry-esseen",
            "asip-proxy", "deviation", "regularity", "aperiodicity",
            "cone-demo", "fixtures")


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_summary(out: Path, command: str, config: dict, results: dict,
                   verdict: str) -> None:
    doc = {
        "command": command,
        "version": __version__,
        "config": config,
        "seed": config.get("seed"),
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "results": results,
        "verdict": verdict,
    }
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _load_spec(args) -> MeasureSpec:
    if args.spec is None:
        return hz.reference_spec()
    try:
        return MeasureSpec.load(args.spec)
    except FileNotFoundError as exc:
        raise InputError(f"spec file not found: {args.spec}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(
            f"spec file {args.spec} is not valid JSON "
            f"(line {exc.lineno}, column {exc.colno}): {exc.msg}") from exc
    except ValueError as exc:
        raise InputError(f"spec file {args.spec}: {exc}") from exc


def _parse_grid(text: str):
    try:
        return [int(tok) for tok in text.split(",") if tok]
    except ValueError as exc:
        raise InputError(f"bad grid {text!r}: comma-separated integers expected") from exc


def _parse_cone(text: str):
    try:
        kind, _, size = text.partition(":")
        size = int(size)
        if kind == "orthant":
            return orthant_cone(size)
        if kind == "lorentz":
            return lorentz_cone(size)
        if kind == "psd":
            return psd_cone(size)
    except ValueError:
        pass
    raise InputError(f"bad cone {text!r}: expected orthant:d, lorentz:n, or psd:n")


def _positive(args, **fields):
    for name, value in fields.items():
        if value is not None and value <= 0:
            raise InputError(f"--{name} must be positive, got {value}")


# ---------------------------------------------------------------------
# Command implementations: each returns (rows_header, rows, results, verdict)
# ---------------------------------------------------------------------


def _cmd_validate_spec(args, config):
    spec = _load_spec(args)
    results = {"kind": spec.kind, "d": spec.d,
               "atoms": len(spec.atoms) if spec.atoms else 0,
               "transpose_view": spec.transpose_view}
    header = ["field", "value"]
    rows = [[k, v] for k, v in results.items()]
    return header, rows, results, "complete"


def _cmd_detect_contraction(args, config):
    spec = _load_spec(args)
    found = detect_contraction(spec, r_max=args.n or 8,
                               samples=args.replicas or 512, seed=args.seed)
    if found is None:
        results = {"found": False, "r_max": args.n or 8}
        rows = [["not-found", args.n or 8, 0.0]]
    else:
        results = {"found": True, "r": found.r, "frequency": found.frequency}
        rows = [["found", found.r, found.frequency]]
    return ["status", "r", "frequency"], rows, results, "complete"


def _cmd_lyapunov(args, config):
    spec = _load_spec(args)
    n = args.n or 512
    replicas = args.replicas or 4096
    res = est.estimate_lyapunov(spec, n, replicas, seed=args.seed)
    e = res.estimate
    rows = [["lyapunov", e.value, e.std_error, e.replicas, f"n={n}"],
            ["norm-v-spread", res.spread, 0.0, e.replicas, f"n={n}"]]
    results = {"value": e.value, "std_error": e.std_error, "spread": res.spread}
    return ["method", "value", "std_error", "replicas", "params"], rows, results, "complete"


def _cmd_invariant_sample(args, config):
    spec = _load_spec(args)
    tol = args.tol or 1e-8
    res = backward_invariant_sample(spec, args.seed, tol)
    rows = [[json.dumps(res.point.coords.tolist()), res.certificate, res.steps]]
    results = {"certificate": res.certificate, "steps": res.steps,
               "point": res.point.coords.tolist()}
    return ["point", "certificate", "steps"], rows, results, "complete"


def _cmd_coupling_decay(args, config):
    spec = _load_spec(args)
    grid = _parse_grid(args.n_grid) if args.n_grid else list(range(1, 41))
    replicas = args.replicas or 4096
    curve = est.coupling_decay(spec, args.p or 1.0, grid, replicas, seed=args.seed)
    rows = [[n, v] for n, v in zip(curve.n_grid, curve.values)]
    results = {"a_hat": curve.a_hat, "r_squared": curve.r_squared,
               "max_violation": curve.max_violation}
    ok = curve.a_hat is not None and curve.a_hat < 1 \
        and (curve.max_violation is None or curve.max_violation <= 1e-9)
    return ["n", "delta_hat"], rows, results, "pass" if ok else "fail"


def _cmd_variance(args, config):
    spec = _load_spec(args)
    n = args.n or 256
    replicas = args.replicas or 4096
    lam = hz.functional_sweep(spec, [n], replicas, args.seed + 1,
                              functionals=("norm",)).lambda_hat
    direct = est.estimate_variance_direct(spec, n, replicas, seed=args.seed)
    curve = est.coupling_decay(spec, 1.0, range(1, 31), min(replicas, 4096),
                               seed=args.seed + 2)
    amp, rate = est.fit_geometric_envelope(curve.n_grid, curve.values)
    s2_ref = direct["sigma"].value
    lag = 2
    while est.envelope_tail(amp, rate, lag) > 0.01 * max(s2_ref, 1e-12) and lag < 64:
        lag += 1
    series = est.estimate_variance_series(spec, lag + 1, replicas, lam,
                                          seed=args.seed + 3, envelope=(amp, rate))
    psi = est.estimate_psi(spec, lag, 1024, lam, seed=args.seed + 4)
    mpaths = max(32, min(256, replicas // 16))
    mlen = min(n, 256)
    mart = est.variance_via_martingale(spec, psi, mlen, mpaths, lam,
                                       seed=args.seed + 5)
    rows = []
    for name, e in direct.items():
        rows.append([e.method, e.value, e.std_error, e.replicas, f"n={n}"])
    rows.append(["series", series.estimate.value, series.estimate.std_error,
                 series.estimate.replicas, f"lag={lag};tail<{series.tail_bound:.3g}"])
    rows.append(["martingale", mart.estimate.value, mart.estimate.std_error,
                 mart.estimate.replicas,
                 f"len={mlen};lag1={mart.lag1_autocorr:.3g}"])
    trio = [direct["sigma"], series.estimate, mart.estimate]
    ok = all(a.agrees_with(b) for a in trio for b in trio)
    results = {"lambda_hat": lam,
               "direct": {k: v.value for k, v in direct.items()},
               "series": series.estimate.value, "martingale": mart.estimate.value,
               "lag": lag, "routes_agree": ok,
               "lag1_autocorr": mart.lag1_autocorr}
    return (["method", "value", "std_error", "replicas", "params"], rows,
            results, "pass" if ok else "fail")


def _cmd_normality(args, config):
    spec = _load_spec(args)
    n = args.n or 1024
    replicas = args.replicas or 20000
    functionals = ("sigma", "norm", "v", "kappa", "inf_coeff")
    sweep = hz.functional_sweep(spec, [n], replicas, args.seed,
                                functionals=functionals, threads=args.threads)
    top = sweep.samples[("norm", n)]
    s = float(top.std(ddof=1) / np.sqrt(n))
    rows, results = [], {"s_used": s, "lambda_hat": sweep.lambda_hat,
                         "noise_floor": hz.noise_floor(replicas)}
    if s <= 1e-12:
        return (["functional", "n", "ks", "minus_inf"], [],
                {**results, "degenerate": True}, "complete")
    for f in functionals:
        rep = hz.empirical_normality(spec, f, n, replicas, s, seed=args.seed,
                                     sweep=sweep)
        rows.append([f, n, rep.ks_distance, rep.minus_inf_count])
        results[f] = rep.ks_distance
    return ["functional", "n", "ks", "minus_inf"], rows, results, "complete"


def _cmd_berry_esseen(args, config):
    spec = _load_spec(args)
    grid = _parse_grid(args.n_grid) if args.n_grid else [64, 256, 1024, 4096]
    replicas = args.replicas or 20000
    p = args.p or 3.0
    functionals = ("sigma", "norm", "v", "kappa", "inf_coeff")
    sweep = hz.functional_sweep(spec, grid, replicas, args.seed,
                                functionals=functionals, threads=args.threads)
    rows, results = [], {}
    worst = "pass"
    for f in functionals:
        fit = hz.berry_esseen_fit(spec, f, p, grid, replicas, seed=args.seed,
                                  sweep=sweep, check_moments=(f == functionals[0]))
        results[f] = {"verdict": fit.verdict, "tau_banded": fit.tau_banded,
                      "ks": list(fit.ks_values)}
        for n, ks, sc in zip(fit.n_grid, fit.ks_values, fit.scaled):
            rows.append([f, n, ks, sc, fit.verdict])
        if fit.verdict == "fail":
            worst = "fail"
    return ["functional", "n", "ks", "scaled", "verdict"], rows, results, worst


def _cmd_asip_proxy(args, config):
    spec = _load_spec(args)
    n = args.n or 2 ** 16
    replicas = args.replicas or 1000
    rep = hz.asip_proxy(spec, n, replicas, seed=args.seed, eps=args.eps or 0.2)
    rows = [["envelope", rep.envelope_fraction, rep.eps, rep.n]]
    for k, ks in rep.block_ks:
        rows.append([f"block@{k}", ks, rep.eps, rep.n])
    ok = rep.envelope_fraction >= 0.95
    results = {"envelope_fraction": rep.envelope_fraction,
               "quantile_99": rep.envelope_quantile_99,
               "s_used": rep.s_used, "tag": rep.tag}
    return ["statistic", "value", "eps", "n"], rows, results, "pass" if ok else "fail"


def _cmd_deviation(args, config):
    spec = _load_spec(args)
    rep = hz.deviation_tail_sums(spec, args.alpha or 1.0, args.p or 2.0,
                                 args.eps or 0.5, args.n or 512,
                                 args.replicas or 4096, seed=args.seed,
                                 record_every=max((args.n or 512) // 64, 1))
    rows = [[n, pr, ps] for n, pr, ps in zip(rep.ns, rep.probabilities, rep.partial_sums)]
    results = {"final_probability": rep.probabilities[-1],
               "final_partial_sum": rep.partial_sums[-1],
               "floor": rep.floor, "verdict": rep.verdict}
    return ["n", "probability", "partial_sum"], rows, results, rep.verdict


def _cmd_regularity(args, config):
    spec = _load_spec(args)
    p = args.p or 2.0
    samples = args.replicas or 4096
    tol = args.tol or 1e-8
    small = est.invariant_regularity(spec, p, samples, tol, seed=args.seed)
    big = est.invariant_regularity(spec, p, 2 * samples, tol, seed=args.seed + 1)
    ok = small.agrees_with(big)
    rows = [[small.method, small.value, small.std_error, small.replicas, f"tol={tol}"],
            [big.method, big.value, big.std_error, big.replicas, f"tol={tol}"]]
    results = {"value": small.value, "doubled": big.value, "stable": ok}
    return (["method", "value", "std_error", "replicas", "params"], rows,
            results, "pass" if ok else "fail")


def _cmd_aperiodicity(args, config):
    spec = _load_spec(args)
    rep = est.aperiodicity_report(spec, max_word_len=args.n or 4)
    rows = [["".join(map(str, w)) or "-", lk]
            for w, lk in zip(rep.words, rep.log_radii)]
    results = {"verdict": rep.verdict, "words": len(rep.words),
               "incommensurate_pairs": len(rep.incommensurate_pairs)}
    return ["word", "log_kappa"], rows, results, "complete"


def _cmd_cone_demo(args, config):
    cone = _parse_cone(args.cone or "orthant:3")
    rng = np.random.default_rng(args.seed)
    rows, results = [], {}
    checks_ok = True
    if cone.kind == "orthant":
        d = cone.ambient_dim
        worst_dist = 0.0
        worst_m = 0.0
        for _ in range(200):
            x = sample_point(d, rng).coords
            y = sample_point(d, rng).coords
            worst_dist = max(worst_dist, abs(cone.distance(x, y) - hilbert_distance(x, y)))
            worst_m = max(worst_m, abs(cone.m(x, y, method="bisection")
                                       - cone.m(x, y, method="closed")))
        g = rng.uniform(0.2, 2.0, (d, d))
        ratio = cone.contraction_estimate(g, 2000, seed=args.seed) / contraction_coefficient(g)
        rows += [["distance-vs-simplex", worst_dist], ["m-bisect-vs-closed", worst_m],
                 ["contraction-ratio", ratio]]
        checks_ok = worst_dist <= 1e-12 and worst_m <= 1e-8 and ratio >= 0.99
        results = {"distance_gap": worst_dist, "m_gap": worst_m, "contraction_ratio": ratio}
    elif cone.kind == "lorentz":
        q, _ = np.linalg.qr(rng.standard_normal((cone.n, cone.n)))
        g = np.zeros((cone.ambient_dim, cone.ambient_dim))
        g[:-1, :-1] = 0.5 * q
        g[-1, -1] = 1.0
        cone.certify_map(g, seed=args.seed)
        x = cone.sample_slice(rng, boundary=True)
        y = cone.sample_slice(rng, boundary=False)
        boundary_dist = cone.distance(x, y)
        c_est = cone.contraction_estimate(g, 1000, seed=args.seed)
        m_self = cone.m(cone.x0, cone.x0)
        rows += [["boundary-interior-distance", boundary_dist],
                 ["contraction-estimate", c_est], ["m-self", m_self]]
        checks_ok = abs(boundary_dist - 1.0) <= 1e-12 and c_est < 1 \
            and abs(m_self - 1.0) <= 1e-8
        results = {"boundary_distance": boundary_dist, "contraction": c_est}
    else:
        n = cone.n
        a = rng.standard_normal((n, n)) + 2 * np.eye(n)
        g = psd_map_congruence(a)
        cone.certify_map(g, seed=args.seed)
        x = rng.standard_normal((n, n))
        x = x @ x.T + 0.5 * np.eye(n)
        from .cones import sym_to_coords
        m_val = cone.m(sym_to_coords(x), sym_to_coords(np.eye(n)))
        lam_min = float(np.linalg.eigvalsh(x)[0])
        r0 = np.eye(n)
        s0 = np.eye(n) + 0.1 * np.ones((n, n))
        rank_one = psd_map_rank_one(r0, s0)
        c_r1 = cone.contraction_estimate(rank_one, 500, seed=args.seed)
        rows += [["m-vs-lambda-min", abs(m_val - lam_min)],
                 ["rank-one-contraction", c_r1]]
        checks_ok = abs(m_val - lam_min) <= 1e-10 and c_r1 <= 1e-9
        results = {"m_gap": abs(m_val - lam_min), "rank_one_contraction": c_r1}
    return (["check", "value"], [[r[0]] + [v for v in r[1:]] for r in rows],
            results, "pass" if checks_ok else "fail")


def _cmd_fixtures(args, config):
    replicas = args.replicas or 20000
    rep_a = hz.fixture_a_report(replicas=replicas, seed=args.seed)
    n_b = 3
    frac, se = hz.fixture_b_zero_fraction(n_b, replicas, seed=args.seed + 1)
    exact = hz.fixture_b_exact_zero_probability(n_b)
    rows = []
    for i, n in enumerate(rep_a.n_values):
        rows.append(["A", n, "lambda_norm", rep_a.lambda_norm[i][0], rep_a.lambda_norm[i][1]])
        rows.append(["A", n, "v_mean", rep_a.v_mean[i], 0.0])
        rows.append(["A", n, "v_kurtosis", rep_a.v_excess_kurtosis[i], 0.0])
    rows.append(["B", n_b, "zero_fraction", frac, se])
    rows.append(["B", n_b, "zero_exact", exact, 0.0])
    ok = rep_a.heavy_tail_flag and rep_a.lambda_stable and abs(frac - exact) <= 3 * se
    results = {"fixture_a_heavy": rep_a.heavy_tail_flag,
               "fixture_a_lambda_stable": rep_a.lambda_stable,
               "fixture_b_fraction": frac, "fixture_b_exact": exact}
    return (["fixture", "n", "statistic", "value", "std_error"], rows,
            results, "pass" if ok else "fail")


_HANDLERS = {
    "validate-spec": _cmd_validate_spec,
    "detect-contraction": _cmd_detect_contraction,
    "lyapunov": _cmd_lyapunov,
    "invariant-sample": _cmd_invariant_sample,
    "coupling-decay": _cmd_coupling_decay,
    "variance": _cmd_variance,
    "normality": _cmd_normality,
    "berry-esseen": _cmd_berry_esseen,
    "asip-proxy": _cmd_asip_proxy,
    "deviation": _cmd_deviation,
    "regularity": _cmd_regularity,
    "aperiodicity": _cmd_aperiodicity,
    "cone-demo": _cmd_cone_demo,
    "fixtures": _cmd_fixtures,
}


def build_parser() -> _Parser:
    parser = _Parser(prog="conewalk",
                     description="Random products of positive matrices: "
                                 "estimators and limit-theorem verification")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--spec", type=str, default=None,
                       help="measure spec JSON (built-in reference measure when omitted)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--n-grid", dest="n_grid", type=str, default=None)
        p.add_argument("--replicas", type=int, default=None)
        p.add_argument("--p", type=float, default=None)
        p.add_argument("--cone", type=str, default=None,
                       help="orthant:d | lorentz:n | psd:n")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--out", type=str, default="out")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--eps", type=float, default=None)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _positive(args, replicas=args.replicas, n=args.n, threads=args.threads,
                  tol=args.tol, p=args.p)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        config = {k: v for k, v in vars(args).items() if k != "command"}
        header, rows, results, verdict = _HANDLERS[args.command](args, config)
        _write_csv(out / f"{args.command}.csv", header, rows)
        _write_summary(out, args.command, config, results, verdict)
        print(f"{args.command}: {verdict}  ({out / (args.command + '.csv')})")
        return 2 if verdict == "fail" else 0
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
