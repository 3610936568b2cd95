"""Batch command-line front end.

    nahmasym <command> --config job.json [--precision BITS] [--order K] [--threads N] [--out DIR]

The command may also be given as "command" inside the config. Reports are
JSON (stdout, or DIR/report.json); verify-radial, coeff-asym and kms-check
also write a CSV table (DIR/plot.csv) and qexpand writes the Puiseux series
text format (DIR/series.txt).
Exit codes: 0 ok, 2 invalid input, 3 numeric/resource error, 4 failed verification.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import mpmath

from . import report as rep
from .asymptotics import chi_exponent, i_kq, nz_to_nahm, prediction
from .errors import NahmError, ValidationError, VerificationError
from .exact import (
    QuadraticFunction,
    RootOfUnityPhase,
    all_residues,
    denominator,
    gauss_sum,
    reduced_alpha,
    strong_denominator,
    to_fraction,
)
from .kms import kms_check, ramanujan_1psi1_check, sample_1psi1, sample_kms
from .nahm import build_solution, c0_invariant, c_of_Q, modularity_bound_check
from .qseries import coeff_asym_predict, eval_radial, expand_fq, extract_growth_datum, twisted_nahm_eval

COMMANDS = (
    "solve",
    "expand",
    "predict",
    "verify-radial",
    "qexpand",
    "coeff-asym",
    "gauss-sum",
    "kms-check",
    "modularity",
    "nz-map",
)


# ---------------------------------------------------------------- config


def _rational(value, where: str) -> Fraction:
    try:
        return to_fraction(value)
    except ValidationError:
        raise ValidationError(f"{where}: cannot read {value!r} as a rational") from None


def _int(value, where: str, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{where}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValidationError(f"{where}: must be >= {minimum}, got {value}")
    return value


def _matrix(value, where: str):
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise ValidationError(f"{where}: expected a non-empty list of rows")
    return [[_rational(x, f"{where}[{i}][{j}]") for j, x in enumerate(row)] for i, row in enumerate(value)]


def _vector(value, where: str):
    if not isinstance(value, list):
        raise ValidationError(f"{where}: expected a list")
    return [_rational(x, f"{where}[{i}]") for i, x in enumerate(value)]


def parse_quadratic(cfg: dict) -> QuadraticFunction:
    if "Q" not in cfg:
        raise ValidationError("Q: missing")
    q = cfg["Q"]
    if not isinstance(q, dict) or "A" not in q:
        raise ValidationError("Q: expected an object with keys A, B, C")
    A = _matrix(q["A"], "Q.A")
    B = _vector(q.get("B", [0] * len(A)), "Q.B")
    C = _rational(q.get("C", 0), "Q.C")
    return QuadraticFunction(A, B, C)


def parse_phase(cfg: dict) -> RootOfUnityPhase:
    text = cfg.get("alpha", "0/1")
    try:
        return RootOfUnityPhase.parse(text)
    except ValidationError as exc:
        raise ValidationError(f"alpha: {exc}") from None


def load_config(args) -> dict:
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"config: {exc}") from None
        if not isinstance(cfg, dict):
            raise ValidationError("config: top level must be an object")
    if args.command:
        cfg["command"] = args.command
    if args.precision is not None:
        cfg["precision"] = args.precision
    if args.order is not None:
        cfg["K"] = args.order
    cmd = cfg.get("command")
    if cmd not in COMMANDS:
        raise ValidationError(f"command: expected one of {', '.join(COMMANDS)}, got {cmd!r}")
    cfg["precision"] = _int(cfg.get("precision", 256), "precision", 64)
    cfg["K"] = _int(cfg.get("K", 2), "K", 0)
    cfg["seed"] = _int(cfg.get("seed", 0), "seed")
    if "epsilons" in cfg:
        eps = cfg["epsilons"]
        if not isinstance(eps, list):
            raise ValidationError("epsilons: expected a list")
        for i, e in enumerate(eps):
            if isinstance(e, bool) or not isinstance(e, (int, float, str)):
                raise ValidationError(f"epsilons[{i}]: expected a number, got {e!r}")
            try:
                ok = mpmath.mpf(e) > 0
            except (ValueError, TypeError):
                ok = False
            if not ok:
                raise ValidationError(f"epsilons[{i}]: must be a positive number, got {e!r}")
    return cfg


# ---------------------------------------------------------------- commands


def _eps(e):
    return mpmath.mpf(str(e)) if isinstance(e, float) else mpmath.mpf(e)


def cmd_solve(cfg):
    Q = parse_quadratic(cfg)
    phase = parse_phase(cfg)
    prec = cfg["precision"]
    sol = build_solution(Q.A, phase.m, prec)
    return {
        "z": list(sol.z),
        "theta": list(sol.theta),
        "m": sol.m,
        "Lambda": sol.lam,
        "A_tilde": [list(r) for r in sol.a_tilde],
        "residual_bound": sol.residual_bound,
        "direct_residual": sol.direct_residual(),
        "c_Q": c_of_Q(Q, sol),
        "C0": c0_invariant(Q.A, prec),
    }


def _prediction_fields(Q, phase, P):
    D = strong_denominator(Q.with_C(0))
    return {
        "d": denominator(Q),
        "D": D,
        "Lambda": P.lam,
        "chi": P.chi,
        "chi_angle": chi_exponent(phase),
        "G": P.gauss,
        "c_Q": P.cQ,
        "e_C_alpha": P.c_phase,
        "constant": P.constant,
        "S": P.s_series,
    }


def cmd_expand(cfg):
    """S and the individual I(k) series."""
    Q = parse_quadratic(cfg)
    phase = parse_phase(cfg)
    prec, K = cfg["precision"], cfg["K"]
    P = prediction(Q, phase, K, prec)
    sol = build_solution(Q.A, phase.m, prec)
    with mpmath.workprec(prec):
        iks = {",".join(map(str, r.k)): i_kq(Q, phase, r.k, sol, K) for r in all_residues(Q.N, phase.m)}
    return {"S": P.s_series, "I": iks, "max_half_integer_coefficient": P.s_series.max_half_integer_coefficient()}


def cmd_predict(cfg):
    Q = parse_quadratic(cfg)
    phase = parse_phase(cfg)
    P = prediction(Q, phase, cfg["K"], cfg["precision"])
    out = _prediction_fields(Q, phase, P)
    if cfg.get("epsilons"):
        out["values"] = [{"epsilon": _eps(e), "normalized": P.normalized(_eps(e))} for e in cfg["epsilons"]]
    return out


def _radial_job(args):
    Q, phase, eps, prec = args
    with mpmath.workprec(prec):
        return eval_radial(Q, phase, eps, prec)


def _map(fn, jobs, threads: int):
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def cmd_verify_radial(cfg, threads=1):
    Q = parse_quadratic(cfg)
    phase = parse_phase(cfg)
    prec, K = cfg["precision"], cfg["K"]
    epsilons = [_eps(e) for e in cfg.get("epsilons", [])]
    min_order = _rational(cfg.get("min_order", Fraction(K) + Fraction(4, 5)), "min_order")
    P = prediction(Q, phase, K, prec)
    directs = _map(_radial_job, [(Q, phase, e, prec) for e in epsilons], threads)
    table = []
    with mpmath.workprec(prec):
        vanishing = abs(P.constant * P.s_series[0]) < mpmath.mpf(2) ** (-prec // 2)
        for e, d in zip(epsilons, directs):
            normalized = d * mpmath.exp(-P.lam / (phase.m * e))
            pred = P.normalized(e)
            rel = None if vanishing else abs(normalized / pred - 1)
            table.append({"epsilon": e, "direct": normalized, "predicted": pred, "ratio": None if vanishing else normalized / pred, "rel_err": rel})
        orders = []
        for a, b in zip(table, table[1:]):
            if a["rel_err"] and b["rel_err"]:
                orders.append(mpmath.log(a["rel_err"] / b["rel_err"]) / mpmath.log(a["epsilon"] / b["epsilon"]))
    ok = not vanishing and all(o >= mpmath.mpf(min_order.numerator) / min_order.denominator for o in orders)
    ok = ok and all(b["rel_err"] < a["rel_err"] for a, b in zip(table, table[1:]))
    out = _prediction_fields(Q, phase, P)
    out.update(
        {
            "table": table,
            "inferred_orders": orders,
            "min_order": min_order,
            "leading_term_vanishes": vanishing,
            "passed": bool(ok) if table else True,
        }
    )
    return out


def cmd_qexpand(cfg):
    Q = parse_quadratic(cfg)
    M = _rational(cfg.get("M", 10), "M")
    ps = expand_fq(Q, M)
    return {"d": ps.d, "M": ps.M, "coefficients": {str(j): c for j, c in sorted(ps.coeffs.items())}}, ps


def cmd_coeff_asym(cfg):
    Q = parse_quadratic(cfg)
    if Q.N < 1:
        raise ValidationError("Q: empty")
    ns = cfg.get("ns", [1000])
    ns = [_int(n, f"ns[{i}]", 1) for i, n in enumerate(ns)]
    L = _int(cfg.get("L", 2), "L", 0)
    prec, K = cfg["precision"], cfg["K"]
    g = extract_growth_datum(Q, max(K, L), prec)
    ps = expand_fq(Q, max(ns)) if ns else None
    table = []
    with mpmath.workprec(prec):
        for n in ns:
            exact = ps[n]
            pred = coeff_asym_predict(g, n, L)
            table.append({"n": n, "c_exact": exact, "c_predicted": pred, "rel_err": abs(exact / pred - 1)})
    tol = cfg.get("tolerance")
    passed = True if tol is None else all(r["rel_err"] < mpmath.mpf(str(tol)) for r in table)
    return {
        "C_growth": g.C_growth,
        "alpha_exponents": g.alpha_exponents,
        "A_coeffs": g.A_coeffs,
        "L": L,
        "table": table,
        "passed": passed,
    }


def cmd_gauss_sum(cfg):
    Q = parse_quadratic(cfg).with_C(0)
    phase = parse_phase(cfg)
    D = strong_denominator(Q)
    abar, L = reduced_alpha(Q, phase, D)
    return {
        "d": denominator(Q),
        "D": D,
        "alpha_bar": abar,
        "alpha_bar_modulus": L,
        "G": gauss_sum(Q, phase, cfg["precision"]),
        "G_2D": gauss_sum(Q, phase, cfg["precision"], 2 * D),
    }


def _kms_job(args):
    m, a, count, seed, prec = args
    with mpmath.workprec(prec):
        rows = []
        for i, s in enumerate(sample_kms(RootOfUnityPhase(a, m), count, seed, prec)):
            r = kms_check(s)
            rows.append({"m": m, "index": i, "X": s.X, "Y": s.Y, "residual": r["residual"], "root_of_unity_order": r["root_of_unity_order"]})
        return rows


def cmd_kms_check(cfg, threads=1):
    prec, seed = cfg["precision"], cfg["seed"]
    ms = [_int(m, f"ms[{i}]", 1) for i, m in enumerate(cfg.get("ms", [3, 5, 7]))]
    count = _int(cfg.get("count", 50), "count", 0)
    tol = mpmath.mpf(str(cfg.get("tolerance", "1e-25")))
    chunks = _map(_kms_job, [(m, 1 if m > 1 else 0, count, seed + m, prec) for m in ms], threads)
    rows = [r for c in chunks for r in c]
    psi_rows = []
    with mpmath.workprec(prec):
        for i, (x, y, z, q) in enumerate(sample_1psi1(_int(cfg.get("psi_count", 10), "psi_count", 0), seed, 0.5)):
            psi_rows.append({"index": i, "x": x, "y": y, "z": z, "q": q, "residual": ramanujan_1psi1_check(x, y, z, q, prec)["residual"]})
    psi_tol = mpmath.mpf(str(cfg.get("psi_tolerance", "1e-20")))
    passed = all(r["residual"] < tol for r in rows) and all(r["residual"] < psi_tol for r in psi_rows)
    return {
        "table": rows,
        "max_residual": max((r["residual"] for r in rows), default=mpmath.mpf(0)),
        "psi_table": psi_rows,
        "passed": passed,
    }


def cmd_modularity(cfg):
    Q = parse_quadratic(cfg)
    return modularity_bound_check(Q, cfg["precision"])


def cmd_nz_map(cfg):
    for key in ("bbA", "bbB", "eta"):
        if key not in cfg:
            raise ValidationError(f"{key}: missing")
    bbA = _matrix(cfg["bbA"], "bbA")
    bbB = _matrix(cfg["bbB"], "bbB")
    eta = _vector(cfg["eta"], "eta")
    f = cfg.get("f", 0)
    f = _vector(f, "f") if isinstance(f, list) else _rational(f, "f")
    datum = nz_to_nahm(bbA, bbB, eta, f)
    out = {"A": [list(r) for r in datum.A], "B": list(datum.B), "C": datum.C, "flattening": list(datum.flattening)}
    if "q" in cfg:
        q = mpmath.mpmathify(cfg["q"])
        out["value"] = twisted_nahm_eval(datum, q, cfg["precision"])
    return out


def run(cfg: dict, threads: int = 1) -> tuple[dict, dict]:
    """Execute one job; returns (report, extra artefacts by file name)."""
    cmd = cfg["command"]
    extras = {}
    with mpmath.workprec(cfg["precision"]):
        if cmd == "solve":
            body = cmd_solve(cfg)
        elif cmd == "expand":
            body = cmd_expand(cfg)
        elif cmd == "predict":
            body = cmd_predict(cfg)
        elif cmd == "verify-radial":
            body = cmd_verify_radial(cfg, threads)
        elif cmd == "qexpand":
            body, ps = cmd_qexpand(cfg)
            extras["series.txt"] = ps.to_text()
        elif cmd == "coeff-asym":
            body = cmd_coeff_asym(cfg)
        elif cmd == "gauss-sum":
            body = cmd_gauss_sum(cfg)
        elif cmd == "kms-check":
            body = cmd_kms_check(cfg, threads)
        elif cmd == "modularity":
            body = cmd_modularity(cfg)
        else:
            body = cmd_nz_map(cfg)
    inputs = {k: v for k, v in cfg.items()}
    report = {"command": cmd, "inputs": inputs, "precision": cfg["precision"], "results": body}
    if cmd in ("verify-radial", "coeff-asym", "kms-check"):
        extras["plot.csv"] = rep.emit_plot_data({"command": cmd, "table": body["table"]})
    return report, extras


def build_parser():
    p = argparse.ArgumentParser(prog="nahmasym", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=COMMANDS)
    p.add_argument("--config", help="JSON job description")
    p.add_argument("--precision", type=int, help="working precision in bits")
    p.add_argument("--order", type=int, help="series order K")
    p.add_argument("--threads", type=int, default=1, help="worker processes for parallel sweeps")
    p.add_argument("--out", help="output directory (default: report on stdout)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        cfg = load_config(args)
        if args.threads < 1:
            raise ValidationError("--threads must be >= 1")
        report, extras = run(cfg, args.threads)
    except NahmError as exc:
        print(f"error[{exc.code}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.code
    text = rep.dumps(report, cfg["precision"])
    elapsed = time.perf_counter() - started
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text)
        for name, content in extras.items():
            (out / name).write_text(content)
        # wall-clock lives outside report.json so reports stay byte-identical
        (out / "timing.json").write_text(json.dumps({"wall_clock_s": round(elapsed, 3)}) + "\n")
    else:
        sys.stdout.write(text)
    print(f"{report['command']}: {elapsed:.2f}s", file=sys.stderr)
    if report["results"].get("passed") is False:
        print(f"error[{VerificationError.code}] verification failed", file=sys.stderr)
        return VerificationError.code
    return 0


if __name__ == "__main__":
    sys.exit(main())
