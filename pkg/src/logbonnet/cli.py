"""Command line interface: ``logbonnet <command> [options]``.

Commands
--------
laplacian   closed-form Laplacian of an iterated log with a finite-difference check
flux        flux ladders of a profile or of every puncture in a config
integrate   integral of |Lap L_k| over a disk, or the curvature integrals of a surface
verify      Gauss-Bonnet check of a surface config (exit 0 pass, 1 fail, 2 invalid, 3 unconverged)
sks         residual, order and L1 checks for a local special Kahler model
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import logcalc
from .config import load_config, round_floats
from .errors import DomainError, QuadratureError, ValidationError
from .ladders import flux_ladder
from .metric import ConformalPatchMetric, SingularProfile
from .sks import SKModel, model_summary
from .surface import build_surface, gauss_bonnet_defect, l1_curvature, puncture_flux_ladders, total_curvature

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_UNCONVERGED = 0, 1, 2, 3
DEFAULT_DIGITS = 12


def _emit(payload, args, text_lines=()):
    digits = getattr(args, "digits", None) or DEFAULT_DIGITS
    payload = round_floats(payload, digits)
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=False))
    else:
        for line in text_lines:
            print(line)
    return payload


def _fd_laplacian(k, t):
    """``e^{-2t} d^2 L_k / dt^2`` from a central difference in ``t``."""
    h = 1e-4 * max(abs(t), 1.0)
    f = [float(logcalc.iterlog_eval_t(k, t + s * h)) for s in (-1, 0, 1)]
    return (f[0] - 2.0 * f[1] + f[2]) / h**2 * math.exp(-2.0 * t)


def cmd_laplacian(args):
    rows = []
    for r in args.r:
        t = math.log(r)
        value = logcalc.iterlog_laplacian(args.k, r)
        chain = [float(x) for x in logcalc.chain_t(args.k, t)]
        numerator = float(logcalc.laplacian_numerator_t(args.k, t))
        fd = _fd_laplacian(args.k, t) if args.k > 0 else 0.0
        rel = abs(fd - value) / abs(value) if value != 0 else abs(fd)
        rows.append({
            "k": args.k, "r": r, "laplacian": value, "numerator": numerator,
            "chain": chain, "fd_laplacian": fd, "fd_relative_error": rel,
        })
    lines = [f"{'r':>14} {'laplacian':>22} {'finite difference':>22} {'rel err':>10}"]
    lines += [f"{row['r']:14.6g} {row['laplacian']:22.15g} {row['fd_laplacian']:22.15g} "
              f"{row['fd_relative_error']:10.2e}" for row in rows]
    _emit({"rows": rows}, args, lines)
    return EXIT_OK


def _write_ladder_csvs(ladders, csv_dir, prefix="flux"):
    if not csv_dir:
        return []
    os.makedirs(csv_dir, exist_ok=True)
    paths = []
    for i, lad in enumerate(ladders):
        path = os.path.join(csv_dir, f"{prefix}_{i}.csv")
        lad.write_csv(path)
        paths.append(path)
    return paths


def cmd_flux(args):
    if args.config:
        cfg = _config(args)
        surface = build_surface(cfg.surface)
        ladders = puncture_flux_ladders(surface, cfg.quadrature.ladder_eps0, cfg.quadrature.ladder_count)
        csv_dir = cfg.output.csv_dir
    else:
        profile = SingularProfile(args.alpha, tuple(args.betas))
        patch = ConformalPatchMetric(profile)
        lad = flux_ladder(patch, min(args.eps0, 0.5 * patch.chart_radius), args.ladder_count or 12)
        ladders = [lad]
        csv_dir = args.csv_dir
    paths = _write_ladder_csvs(ladders, csv_dir)
    lines = []
    for i, lad in enumerate(ladders):
        lines.append(f"ladder {i}: liminf |flux| ~ {lad.liminf_estimate:.12g}, "
                     f"C/log eps fit C = {lad.decay_constant:.6g}")
        lines += [f"  eps={e:.6e}  flux={v:.15g}" for e, v in zip(lad.radii, lad.values)]
    _emit({"flux_ladders": [lad.as_dict() for lad in ladders], "csv": paths}, args, lines)
    return EXIT_OK


def cmd_integrate(args):
    if args.config:
        cfg = _config(args)
        q = cfg.quadrature
        surface = build_surface(cfg.surface)
        total = total_curvature(surface, q.rel_tol, q.abs_tol, q.max_evaluations, q.split_factor,
                                full_output=True)[0]
        l1 = l1_curvature(surface, q.rel_tol, q.abs_tol, q.max_evaluations, full_output=True)[0]
        payload = {"chi": surface.chi, "total_curvature_over_2pi": total.as_dict(),
                   "l1_curvature": l1.as_dict()}
        lines = [f"chi = {surface.chi}",
                 f"(1/2pi) int K dA   = {total.value:.15g} (err {total.error_estimate:.2e})",
                 f"(1/2pi) int |K| dA = {l1.value:.15g} (err {l1.error_estimate:.2e})"]
        _emit(payload, args, lines)
        return EXIT_OK
    rel = args.rel_tol or 1e-12
    abs_ = args.abs_tol or 1e-14
    rows = []
    for eps in args.eps:
        res = logcalc.iterlog_abs_laplacian_integral(args.k, eps, rel, abs_, full_output=True)
        row = {"k": args.k, "eps": eps, **res.as_dict()}
        if args.k == 1:
            row["closed_form"] = -2.0 * math.pi / math.log(eps)
        rows.append(row)
    notes = ["values are full area integrals over the punctured disk, including the angular factor 2 pi"]
    lines = [f"k={row['k']} eps={row['eps']:.6g}: {row['value']:.15g} (err {row['error_estimate']:.2e})"
             + (f"  closed form {row['closed_form']:.15g}" if "closed_form" in row else "") for row in rows]
    _emit({"rows": rows, "notes": notes}, args, lines + [f"note: {n}" for n in notes])
    return EXIT_OK


def cmd_verify(args):
    cfg = _config(args)
    q = cfg.quadrature
    surface = build_surface(cfg.surface)
    report = gauss_bonnet_defect(surface, q.rel_tol, q.abs_tol, q.max_evaluations, q.ladder_eps0,
                                 q.ladder_count, q.split_factor, q.refinement)
    budget = report.quadrature_meta["total_error_estimate"]
    converged = report.converged
    passed = converged and abs(report.defect) <= 10.0 * budget
    payload = report.as_dict()
    payload["passed"] = passed
    digits = cfg.output.precision_digits
    args.digits = digits
    payload = round_floats(payload, digits)
    text = json.dumps(payload, indent=2)
    if cfg.output.report_path:
        os.makedirs(os.path.dirname(os.path.abspath(cfg.output.report_path)), exist_ok=True)
        with open(cfg.output.report_path, "w") as fh:
            fh.write(text + "\n")
    _write_ladder_csvs(report.flux_ladders, cfg.output.csv_dir)
    if args.json:
        print(text)
    else:
        print(f"chi = {report.chi}, orders = {report.orders}")
        print(f"(1/2pi) int K dA = {report.total_curvature_over_2pi:.15g}")
        print(f"(1/2pi) int |K| dA = {report.l1_curvature:.15g}"
              f" ({'converged' if report.quadrature_meta['l1_converged'] else 'NOT converged'})")
        print(f"defect = {report.defect:.3e} (error budget {budget:.3e})")
        print("PASS" if passed else "FAIL")
    if not converged:
        return EXIT_UNCONVERGED
    return EXIT_OK if passed else EXIT_FAIL


def cmd_sks(args):
    model = SKModel(args.variant, args.c, args.n, a=args.a, beta=args.beta, C=args.C)
    eps = tuple(args.eps) if args.eps else (0.1, 0.01, math.exp(-10.0))
    summary = model_summary(model, eps)
    lines = [f"model {summary['model']}",
             f"order = {summary['order']}",
             f"residual max = {summary['residual_max']}"]
    for row in summary["l1"]:
        closed = "" if row["closed_form"] is None else f", closed form {row['closed_form']:.15g}"
        lines.append(f"L1 on B_{row['eps']:.6g}: {row['value']:.15g}{closed}")
    _emit(summary, args, lines)
    return EXIT_OK


def _config(args):
    if not args.config:
        raise ValidationError("this command needs --config")
    cfg = load_config(args.config)
    cfg = cfg.with_overrides(rel_tol=args.rel_tol, abs_tol=args.abs_tol, ladder_count=args.ladder_count)
    return cfg.with_output(csv_dir=args.csv_dir)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration JSON")
    common.add_argument("--rel-tol", type=float, help="relative quadrature tolerance")
    common.add_argument("--abs-tol", type=float, help="absolute quadrature tolerance")
    common.add_argument("--ladder-count", type=int, help="number of radii in flux ladders")
    common.add_argument("--csv-dir", help="directory for ladder CSV files")
    common.add_argument("--json", action="store_true", help="print the report as JSON on stdout")

    parser = argparse.ArgumentParser(prog="logbonnet", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("laplacian", parents=[common], help="Laplacian of log^(k) r with FD check")
    p.add_argument("-k", type=int, required=True, help="iterated-log depth")
    p.add_argument("r", type=float, nargs="+", help="radii")
    p.set_defaults(func=cmd_laplacian)

    p = sub.add_parser("flux", parents=[common], help="flux ladders")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--betas", type=float, nargs="*", default=[])
    p.add_argument("--eps0", type=float, default=0.05)
    p.set_defaults(func=cmd_flux)

    p = sub.add_parser("integrate", parents=[common], help="integrability checks")
    p.add_argument("-k", type=int, default=1, help="iterated-log depth (without --config)")
    p.add_argument("--eps", type=float, nargs="+", default=[0.1, math.exp(-10.0)], help="disk radii")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("verify", parents=[common], help="Gauss-Bonnet verification of a surface")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sks", parents=[common], help="special Kahler model checks")
    p.add_argument("--variant", default="A", choices=["A", "B"])
    p.add_argument("--c", type=float, default=0.25)
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--a", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--C", type=float)
    p.add_argument("--eps", type=float, nargs="+")
    p.set_defaults(func=cmd_sks)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except QuadratureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNCONVERGED


if __name__ == "__main__":
    sys.exit(main())
