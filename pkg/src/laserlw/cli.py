"""Command-line front end.

Every subcommand reads a ``key = value`` config file and writes CSV whose
``#`` header records the fully resolved configuration, so each data file
can be regenerated from itself.

Exit codes: 0 success, 1 configuration/parameter error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import analytics
from .dynamics import initial_offdiag, propagate_correlation, slowest_decay_rate, spectrum
from .kernels import assemble_offdiag_generator
from .model import (
    ConfigError,
    LaserError,
    LaserParams,
    NumericalError,
    ParameterError,
    RunConfig,
    Truncation,
    load_config,
)
from .report import auto_t_max, linewidth_report
from .steady import check_balance, steady_distribution

REPORT_COLUMNS = ["alpha_ratio", "chi", "n_b", "nbar_analytic", "nbar_numeric", "Q_analytic",
                  "Q_numeric", "lw_eq24", "lw_eq31", "lw_eq24a", "lw_numeric_eig",
                  "lw_numeric_fit", "valid", "left_ratio", "right_ratio"]
NORMALIZED = ["lw_eq24", "lw_eq31", "lw_eq24a", "lw_numeric_eig", "lw_numeric_fit"]
LINEWIDTH_COLUMNS = REPORT_COLUMNS + [c + "_norm" for c in NORMALIZED]
SWEEP_COLUMNS = LINEWIDTH_COLUMNS + ["error"]
FIG1_COLUMNS = ["alpha_ratio", "eq24", "eq31", "eq24a", "numeric_eig", "numeric_fit"]
FIG1_RANGE = (1.05, 10.0)
FIG1_POINTS = 120


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(out, columns: Sequence[str], rows: Iterable[dict[str, Any]],
              meta: dict[str, Any] | None = None, timestamp: bool = True) -> None:
    """Write ``rows`` to a path or text stream, preceded by ``# key = value`` lines."""
    buf = io.StringIO()
    if meta:
        for k, v in meta.items():
            buf.write(f"# {k} = {_fmt(v)}\n")
    if timestamp:
        buf.write(f"# generated = {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    text = buf.getvalue()
    if hasattr(out, "write"):
        out.write(text)
    else:
        Path(out).write_text(text)


def read_csv(path) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Inverse of :func:`write_csv`: ``(header metadata, rows as string dicts)``."""
    text = path.read() if hasattr(path, "read") else Path(path).read_text()
    meta: dict[str, str] = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].partition("=")
            meta[k.strip()] = v.strip()
        elif line.strip():
            body.append(line)
    return meta, list(csv.DictReader(body))


def parse_value(s: str):
    """Parse one CSV cell written by :func:`write_csv`."""
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    try:
        return float(s)
    except ValueError:
        return s


def report_row(rep) -> dict[str, Any]:
    p = rep.params
    row = {"alpha_ratio": p.alpha_ratio, "chi": p.chi, "n_b": p.n_b,
           "nbar_analytic": rep.nbar_analytic, "nbar_numeric": rep.nbar_numeric,
           "Q_analytic": rep.q_analytic, "Q_numeric": rep.q_numeric,
           "lw_eq24": rep.lw_eq24, "lw_eq31": rep.lw_eq31, "lw_eq24a": rep.lw_eq24a,
           "lw_numeric_eig": rep.lw_numeric_eig, "lw_numeric_fit": rep.lw_numeric_fit,
           "valid": rep.valid, "left_ratio": rep.left_ratio, "right_ratio": rep.right_ratio}
    for c in NORMALIZED:
        row[c + "_norm"] = rep.normalized(c)
    return row


def _print_table(rep, stream) -> None:
    p = rep.params
    print(f"alpha/gamma = {p.alpha_ratio:.6g}   chi = {p.chi:.6g}   n_b = {p.n_b:.6g}   "
          f"gamma = {p.gamma:.6g}", file=stream)
    if rep.nbar_analytic is not None or rep.nbar_numeric is not None:
        print(f"{'':22s}{'analytic':>16s}{'numeric':>16s}", file=stream)
        for label, a, n in (("mean photon number", rep.nbar_analytic, rep.nbar_numeric),
                            ("Mandel Q", rep.q_analytic, rep.q_numeric)):
            print(f"{label:22s}{_num(a):>16s}{_num(n):>16s}", file=stream)
    print(f"{'linewidth':22s}{'raw':>16s}{'/(chi gamma)':>16s}", file=stream)
    for name in rep.LINEWIDTHS:
        v = getattr(rep, name)
        if v is not None:
            print(f"{name:22s}{_num(v):>16s}{_num(rep.normalized(name)):>16s}", file=stream)
    if rep.left_ratio is not None:
        print(f"validity (margin {rep.margin:g}): {'yes' if rep.valid else 'no'}  "
              f"left ratio {rep.left_ratio:.4g}, right ratio {rep.right_ratio:.4g}",
              file=stream)


def _num(v) -> str:
    return "-" if v is None else f"{v:.8g}"


def _summary_stream(args):
    return sys.stdout if args.out else sys.stderr


def _data_target(args):
    return args.out if args.out else sys.stdout


def _load(args, require_point=True) -> RunConfig:
    if not args.config:
        raise ConfigError("--config is required")
    return load_config(args.config, require_point=require_point)


def cmd_steady(args) -> int:
    cfg = _load(args)
    dist = steady_distribution(cfg.params, cfg.truncation)
    res = check_balance(dist, cfg.params)
    meta = dict(cfg.resolved(), n_max_used=dist.n_max)
    write_csv(_data_target(args), ["n", "p"],
              ({"n": n, "p": float(pn)} for n, pn in enumerate(dist.p)), meta)
    s = _summary_stream(args)
    print(f"n_max = {dist.n_max}  tail mass < {dist.tail_mass:.3g}", file=s)
    print(f"nbar = {dist.nbar:.10g}  var = {dist.var:.10g}  Q = {dist.q:.10g}", file=s)
    print(f"balance residuals: photon number {res.photon_number:.3g}, "
          f"variance {res.variance:.3g}", file=s)
    return 0


def _trace_for(cfg: RunConfig, samples: int):
    dist = steady_distribution(cfg.params, cfg.truncation)
    tr = Truncation(n_max=dist.n_max, tail_mass_bound=cfg.truncation.tail_mass_bound)
    G1 = assemble_offdiag_generator(cfg.params, tr, chi2_terms=cfg.chi2_terms)
    t_max = cfg.t_max or auto_t_max(slowest_decay_rate(G1).rate)
    trace = propagate_correlation(initial_offdiag(dist), G1, t_max, n_samples=samples,
                                  rtol=cfg.rtol, truncation=tr)
    return dist, trace


def cmd_correlate(args) -> int:
    cfg = _load(args)
    dist, trace = _trace_for(cfg, args.samples)
    meta = dict(cfg.resolved(), n_max_used=dist.n_max, method=trace.method)
    write_csv(_data_target(args), ["t", "g"],
              ({"t": t, "g": g} for t, g in zip(trace.times, trace.values)), meta)
    print(f"g(0) = {trace.values[0]:.10g}  g(t_max)/g(0) = "
          f"{trace.values[-1] / trace.values[0]:.4g}", file=_summary_stream(args))
    return 0


def cmd_spectrum(args) -> int:
    cfg = _load(args)
    dist, trace = _trace_for(cfg, args.samples)
    sp = spectrum(trace, dist.nbar, nu=cfg.params.nu)
    meta = dict(cfg.resolved(), n_max_used=dist.n_max, fwhm=sp.fwhm)
    write_csv(_data_target(args), ["omega", "S"],
              ({"omega": w, "S": s} for w, s in zip(sp.omega, sp.S)), meta)
    print(f"FWHM = {sp.fwhm:.10g}  (/(chi gamma) = "
          f"{sp.fwhm / (cfg.params.chi * cfg.params.gamma):.8g})  centre = {sp.peak:.6g}",
          file=_summary_stream(args))
    return 0


def cmd_linewidth(args) -> int:
    cfg = _load(args)
    rep = linewidth_report(cfg.params, cfg.truncation, numeric=args.numeric,
                           t_max=cfg.t_max, rtol=cfg.rtol, margin=args.margin,
                           chi2_terms=cfg.chi2_terms)
    _print_table(rep, _summary_stream(args))
    write_csv(_data_target(args), LINEWIDTH_COLUMNS, [report_row(rep)], cfg.resolved())
    return 0


def _sweep_point(task) -> dict[str, Any]:
    params, trunc, numeric, t_max, rtol, margin, chi2_terms = task
    try:
        rep = linewidth_report(params, trunc, numeric=numeric, t_max=t_max, rtol=rtol,
                               margin=margin, chi2_terms=chi2_terms)
        row = report_row(rep)
        row["error"] = None
    except LaserError as exc:
        row = {"alpha_ratio": params.alpha_ratio, "chi": params.chi, "n_b": params.n_b,
               "error": f"{type(exc).__name__}: {exc}"}
    return row


def run_sweep(template: LaserParams, grid: Sequence[float], trunc: Truncation, *,
              numeric: bool = True, numeric_every: int = 4, t_max: float | None = None,
              rtol: float = 1e-8, margin: float = 10.0, chi2_terms: bool = True,
              workers: int = 1) -> list[dict[str, Any]]:
    """One report row per ``alpha_ratio`` in ``grid``, in grid order.

    Numeric linewidths are computed on every ``numeric_every``-th point.
    Failures land in the ``error`` column; the sweep carries on.
    """
    tasks = []
    for i, a in enumerate(grid):
        params = LaserParams.from_alpha_ratio(a, template.chi, template.gamma, template.n_b,
                                              template.nu)
        tasks.append((params, trunc, numeric and i % numeric_every == 0, t_max, rtol, margin,
                      chi2_terms))
    if workers <= 1:
        return [_sweep_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_point, tasks))


def cmd_sweep(args) -> int:
    cfg = _load(args, require_point=False)
    if cfg.grid is None:
        raise ConfigError(f"{args.config}: sweep needs 'grid' or grid_start/grid_stop/grid_points")
    rows = run_sweep(cfg.params, cfg.grid, cfg.truncation, numeric=args.numeric,
                     numeric_every=cfg.numeric_every, t_max=cfg.t_max, rtol=cfg.rtol,
                     margin=args.margin, chi2_terms=cfg.chi2_terms, workers=args.workers)
    meta = {k: v for k, v in cfg.resolved().items() if k not in ("r", "alpha_ratio")}
    write_csv(_data_target(args), SWEEP_COLUMNS, rows, meta)
    failed = sum(1 for r in rows if r.get("error"))
    print(f"{len(rows)} points, {failed} failed", file=_summary_stream(args))
    return 0


def fig1_rows(grid: Sequence[float], chi: float, numeric_rows: dict[int, dict] | None = None
              ) -> list[dict[str, Any]]:
    """Normalised closed-form curves at ``n_b = 0`` over ``grid``."""
    rows = []
    for i, a in enumerate(grid):
        p = LaserParams.from_alpha_ratio(a, chi)
        norm = chi * p.gamma
        row = {"alpha_ratio": a,
               "eq24": analytics.linewidth_eq24(p) / norm,
               "eq31": analytics.linewidth_pd(p) / norm,
               "eq24a": analytics.linewidth_far(p) / norm}
        if numeric_rows and i in numeric_rows:
            row["numeric_eig"] = numeric_rows[i].get("lw_numeric_eig_norm")
            row["numeric_fit"] = numeric_rows[i].get("lw_numeric_fit_norm")
        rows.append(row)
    return rows


GNUPLOT_TEMPLATE = """\
# gnuplot script generated by laserlw fig1
set datafile separator ','
set datafile commentschars '#'
set terminal pngcairo size 900,650
set output '{png}'
set xlabel 'alpha / gamma'
set ylabel 'linewidth / (chi gamma)'
set logscale y
set key top right
plot '{csv}' every ::1 using 1:2 with lines lw 2 title 'correlation theory', \\
     '' every ::1 using 1:3 with lines dt 2 lw 2 title 'phase diffusion', \\
     '' every ::1 using 1:4 with lines dt 3 lw 2 title 'far-above-threshold limit'{numeric}
"""


def cmd_fig1(args) -> int:
    cfg = _load(args, require_point=False)
    if cfg.params.n_b != 0:
        raise ConfigError(f"{args.config}: fig1 is defined for n_b = 0 only")
    grid = cfg.grid or tuple(float(a) for a in np.geomspace(*FIG1_RANGE, FIG1_POINTS))
    numeric_rows = None
    if args.numeric:
        every = cfg.numeric_every
        sub = [a for i, a in enumerate(grid) if i % every == 0]
        rows = run_sweep(cfg.params, sub, cfg.truncation, numeric=True, numeric_every=1,
                         t_max=cfg.t_max, rtol=cfg.rtol, margin=args.margin,
                         chi2_terms=cfg.chi2_terms, workers=args.workers)
        numeric_rows = {i * every: r for i, r in enumerate(rows)}
    rows = fig1_rows(grid, cfg.params.chi, numeric_rows)
    meta = {k: v for k, v in cfg.resolved().items() if k not in ("r", "alpha_ratio")}
    meta["normalization"] = "chi * gamma"
    if args.out:
        out = Path(args.out)
        write_csv(out, FIG1_COLUMNS, rows, meta)
        numeric = (", \\\n     '' every ::1 using 1:5 with points pt 7 title 'numeric (eigen)'"
                   if args.numeric else "")
        script = GNUPLOT_TEMPLATE.format(png=out.with_suffix(".png").name, csv=out.name,
                                         numeric=numeric)
        out.with_suffix(".gp").write_text(script)
        print(f"wrote {out} and {out.with_suffix('.gp')}")
    else:
        write_csv(sys.stdout, FIG1_COLUMNS, rows, meta)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--workers", type=int, default=1, help="parallel sweep workers")
    common.add_argument("--with-numeric", dest="numeric", action="store_true", default=None,
                        help="run the numeric correlation oracle")
    common.add_argument("--no-numeric", dest="numeric", action="store_false",
                        help="closed forms only")
    common.add_argument("--margin", type=float, default=10.0,
                        help="validity margin for the '<<' conditions (default 10)")
    common.add_argument("--samples", type=int, default=2001,
                        help="time samples for correlate/spectrum")

    parser = argparse.ArgumentParser(
        prog="laserlw",
        description="Quantum-limited laser linewidth: numeric correlation vs closed forms.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, helptext, numeric_default in (
            ("steady", cmd_steady, "stationary photon distribution (CSV n,p)", True),
            ("correlate", cmd_correlate, "field correlation g(t) (CSV t,g)", True),
            ("spectrum", cmd_spectrum, "power spectrum (CSV omega,S)", True),
            ("linewidth", cmd_linewidth, "all linewidth estimates for one point", True),
            ("sweep", cmd_sweep, "linewidth report over an alpha/gamma grid", True),
            ("fig1", cmd_fig1, "normalised linewidth curves vs alpha/gamma", False)):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        sp.set_defaults(func=func, numeric_default=numeric_default)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.numeric is None:
        args.numeric = args.numeric_default
    if args.margin < 1:
        parser.error("--margin must be >= 1")
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"laserlw: error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"laserlw: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
