"""Command-line pipeline: generate, tune, predict, evaluate and pdf."""
import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .baseline import fit_quantile_regression, predict_linear
from .config import RunConfig, load_config, read_key_values, write_key_values
from .data import Pairs, Scale, denormalize, make_lorenz_dataset, read_pairs, read_table, write_pairs
from .dissim import PointSet
from .epdf import build_output_grid, empirical_pdf_on_grid, predict_intervals
from .tune import evaluate, interval_metrics, tune_gamma

log = logging.getLogger("dissimpi")


def _fmt(v) -> str:
    return format(float(v), ".17g")


def write_csv(path, header, columns) -> None:
    rows = zip(*columns)
    lines = [",".join(header)] + [",".join(_fmt(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(out: Path, name: str, cfg: RunConfig, extra=()) -> None:
    write_key_values(out / f"{name}_manifest.txt", [("command", name), *cfg.items(), *extra])


def _load(path, what) -> tuple:
    if path is None:
        raise SystemExit(f"error: --{what} is required")
    if not Path(path).is_file():
        raise SystemExit(f"error: {what} file {path} does not exist")
    pairs, scale = read_pairs(path)
    if len(pairs) == 0:
        raise SystemExit(f"error: {what} file {path} has no rows")
    return pairs, scale


def _grid(cfg: RunConfig, train: Pairs):
    return build_output_grid(train.y, cfg.grid_size, cfg.padding)


def _params(cfg: RunConfig, tuning: Optional[str]):
    gamma, c = cfg.gamma, cfg.c
    if tuning is not None:
        kv = read_key_values(tuning)
        gamma = float(kv["gamma_star"]) if gamma is None else gamma
        c = float(kv["c_star"]) if c is None else c
    if gamma is None or c is None:
        raise SystemExit("error: need --gamma and --c (or --tuning)")
    return gamma, c


def cmd_generate(cfg: RunConfig, args) -> None:
    ds = make_lorenz_dataset(cfg.lorenz, cfg.n_y, cfg.sizes, cfg.burn_in)
    out = _outdir(cfg)
    write_pairs(out / "train.csv", ds.train, ds.scale)
    write_pairs(out / "validation.csv", ds.validation, ds.scale)
    write_pairs(out / "test.csv", ds.test, ds.scale)
    write_csv(out / "series.csv", ["k", "y"], [np.arange(ds.series.size), ds.series])
    _manifest(out, "generate", cfg, [("n_pairs", len(ds.pairs)),
                                      ("scale_min", _fmt(ds.scale.min)), ("scale_max", _fmt(ds.scale.max))])
    print(f"wrote {len(ds.pairs)} pairs split {cfg.sizes} to {out}")


def cmd_tune(cfg: RunConfig, args) -> None:
    train, _ = _load(args.train, "train")
    valid, _ = _load(args.validation, "validation")
    D = PointSet.from_pairs(train.X, train.y)
    grid = _grid(cfg, train)
    gammas = [cfg.gamma] if cfg.gamma is not None else cfg.gammas
    report = tune_gamma(gammas, cfg.tau, D, valid, grid, cfg.c_max, cfg.epsilon, cfg.solver)
    out = _outdir(cfg)
    rows = report.rows
    write_csv(out / "tuning.csv", ["gamma", "c", "log_likelihood", "n_plus", "n_minus"],
              [[r.gamma for r in rows], [r.c for r in rows], [r.likelihood for r in rows],
               [r.violations[0] for r in rows], [r.violations[1] for r in rows]])
    write_key_values(out / "tuning.txt", [("tau", _fmt(cfg.tau)), ("gamma_star", _fmt(report.gamma_star)),
                                          ("c_star", _fmt(report.c_star))])
    _manifest(out, "tune", cfg, [("train", args.train), ("validation", args.validation)])
    print(f"gamma* = {report.gamma_star:g}  c* = {report.c_star:.6g}")


def cmd_predict(cfg: RunConfig, args) -> None:
    train, scale = _load(args.train, "train")
    query_path = args.test
    if query_path is None or not Path(query_path).is_file():
        raise SystemExit("error: --test must name an existing query file")
    header, values, _ = read_table(query_path)
    n_x = train.X.shape[1]
    if values.shape[1] < n_x:
        raise SystemExit(f"error: query file needs {n_x} regressor columns")
    X = values[:, :n_x]
    gamma, c = _params(cfg, args.tuning)
    D = PointSet.from_pairs(train.X, train.y)
    grid = _grid(cfg, train)
    lo, up, med = predict_intervals(X, D, grid, gamma, c, cfg.tau, cfg.solver)
    scale = scale or Scale(0.0, 1.0)
    cols = [np.arange(X.shape[0])] + [X[:, j] for j in range(n_x)]
    head = ["k"] + header[:n_x]
    if values.shape[1] > n_x:
        cols.append(values[:, n_x])
        head.append("y")
    cols += [lo, up, med, up - lo]
    head += ["lower", "upper", "median", "width"]
    cols += [denormalize(lo, scale), denormalize(up, scale), denormalize(med, scale), (up - lo) * scale.span]
    head += ["lower_orig", "upper_orig", "median_orig", "width_orig"]
    out = _outdir(cfg)
    write_csv(out / "intervals.csv", head, cols)
    _manifest(out, "predict", cfg, [("train", args.train), ("query", query_path),
                                     ("gamma_used", _fmt(gamma)), ("c_used", _fmt(c))])
    print(f"wrote {X.shape[0]} intervals to {out / 'intervals.csv'}")


def format_table(rows) -> str:
    """Aligned text table with the dataset length, empirical probability and widths."""
    head = ["Method", "Dataset length", "Empirical Probability", "Interval Width", "Interval Width (orig)"]
    body = [[m, str(n), f"{p:.4f}", f"{w:.4f}", "-" if wo is None else f"{wo:.4f}"] for m, n, p, w, wo in rows]
    widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
             for r in [head] + body]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def cmd_evaluate(cfg: RunConfig, args) -> None:
    train, scale = _load(args.train, "train")
    test, _ = _load(args.test, "test")
    gamma, c = _params(cfg, args.tuning)
    D = PointSet.from_pairs(train.X, train.y)
    grid = _grid(cfg, train)
    ours = evaluate(D, test, grid, gamma, c, cfg.tau, cfg.solver, scale)
    lo_model = fit_quantile_regression(train.X, train.y, cfg.tau)
    up_model = fit_quantile_regression(train.X, train.y, 1.0 - cfg.tau)
    qr = interval_metrics(predict_linear(lo_model, test.X), predict_linear(up_model, test.X), test.y, scale)
    out = _outdir(cfg)
    n = len(train)
    nan = float("nan")
    rows = [("proposed", n, ours.empirical_probability, ours.mean_width, ours.mean_width_original),
            ("quantile_regression", n, qr.empirical_probability, qr.mean_width, qr.mean_width_original)]
    lines = ["method,n_train,tau,gamma,c,empirical_probability,mean_width,mean_width_orig"]
    for m, _, p, w, wo in rows:
        g, cc = (gamma, c) if m == "proposed" else (nan, nan)
        lines.append(",".join([m, str(n)] + [_fmt(v) for v in (cfg.tau, g, cc, p, w, nan if wo is None else wo)]))
    (out / "metrics.csv").write_text("\n".join(lines) + "\n")
    span = scale.span if scale is not None else 1.0
    write_csv(out / "per_sample.csv",
              ["k", "y", "lower", "upper", "hit", "width", "width_orig",
               "qr_lower", "qr_upper", "qr_hit", "qr_width"],
              [np.arange(len(test)), test.y, ours.lower, ours.upper, ours.hits.astype(int), ours.widths,
               ours.widths * span, qr.lower, qr.upper, qr.hits.astype(int), qr.widths])
    table = format_table(rows)
    (out / "metrics.txt").write_text(table)
    _manifest(out, "evaluate", cfg, [("train", args.train), ("test", args.test),
                                      ("gamma_used", _fmt(gamma)), ("c_used", _fmt(c))])
    sys.stdout.write(table)


def cmd_pdf(cfg: RunConfig, args) -> None:
    """Empirical density of user points (one per row, headed CSV) on a regular grid."""
    if args.train is None or not Path(args.train).is_file():
        raise SystemExit("error: --train must name an existing points file")
    header, pts, _ = read_table(args.train)
    if pts.shape[1] > 2:
        raise SystemExit("error: the density demo supports one- or two-dimensional points")
    D = PointSet(pts)
    gamma = 0.0 if cfg.gamma is None else cfg.gamma
    c = len(D) / 2.0 if cfg.c is None else cfg.c
    axes = []
    for j in range(pts.shape[1]):
        g = build_output_grid(pts[:, j], cfg.grid_size, cfg.padding)
        axes.append(g.values)
    mesh = np.meshgrid(*axes, indexing="ij")
    eval_pts = np.column_stack([m.reshape(-1) for m in mesh])
    dens = empirical_pdf_on_grid(D, eval_pts, gamma, c, cfg.solver)
    out = _outdir(cfg)
    write_csv(out / "pdf.csv", header + ["density"], [eval_pts[:, j] for j in range(pts.shape[1])] + [dens])
    _manifest(out, "pdf", cfg, [("points", args.train), ("gamma_used", _fmt(gamma)), ("c_used", _fmt(c))])
    print(f"wrote {dens.size} density values to {out / 'pdf.csv'}")


COMMANDS = {
    "generate": cmd_generate,
    "tune": cmd_tune,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "pdf": cmd_pdf,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat 'key = value' configuration file")
    common.add_argument("--train")
    common.add_argument("--validation")
    common.add_argument("--test", help="test or query pairs")
    common.add_argument("--tuning", help="tuning.txt with gamma_star and c_star")
    common.add_argument("--tau", type=float)
    common.add_argument("--gamma", type=float)
    common.add_argument("--c", type=float)
    common.add_argument("--grid-size", type=int)
    common.add_argument("--padding", type=float)
    common.add_argument("--out")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="dissimpi", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or "").strip().splitlines()[0] if fn.__doc__ else None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.config is not None and not Path(args.config).is_file():
        raise SystemExit(f"error: config file {args.config} does not exist")
    try:
        cfg = load_config(args.config, tau=args.tau, gamma=args.gamma, c=args.c,
                          grid_size=args.grid_size, padding=args.padding, out=args.out)
    except (ValueError, TypeError) as exc:
        raise SystemExit(f"error: {exc}")
    COMMANDS[args.command](cfg, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
