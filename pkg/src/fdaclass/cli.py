"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import fdnn, fqda, harness
from .errors import DataError, NumericalError
from .model import ParamSpaceSpec, check_membership, model_preset, sample_dataset, separation_diagnostics

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def read_config(path) -> dict:
    """key = value pairs; a leading section header is optional."""
    text = Path(path).read_text()
    parser = configparser.ConfigParser()
    try:
        if not text.lstrip().startswith("["):
            text = "[experiment]\n" + text
        parser.read_string(text)
    except configparser.Error as exc:
        raise UsageError(f"{path}: {exc}") from None
    out = {}
    for section in parser.sections():
        out.update(parser[section])
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--threads", type=int, default=1, help="worker processes for repetitions")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--config", help="key=value file with experiment settings")

    p = _Parser(prog="fdaclass", description="Optimal classification for functional data.",
                parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="write a simulated dataset as CSV")
    s.add_argument("--model", type=int, required=True, choices=range(1, 6))
    s.add_argument("--variant", default="tables", choices=("printed", "tables"))
    s.add_argument("--n", type=int, default=100, help="curves per class")
    s.add_argument("--m", type=int, default=50, help="sampling points per curve")
    s.add_argument("--grid", default="closed", choices=("closed", "periodic"))
    s.add_argument("--name", default="data.csv")

    f = sub.add_parser("fit", parents=[common], help="train a classifier on a CSV dataset")
    f.add_argument("--data", required=True)
    f.add_argument("--classifier", default="sFQDA", choices=harness.SAMPLED)
    f.add_argument("--j", type=int, help="fixed truncation level (sFQDA); default cross-validates")
    f.add_argument("--projection", default="auto", choices=("auto", "inner", "lstsq"))
    f.add_argument("--name", help="model file name (default model.json / model.txt)")

    e = sub.add_parser("eval", parents=[common], help="risk of a saved classifier on a CSV dataset")
    e.add_argument("--model-file", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--name", default="eval.csv")

    r = sub.add_parser("reproduce-table", parents=[common], help="rerun a simulation table")
    r.add_argument("--table", type=int, required=True, choices=range(1, 6))
    r.add_argument("--scale", default="desk", choices=tuple(harness.SCALES))
    r.add_argument("--classifiers", default="sFQDA,sFDNN")
    r.add_argument("--reps", type=int)

    c = sub.add_parser("rate-curve", parents=[common], help="excess risk against n, log-log slope")
    c.add_argument("--model", type=int, default=1, choices=range(1, 6))
    c.add_argument("--classifier", default="FQDA", choices=harness.CLASSIFIERS)
    c.add_argument("--n-grid", type=_int_list, default=(50, 100, 200, 400, 800))
    c.add_argument("--m", type=int)
    c.add_argument("--nu2", type=float, default=1.0)
    c.add_argument("--reps", type=int, default=100)
    c.add_argument("--test-size", type=int, default=5000)

    x = sub.add_parser("run", parents=[common], help="Monte Carlo experiment from --config settings")
    x.add_argument("--name", default="results")

    d = sub.add_parser("diagnose", parents=[common], help="parameter-space membership and separation")
    d.add_argument("--model", type=int, required=True, choices=range(1, 6))
    d.add_argument("--variant", default="printed", choices=("printed", "tables"))
    d.add_argument("--space", default="hyperrectangle", choices=("hyperrectangle", "sobolev"))
    d.add_argument("--nu1", type=float, default=1.0)
    d.add_argument("--nu2", type=float, default=1.0)
    d.add_argument("--radius", type=float, default=1.0)
    d.add_argument("--c0", type=float, default=0.25)
    return p


def _spec_from(args, **fixed) -> harness.ExperimentSpec:
    cfg = read_config(args.config) if args.config else {}
    base = harness.ExperimentSpec(**fixed) if fixed else harness.ExperimentSpec()
    spec = harness.ExperimentSpec.from_mapping(cfg, base)
    return harness.ExperimentSpec.from_mapping({"seed": args.seed}, spec) if "seed" not in cfg else spec


def _config_overrides(args, allowed) -> dict:
    if not args.config:
        return {}
    spec = harness.ExperimentSpec.from_mapping(read_config(args.config))
    cfg = read_config(args.config)
    out = {}
    for key in cfg:
        key = key.strip().replace("-", "_")
        if key in allowed:
            out[key] = getattr(spec, key)
    return out


def cmd_simulate(args) -> int:
    pop = model_preset(args.model, args.variant)
    data = sample_dataset(pop, args.n, args.n, args.m, seed=args.seed, grid=args.grid)
    path = Path(args.out) / args.name
    path.parent.mkdir(parents=True, exist_ok=True)
    harness.write_csv(data, path)
    print(f"wrote {len(data)} curves on {args.m} points to {path}")
    return EXIT_OK


def _projection_mode(choice: str, data) -> str:
    if choice != "auto":
        return choice
    from .basis import is_uniform_grid
    return "inner" if is_uniform_grid(data.grid) else "lstsq"


def cmd_fit(args) -> int:
    data = harness.load_csv(args.data)
    mode = _projection_mode(args.projection, data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    if args.classifier == "sFQDA":
        j_avail = min(20, data.m_count)
        proj = fqda.default_projector(data, j_avail, mode)
        z = proj(data.values)
        if args.j is not None:
            J = args.j
            if not 1 <= J <= data.m_count:
                raise UsageError(f"--j must lie in 1..{data.m_count}")
            if J > j_avail:
                proj = fqda.default_projector(data, J, mode)
                z = proj(data.values)
        else:
            J = fqda.select_j(fqda.JSelection(), len(data), data.m_count, (z, data.labels),
                              int(rng.integers(2**31 - 1)), j_avail)
        model = fqda.fit_scores(z, data.labels, J, "sFQDA",
                                fqda.default_projector(data, J, mode))
        path = out / (args.name or "model.json")
        fqda.save_model(model, path)
        print(f"sFQDA with J={J} saved to {path}")
    else:
        n = min(data.n1, data.n2)
        arch = fdnn.size_arch(n, data.m_count)
        proj = fqda.default_projector(data, arch.input_dim, mode)
        cfg = harness.ExperimentSpec().train_config(int(rng.integers(2**31 - 1)))
        model = fdnn.train(proj(data.values), data.labels, arch, cfg, proj)
        path = out / (args.name or "model.txt")
        fdnn.save_model(model, path)
        print(f"sFDNN {arch.widths} (s={arch.sparsity}, B={arch.bound:g}) saved to {path}")
    return EXIT_OK


def _load_any(path):
    try:
        head = Path(path).read_text().lstrip()[:20]
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None
    if head.startswith("{"):
        return "sFQDA", fqda.load_model(path)
    if head.startswith(fdnn.FORMAT_TAG):
        return "sFDNN", fdnn.load_model(path)
    raise DataError(f"{path}: not a saved classifier")


def cmd_eval(args) -> int:
    kind, model = _load_any(args.model_file)
    data = harness.load_csv(args.data)
    if model.projector is None:
        raise DataError("saved classifier carries no projector; cannot score grid curves")
    if len(model.projector.grid) != data.m_count or not np.allclose(model.projector.grid, data.grid):
        raise DataError("dataset grid differs from the grid the classifier was trained on")
    z = model.projector(data.values)
    if kind == "sFQDA":
        err, se = fqda.risk(model, z, data.labels)
    else:
        err, se = fdnn.dnn_risk(model, z, data.labels)
    path = Path(args.out) / args.name
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["classifier", "n", "risk_pct", "se_pct"])
        w.writerow([kind, len(data), f"{100 * err:.4f}", f"{100 * se:.4f}"])
    print(f"{kind}: risk {100 * err:.2f}% (SE {100 * se:.2f}) on {len(data)} curves")
    return EXIT_OK


_TUNABLE = {"grid", "projection", "j_method", "nu1", "nu2", "k_folds", "j_max", "sizing",
            "sizing_c", "epochs", "batch_size", "lr", "optimizer", "projection_period",
            "oracle_draws", "test_size"}


def cmd_reproduce(args) -> int:
    classifiers = tuple(c.strip() for c in args.classifiers.split(",") if c.strip())
    overrides = _config_overrides(args, _TUNABLE - {"grid", "projection"})
    report, sheet = harness.reproduce_table(args.table, args.scale, classifiers, args.seed,
                                            args.threads, args.reps, **overrides)
    stem = f"table{args.table}_{args.scale}"
    csv_path, _ = report.write(args.out, stem)
    sheet_path = Path(args.out) / f"{stem}_comparison.csv"
    harness.write_sheet(sheet, sheet_path)
    for row in sheet:
        flag = "PASS" if row["passed"] else "FAIL"
        note = f"  [{row['note']}]" if row["note"] else ""
        print(f"{flag} table {row['table']} {row['column']} n={row['n']} M={row['M']}: "
              f"measured {row['measured']:.2f} ({row['se']:.2f}) vs {row['published']:.2f} "
              f"+-{row['tolerance']}{note}")
    print(f"results in {csv_path} and {sheet_path}")
    return EXIT_OK


def cmd_rate(args) -> int:
    overrides = _config_overrides(args, _TUNABLE - {"nu2", "test_size"})
    rep = harness.rate_curve(args.model, args.classifier, args.n_grid, args.m, args.nu2,
                             args.reps, args.test_size, args.seed, args.threads, **overrides)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"rate_model{args.model}_{args.classifier}.csv"
    rep.write_csv(path)
    for n, e, s in zip(rep.n_grid, rep.excess, rep.excess_se):
        print(f"n={n:5d}  excess {100 * e:7.3f}% ({100 * s:.3f})")
    if rep.slope is None:
        print(f"status: {rep.status}")
    else:
        lo, hi = rep.band
        verdict = "inside" if rep.in_band else "outside (soft warning)"
        print(f"slope {rep.slope:.3f} +- {rep.slope_se:.3f}; theory {rep.theory:.3f}, "
              f"band [{lo:.2f}, {hi:.2f}] {verdict}; excluded {rep.excluded}")
    print(f"results in {path}")
    return EXIT_OK


def cmd_run(args) -> int:
    spec = _spec_from(args)
    report = harness.run_experiment(spec, args.threads)
    csv_path, _ = report.write(args.out, args.name)
    for r in report.rows:
        m = "-" if r.m is None else r.m
        print(f"{r.classifier:6s} n={r.n} M={m}: {r.mean_risk:.2f} ({r.se:.2f}), "
              f"{r.failed} failed")
    print(f"results in {csv_path}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    pop = model_preset(args.model, args.variant)
    space = ParamSpaceSpec(args.space, args.radius, args.nu1, args.nu2, args.c0)
    rep = check_membership(pop, space)
    mean_sum, cov_sum = separation_diagnostics(pop)
    rows = [(name, res.value, res.passed) for name, res in rep.conditions.items()]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"diagnose_model{args.model}.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["quantity", "value", "passed"])
        for name, value, ok in rows:
            w.writerow([name, f"{value:.6g}", ok])
        w.writerow(["prior", "", rep.prior_ok])
        w.writerow(["minimal_radius", f"{rep.minimal_radius:.6g}", ""])
        w.writerow(["mean_separation_sum", f"{mean_sum:.6g}", ""])
        w.writerow(["covariance_separation_sum", f"{cov_sum:.6g}", ""])
    print(f"model {args.model} ({args.variant}) in {args.space} "
          f"(nu1={args.nu1:g}, nu2={args.nu2:g}, A={args.radius:g}): "
          f"{'member' if rep.member else 'not a member'}; minimal radius {rep.minimal_radius:.4g}")
    for name, value, ok in rows:
        print(f"  {name}: {value:.4g} {'ok' if ok else 'exceeds'}")
    print(f"  separation sums: mean {mean_sum:.4g}, covariance {cov_sum:.4g}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "eval": cmd_eval,
            "reproduce-table": cmd_reproduce, "rate-curve": cmd_rate, "run": cmd_run,
            "diagnose": cmd_diagnose}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help, or a usage error already reported
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if args.threads < 1:
        print("fdaclass: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if args.config and not Path(args.config).exists():
        print(f"fdaclass: error: config file {args.config} not found", file=sys.stderr)
        return EXIT_USAGE
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args)
    except DataError as exc:
        print(f"fdaclass: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"fdaclass: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ValueError) as exc:
        print(f"fdaclass: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
