"""Command-line front end.

Subcommands: gen, train, eval, bench, path-plot, score-hist. Every
command that writes files also writes ``manifest.json`` next to them.

Exit codes: 0 success, 1 usage error, 2 data or I/O error, 3 numerical
failure.
"""

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import os
import sys
import tempfile

from . import __version__
from .dataset import (SyntheticSpec, apply_scale, dump_libsvm, gen_synthetic,
                      load_libsvm)
from .errors import DataError, NumericalError
from .figures import PATH_FUNCTIONS, path_values, score_histograms
from .metrics import (BenchmarkConfig, auc, empirical_error, records_to_csv,
                      run_benchmark, summarize, timings_to_csv)
from .moments import ClassMoments, moments_from_json, moments_to_json
from .objectives import OBJECTIVE_IDS
from .optimizer import LbfgsConfig
from .training import Model, fit

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

_UMASK = os.umask(0)
os.umask(_UMASK)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# I/O helpers
# ---------------------------------------------------------------------------

def write_atomic(path, text):
    """Write ``text`` to ``path`` via a temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        os.chmod(tmp, 0o666 & ~_UMASK)
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(doc):
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc


def _load_data(path, d=None):
    try:
        return load_libsvm(path, d=d)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from exc


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _csv_text(fields, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow(["" if row[f] is None else
                         repr(row[f]) if isinstance(row[f], float) else row[f]
                         for f in fields])
    return buf.getvalue()


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


class _Run:
    """Collects manifest fields while a command executes."""

    def __init__(self, args, command):
        self.out = args.out
        self.manifest = {
            "command": command,
            "argv": sys.argv[1:],
            "version": __version__,
            "seed": args.seed,
            "config": {},
            "inputs": {},
            "outputs": [],
            "started": _now(),
        }

    def input(self, path):
        self.manifest["inputs"][path] = _sha256(path)

    def write(self, name, text):
        path = os.path.join(self.out, name)
        try:
            write_atomic(path, text)
        except OSError as exc:
            raise DataError(f"cannot write {path}: {exc.strerror}") from exc
        self.manifest["outputs"].append(path)
        return path

    def finish(self):
        self.manifest["finished"] = _now()
        self.write("manifest.json", _json_text(self.manifest))


def _config(args):
    return _read_json(args.config) if args.config else {}


def _pick(cli_value, cfg, key, default=None):
    if cli_value is not None:
        return cli_value
    return cfg.get(key, default)


def _lbfgs_config(args, cfg):
    doc = dict(cfg.get("lbfgs", {}))
    for key in ("memory", "c1", "c2", "max_iters", "grad_tol"):
        value = getattr(args, key)
        if value is not None:
            doc[key] = value
    try:
        return LbfgsConfig(**doc)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid L-BFGS configuration: {exc}") from exc


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_gen(args):
    cfg = _config(args)
    try:
        spec = SyntheticSpec(
            d=_pick(args.d, cfg, "d"), n=_pick(args.n, cfg, "n"),
            prior_pos=_pick(args.prior_pos, cfg, "prior_pos"),
            outlier_frac=_pick(args.outliers, cfg, "outlier_frac", 0.0),
            seed=_pick(args.seed, cfg, "seed", 0))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid synthetic spec: {exc}") from exc
    ds, exact = gen_synthetic(spec)
    run = _Run(args, "gen")
    run.manifest["config"] = spec.to_dict()
    run.manifest["seed"] = spec.seed
    data_path = run.write(f"{args.name}.libsvm", dump_libsvm(ds))
    doc = moments_to_json(ClassMoments.from_exact(exact))
    doc["spec"] = spec.to_dict()
    run.write(f"{args.name}.moments.json", _json_text(doc))
    run.finish()
    print(data_path)
    return EXIT_OK


def cmd_train(args):
    cfg = _config(args)
    objective = _pick(args.objective, cfg, "objective")
    if objective not in OBJECTIVE_IDS:
        raise UsageError(f"--objective must be one of {', '.join(OBJECTIVE_IDS)}")
    data_path = _pick(args.data, cfg, "data")
    if data_path is None:
        raise UsageError("--data is required")
    lbfgs = _lbfgs_config(args, cfg)
    lam = _pick(args.lam, cfg, "lambda")
    rep = _pick(args.representation, cfg, "representation", "auto")
    normalize = not args.no_normalize and cfg.get("normalize", True)
    seed = _pick(args.seed, cfg, "seed", 0)

    ds = _load_data(data_path)
    run = _Run(args, "train")
    run.input(data_path)
    moments = None
    if args.moments:
        run.input(args.moments)
        moments = moments_from_json(_read_json(args.moments),
                                    os.path.dirname(args.moments))
        if moments.dim != ds.d:
            if moments.dim < ds.d:
                raise DataError(f"moments have d={moments.dim}, data d={ds.d}")
            ds = _load_data(data_path, d=moments.dim)

    snapshots = {}

    def callback(info):
        if info.iteration in args.snapshot_iters:
            snapshots[info.iteration] = info.w.copy()

    model = fit(ds, objective, lam=lam, cfg=lbfgs, moments=moments, rep=rep,
                normalize=normalize, seed=seed, callback=callback)
    run.manifest["config"] = {"objective": objective, "data": data_path,
                              "lambda": model.lam, "representation": rep,
                              "normalize": bool(normalize), "seed": seed,
                              "lbfgs": lbfgs.to_dict(),
                              "moments": args.moments}
    model.train_meta["data"] = data_path
    run.write("model.json", _json_text(model.to_json()))
    run.write("result.json", _json_text(model.result.to_dict()
                                        | {"moment_time": model.moment_time}))
    for it, w in sorted(snapshots.items()):
        snap = Model(w, model.scale, objective, model.lam,
                     train_meta={"iteration": it, "data": data_path})
        run.write(f"model_iter{it}.json", _json_text(snap.to_json()))
    if args.trajectory:
        rows = [{"iter": i, "value": v, "grad_norm": g}
                for i, v, g in model.result.trajectory]
        run.write("trajectory.csv", _csv_text(("iter", "value", "grad_norm"), rows))
    run.finish()
    r = model.result
    print(json.dumps({"objective": objective, "iterations": r.iterations,
                      "converged": r.converged,
                      "final_grad_norm": r.final_grad_norm,
                      "objective_value": r.objective_value}))
    return EXIT_OK


def _load_model(path):
    try:
        return Model.from_json(_read_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: not a model file ({exc})") from exc


def cmd_eval(args):
    model = _load_model(args.model)
    ds = _load_data(args.data)
    if ds.d > model.d:
        raise DataError(f"data has d={ds.d}, model has d={model.d}")
    if ds.d < model.d:
        ds = _load_data(args.data, d=model.d)
    ds = apply_scale(ds, model.scale)
    report = {"n": ds.n, "accuracy": 1.0 - empirical_error(model.w, ds)}
    status = EXIT_OK
    try:
        report["auc"] = auc(model.w, ds, ties=args.auc_ties)
    except DataError as exc:
        report["auc"] = None
        report["auc_error"] = str(exc)
        status = EXIT_DATA
    if args.format == "csv":
        print(_csv_text(("n", "accuracy", "auc"), [report]), end="")
    else:
        print(json.dumps(report))
    if status != EXIT_OK:
        print(f"error: {report['auc_error']}", file=sys.stderr)
    return status


def cmd_bench(args):
    cfg = _config(args)
    if args.objectives:
        cfg["objectives"] = args.objectives
    if args.data:
        cfg["data"] = args.data
    for key, value in (("k", args.k), ("repeats", args.repeats),
                       ("lambda", args.lam), ("protocol", args.protocol),
                       ("outlier_frac", args.outliers),
                       ("moments", args.moments_source),
                       ("representation", args.representation),
                       ("auc_ties", args.auc_ties)):
        if value is not None:
            cfg[key] = value
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.no_normalize:
        cfg["normalize"] = False
    cfg["lbfgs"] = _lbfgs_config(args, cfg).to_dict()
    if cfg.get("data") is None:
        raise UsageError("bench needs a dataset (--data or config 'data')")
    try:
        bench = BenchmarkConfig.from_dict(cfg)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid benchmark configuration: {exc}") from exc

    run = _Run(args, "bench")
    if isinstance(bench.data, str):
        run.input(bench.data)
    try:
        reports = run_benchmark(bench)
    except OSError as exc:
        raise DataError(f"cannot read {bench.data}: {exc.strerror}") from exc
    records = [r for rep in reports.values() for r in rep.records]
    run.manifest["config"] = bench.to_dict()
    run.manifest["seed"] = bench.seed
    run.write("runs.csv", records_to_csv(records))
    run.write("timings.csv", timings_to_csv(records))
    summary = [summarize(rep.records, o, rep.dataset) for o, rep in reports.items()]
    run.write("summary.json", _json_text(summary))
    run.finish()
    if args.format == "csv":
        fields = tuple(summary[0])
        print(_csv_text(fields, summary), end="")
    else:
        print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_path_plot(args):
    start = _load_model(args.start)
    end = _load_model(args.end)
    if start.d != end.d:
        raise DataError(f"endpoint models differ in dimension: {start.d} vs {end.d}")
    ds = _load_data(args.data, d=start.d)
    ds = apply_scale(ds, start.scale)
    functions = args.objectives
    rows = path_values(start.w, end.w, ds, functions, points=args.points)
    run = _Run(args, "path-plot")
    for p in (args.start, args.end, args.data):
        run.input(p)
    run.manifest["config"] = {"functions": list(functions), "points": args.points}
    path = run.write("path.csv", _csv_text(("t",) + tuple(functions), rows))
    run.finish()
    print(path)
    return EXIT_OK


def cmd_score_hist(args):
    model = _load_model(args.model)
    ds = _load_data(args.data, d=model.d)
    ds = apply_scale(ds, model.scale)
    seed = args.seed if args.seed is not None else 0
    rows = score_histograms(model.w, ds, bins=args.bins,
                            max_pairs=args.max_pairs, seed=seed)
    run = _Run(args, "score-hist")
    run.input(args.model)
    run.input(args.data)
    run.manifest["config"] = {"bins": args.bins, "max_pairs": args.max_pairs}
    run.manifest["seed"] = seed
    fields = ("population", "bin", "left", "right", "count", "fit_mean", "fit_std")
    path = run.write("hist.csv", _csv_text(fields, rows))
    run.finish()
    print(path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _csv_list(choices):
    def parse(text):
        items = tuple(s.strip() for s in text.split(",") if s.strip())
        bad = [s for s in items if s not in choices]
        if bad or not items:
            raise argparse.ArgumentTypeError(
                f"choose from {', '.join(choices)}; got {text!r}")
        return items
    return parse


def _int_list(text):
    try:
        return {int(s) for s in text.split(",") if s.strip()}
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints, got {text!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--config", help="JSON file with command settings")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    lbfgs = argparse.ArgumentParser(add_help=False)
    lbfgs.add_argument("--memory", type=int)
    lbfgs.add_argument("--c1", type=float)
    lbfgs.add_argument("--c2", type=float)
    lbfgs.add_argument("--max-iters", dest="max_iters", type=int)
    lbfgs.add_argument("--grad-tol", dest="grad_tol", type=float)

    parser = _Parser(prog="smoothrisk", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="generate synthetic Gaussian data")
    p.add_argument("--d", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--prior-pos", dest="prior_pos", type=float)
    p.add_argument("--outliers", type=float, help="fraction of labels to flip")
    p.add_argument("--name", default="synthetic")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", parents=[common, lbfgs], help="train a linear classifier")
    p.add_argument("--objective", choices=OBJECTIVE_IDS)
    p.add_argument("--data")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--representation", choices=("auto", "explicit", "implicit"))
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--moments", help="moments JSON to use instead of estimates")
    p.add_argument("--trajectory", action="store_true",
                   help="write trajectory.csv (iter, value, grad_norm)")
    p.add_argument("--snapshot-iters", type=_int_list, default=set(),
                   help="comma-separated iterations to save as model_iterK.json")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="accuracy and AUC of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--auc-ties", choices=("strict", "half"), default="strict")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", parents=[common, lbfgs], help="cross-validated benchmark")
    p.add_argument("--objectives", type=_csv_list(OBJECTIVE_IDS))
    p.add_argument("--data")
    p.add_argument("--k", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--protocol", choices=("kfold", "holdout"))
    p.add_argument("--outliers", type=float)
    p.add_argument("--moments", dest="moments_source", choices=("empirical", "exact"))
    p.add_argument("--representation", choices=("auto", "explicit", "implicit"))
    p.add_argument("--auc-ties", choices=("strict", "half"))
    p.add_argument("--no-normalize", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("path-plot", parents=[common], help="objectives along a weight segment")
    p.add_argument("--start", required=True, help="model JSON at the segment start")
    p.add_argument("--end", required=True, help="model JSON at the segment end")
    p.add_argument("--data", required=True)
    p.add_argument("--objectives", type=_csv_list(PATH_FUNCTIONS),
                   default=("n01", "emp01"))
    p.add_argument("--points", type=int, default=100)
    p.set_defaults(func=cmd_path_plot)

    p = sub.add_parser("score-hist", parents=[common], help="score histograms")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--max-pairs", type=int, default=100_000)
    p.set_defaults(func=cmd_score_hist)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        where = f" ({exc.filename})" if exc.filename else ""
        print(f"I/O error{where}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
