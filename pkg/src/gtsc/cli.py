"""Batch command-line interface: ``gtsc {train,encode,cluster,eval,synth,inspect}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Failures print one ``error: <code>: <message>`` line on stderr.
"""

import argparse
import contextlib
import csv
import io
import os
import sys

import numpy as np

from .config import RunConfig, read_config_file
from .data import load_dataset, save_dataset, synth_clusters
from .dictionary import atom_norms
from .exceptions import GTSCError, MissingData
from .metrics import accuracy, kmeans, nmi
from .pipeline import METHODS, ClusterReport, encode, evaluate, extract_features, train_gtsc
from .storage import atomic_write_text, load_model, save_model
from .tensor import save_tt3d


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _run_options(p):
    p.add_argument("--config", help="flat 'key = value' file; flags override it")
    p.add_argument("--r", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--q", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iters", type=int, dest="max_iters")
    p.add_argument("--tol", type=float)
    p.add_argument("--restarts", type=int)


def build_parser():
    parser = _Parser(prog="gtsc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("train", help="learn a dictionary and codes")
    p.add_argument("--data", required=True, help="PGM directory, TT3D file or synth output dir")
    p.add_argument("--out", required=True, help="model directory")
    _run_options(p)

    p = sub.add_parser("encode", help="encode data with a trained dictionary")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="output directory for codes and features")
    p.add_argument("--max-iters", type=int, dest="max_iters")
    p.add_argument("--tol", type=float)

    p = sub.add_parser("cluster", help="K-means on a feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--k", type=int, required=True, help="number of clusters")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--labels", help="ground-truth labels, one per line")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("eval", help="train, cluster and score one method")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=METHODS, default="gtsc")
    p.add_argument("--seeds", type=int, dest="n_runs", help="number of K-means seeds")
    p.add_argument("--out", help="report CSV path")
    _run_options(p)

    p = sub.add_parser("synth", help="write a synthetic clustered dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--per-class", type=int, default=30, dest="per_class")
    p.add_argument("--m", type=int, default=8)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--atoms", type=int, default=3)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--max-shift", type=int, default=1, dest="max_shift")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pgm", action="store_true", help="also write PGM images")

    p = sub.add_parser("inspect", help="summarize a model directory")
    p.add_argument("--model", required=True)
    return parser


def _config_from(args):
    base = RunConfig()
    if getattr(args, "config", None):
        if not os.path.exists(args.config):
            raise MissingData(f"{args.config}: no such config file")
        base = base.updated(**read_config_file(args.config))
    names = ("r", "alpha", "beta", "q", "rounds", "seed", "max_iters", "tol", "restarts", "n_runs")
    return base.updated(**{n: getattr(args, n, None) for n in names})


def _labeled(path):
    ds = load_dataset(path)
    if ds.labels is None:
        raise MissingData(f"{path}: dataset has no labels")
    return ds


def _features_csv(c):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["image"] + [f"c{i}" for i in range(c.shape[0])])
    for j in range(c.shape[1]):
        w.writerow([j] + [repr(float(v)) for v in c[:, j]])
    return buf.getvalue()


def _read_features(path):
    if not os.path.exists(path):
        raise MissingData(f"{path}: no such file")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise MissingData(f"{path}: no feature rows")
    return np.array([[float(v) for v in row[1:]] for row in rows[1:]])


def _read_labels(path):
    if not os.path.exists(path):
        raise MissingData(f"{path}: no such file")
    with open(path) as fh:
        return np.array([int(t) for t in fh.read().split()], dtype=np.int64)


def cmd_train(args, out):
    cfg = _config_from(args)
    ds = load_dataset(args.data)
    model = train_gtsc(ds.images, r=cfg.r, alpha=cfg.alpha, beta=cfg.beta, q=cfg.q,
                       rounds=cfg.rounds, seed=cfg.seed, max_iters=cfg.max_iters, tol=cfg.tol)
    save_model(args.out, model, extra={"dataset": ds.name})
    print(f"trained {model.method}: r={cfg.r} rounds={cfg.rounds} "
          f"objective {model.trace[0]:.6g} -> {model.trace[-1]:.6g}", file=out)


def cmd_encode(args, out):
    model = load_model(args.model)
    ds = load_dataset(args.data)
    cfg = model.config
    codes = encode(ds.images, model.dictionary, alpha=cfg["alpha"], beta=cfg["beta"], q=cfg["q"],
                   max_iters=args.max_iters or cfg["max_iters"], tol=args.tol or cfg["tol"])
    os.makedirs(args.out, exist_ok=True)
    save_tt3d(os.path.join(args.out, "codes.tt3d"), codes)
    atomic_write_text(os.path.join(args.out, "features.csv"), _features_csv(extract_features(codes)))
    print(f"encoded {codes.shape[1]} images into {codes.shape[0]} features", file=out)


def cmd_cluster(args, out):
    feats = _read_features(args.features)
    seeds = [args.seed + i for i in range(args.seeds)]
    preds = [kmeans(feats, args.k, seed=s, restarts=args.restarts) for s in seeds]
    os.makedirs(args.out, exist_ok=True)
    atomic_write_text(os.path.join(args.out, "labels.txt"), "".join(f"{v}\n" for v in preds[0]))
    if args.labels:
        truth = _read_labels(args.labels)
        report = ClusterReport("features", preds[0], 0.0, 0.0, seeds,
                               [accuracy(p, truth) for p in preds], [nmi(p, truth) for p in preds])
        report.acc = float(np.mean(report.per_seed_acc))
        report.nmi = float(np.mean(report.per_seed_nmi))
        atomic_write_text(os.path.join(args.out, "report.csv"), report.csv_text())
        print(report.summary(), file=out)
    else:
        print(f"clustered {feats.shape[0]} samples into {args.k} clusters", file=out)


def cmd_eval(args, out):
    cfg = _config_from(args)
    ds = _labeled(args.data)
    report = evaluate(ds.images, ds.labels, method=args.method, config=cfg)
    if args.out:
        atomic_write_text(args.out, report.csv_text())
    else:
        out.write(report.csv_text())
    print(report.summary(), file=out)


def cmd_synth(args, out):
    ds = synth_clusters(n_classes=args.classes, per_class=args.per_class, m=args.m, k=args.k,
                        atoms_per_class=args.atoms, noise_sigma=args.noise,
                        max_shift=args.max_shift, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    save_dataset(os.path.join(args.out, "data.tt3d"), ds,
                 pgm_dir=os.path.join(args.out, "pgm") if args.pgm else None)
    m, n, k = ds.images.shape
    print(f"wrote {n} images of {m}x{k} in {args.classes} classes to {args.out}", file=out)


def cmd_inspect(args, out):
    model = load_model(args.model)
    d, b = model.dictionary, model.codes
    norms = atom_norms(d)
    cfg = model.config
    print(f"method     {cfg.get('method')}", file=out)
    print(f"dims       m={d.shape[0]} r={d.shape[1]} k={d.shape[2]} n={b.shape[1]}", file=out)
    print(f"alpha      {cfg.get('alpha')}", file=out)
    print(f"beta       {cfg.get('beta')}", file=out)
    print(f"objective  {model.trace[0]:.6g} -> {model.trace[-1]:.6g} ({len(model.trace) - 1} rounds)",
          file=out)
    print(f"sparsity   {float(np.mean(np.abs(b) < 1e-12)):.4f}", file=out)
    print(f"atom norm  min={np.sqrt(norms.min()):.6f} max={np.sqrt(norms.max()):.6f}", file=out)
    print("slack      " + " ".join(f"{1.0 - v:.3e}" for v in norms), file=out)


_COMMANDS = {
    "train": cmd_train,
    "encode": cmd_encode,
    "cluster": cmd_cluster,
    "eval": cmd_eval,
    "synth": cmd_synth,
    "inspect": cmd_inspect,
}


def _thread_limit():
    val = os.environ.get("GTSC_NUM_THREADS")
    if not val:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=max(1, int(val)))


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        with _thread_limit():
            _COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 1
    except GTSCError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: MissingData: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
