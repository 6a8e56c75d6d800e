"""Command-line front end: inference, benchmarking, soft-float conformance,
and the partial-sort advisor.

Output is deterministic: identical argv and input files give byte-identical
stdout and report files.  Exit codes: 0 success, 1 domain error, 2 usage
error.  Nothing is written to the report path on an error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from . import kernels, parallel, perf
from .backend import Backend
from .errors import NmlError
from .model import (
    GnbModel,
    KMeansState,
    KnnModel,
    LinearModel,
    RfModel,
    load_dataset,
    load_model,
)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--cores", type=int, default=None,
                   help="worker count (default: NML_CORES env var or 1)")
    p.add_argument("--backend", choices=("native", "emulated"), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="write a JSON report to this path")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nml")
    sub = p.add_subparsers(dest="command", required=True)

    infer = sub.add_parser("infer", help="predict labels, one per line")
    infer.add_argument("--model", required=True)
    infer.add_argument("--data", required=True)
    infer.add_argument("--k", type=int, help="override kNN neighbor count")
    infer.add_argument("--epsilon", type=float, help="override k-means threshold")
    infer.add_argument("--max-iters", type=int, help="override k-means iteration cap")
    _add_common(infer)

    bench = sub.add_parser("bench", help="sequential vs parallel op-count report")
    bench.add_argument("--model", required=True)
    bench.add_argument("--data", required=True)
    _add_common(bench)

    conf = sub.add_parser("conformance", help="soft-float differential suite")
    conf.add_argument("--pairs", type=int, default=1_000_000)
    conf.add_argument("--seed", type=int, default=0)

    adv = sub.add_parser("advise-sort", help="partial-sort strategy advisor")
    adv.add_argument("--n", type=int, required=True)
    adv.add_argument("--cores", type=int, required=True)
    adv.add_argument("--k", type=int, required=True)
    return p


def _cores(args) -> int:
    if args.cores is not None:
        return args.cores
    env = os.environ.get("NML_CORES")
    return int(env) if env else 1


def _backend(args) -> Backend:
    mode = args.backend or "native"
    return Backend(mode)


def _kernel_name(model) -> str:
    if isinstance(model, LinearModel):
        return model.kind
    if isinstance(model, GnbModel):
        return "gnb"
    if isinstance(model, KnnModel):
        return "knn"
    if isinstance(model, KMeansState):
        return "kmeans"
    if isinstance(model, RfModel):
        return "rf"
    raise NmlError(f"unsupported model type {type(model).__name__}")


def _apply_overrides(model, args):
    if isinstance(model, KnnModel) and args.k is not None:
        return replace(model, k=args.k).validate()
    if isinstance(model, KMeansState):
        if args.epsilon is not None:
            model = replace(model, epsilon=args.epsilon)
        if getattr(args, "max_iters", None) is not None:
            model = replace(model, max_iters=args.max_iters)
        return model.validate()
    return model


def _infer_labels(model, data, cores: int, be: Backend, cfg_mode="threads") -> list[int]:
    name = _kernel_name(model)
    if name == "kmeans":
        if cores > 1:
            cfg = parallel.ClusterConfig(n_cores=cores, mode=cfg_mode)
            _, assignments, _ = parallel.par_kmeans_run(model, data, cfg, be)
        else:
            _, assignments, _ = kernels.kmeans_run(model, data, be)
        return list(assignments)
    seq_fn = {"lr": kernels.lr_infer, "svm": kernels.svm_infer, "gnb": kernels.gnb_infer,
              "knn": kernels.knn_infer, "rf": kernels.rf_infer}[name]
    if cores > 1:
        cfg = parallel.ClusterConfig(n_cores=cores, mode=cfg_mode)
        par_fn = {"lr": parallel.par_linear_infer, "svm": parallel.par_linear_infer,
                  "gnb": parallel.par_gnb_infer, "knn": parallel.par_knn_infer,
                  "rf": parallel.par_rf_infer}[name]
        return [par_fn(model, data.row(i), cfg, be) for i in range(data.n_samples)]
    return [seq_fn(model, data.row(i), be) for i in range(data.n_samples)]


def _write_report(path: str | None, text: str, out) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        out.write(text)


def _cmd_infer(args, out) -> int:
    with open(args.model, "rb") as fh:
        model = load_model(fh.read())
    with open(args.data, "rb") as fh:
        data = load_dataset(fh.read())
    model = _apply_overrides(model, args)
    cores = _cores(args)
    be = _backend(args)
    labels = _infer_labels(model, data, cores, be)
    for lab in labels:
        out.write(f"{lab}\n")
    if args.report:
        doc = {"kernel": _kernel_name(model), "n_cores": cores, "backend": be.mode,
               "labels": labels}
        _write_report(args.report, json.dumps(doc, indent=2) + "\n", out)
    return 0


def _bench_case(model, data) -> perf.BenchCase:
    name = _kernel_name(model)
    dims = {}
    if isinstance(model, LinearModel) or isinstance(model, GnbModel):
        dims = {"n_class": model.n_class, "d": model.d}
    elif isinstance(model, KnnModel):
        dims = {"n_train": model.train.n_samples, "d": model.train.d, "k": model.k}
    elif isinstance(model, KMeansState):
        dims = {"n_samples": data.n_samples, "d": model.d, "k": model.k}
    elif isinstance(model, RfModel):
        dims = {"n_trees": model.n_trees, "d": model.d, "n_class": model.n_class}
    if name == "kmeans":
        return perf.BenchCase(name, model, data=data, dims=dims)
    # benchmark one inference: the first sample of the dataset
    return perf.BenchCase(name, model, x=data.row(0), dims=dims)


def _cmd_bench(args, out) -> int:
    with open(args.model, "rb") as fh:
        model = load_model(fh.read())
    with open(args.data, "rb") as fh:
        data = load_dataset(fh.read())
    cores = _cores(args)
    mode = args.backend or "emulated"
    cfg = parallel.ClusterConfig(n_cores=cores)
    report = perf.measure(_bench_case(model, data), cfg, Backend(mode))
    _write_report(args.report, perf.emit_report([report]), out)
    return 0


def _cmd_conformance(args, out) -> int:
    from .conformance import run_conformance

    rep = run_conformance(n_random=args.pairs, seed=args.seed)
    for r in rep.results:
        status = "PASS" if r.passed else "FAIL"
        out.write(f"{r.op}: {status} ({r.checked} cases, {r.mismatches} mismatches)\n")
        for a, b, got, want in r.first_failures:
            out.write(f"  {a:#010x} {b:#010x} -> got {got!r}, want {want!r}\n")
    out.write(f"total: {'PASS' if rep.passed else 'FAIL'} in {rep.elapsed_s:.1f}s\n")
    return 0 if rep.passed else 1


def _cmd_advise(args, out) -> int:
    choice = perf.sort_advisor(args.n, args.cores, args.k)
    out.write(f"{choice.choice}\n")
    return 0


def run(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "infer":
            return _cmd_infer(args, out)
        if args.command == "bench":
            return _cmd_bench(args, out)
        if args.command == "conformance":
            return _cmd_conformance(args, out)
        if args.command == "advise-sort":
            return _cmd_advise(args, out)
        parser.error(f"unknown command {args.command}")
    except NmlError as exc:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1
    except OSError as exc:
        err.write(f"error: {exc}\n")
        return 1
    return 2


def main() -> None:
    sys.exit(run())
