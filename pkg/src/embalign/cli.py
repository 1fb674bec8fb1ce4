"""Command-line interface.

Subcommands wire the library into reproducible file-to-file workflows:
``fit`` produces a transform plus a bound report, ``apply``/``center``/
``fuse`` produce embedding files readable by every other command, ``eval``
produces metric tables, and ``tightness``/``sweep`` generate the analytic
and Monte-Carlo study inputs.  One ``--seed`` fully determines every
randomized step, and repeated runs with the same arguments produce
byte-identical outputs.

Exit codes: 0 success, 1 a bound check failed, 2 invalid input,
3 file-system trouble.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import bounds, io, ops, retrieval
from .types import EmbeddingMatrix, FusionSpec
from .validation import ValidationError, seeded_rng

#: Stream keys for the per-task random streams hanging off --seed.
_TASK_SUBSAMPLE = 0
_TASK_HOLDOUT = 1

EXIT_OK = 0
EXIT_BOUND_VIOLATION = 1
EXIT_VALIDATION = 2
EXIT_IO = 3


def _float_list(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


def _load_pair(source_path, target_path, policy: str = "intersect"):
    source = io.load_embeddings(source_path)
    target = io.load_embeddings(target_path)
    return io.pair_by_id(source, target, policy)


def _pad_to_common(a, b):
    width = max(a.dims, b.dims)
    return ops.zero_pad(a, width), ops.zero_pad(b, width)


def _write_json(payload: dict, path) -> None:
    with io.atomic_write(path, "w") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2))
        fh.write("\n")


def _write_like(m, reference_path, out_path) -> None:
    """Write ``m`` in the same family as the input it was derived from.

    Binary inputs yield binary output with 64-bit records — transformed
    values are computed in 64-bit and narrowing them would silently break
    round-trip identities such as rotate-then-rotate-back.  TSV inputs
    yield TSV.
    """
    with open(reference_path, "rb") as fh:
        is_binary = fh.read(len(io.EMBEDDING_MAGIC)) == io.EMBEDDING_MAGIC
    if is_binary:
        io.write_embeddings(m, out_path, dtype=1)
    else:
        io.write_embeddings_tsv(m, out_path)


def cmd_fit(args) -> int:
    source, target = _load_pair(args.source, args.target)
    if source.count < 1:
        raise ValidationError("no paired items between source and target")
    if args.sample is not None:
        if args.sample < 1:
            raise ValidationError(f"--sample must be >= 1, got {args.sample}")
        if args.sample > source.count:
            raise ValidationError(
                f"--sample {args.sample} exceeds the {source.count} paired items"
            )
        rng = seeded_rng(args.seed, _TASK_SUBSAMPLE)
        keep = np.sort(rng.choice(source.count, size=args.sample, replace=False))
        source = EmbeddingMatrix(source.vectors[keep],
                                 [source.ids[i] for i in keep])
        target = EmbeddingMatrix(target.vectors[keep],
                                 [target.ids[i] for i in keep])
    source, target = _pad_to_common(source, target)
    if args.normalize:
        source = ops.unit_normalize(source)
        target = ops.unit_normalize(target)

    if args.method == "procrustes":
        transform = ops.solve_procrustes(source, target)
    else:
        transform = ops.solve_linear(source, target, ridge=args.ridge)

    report = bounds.build_report(source, target)
    io.write_transform(transform, args.out)
    _write_json(report.as_dict(), args.out + ".report.json")
    print(f"fitted {args.method} transform on {source.count} pairs; "
          f"residual={report.residual!r}")
    return EXIT_OK


def cmd_apply(args) -> int:
    transform = io.read_transform(args.transform)
    m = io.load_embeddings(args.infile)
    out = ops.apply_transform(transform, m)
    _write_like(out, args.infile, args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    docs = io.load_embeddings(args.docs)
    queries = io.load_embeddings(args.queries)
    truth = retrieval.RelevanceJudgments.from_tsv(args.qrels)
    transform = io.read_transform(args.transform) if args.transform else None
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    for name in metrics:
        if name not in ("ndcg", "recall"):
            raise ValidationError(f"unknown metric {name!r}")
    if not metrics:
        raise ValidationError("no metrics requested")

    result = retrieval.cross_model_eval(docs, queries, transform, truth,
                                        args.k, exclude_self=args.exclude_self)
    by_name = {"ndcg": result.ndcg, "recall": result.recall}

    per_query_path = args.out + ".per_query.csv"
    with io.atomic_write(per_query_path, "w") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["query_id", "metric", "k", "value"])
        for name in metrics:
            for qid, value in by_name[name].per_query.items():
                writer.writerow([qid, name, result.k, repr(value)])
    with io.atomic_write(args.out, "w") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["config", "metric", "k", "mean", "per_query_path"])
        for name in metrics:
            writer.writerow([result.config, name, result.k,
                             repr(by_name[name].mean), per_query_path])
    for name in metrics:
        print(f"{result.config} {name}@{result.k} mean={by_name[name].mean!r}")
    return EXIT_OK


def cmd_bound_report(args) -> int:
    source, target = _load_pair(args.source, args.target)
    source, target = _pad_to_common(source, target)
    report = bounds.build_report(source, target, slack=args.tol)
    _write_json(report.as_dict(), args.out)
    for check in report.checks:
        state = "ok" if check.holds else "VIOLATED"
        print(f"{check.name}: lhs={check.lhs!r} rhs={check.rhs!r} {state}")
    if report.violations():
        return EXIT_BOUND_VIOLATION
    return EXIT_OK


def cmd_tightness(args) -> int:
    source, target = bounds.tightness_example(args.dims, args.epsilon)
    report = bounds.build_report(source, target)
    io.write_embeddings(source, args.out + ".source.emb", dtype=1)
    io.write_embeddings(target, args.out + ".target.emb", dtype=1)
    _write_json(report.as_dict(), args.out + ".report.json")
    print(f"residual_bound_ratio={report.residual / report.theorem1_bound!r}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.mode == "noise":
        if args.levels is None:
            raise ValidationError("--mode noise requires --levels")
        rows = bounds.perturbation_sweep(args.dims, args.count, args.levels,
                                         args.seeds, base_seed=args.seed)
        header = ["noise", "seed", "epsilon_normalized", "normalized_distance"]
        table = [[repr(noise), i % args.seeds, repr(eps_n), repr(dist)]
                 for i, (noise, eps_n, dist) in enumerate(rows)]
    else:
        if not (args.source and args.target):
            raise ValidationError("--mode samples requires --source and --target")
        if args.sizes is None:
            raise ValidationError("--mode samples requires --sizes")
        source, target = _load_pair(args.source, args.target)
        source, target = _pad_to_common(source, target)
        if args.holdout < 1:
            raise ValidationError(f"--holdout must be >= 1, got {args.holdout}")
        if args.holdout >= source.count:
            raise ValidationError(
                f"--holdout {args.holdout} leaves no pool from "
                f"{source.count} pairs"
            )
        rng = seeded_rng(args.seed, _TASK_HOLDOUT)
        perm = rng.permutation(source.count)
        hold = np.sort(perm[: args.holdout])
        pool = np.sort(perm[args.holdout:])

        def take(m, idx):
            return EmbeddingMatrix(m.vectors[idx], [m.ids[i] for i in idx])

        rows = retrieval.sample_complexity_sweep(
            take(source, pool), take(target, pool), args.sizes,
            (take(source, hold), take(target, hold)),
            args.seeds, base_seed=args.seed)
        header = ["size", "seed", "residual_on_holdout"]
        table = [[n, si, repr(res)] for n, si, res in rows]

    with io.atomic_write(args.out, "w") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(table)
    print(f"wrote {len(table)} rows to {args.out}")
    return EXIT_OK


def cmd_center(args) -> int:
    m = io.load_embeddings(args.infile)
    centering = ops.fit_centering(m, renormalize=args.renormalize)
    out = ops.apply_centering(centering, m)
    _write_like(out, args.infile, args.out)
    return EXIT_OK


def cmd_fuse(args) -> int:
    first, second = _load_pair(args.first, args.second, policy="strict")
    first, second = _pad_to_common(first, second)
    spec = FusionSpec(alpha=args.alpha, renormalize_after=args.renormalize)
    out = ops.fuse(first, second, spec)
    _write_like(out, args.first, args.out)
    return EXIT_OK


def cmd_topk(args) -> int:
    docs = io.load_embeddings(args.docs)
    queries = io.load_embeddings(args.queries)
    docs, queries = _pad_to_common(docs, queries)
    run = retrieval.top_k(queries, docs, args.k, exclude_self=args.exclude_self)
    with io.atomic_write(args.out, "w") as fh:
        if args.as_qrels:
            for qid, ranked in run.rankings.items():
                for did, _ in ranked:
                    fh.write(f"{qid}\t{did}\t1.0\n")
        else:
            for qid, ranked in run.rankings.items():
                for did, score in ranked:
                    fh.write(f"{qid}\t{did}\t{score!r}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embalign",
        description="Align paired embedding sets, check the alignment-error "
                    "bounds, and evaluate dot-product retrieval.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a transform from paired embeddings")
    p.add_argument("--source", required=True, help="embeddings to be mapped")
    p.add_argument("--target", required=True, help="embeddings to map onto")
    p.add_argument("--method", choices=("procrustes", "linear"),
                   default="procrustes")
    p.add_argument("--ridge", type=float, default=0.0,
                   help="ridge penalty for --method linear")
    p.add_argument("--sample", type=int, default=None, metavar="N",
                   help="fit on N pairs sampled without replacement")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normalize", action="store_true",
                   help="unit-normalize both sides before fitting")
    p.add_argument("--out", required=True, help="transform file to write")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("apply", help="apply a stored transform to embeddings")
    p.add_argument("--transform", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("eval", help="retrieval metrics for queries vs documents")
    p.add_argument("--docs", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--qrels", required=True,
                   help="TSV of query_id, doc_id, grade")
    p.add_argument("--transform", default=None,
                   help="align queries before retrieval")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--metrics", default="ndcg,recall")
    p.add_argument("--exclude-self", action="store_true",
                   help="skip the document sharing each query's ID")
    p.add_argument("--out", required=True, help="metrics CSV to write")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bound-report",
                       help="full discrepancy/bound report for a pair")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--tol", type=float, default=bounds.CHECK_SLACK,
                   help="additive slack for each inequality check")
    p.add_argument("--out", required=True, help="JSON report to write")
    p.set_defaults(func=cmd_bound_report)

    p = sub.add_parser("tightness",
                       help="generate the pair achieving the bound exactly")
    p.add_argument("--dims", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--out", required=True,
                   help="prefix for the .source.emb/.target.emb files")
    p.set_defaults(func=cmd_tightness)

    p = sub.add_parser("sweep", help="noise or sample-size Monte-Carlo sweep")
    p.add_argument("--mode", choices=("noise", "samples"), required=True)
    p.add_argument("--dims", type=int, default=8)
    p.add_argument("--count", type=int, default=128,
                   help="items per instance for --mode noise")
    p.add_argument("--levels", type=_float_list, default=None,
                   help="comma-separated noise levels")
    p.add_argument("--source", default=None, help="pool for --mode samples")
    p.add_argument("--target", default=None, help="pool for --mode samples")
    p.add_argument("--sizes", type=_int_list, default=None,
                   help="comma-separated fitting-set sizes")
    p.add_argument("--holdout", type=int, default=256,
                   help="pairs held out for --mode samples")
    p.add_argument("--seeds", type=int, default=50,
                   help="repetitions per parameter value")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV to write")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("center", help="subtract the per-dimension mean")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--renormalize", action="store_true",
                   help="rescale rows to unit norm after centering")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_center)

    p = sub.add_parser("fuse", help="convex combination of two embedding sets")
    p.add_argument("--first", required=True)
    p.add_argument("--second", required=True)
    p.add_argument("--alpha", type=float, default=0.5,
                   help="weight of --first")
    p.add_argument("--renormalize", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("topk", help="rank documents by dot product per query")
    p.add_argument("--docs", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--exclude-self", action="store_true")
    p.add_argument("--as-qrels", action="store_true",
                   help="write binary-grade judgments instead of scores")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_topk)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
