"""Command-line interface: ``describe``, ``filter``, ``predict`` and ``bench``.

Exit codes: 0 success (a rejected query counts as success), 1 internal
failure, 2 bad input or usage, 3 algorithmic degeneracy.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import reference
from .classify import TABLE_ORDER, DegenerateFilterError, Variant, filter_noise, fit, predict
from .dataset import (PROFILES, Dataset, LoadError, SchemaMismatchError, apply_normalizer,
                      describe, encode_row, fit_normalizer, load_csv, load_profile,
                      parse_schema_spec)
from .evaluation import (ExperimentConfig, compare_reference, dump_report, emit_table,
                         run_experiment)

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_DEGENERATE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def parse_k_range(text: str) -> tuple[int, ...]:
    """``"3..7"`` -> (3, 4, 5, 6, 7); also accepts ``"5"`` and ``"3,5,7"``."""
    try:
        if ".." in text:
            lo, hi = (int(p) for p in text.split("..", 1))
            ks = tuple(range(lo, hi + 1))
        else:
            ks = tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad k range {text!r}") from None
    if not ks or min(ks) < 1:
        raise argparse.ArgumentTypeError(f"k range {text!r} must be nonempty with k >= 1")
    return ks


def parse_variants(text: str) -> tuple[Variant, ...]:
    if text.strip().lower() == "all":
        return TABLE_ORDER
    try:
        return tuple(Variant.parse(p) for p in text.split(",") if p.strip())
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def _positive_k(text: str) -> int:
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"k must be an integer, got {text!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError("k must be at least 1")
    return k


def _variant(text: str) -> Variant:
    try:
        return Variant.parse(text)
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def load_dataset(args) -> Dataset:
    """Resolve ``--dataset`` as a built-in profile name or a file path."""
    target = args.dataset
    if target in PROFILES and args.profile is None and args.columns is None:
        return load_profile(target, data_dir=args.data_dir)
    path = Path(target)
    if args.columns is not None:
        try:
            schema = parse_schema_spec(args.columns)
        except ValueError as err:
            raise UsageError(f"--columns: {err}") from None
        return load_csv(path, schema, header=args.header)
    if args.profile is not None:
        return load_profile(args.profile, path=path)
    raise UsageError(
        f"{target!r} is not a built-in profile ({', '.join(PROFILES)}); "
        "give --profile or --columns for a custom file"
    )


def cmd_describe(args, out) -> int:
    ds = load_dataset(args)
    info = describe(ds)
    out.write(f"dataset: {info['name']}\n")
    out.write(f"instances: {info['instances']}\n")
    out.write(f"features: {info['numeric']} numeric, {info['categorical']} categorical, "
              f"{info['dropped']} dropped ({info['encoded_features']} encoded columns)\n")
    out.write(f"classes: {info['classes']}\n")
    for label, n in info["class_counts"].items():
        out.write(f"  {label}: {n}\n")
    out.write(f"missing cells: {info['missing_cells']}\n")
    profile = PROFILES.get(ds.name)
    if profile and profile.declared_classes and profile.declared_classes != info["classes"]:
        out.write(f"note: {profile.declared_classes} classes declared, {info['classes']} present\n")
    return EXIT_OK


def _prepared(ds: Dataset, normalize: bool):
    norm = fit_normalizer(ds)
    if normalize:
        return apply_normalizer(norm, ds), norm
    return ds.with_features(np.where(np.isnan(ds.X), norm.fill, ds.X)), None


def cmd_filter(args, out) -> int:
    ds = load_dataset(args)
    space, _ = _prepared(ds, not args.no_normalize)
    result = filter_noise(space, args.k)
    removed = sorted(result.removed)
    out_path = Path(args.output)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if ds.header is not None:
            w.writerow(ds.header)
        keep = set(result.filtered.ids.tolist())
        w.writerows(row for i, row in enumerate(ds.raw_rows) if i in keep)
    sidecar = Path(args.removed) if args.removed else out_path.with_name(out_path.name + ".removed")
    with open(sidecar, "w", encoding="utf-8") as fh:
        # row numbers are 1-based data rows (header excluded)
        fh.write(f"# k={args.k} instances={len(ds)} retained={len(result.filtered)} removed={len(removed)}\n")
        fh.write("# row_index\tk_nearest_rows (none reciprocate)\n")
        for i in removed:
            evidence = ",".join(str(j + 1) for j in result.knn[i])
            fh.write(f"{i + 1}\t{evidence}\n")
    out.write(f"retained {len(result.filtered)} of {len(ds)} instances (k={args.k}); "
              f"removed {len(removed)}\n")
    out.write(f"wrote {out_path} and {sidecar}\n")
    return EXIT_OK


def cmd_predict(args, out) -> int:
    ds = load_dataset(args)
    cells = next(csv.reader([args.query]))
    feature_cols = [f for f in ds.schema if f.kind in ("numeric", "categorical")]
    if len(cells) != len(feature_cols):
        raise UsageError(f"query has {len(cells)} values, expected {len(feature_cols)} "
                         f"({', '.join(f.name for f in feature_cols)})")
    x = encode_row(feature_cols, cells, row_no=0)
    space, norm = _prepared(ds, not args.no_normalize)
    model = fit(args.variant, space, args.k, norm)
    if norm is not None:
        x = norm.transform(x[None, :])[0]
    else:
        x = np.where(np.isnan(x), fit_normalizer(ds).fill, x)
    pred = predict(model, x)
    out.write(f"variant: {model.variant.display} k={model.k}\n")
    if pred.rejected:
        out.write("prediction: REJECTED (outlier)\n")
        out.write("certainty: —\n")
    else:
        out.write(f"prediction: {pred.label}\n")
        out.write(f"certainty: {pred.certainty:.4f}\n")
    out.write(f"voters: {len(pred.neighbor_ids)}\n")
    for label in ds.class_set:
        if label in pred.tally.counts:
            out.write(f"  {label}: votes={pred.tally.counts[label]} "
                      f"weight={pred.tally.weights[label]:.6g}\n")
    return EXIT_OK


def cmd_bench(args, out) -> int:
    ds = load_dataset(args)
    config = ExperimentConfig(ds.name, args.variants, args.k, args.folds, args.seed,
                              not args.no_normalize)
    report = run_experiment(config, ds, jobs=args.jobs)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    ext = "md" if args.format == "markdown" else "csv"
    for metric in ("accuracy", "certainty", "rejection"):
        (outdir / f"{ds.name}_{metric}.{ext}").write_text(emit_table(report, metric, args.format),
                                                          encoding="utf-8")
    (outdir / f"{ds.name}_report.txt").write_text(dump_report(report), encoding="utf-8")
    out.write(emit_table(report, "accuracy", args.format))
    rows = compare_reference(report)
    if rows:
        misses = [r for r in rows if not r["within_tolerance"]]
        out.write(f"reference comparison (protocol unknown, tolerance {reference.TOLERANCE}): "
                  f"{len(rows) - len(misses)}/{len(rows)} cells within tolerance\n")
        for r in misses:
            measured = "—" if r["measured"] is None else f"{r['measured']:.2f}"
            out.write(f"  outside: {r['metric']} {r['variant'].display} k={r['k']} "
                      f"measured={measured} published={r['published']:.2f} protocol=unknown\n")
    for note in report.notes:
        out.write(f"note: {note}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wmknn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--dataset", required=True,
                       help=f"built-in profile ({', '.join(PROFILES)}) or path to a CSV file")
        p.add_argument("--profile", choices=sorted(PROFILES), help="schema profile for a CSV path")
        p.add_argument("--columns", help="explicit schema, e.g. 'x:numeric,g:categorical=a|b,y:label'")
        p.add_argument("--header", action="store_true", help="the CSV file has a header row")
        p.add_argument("--data-dir", help="where built-in profile files live (default $WMKNN_DATA_DIR or ./data)")

    p = sub.add_parser("describe", help="summarize a dataset")
    common(p)
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("filter", help="remove training instances without mutual neighbors")
    common(p)
    p.add_argument("--k", type=_positive_k, required=True)
    p.add_argument("--output", required=True, help="CSV file for the retained rows")
    p.add_argument("--removed", help="removed-row listing (default <output>.removed)")
    p.add_argument("--no-normalize", action="store_true")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("predict", help="classify one query against a dataset")
    common(p)
    p.add_argument("--variant", type=_variant, required=True)
    p.add_argument("--k", type=_positive_k, required=True)
    p.add_argument("--query", required=True, help="comma-separated raw feature values")
    p.add_argument("--no-normalize", action="store_true")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bench", help="cross-validate variants over a k range")
    common(p)
    p.add_argument("--k", type=parse_k_range, default=(3, 4, 5, 6, 7), help="k range, e.g. 3..7")
    p.add_argument("--variants", type=parse_variants, default=TABLE_ORDER, help="'all' or a comma list")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.add_argument("--output", default="results", help="directory for tables and the report dump")
    p.add_argument("--jobs", type=int, default=1, help="folds evaluated in parallel")
    p.add_argument("--no-normalize", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except DegenerateFilterError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_DEGENERATE
    except (UsageError, LoadError, SchemaMismatchError, FileNotFoundError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        err.write(f"error: {msg}\n")
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover - last-resort guard
        err.write(f"internal error: {exc!r}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
