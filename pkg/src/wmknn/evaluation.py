"""Cross-validated evaluation of every (variant, k) cell and table output."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import reference
from .classify import (EPSILON, TABLE_ORDER, ClassifierModel, DegenerateFilterError, Prediction,
                       Variant, filter_noise, predict_many)
from .dataset import PROFILES, Dataset, apply_normalizer, fit_normalizer, stratified_folds
from .geometry import distance_matrix

METRICS = ("accuracy", "certainty", "rejection")
ABSENT = "—"

DESIGN_FLAGS = {
    "split_protocol": "stratified k-fold cross-validation (seeded per-class shuffle, round-robin deal)",
    "normalization": "min-max to [0,1] fit on the training split; test values clamped; constant features -> 0",
    "imputation": "training-split mean (numeric), training-split mode (categorical)",
    "categorical_encoding": "one-hot, one column per declared category",
    "distance": "euclidean",
    "neighbor_tie_break": "ascending distance, then ascending instance id; queries rank after training ids",
    "vote_tie_break": "first class in class_set order",
    "weight": "1/max(d, epsilon)",
    "weight_epsilon": repr(EPSILON),
    "noise_filter": "single pass, mutual sets against the original training split, same k as prediction",
    "test_mutuality": "query inserted as a candidate when testing the reverse neighbor condition",
    "certainty": "vote share for unweighted variants, weight share for weighted variants",
    "accuracy_denominator": "classified instances only; rejection rate reported separately",
    "aggregation": "unweighted mean over folds",
    "reference_comparison": f"protocol-unknown, tolerance {reference.TOLERANCE} points",
}


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    variants: tuple[Variant, ...] = TABLE_ORDER
    ks: tuple[int, ...] = (3, 4, 5, 6, 7)
    n_folds: int = 10
    seed: int = 0
    normalize: bool = True

    def __post_init__(self):
        variants = tuple(Variant(v) for v in self.variants)
        if not variants:
            raise ValueError("at least one variant is required")
        if not self.ks or any(int(k) < 1 for k in self.ks):
            raise ValueError("k list must be nonempty with every k >= 1")
        if self.n_folds < 2:
            raise ValueError("n_folds must be at least 2")
        # table order regardless of how the variants were given
        object.__setattr__(self, "variants", tuple(v for v in TABLE_ORDER if v in variants))
        object.__setattr__(self, "ks", tuple(sorted({int(k) for k in self.ks})))


@dataclass(frozen=True)
class FoldResult:
    fold: int
    n_test: int
    n_classified: int
    n_correct: int
    n_removed: int
    accuracy: float | None
    rejection_rate: float
    mean_certainty: float | None


@dataclass(frozen=True)
class CellResult:
    variant: Variant
    k: int
    folds: tuple[FoldResult, ...] = ()
    failed: str | None = None

    def _mean(self, attr):
        vals = [getattr(f, attr) for f in self.folds if getattr(f, attr) is not None]
        if self.failed or not vals:
            return None
        return float(np.mean(vals))

    @property
    def accuracy(self) -> float | None:
        return self._mean("accuracy")

    @property
    def rejection_rate(self) -> float | None:
        return self._mean("rejection_rate")

    @property
    def mean_certainty(self) -> float | None:
        return self._mean("mean_certainty")

    @property
    def rejected(self) -> int:
        return sum(f.n_test - f.n_classified for f in self.folds)

    def metric(self, name: str) -> float | None:
        if name == "accuracy":
            return self.accuracy
        if name == "certainty":
            return self.mean_certainty
        if name == "rejection":
            return self.rejection_rate
        raise ValueError(f"unknown metric {name!r}; choose from {', '.join(METRICS)}")


@dataclass
class EvaluationReport:
    config: ExperimentConfig
    dataset: str
    n_instances: int
    class_counts: dict[str, int]
    cells: dict[tuple[Variant, int], CellResult] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def cell(self, variant, k: int) -> CellResult:
        return self.cells[(Variant(variant), k)]

    def value(self, metric: str, variant, k: int) -> float | None:
        return self.cell(variant, k).metric(metric)


def accuracy(predictions: Sequence[Prediction], truths: Sequence[str]) -> tuple[float | None, float]:
    """(accuracy over classified queries, rejection rate), both in percent."""
    if len(predictions) != len(truths):
        raise ValueError(f"{len(predictions)} predictions for {len(truths)} labels")
    if not predictions:
        raise ValueError("no predictions")
    classified = [(p.label, t) for p, t in zip(predictions, truths) if not p.rejected]
    rejection = 100.0 * (len(predictions) - len(classified)) / len(predictions)
    if not classified:
        return None, rejection
    correct = sum(label == t for label, t in classified)
    return 100.0 * correct / len(classified), rejection


def mean_certainty(predictions: Sequence[Prediction]) -> float | None:
    vals = [p.certainty for p in predictions if not p.rejected]
    if not vals:
        return None
    return 100.0 * float(np.mean(vals))


def _run_fold(config: ExperimentConfig, ds: Dataset, train_pos, test_pos, fold: int):
    train, test = ds.take(train_pos), ds.take(test_pos)
    norm = None
    if config.normalize:
        norm = fit_normalizer(train)
        train, test = apply_normalizer(norm, train), apply_normalizer(norm, test)
    else:
        # absent cells still need filling
        filler = fit_normalizer(train)
        fill = lambda d: d.with_features(np.where(np.isnan(d.X), filler.fill, d.X))
        train, test = fill(train), fill(test)
    D = distance_matrix(train)
    truths = test.labels
    out = {}
    for k in config.ks:
        # one filter per k, shared by the four filtered variants
        try:
            reduced = filter_noise(train, k, D)
        except DegenerateFilterError as err:
            reduced = f"fold {fold}: {err}"
        for variant in config.variants:
            if not variant.filtered:
                model = ClassifierModel(variant, k, train, frozenset(), norm)
            elif isinstance(reduced, str):
                out[(variant, k)] = reduced
                continue
            else:
                model = ClassifierModel(variant, k, reduced.filtered, reduced.removed, norm)
            preds = predict_many(model, test)
            acc, rej = accuracy(preds, truths)
            classified = [p for p, t in zip(preds, truths) if not p.rejected]
            correct = sum(p.label == t for p, t in zip(preds, truths) if not p.rejected)
            out[(variant, k)] = FoldResult(
                fold, len(preds), len(classified), correct, len(model.removed),
                acc, rej, mean_certainty(preds),
            )
    return out


def run_experiment(config: ExperimentConfig, ds: Dataset, jobs: int = 1) -> EvaluationReport:
    """Evaluate every configured cell with stratified cross-validation.

    Folds run on up to ``jobs`` threads; results are combined in fold order
    so the report does not depend on ``jobs``.
    """
    assignment = stratified_folds(ds, config.n_folds, config.seed)
    splits = [assignment.positions(f) for f in range(config.n_folds)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_fold = list(pool.map(lambda a: _run_fold(config, ds, *a),
                                     [(tr, te, f) for f, (tr, te) in enumerate(splits)]))
    else:
        per_fold = [_run_fold(config, ds, tr, te, f) for f, (tr, te) in enumerate(splits)]

    report = EvaluationReport(config, ds.name, len(ds), ds.class_counts())
    for k in config.ks:
        for variant in config.variants:
            results = [fold[(variant, k)] for fold in per_fold]
            failures = [r for r in results if isinstance(r, str)]
            folds = tuple(r for r in results if isinstance(r, FoldResult))
            report.cells[(variant, k)] = CellResult(
                variant, k, folds, "FAILED " + "; ".join(failures) if failures else None
            )

    profile = PROFILES.get(ds.name)
    if profile is not None:
        if profile.declared_classes and profile.declared_classes != len(ds.class_set):
            report.notes.append(
                f"{profile.declared_classes} classes declared, {len(ds.class_set)} present in the data"
            )
        if profile.note:
            report.notes.append(profile.note)
    if not reference.has_published(ds.name):
        report.notes.append("no published results for this dataset; no reference comparison")
    return report


def _fmt(v: float | None) -> str:
    return ABSENT if v is None else f"{v:.2f}"


def emit_table(report: EvaluationReport, metric: str, fmt: str = "csv") -> str:
    """Variants as rows (fixed order), one column per k, two decimals."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {', '.join(METRICS)}")
    ks = report.config.ks
    rows = [[v.display] + [_fmt(report.value(metric, v, k)) for k in ks]
            for v in report.config.variants]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["variant"] + [f"k={k}" for k in ks])
        w.writerows(rows)
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| variant | " + " | ".join(f"k = {k}" for k in ks) + " |",
                 "|---|" + "---:|" * len(ks)]
        lines += ["| " + " | ".join(r) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown table format {fmt!r}; use csv or markdown")


def parse_table_csv(text: str) -> dict[tuple[str, int], float | None]:
    reader = csv.reader(io.StringIO(text))
    head = next(reader)
    ks = [int(h.split("=", 1)[1]) for h in head[1:]]
    out = {}
    for row in reader:
        for k, cell in zip(ks, row[1:]):
            out[(row[0], k)] = None if cell == ABSENT else float(cell)
    return out


def compare_reference(report: EvaluationReport) -> list[dict]:
    """Measured vs published value for every cell that has one."""
    rows = []
    for metric, key in (("accuracy", "accuracy"), ("certainty", "certainty")):
        for (variant, k), cell in report.cells.items():
            ref = reference.published(report.dataset, key, variant, k)
            if ref is None:
                continue
            got = cell.metric(metric)
            rows.append({
                "metric": metric, "variant": variant, "k": k, "measured": got, "published": ref,
                "delta": None if got is None else got - ref,
                "within_tolerance": got is not None and abs(got - ref) <= reference.TOLERANCE,
                "protocol": "unknown",
            })
    return rows


def _num(v) -> str:
    return "absent" if v is None else f"{v:.6f}"


def dump_report(report: EvaluationReport) -> str:
    """Everything in the report as ``key=value`` lines."""
    c = report.config
    lines = [
        f"config.dataset={c.dataset}",
        f"config.variants={','.join(v.value for v in c.variants)}",
        f"config.k={','.join(map(str, c.ks))}",
        f"config.folds={c.n_folds}",
        f"config.seed={c.seed}",
        f"config.normalize={str(c.normalize).lower()}",
    ]
    lines += [f"flag.{k}={v}" for k, v in DESIGN_FLAGS.items()]
    lines.append(f"dataset.name={report.dataset}")
    lines.append(f"dataset.instances={report.n_instances}")
    lines.append(f"dataset.classes={len(report.class_counts)}")
    lines.append("dataset.class_counts=" + ",".join(f"{k}:{v}" for k, v in report.class_counts.items()))
    lines += [f"note.{i}={n}" for i, n in enumerate(report.notes)]
    for (variant, k), cell in report.cells.items():
        base = f"cell.{variant.value}.k{k}"
        lines.append(f"{base}.status={cell.failed or 'ok'}")
        lines.append(f"{base}.accuracy={_num(cell.accuracy)}")
        lines.append(f"{base}.certainty={_num(cell.mean_certainty)}")
        lines.append(f"{base}.rejection={_num(cell.rejection_rate)}")
        for f in cell.folds:
            fb = f"{base}.fold{f.fold}"
            lines.append(f"{fb}.test={f.n_test}")
            lines.append(f"{fb}.classified={f.n_classified}")
            lines.append(f"{fb}.correct={f.n_correct}")
            lines.append(f"{fb}.removed={f.n_removed}")
            lines.append(f"{fb}.accuracy={_num(f.accuracy)}")
            lines.append(f"{fb}.rejection={_num(f.rejection_rate)}")
            lines.append(f"{fb}.certainty={_num(f.mean_certainty)}")
    for row in compare_reference(report):
        rb = f"reference.{row['metric']}.{row['variant'].value}.k{row['k']}"
        lines.append(f"{rb}.measured={_num(row['measured'])}")
        lines.append(f"{rb}.published={row['published']:.2f}")
        lines.append(f"{rb}.within_tolerance={str(row['within_tolerance']).lower()}")
        lines.append(f"{rb}.protocol=unknown")
    return "\n".join(lines) + "\n"


def parse_dump(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if line and not line.startswith("#"):
            key, _, value = line.partition("=")
            out[key] = value
    return out
