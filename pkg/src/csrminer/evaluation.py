"""Per-class predictive performance accounting.

Every retained class is evaluated one-vs-rest: records of the class are
the "correct" category, everything else is "wrong", and a report carries
the accuracy on each side plus the overall

    overall = (hits_correct + hits_wrong) / (cases_correct + cases_wrong)

which is recomputable from the four counts exactly. Non-tree kinds use
the 50/25/25 protocol (train on 50%, network weight selection on the
25% validation part, report on that same validation part); the tree
uses 10-fold cross-validation with pooled counts, so its report bases
equal the full dataset. Scaling parameters are refit on each training
portion by default so no evaluation record leaks into them; pass
scaling_mode="all" for the fit-on-everything variant.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from csrminer.dataset import (
    CleanDataset,
    apply_scaling_many,
    fit_scaling,
    split_indices,
)
from csrminer.models import ClassifierSpec, TrainedModel, derive_seed, train
from csrminer.models.base import KIND_DISPLAY, ModelError
from csrminer.scoring import CATEGORY_DISPLAY, format_percent


class EvaluationError(ValueError):
    pass


class EmptyEvaluationSet(EvaluationError):
    pass


class BadFoldCount(EvaluationError):
    pass


class IncompleteMatrix(EvaluationError):
    pass


HOLDOUT_KINDS = ("linear", "mlp-bp", "mlp-bpcg", "pnn", "svm", "hybrid")
KIND_COLUMN_ORDER = ("linear", "mlp-bp", "mlp-bpcg", "pnn", "cart", "hybrid", "svm")


@dataclass(frozen=True)
class ClassReport:
    """One (class, model) cell of the results grid."""

    class_name: str
    kind: str
    protocol: str
    cases_correct: int
    cases_wrong: int
    hits_correct: int
    hits_wrong: int

    def __post_init__(self):
        if not 0 <= self.hits_correct <= self.cases_correct:
            raise EvaluationError("hits_correct outside 0..cases_correct")
        if not 0 <= self.hits_wrong <= self.cases_wrong:
            raise EvaluationError("hits_wrong outside 0..cases_wrong")

    @property
    def acc_correct(self) -> float:
        return self.hits_correct / self.cases_correct if self.cases_correct else 0.0

    @property
    def acc_wrong(self) -> float:
        return self.hits_wrong / self.cases_wrong if self.cases_wrong else 0.0

    @property
    def overall(self) -> float:
        total = self.cases_correct + self.cases_wrong
        return (self.hits_correct + self.hits_wrong) / total if total else 0.0

    def percentages(self) -> tuple[str, str, str]:
        return (
            format_percent(self.hits_correct, self.cases_correct),
            format_percent(self.hits_wrong, self.cases_wrong),
            format_percent(
                self.hits_correct + self.hits_wrong,
                self.cases_correct + self.cases_wrong,
            ),
        )


@dataclass(frozen=True)
class EvaluationMatrix:
    """Reports keyed by (class_name, kind); shape of the result tables."""

    reports: dict
    classes: tuple[str, ...]
    kinds: tuple[str, ...]
    class_sizes: dict

    @property
    def protocol(self) -> str:
        tags = {r.protocol for r in self.reports.values()}
        return tags.pop() if len(tags) == 1 else "mixed"

    def report(self, class_name: str, kind: str) -> ClassReport:
        return self.reports[(class_name, kind)]

    def mean_overall(self, kind: str) -> float:
        vals = [self.reports[(c, kind)].overall for c in self.classes]
        return float(np.mean(vals))

    def mean_acc_correct(self, kind: str) -> float:
        vals = [self.reports[(c, kind)].acc_correct for c in self.classes]
        return float(np.mean(vals))


def confusion(
    model: TrainedModel,
    X: np.ndarray,
    y: np.ndarray,
    class_name: str = "",
    protocol: str = "holdout",
) -> ClassReport:
    """Count both-side hits of a trained model on a labeled set."""
    y = np.asarray(y)
    if y.size == 0:
        raise EmptyEvaluationSet("evaluation set is empty")
    pred = model.predict(X)
    correct_mask = y == 1
    return ClassReport(
        class_name=class_name,
        kind=model.kind,
        protocol=protocol,
        cases_correct=int(correct_mask.sum()),
        cases_wrong=int((~correct_mask).sum()),
        hits_correct=int((pred[correct_mask] == 1).sum()),
        hits_wrong=int((pred[~correct_mask] == 0).sum()),
    )


def report_from_counts(
    class_name: str,
    kind: str,
    protocol: str,
    cases_correct: int,
    hits_correct: int,
    cases_wrong: int,
    hits_wrong: int,
) -> ClassReport:
    """Build a report from already-tallied counts (no model run)."""
    return ClassReport(
        class_name, kind, protocol, cases_correct, cases_wrong, hits_correct, hits_wrong
    )


def _features_for(
    dataset: CleanDataset, train_idx: np.ndarray, scaling_mode: str
) -> np.ndarray:
    if scaling_mode == "all":
        return dataset.features
    if scaling_mode == "train":
        params = fit_scaling([dataset.records[i] for i in train_idx])
        return apply_scaling_many(dataset.records, params)
    raise EvaluationError(f"unknown scaling_mode {scaling_mode!r}")


def evaluate_holdout(
    spec: ClassifierSpec,
    dataset: CleanDataset,
    seed: int = 0,
    ratios=(0.50, 0.25, 0.25),
    scaling_mode: str = "train",
    classes: tuple[str, ...] | None = None,
) -> list[ClassReport]:
    """Train/test/validation protocol for the non-tree kinds.

    One seeded split is shared by every class (and, given the same seed,
    by every kind); the report is the confusion on the validation part.
    """
    if spec.kind not in HOLDOUT_KINDS:
        raise EvaluationError(
            f"{spec.kind} is evaluated by k-fold cross-validation, not holdout"
        )
    tr, te, va = split_indices(len(dataset), ratios, seed)
    X = _features_for(dataset, tr, scaling_mode)
    labels = np.asarray(dataset.labels)
    out = []
    for class_name in classes or dataset.class_names:
        y = (labels == class_name).astype(np.int64)
        model_seed = derive_seed(seed, class_name, spec.kind)
        model = train(
            ClassifierSpec(spec.kind, spec.params, model_seed),
            X[tr],
            y[tr],
            X[va],
            y[va],
        )
        out.append(
            confusion(model, X[va], y[va], class_name=class_name, protocol="holdout")
        )
    return out


def kfold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Seeded balanced folds; sizes differ by at most one."""
    if k < 2:
        raise BadFoldCount("k must be >= 2")
    if n < k:
        raise BadFoldCount(f"cannot make {k} folds from {n} records")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def evaluate_kfold(
    spec: ClassifierSpec,
    dataset: CleanDataset,
    k: int = 10,
    seed: int = 0,
    scaling_mode: str = "train",
    classes: tuple[str, ...] | None = None,
) -> list[ClassReport]:
    """Pooled k-fold protocol (the tree's); counts accumulate over all
    held-out folds, so report bases equal the full dataset size."""
    if spec.kind != "cart":
        raise EvaluationError(f"k-fold protocol is the cart protocol, got {spec.kind}")
    folds = kfold_indices(len(dataset), k, seed)
    labels = np.asarray(dataset.labels)
    class_list = classes or dataset.class_names
    tallies = {c: [0, 0, 0, 0] for c in class_list}  # cc, hc, cw, hw
    for fold_no, heldout in enumerate(folds):
        mask = np.ones(len(dataset), dtype=bool)
        mask[heldout] = False
        train_idx = np.flatnonzero(mask)
        X = _features_for(dataset, train_idx, scaling_mode)
        for class_name in class_list:
            y = (labels == class_name).astype(np.int64)
            model_seed = derive_seed(seed, class_name, spec.kind, fold_no)
            model = train(
                ClassifierSpec(spec.kind, spec.params, model_seed),
                X[train_idx],
                y[train_idx],
            )
            pred = model.predict(X[heldout])
            truth = y[heldout]
            t = tallies[class_name]
            t[0] += int((truth == 1).sum())
            t[1] += int((pred[truth == 1] == 1).sum())
            t[2] += int((truth == 0).sum())
            t[3] += int((pred[truth == 0] == 0).sum())
    return [
        ClassReport(c, "cart", "kfold", t[0], t[2], t[1], t[3])
        for c, t in ((c, tallies[c]) for c in class_list)
    ]


def run_matrix(
    specs: list[ClassifierSpec],
    dataset: CleanDataset,
    seed: int = 0,
    k: int = 10,
    scaling_mode: str = "train",
) -> EvaluationMatrix:
    """Evaluate every spec under its protocol; one matrix cell per
    (class, kind)."""
    reports = {}
    kinds = []
    for spec in specs:
        if spec.kind in kinds:
            raise EvaluationError(f"duplicate kind {spec.kind}")
        kinds.append(spec.kind)
        if spec.kind == "cart":
            rows = evaluate_kfold(spec, dataset, k=k, seed=seed, scaling_mode=scaling_mode)
        else:
            rows = evaluate_holdout(spec, dataset, seed=seed, scaling_mode=scaling_mode)
        for r in rows:
            reports[(r.class_name, r.kind)] = r
    classes = dataset.class_names
    sizes = {c: dataset.class_census[c] for c in classes}
    return EvaluationMatrix(
        reports=reports, classes=classes, kinds=tuple(kinds), class_sizes=sizes
    )


def rank_models(matrix: EvaluationMatrix) -> list[str]:
    """Kinds ordered by mean overall accuracy (desc), ties by mean
    correct-side accuracy, then stable input order."""
    for c in matrix.classes:
        for kind in matrix.kinds:
            if (c, kind) not in matrix.reports:
                raise IncompleteMatrix(f"missing report for ({c}, {kind})")
    order = list(matrix.kinds)
    return sorted(
        order,
        key=lambda kind: (
            -matrix.mean_overall(kind),
            -matrix.mean_acc_correct(kind),
            order.index(kind),
        ),
    )


def _ordered_kinds(matrix: EvaluationMatrix) -> list[str]:
    known = [k for k in KIND_COLUMN_ORDER if k in matrix.kinds]
    extra = [k for k in matrix.kinds if k not in known]
    return known + extra


def matrix_to_csv(matrix: EvaluationMatrix) -> str:
    """Machine-readable grid: one row per (class, kind) with raw counts
    and half-up 2-decimal percentages."""
    lines = [
        "class,kind,protocol,cases_correct,cases_wrong,hits_correct,hits_wrong,"
        "acc_correct_pct,acc_wrong_pct,overall_pct"
    ]
    for c in matrix.classes:
        for kind in _ordered_kinds(matrix):
            r = matrix.reports[(c, kind)]
            pc, pw, po = r.percentages()
            lines.append(
                f"{c},{kind},{r.protocol},{r.cases_correct},{r.cases_wrong},"
                f"{r.hits_correct},{r.hits_wrong},{pc},{pw},{po}"
            )
    return "\n".join(lines) + "\n"


def matrix_to_text(matrix: EvaluationMatrix, title: str = "Classification Accuracy") -> str:
    """Aligned table in the published layout: per class, a Correct row
    (with the class size), a Wrong row (the rest) and an Overall row,
    one column per model kind. Case # shows full-dataset class sizes;
    per-protocol bases live in the CSV."""
    kinds = _ordered_kinds(matrix)
    header = ["Class", "", "Case #"] + [f"{KIND_DISPLAY[k]} %" for k in kinds]
    rows = [header]
    total = sum(matrix.class_sizes.values())
    for c in matrix.classes:
        size = matrix.class_sizes[c]
        cells_c, cells_w, cells_o = [], [], []
        for kind in kinds:
            pc, pw, po = matrix.reports[(c, kind)].percentages()
            cells_c.append(pc)
            cells_w.append(pw)
            cells_o.append(po)
        rows.append([CATEGORY_DISPLAY.get(c, c), "Correct", str(size)] + cells_c)
        rows.append(["", "Wrong", str(total - size)] + cells_w)
        rows.append(["", "Overall", ""] + cells_o)
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    out = [title]
    for row in rows:
        out.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(out) + "\n"
