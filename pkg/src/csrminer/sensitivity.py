"""Input importance by removal-and-retraining.

For one (class, model kind) cell: fix the evaluation partition once from
the seed, then for each input attribute retrain the model with that
attribute's column removed and count the misclassifications on the
evaluation partition (summed over folds for the tree, measured on the
validation part for everything else). The higher the accumulated error,
the more the removed attribute mattered; attributes are ranked 1..A by
descending error, ties resolved toward the lower attribute index. The
split never changes between the A retrainings and the training seed is
shared, so error differences are attributable to the removal alone.

The hybrid kind ranks nine inputs: the eight data attributes plus the
tree-leaf input (reported in the Note position of the grid). Removing a
data attribute rebuilds both the tree and the network on the reduced
columns; removing the leaf input trains the bare network on the eight
data attributes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from csrminer.dataset import ATTRIBUTES, ATTRIBUTE_DISPLAY, CleanDataset, split_indices
from csrminer.evaluation import _features_for, kfold_indices
from csrminer.models import ClassifierSpec, derive_seed, train
from csrminer.models.base import KIND_DISPLAY
from csrminer.scoring import CATEGORY_DISPLAY

LEAF_ATTRIBUTE = "leaf"


@dataclass(frozen=True)
class SensitivityRanking:
    """Ranks (1 = most important) and accumulated errors per attribute."""

    class_name: str
    kind: str
    rank: dict
    accumulated_error: dict
    failures: dict = field(default_factory=dict)

    def ordered(self) -> list[str]:
        return sorted(self.rank, key=lambda a: self.rank[a])


def _attributes_for(kind: str, names: tuple[str, ...]) -> tuple[str, ...]:
    return names + (LEAF_ATTRIBUTE,) if kind == "hybrid" else names


def _train_without(
    spec: ClassifierSpec,
    drop: str,
    names: tuple[str, ...],
    X_tr: np.ndarray,
    y_tr: np.ndarray,
    X_ev: np.ndarray,
    y_ev: np.ndarray,
    seed: int,
):
    """Train spec's kind with one input removed; returns (model, X_eval)."""
    if drop == LEAF_ATTRIBUTE:
        # hybrid minus its tree input = the bare network
        net_spec = ClassifierSpec("mlp-bp", spec.params.get("mlp", {}), seed)
        model = train(net_spec, X_tr, y_tr, X_ev, y_ev)
        return model, X_ev
    keep = [i for i, a in enumerate(names) if a != drop]
    sub = ClassifierSpec(spec.kind, spec.params, seed)
    model = train(sub, X_tr[:, keep], y_tr, X_ev[:, keep], y_ev)
    return model, X_ev[:, keep]


def rank_inputs(
    spec: ClassifierSpec,
    dataset: CleanDataset,
    class_name: str,
    seed: int = 0,
    protocol: str | None = None,
    k: int = 10,
    ratios=(0.50, 0.25, 0.25),
    scaling_mode: str = "train",
    attribute_names: tuple[str, ...] = ATTRIBUTES,
) -> SensitivityRanking:
    """One Table-5/6 row: rank every input by accumulated removal error.

    protocol defaults to the kind's evaluation protocol (k-fold for the
    tree, holdout for the rest). Per-attribute training failures are
    recorded in .failures without aborting the other attributes.
    """
    if protocol is None:
        protocol = "kfold" if spec.kind == "cart" else "holdout"
    labels = np.asarray(dataset.labels)
    y = (labels == class_name).astype(np.int64)

    # (features, train rows, eval rows) per retraining round
    plan = []
    if protocol == "holdout":
        tr, _te, va = split_indices(len(dataset), ratios, seed)
        X = _features_for(dataset, tr, scaling_mode)
        plan.append((X, tr, va, derive_seed(seed, class_name, spec.kind)))
    else:
        for fold_no, heldout in enumerate(kfold_indices(len(dataset), k, seed)):
            mask = np.ones(len(dataset), dtype=bool)
            mask[heldout] = False
            tr = np.flatnonzero(mask)
            X = _features_for(dataset, tr, scaling_mode)
            plan.append((X, tr, heldout, derive_seed(seed, class_name, spec.kind, fold_no)))

    attrs = _attributes_for(spec.kind, attribute_names)
    errors: dict = {}
    failures: dict = {}
    for drop in attrs:
        total = 0
        try:
            for X, tr, ev, train_seed in plan:
                model, X_eval = _train_without(
                    spec, drop, attribute_names, X[tr], y[tr], X[ev], y[ev], train_seed
                )
                total += int((model.predict(X_eval) != y[ev]).sum())
            errors[drop] = total
        except Exception as exc:  # report per cell, keep ranking the rest
            failures[drop] = f"{type(exc).__name__}: {exc}"

    order = sorted(errors, key=lambda a: (-errors[a], attrs.index(a)))
    rank = {a: i + 1 for i, a in enumerate(order)}
    return SensitivityRanking(
        class_name=class_name,
        kind=spec.kind,
        rank=rank,
        accumulated_error=errors,
        failures=failures,
    )


def sensitivity_grid(
    specs: list[ClassifierSpec],
    dataset: CleanDataset,
    classes: tuple[str, ...] | None = None,
    seed: int = 0,
    protocol_overrides: dict | None = None,
    k: int = 10,
    scaling_mode: str = "train",
) -> dict:
    """One ranking per (class, spec kind)."""
    if classes is None:
        classes = dataset.class_names
    grid = {}
    for class_name in classes:
        for spec in specs:
            protocol = (protocol_overrides or {}).get(spec.kind)
            grid[(class_name, spec.kind)] = rank_inputs(
                spec,
                dataset,
                class_name,
                seed=seed,
                protocol=protocol,
                k=k,
                scaling_mode=scaling_mode,
            )
    return grid


def _grid_rows(grid: dict):
    return sorted(grid.items(), key=lambda kv: (kv[0][0], kv[0][1]))


def grid_to_csv(grid: dict) -> str:
    """Ranks in the published column order; Note carries the hybrid's
    leaf-input rank."""
    lines = ["class,kind," + ",".join(ATTRIBUTES) + ",note"]
    for (class_name, kind), ranking in _grid_rows(grid):
        cells = [str(ranking.rank.get(a, "")) for a in ATTRIBUTES]
        note = str(ranking.rank.get(LEAF_ATTRIBUTE, ""))
        lines.append(f"{class_name},{kind}," + ",".join(cells) + f",{note}")
    return "\n".join(lines) + "\n"


def grid_to_text(grid: dict, title: str = "Ranking of the Inputs (importance)") -> str:
    header = ["Class", "Algorithm"] + [ATTRIBUTE_DISPLAY[a] for a in ATTRIBUTES] + ["Note"]
    rows = [header]
    last_class = None
    for (class_name, kind), ranking in _grid_rows(grid):
        shown = CATEGORY_DISPLAY.get(class_name, class_name)
        first = shown if class_name != last_class else ""
        last_class = class_name
        cells = [str(ranking.rank.get(a, "-")) for a in ATTRIBUTES]
        note = str(ranking.rank.get(LEAF_ATTRIBUTE, ""))
        rows.append([first, KIND_DISPLAY.get(kind, kind)] + cells + [note])
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    out = [title]
    for r in rows:
        out.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    summary = mean_rank_summary(grid)
    if summary:
        out.append("")
        out.append("Mean rank per attribute (extension; not part of the source tables):")
        out.append(
            "  ".join(f"{ATTRIBUTE_DISPLAY[a]}={summary[a]:.2f}" for a in ATTRIBUTES)
        )
    return "\n".join(out) + "\n"


def mean_rank_summary(grid: dict) -> dict:
    """Mean rank of each data attribute across all grid rows (extension;
    the source tables never aggregate across algorithms)."""
    if not grid:
        return {}
    return {
        a: float(np.mean([r.rank[a] for r in grid.values() if a in r.rank]))
        for a in ATTRIBUTES
    }
