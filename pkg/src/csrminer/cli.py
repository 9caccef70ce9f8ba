"""Command-line pipeline: synth, score, clean, train, evaluate,
sensitivity, run.

Flags override the config file (--config, or the CSRMINER_CONFIG
environment variable), which overrides the documented defaults. Exit
codes are stable for scripting: 0 success, 1 usage/config error, 2 input
data error, 3 internal error. Input files are never modified; every
artifact lands under --out. A run writes a manifest.json that can be
passed back as --config to reproduce the run byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import csrminer
from csrminer import dataset as ds_mod
from csrminer import evaluation as eval_mod
from csrminer import sensitivity as sens_mod
from csrminer import synth as synth_mod
from csrminer.config import (
    ConfigError,
    build_manifest,
    canonical_json,
    config_hash,
    load_config,
    specs_from_config,
    target_kind,
)
from csrminer.dataset import DatasetError
from csrminer.models import derive_seed, save_model, train
from csrminer.models.base import ModelError
from csrminer.scoring import (
    CallEvaluation,
    EvaluationKind,
    ScoringError,
    categorize,
    format_score,
    monthly_score,
)
from csrminer.synth import SynthError

log = logging.getLogger("csrminer")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


class UsageError(Exception):
    pass


def _add_common(p: argparse.ArgumentParser, models_flag: bool = True):
    p.add_argument("--config", help="JSON config file (or a run manifest)")
    p.add_argument("--seed", type=int, help="master seed override")
    p.add_argument("--out", help="output directory")
    p.add_argument(
        "--target",
        choices=[k.value for k in EvaluationKind],
        help="quality attribute to predict",
    )
    if models_flag:
        p.add_argument("--models", help="comma-separated model kinds")


def build_parser() -> _Parser:
    parser = _Parser(prog="csrminer", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic dataset")
    _add_common(p, models_flag=False)
    p.add_argument("--paper-defaults", action="store_true", help="published census")
    p.add_argument("--n", type=int, help="record count (custom census)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("score", help="score per-call question grades")
    _add_common(p, models_flag=False)
    p.add_argument("--input", required=True, help="calls CSV")
    p.add_argument("--split-met", action="store_true", help="split met at 3.5")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("clean", help="apply the cleaning rules to a CSV")
    _add_common(p, models_flag=False)
    p.add_argument("--input", required=True)
    p.add_argument("--min-class-size", type=int)
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("train", help="train and save models")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="per-class accuracy matrix")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sensitivity", help="input-removal importance grid")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--classes", help="comma-separated class keys (default: all)")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("run", help="full pipeline with manifest")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_run)

    return parser


def _config_from_args(args) -> dict:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "target", None) is not None:
        overrides["target"] = args.target
        overrides["split_met"] = None  # re-resolve for the new target
    if getattr(args, "models", None):
        overrides["models"] = args.models
    if getattr(args, "min_class_size", None) is not None:
        overrides["min_class_size"] = args.min_class_size
    return load_config(getattr(args, "config", None), overrides)


def _out_dir(args) -> Path:
    if not args.out:
        raise UsageError("--out is required")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str):
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)


def _load_dataset(cfg: dict, input_path: str):
    records = ds_mod.load_csv(input_path)
    dataset, rejections = ds_mod.build_dataset(
        records,
        target_kind(cfg),
        split_met=cfg["split_met"],
        min_class_size=cfg["min_class_size"],
    )
    return dataset, rejections


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(args)
    kind = target_kind(cfg)
    if cfg["synth"] and not args.paper_defaults:
        doc = dict(cfg["synth"])
        doc.setdefault("target_kind", kind.value)
        doc.setdefault("seed", cfg["seed"])
        if args.n is not None:
            doc["n_records"] = args.n
        try:
            gen_cfg = synth_mod.GeneratorConfig.from_dict(doc)
        except (TypeError, KeyError) as exc:
            raise UsageError(f"bad synth config: {exc}") from None
    else:
        # published census, optionally rescaled to --n records
        gen_cfg = synth_mod.paper_default_config(kind, seed=cfg["seed"])
        if args.n is not None:
            import dataclasses

            gen_cfg = dataclasses.replace(gen_cfg, n_records=args.n)
    records, truth = synth_mod.generate(gen_cfg)
    ds_mod.write_csv(records, out / "records.csv")
    synth_mod.write_ground_truth(truth, out / "ground_truth.txt")
    _write(out / "synth_config.json", canonical_json(gen_cfg.to_dict()) + "\n")
    print(f"generated {len(records)} records -> {out / 'records.csv'}")
    return EXIT_OK


def _parse_call_rows(path: Path):
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["agent_id", "month", "kind", "product_id", "scores"]
        if header is None or [h.strip() for h in header] != expected:
            raise DatasetError(
                f"calls CSV header must be {','.join(expected)}, got {header}"
            )
        for rownum, row in enumerate(reader, start=1):
            if not row:
                continue
            yield rownum, row


def cmd_score(args) -> int:
    out = _out_dir(args)
    groups: dict = {}
    skipped = []
    for rownum, row in _parse_call_rows(Path(args.input)):
        try:
            agent, month, kind_text, product, scores_text = row
            kind = EvaluationKind(kind_text.strip())
            scores = tuple(int(s) for s in scores_text.split())
            call = CallEvaluation(kind=kind, question_scores=scores, product_id=int(product))
        except (ValueError, ScoringError) as exc:
            skipped.append((rownum, f"{type(exc).__name__}: {exc}"))
            continue
        groups.setdefault((agent.strip(), month.strip(), kind), []).append(call)

    lines = ["agent_id,month,kind,calls,applicable_count,score,category,met_sub"]
    import warnings as _warnings

    for (agent, month, kind), calls in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2].value)):
        try:
            with _warnings.catch_warnings():
                _warnings.simplefilter("ignore")
                ms = monthly_score(calls)
        except ScoringError as exc:
            skipped.append((f"{agent}/{month}/{kind.value}", f"{type(exc).__name__}: {exc}"))
            continue
        cat = categorize(ms.value, split_met=args.split_met)
        sub = cat.key if cat.met_sub is not None else ""
        lines.append(
            f"{agent},{month},{kind.value},{len(calls)},{ms.applicable_count},"
            f"{format_score(ms.value)},{cat.label.name.lower()},{sub}"
        )
    _write(out / "scored.csv", "\n".join(lines) + "\n")
    if skipped:
        _write(
            out / "score_skipped.csv",
            "row,reason\n" + "\n".join(f"{r},{reason}" for r, reason in skipped) + "\n",
        )
        log.warning("%d rows/groups skipped; see score_skipped.csv", len(skipped))
    print(f"scored {len(lines) - 1} agent-months -> {out / 'scored.csv'}")
    return EXIT_OK


def cmd_clean(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(args)
    records = ds_mod.load_csv(args.input)
    retained, rejections = ds_mod.clean(
        records,
        target_kind(cfg),
        split_met=cfg["split_met"],
        min_class_size=cfg["min_class_size"],
    )
    ds_mod.write_csv(retained, out / "retained.csv")
    ds_mod.write_rejection_log(rejections, out / "rejections.csv")
    print(f"retained {len(retained)} of {len(records)} records")
    return EXIT_OK


def _train_models(cfg: dict, dataset):
    """Final per-(class, kind) models on the train partition; returns
    (models keyed by (class, kind), the scaling they expect)."""
    from csrminer.dataset import apply_scaling_many, fit_scaling, split_indices
    import numpy as np

    tr, _te, va = split_indices(len(dataset), tuple(cfg["ratios"]), cfg["seed"])
    if cfg["scaling_mode"] == "all":
        scaling = dataset.scaling
    else:
        scaling = fit_scaling([dataset.records[i] for i in tr])
    X = apply_scaling_many(dataset.records, scaling)
    labels = np.asarray(dataset.labels)
    models = {}
    for spec in specs_from_config(cfg):
        for class_name in dataset.class_names:
            y = (labels == class_name).astype(np.int64)
            seed = derive_seed(cfg["seed"], class_name, spec.kind)
            spec_seeded = type(spec)(spec.kind, spec.params, seed)
            models[(class_name, spec.kind)] = train(
                spec_seeded, X[tr], y[tr], X[va], y[va]
            )
    return models, scaling


def _save_models(models, scaling, out: Path):
    model_dir = out / "models"
    model_dir.mkdir(exist_ok=True)
    fingerprint = scaling.fingerprint()
    _write(out / "scaling.json", canonical_json(scaling.to_dict()) + "\n")
    for (class_name, kind), model in sorted(models.items()):
        save_model(model, model_dir / f"{class_name}__{kind}.json", fingerprint)


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(args)
    dataset, rejections = _load_dataset(cfg, args.input)
    ds_mod.write_rejection_log(rejections, out / "rejections.csv")
    models, scaling = _train_models(cfg, dataset)
    _save_models(models, scaling, out)
    print(f"trained {len(models)} models -> {out / 'models'}")
    return EXIT_OK


def _evaluation_matrix(cfg: dict, dataset):
    return eval_mod.run_matrix(
        specs_from_config(cfg),
        dataset,
        seed=cfg["seed"],
        k=cfg["kfold"],
        scaling_mode=cfg["scaling_mode"],
    )


def _matrix_files(matrix, out: Path, cfg: dict):
    _write(out / "matrix.csv", eval_mod.matrix_to_csv(matrix))
    title = (
        "Classification Accuracy of "
        + ("Customer Service" if cfg["target"] == "customer-service" else "Business Need")
        + " Prediction"
    )
    ranking = eval_mod.rank_models(matrix)
    text = eval_mod.matrix_to_text(matrix, title=title)
    text += "\nRanking by mean overall accuracy: " + ", ".join(
        eval_mod.KIND_DISPLAY[k] for k in ranking
    ) + "\n"
    _write(out / "matrix.txt", text)


def cmd_evaluate(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(args)
    dataset, _ = _load_dataset(cfg, args.input)
    matrix = _evaluation_matrix(cfg, dataset)
    _matrix_files(matrix, out, cfg)
    print(f"evaluation matrix -> {out / 'matrix.txt'}")
    return EXIT_OK


def _sensitivity_files(cfg: dict, dataset, out: Path, classes=None):
    specs = specs_from_config(cfg, cfg["sensitivity"]["models"])
    grid = sens_mod.sensitivity_grid(
        specs,
        dataset,
        classes=classes,
        seed=cfg["seed"],
        k=cfg["kfold"],
        scaling_mode=cfg["scaling_mode"],
    )
    _write(out / "sensitivity.csv", sens_mod.grid_to_csv(grid))
    _write(out / "sensitivity.txt", sens_mod.grid_to_text(grid))


def cmd_sensitivity(args) -> int:
    cfg = _config_from_args(args)
    if getattr(args, "models", None):
        cfg["sensitivity"]["models"] = cfg["models"]
    out = _out_dir(args)
    dataset, _ = _load_dataset(cfg, args.input)
    classes = None
    if args.classes:
        classes = tuple(c for c in args.classes.replace(",", " ").split() if c)
    _sensitivity_files(cfg, dataset, out, classes)
    print(f"sensitivity grid -> {out / 'sensitivity.txt'}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(args)
    dataset, rejections = _load_dataset(cfg, args.input)
    ds_mod.write_rejection_log(rejections, out / "rejections.csv")

    matrix = _evaluation_matrix(cfg, dataset)
    _matrix_files(matrix, out, cfg)

    if cfg["sensitivity"]["enabled"]:
        _sensitivity_files(cfg, dataset, out)

    models, scaling = _train_models(cfg, dataset)
    _save_models(models, scaling, out)

    manifest = build_manifest(cfg, args.input, csrminer.__version__)
    _write(out / "manifest.json", canonical_json(manifest) + "\n")
    print(f"run complete -> {out} (config hash {config_hash(cfg)[:12]})")
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, SynthError, ModelError, ds_mod.BadRatios) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, ScoringError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - safety net
        log.exception("internal error")
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
