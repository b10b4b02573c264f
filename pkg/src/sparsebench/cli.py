"""Config-driven experiment runner plus small maintenance subcommands.

`run` executes the full pipeline for one JSON experiment config: every
(modality, classifier) cell goes through the repeated-holdout protocol,
and the results land in a fixed artifact layout under the output
directory:

    results.csv          one summary row per cell (schema comment first)
    results_detail.json  per-repetition metrics and chosen penalties
    top_features.csv     ranked features for every L1 cell
    cv_tables/*.csv      penalty-vs-CV-accuracy, one file per L1 cell
    curves/*.csv + .dat  accuracy-vs-k curves where the config asks
    group_stats.csv      per-feature label-group tests on the full data
    manifest.json        config echo, seeds, versions, warnings

Everything an artifact depends on (config, seeds, library versions) is
recorded in manifest.json, and nothing in the outputs depends on wall
time or worker scheduling, so a rerun of the same config is byte
identical. Exit codes: 0 success, 2 malformed config, 3 data problems.

The remaining subcommands are thin wrappers: `fit` trains and serializes
one model, `predict` scores a CSV through a saved model, `synth` writes
a generated dataset plus its ground-truth JSON, and `validate` dry-runs
a config and reports the resolved modality sizes.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import json
import logging
import os
import platform
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import dataset as ds
from . import evaluation, features, solvers, synthgen
from .dataset import DataError, Dataset, ModalitySpec
from .evaluation import CVPlan, SplitPlan
from .objectives import ObjectiveSpec

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "run_experiment", "main"]

log = logging.getLogger("sparsebench")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

RESULTS_SCHEMA = "sparsebench-results-v1"
MANIFEST_SCHEMA = "sparsebench-manifest-v1"
_CHI_MAX_DISTINCT = 10

_CONFIG_KEYS = {
    "dataset", "label_column", "id_column", "modalities", "classifiers",
    "split", "cv", "solver", "output_dir", "group_label", "top_features",
    "curves",
}
_SOLVER_KEYS = {
    "max_iterations", "tolerance", "step_initial", "step_shrink",
    "sufficient_decrease", "kkt_tolerance", "hinge_smoothing",
}


class ConfigError(Exception):
    """Malformed or inconsistent experiment config (exit code 2)."""


@dataclass(frozen=True)
class CurveRequest:
    modality: str
    classifier: int  # 1 or 3; the ranking comes from classifier+1
    k_max: int


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_path: Path
    label_column: str
    id_column: str
    modalities: tuple[ModalitySpec, ...]
    classifiers: tuple[int, ...]
    split: SplitPlan
    cv: CVPlan
    solver: solvers.SolverConfig
    output_dir: Path
    group_label: str
    top_features: int
    curves: tuple[CurveRequest, ...]
    echo: dict


def _expect(mapping, key, types, where, default=None, required=False):
    if key not in mapping:
        if required:
            raise ConfigError(f"field {where!r}: missing")
        return default
    value = mapping[key]
    if not isinstance(value, types):
        raise ConfigError(f"field {where!r}: expected {types}, got {type(value).__name__}")
    return value


def load_config(
    path,
    *,
    seed_override: int | None = None,
    output_override: str | None = None,
) -> ExperimentConfig:
    """Parse and fully resolve a JSON experiment config.

    Relative paths (dataset, feature-list files, output_dir) resolve
    against the config file's directory so bundles stay relocatable.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")

    base = path.parent

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    dataset_path = resolve(_expect(raw, "dataset", str, "dataset", required=True))
    if not dataset_path.is_file():
        raise ConfigError(f"field 'dataset': no such file {dataset_path}")
    label_column = _expect(raw, "label_column", str, "label_column", default="label")
    id_column = _expect(raw, "id_column", str, "id_column", default="id")

    mods_raw = _expect(raw, "modalities", dict, "modalities", required=True)
    if not mods_raw:
        raise ConfigError("field 'modalities': at least one modality required")
    modalities = []
    for name, entry in mods_raw.items():
        where = f"modalities.{name}"
        if isinstance(entry, list):
            names = entry
        elif isinstance(entry, dict) and set(entry) == {"file"}:
            list_path = resolve(entry["file"])
            if not list_path.is_file():
                raise ConfigError(f"field {where!r}: no such file {list_path}")
            names = list(ds.load_feature_list(list_path))
        else:
            raise ConfigError(f"field {where!r}: expected a feature list or {{\"file\": path}}")
        if not all(isinstance(n, str) for n in names):
            raise ConfigError(f"field {where!r}: feature names must be strings")
        try:
            modalities.append(ModalitySpec(name, tuple(names)))
        except DataError as exc:
            raise ConfigError(f"field {where!r}: {exc}") from exc

    classifiers = _expect(raw, "classifiers", list, "classifiers", default=[1, 2, 3, 4])
    if not classifiers or len(set(classifiers)) != len(classifiers):
        raise ConfigError("field 'classifiers': non-empty list without duplicates required")
    for c in classifiers:
        if c not in evaluation.CLASSIFIER_KINDS:
            raise ConfigError(f"field 'classifiers': unknown classifier {c!r}")

    try:
        split = SplitPlan(**_expect(raw, "split", dict, "split", default={}))
        cv_kwargs = dict(_expect(raw, "cv", dict, "cv", default={}))
        if "lambda_grid" in cv_kwargs:
            cv_kwargs["lambda_grid"] = tuple(cv_kwargs["lambda_grid"])
        cv = CVPlan(**cv_kwargs)
        solver_kwargs = _expect(raw, "solver", dict, "solver", default={})
        bad = set(solver_kwargs) - _SOLVER_KEYS
        if bad:
            raise ConfigError(f"field 'solver': unknown key(s) {', '.join(sorted(bad))}")
        solver = solvers.SolverConfig(**solver_kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field 'split'/'cv'/'solver': {exc}") from exc
    if seed_override is not None:
        split = dataclasses.replace(split, seed=seed_override)
        cv = dataclasses.replace(cv, seed=seed_override)

    output_dir = resolve(output_override or _expect(raw, "output_dir", str, "output_dir", default="results"))
    group_label = _expect(raw, "group_label", str, "group_label", default="")
    top_features = _expect(raw, "top_features", int, "top_features", default=10)
    if top_features < 1:
        raise ConfigError("field 'top_features': must be >= 1")

    curves = []
    if "curves" in raw:
        creq = _expect(raw, "curves", dict, "curves", required=True)
        bad = set(creq) - {"modalities", "classifiers", "k_max"}
        if bad:
            raise ConfigError(f"field 'curves': unknown key(s) {', '.join(sorted(bad))}")
        curve_mods = creq.get("modalities", [m.name for m in modalities])
        curve_clfs = creq.get("classifiers", [1, 3])
        k_max = creq.get("k_max")
        by_name = {m.name: m for m in modalities}
        for mname in curve_mods:
            if mname not in by_name:
                raise ConfigError(f"field 'curves.modalities': unknown modality {mname!r}")
            for clf in curve_clfs:
                if clf not in (1, 3):
                    raise ConfigError("field 'curves.classifiers': curves refit classifiers 1 or 3")
                if clf not in classifiers or clf + 1 not in classifiers:
                    raise ConfigError(
                        f"field 'curves': classifier {clf} needs both {clf} and {clf + 1} "
                        "in 'classifiers' (the ranking comes from the L1 twin)"
                    )
                n_feat = len(by_name[mname].feature_names)
                k = min(k_max, n_feat) if k_max is not None else min(10, n_feat)
                if k < 1:
                    raise ConfigError("field 'curves.k_max': must be >= 1")
                curves.append(CurveRequest(mname, clf, k))

    echo = {
        "config_file": str(path),
        "raw": raw,
        "overrides": {"seed": seed_override, "output_dir": output_override},
        "resolved": {
            "dataset": str(dataset_path),
            "output_dir": str(output_dir),
            "modalities": {m.name: list(m.feature_names) for m in modalities},
            "classifiers": list(classifiers),
            "split": dataclasses.asdict(split),
            "cv": dataclasses.asdict(cv),
            "solver": {k: getattr(solver, k) for k in sorted(_SOLVER_KEYS)},
            "top_features": top_features,
            "curves": [dataclasses.asdict(c) for c in curves],
        },
    }
    return ExperimentConfig(
        dataset_path=dataset_path,
        label_column=label_column,
        id_column=id_column,
        modalities=tuple(modalities),
        classifiers=tuple(int(c) for c in classifiers),
        split=split,
        cv=cv,
        solver=solver,
        output_dir=output_dir,
        group_label=group_label,
        top_features=top_features,
        curves=tuple(curves),
        echo=echo,
    )


# ------------------------------------------------------------------ workers
# module-level so process pools can pickle them; every task is pure and
# the caller keys results by task id, making execution order irrelevant


def _cell_worker(task):
    d, spec, classifier, split, cv, cfg = task
    report = evaluation.run_protocol(
        d, spec, classifier, split, cv, cfg, keep_models=classifier in (2, 4)
    )
    return report


def _curve_worker(task):
    d, ranking, classifier, split, cfg, k_max = task
    return features.accuracy_vs_k(d, ranking, classifier, split, cfg, k_max)


def _run_tasks(worker, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [worker(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, tasks))


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


def _write_lines(path: Path, lines) -> None:
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> int:
    d = ds.load_csv(cfg.dataset_path, cfg.label_column, cfg.id_column)
    log.info("dataset: %d samples x %d features", d.n_samples, d.n_features)
    for spec in cfg.modalities:  # resolve early; unknown columns are config bugs
        try:
            ds.assemble_modality(d, spec)
        except DataError as exc:
            raise ConfigError(f"modality {spec.name!r}: {exc}") from exc

    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "cv_tables").mkdir(exist_ok=True)
    if cfg.curves:
        (out / "curves").mkdir(exist_ok=True)
    artifacts = ["manifest.json", "results.csv", "results_detail.json", "group_stats.csv"]

    cells = [(spec, clf) for spec in cfg.modalities for clf in cfg.classifiers]
    tasks = [(d, spec, clf, cfg.split, cfg.cv, cfg.solver) for spec, clf in cells]
    log.info("running %d cells on %d worker(s)", len(tasks), jobs)
    reports = dict(zip(((s.name, c) for s, c in cells), _run_tasks(_cell_worker, tasks, jobs)))
    for (mname, clf), report in reports.items():
        log.info(
            "cell %s/clf%d: accuracy %.3f +- %.3f, mean nonzero %.1f",
            mname, clf, report.acc_mean, report.acc_sd, report.mean_nonzero,
        )

    # results.csv + sidecar, rows in config order
    rows = [f"# schema={RESULTS_SCHEMA}", evaluation.EvalReport.CSV_HEADER]
    rows.extend(reports[key].csv_row() for key in ((s.name, c) for s, c in cells))
    _write_lines(out / "results.csv", rows)
    detail = {
        "schema": RESULTS_SCHEMA,
        "cells": [reports[(s.name, c)].sidecar() for s, c in cells],
    }
    (out / "results_detail.json").write_text(json.dumps(detail, indent=1, sort_keys=True) + "\n", encoding="utf-8")

    # feature rankings and per-cell CV tables for the L1 classifiers
    rankings: dict[tuple[str, int], features.FeatureRanking] = {}
    top_rows = ["modality,classifier,rank,feature,mean_abs_weight,selection_frequency"]
    for spec, clf in cells:
        if clf not in (2, 4):
            continue
        report = reports[(spec.name, clf)]
        ranking = rankings[(spec.name, clf)] = features.rank_features(report.models)
        for i, e in enumerate(ranking.entries[: cfg.top_features], start=1):
            top_rows.append(
                f"{spec.name},{clf},{i},{e.name},{e.abs_weight!r},{e.selection_frequency!r}"
            )
        table_path = out / "cv_tables" / f"{_safe_name(spec.name)}_clf{clf}.csv"
        reps = report.per_repetition
        header = "lambda," + ",".join(f"rep{r.repetition}" for r in reps) + ",mean"
        lines = [header]
        for li, lam in enumerate(cfg.cv.lambda_grid):
            vals = [r.cv_mean_accuracies[li] for r in reps]
            cellstr = ",".join(repr(v) for v in vals)
            lines.append(f"{lam!r},{cellstr},{float(np.mean(vals))!r}")
        _write_lines(table_path, lines)
        artifacts.append(f"cv_tables/{table_path.name}")
    _write_lines(out / "top_features.csv", top_rows)
    artifacts.append("top_features.csv")

    # accuracy-vs-k curves; the ranking source is the same-family L1 cell
    if cfg.curves:
        ctasks = [
            (d, rankings[(req.modality, req.classifier + 1)], req.classifier, cfg.split, cfg.solver, req.k_max)
            for req in cfg.curves
        ]
        curves = _run_tasks(_curve_worker, ctasks, jobs)
        for req, curve in zip(cfg.curves, curves):
            stem = f"{_safe_name(req.modality)}_clf{req.classifier}"
            features.write_curve_csv(curve, out / "curves" / f"{stem}.csv")
            features.write_curve_gnuplot(curve, out / "curves" / f"{stem}.dat")
            artifacts.extend([f"curves/{stem}.csv", f"curves/{stem}.dat"])

    # group statistics over every dataset column (Welch everywhere, plus a
    # chi-square row for low-cardinality features)
    stat_rows = ["feature,kind,statistic,p_value,df"]
    skipped = []
    for name in d.feature_names:
        col = d.features[:, d.feature_names.index(name)]
        kinds = ["welch_t"]
        if np.unique(col).size <= _CHI_MAX_DISTINCT:
            kinds.append("chi_square")
        for kind in kinds:
            try:
                r = evaluation.compare_groups(d, name, kind, max_distinct=_CHI_MAX_DISTINCT)
            except DataError as exc:
                skipped.append({"feature": name, "kind": kind, "reason": str(exc)})
                continue
            stat_rows.append(f"{name},{kind},{r.statistic!r},{r.p_value!r},{r.df!r}")
    _write_lines(out / "group_stats.csv", stat_rows)

    nonconverged = {
        f"{mname}/clf{clf}": report.nonconverged
        for (mname, clf), report in reports.items()
        if report.nonconverged
    }
    if nonconverged:
        log.warning("non-converged fits: %s", nonconverged)
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "group_label": cfg.group_label,
        "config": cfg.echo,
        "seeds": {"split": cfg.split.seed, "cv": cfg.cv.seed},
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "sparsebench": __version__,
        },
        "artifacts": sorted(artifacts),
        "warnings": {
            "nonconverged": dict(sorted(nonconverged.items())),
            "group_stats_skipped": skipped,
        },
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    log.info("wrote %d artifacts to %s", len(manifest["artifacts"]), out)
    return EXIT_OK


# -------------------------------------------------------------- subcommands


def _cmd_run(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed, output_override=args.output)
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    return run_experiment(cfg, jobs=jobs)


def _cmd_validate(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed, output_override=args.output)
    d = ds.load_csv(cfg.dataset_path, cfg.label_column, cfg.id_column)
    for spec in cfg.modalities:
        try:
            sub = ds.assemble_modality(d, spec)
        except DataError as exc:
            raise ConfigError(f"modality {spec.name!r}: {exc}") from exc
        print(f"modality {spec.name}: {sub.n_features} features")
    print(
        f"config ok: {d.n_samples} samples, {len(cfg.modalities)} modalities, "
        f"classifiers {list(cfg.classifiers)}, {cfg.split.repetitions} repetitions"
    )
    return EXIT_OK


def _cmd_fit(args) -> int:
    kind = evaluation.CLASSIFIER_KINDS[args.classifier]
    if kind.penalized:
        if args.lam is None:
            raise ConfigError(f"classifier {args.classifier} needs --lam")
        lam = args.lam
    else:
        if args.lam not in (None, 0.0):
            raise ConfigError(f"classifier {args.classifier} is unpenalized; drop --lam")
        lam = 0.0
    d = ds.load_csv(args.data, args.label_column, args.id_column)
    if args.features is not None:
        wanted = ds.load_feature_list(args.features)
        d = ds.assemble_modality(d, ModalitySpec("cli-selection", wanted))
    params = ds.fit_standardizer(d)
    model = solvers.fit(
        ds.apply_standardizer(d, params),
        ObjectiveSpec(kind, lam),
        _solver_config(args),
        standardization=params,
        feature_names=d.feature_names,
    )
    if not model.diagnostics.converged:
        log.warning("fit did not converge in %d iterations", model.diagnostics.iterations)
    solvers.save_model(model, args.output)
    log.info(
        "saved %s model (lambda=%g, train accuracy %.3f) to %s",
        model.kind, lam, model.diagnostics.train_accuracy, args.output,
    )
    return EXIT_OK


def _cmd_predict(args) -> int:
    model = solvers.load_model(args.model)
    d = ds.load_csv(args.data, args.label_column, args.id_column)
    d = ds.assemble_modality(d, ModalitySpec("model-features", model.feature_names))
    scores = solvers.decision_values(model, d)
    labels = (scores >= 0.0).astype(np.int64)
    probs = solvers.predict_proba(model, d) if model.kind == "LR" else None

    header = ["id", "decision_value"] + (["probability"] if probs is not None else []) + ["predicted_label"]
    lines = [",".join(header)]
    for i, sid in enumerate(d.sample_ids):
        cells = [sid, repr(float(scores[i]))]
        if probs is not None:
            cells.append(repr(float(probs[i])))
        cells.append(str(int(labels[i])))
        lines.append(",".join(cells))
    text = "".join(line + "\n" for line in lines)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text, encoding="utf-8")
    return EXIT_OK


def _parse_support(text: str):
    pairs = []
    for part in text.split(","):
        try:
            idx, val = part.split(":")
            pairs.append((int(idx), float(val)))
        except ValueError as exc:
            raise ConfigError(f"--support: expected 'index:weight,...', got {part!r}") from exc
    return tuple(pairs)


def _cmd_synth(args) -> int:
    try:
        spec = synthgen.SyntheticSpec(
            m=args.m,
            n=args.n,
            support=_parse_support(args.support),
            intercept=args.intercept,
            noise_model=args.noise,
            flip_prob=args.flip,
            feature_correlation=args.rho,
            seed=args.seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    d, truth = synthgen.generate(spec)
    ds.save_csv(d, args.output, label_column=args.label_column, id_column=args.id_column)
    doc = {
        "spec": {
            "m": spec.m,
            "n": spec.n,
            "support": [[j, v] for j, v in spec.support],
            "intercept": spec.intercept,
            "noise_model": spec.noise_model,
            "flip_prob": spec.flip_prob,
            "feature_correlation": spec.feature_correlation,
            "seed": spec.seed,
        },
        "true_weights": [float(v) for v in truth.weights],
        "intercept": truth.intercept,
        "support": list(truth.support),
        "bayes_accuracy": truth.bayes_accuracy,
    }
    Path(args.truth).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    log.info("wrote %s (%d x %d) and %s", args.output, spec.m, spec.n, args.truth)
    return EXIT_OK


def _solver_config(args) -> solvers.SolverConfig:
    kwargs = {}
    for key in ("max_iterations", "tolerance", "kkt_tolerance", "hinge_smoothing"):
        val = getattr(args, key, None)
        if val is not None:
            kwargs[key] = val
    try:
        return solvers.SolverConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _add_solver_flags(p) -> None:
    p.add_argument("--max-iterations", dest="max_iterations", type=int, default=None)
    p.add_argument("--tolerance", type=float, default=None)
    p.add_argument("--kkt-tolerance", dest="kkt_tolerance", type=float, default=None)
    p.add_argument("--hinge-smoothing", dest="hinge_smoothing", type=float, default=None)


def _add_io_flags(p) -> None:
    p.add_argument("--label-column", dest="label_column", default="label")
    p.add_argument("--id-column", dest="id_column", default="id")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsebench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a full experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--jobs", "-j", type=int, default=None, help="worker processes (default: all cores)")
    p_run.add_argument("--seed", type=int, default=None, help="override split and CV seeds")
    p_run.add_argument("--output", default=None, help="override the config's output_dir")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="dry-run a config and print resolved modalities")
    p_val.add_argument("config")
    p_val.add_argument("--seed", type=int, default=None)
    p_val.add_argument("--output", default=None)
    p_val.set_defaults(func=_cmd_validate)

    p_fit = sub.add_parser("fit", help="fit one model and serialize it")
    p_fit.add_argument("--data", required=True)
    p_fit.add_argument("--classifier", type=int, required=True, choices=sorted(evaluation.CLASSIFIER_KINDS))
    p_fit.add_argument("--lam", type=float, default=None, help="L1 penalty (classifiers 2 and 4)")
    p_fit.add_argument("--features", default=None, help="optional feature-list file (pre-selection)")
    p_fit.add_argument("--output", required=True, help="model file to write")
    _add_io_flags(p_fit)
    _add_solver_flags(p_fit)
    p_fit.set_defaults(func=_cmd_fit)

    p_pred = sub.add_parser("predict", help="score a CSV through a saved model")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--data", required=True)
    p_pred.add_argument("--output", required=True, help="output CSV path, or - for stdout")
    p_pred.add_argument("--label-column", dest="label_column", default=None,
                        help="label column to ignore if present (default: none)")
    p_pred.add_argument("--id-column", dest="id_column", default="id")
    p_pred.set_defaults(func=_cmd_predict)

    p_syn = sub.add_parser("synth", help="generate a synthetic dataset + truth JSON")
    p_syn.add_argument("--m", type=int, required=True)
    p_syn.add_argument("--n", type=int, required=True)
    p_syn.add_argument("--support", required=True, help="'index:weight,index:weight,...'")
    p_syn.add_argument("--intercept", type=float, default=0.0)
    p_syn.add_argument("--noise", choices=("logistic", "margin"), default="logistic")
    p_syn.add_argument("--flip", type=float, default=0.0, help="margin-model flip probability")
    p_syn.add_argument("--rho", type=float, default=0.0, help="common pairwise feature correlation")
    p_syn.add_argument("--seed", type=int, default=0)
    p_syn.add_argument("--output", required=True, help="dataset CSV to write")
    p_syn.add_argument("--truth", required=True, help="ground-truth JSON to write")
    _add_io_flags(p_syn)
    p_syn.set_defaults(func=_cmd_synth)

    return parser


def _setup_logging() -> None:
    level = {
        "error": logging.ERROR,
        "warn": logging.WARNING,
        "info": logging.INFO,
        "debug": logging.DEBUG,
    }.get(os.environ.get("SPARSEBENCH_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, solvers.SolverError, synthgen.OracleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
