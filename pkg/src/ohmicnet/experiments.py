"""End-to-end experiment orchestration and machine-readable reports.

Each run builds a dataset, featurizes it, trains a network and evaluates it;
reports are emitted as a JSON summary plus CSV tables suitable for external
plotting.  Output directories embed the regime, seed, and a content hash of
the run configuration, so identical configurations land in identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .dataset import (
    SWEEP_DELTAS,
    LabeledDataset,
    RegimeKind,
    SamplingRegime,
    SplitSizes,
    build_dataset,
    features_and_labels,
)
from .dephasing import BathSpec, QubitInit, TimeGrid
from .network import (
    Head,
    Loss,
    MlpSpec,
    TrainConfig,
    evaluate_classification,
    evaluate_regression,
    train,
)

__all__ = [
    "RunSettings",
    "ClassificationReport",
    "RegressionReport",
    "run_classification",
    "run_regression",
    "error_histogram",
    "emit_report",
    "CLASSIFIER_HIDDEN",
    "DEEP_HIDDEN",
]

CLASSIFIER_HIDDEN = (250, 80)
DEEP_HIDDEN = (250, 250, 250, 250, 250, 80)

# desk-scale iteration budgets per experiment family; --paper-scale raises
# the deep regression budget to the published 1e5
ITERATIONS_SEPARATED_CLASS = 500
ITERATIONS_ADJACENT_CLASS = 5000
ITERATIONS_SWEEP_CLASS = 20_000
ITERATIONS_FIXED_REGRESSION = 1000
ITERATIONS_SWEEP_REGRESSION = 20_000
ITERATIONS_SWEEP_REGRESSION_PAPER = 100_000


@dataclass(frozen=True)
class RunSettings:
    """Shared knobs for one experiment run."""

    sizes: SplitSizes = SplitSizes()
    grid: TimeGrid = TimeGrid()
    bath: BathSpec = BathSpec.zero_temperature()
    init: QubitInit = QubitInit.plus_state()
    master_seed: int = 0
    net_seed: int = 1
    lr: float = 1e-4
    eval_every: int = 100
    n_threads: int = 1


@dataclass
class SweepPoint:
    delta: float
    train_metric: float
    test_metric: float
    iterations: int


@dataclass
class ClassificationReport:
    regime: str
    iterations: int
    train_accuracy: float
    test_accuracy: float
    confusion_train: np.ndarray
    confusion_test: np.ndarray
    history: list
    sweep: list = field(default_factory=list)  # accuracy-vs-delta, varying_all only
    seed: int = 0
    config_digest: str = ""


@dataclass
class RegressionReport:
    regime: str
    targets: str  # "s_only" or "all_three"
    iterations: int
    train_mse: float
    test_mse: float
    per_target_mse: dict
    scatter: dict  # target name -> (true, predicted) arrays for the test split
    histograms: dict  # target name -> {"edges": ..., "percent": ...}
    history: list
    sweep: list = field(default_factory=list)  # mse-vs-delta, varying_all only
    seed: int = 0
    config_digest: str = ""


def _digest(payload: dict) -> str:
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.blake2b(text.encode(), digest_size=6).hexdigest()


def _dataset_for(regime: SamplingRegime, settings: RunSettings, tol=1e-8) -> LabeledDataset:
    return build_dataset(
        regime,
        sizes=settings.sizes,
        grid=settings.grid,
        bath=settings.bath,
        init=settings.init,
        master_seed=settings.master_seed,
        tol=tol,
        n_threads=settings.n_threads,
    )


def _train_on(dataset: LabeledDataset, task: str, hidden, settings: RunSettings,
              iterations: int, net_seed: int):
    train_x, train_y = features_and_labels(dataset.train, task)
    valid_x, valid_y = features_and_labels(dataset.valid, task)
    test_x, test_y = features_and_labels(dataset.test, task)
    if task == "classification":
        spec = MlpSpec((train_x.shape[1], *hidden, 3), Head.SOFTMAX)
        loss = Loss.CROSS_ENTROPY
    else:
        spec = MlpSpec((train_x.shape[1], *hidden, train_y.shape[1]), Head.LINEAR)
        loss = Loss.MSE
    config = TrainConfig(
        iterations=iterations, lr=settings.lr, seed=net_seed,
        loss=loss, eval_every=settings.eval_every,
    )
    params, history = train(spec, train_x, train_y, valid_x, valid_y, config)
    return params, spec, history, (train_x, train_y), (test_x, test_y)


def run_classification(
    regime: SamplingRegime,
    settings: RunSettings = RunSettings(),
    iterations: int | None = None,
    hidden=CLASSIFIER_HIDDEN,
    deltas=SWEEP_DELTAS,
) -> ClassificationReport:
    """One classifier per regime; for varying_all, one fresh model per delta.

    For the sweep, the reported confusion matrices and accuracies are those of
    the last delta; per-delta accuracies land in the sweep table.
    """
    if regime.kind is RegimeKind.VARYING_ALL:
        its = iterations if iterations is not None else ITERATIONS_SWEEP_CLASS
        sweep = []
        last = None
        for i, delta in enumerate(deltas):
            point_regime = SamplingRegime.varying_all(delta)
            point_settings = _derive_settings(settings, i)
            ds = _dataset_for(point_regime, point_settings)
            params, spec, history, (tx, ty), (sx, sy) = _train_on(
                ds, "classification", hidden, point_settings, its,
                point_settings.net_seed,
            )
            acc_train, conf_train = evaluate_classification(params, spec, tx, ty)
            acc_test, conf_test = evaluate_classification(params, spec, sx, sy)
            sweep.append(SweepPoint(delta, acc_train, acc_test, its))
            last = (acc_train, acc_test, conf_train, conf_test, history)
        acc_train, acc_test, conf_train, conf_test, history = last
        report = ClassificationReport(
            regime=regime.label(), iterations=its,
            train_accuracy=acc_train, test_accuracy=acc_test,
            confusion_train=conf_train, confusion_test=conf_test,
            history=history, sweep=sweep, seed=settings.master_seed,
        )
    else:
        if iterations is None:
            iterations = (
                ITERATIONS_SEPARATED_CLASS
                if regime.kind is RegimeKind.SEPARATED_S
                else ITERATIONS_ADJACENT_CLASS
            )
        ds = _dataset_for(regime, settings)
        params, spec, history, (tx, ty), (sx, sy) = _train_on(
            ds, "classification", hidden, settings, iterations, settings.net_seed
        )
        acc_train, conf_train = evaluate_classification(params, spec, tx, ty)
        acc_test, conf_test = evaluate_classification(params, spec, sx, sy)
        report = ClassificationReport(
            regime=regime.label(), iterations=iterations,
            train_accuracy=acc_train, test_accuracy=acc_test,
            confusion_train=conf_train, confusion_test=conf_test,
            history=history, seed=settings.master_seed,
        )
    report.config_digest = _digest(
        {"kind": "classification", "regime": report.regime,
         "iterations": report.iterations, "seed": settings.master_seed,
         "net_seed": settings.net_seed, "hidden": list(hidden)}
    )
    return report


def _derive_settings(settings: RunSettings, offset: int) -> RunSettings:
    """Per-sweep-point seeds so the points are independent but reproducible."""
    return RunSettings(
        sizes=settings.sizes, grid=settings.grid, bath=settings.bath,
        init=settings.init,
        master_seed=settings.master_seed + 1000 * offset,
        net_seed=settings.net_seed + 1000 * offset,
        lr=settings.lr, eval_every=settings.eval_every,
        n_threads=settings.n_threads,
    )


_TARGET_NAMES = {"s_only": ("s",), "all_three": ("s", "eta", "omega_c")}


def run_regression(
    regime: SamplingRegime,
    targets: str,
    settings: RunSettings = RunSettings(),
    iterations: int | None = None,
    hidden=None,
    deltas=SWEEP_DELTAS,
) -> RegressionReport:
    """Regression of the density parameters; 's_only' with the fixed-parameter
    regimes, 'all_three' with varying_all (sweeps delta, deep network)."""
    if targets not in _TARGET_NAMES:
        raise ValueError(f"targets must be 's_only' or 'all_three', got {targets!r}")
    varying = regime.kind is RegimeKind.VARYING_ALL
    if targets == "s_only" and varying:
        raise ValueError("s_only regression needs a fixed eta/omega_c regime")
    if targets == "all_three" and not varying:
        raise ValueError("all_three regression needs the varying_all regime")
    names = _TARGET_NAMES[targets]

    if varying:
        its = iterations if iterations is not None else ITERATIONS_SWEEP_REGRESSION
        hidden = DEEP_HIDDEN if hidden is None else hidden
        sweep = []
        last = None
        for i, delta in enumerate(deltas):
            point_regime = SamplingRegime.varying_all(delta)
            point_settings = _derive_settings(settings, i)
            ds = _dataset_for(point_regime, point_settings)
            params, spec, history, (tx, ty), (sx, sy) = _train_on(
                ds, targets, hidden, point_settings, its, point_settings.net_seed
            )
            mse_train, _, _ = evaluate_regression(params, spec, tx, ty)
            mse_test, per_target, pred = evaluate_regression(params, spec, sx, sy)
            sweep.append(SweepPoint(delta, mse_train, mse_test, its))
            last = (mse_train, mse_test, per_target, pred, sy, history, ds)
        mse_train, mse_test, per_target, pred, true, history, ds = last
        regime_label = regime.label()
    else:
        its = iterations if iterations is not None else ITERATIONS_FIXED_REGRESSION
        hidden = CLASSIFIER_HIDDEN if hidden is None else hidden
        sweep = []
        ds = _dataset_for(regime, settings)
        params, spec, history, (tx, ty), (sx, sy) = _train_on(
            ds, targets, hidden, settings, its, settings.net_seed
        )
        mse_train, _, _ = evaluate_regression(params, spec, tx, ty)
        mse_test, per_target, pred = evaluate_regression(params, spec, sx, sy)
        true = sy
        regime_label = regime.label()

    scatter = {
        name: (true[:, j].copy(), pred[:, j].copy()) for j, name in enumerate(names)
    }
    fixed_params = regime.kind is not RegimeKind.VARYING_ALL
    histograms = {}
    for j, name in enumerate(names):
        dedupe = name == "s" and fixed_params
        edges, percent = error_histogram(
            list(zip(pred[:, j], true[:, j])),
            dedupe_ohmic=dedupe,
            s_values=true[:, 0] if targets == "all_three" else true[:, j],
        )
        histograms[name] = {"edges": edges, "percent": percent}

    report = RegressionReport(
        regime=regime_label, targets=targets, iterations=its,
        train_mse=mse_train, test_mse=mse_test,
        per_target_mse={n: float(per_target[j]) for j, n in enumerate(names)},
        scatter=scatter, histograms=histograms, history=history,
        sweep=sweep, seed=settings.master_seed,
    )
    report.config_digest = _digest(
        {"kind": "regression", "regime": report.regime, "targets": targets,
         "iterations": its, "seed": settings.master_seed,
         "net_seed": settings.net_seed, "hidden": list(hidden)}
    )
    return report


def _default_bin_edges(errors: np.ndarray, n_bins: int = 13) -> np.ndarray:
    """13 uniform bins spanning [-m, +m], m = max|err| rounded up to one
    significant figure."""
    m = float(np.max(np.abs(errors)))
    if m == 0.0:
        m = 1e-12
    exponent = np.floor(np.log10(m))
    mantissa = m / 10**exponent
    m_rounded = float(np.ceil(mantissa) * 10**exponent)
    return np.linspace(-m_rounded, m_rounded, n_bins + 1)


def error_histogram(pairs, bin_edges=None, dedupe_ohmic: bool = False, s_values=None):
    """Binned percentages of prediction errors (predicted - true).

    With dedupe_ohmic, all but one example whose s target equals 1 are dropped
    (fixed-parameter regimes repeat one identical Ohmic trajectory, which
    would otherwise skew the distribution).  Returns (edges, percentages).
    """
    if len(pairs) == 0:
        raise ValueError("error_histogram needs at least one (predicted, true) pair")
    pred = np.array([p for p, _ in pairs], dtype=np.float64)
    true = np.array([t for _, t in pairs], dtype=np.float64)
    keep = np.ones(len(pairs), dtype=bool)
    if dedupe_ohmic:
        svals = true if s_values is None else np.asarray(s_values, dtype=np.float64)
        ohmic = svals == 1.0
        if np.any(ohmic):
            first = int(np.argmax(ohmic))
            keep = ~ohmic
            keep[first] = True
    errors = pred[keep] - true[keep]
    edges = (
        _default_bin_edges(errors) if bin_edges is None
        else np.asarray(bin_edges, dtype=np.float64)
    )
    counts, _ = np.histogram(errors, bins=edges)
    percent = 100.0 * counts / errors.shape[0]
    return edges, percent


# ---------------------------------------------------------------------------
# report emission


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _history_rows(history):
    return [
        [r.iteration, f"{r.train_loss:.17g}", f"{r.valid_loss:.17g}",
         f"{r.train_metric:.17g}", f"{r.valid_metric:.17g}"]
        for r in history
    ]


def emit_report(report, out_dir) -> str:
    """Write report files; returns the run directory path.

    Classification: report.json, confusion.csv, history.csv and (for sweeps)
    accuracy_vs_delta.csv.  Regression: report.json, history.csv,
    scatter_<target>.csv, hist_<target>.csv and (for sweeps) mse_vs_delta.csv.
    No timestamps anywhere: reruns with identical configs are byte-identical.
    """
    run_dir = os.path.join(
        out_dir, f"{report.regime}_seed{report.seed}_{report.config_digest}"
    )
    try:
        os.makedirs(run_dir, exist_ok=True)
        if isinstance(report, ClassificationReport):
            summary = {
                "kind": "classification",
                "regime": report.regime,
                "iterations": report.iterations,
                "seed": report.seed,
                "config_digest": report.config_digest,
                "train_accuracy": report.train_accuracy,
                "test_accuracy": report.test_accuracy,
                "sweep": [
                    {"delta": p.delta, "train_accuracy": p.train_metric,
                     "test_accuracy": p.test_metric, "iterations": p.iterations}
                    for p in report.sweep
                ],
            }
            _write_csv(
                os.path.join(run_dir, "confusion.csv"),
                ["split", "true_class", "pred_sub", "pred_ohmic", "pred_super"],
                [
                    [split, i] + list(map(int, conf[i]))
                    for split, conf in (
                        ("train", report.confusion_train),
                        ("test", report.confusion_test),
                    )
                    for i in range(conf.shape[0])
                ],
            )
            if report.sweep:
                _write_csv(
                    os.path.join(run_dir, "accuracy_vs_delta.csv"),
                    ["delta", "train_accuracy", "test_accuracy", "iterations"],
                    [
                        [f"{p.delta:g}", f"{p.train_metric:.17g}",
                         f"{p.test_metric:.17g}", p.iterations]
                        for p in report.sweep
                    ],
                )
        elif isinstance(report, RegressionReport):
            summary = {
                "kind": "regression",
                "regime": report.regime,
                "targets": report.targets,
                "iterations": report.iterations,
                "seed": report.seed,
                "config_digest": report.config_digest,
                "train_mse": report.train_mse,
                "test_mse": report.test_mse,
                "per_target_mse": report.per_target_mse,
                "sweep": [
                    {"delta": p.delta, "train_mse": p.train_metric,
                     "test_mse": p.test_metric, "iterations": p.iterations}
                    for p in report.sweep
                ],
            }
            for name, (true, pred) in report.scatter.items():
                _write_csv(
                    os.path.join(run_dir, f"scatter_{name}.csv"),
                    ["true", "predicted"],
                    [[f"{t:.17g}", f"{p:.17g}"] for t, p in zip(true, pred)],
                )
            for name, h in report.histograms.items():
                edges, percent = h["edges"], h["percent"]
                _write_csv(
                    os.path.join(run_dir, f"hist_{name}.csv"),
                    ["bin_lo", "bin_hi", "percent"],
                    [
                        [f"{edges[i]:.17g}", f"{edges[i + 1]:.17g}",
                         f"{percent[i]:.17g}"]
                        for i in range(len(percent))
                    ],
                )
            if report.sweep:
                _write_csv(
                    os.path.join(run_dir, "mse_vs_delta.csv"),
                    ["delta", "train_mse", "test_mse", "iterations"],
                    [
                        [f"{p.delta:g}", f"{p.train_metric:.17g}",
                         f"{p.test_metric:.17g}", p.iterations]
                        for p in report.sweep
                    ],
                )
        else:
            raise TypeError(f"unknown report type {type(report)!r}")

        _write_csv(
            os.path.join(run_dir, "history.csv"),
            ["iteration", "train_loss", "valid_loss", "train_metric", "valid_metric"],
            _history_rows(report.history),
        )
        with open(os.path.join(run_dir, "report.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IOError(f"cannot write report under {out_dir}: {exc}") from exc
    return run_dir
