"""Command-line interface: generate, train, evaluate, predict, reproduce.

Exit codes: 0 success, 2 configuration/usage error, 3 data error (missing or
corrupt files, mismatched artifacts), 4 numerical failure (quadrature
non-convergence, training divergence).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys

import numpy as np

from . import experiments
from .config import CONFIG_SCHEMA, ConfigError, RunConfig, default_config_text, load_config
from .dataset import (
    DatasetError,
    RegimeKind,
    SamplingRegime,
    build_dataset,
    export_csv,
    features_and_labels,
    load_dataset,
    save_dataset,
)
from .dephasing import QuadratureNotConverged
from .fourier import featurize_values
from .network import (
    CheckpointError,
    Head,
    Loss,
    MlpSpec,
    TrainConfig,
    evaluate_classification,
    evaluate_regression,
    forward,
    load_checkpoint,
    save_checkpoint,
    train,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

OUT_ROOT_ENV = "OHMICNET_OUT"


def _out_root(args) -> str:
    if args.out:
        return args.out
    return os.environ.get(OUT_ROOT_ENV, ".")


def _config_from_args(args) -> RunConfig:
    config = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        config = dataclasses.replace(config, master_seed=args.seed)
    if getattr(args, "threads", None) is not None:
        config = dataclasses.replace(config, threads=args.threads)
    return config


def _settings_from_config(config: RunConfig) -> experiments.RunSettings:
    return experiments.RunSettings(
        sizes=config.sizes, grid=config.grid, bath=config.bath, init=config.init,
        master_seed=config.master_seed, net_seed=config.net_seed, lr=config.lr,
        eval_every=config.eval_every, n_threads=config.threads,
    )


def cmd_generate(args) -> int:
    config = _config_from_args(args)
    ds = build_dataset(
        config.regime, sizes=config.sizes, grid=config.grid, bath=config.bath,
        init=config.init, master_seed=config.master_seed,
        tol=config.quadrature_tol, n_threads=config.threads,
    )
    checksum = save_dataset(ds, args.dataset)
    if args.csv:
        export_csv(ds, args.csv)
    print(f"dataset: {args.dataset}")
    print(f"regime: {config.regime.label()}")
    print(f"examples: {config.sizes.total} "
          f"(train {config.sizes.n_train}, valid {config.sizes.n_valid}, "
          f"test {config.sizes.n_test})")
    print(f"grid: [{config.grid.t_min}, {config.grid.t_max}] x {config.grid.n_points}")
    print(f"master_seed: {config.master_seed}")
    print(f"checksum: {checksum}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _config_from_args(args)
    ds = load_dataset(args.dataset)
    if ds.manifest.grid != config.grid:
        raise DatasetError(
            f"dataset grid {ds.manifest.grid} does not match config grid {config.grid}"
        )
    task = config.task
    train_x, train_y = features_and_labels(ds.train, task)
    valid_x, valid_y = features_and_labels(ds.valid, task)
    if task == "classification":
        spec = MlpSpec((train_x.shape[1], *config.hidden, 3), Head.SOFTMAX)
        loss = Loss.CROSS_ENTROPY
    else:
        spec = MlpSpec((train_x.shape[1], *config.hidden, train_y.shape[1]), Head.LINEAR)
        loss = Loss.MSE
    tc = TrainConfig(
        iterations=config.iterations, lr=config.lr, seed=config.net_seed,
        loss=loss, eval_every=config.eval_every,
    )
    params, history = train(spec, train_x, train_y, valid_x, valid_y, tc)
    save_checkpoint(args.model, params, spec, config.net_seed, config.iterations, loss)
    history_path = args.history or args.model + ".history.csv"
    with open(history_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["iteration", "train_loss", "valid_loss", "train_metric", "valid_metric"]
        )
        for r in history:
            writer.writerow(
                [r.iteration, f"{r.train_loss:.17g}", f"{r.valid_loss:.17g}",
                 f"{r.train_metric:.17g}", f"{r.valid_metric:.17g}"]
            )
    final = history[-1]
    print(f"model: {args.model}")
    print(f"history: {history_path}")
    print(f"iterations: {config.iterations}")
    print(f"final train_loss: {final.train_loss:.6g} valid_loss: {final.valid_loss:.6g}")
    print(f"final train_metric: {final.train_metric:.6g} "
          f"valid_metric: {final.valid_metric:.6g}")
    return EXIT_OK


def _task_of_checkpoint(spec: MlpSpec) -> str:
    if spec.head is Head.SOFTMAX:
        return "classification"
    return "s_only" if spec.output_width == 1 else "all_three"


def cmd_evaluate(args) -> int:
    params, spec, manifest = load_checkpoint(args.model)
    ds = load_dataset(args.dataset)
    task = _task_of_checkpoint(spec)
    if task == "classification" and ds.manifest.regime.kind is RegimeKind.VARYING_ALL:
        pass  # any regime can be classified
    x, y = features_and_labels(ds.split(args.split), task)
    if x.shape[1] != spec.input_width:
        raise DatasetError(
            f"dataset feature width {x.shape[1]} does not match model input "
            f"{spec.input_width}"
        )
    out_root = _out_root(args)
    if task == "classification":
        accuracy, confusion = evaluate_classification(params, spec, x, y)
        print(f"split: {args.split}")
        print(f"accuracy: {accuracy:.6f}")
        print("confusion (rows true sub/ohmic/super, cols predicted):")
        for row in confusion:
            print("  " + " ".join(f"{v:6d}" for v in row))
        os.makedirs(out_root, exist_ok=True)
        with open(os.path.join(out_root, "evaluation.json"), "w") as fh:
            json.dump(
                {"split": args.split, "accuracy": accuracy,
                 "confusion": confusion.tolist()},
                fh, indent=2, sort_keys=True,
            )
            fh.write("\n")
    else:
        mse, per_target, _ = evaluate_regression(params, spec, x, y)
        names = ("s",) if spec.output_width == 1 else ("s", "eta", "omega_c")
        print(f"split: {args.split}")
        print(f"mse: {mse:.6e}")
        for name, value in zip(names, per_target):
            print(f"mse[{name}]: {value:.6e}")
        os.makedirs(out_root, exist_ok=True)
        with open(os.path.join(out_root, "evaluation.json"), "w") as fh:
            json.dump(
                {"split": args.split, "mse": mse,
                 "per_target_mse": {n: float(v) for n, v in zip(names, per_target)}},
                fh, indent=2, sort_keys=True,
            )
            fh.write("\n")
    return EXIT_OK


def cmd_predict(args) -> int:
    params, spec, manifest = load_checkpoint(args.model)
    values = []
    try:
        with open(args.trajectory) as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:2]] != ["t", "value"]:
                raise DatasetError(
                    f"{args.trajectory}: expected CSV header 't,value'"
                )
            for row in reader:
                values.append(float(row[1]))
    except OSError as exc:
        raise DatasetError(f"cannot read {args.trajectory}: {exc}") from exc
    except (ValueError, IndexError) as exc:
        raise DatasetError(f"{args.trajectory}: malformed row: {exc}") from exc
    samples = np.asarray(values)
    if not np.all(np.isfinite(samples)):
        raise DatasetError(f"{args.trajectory}: non-finite sample values")
    features = featurize_values(samples)
    if features.shape[0] != spec.input_width:
        raise DatasetError(
            f"{args.trajectory}: {samples.shape[0]} samples give "
            f"{features.shape[0]} features, model expects {spec.input_width}"
        )
    out, _ = forward(params, spec, features[None, :])
    if spec.head is Head.SOFTMAX:
        result = {
            "task": "classification",
            "probabilities": {
                "sub_ohmic": out[0, 0], "ohmic": out[0, 1], "super_ohmic": out[0, 2],
            },
            "predicted_class": ["sub_ohmic", "ohmic", "super_ohmic"][int(np.argmax(out[0]))],
        }
    else:
        names = ("s",) if spec.output_width == 1 else ("s", "eta", "omega_c")
        result = {
            "task": "regression",
            "predicted": {n: float(v) for n, v in zip(names, out[0])},
        }
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


def _reproduce_jobs(paper_scale: bool):
    """identifier -> (description, thunk(settings) -> report)."""
    deep_iters = (
        experiments.ITERATIONS_SWEEP_REGRESSION_PAPER
        if paper_scale
        else experiments.ITERATIONS_SWEEP_REGRESSION
    )
    return {
        "regimeA-class": (
            "classification, class-separated exponents (100% expected)",
            lambda s: experiments.run_classification(
                SamplingRegime.separated_s(), s,
                iterations=experiments.ITERATIONS_SEPARATED_CLASS,
            ),
        ),
        "regimeB-class": (
            "classification, adjacent exponent intervals (~99.5% test)",
            lambda s: experiments.run_classification(
                SamplingRegime.adjacent_s(), s,
                iterations=experiments.ITERATIONS_ADJACENT_CLASS,
            ),
        ),
        "fig4-sweep": (
            "classification accuracy vs interval length, 10 deltas",
            lambda s: experiments.run_classification(
                SamplingRegime.varying_all(0.0), s,
                iterations=experiments.ITERATIONS_SWEEP_CLASS,
            ),
        ),
        "fig4-sweep-smoke": (
            "reduced sweep (deltas 0, 0.2, 1.8 at 5000 iterations)",
            lambda s: experiments.run_classification(
                SamplingRegime.varying_all(0.0), s,
                iterations=5000, deltas=(0.0, 0.2, 1.8),
            ),
        ),
        "fig5-regression": (
            "s regression, class-separated exponents",
            lambda s: experiments.run_regression(
                SamplingRegime.separated_s(), "s_only", s,
            ),
        ),
        "fig5-regression-adjacent": (
            "s regression, adjacent exponent intervals",
            lambda s: experiments.run_regression(
                SamplingRegime.adjacent_s(), "s_only", s,
            ),
        ),
        "fig6-sweep": (
            "3-parameter regression MSE vs interval length, 10 deltas",
            lambda s: experiments.run_regression(
                SamplingRegime.varying_all(0.0), "all_three", s,
                iterations=deep_iters,
            ),
        ),
        "fig6-sweep-smoke": (
            "reduced MSE sweep (deltas 0.2 and 1.8 at 4000 iterations)",
            lambda s: experiments.run_regression(
                SamplingRegime.varying_all(0.0), "all_three", s,
                iterations=4000, deltas=(0.2, 1.8),
            ),
        ),
        "fig7-shortest": (
            "3-parameter regression detail at delta = 0.2",
            lambda s: experiments.run_regression(
                SamplingRegime.varying_all(0.0), "all_three", s,
                iterations=deep_iters, deltas=(0.2,),
            ),
        ),
        "fig7-largest": (
            "3-parameter regression detail at delta = 1.8",
            lambda s: experiments.run_regression(
                SamplingRegime.varying_all(0.0), "all_three", s,
                iterations=deep_iters, deltas=(1.8,),
            ),
        ),
    }


def cmd_reproduce(args) -> int:
    jobs = _reproduce_jobs(args.paper_scale)
    if args.identifier not in jobs:
        listing = "\n".join(f"  {k}: {v[0]}" for k, v in jobs.items())
        print(
            f"unknown experiment {args.identifier!r}; valid identifiers:\n{listing}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    config = _config_from_args(args)
    settings = _settings_from_config(config)
    _, thunk = jobs[args.identifier]
    report = thunk(settings)
    run_dir = experiments.emit_report(report, _out_root(args))
    print(f"report: {run_dir}")
    if isinstance(report, experiments.ClassificationReport):
        print(f"train_accuracy: {report.train_accuracy:.6f}")
        print(f"test_accuracy: {report.test_accuracy:.6f}")
        for p in report.sweep:
            print(f"delta {p.delta:g}: train {p.train_metric:.4f} test {p.test_metric:.4f}")
    else:
        print(f"train_mse: {report.train_mse:.6e}")
        print(f"test_mse: {report.test_mse:.6e}")
        for p in report.sweep:
            print(f"delta {p.delta:g}: train {p.train_metric:.4e} test {p.test_metric:.4e}")
    return EXIT_OK


def _config_epilog() -> str:
    lines = ["configuration keys (INI sections, all optional, defaults shown):"]
    for section, keys in CONFIG_SCHEMA.items():
        for key, (default, help_) in keys.items():
            lines.append(f"  [{section}] {key} = {default}  ({help_})")
    lines.append("")
    lines.append(f"environment: {OUT_ROOT_ENV} sets the default output root")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ohmicnet",
        description=(
            "Generate exact dephasing-qubit trajectories, train networks to "
            "classify the spectral density's Ohmicity and regress its parameters."
        ),
        epilog=_config_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--config", help="INI configuration file")
    parser.add_argument("--seed", type=int, help="override [run] master_seed")
    parser.add_argument("--threads", type=int, help="override [run] threads")
    parser.add_argument("--out", help="output root (default: $OHMICNET_OUT or .)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build and save a labeled dataset")
    p.add_argument("dataset", help="output dataset path")
    p.add_argument("--csv", help="also export a CSV copy")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train a network on a saved dataset")
    p.add_argument("dataset", help="dataset path")
    p.add_argument("model", help="output checkpoint path")
    p.add_argument("--history", help="history CSV path (default: <model>.history.csv)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a dataset split")
    p.add_argument("model", help="checkpoint path")
    p.add_argument("dataset", help="dataset path")
    p.add_argument("--split", default="test", choices=("train", "valid", "test"))
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="run inference on one trajectory CSV (t,value)")
    p.add_argument("model", help="checkpoint path")
    p.add_argument("trajectory", help="CSV with header 't,value'")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("reproduce", help="run a published experiment end to end")
    p.add_argument("identifier", help="experiment identifier (see error text for list)")
    p.add_argument(
        "--paper-scale", action="store_true",
        help="use the full published iteration budgets (long-running)",
    )
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("print-config", help="print the default configuration")
    p.set_defaults(func=lambda args: (print(default_config_text(), end=""), EXIT_OK)[1])

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DatasetError, CheckpointError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (QuadratureNotConverged, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
