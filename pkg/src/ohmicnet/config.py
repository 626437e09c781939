"""Run configuration: INI-style sections + key=value, every field defaulted
to the published experimental settings, unknown keys rejected outright."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields

from .dataset import RegimeKind, SamplingRegime, SplitSizes
from .dephasing import BathSpec, QubitInit, TimeGrid

__all__ = ["RunConfig", "ConfigError", "load_config", "CONFIG_SCHEMA", "default_config_text"]


class ConfigError(Exception):
    """Bad configuration file: unknown key, bad value, or unreadable file."""


# section -> key -> (default as string, help)
CONFIG_SCHEMA = {
    "regime": {
        "kind": ("adjacent_s", "separated_s | adjacent_s | varying_all"),
        "delta": ("0.0", "interval length for varying_all (eta, omega_c in [0.25, 0.25+delta])"),
    },
    "grid": {
        "t_min": ("0.0", "first sample time"),
        "t_max": ("10.0", "last sample time, units of 1/omega0"),
        "n_points": ("400", "samples per trajectory"),
    },
    "bath": {
        "beta": ("zero", "'zero' for T=0, else inverse temperature > 0"),
    },
    "init": {
        "rho00": ("0.5", "initial ground population"),
        "rho01_re": ("0.5", "Re of initial coherence"),
        "rho01_im": ("0.0", "Im of initial coherence"),
        "omega0": ("1.0", "bare qubit frequency (time unit)"),
    },
    "splits": {
        "n_train": ("4800", "training examples (multiple of 3)"),
        "n_valid": ("2400", "validation examples (multiple of 3)"),
        "n_test": ("2400", "test examples (multiple of 3)"),
    },
    "network": {
        "task": ("classification", "classification | s_only | all_three"),
        "hidden": ("250,80", "comma-separated hidden layer widths"),
    },
    "train": {
        "iterations": ("5000", "full-batch Adam steps"),
        "lr": ("1e-4", "Adam learning rate"),
        "eval_every": ("100", "history recording period"),
    },
    "run": {
        "master_seed": ("0", "dataset seed"),
        "net_seed": ("1", "weight initialization seed"),
        "threads": ("1", "dataset generation worker threads"),
        "quadrature_tol": ("1e-8", "relative tolerance of the decoherence integral"),
    },
}


@dataclass(frozen=True)
class RunConfig:
    regime: SamplingRegime
    grid: TimeGrid
    bath: BathSpec
    init: QubitInit
    sizes: SplitSizes
    task: str
    hidden: tuple
    iterations: int
    lr: float
    eval_every: int
    master_seed: int
    net_seed: int
    threads: int
    quadrature_tol: float


def default_config_text() -> str:
    lines = []
    for section, keys in CONFIG_SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (default, help_) in keys.items():
            lines.append(f"# {help_}")
            lines.append(f"{key} = {default}")
        lines.append("")
    return "\n".join(lines)


def _build(cp: configparser.ConfigParser) -> RunConfig:
    def get(section, key):
        if cp.has_option(section, key):
            return cp.get(section, key)
        return CONFIG_SCHEMA[section][key][0]

    def err(section, key, exc):
        return ConfigError(f"bad value for [{section}] {key}: {exc}")

    try:
        kind = RegimeKind(get("regime", "kind"))
    except ValueError as exc:
        raise err("regime", "kind", exc) from exc
    try:
        delta = float(get("regime", "delta"))
        regime = (
            SamplingRegime.varying_all(delta)
            if kind is RegimeKind.VARYING_ALL
            else SamplingRegime(kind)
        )
    except ValueError as exc:
        raise err("regime", "delta", exc) from exc

    try:
        grid = TimeGrid(
            t_min=float(get("grid", "t_min")),
            t_max=float(get("grid", "t_max")),
            n_points=int(get("grid", "n_points")),
        )
    except ValueError as exc:
        raise ConfigError(f"bad [grid] section: {exc}") from exc

    beta_raw = get("bath", "beta")
    try:
        bath = BathSpec(None if beta_raw == "zero" else float(beta_raw))
    except ValueError as exc:
        raise err("bath", "beta", exc) from exc

    try:
        init = QubitInit(
            rho00=float(get("init", "rho00")),
            rho01=complex(float(get("init", "rho01_re")), float(get("init", "rho01_im"))),
            omega0=float(get("init", "omega0")),
        )
    except ValueError as exc:
        raise ConfigError(f"bad [init] section: {exc}") from exc

    try:
        sizes = SplitSizes(
            n_train=int(get("splits", "n_train")),
            n_valid=int(get("splits", "n_valid")),
            n_test=int(get("splits", "n_test")),
        )
    except ValueError as exc:
        raise ConfigError(f"bad [splits] section: {exc}") from exc

    task = get("network", "task")
    if task not in ("classification", "s_only", "all_three"):
        raise err("network", "task", f"unknown task {task!r}")
    try:
        hidden = tuple(int(w) for w in get("network", "hidden").split(",") if w.strip())
        if not hidden or any(w < 1 for w in hidden):
            raise ValueError("hidden widths must be positive integers")
    except ValueError as exc:
        raise err("network", "hidden", exc) from exc

    try:
        iterations = int(get("train", "iterations"))
        lr = float(get("train", "lr"))
        eval_every = int(get("train", "eval_every"))
        if iterations < 0 or lr <= 0 or eval_every < 1:
            raise ValueError("iterations >= 0, lr > 0, eval_every >= 1 required")
    except ValueError as exc:
        raise ConfigError(f"bad [train] section: {exc}") from exc

    try:
        master_seed = int(get("run", "master_seed"))
        net_seed = int(get("run", "net_seed"))
        threads = int(get("run", "threads"))
        quadrature_tol = float(get("run", "quadrature_tol"))
        if threads < 1:
            raise ValueError("threads must be >= 1")
        if not (0 < quadrature_tol <= 1e-4):
            raise ValueError("quadrature_tol must lie in (0, 1e-4]")
    except ValueError as exc:
        raise ConfigError(f"bad [run] section: {exc}") from exc

    return RunConfig(
        regime=regime, grid=grid, bath=bath, init=init, sizes=sizes,
        task=task, hidden=hidden, iterations=iterations, lr=lr,
        eval_every=eval_every, master_seed=master_seed, net_seed=net_seed,
        threads=threads, quadrature_tol=quadrature_tol,
    )


def load_config(path: str | None = None) -> RunConfig:
    """Parse a config file (or the defaults if path is None); unknown
    sections/keys are hard errors naming the offender."""
    cp = configparser.ConfigParser()
    if path is not None:
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from exc
        for section in cp.sections():
            if section not in CONFIG_SCHEMA:
                raise ConfigError(f"{path}: unknown section [{section}]")
            for key in cp.options(section):
                if key not in CONFIG_SCHEMA[section]:
                    raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
    return _build(cp)
