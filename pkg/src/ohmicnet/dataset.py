"""Reproducible labeled datasets of dephasing trajectories.

Parameters are sampled under three regimes (class-separated exponents,
adjacent exponents, or all three parameters varying), trajectories are the
sigma_x expectation values on the shared time grid, and each example's
randomness flows from a 64-bit seed mixed from (master_seed, split, index) so
regeneration is order- and thread-independent.

File format (format_version 1): one header line
``ohmicnet-dataset format=1 manifest_bytes=<n>``, then an INI manifest (UTF-8)
recording regime/grid/bath/init/splits/seed and a 64-bit blake2b checksum of
the payload, then the payload: little-endian float64 rows
``[s, eta, omega_c, class_id, v_0 .. v_{N-1}]`` grouped train/valid/test.
"""

from __future__ import annotations

import configparser
import csv
import enum
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dephasing import (
    BathSpec,
    GammaProfiler,
    Observable,
    OhmicityClass,
    QubitInit,
    SpectralParams,
    TimeGrid,
    Trajectory,
    ohmicity_class,
)

__all__ = [
    "RegimeKind",
    "SamplingRegime",
    "SplitSizes",
    "LabeledExample",
    "LabeledDataset",
    "DatasetError",
    "VersionMismatch",
    "CorruptFile",
    "IoFailure",
    "mix_seed",
    "sample_params",
    "build_dataset",
    "save_dataset",
    "load_dataset",
    "export_csv",
    "features_and_labels",
    "SWEEP_DELTAS",
]

FORMAT_VERSION = 1
S_LOWER_CLAMP = 0.01  # open lower bound (0, ...) clamped away from degenerate SDs
SWEEP_DELTAS = tuple(round(0.2 * i, 1) for i in range(10))  # 0.0 .. 1.8

SPLIT_NAMES = ("train", "valid", "test")


class RegimeKind(enum.Enum):
    SEPARATED_S = "separated_s"
    ADJACENT_S = "adjacent_s"
    VARYING_ALL = "varying_all"


@dataclass(frozen=True)
class SamplingRegime:
    """How (s, eta, omega_c) are drawn for each Ohmicity class.

    separated_s: s in (0.01, 0.5] / {1} / [1.5, 4], eta=0.25, omega_c=0.5.
    adjacent_s:  s in (0.01, 1) / {1} / (1, 4],      eta=0.25, omega_c=0.5.
    varying_all: s as adjacent_s; eta, omega_c uniform on [0.25, 0.25+delta].
    """

    kind: RegimeKind
    delta: float = 0.0

    def __post_init__(self):
        if self.kind is not RegimeKind.VARYING_ALL and self.delta != 0.0:
            raise ValueError("delta is only meaningful for the varying_all regime")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")

    @classmethod
    def separated_s(cls) -> "SamplingRegime":
        return cls(RegimeKind.SEPARATED_S)

    @classmethod
    def adjacent_s(cls) -> "SamplingRegime":
        return cls(RegimeKind.ADJACENT_S)

    @classmethod
    def varying_all(cls, delta: float) -> "SamplingRegime":
        return cls(RegimeKind.VARYING_ALL, delta=delta)

    @property
    def eta_range(self) -> tuple:
        if self.kind is RegimeKind.VARYING_ALL:
            return (0.25, 0.25 + self.delta)
        return (0.25, 0.25)

    @property
    def omega_c_range(self) -> tuple:
        if self.kind is RegimeKind.VARYING_ALL:
            return (0.25, 0.25 + self.delta)
        return (0.5, 0.5)

    def s_interval(self, cls_: OhmicityClass) -> tuple:
        if cls_ is OhmicityClass.OHMIC:
            return (1.0, 1.0)
        if self.kind is RegimeKind.SEPARATED_S:
            return (S_LOWER_CLAMP, 0.5) if cls_ is OhmicityClass.SUB_OHMIC else (1.5, 4.0)
        return (S_LOWER_CLAMP, 1.0) if cls_ is OhmicityClass.SUB_OHMIC else (1.0, 4.0)

    def label(self) -> str:
        if self.kind is RegimeKind.VARYING_ALL:
            return f"varying_all_{self.delta:g}"
        return self.kind.value


@dataclass(frozen=True)
class SplitSizes:
    n_train: int = 4800
    n_valid: int = 2400
    n_test: int = 2400

    def __post_init__(self):
        for name, n in zip(SPLIT_NAMES, self.as_tuple()):
            if n <= 0 or n % 3 != 0:
                raise ValueError(f"n_{name} must be a positive multiple of 3, got {n}")

    def as_tuple(self) -> tuple:
        return (self.n_train, self.n_valid, self.n_test)

    @property
    def total(self) -> int:
        return sum(self.as_tuple())


@dataclass(frozen=True)
class LabeledExample:
    trajectory: Trajectory
    class_label: OhmicityClass
    targets: tuple  # (s, eta, omega_c)
    example_seed: int

    def __post_init__(self):
        if self.class_label is not ohmicity_class(self.targets[0]):
            raise ValueError("class label inconsistent with the sampled exponent")


@dataclass(frozen=True)
class DatasetManifest:
    regime: SamplingRegime
    grid: TimeGrid
    bath: BathSpec
    init: QubitInit
    sizes: SplitSizes
    master_seed: int
    format_version: int = FORMAT_VERSION


@dataclass(frozen=True)
class LabeledDataset:
    manifest: DatasetManifest
    train: tuple
    valid: tuple
    test: tuple

    def split(self, name: str) -> tuple:
        if name not in SPLIT_NAMES:
            raise KeyError(f"unknown split {name!r}, expected one of {SPLIT_NAMES}")
        return getattr(self, name)

    @property
    def splits(self) -> dict:
        return {name: getattr(self, name) for name in SPLIT_NAMES}


class DatasetError(Exception):
    pass


class VersionMismatch(DatasetError):
    pass


class CorruptFile(DatasetError):
    pass


class IoFailure(DatasetError):
    pass


_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    """Finalizer of the splitmix64 generator; bijective 64-bit mix."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def mix_seed(master_seed: int, split_id: int, index: int) -> int:
    """Per-example 64-bit seed: splitmix64 chained over (master, split, index)."""
    h = _splitmix64(master_seed & _MASK64)
    h = _splitmix64(h ^ (split_id & _MASK64))
    return _splitmix64(h ^ (index & _MASK64))


def _uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    if lo == hi:
        return lo
    return float(rng.uniform(lo, hi))


def sample_params(
    regime: SamplingRegime, cls_: OhmicityClass, rng: np.random.Generator
) -> SpectralParams:
    """Draw one parameter triple; fixed draw order (s, eta, omega_c)."""
    s_lo, s_hi = regime.s_interval(cls_)
    s = _uniform(rng, s_lo, s_hi)
    eta = _uniform(rng, *regime.eta_range)
    omega_c = _uniform(rng, *regime.omega_c_range)
    return SpectralParams(s=s, eta=eta, omega_c=omega_c)


def _make_example(
    regime: SamplingRegime,
    split_id: int,
    index: int,
    master_seed: int,
    grid: TimeGrid,
    bath: BathSpec,
    init: QubitInit,
    profiler: GammaProfiler,
) -> LabeledExample:
    seed = mix_seed(master_seed, split_id, index)
    rng = np.random.Generator(np.random.PCG64(seed))
    cls_ = OhmicityClass(index % 3)
    params = sample_params(regime, cls_, rng)
    gamma = profiler.profile(params)
    # sigma_x of the dephasing qubit: envelope times the free-phase cosine
    rho01 = init.rho01 * np.exp(-1j * init.omega0 * grid.times) * np.exp(-gamma)
    values = 2.0 * np.real(rho01)
    traj = Trajectory(
        grid=grid, observable=Observable.SIGMA_X, values=values,
        params=params, bath=bath, init=init,
    )
    return LabeledExample(
        trajectory=traj, class_label=cls_,
        targets=(params.s, params.eta, params.omega_c), example_seed=seed,
    )


def build_dataset(
    regime: SamplingRegime,
    sizes: SplitSizes = SplitSizes(),
    grid: TimeGrid = TimeGrid(),
    bath: BathSpec = BathSpec.zero_temperature(),
    init: QubitInit = QubitInit.plus_state(),
    master_seed: int = 0,
    tol: float = 1e-8,
    n_threads: int = 1,
) -> LabeledDataset:
    """Balanced train/valid/test dataset; content is a pure function of the
    arguments and independent of n_threads."""
    oc_lo, oc_hi = regime.omega_c_range
    profiler = GammaProfiler(grid, bath, oc_lo, oc_hi, tol=tol)

    def make(split_id_index):
        split_id, index = split_id_index
        try:
            return _make_example(
                regime, split_id, index, master_seed, grid, bath, init, profiler
            )
        except Exception as exc:
            raise DatasetError(
                f"example generation failed at split {split_id} index {index}: {exc}"
            ) from exc

    splits = []
    for split_id, n in enumerate(sizes.as_tuple()):
        tasks = [(split_id, i) for i in range(n)]
        if n_threads > 1:
            with ThreadPoolExecutor(max_workers=n_threads) as pool:
                examples = list(pool.map(make, tasks))
        else:
            examples = [make(t) for t in tasks]
        splits.append(tuple(examples))

    manifest = DatasetManifest(
        regime=regime, grid=grid, bath=bath, init=init,
        sizes=sizes, master_seed=master_seed,
    )
    return LabeledDataset(manifest=manifest, train=splits[0], valid=splits[1], test=splits[2])


# ---------------------------------------------------------------------------
# persistence

_HEADER_PREFIX = "ohmicnet-dataset"


def _checksum(payload: bytes) -> str:
    import hashlib

    return hashlib.blake2b(payload, digest_size=8).hexdigest()


def _manifest_text(m: DatasetManifest, checksum: str) -> str:
    cp = configparser.ConfigParser()
    cp["dataset"] = {
        "format_version": str(m.format_version),
        "master_seed": str(m.master_seed),
        "checksum": checksum,
    }
    cp["regime"] = {"kind": m.regime.kind.value, "delta": repr(m.regime.delta)}
    cp["grid"] = {
        "t_min": repr(m.grid.t_min),
        "t_max": repr(m.grid.t_max),
        "n_points": str(m.grid.n_points),
    }
    cp["bath"] = {"beta": "zero" if m.bath.beta is None else repr(m.bath.beta)}
    cp["init"] = {
        "rho00": repr(m.init.rho00),
        "rho01_re": repr(m.init.rho01.real),
        "rho01_im": repr(m.init.rho01.imag),
        "omega0": repr(m.init.omega0),
    }
    cp["splits"] = {
        "n_train": str(m.sizes.n_train),
        "n_valid": str(m.sizes.n_valid),
        "n_test": str(m.sizes.n_test),
    }
    out = io.StringIO()
    cp.write(out)
    return out.getvalue()


def _parse_manifest(text: str) -> tuple:
    cp = configparser.ConfigParser()
    cp.read_string(text)
    version = cp.getint("dataset", "format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(
            f"dataset format_version {version}, this build reads {FORMAT_VERSION}"
        )
    regime = SamplingRegime(
        RegimeKind(cp.get("regime", "kind")), cp.getfloat("regime", "delta")
    )
    grid = TimeGrid(
        t_min=cp.getfloat("grid", "t_min"),
        t_max=cp.getfloat("grid", "t_max"),
        n_points=cp.getint("grid", "n_points"),
    )
    beta_raw = cp.get("bath", "beta")
    bath = BathSpec(None if beta_raw == "zero" else float(beta_raw))
    init = QubitInit(
        rho00=cp.getfloat("init", "rho00"),
        rho01=complex(cp.getfloat("init", "rho01_re"), cp.getfloat("init", "rho01_im")),
        omega0=cp.getfloat("init", "omega0"),
    )
    sizes = SplitSizes(
        n_train=cp.getint("splits", "n_train"),
        n_valid=cp.getint("splits", "n_valid"),
        n_test=cp.getint("splits", "n_test"),
    )
    manifest = DatasetManifest(
        regime=regime, grid=grid, bath=bath, init=init, sizes=sizes,
        master_seed=cp.getint("dataset", "master_seed"), format_version=version,
    )
    return manifest, cp.get("dataset", "checksum")


def _rows(ds: LabeledDataset) -> np.ndarray:
    n = ds.manifest.grid.n_points
    total = ds.manifest.sizes.total
    rows = np.empty((total, 4 + n), dtype="<f8")
    r = 0
    for name in SPLIT_NAMES:
        for ex in ds.split(name):
            s, eta, omega_c = ex.targets
            rows[r, 0:4] = (s, eta, omega_c, float(int(ex.class_label)))
            rows[r, 4:] = ex.trajectory.values
            r += 1
    return rows


def save_dataset(ds: LabeledDataset, path) -> str:
    """Write the dataset archive; returns the payload checksum (hex)."""
    payload = _rows(ds).tobytes()
    checksum = _checksum(payload)
    manifest = _manifest_text(ds.manifest, checksum).encode("utf-8")
    header = f"{_HEADER_PREFIX} format={FORMAT_VERSION} manifest_bytes={len(manifest)}\n"
    try:
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(manifest)
            fh.write(payload)
    except OSError as exc:
        raise IoFailure(f"cannot write dataset to {path}: {exc}") from exc
    return checksum


def load_dataset(path) -> LabeledDataset:
    try:
        with open(path, "rb") as fh:
            first = fh.readline().decode("ascii", errors="replace").strip()
            fields = dict(
                kv.split("=", 1) for kv in first.split()[1:] if "=" in kv
            ) if first.startswith(_HEADER_PREFIX) else None
            if fields is None:
                raise CorruptFile(f"{path}: not an ohmicnet dataset file")
            if int(fields.get("format", -1)) != FORMAT_VERSION:
                raise VersionMismatch(
                    f"{path}: format {fields.get('format')}, expected {FORMAT_VERSION}"
                )
            manifest_bytes = int(fields["manifest_bytes"])
            manifest_text = fh.read(manifest_bytes).decode("utf-8")
            payload = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read dataset from {path}: {exc}") from exc

    manifest, checksum = _parse_manifest(manifest_text)
    if _checksum(payload) != checksum:
        raise CorruptFile(f"{path}: payload checksum mismatch (truncated or corrupt)")

    n = manifest.grid.n_points
    row_len = 4 + n
    rows = np.frombuffer(payload, dtype="<f8")
    if rows.shape[0] != manifest.sizes.total * row_len:
        raise CorruptFile(f"{path}: payload size inconsistent with manifest")
    rows = rows.reshape(manifest.sizes.total, row_len)

    splits = []
    r = 0
    for split_id, count in enumerate(manifest.sizes.as_tuple()):
        examples = []
        for index in range(count):
            row = rows[r]
            params = SpectralParams(s=row[0], eta=row[1], omega_c=row[2])
            traj = Trajectory(
                grid=manifest.grid, observable=Observable.SIGMA_X,
                values=row[4:].copy(), params=params,
                bath=manifest.bath, init=manifest.init,
            )
            examples.append(
                LabeledExample(
                    trajectory=traj,
                    class_label=OhmicityClass(int(row[3])),
                    targets=(row[0], row[1], row[2]),
                    example_seed=mix_seed(manifest.master_seed, split_id, index),
                )
            )
            r += 1
        splits.append(tuple(examples))
    return LabeledDataset(manifest=manifest, train=splits[0], valid=splits[1], test=splits[2])


def export_csv(ds: LabeledDataset, path) -> None:
    """One row per example; floats at 17 significant digits (round-trip safe)."""
    n = ds.manifest.grid.n_points
    header = ["split", "index", "class", "s", "eta", "omega_c"] + [
        f"v{i}" for i in range(n)
    ]
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for name in SPLIT_NAMES:
                for index, ex in enumerate(ds.split(name)):
                    writer.writerow(
                        [name, index, ex.class_label.name.lower()]
                        + [f"{v:.17g}" for v in ex.targets]
                        + [f"{v:.17g}" for v in ex.trajectory.values]
                    )
    except OSError as exc:
        raise IoFailure(f"cannot write CSV to {path}: {exc}") from exc


def features_and_labels(split, task: str):
    """(X, Y) arrays for a split: DFT features plus one-hot classes or raw targets.

    task is 'classification' (Y one-hot over the 3 classes), 's_only'
    (Y = s column) or 'all_three' (Y = (s, eta, omega_c)).
    """
    from .fourier import featurize_batch

    values = np.stack([ex.trajectory.values for ex in split])
    x = featurize_batch(values)
    if task == "classification":
        y = np.zeros((len(split), 3))
        for i, ex in enumerate(split):
            y[i, int(ex.class_label)] = 1.0
    elif task == "s_only":
        y = np.array([[ex.targets[0]] for ex in split])
    elif task == "all_three":
        y = np.array([list(ex.targets) for ex in split])
    else:
        raise ValueError(f"unknown task {task!r}")
    return x, y
