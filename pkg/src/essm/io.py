"""Dataset files, configuration files, and run summaries.

Layout on disk:

* dataset: one CSV per epoch (T rows, p columns, header of channel names)
  plus an INI manifest naming fs and the ordered epoch files;
* config: INI with one [band:NAME] section per band and optional [fit] and
  [simulation] sections;
* run summary: JSON echoing the effective configuration, estimates, and
  timings.

Values are written with 17 significant digits so save/load roundtrips are
lossless.
"""

from __future__ import annotations

import configparser
import dataclasses
import json
import os
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from .errors import IngestionError
from .estimation import FitConfig
from .model import BandSpec, EpochSeries
from .simulation import SimSpec

FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class DatasetManifest:
    """Ordered epoch files plus the metadata shared by all of them."""

    epoch_files: Tuple[str, ...]
    fs: float
    channel_names: Tuple[str, ...]

    def __post_init__(self):
        if len(self.epoch_files) == 0:
            raise ValueError("manifest lists no epoch files")
        if self.fs <= 0:
            raise ValueError("fs must be positive")
        if len(self.channel_names) == 0:
            raise ValueError("manifest lists no channels")


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration: bands always, fit/simulation when present."""

    bands: Tuple[BandSpec, ...]
    fit: FitConfig
    sim: SimSpec | None


# --- datasets ---------------------------------------------------------------


def save_dataset(
    epochs: Sequence[EpochSeries], out_dir: str, stem: str = "epoch"
) -> str:
    """Write epoch CSVs plus a manifest; returns the manifest path."""
    if len(epochs) == 0:
        raise ValueError("no epochs to save")
    first = epochs[0]
    names = first.channel_names or tuple(
        f"ch{i + 1:02d}" for i in range(first.p)
    )
    os.makedirs(out_dir, exist_ok=True)
    width = max(3, len(str(len(epochs))))
    files = []
    for r, epoch in enumerate(epochs, start=1):
        if epoch.p != first.p or epoch.fs != first.fs:
            raise ValueError(f"epoch {r} has inconsistent shape or fs")
        fname = f"{stem}_{r:0{width}d}.csv"
        np.savetxt(
            os.path.join(out_dir, fname),
            epoch.data.T,
            delimiter=",",
            header=",".join(names),
            comments="",
            fmt=FLOAT_FMT,
        )
        files.append(fname)
    manifest = configparser.ConfigParser()
    manifest["dataset"] = {
        "fs": FLOAT_FMT % first.fs,
        "channels": ", ".join(names),
        "epochs": "\n" + "\n".join(files),
    }
    path = os.path.join(out_dir, "manifest.ini")
    with open(path, "w") as fh:
        manifest.write(fh)
    return path


def load_manifest(path: str) -> DatasetManifest:
    if not os.path.exists(path):
        raise IngestionError(f"manifest not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
        section = parser["dataset"]
        fs = float(section["fs"])
        channels = tuple(
            name.strip() for name in section["channels"].split(",")
        )
        files = tuple(
            line.strip()
            for line in section["epochs"].splitlines()
            if line.strip()
        )
    except (configparser.Error, KeyError, ValueError) as exc:
        raise IngestionError(f"bad manifest {path}: {exc}") from exc
    try:
        return DatasetManifest(files, fs, channels)
    except ValueError as exc:
        raise IngestionError(f"bad manifest {path}: {exc}") from exc


def _load_epoch_csv(path: str, channels: Tuple[str, ...]) -> np.ndarray:
    if not os.path.exists(path):
        raise IngestionError(f"epoch file not found: {path}")
    try:
        raw = np.genfromtxt(path, delimiter=",", skip_header=1, ndmin=2)
    except ValueError as exc:
        raise IngestionError(f"{path}: ragged or unreadable rows ({exc})")
    if raw.shape[1] != len(channels):
        raise IngestionError(
            f"{path}: expected {len(channels)} columns, found {raw.shape[1]}"
        )
    bad = ~np.isfinite(raw)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise IngestionError(
            f"{path}: non-numeric or non-finite value at data row "
            f"{row + 1}, column {col + 1} ({channels[col]})"
        )
    return raw.T


def load_dataset(manifest_path: str) -> list[EpochSeries]:
    """Load every epoch named by a manifest, validating as it goes."""
    manifest = load_manifest(manifest_path)
    base = os.path.dirname(os.path.abspath(manifest_path))
    epochs = []
    T = None
    for fname in manifest.epoch_files:
        data = _load_epoch_csv(os.path.join(base, fname), manifest.channel_names)
        if T is None:
            T = data.shape[1]
        elif data.shape[1] != T:
            raise IngestionError(
                f"{fname}: {data.shape[1]} rows, other epochs have {T}"
            )
        epochs.append(
            EpochSeries(data, manifest.fs, channel_names=manifest.channel_names)
        )
    return epochs


# --- configs ----------------------------------------------------------------

_BAND_PREFIX = "band:"


def parse_config(text: str) -> RunConfig:
    """Parse a config INI string into bands, fit settings, and an optional
    simulation spec. Unknown keys are rejected to catch typos.
    """
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ValueError(f"bad config: {exc}") from exc

    bands = []
    for name in parser.sections():
        if not name.startswith(_BAND_PREFIX):
            continue
        section = parser[name]
        extra = set(section) - {"center_freq_hz", "rho_min", "rho_max"}
        if extra:
            raise ValueError(f"unknown keys in [{name}]: {sorted(extra)}")
        bands.append(
            BandSpec(
                name=name[len(_BAND_PREFIX):],
                center_freq_hz=section.getfloat("center_freq_hz"),
                rho_min=section.getfloat("rho_min"),
                rho_max=section.getfloat("rho_max"),
            )
        )
    if not bands:
        raise ValueError("config defines no [band:NAME] sections")
    bands = tuple(bands)

    fit_kwargs = {}
    if parser.has_section("fit"):
        section = parser["fit"]
        # field annotations are strings under deferred evaluation
        fields = {f.name: str(f.type) for f in dataclasses.fields(FitConfig)}
        for key in section:
            if key not in fields:
                raise ValueError(f"unknown key in [fit]: {key}")
            fit_kwargs[key] = (
                section.getint(key)
                if fields[key] == "int"
                else section.getfloat(key)
            )
    fit = FitConfig(**fit_kwargs)

    sim = None
    if parser.has_section("simulation"):
        section = parser["simulation"]
        known = {
            "rho_start", "rho_increment", "sigma2", "tau2", "n_channels",
            "n_times", "n_epochs", "fs", "rng_seed",
        }
        optional = {"tau2_increment"}
        extra = set(section) - known - optional
        if extra:
            raise ValueError(f"unknown keys in [simulation]: {sorted(extra)}")
        missing = known - set(section)
        if missing:
            raise ValueError(f"[simulation] missing keys: {sorted(missing)}")
        rho_start = np.array(
            [float(v) for v in section["rho_start"].split(",")]
        )
        sim = SimSpec(
            bands=bands,
            rho_start=rho_start,
            rho_increment=section.getfloat("rho_increment"),
            sigma2=section.getfloat("sigma2"),
            tau2=section.getfloat("tau2"),
            n_channels=section.getint("n_channels"),
            n_times=section.getint("n_times"),
            n_epochs=section.getint("n_epochs"),
            fs=section.getfloat("fs"),
            rng_seed=section.getint("rng_seed"),
            tau2_increment=section.getfloat("tau2_increment", 0.0),
        )
    return RunConfig(bands, fit, sim)


def config_as_dict(config: RunConfig) -> dict:
    """Effective configuration with every default filled in, for echoing."""
    out = {
        "bands": [dataclasses.asdict(b) for b in config.bands],
        "fit": dataclasses.asdict(config.fit),
    }
    if config.sim is not None:
        sim = dataclasses.asdict(config.sim)
        sim.pop("bands")
        sim["rho_start"] = list(np.asarray(config.sim.rho_start, float))
        sim["mixing"] = (
            None
            if config.sim.mixing is None
            else config.sim.mixing.values.tolist()
        )
        out["simulation"] = sim
    return out


# --- tabular output ---------------------------------------------------------


def write_rows_csv(path: str, header: Sequence[str], rows: Iterable) -> None:
    """Write rows of mixed str/number cells; floats get FLOAT_FMT."""

    def cell(v) -> str:
        if isinstance(v, (bool, np.bool_)):
            return str(bool(v))
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, (float, np.floating)):
            return FLOAT_FMT % v
        return str(v)

    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(cell(v) for v in row) + "\n")


def write_run_summary(path: str, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def load_run_summary(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)
