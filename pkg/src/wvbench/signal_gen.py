"""Synthetic counting campaigns: time-binned Poisson data for every setting.

A campaign sweeps the path phase chi over a grid and records, for each chi,
up to five detector channels as histograms over one rotation period:

* ``modulated``   the finite-contrast forward signal carrying the weak value
* ``empty_x``     rotator off, forward fringe (time-flat at each chi)
* ``empty_y``     rotator off, fringe read with a quarter-period phase shift
* ``path1_only``  path 2 blocked: the rotator's own intensity modulation
* ``path2_only``  path 1 blocked: flat reference

Counts are Poisson draws with expectation intensity(t_bin) * exposure,
where the per-setting exposure is chosen so the expected total counts of
the setting equal ``counts_per_setting``.  The exposure is stored next to
the counts, so ``counts / exposure`` estimates the intensity on the same
absolute scale the forward model uses.

Randomness is reproducible: every (chi, channel) pair draws from its own
numpy SeedSequence substream derived from the campaign seed, so results do
not depend on generation order or thread count (WVB_THREADS).
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .interferometer import (
    ProtocolParams,
    empty_interferogram,
    isolated_path_intensities,
    real_intensity,
)

__all__ = [
    "CHANNELS",
    "CSV_HEADER",
    "ConfigError",
    "ChannelFlags",
    "ExperimentConfig",
    "BinnedCounts",
    "default_chi_grid",
    "default_config",
    "fold_time",
    "bin_centers",
    "expected_intensity",
    "generate_dataset",
    "write_campaign_csv",
    "load_campaign_csv",
    "config_to_dict",
    "config_from_dict",
    "load_config",
]

CHANNELS = ("modulated", "empty_x", "empty_y", "path1_only", "path2_only")

CSV_HEADER = ["chi_rad", "channel", "bin_center_s", "counts", "exposure"]

#: quarter-period fringe shift that turns the empty_x pattern into empty_y
EMPTY_Y_PHASE = np.pi / 2


class ConfigError(ValueError):
    """A configuration field failed validation; ``.field`` names it."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ChannelFlags:
    """Which detector channels a campaign records."""

    modulated: bool = True
    empty_x: bool = True
    empty_y: bool = True
    path1_only: bool = True
    path2_only: bool = True

    def enabled(self) -> tuple[str, ...]:
        return tuple(name for name in CHANNELS if getattr(self, name))


def default_chi_grid(n: int = 12) -> tuple[float, ...]:
    """n equally spaced phase settings covering [0, 2*pi)."""
    return tuple(2.0 * np.pi * k / n for k in range(n))


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one counting campaign.

    ``protocol.chi`` is a placeholder; the generator replaces it with each
    entry of ``chi_grid`` in turn.  Analysis knobs (exclusion threshold,
    systematic alpha fraction, minimum usable contrast, verification bound)
    ride along so a campaign is self-describing.
    """

    protocol: ProtocolParams = ProtocolParams()
    chi_grid: tuple[float, ...] = default_chi_grid()
    bins_per_period: int = 8
    counts_per_setting: float = 1e6
    seed: int = 12345
    datasets: ChannelFlags = ChannelFlags()
    background: float = 0.0
    noiseless: bool = False
    alpha_sys_rel: float = 0.02
    p_min: float = 0.01
    eta_min: float = 0.05
    rms_bound: float = 0.05

    def __post_init__(self) -> None:
        if not isinstance(self.protocol, ProtocolParams):
            raise ConfigError("protocol", "must be ProtocolParams")
        if len(self.chi_grid) == 0:
            raise ConfigError("chi_grid", "must not be empty")
        for x in self.chi_grid:
            if not np.isfinite(x) or not 0.0 <= x < 2.0 * np.pi:
                raise ConfigError(
                    "chi_grid", f"entries must lie in [0, 2*pi), got {x!r}"
                )
        if len(set(self.chi_grid)) != len(self.chi_grid):
            raise ConfigError("chi_grid", "entries must be distinct")
        if int(self.bins_per_period) != self.bins_per_period or self.bins_per_period < 4:
            raise ConfigError(
                "bins_per_period", f"must be an integer >= 4, got {self.bins_per_period!r}"
            )
        if not np.isfinite(self.counts_per_setting) or self.counts_per_setting <= 0:
            raise ConfigError(
                "counts_per_setting", f"must be positive, got {self.counts_per_setting!r}"
            )
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed", f"must be a non-negative integer, got {self.seed!r}")
        if not np.isfinite(self.background) or self.background < 0:
            raise ConfigError("background", f"must be >= 0, got {self.background!r}")
        if not 0.0 <= self.alpha_sys_rel < 1.0:
            raise ConfigError("alpha_sys_rel", f"must lie in [0, 1), got {self.alpha_sys_rel!r}")
        if not 0.0 < self.p_min < 1.0:
            raise ConfigError("p_min", f"must lie in (0, 1), got {self.p_min!r}")
        if not 0.0 < self.eta_min < 1.0:
            raise ConfigError("eta_min", f"must lie in (0, 1), got {self.eta_min!r}")
        if not np.isfinite(self.rms_bound) or self.rms_bound <= 0:
            raise ConfigError("rms_bound", f"must be positive, got {self.rms_bound!r}")


def default_config(**overrides) -> ExperimentConfig:
    """ExperimentConfig with package defaults, selected fields overridden."""
    return dataclasses.replace(ExperimentConfig(), **overrides)


@dataclass(frozen=True)
class BinnedCounts:
    """One histogram: counts per time bin for a single (chi, channel) setting.

    ``exposure`` converts counts to intensity (intensity ~ counts/exposure);
    in noiseless campaigns ``counts`` holds the Poisson expectations and is
    not integer-valued.
    """

    chi: float
    channel: str
    bin_centers: np.ndarray
    counts: np.ndarray
    exposure: float

    def __post_init__(self) -> None:
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        centers = np.asarray(self.bin_centers, dtype=float)
        counts = np.asarray(self.counts, dtype=float)
        if centers.ndim != 1 or centers.shape != counts.shape or centers.size == 0:
            raise ValueError("bin_centers and counts must be matching 1-d arrays")
        if np.any(np.diff(centers) <= 0):
            raise ValueError("bin_centers must be strictly increasing")
        if not np.all(np.isfinite(counts)) or np.any(counts < 0):
            raise ValueError("counts must be finite and non-negative")
        if not np.isfinite(self.exposure) or self.exposure <= 0:
            raise ValueError(f"exposure must be positive, got {self.exposure!r}")
        centers.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "bin_centers", centers)
        object.__setattr__(self, "counts", counts)

    def intensity_estimate(self) -> tuple[np.ndarray, np.ndarray]:
        """(value, sigma) per bin on the intensity scale, Poisson errors."""
        value = self.counts / self.exposure
        sigma = np.sqrt(np.maximum(self.counts, 1.0)) / self.exposure
        return value, sigma


def fold_time(t: float, omega: float, bins_per_period: int) -> int:
    """Bin index of an arrival time folded into one period of the drive.

    Bins are half-open: an edge time belongs to the bin it opens, so t = 0
    and t = 1/omega both map to bin 0.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    if bins_per_period < 1:
        raise ValueError("bins_per_period must be >= 1")
    period = 1.0 / omega
    frac = (t % period) / period
    idx = int(frac * bins_per_period)
    return idx % bins_per_period


def bin_centers(omega: float, bins_per_period: int) -> np.ndarray:
    """Mid-bin times covering exactly one drive period."""
    period = 1.0 / omega
    return (np.arange(bins_per_period) + 0.5) * period / bins_per_period


def expected_intensity(channel: str, t: np.ndarray, params: ProtocolParams) -> np.ndarray:
    """Model intensity of one channel at the campaign's protocol settings."""
    if channel == "modulated":
        return np.asarray(real_intensity(t, params), dtype=float)
    if channel == "empty_x":
        return np.full(t.shape, empty_interferogram(params.chi, params.eta, 0.0))
    if channel == "empty_y":
        return np.full(t.shape, empty_interferogram(params.chi, params.eta, EMPTY_Y_PHASE))
    if channel == "path1_only":
        i1, _ = isolated_path_intensities(t, params)
        return np.asarray(i1, dtype=float)
    if channel == "path2_only":
        _, i2 = isolated_path_intensities(t, params)
        return np.asarray(i2, dtype=float)
    raise ValueError(f"unknown channel {channel!r}")


def _threads_from_env(explicit: int | None) -> int:
    if explicit is not None:
        return max(1, int(explicit))
    raw = os.environ.get("WVB_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def generate_dataset(
    config: ExperimentConfig, *, threads: int | None = None
) -> list[BinnedCounts]:
    """Synthesize every enabled (chi, channel) histogram of a campaign.

    Deterministic for a given config: each setting uses the substream
    ``SeedSequence(seed, spawn_key=(chi_index, channel_index))`` with the
    channel index taken from the full CHANNELS tuple, so the draw for one
    setting never depends on which other settings are enabled, on ordering,
    or on the thread count (``threads`` argument, else WVB_THREADS, else 1).
    """
    t = bin_centers(config.protocol.omega, config.bins_per_period)
    jobs: list[tuple[int, int, float, str]] = []
    for ci, chi in enumerate(config.chi_grid):
        for ki, channel in enumerate(CHANNELS):
            if getattr(config.datasets, channel):
                jobs.append((ci, ki, chi, channel))

    def run(job: tuple[int, int, float, str]) -> BinnedCounts:
        ci, ki, chi, channel = job
        params = dataclasses.replace(config.protocol, chi=chi)
        intensity = expected_intensity(channel, t, params) + config.background
        total = float(np.sum(intensity))
        exposure = config.counts_per_setting / total if total > 0 else config.counts_per_setting
        lam = intensity * exposure
        if config.noiseless:
            counts = lam
        else:
            seq = np.random.SeedSequence(entropy=config.seed, spawn_key=(ci, ki))
            counts = np.random.default_rng(seq).poisson(lam).astype(float)
        return BinnedCounts(
            chi=chi, channel=channel, bin_centers=t, counts=counts, exposure=exposure
        )

    n_threads = _threads_from_env(threads)
    if n_threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_campaign_csv(datasets: list[BinnedCounts], path: str | Path) -> None:
    """Write histograms as rows of chi_rad,channel,bin_center_s,counts,exposure."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for data in datasets:
            for center, count in zip(data.bin_centers, data.counts):
                writer.writerow(
                    [_fmt(data.chi), data.channel, _fmt(center), _fmt(count), _fmt(data.exposure)]
                )


def load_campaign_csv(paths: list[str | Path] | str | Path) -> list[BinnedCounts]:
    """Read one or more campaign CSV files back into BinnedCounts lists."""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    groups: dict[tuple[float, str], list[tuple[float, float, float]]] = {}
    for path in paths:
        with Path(path).open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != CSV_HEADER:
                raise ValueError(f"{path}: unexpected header {header!r}")
            for row in reader:
                if not row:
                    continue
                chi, channel = float(row[0]), row[1]
                groups.setdefault((chi, channel), []).append(
                    (float(row[2]), float(row[3]), float(row[4]))
                )
    out = []
    for (chi, channel), rows in groups.items():
        rows.sort(key=lambda r: r[0])
        centers = np.array([r[0] for r in rows])
        counts = np.array([r[1] for r in rows])
        exposures = {r[2] for r in rows}
        if len(exposures) != 1:
            raise ValueError(
                f"inconsistent exposure within setting chi={chi!r} channel={channel!r}"
            )
        out.append(
            BinnedCounts(
                chi=chi,
                channel=channel,
                bin_centers=centers,
                counts=counts,
                exposure=exposures.pop(),
            )
        )
    out.sort(key=lambda d: (d.chi, CHANNELS.index(d.channel)))
    return out


def config_to_dict(config: ExperimentConfig) -> dict:
    """JSON-ready dict mirroring the ExperimentConfig field names."""
    return {
        "protocol": dataclasses.asdict(config.protocol),
        "chi_grid": list(config.chi_grid),
        "bins_per_period": int(config.bins_per_period),
        "counts_per_setting": config.counts_per_setting,
        "seed": int(config.seed),
        "datasets": dataclasses.asdict(config.datasets),
        "background": config.background,
        "noiseless": config.noiseless,
        "alpha_sys_rel": config.alpha_sys_rel,
        "p_min": config.p_min,
        "eta_min": config.eta_min,
        "rms_bound": config.rms_bound,
    }


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Validate a JSON document and build an ExperimentConfig from it."""
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "top level must be a JSON object")
    known = set(config_to_dict(ExperimentConfig()))
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration field")
    kwargs: dict = {}
    if "protocol" in doc:
        pdoc = doc["protocol"]
        if not isinstance(pdoc, dict):
            raise ConfigError("protocol", "must be an object")
        allowed = {"chi", "alpha", "omega", "delta", "eta"}
        bad = set(pdoc) - allowed
        if bad:
            raise ConfigError(f"protocol.{sorted(bad)[0]}", "unknown protocol field")
        try:
            kwargs["protocol"] = ProtocolParams(**pdoc)
        except (TypeError, ValueError) as exc:
            raise ConfigError("protocol", str(exc)) from exc
    if "chi_grid" in doc:
        try:
            kwargs["chi_grid"] = tuple(float(x) for x in doc["chi_grid"])
        except (TypeError, ValueError) as exc:
            raise ConfigError("chi_grid", str(exc)) from exc
    if "datasets" in doc:
        ddoc = doc["datasets"]
        if not isinstance(ddoc, dict) or set(ddoc) - set(CHANNELS):
            raise ConfigError("datasets", f"must be an object with keys from {CHANNELS}")
        kwargs["datasets"] = ChannelFlags(**{k: bool(v) for k, v in ddoc.items()})
    for name in (
        "bins_per_period",
        "counts_per_setting",
        "seed",
        "background",
        "noiseless",
        "alpha_sys_rel",
        "p_min",
        "eta_min",
        "rms_bound",
    ):
        if name in doc:
            kwargs[name] = doc[name]
    return ExperimentConfig(**kwargs)


def load_config(path: str | Path) -> ExperimentConfig:
    """Load a config from a JSON file; accepts a run manifest as well.

    A manifest is recognized by its "config" key, so re-running a past
    simulation is `wvbench simulate --config <old>/manifest.json ...`.
    """
    with Path(path).open() as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<document>", f"invalid JSON: {exc}") from exc
    if isinstance(doc, dict) and "config" in doc and "protocol" not in doc:
        doc = doc["config"]
    return config_from_dict(doc)
