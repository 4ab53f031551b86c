"""JSON run-configuration parsing with strict validation.

Unknown keys are rejected and all probabilities are range-checked at load
time.  Environment variables prefixed WVQKD_ (SEED, PHOTONS, MARGIN, EVE,
OUT, WORKERS) override the corresponding file values.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .noise import ChannelNoise, DetectorModel
from .protocol import ProtocolConfig
from .trajectory import EveKind, EveModel, WeakMeasurementConfig

ENV_PREFIX = "WVQKD_"

_TOP_KEYS = {
    "photons",
    "noise",
    "weak_measurement",
    "detector",
    "dark",
    "eve",
    "seed",
    "margin",
    "workers",
    "dark_calibration_split",
    "sweep",
    "output",
}
_NOISE_KEYS = {"p_a", "p_b"}
_WM_KEYS = {"g", "sigma"}
_DETECTOR_KEYS = {"r_d1", "r_d2", "t", "eta", "kappa", "l", "c"}
_SWEEP_KEYS = {"axes", "cell_cap", "force"}
_AXIS_KEYS = {"name", "start", "stop", "step"}
_OUTPUT_KEYS = {"directory", "include_keys", "dump_records"}

SWEEP_AXES = ("p_channel", "p_a", "p_b", "d", "g_over_sigma", "photons")
DEFAULT_CELL_CAP = 1_000_000


class ConfigError(ValueError):
    """Malformed run configuration."""


@dataclass(frozen=True)
class SweepAxis:
    name: str
    start: float
    stop: float
    step: float

    def values(self) -> list[float]:
        if self.step <= 0:
            raise ConfigError(f"axis {self.name}: step must be positive")
        if self.stop < self.start:
            raise ConfigError(f"axis {self.name}: stop < start")
        out = []
        k = 0
        # Grid by index, not repeated addition, so endpoints are stable.
        while True:
            v = self.start + k * self.step
            if v > self.stop + 1e-12:
                break
            out.append(round(v, 12))
            k += 1
        return out


@dataclass(frozen=True)
class SweepSpec:
    axes: tuple[SweepAxis, ...]
    cell_cap: int = DEFAULT_CELL_CAP
    force: bool = False

    def grid_size(self) -> int:
        n = 1
        for ax in self.axes:
            n *= len(ax.values())
        return n


@dataclass
class RunConfig:
    """Validated run configuration: protocol parameters, optional sweep
    block, output options."""

    photons: int
    noise: ChannelNoise
    wm: WeakMeasurementConfig
    eve: EveModel
    detector: DetectorModel | None
    dark: float | None
    seed: int
    margin: float
    workers: int
    dark_calibration_split: bool
    sweep: SweepSpec | None = None
    out_dir: Path = field(default_factory=lambda: Path("."))
    include_keys: bool = True
    dump_records: bool = False

    def protocol_config(self, photons: int | None = None) -> ProtocolConfig:
        n = self.photons if photons is None else photons
        if n <= 0:
            raise ConfigError("photons must be positive for a simulation run")
        return ProtocolConfig(
            block_size=n,
            noise=self.noise,
            wm=self.wm,
            eve=self.eve,
            detector=self.detector,
            dark=self.dark,
            seed=self.seed,
            margin=self.margin,
            workers=self.workers,
            dark_calibration_split=self.dark_calibration_split,
        )

    def with_updates(self, **kwargs) -> "RunConfig":
        return replace(self, **kwargs)


def _require_keys(data: dict, allowed: set, where: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _check_prob(value, name: str, hi: float = 1.0) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None
    if not 0.0 <= v <= hi:
        raise ConfigError(f"{name}={v} outside [0, {hi}]")
    return v


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a JSON object")
    _require_keys(data, _TOP_KEYS, "configuration")

    noise_data = data.get("noise", {})
    _require_keys(noise_data, _NOISE_KEYS, "noise")
    noise = ChannelNoise(
        p_a=_check_prob(noise_data.get("p_a", 0.0), "noise.p_a", 0.5),
        p_b=_check_prob(noise_data.get("p_b", 0.0), "noise.p_b", 0.5),
    )

    wm_data = data.get("weak_measurement", {})
    _require_keys(wm_data, _WM_KEYS, "weak_measurement")
    try:
        wm = WeakMeasurementConfig(
            g=float(wm_data.get("g", 0.1)), sigma=float(wm_data.get("sigma", 1.0))
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    detector = None
    if data.get("detector") is not None:
        det_data = data["detector"]
        _require_keys(det_data, _DETECTOR_KEYS, "detector")
        try:
            detector = DetectorModel(**{k: float(v) for k, v in det_data.items()})
        except ValueError as exc:
            raise ConfigError(f"detector: {exc}") from None

    dark = None
    if data.get("dark") is not None:
        dark = _check_prob(data["dark"], "dark")
        if detector is not None:
            raise ConfigError("give either a detector block or a direct dark value, not both")

    eve_name = data.get("eve", "none")
    try:
        eve = EveModel(EveKind(eve_name))
    except ValueError:
        raise ConfigError(
            f"eve={eve_name!r} not one of {[k.value for k in EveKind]}"
        ) from None

    sweep = None
    if data.get("sweep") is not None:
        sweep_data = data["sweep"]
        _require_keys(sweep_data, _SWEEP_KEYS, "sweep")
        axes = []
        for ax in sweep_data.get("axes", []):
            _require_keys(ax, _AXIS_KEYS, "sweep.axes[]")
            missing = _AXIS_KEYS - set(ax)
            if missing:
                raise ConfigError(f"sweep axis missing {sorted(missing)}")
            if ax["name"] not in SWEEP_AXES:
                raise ConfigError(f"sweep axis {ax['name']!r} not one of {SWEEP_AXES}")
            axes.append(
                SweepAxis(ax["name"], float(ax["start"]), float(ax["stop"]), float(ax["step"]))
            )
        if not axes:
            raise ConfigError("sweep requires at least one axis")
        names = [ax.name for ax in axes]
        if len(set(names)) != len(names):
            raise ConfigError("sweep axes must be distinct")
        sweep = SweepSpec(
            tuple(axes),
            cell_cap=int(sweep_data.get("cell_cap", DEFAULT_CELL_CAP)),
            force=bool(sweep_data.get("force", False)),
        )

    output = data.get("output", {})
    _require_keys(output, _OUTPUT_KEYS, "output")

    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    photons = data.get("photons", 0)
    if not isinstance(photons, int) or isinstance(photons, bool) or photons < 0:
        raise ConfigError("photons must be a non-negative integer")

    return RunConfig(
        photons=photons,
        noise=noise,
        wm=wm,
        eve=eve,
        detector=detector,
        dark=dark,
        seed=seed,
        margin=float(data.get("margin", 3.0)),
        workers=int(data.get("workers", 1)),
        dark_calibration_split=bool(data.get("dark_calibration_split", False)),
        sweep=sweep,
        out_dir=Path(output.get("directory", ".")),
        include_keys=bool(output.get("include_keys", True)),
        dump_records=bool(output.get("dump_records", False)),
    )


def apply_env_overrides(data: dict, env: dict | None = None) -> dict:
    """Fold WVQKD_* environment variables into a raw config dict."""
    env = os.environ if env is None else env
    out = dict(data)
    try:
        if env.get(ENV_PREFIX + "SEED"):
            out["seed"] = int(env[ENV_PREFIX + "SEED"])
        if env.get(ENV_PREFIX + "PHOTONS"):
            out["photons"] = int(env[ENV_PREFIX + "PHOTONS"])
        if env.get(ENV_PREFIX + "MARGIN"):
            out["margin"] = float(env[ENV_PREFIX + "MARGIN"])
        if env.get(ENV_PREFIX + "WORKERS"):
            out["workers"] = int(env[ENV_PREFIX + "WORKERS"])
    except ValueError as exc:
        raise ConfigError(f"bad {ENV_PREFIX}* environment override: {exc}") from None
    if env.get(ENV_PREFIX + "EVE"):
        out["eve"] = env[ENV_PREFIX + "EVE"]
    if env.get(ENV_PREFIX + "OUT"):
        out["output"] = {**out.get("output", {}), "directory": env[ENV_PREFIX + "OUT"]}
    return out


def load_config(path: str | Path, env: dict | None = None) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    return parse_config(apply_env_overrides(raw, env))
