"""Layer-series ingestion, spiking filtering, and anomaly flagging.

The detection scheme filters the defective and the healthy build through
identically configured spiking populations, takes the per-layer percent
deviation between the two filtered series, and flags layers whose
deviation dips below a threshold. Junction spikes are clipped by the
population radius rather than smoothed, so they cannot mask the dips a
power drop leaves behind.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .ensembles import Ensemble, EnsembleConfig, build_ensemble
from .errors import ConfigError, DataError
from .simulator import SimResult, simulate_cascade

SENSORS = ("PD1", "PD2", "BD")
PATCH_LOCATIONS = ("BL", "BR", "TL", "TR")

CONFIG_KEYS = ("neurons", "radius", "dt", "presentation_time", "tau_in", "tau_out", "seed", "stages")


@dataclass(frozen=True)
class SignalSeries:
    """Per-layer mean sensor values for one build and one sensor channel."""

    sensor: str
    condition: str  # "healthy" | "defective"
    layers: np.ndarray
    values: np.ndarray
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        layers = np.asarray(self.layers, dtype=np.int64)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "values", values)
        if layers.shape != values.shape or layers.ndim != 1:
            raise DataError("layers and values must be 1-D arrays of equal length")
        if layers.size == 0:
            raise DataError("series must contain at least one layer")
        if np.any(np.diff(layers) <= 0):
            raise DataError("layer numbers must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise DataError("series values must be finite")

    def value_map(self) -> dict[int, float]:
        return {int(l): float(v) for l, v in zip(self.layers, self.values)}

    def layer_index(self, layer: int) -> int:
        idx = np.searchsorted(self.layers, layer)
        if idx >= self.layers.size or self.layers[idx] != layer:
            raise DataError(f"layer {layer} is not in the series")
        return int(idx)


def load_layer_series(
    path,
    schema: tuple[str, str] = ("layer", "value"),
    sensor: str = "PD1",
    condition: str = "healthy",
) -> SignalSeries:
    """Parse a layer/value CSV into a validated, layer-sorted series.

    Lines starting with '#' are treated as comments. Errors name the
    offending physical row (1-based, comments and header included).
    """
    layer_col, value_col = schema
    path = Path(path)
    if not path.exists():
        raise DataError(f"input file does not exist: {path}")
    header: list[str] | None = None
    rows: list[tuple[int, float]] = []
    seen: dict[int, int] = {}
    with open(path, newline="") as fh:
        for row_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if header is None:
                header = cells
                for col in (layer_col, value_col):
                    if col not in header:
                        raise DataError(f"row {row_no}: missing column {col!r} in header {header}")
                li, vi = header.index(layer_col), header.index(value_col)
                continue
            if len(cells) != len(header):
                raise DataError(f"row {row_no}: expected {len(header)} cells, got {len(cells)}")
            try:
                layer_f = float(cells[li])
                layer = int(layer_f)
                if layer != layer_f:
                    raise ValueError
            except ValueError:
                raise DataError(f"row {row_no}: layer {cells[li]!r} is not an integer") from None
            try:
                value = float(cells[vi])
            except ValueError:
                raise DataError(f"row {row_no}: value {cells[vi]!r} is not numeric") from None
            if not math.isfinite(value) or value < 0:
                raise DataError(f"row {row_no}: value {value} must be finite and >= 0")
            if layer in seen:
                raise DataError(f"row {row_no}: duplicate layer {layer} (first seen at row {seen[layer]})")
            seen[layer] = row_no
            rows.append((layer, value))
    if header is None or not rows:
        raise DataError(f"{path}: no data rows found")
    rows.sort(key=lambda r: r[0])
    layers = np.array([r[0] for r in rows], dtype=np.int64)
    values = np.array([r[1] for r in rows])
    return SignalSeries(sensor=sensor, condition=condition, layers=layers, values=values,
                        metadata={"source": str(path)})


@dataclass(frozen=True)
class FilterConfig:
    """Knobs of the spiking filter network (JSON-serializable)."""

    neurons: int = 500
    radius: float = 1100.0
    dt: float = 0.001
    presentation_time: float = 0.01
    tau_in: float = 0.002
    tau_out: float = 0.002
    seed: int = 0
    stages: int = 1

    def __post_init__(self) -> None:
        if self.neurons < 1:
            raise ConfigError(f"neurons must be >= 1, got {self.neurons}")
        if not self.radius > 0:
            raise ConfigError(f"radius must be positive, got {self.radius}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not (self.tau_in > 0 and self.tau_out > 0):
            raise ConfigError(f"time constants must be positive, got {self.tau_in}, {self.tau_out}")
        if self.stages < 1:
            raise ConfigError(f"stages must be >= 1, got {self.stages}")
        if self.stages > self.neurons:
            raise ConfigError(f"cannot split {self.neurons} neurons over {self.stages} stages")
        ratio = self.presentation_time / self.dt
        if ratio < 0.5 or abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ConfigError(
                f"presentation_time {self.presentation_time} must be a positive "
                f"multiple of dt {self.dt}"
            )

    @property
    def presentation_steps(self) -> int:
        return round(self.presentation_time / self.dt)

    def stage_sizes(self) -> list[int]:
        base, extra = divmod(self.neurons, self.stages)
        return [base + (1 if s < extra else 0) for s in range(self.stages)]

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in CONFIG_KEYS}

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "FilterConfig":
        unknown = set(data) - set(CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown filter-config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "FilterConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise DataError(f"invalid filter-config JSON: {err}") from err
        if not isinstance(data, dict):
            raise DataError("filter config must be a JSON object")
        return cls.from_dict(data)


def build_filter_ensembles(cfg: FilterConfig) -> list[Ensemble]:
    """One population per stage, seeded deterministically from cfg.seed."""
    ensembles = []
    for s, size in enumerate(cfg.stage_sizes()):
        econf = EnsembleConfig(n_neurons=size, radius=cfg.radius)
        ensembles.append(build_ensemble(econf, seed=cfg.seed + s))
    return ensembles


def run_filter(series: SignalSeries, cfg: FilterConfig, record_rates: bool = False
               ) -> tuple[SignalSeries, SimResult]:
    """Filter a series through the spiking network; also return the raw run.

    Each layer value is held for presentation_time and the layer's filtered
    value is the decoded output at the last step of its window (the settled
    response). Inter-stage links reuse tau_out, so a two-stage cascade
    applies three filter passes in total.
    """
    ensembles = build_filter_ensembles(cfg)
    m = cfg.presentation_steps
    inputs = np.repeat(series.values, m)
    taus = [cfg.tau_in] + [cfg.tau_out] * cfg.stages
    result = simulate_cascade(ensembles, inputs, cfg.dt, taus, record_rates=record_rates)
    idx = np.arange(1, series.layers.size + 1) * m - 1
    filtered = SignalSeries(
        sensor=series.sensor,
        condition=series.condition,
        layers=series.layers,
        values=result.decoded[idx],
        metadata={**dict(series.metadata), "filtered": "snn", "filter_seed": cfg.seed,
                  "stages": cfg.stages},
    )
    return filtered, result


def snn_filter(series: SignalSeries, cfg: FilterConfig) -> SignalSeries:
    """Filter a layer series through the configured spiking network."""
    filtered, _ = run_filter(series, cfg)
    return filtered


def cascade_filter(series: SignalSeries, cfg: FilterConfig, stages: int) -> SignalSeries:
    """snn_filter with the population split into a chain of `stages` stages."""
    return snn_filter(series, replace(cfg, stages=stages))


@dataclass(frozen=True)
class DeviationSeries:
    """Signed percent deviation per layer, over the common layer domain.

    Layers where the healthy reference is too close to zero for a ratio to
    mean anything are listed in `undefined` and excluded from flagging.
    """

    layers: np.ndarray
    values: np.ndarray
    undefined: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        layers = np.asarray(self.layers, dtype=np.int64)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "values", values)
        if layers.shape != values.shape or layers.ndim != 1:
            raise DataError("layers and values must be 1-D arrays of equal length")

    def as_dict(self) -> dict[int, float]:
        return {int(l): float(v) for l, v in zip(self.layers, self.values)}


def percent_deviation(defective: SignalSeries, healthy: SignalSeries) -> DeviationSeries:
    """100 * (defective - healthy) / healthy per layer on the common domain.

    Power dips show up as negative deviations. Healthy values below 1e-9 of
    the series median are marked undefined instead of dividing by them.
    """
    common, di, hi = np.intersect1d(defective.layers, healthy.layers, return_indices=True)
    if common.size == 0:
        raise DataError("series have no overlapping layers")
    dv = defective.values[di]
    hv = healthy.values[hi]
    guard = 1e-9 * np.median(np.abs(hv))
    defined = np.abs(hv) > guard
    dev = 100.0 * (dv[defined] - hv[defined]) / hv[defined]
    return DeviationSeries(
        layers=common[defined],
        values=dev,
        undefined=tuple(int(l) for l in common[~defined]),
    )


@dataclass(frozen=True)
class FixedPolicy:
    """Flag layers whose deviation is at or below -threshold_pct."""

    threshold_pct: float

    def __post_init__(self) -> None:
        if not self.threshold_pct > 0:
            raise ConfigError(f"threshold must be positive, got {self.threshold_pct}")


@dataclass(frozen=True)
class AdaptivePolicy:
    """Threshold at k times the MAD of deviations over a calibration range.

    `calibration` is an inclusive (first, last) layer range known to be
    clean, typically the layers before the defect window; when omitted the
    first half of the deviation domain is used. A zero MAD falls back to
    the fixed min_threshold_pct.
    """

    k: float = 6.0
    calibration: tuple[int, int] | None = None
    min_threshold_pct: float = 5.0

    def __post_init__(self) -> None:
        if not self.k > 0:
            raise ConfigError(f"k must be positive, got {self.k}")
        if not self.min_threshold_pct > 0:
            raise ConfigError(f"min_threshold_pct must be positive, got {self.min_threshold_pct}")


@dataclass(frozen=True)
class DetectionMetrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class DetectionReport:
    flagged_layers: tuple[int, ...]
    deviations: DeviationSeries
    threshold_used: float
    policy: str
    calibration_layers: tuple[int, int] | None = None
    fallback_used: bool = False
    metrics: DetectionMetrics | None = None

    def to_dict(self) -> dict:
        out = {
            "flagged_layers": list(self.flagged_layers),
            "threshold_used": self.threshold_used,
            "policy": self.policy,
            "calibration_layers": list(self.calibration_layers) if self.calibration_layers else None,
            "fallback_used": self.fallback_used,
            "undefined_layers": list(self.deviations.undefined),
            "deviations": {str(l): v for l, v in self.deviations.as_dict().items()},
        }
        if self.metrics is not None:
            out["metrics"] = {
                "precision": self.metrics.precision,
                "recall": self.metrics.recall,
                "f1": self.metrics.f1,
            }
        return out


def flag_anomalies(dev: DeviationSeries, policy: FixedPolicy | AdaptivePolicy) -> DetectionReport:
    """Apply a thresholding policy to a deviation series.

    Only dips are anomalous here: a layer is flagged when its deviation is
    at or below minus the threshold. Positive excursions never flag.
    """
    fallback = False
    calibration: tuple[int, int] | None = None
    if isinstance(policy, FixedPolicy):
        theta = policy.threshold_pct
        name = f"fixed(theta={policy.threshold_pct}%)"
    elif isinstance(policy, AdaptivePolicy):
        if policy.calibration is not None:
            lo, hi = policy.calibration
            mask = (dev.layers >= lo) & (dev.layers <= hi)
        else:
            mask = np.zeros(dev.layers.size, dtype=bool)
            mask[: max(1, dev.layers.size // 2)] = True
        cal = dev.values[mask]
        if cal.size == 0:
            raise ConfigError(
                f"calibration range {policy.calibration} contains no deviation layers"
            )
        calibration = (int(dev.layers[mask][0]), int(dev.layers[mask][-1]))
        mad = float(np.median(np.abs(cal - np.median(cal))))
        theta = policy.k * mad
        if theta == 0.0:
            theta = policy.min_threshold_pct
            fallback = True
        name = f"adaptive(k={policy.k})"
    else:
        raise ConfigError(f"unknown policy type: {type(policy).__name__}")

    flagged = tuple(int(l) for l in dev.layers[dev.values <= -theta])
    return DetectionReport(
        flagged_layers=flagged,
        deviations=dev,
        threshold_used=float(theta),
        policy=name,
        calibration_layers=calibration,
        fallback_used=fallback,
    )


def detect(
    defective: SignalSeries,
    healthy: SignalSeries,
    cfg: FilterConfig,
    policy: FixedPolicy | AdaptivePolicy | None = None,
) -> DetectionReport:
    """Full pipeline: filter both series, deviate, flag."""
    policy = policy if policy is not None else AdaptivePolicy()
    dev = percent_deviation(snn_filter(defective, cfg), snn_filter(healthy, cfg))
    return flag_anomalies(dev, policy)
