"""Detection scoring, time-constant sweeps, and filter comparisons.

Scoring is per-layer binary classification restricted to the evaluated
window: each layer is either flagged or not, defective or not.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence


from .baselines import BaselineFilterSpec, apply_baseline_filter
from .errors import ConfigError, DataError, SnnDetectError
from .pipeline import (
    AdaptivePolicy,
    DetectionMetrics,
    DetectionReport,
    FilterConfig,
    FixedPolicy,
    SignalSeries,
    flag_anomalies,
    percent_deviation,
    snn_filter,
)


@dataclass(frozen=True)
class GroundTruth:
    defect_layers: frozenset[int]
    window: tuple[int, int]  # inclusive

    def __post_init__(self) -> None:
        object.__setattr__(self, "defect_layers", frozenset(int(l) for l in self.defect_layers))
        lo, hi = self.window
        if lo > hi:
            raise DataError(f"window must be non-empty, got {self.window}")
        outside = {l for l in self.defect_layers if not lo <= l <= hi}
        if outside:
            raise DataError(f"defect layers {sorted(outside)} fall outside window {self.window}")

    @classmethod
    def from_json(cls, path) -> "GroundTruth":
        path = Path(path)
        if not path.exists():
            raise DataError(f"ground-truth file does not exist: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as err:
            raise DataError(f"{path}: invalid JSON: {err}") from err
        try:
            return cls(
                defect_layers=frozenset(data["defect_layers"]),
                window=(int(data["window"][0]), int(data["window"][1])),
            )
        except (KeyError, TypeError, IndexError) as err:
            raise DataError(f"{path}: expected keys 'defect_layers' and 'window': {err}") from err

    def default_policy(self, k: float = 6.0) -> AdaptivePolicy:
        """Adaptive policy calibrated on the clean layers before the defect."""
        start = min(self.defect_layers) if self.defect_layers else self.window[1] + 1
        return AdaptivePolicy(k=k, calibration=(self.window[0], start - 5))


def f1_score(flags: Iterable[int], truth: GroundTruth) -> tuple[float, float, float]:
    """Per-layer (precision, recall, f1) against the known defect layers."""
    flags = {int(l) for l in flags}
    lo, hi = truth.window
    outside = {l for l in flags if not lo <= l <= hi}
    if outside:
        raise DataError(f"flags {sorted(outside)} fall outside the evaluated window {truth.window}")
    tp = len(flags & truth.defect_layers)
    fp = len(flags - truth.defect_layers)
    fn = len(truth.defect_layers - flags)
    precision = tp / (tp + fp) if flags else 0.0
    recall = tp / (tp + fn) if (tp + fn) > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) > 0 else 0.0
    return precision, recall, f1


def window_flags(report: DetectionReport, truth: GroundTruth) -> set[int]:
    """Report flags restricted to the evaluated window."""
    lo, hi = truth.window
    return {l for l in report.flagged_layers if lo <= l <= hi}


def attach_metrics(report: DetectionReport, truth: GroundTruth) -> DetectionReport:
    p, r, f1 = f1_score(window_flags(report, truth), truth)
    return replace(report, metrics=DetectionMetrics(precision=p, recall=r, f1=f1))


@dataclass(frozen=True)
class SweepPoint:
    tau: float
    precision: float
    recall: float
    f1: float
    flagged_count: int
    error: str | None = None


@dataclass(frozen=True)
class SweepResult:
    points: tuple[SweepPoint, ...]
    best_tau: float


def sweep_tau(
    defective: SignalSeries,
    healthy: SignalSeries,
    taus: Sequence[float],
    cfg: FilterConfig,
    truth: GroundTruth,
    policy: FixedPolicy | AdaptivePolicy | None = None,
) -> SweepResult:
    """Score detection across synaptic time constants (applied to both links).

    Populations are rebuilt per point from the same seed, so the sweep is
    deterministic. Per-point pipeline failures are recorded in the row
    rather than aborting the sweep. Ties for the best F1 go to the smallest
    time constant, which has the least lag.
    """
    taus = [float(t) for t in taus]
    if not taus or any(t <= 0 for t in taus):
        raise ConfigError(f"time constants must be positive, got {taus}")
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise ConfigError("time constants must be strictly increasing")
    policy = policy if policy is not None else truth.default_policy()

    points = []
    for tau in taus:
        cfg_t = replace(cfg, tau_in=tau, tau_out=tau)
        try:
            dev = percent_deviation(snn_filter(defective, cfg_t), snn_filter(healthy, cfg_t))
            report = flag_anomalies(dev, policy)
            flags = window_flags(report, truth)
            p, r, f1 = f1_score(flags, truth)
            points.append(SweepPoint(tau, p, r, f1, len(flags)))
        except SnnDetectError as err:
            points.append(SweepPoint(tau, float("nan"), float("nan"), float("nan"), 0, str(err)))

    scored = [pt for pt in points if pt.error is None]
    if not scored:
        raise DataError("every sweep point failed; see per-point errors")
    best = max(scored, key=lambda pt: pt.f1)  # max() keeps the first (smallest tau) on ties
    return SweepResult(points=tuple(points), best_tau=best.tau)


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    precision: float
    recall: float
    f1: float
    error: str | None = None


def compare_filters(
    defective: SignalSeries,
    healthy: SignalSeries,
    specs: Sequence[BaselineFilterSpec],
    cfg: FilterConfig,
    truth: GroundTruth,
    policy: FixedPolicy | AdaptivePolicy | None = None,
) -> list[ComparisonRow]:
    """One scored row per classical filter plus one for the spiking filter."""
    policy = policy if policy is not None else truth.default_policy()

    def score(filter_fn, name: str) -> ComparisonRow:
        try:
            dev = percent_deviation(filter_fn(defective), filter_fn(healthy))
            report = flag_anomalies(dev, policy)
            flags = window_flags(report, truth)
            p, r, f1 = f1_score(flags, truth)
            return ComparisonRow(name, p, r, f1)
        except SnnDetectError as err:
            return ComparisonRow(name, float("nan"), float("nan"), float("nan"), str(err))

    rows = [
        score(lambda s, spec=spec: apply_baseline_filter(s, spec), spec.kind)
        for spec in specs
    ]
    rows.append(score(lambda s: snn_filter(s, cfg), "snn"))
    return rows
