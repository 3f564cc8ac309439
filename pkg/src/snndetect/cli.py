"""Command-line interface.

Subcommands: gen-data, detect, sweep, compare, raster, classify, energy.
Every output file embeds the seed, preset, and tool version; runs with
identical arguments and seeds produce byte-identical artifacts. Exit
codes: 0 on success, 1 on usage errors, 2 on data or numeric errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import BaselineFilterSpec, default_specs
from .classifier import encode_sample, predict, train_classifier
from .datagen import NOISE_STD, DefectSpec, GenParams, gen_defective, gen_healthy
from .ensembles import EnsembleConfig, build_ensemble
from .energy import (
    HARDWARE_ORDER,
    NetworkTopology,
    count_ops,
    estimate_energy,
    profiles_from_json,
    profiles_to_json,
    reference_profiles,
)
from .errors import ConfigError, DataError, SnnDetectError
from .evaluation import GroundTruth, attach_metrics, compare_filters, sweep_tau
from .pipeline import (
    AdaptivePolicy,
    FilterConfig,
    FixedPolicy,
    SignalSeries,
    flag_anomalies,
    load_layer_series,
    percent_deviation,
    run_filter,
    snn_filter,
)
from .presets import get_preset

OUTDIR_ENV = "SNNDETECT_OUTDIR"

# samples mirroring the three build batches (33/66/100 % reduction) with
# short and long defect extents; the 66%/7-layer sample is the energy
# calibration reference
ENERGY_SAMPLES = (
    ("S1V3", 33.0, 3),
    ("S1V7", 33.0, 7),
    ("S2V3", 66.0, 3),
    ("S2V7", 66.0, 7),
    ("S3V3", 100.0, 3),
    ("S3V7", 100.0, 7),
)
ENERGY_REFERENCE_SAMPLE = "S2V7"


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; we reserve 2 for
    data errors and use 1 for usage."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunManifest:
    """One CLI invocation: the command, its inputs, and where output goes.

    Input paths are checked up front so a run fails before writing anything;
    the seed/preset/version triple is stamped into every artifact.
    """

    command: str
    seed: int
    preset: str
    outdir: Path
    config_path: str | None = None
    input_paths: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for p in self.input_paths:
            if not Path(p).exists():
                raise DataError(f"input path does not exist: {p}")

    def meta(self) -> dict:
        return {"seed": self.seed, "preset": self.preset, "version": __version__}


def _parse_window(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split(":")
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None


def _parse_taus(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}") from None


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _csv_text(meta: dict, columns: list[str], rows) -> str:
    lines = ["# " + " ".join(f"{k}={v}" for k, v in meta.items()), ",".join(columns)]
    lines.extend(",".join(_fmt(c) for c in row) for row in rows)
    return "\n".join(lines) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _outdir(args) -> Path:
    out = args.outdir or os.environ.get(OUTDIR_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _add_network_args(sp) -> None:
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--preset", help="named preset, e.g. cpu-pd1-66 (see README)")
    group.add_argument("--config", help="filter-config JSON file")
    sp.add_argument("--seed", type=int, default=None, help="override the configured seed")


def _resolve_config(args) -> tuple[FilterConfig, str, list[BaselineFilterSpec] | None]:
    baseline_specs = None
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise DataError(f"config file does not exist: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as err:
            raise DataError(f"{path}: invalid JSON: {err}") from err
        if not isinstance(data, dict):
            raise DataError(f"{path}: config must be a JSON object")
        raw_baseline = data.pop("baseline", None)
        if raw_baseline is not None:
            if isinstance(raw_baseline, dict):
                raw_baseline = [raw_baseline]
            baseline_specs = [BaselineFilterSpec.from_dict(b) for b in raw_baseline]
        cfg = FilterConfig.from_dict(data)
        label = "custom"
    elif args.preset:
        cfg = get_preset(args.preset)
        label = args.preset
    else:
        cfg = FilterConfig()
        label = "default"
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg, label, baseline_specs


def _load_pair(args) -> tuple[SignalSeries, SignalSeries]:
    defective = load_layer_series(args.defective, condition="defective")
    healthy = load_layer_series(args.healthy, condition="healthy")
    return defective, healthy


def _resolve_policy(args, truth: GroundTruth | None):
    if args.policy == "fixed":
        if args.threshold is None:
            raise ConfigError("--policy fixed requires --threshold")
        return FixedPolicy(threshold_pct=args.threshold)
    if args.calibration is not None:
        return AdaptivePolicy(k=args.k, calibration=args.calibration)
    if truth is not None:
        return truth.default_policy(k=args.k)
    return AdaptivePolicy(k=args.k)


def _add_policy_args(sp) -> None:
    sp.add_argument("--policy", choices=("adaptive", "fixed"), default="adaptive")
    sp.add_argument("--k", type=float, default=6.0, help="adaptive threshold multiplier")
    sp.add_argument("--threshold", type=float, default=None, help="fixed threshold (percent)")
    sp.add_argument("--calibration", type=_parse_window, default=None,
                    help="LO:HI layer range used to calibrate the adaptive threshold")


def _series_csv(series: SignalSeries, meta: dict) -> str:
    return _csv_text(meta, ["layer", "value"], zip(series.layers, series.values))


def _cmd_gen_data(args) -> int:
    out = _outdir(args)
    manifest = RunManifest(command="gen-data", seed=args.seed, preset="-", outdir=out)
    noise = args.noise_std if args.noise_std is not None else NOISE_STD[args.sensor]
    lo, hi = args.window
    baseline_seed = args.baseline_seed if args.baseline_seed is not None else args.seed + 1
    p_def = GenParams(
        layer_range=(lo, hi), baseline_level=args.baseline_level, noise_std=noise,
        junction_spike_amplitude=args.junction_amplitude, junction_period=args.junction_period,
        seed=args.seed, sensor=args.sensor,
    )
    p_heal = replace(p_def, seed=baseline_seed)
    spec = DefectSpec(
        start_layer=args.defect_start, n_layers=args.defect_layers,
        power_reduction_percent=args.reduction, dip_fraction=args.dip_fraction,
    )
    defective = gen_defective(p_def, spec)
    healthy = gen_healthy(p_heal)

    meta = manifest.meta()
    _atomic_write(out / "defective.csv", _series_csv(defective, meta))
    _atomic_write(out / "healthy.csv", _series_csv(healthy, {**meta, "seed": baseline_seed}))
    truth = {
        **meta,
        "defect_layers": list(spec.layers),
        "window": [lo, hi],
        "sensor": args.sensor,
        "power_reduction_percent": args.reduction,
        "baseline_seed": baseline_seed,
    }
    _atomic_write(out / "truth.json", json.dumps(truth, indent=2, sort_keys=True) + "\n")
    print(f"wrote defective.csv, healthy.csv, truth.json to {out}")
    return 0


def _cmd_detect(args) -> int:
    out = _outdir(args)
    cfg, label, _ = _resolve_config(args)
    inputs = (args.defective, args.healthy) + ((args.truth,) if args.truth else ())
    manifest = RunManifest(command="detect", seed=cfg.seed, preset=label, outdir=out,
                           config_path=args.config, input_paths=inputs)
    defective, healthy = _load_pair(args)
    truth = GroundTruth.from_json(args.truth) if args.truth else None
    policy = _resolve_policy(args, truth)

    dev = percent_deviation(snn_filter(defective, cfg), snn_filter(healthy, cfg))
    report = flag_anomalies(dev, policy)
    if truth is not None:
        report = attach_metrics(report, truth)

    meta = manifest.meta()
    doc = {**meta, "config": cfg.to_dict(), **report.to_dict()}
    _atomic_write(out / "report.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    _atomic_write(
        out / "deviations.csv",
        _csv_text(meta, ["layer", "deviation_pct"], zip(dev.layers, dev.values)),
    )
    flagged = ", ".join(str(l) for l in report.flagged_layers) or "none"
    print(f"flagged layers: {flagged} (threshold {report.threshold_used:.3g}%)")
    if report.metrics:
        print(f"precision={report.metrics.precision:.3f} recall={report.metrics.recall:.3f} "
              f"f1={report.metrics.f1:.3f}")
    return 0


def _cmd_sweep(args) -> int:
    out = _outdir(args)
    cfg, label, _ = _resolve_config(args)
    manifest = RunManifest(command="sweep", seed=cfg.seed, preset=label, outdir=out,
                           config_path=args.config,
                           input_paths=(args.defective, args.healthy, args.truth))
    defective, healthy = _load_pair(args)
    truth = GroundTruth.from_json(args.truth)
    policy = _resolve_policy(args, truth)
    result = sweep_tau(defective, healthy, args.taus, cfg, truth, policy)
    rows = [
        (pt.tau, pt.precision, pt.recall, pt.f1, pt.flagged_count)
        for pt in result.points
    ]
    meta = manifest.meta()
    _atomic_write(
        out / "sweep.csv",
        _csv_text(meta, ["tau", "precision", "recall", "f1", "flagged"], rows),
    )
    print(f"best tau: {result.best_tau}")
    return 0


def _cmd_compare(args) -> int:
    out = _outdir(args)
    cfg, label, baseline_specs = _resolve_config(args)
    manifest = RunManifest(command="compare", seed=cfg.seed, preset=label, outdir=out,
                           config_path=args.config,
                           input_paths=(args.defective, args.healthy, args.truth))
    defective, healthy = _load_pair(args)
    truth = GroundTruth.from_json(args.truth)
    policy = _resolve_policy(args, truth)
    specs = baseline_specs if baseline_specs is not None else default_specs()
    rows = compare_filters(defective, healthy, specs, cfg, truth, policy)
    meta = manifest.meta()
    _atomic_write(
        out / "compare.csv",
        _csv_text(meta, ["filter", "precision", "recall", "f1"],
                  [(r.name, r.precision, r.recall, r.f1) for r in rows]),
    )
    for r in rows:
        print(f"{r.name:16s} f1={r.f1:.3f}" + (f"  [{r.error}]" if r.error else ""))
    return 0


def _cmd_raster(args) -> int:
    out = _outdir(args)
    cfg, label, _ = _resolve_config(args)
    manifest = RunManifest(command="raster", seed=cfg.seed, preset=label, outdir=out,
                           config_path=args.config, input_paths=(args.input,))
    series = load_layer_series(args.input, condition="defective")
    _, sim = run_filter(series, cfg)
    meta = manifest.meta()
    _atomic_write(
        out / "raster.csv",
        _csv_text(meta, ["neuron", "time"], zip(sim.raster.neuron_ids, sim.raster.times)),
    )
    print(f"{len(sim.raster.neuron_ids)} spikes from {sim.raster.n_neurons} neurons "
          f"over {sim.raster.duration:.3g} s")
    return 0


def _cmd_classify(args) -> int:
    out = _outdir(args)
    cfg, label, _ = _resolve_config(args)
    run = RunManifest(command="classify", seed=cfg.seed, preset=label, outdir=out,
                      config_path=args.config, input_paths=(args.manifest,))
    path = Path(args.manifest)
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise DataError(f"{path}: invalid JSON: {err}") from err
    try:
        entries = manifest["samples"]
        window = tuple(manifest["window"]) if "window" in manifest else None
    except (KeyError, TypeError) as err:
        raise DataError(f"{path}: expected a 'samples' list: {err}") from err

    base = path.parent
    ensemble = build_ensemble(
        EnsembleConfig(n_neurons=cfg.neurons, radius=cfg.radius), seed=cfg.seed
    )
    features = []
    for i, entry in enumerate(entries):
        try:
            sample_path = base / entry["path"]
            clabel = int(entry["label"])
            sample_id = str(entry.get("sample_id", f"sample{i}"))
        except (KeyError, TypeError) as err:
            raise DataError(f"{path}: bad sample entry {i}: {err}") from err
        series = load_layer_series(sample_path, condition="defective")
        features.append(
            encode_sample(series, ensemble, cfg, window=window, label=clabel, sample_id=sample_id)
        )

    model = train_classifier(features, epochs=args.epochs, lr=args.lr)
    meta = run.meta()
    _atomic_write(
        out / "loss.csv",
        _csv_text(meta, ["epoch", "loss"], enumerate(model.training_history)),
    )
    rows = []
    correct = 0
    for f in features:
        predicted = int(np.argmax(predict(model, f.feature)))
        correct += predicted == f.label
        rows.append((f.sample_id, f.label, predicted))
    _atomic_write(
        out / "predictions.csv",
        _csv_text(meta, ["sample_id", "target", "predicted"], rows),
    )
    print(f"final loss {model.training_history[-1]:.4f}, "
          f"training accuracy {correct / len(features):.4f}")
    return 0


def _cmd_energy(args) -> int:
    out = _outdir(args)
    cfg, label, _ = _resolve_config(args)
    manifest = RunManifest(command="energy", seed=cfg.seed, preset=label, outdir=out,
                           config_path=args.config,
                           input_paths=(args.profiles,) if args.profiles else ())
    lo, hi = args.window
    topology = NetworkTopology.chain(cfg.stage_sizes())
    counts = {}
    for i, (sample_id, reduction, n_layers) in enumerate(ENERGY_SAMPLES):
        params = GenParams(
            layer_range=(lo, hi), noise_std=args.noise_std, seed=cfg.seed + i,
        )
        spec = DefectSpec(
            start_layer=args.defect_start, n_layers=n_layers,
            power_reduction_percent=reduction,
        )
        _, sim = run_filter(gen_defective(params, spec), cfg)
        counts[sample_id] = count_ops(sim.raster, topology, steps=len(sim.decoded))

    if args.profiles:
        ppath = Path(args.profiles)
        if not ppath.exists():
            raise DataError(f"profiles file does not exist: {ppath}")
        profiles = profiles_from_json(ppath.read_text())
    else:
        profiles = reference_profiles(counts[ENERGY_REFERENCE_SAMPLE])

    names = [n for n in HARDWARE_ORDER if n in profiles]
    names += [n for n in profiles if n not in names]
    rows = [
        (sample_id, *(estimate_energy(counts[sample_id], profiles[n]) for n in names))
        for sample_id, _, _ in ENERGY_SAMPLES
    ]
    meta = manifest.meta()
    _atomic_write(out / "energy.csv", _csv_text(meta, ["sample"] + names, rows))
    profiles_doc = {**meta, "profiles": json.loads(profiles_to_json(profiles))}
    _atomic_write(out / "profiles.json", json.dumps(profiles_doc, indent=2, sort_keys=True) + "\n")
    for row in rows:
        cells = " ".join(f"{n}={v:.3f}" for n, v in zip(names, row[1:]))
        print(f"{row[0]}: {cells} (uJ/inference)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="snndetect", description=__doc__)
    parser.add_argument("--version", action="version", version=f"snndetect {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("gen-data", help="generate a synthetic healthy/defective pair")
    sp.add_argument("--outdir", default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--baseline-seed", type=int, default=None,
                    help="seed of the healthy reference build (default: seed + 1)")
    sp.add_argument("--sensor", choices=sorted(NOISE_STD), default="PD1")
    sp.add_argument("--reduction", type=float, default=66.0)
    sp.add_argument("--defect-layers", type=int, default=7)
    sp.add_argument("--defect-start", type=int, default=613)
    sp.add_argument("--window", type=_parse_window, default=(570, 650))
    sp.add_argument("--noise-std", type=float, default=None)
    sp.add_argument("--junction-period", type=int, default=8)
    sp.add_argument("--junction-amplitude", type=float, default=600.0)
    sp.add_argument("--baseline-level", type=float, default=1000.0)
    sp.add_argument("--dip-fraction", type=float, default=1.0)
    sp.set_defaults(func=_cmd_gen_data)

    sp = sub.add_parser("detect", help="filter, deviate, and flag anomalous layers")
    sp.add_argument("--defective", required=True)
    sp.add_argument("--healthy", required=True)
    sp.add_argument("--truth", default=None)
    sp.add_argument("--outdir", default=None)
    _add_network_args(sp)
    _add_policy_args(sp)
    sp.set_defaults(func=_cmd_detect)

    sp = sub.add_parser("sweep", help="score detection across synaptic time constants")
    sp.add_argument("--defective", required=True)
    sp.add_argument("--healthy", required=True)
    sp.add_argument("--truth", required=True)
    sp.add_argument("--taus", type=_parse_taus, required=True)
    sp.add_argument("--outdir", default=None)
    _add_network_args(sp)
    _add_policy_args(sp)
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("compare", help="score classical filters against the spiking filter")
    sp.add_argument("--defective", required=True)
    sp.add_argument("--healthy", required=True)
    sp.add_argument("--truth", required=True)
    sp.add_argument("--outdir", default=None)
    _add_network_args(sp)
    _add_policy_args(sp)
    sp.set_defaults(func=_cmd_compare)

    sp = sub.add_parser("raster", help="export the spike raster of a filter run")
    sp.add_argument("--input", required=True)
    sp.add_argument("--outdir", default=None)
    _add_network_args(sp)
    sp.set_defaults(func=_cmd_raster)

    sp = sub.add_parser("classify", help="train the per-sample softmax readout")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--epochs", type=int, default=1000)
    sp.add_argument("--lr", type=float, default=0.05)
    sp.add_argument("--outdir", default=None)
    _add_network_args(sp)
    sp.set_defaults(func=_cmd_classify)

    sp = sub.add_parser("energy", help="estimate per-hardware energy per inference")
    sp.add_argument("--outdir", default=None)
    sp.add_argument("--profiles", default=None, help="custom hardware profiles JSON")
    sp.add_argument("--noise-std", type=float, default=20.0)
    sp.add_argument("--window", type=_parse_window, default=(570, 650))
    sp.add_argument("--defect-start", type=int, default=613)
    _add_network_args(sp)
    sp.set_defaults(func=_cmd_energy)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return int(args.func(args) or 0)
    except SnnDetectError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
