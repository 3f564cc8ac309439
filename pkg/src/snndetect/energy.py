"""Operation counting and per-hardware energy pricing of an inference.

One inference is a full series pass through the filter network. Dense
hardware (CPU, GPU, FPGA) burns a fixed amount per inference regardless
of spiking activity, while event-driven hardware pays per synaptic op,
so its cost tracks the firing rates of each sample. The shipped profiles
are calibrated against a reference run rather than measured, and should
be read as relative orderings, not absolute power figures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .simulator import SpikeRaster

HARDWARE_ORDER = ("CPU", "GPU", "FPGA", "Loihi", "SpiNNaker2")

# muJ per inference on the reference run (66% reduction over 7 layers, PD1)
REFERENCE_ENERGY_UJ = {
    "CPU": 17.2,
    "GPU": 0.6,
    "FPGA": 1.8,
    "Loihi": 0.821,
    "SpiNNaker2": 22.1,
}

STATIC_DOMINATED = ("CPU", "GPU", "FPGA")
SYNOP_DOMINATED = ("Loihi", "SpiNNaker2")


@dataclass(frozen=True)
class NetworkTopology:
    """Per-neuron fan-out of the simulated network."""

    fan_out: np.ndarray

    def __post_init__(self) -> None:
        fan_out = np.asarray(self.fan_out, dtype=np.int64)
        object.__setattr__(self, "fan_out", fan_out)
        if fan_out.ndim != 1 or np.any(fan_out < 0):
            raise ConfigError("fan_out must be a 1-D array of non-negative counts")

    @property
    def n_neurons(self) -> int:
        return int(self.fan_out.size)

    @classmethod
    def uniform(cls, n_neurons: int, fan_out: int = 1) -> "NetworkTopology":
        return cls(fan_out=np.full(n_neurons, fan_out, dtype=np.int64))

    @classmethod
    def chain(cls, stage_sizes: Sequence[int]) -> "NetworkTopology":
        """Cascade topology: each stage projects onto the next, the last decodes
        to a single output."""
        if not stage_sizes or any(s < 1 for s in stage_sizes):
            raise ConfigError(f"stage sizes must be positive, got {list(stage_sizes)}")
        fans = []
        for s, size in enumerate(stage_sizes):
            target = stage_sizes[s + 1] if s + 1 < len(stage_sizes) else 1
            fans.append(np.full(size, target, dtype=np.int64))
        return cls(fan_out=np.concatenate(fans))


@dataclass(frozen=True)
class OpCounts:
    synaptic_ops: int
    neuron_updates: int
    inference_steps: int

    def __post_init__(self) -> None:
        if min(self.synaptic_ops, self.neuron_updates, self.inference_steps) < 0:
            raise ConfigError("operation counts must be non-negative")


@dataclass(frozen=True)
class HardwareEnergyProfile:
    """Per-operation energy constants, in joules."""

    name: str
    e_synop: float = 0.0
    e_update: float = 0.0
    e_static_per_inference: float = 0.0

    def __post_init__(self) -> None:
        if min(self.e_synop, self.e_update, self.e_static_per_inference) < 0:
            raise ConfigError("energy constants must be non-negative")


def count_ops(raster: SpikeRaster, topology: NetworkTopology, steps: int) -> OpCounts:
    """Tally operations from one run: spikes priced by fan-out, plus one
    state update per neuron per timestep."""
    if topology.n_neurons != raster.n_neurons:
        raise DataError(
            f"topology has {topology.n_neurons} neurons but raster has {raster.n_neurons}"
        )
    if raster.neuron_ids.size and raster.neuron_ids.max() >= topology.n_neurons:
        raise DataError("raster references neuron ids outside the topology")
    if steps < 0:
        raise DataError(f"steps must be >= 0, got {steps}")
    synops = int(topology.fan_out[raster.neuron_ids].sum()) if raster.neuron_ids.size else 0
    return OpCounts(
        synaptic_ops=synops,
        neuron_updates=topology.n_neurons * steps,
        inference_steps=steps,
    )


def estimate_energy(c: OpCounts, p: HardwareEnergyProfile) -> float:
    """Energy per inference in microjoules."""
    joules = (
        c.synaptic_ops * p.e_synop
        + c.neuron_updates * p.e_update
        + p.e_static_per_inference
    )
    return joules * 1e6


def reference_profiles(reference: OpCounts) -> dict[str, HardwareEnergyProfile]:
    """Profiles calibrated so the reference run reproduces the shipped
    per-hardware energies exactly.

    CPU/GPU/FPGA are static-per-inference; Loihi and SpiNNaker2 are priced
    per synaptic op, so their estimates move with each sample's spiking.
    """
    if reference.synaptic_ops <= 0:
        raise ConfigError("reference run produced no synaptic ops; cannot calibrate")
    profiles: dict[str, HardwareEnergyProfile] = {}
    for name in STATIC_DOMINATED:
        profiles[name] = HardwareEnergyProfile(
            name=name, e_static_per_inference=REFERENCE_ENERGY_UJ[name] * 1e-6
        )
    for name in SYNOP_DOMINATED:
        profiles[name] = HardwareEnergyProfile(
            name=name, e_synop=REFERENCE_ENERGY_UJ[name] * 1e-6 / reference.synaptic_ops
        )
    return profiles


def profiles_to_json(profiles: Mapping[str, HardwareEnergyProfile]) -> str:
    data = {
        name: {
            "e_synop": p.e_synop,
            "e_update": p.e_update,
            "e_static_per_inference": p.e_static_per_inference,
        }
        for name, p in profiles.items()
    }
    return json.dumps(data, indent=2, sort_keys=True)


def profiles_from_json(text: str) -> dict[str, HardwareEnergyProfile]:
    """Accepts either a bare name->constants mapping or a document with the
    mapping under a "profiles" key (the CLI emits the latter, with run
    metadata alongside)."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise DataError(f"invalid profiles JSON: {err}") from err
    if isinstance(data, dict) and isinstance(data.get("profiles"), dict):
        data = data["profiles"]
    if not isinstance(data, dict):
        raise DataError("profiles JSON must map names to energy constants")
    out = {}
    for name, fields in data.items():
        try:
            out[name] = HardwareEnergyProfile(name=name, **fields)
        except TypeError as err:
            raise DataError(f"bad profile {name!r}: {err}") from None
    return out
