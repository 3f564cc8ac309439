"""Clocked simulation of spiking filter networks.

Each step low-passes the raw input, drives every neuron through its
tuning, collects spikes, low-passes each neuron's spike train, and
decodes. Cascaded populations chain through one synapse per link, so a
chain of N populations applies N + 1 filter stages in total. Spikes are
scaled by 1/dt when converted to current so the filtered trains are
rate-equivalent (Hz) and match the units the decoders were solved in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ensembles import Ensemble
from .errors import ConfigError
from .neurons import lif_step_arrays
from .synapses import Lowpass


@dataclass(frozen=True)
class SpikeRaster:
    """Spike events from one run: parallel arrays of neuron ids and times."""

    neuron_ids: np.ndarray
    times: np.ndarray
    n_neurons: int
    duration: float
    dt: float

    def __post_init__(self) -> None:
        if len(self.neuron_ids) != len(self.times):
            raise ConfigError("neuron_ids and times must have equal length")

    @property
    def events(self) -> list[tuple[int, float]]:
        return [(int(i), float(t)) for i, t in zip(self.neuron_ids, self.times)]

    def spike_counts(self) -> np.ndarray:
        """Total spikes per neuron."""
        return np.bincount(self.neuron_ids, minlength=self.n_neurons)


@dataclass(frozen=True)
class SimResult:
    decoded: np.ndarray
    raster: SpikeRaster
    rates: np.ndarray | None = None  # filtered rates of the last stage, (steps x neurons)


def simulate_cascade(
    ensembles: Sequence[Ensemble],
    inputs,
    dt: float,
    taus: Sequence[float],
    record_rates: bool = False,
) -> SimResult:
    """Run a chain of populations over a time-stepped input signal.

    `taus` holds one synaptic time constant per connection: the input link,
    each inter-population link, and the output link (len(ensembles) + 1
    entries). Neuron ids in the returned raster are offset per stage in
    chain order. Fully deterministic: no randomness enters the loop.
    """
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 1 or not np.all(np.isfinite(inputs)):
        raise ValueError("inputs must be a finite 1-D signal")
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if len(ensembles) < 1:
        raise ConfigError("at least one population is required")
    if len(taus) != len(ensembles) + 1:
        raise ConfigError(
            f"expected {len(ensembles) + 1} time constants for "
            f"{len(ensembles)} populations, got {len(taus)}"
        )
    if any(t <= 0 for t in taus):
        raise ConfigError(f"time constants must be positive, got {list(taus)}")
    for e in ensembles:
        if len(e.decoders) != e.n_neurons:
            raise ConfigError(
                f"decoder length {len(e.decoders)} does not match "
                f"{e.n_neurons} neurons"
            )

    n_stages = len(ensembles)
    n_steps = inputs.size
    sizes = [e.n_neurons for e in ensembles]
    offsets = np.concatenate([[0], np.cumsum(sizes)])[:-1]

    in_syn = Lowpass(taus[0], dt)
    out_syns = [Lowpass(taus[s + 1], dt, sizes[s]) for s in range(n_stages)]
    gain_enc = [e.gains * e.encoders for e in ensembles]
    radii = [e.radius for e in ensembles]
    biases = [e.biases for e in ensembles]
    spike_scale = [e.lif.i_spk / dt for e in ensembles]
    v = [np.full(sizes[s], ensembles[s].lif.e_l) for s in range(n_stages)]
    refr = [np.zeros(sizes[s]) for s in range(n_stages)]

    decoded = np.empty(n_steps)
    rates = np.empty((n_steps, sizes[-1])) if record_rates else None
    id_chunks: list[np.ndarray] = []
    time_chunks: list[np.ndarray] = []

    for k in range(n_steps):
        x = in_syn.step(inputs[k])
        for s, e in enumerate(ensembles):
            x_norm = min(max(x / radii[s], -1.0), 1.0)
            drive = gain_enc[s] * x_norm + biases[s]
            v[s], refr[s], spiked = lif_step_arrays(v[s], refr[s], drive, dt, e.lif)
            idx = np.nonzero(spiked)[0]
            if idx.size:
                id_chunks.append(idx + offsets[s])
                time_chunks.append(np.full(idx.size, k * dt))
            r = out_syns[s].step(spiked * spike_scale[s])
            x = e.decoders @ r
        decoded[k] = x
        if rates is not None:
            rates[k] = r

    if id_chunks:
        neuron_ids = np.concatenate(id_chunks).astype(np.int64)
        times = np.concatenate(time_chunks)
    else:
        neuron_ids = np.zeros(0, dtype=np.int64)
        times = np.zeros(0)
    raster = SpikeRaster(
        neuron_ids=neuron_ids,
        times=times,
        n_neurons=int(sum(sizes)),
        duration=n_steps * dt,
        dt=dt,
    )
    return SimResult(decoded=decoded, raster=raster, rates=rates)


def simulate_filter(
    e: Ensemble,
    inputs,
    dt: float,
    tau_in: float,
    tau_out: float,
    record_rates: bool = False,
) -> SimResult:
    """Single-population filter: input synapse, spiking, output synapse, decode."""
    return simulate_cascade([e], inputs, dt, [tau_in, tau_out], record_rates=record_rates)
