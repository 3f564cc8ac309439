"""First-order exponential low-pass filtering with unit DC gain."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass
class SynapseState:
    """Time constant plus the current filtered value."""

    tau_syn: float
    y: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.tau_syn) and self.tau_syn > 0):
            raise ConfigError(f"tau_syn must be positive, got {self.tau_syn}")


def synapse_step(s: SynapseState, x: float, dt: float) -> tuple[SynapseState, float]:
    """One filter update: y' = y*a + x*(1 - a), a = exp(-dt/tau_syn).

    Unit DC gain: a constant input passes through unchanged once settled,
    which keeps absolute signal levels comparable across series.
    """
    if not (math.isfinite(x) and math.isfinite(dt) and dt > 0):
        raise ValueError(f"invalid filter inputs: x={x}, dt={dt}")
    a = math.exp(-dt / s.tau_syn)
    y = s.y * a + x * (1.0 - a)
    return SynapseState(tau_syn=s.tau_syn, y=y), y


class Lowpass:
    """Stateful vector form of synapse_step for simulation loops."""

    def __init__(self, tau: float, dt: float, shape: int | tuple = ()):
        if not (tau > 0 and dt > 0):
            raise ConfigError(f"tau and dt must be positive, got tau={tau}, dt={dt}")
        self.decay = math.exp(-dt / tau)
        self.y = np.zeros(shape)

    def step(self, x):
        self.y = self.y * self.decay + x * (1.0 - self.decay)
        return self.y
