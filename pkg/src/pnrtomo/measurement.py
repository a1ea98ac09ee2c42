"""Simulated total-photon-number measurements.

A :class:`MeasurementSetting` names one distinct experiment: photon counting
on the bare state, after a displacement, or after a symplectic gate. The exact
backend returns the closed-form expectation. The finite-shot backend adds a
zero-mean Gaussian error with variance ``Var(N)/M``, drawn from a Philox stream
keyed by ``(seed, label)`` so that a setting's draw does not depend on which
other settings were evaluated or in what order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

import numpy as np

from . import state as gs
from . import symplectic as sp
from .errors import InvariantViolation

KINDS = ("bare", "displaced", "gated")


@dataclass(frozen=True)
class GateSpec:
    """Parametrised gate family placed on specific modes.

    ``family`` is ``"P"`` (single mode, squeeze after phase shift) or ``"Q"``
    (phase shift on the first mode, balanced beam splitter, squeeze on the
    first mode). ``r`` is the log squeezing factor.
    """

    family: str
    modes: tuple
    r: float
    phi: float

    def __post_init__(self):
        if self.family not in ("P", "Q"):
            raise InvariantViolation(f"unknown gate family {self.family!r}")
        want = 1 if self.family == "P" else 2
        if len(self.modes) != want:
            raise InvariantViolation(f"{self.family} gate acts on {want} mode(s), got {self.modes}")

    def local(self) -> sp.SymplecticGate:
        return sp.p_gate(self.r, self.phi) if self.family == "P" else sp.q_gate(self.r, self.phi)

    def matrix(self, n: int) -> np.ndarray:
        return sp.embed(self.local(), self.modes, n).S


@dataclass(frozen=True)
class MeasurementSetting:
    kind: str
    label: str
    mode: Optional[int] = None
    axis: Optional[str] = None
    amount: float = 1.0
    gate: Optional[GateSpec] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvariantViolation(f"unknown setting kind {self.kind!r}")
        if self.kind == "displaced" and (self.mode is None or self.axis not in ("q", "p")):
            raise InvariantViolation(f"displaced setting {self.label!r} needs a mode and axis q|p")
        if self.kind == "gated" and self.gate is None:
            raise InvariantViolation(f"gated setting {self.label!r} needs a gate")

    def displacement(self, n: int) -> np.ndarray:
        r = np.zeros(2 * n)
        if self.mode >= n:
            raise InvariantViolation(f"setting {self.label!r} targets mode {self.mode} of {n}")
        r[2 * self.mode + (self.axis == "p")] = self.amount
        return r


def bare(label: str = "N") -> MeasurementSetting:
    return MeasurementSetting("bare", label)


def displaced(mode: int, axis: str, amount: float = 1.0, label: str | None = None) -> MeasurementSetting:
    label = label or f"D[{axis}{mode}]"
    return MeasurementSetting("displaced", label, mode=mode, axis=axis, amount=amount)


def gated(gate: GateSpec, label: str) -> MeasurementSetting:
    return MeasurementSetting("gated", label, gate=gate)


@dataclass(frozen=True)
class ShotBudget:
    """``shots=None`` selects the exact backend.

    ``per_setting`` overrides the shot count for individual labels.
    """

    shots: Optional[int] = None
    seed: int = 0
    per_setting: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.shots is not None and int(self.shots) < 1:
            raise InvariantViolation(f"shot count must be >= 1, got {self.shots}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvariantViolation(f"seed must fit in 64 unsigned bits, got {self.seed}")
        for label, m in self.per_setting.items():
            if int(m) < 1:
                raise InvariantViolation(f"shot count for {label!r} must be >= 1, got {m}")

    @property
    def exact(self) -> bool:
        return self.shots is None and not self.per_setting

    def shots_for(self, label: str) -> Optional[int]:
        return self.per_setting.get(label, self.shots)


EXACT = ShotBudget()


def _label_key(label: str) -> int:
    return int.from_bytes(hashlib.blake2b(label.encode(), digest_size=8).digest(), "little")


def noise_stream(seed: int, label: str) -> np.random.Generator:
    """Counter-based generator keyed by the budget seed and the setting label."""
    key = np.array([int(seed), _label_key(label)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def expected(state: gs.GaussianState, setting: MeasurementSetting) -> float:
    if setting.kind == "bare":
        return gs.mean_photon(state)
    if setting.kind == "displaced":
        return gs.displaced_mean_photon(state, setting.displacement(state.n))
    return gs.gated_mean_photon(state, setting.gate.matrix(state.n))


def variance(state: gs.GaussianState, setting: MeasurementSetting) -> float:
    if setting.kind == "bare":
        return gs.photon_variance(state)
    if setting.kind == "displaced":
        return gs.displaced_photon_variance(state, setting.displacement(state.n))
    return gs.gated_photon_variance(state, setting.gate.matrix(state.n))


def measure(state: gs.GaussianState, setting: MeasurementSetting, budget: ShotBudget = EXACT) -> float:
    """Estimate of the mean photon number under ``setting``."""
    mean = expected(state, setting)
    shots = budget.shots_for(setting.label)
    if shots is None:
        return mean
    sigma = np.sqrt(max(variance(state, setting), 0.0) / shots)
    return float(mean + sigma * noise_stream(budget.seed, setting.label).standard_normal())


def run_settings(state: gs.GaussianState, settings: Iterable[MeasurementSetting],
                 budget: ShotBudget = EXACT) -> dict[str, float]:
    out = {}
    for s in settings:
        if s.label in out:
            raise InvariantViolation(f"duplicate setting label {s.label!r}")
        out[s.label] = measure(state, s, budget)
    return out
