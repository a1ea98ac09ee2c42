"""Photon-number mean and variance curves, and the variances of quadrature estimators."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import state as gs
from . import symplectic as sp
from .errors import InvariantViolation
from .state_tomography import P_SETTINGS, Q_SETTINGS, GateParams

SWEEP_AXES = ("u", "s")
# Squeezing used for the displacement sweep of the single-mode figure; any s
# in [0.45, 0.9] reproduces the described curve ordering (see tests).
FIG_6A = dict(n_th=1.0, s=0.6, beta=np.pi / 3)


def fmt(x: float) -> str:
    return format(float(x), ".17g")


# -- quadrature estimators ----------------------------------------------------

def _gated(state, family: str, g: GateParams, modes, stat):
    local = sp.p_gate(g.r, g.phi) if family == "P" else sp.q_gate(g.r, g.phi)
    return stat(state, sp.embed(local, modes, state.n).S)


def _unit(n: int, mode: int, axis: str) -> np.ndarray:
    r = np.zeros(2 * n)
    r[2 * mode + (axis == "p")] = 1.0
    return r


def quadrature_variance(state: gs.GaussianState, mode: int, axis: str = "q") -> float:
    """Variance of the estimate ``m_D - m_N - 1/2`` of ``<q_i>`` (or ``<p_i>``) per shot pair.

    The displaced and bare counts come from different runs, so their variances add.
    """
    r = _unit(state.n, mode, axis)
    return gs.displaced_photon_variance(state, r) + gs.photon_variance(state)


SQRT2_0, SQRT3_0 = P_SETTINGS[0], P_SETTINGS[1]


def q_squared_from_counts(state: gs.GaussianState, mode: int) -> float:
    """``6 [<N>_(sqrt3,0) - 2 <N>_(sqrt2,0) + <N>]``, which equals ``<q_i^2>``."""
    m3 = _gated(state, "P", SQRT3_0, (mode,), gs.gated_mean_photon)
    m2 = _gated(state, "P", SQRT2_0, (mode,), gs.gated_mean_photon)
    return 6 * (m3 - 2 * m2 + gs.mean_photon(state))


def q_squared_variance(state: gs.GaussianState, mode: int, form: str = "propagated") -> float:
    """Variance of the three-setting estimator of ``<q_i^2>``.

    ``"propagated"`` is ``36 (Var_3 + 4 Var_2 + Var_N)`` for independent runs.
    ``"printed"`` is ``6 (Var_3 + 2 Var_2 + Var_N)``, kept for comparison only.
    """
    v3 = _gated(state, "P", SQRT3_0, (mode,), gs.gated_photon_variance)
    v2 = _gated(state, "P", SQRT2_0, (mode,), gs.gated_photon_variance)
    vn = gs.photon_variance(state)
    if form == "propagated":
        return 36 * (v3 + 4 * v2 + vn)
    if form == "printed":
        return 6 * (v3 + 2 * v2 + vn)
    raise ValueError(f"unknown form {form!r}; expected 'propagated' or 'printed'")


# -- sweeps -------------------------------------------------------------------

@dataclass(frozen=True)
class Sweep:
    """Grid over ``u`` (displacement) or ``s`` (squeezing) with the others held fixed."""

    axis: str
    start: float
    stop: float
    step: float

    def grid(self) -> np.ndarray:
        if self.axis not in SWEEP_AXES:
            raise InvariantViolation(f"sweep axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        if not (np.isfinite(self.start) and np.isfinite(self.stop) and np.isfinite(self.step)):
            raise InvariantViolation("sweep bounds must be finite")
        if self.step <= 0 or self.stop < self.start:
            raise InvariantViolation(f"need step > 0 and stop >= start, got {self}")
        count = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(count)


def _single_state(base: gs.SqueezedThermalParams, axis: str, x: float) -> gs.GaussianState:
    kw = dict(n_th=base.n_th, s=base.s, beta=base.beta, u=base.u)
    kw[axis] = float(x)
    return gs.squeezed_thermal(gs.SqueezedThermalParams(**kw))


def _two_mode_state(base: Sequence[gs.SqueezedThermalParams], u: float, axis: str, x: float):
    p1, p2 = base
    if axis == "u":
        return gs.two_mode_benchmark(p1, p2, float(x))
    p1 = gs.SqueezedThermalParams(p1.n_th, float(x), p1.beta)
    p2 = gs.SqueezedThermalParams(p2.n_th, float(x), p2.beta)
    return gs.two_mode_benchmark(p1, p2, u)


def curve_columns(n: int) -> list[str]:
    cols = ["mean_N", "var_N", "mean_D(1,0)", "var_D(1,0)", "mean_D(0,1)", "var_D(0,1)"]
    gates = P_SETTINGS if n == 1 else Q_SETTINGS
    fam = "P" if n == 1 else "Q"
    for g in gates:
        cols += [f"mean_{fam}({g.tag})", f"var_{fam}({g.tag})"]
    return cols


def curve_row(state: gs.GaussianState) -> list[float]:
    """Row values in the order of :func:`curve_columns`; displacements and gates act on mode 0."""
    n = state.n
    row = [gs.mean_photon(state), gs.photon_variance(state)]
    for axis in ("q", "p"):
        r = _unit(n, 0, axis)
        row += [gs.displaced_mean_photon(state, r), gs.displaced_photon_variance(state, r)]
    fam, gates, modes = ("P", P_SETTINGS, (0,)) if n == 1 else ("Q", Q_SETTINGS, (0, 1))
    for g in gates:
        row += [_gated(state, fam, g, modes, gs.gated_mean_photon),
                _gated(state, fam, g, modes, gs.gated_photon_variance)]
    return row


def variance_curves(sweep: Sweep, single: gs.SqueezedThermalParams | None = None,
                    two_mode: Sequence[gs.SqueezedThermalParams] | None = None,
                    u: float = 0.0) -> tuple[list[str], np.ndarray]:
    """Header and table for a sweep of the single-mode or two-mode benchmark state.

    Exactly one of ``single`` and ``two_mode`` must be given. For the two-mode
    state a squeezing sweep sets both modes' ``s``.
    """
    if (single is None) == (two_mode is None):
        raise InvariantViolation("give exactly one of a single-mode or a two-mode recipe")
    xs = sweep.grid()
    n = 1 if single is not None else 2
    rows = []
    for x in xs:
        st = _single_state(single, sweep.axis, x) if n == 1 else _two_mode_state(two_mode, u, sweep.axis, x)
        rows.append([x, *curve_row(st)])
    return [sweep.axis, *curve_columns(n)], np.array(rows)


def write_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = np.array([[float(x) for x in row] for row in r])
    return header, data
