"""Gaussian channel tomography with ``2n`` coherent probes and ``6n^2 + n`` settings.

Probe ``e1`` gets a full state plan. Every other probe gets only the ``2n``
displaced settings; its bare average is recovered from the quadratic that
links the displaced averages to ``Tr V``, which all outputs share.

The quadratic has two roots and both reproduce the measured averages exactly.
If the true output mean is ``d``, the other root sits at photon number
``N + delta`` with mean ``d - delta`` (every entry), ``delta = (1 + sum(d)) / n``,
and ``|d - delta|^2 = |d|^2 + 2 delta``. The minimum-norm root is therefore the
true one exactly when ``sum(d) > -1``.

With ``probes="adaptive"`` (the default) the probes after ``e1`` are scaled so
that this holds for every channel: ``B >= 0`` gives
``|sum_i A_ik| <= sqrt(1^T A A^T 1) <= sqrt(2 * 1^T V_G 1)``, and ``V_G`` is
already known from the first probe. ``probes="unit"`` keeps unit probes for all
``2n`` inputs; the root choice is then a heuristic and can pick the wrong
column.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from . import measurement as ms
from . import state_tomography as stomo
from .channel import GaussianChannel, apply_channel, is_cp
from .errors import InconsistentMeasurements, InvariantViolation, MissingMeasurement
from .state import GaussianState, displace, vacuum

ROOT_POLICIES = ("min-norm", "min-n", "report-both", "cp-consistent")
PROBE_MODES = ("adaptive", "unit", "fixed")
ADAPTIVE_SAFETY = 0.5
DISCRIMINANT_SLACK = 1e-9
PROBE_TOL = 1e-9


def expected_count(n: int) -> int:
    return 6 * n * n + n


def probe_name(k: int) -> str:
    return f"e{k + 1}"


@dataclass(frozen=True, eq=False)
class ChannelPlan:
    """Setting list plus the rule that fixes the probe amplitudes.

    ``amplitudes`` is used by ``probes="fixed"``; ``"unit"`` means all ones and
    ``"adaptive"`` derives the amplitude of probes 2..2n from the first output.
    """

    n: int
    state_plan: stomo.StatePlan
    mean_plans: Mapping[int, Mapping[tuple, ms.MeasurementSetting]]
    probes: str = "adaptive"
    amplitudes: Optional[np.ndarray] = None

    @property
    def settings(self) -> tuple:
        out = list(self.state_plan.settings)
        for k in sorted(self.mean_plans):
            out += self.mean_plans[k].values()
        return tuple(out)

    def __len__(self):
        return len(self.settings)

    def probe_amplitudes(self, v_out=None) -> np.ndarray:
        """Amplitude of each of the ``2n`` probes; ``v_out`` is the first output's covariance."""
        if self.probes == "unit":
            return np.ones(2 * self.n)
        if self.probes == "fixed":
            return np.array(self.amplitudes, dtype=float)
        if v_out is None:
            raise ValueError("adaptive probes need the first output covariance")
        amps = np.full(2 * self.n, adaptive_amplitude(v_out))
        amps[0] = 1.0
        return amps


def adaptive_amplitude(v_out, safety: float = ADAPTIVE_SAFETY) -> float:
    """Largest probe amplitude (times ``safety``) that keeps the min-norm root correct."""
    v_out = np.asarray(v_out, dtype=float)
    ones = np.ones(v_out.shape[0])
    w = 2.0 * float(ones @ v_out @ ones)
    if w <= safety * safety:
        return 1.0
    return min(1.0, safety / np.sqrt(w))


def make_channel_plan(n: int, probes: str = "adaptive",
                      amplitudes: Optional[Sequence[float]] = None) -> ChannelPlan:
    if int(n) != n or n < 1:
        raise ValueError(f"mode count must be a positive integer, got {n!r}")
    if probes not in PROBE_MODES:
        raise ValueError(f"unknown probe mode {probes!r}; expected one of {PROBE_MODES}")
    n = int(n)
    amps = None
    if probes == "fixed":
        amps = np.asarray(amplitudes, dtype=float)
        if amps.shape != (2 * n,) or np.any(amps == 0) or not np.all(np.isfinite(amps)):
            raise InvariantViolation(f"need {2 * n} finite non-zero probe amplitudes, got {amplitudes}")
        amps.setflags(write=False)
    elif amplitudes is not None:
        raise ValueError("amplitudes are only used with probes='fixed'")
    state_plan = stomo.make_state_plan(n, prefix=f"{probe_name(0)}/")
    mean_plans = {}
    for k in range(1, 2 * n):
        _, disp = stomo.mean_settings(n, prefix=f"{probe_name(k)}/", with_bare=False)
        mean_plans[k] = disp
    plan = ChannelPlan(n, state_plan, mean_plans, probes, amps)
    labels = [s.label for s in plan.settings]
    if len(set(labels)) != len(labels):
        raise InvariantViolation("channel plan labels are not distinct")
    return plan


def probe_state(n: int, k: int, amplitude: float = 1.0) -> GaussianState:
    r = np.zeros(2 * n)
    r[k] = amplitude
    return displace(vacuum(n), r)


def simulate_channel(channel: GaussianChannel, plan: ChannelPlan,
                     budget: ms.ShotBudget = ms.EXACT) -> dict[str, float]:
    """Measure every setting of ``plan`` on the channel outputs.

    Also asserts that all probe outputs share one covariance matrix.
    """
    if channel.n != plan.n:
        raise InvariantViolation(f"{channel.n}-mode channel with a {plan.n}-mode plan")
    n = plan.n
    first_amp = plan.probe_amplitudes()[0] if plan.probes != "adaptive" else 1.0
    first = apply_channel(channel, probe_state(n, 0, first_amp))
    results = ms.run_settings(first, plan.state_plan.settings, budget)
    v_hat = stomo.reconstruct_state(results, plan.state_plan)[0].V if plan.probes == "adaptive" else None
    amps = plan.probe_amplitudes(v_hat)
    V0 = first.V
    for k, disp in plan.mean_plans.items():
        out = apply_channel(channel, probe_state(n, k, amps[k]))
        gap = float(np.abs(out.V - V0).max())
        if gap > PROBE_TOL * max(1.0, float(np.abs(V0).max())):
            raise InvariantViolation(f"output covariance for probe {probe_name(k)} differs by {gap:.3e}")
        results.update(ms.run_settings(out, disp.values(), budget))
    return results


@dataclass(frozen=True)
class RootRecovery:
    d: np.ndarray
    n_bar: float
    roots: tuple
    chosen: int
    discriminant: float
    alternatives: tuple = ()


def quadratic_roots(m, trace_v: float, n: int) -> tuple[tuple, float]:
    """Roots of ``2N - sum_i (m_i - N - 1/2)^2 + n = Tr V`` in ``N``.

    Returns the roots in ascending order and the discriminant. A negative
    discriminant within a relative slack of 1e-9 is treated as a double root.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (2 * n,):
        raise InvariantViolation(f"expected {2 * n} displaced averages, got {m.size}")
    a = m - 0.5
    s1, s2 = a.sum(), a @ a
    qa = 2.0 * n
    qb = -(2.0 + 2.0 * s1)
    qc = s2 - n + trace_v
    disc = qb * qb - 4 * qa * qc
    scale = qb * qb + abs(4 * qa * qc)
    if disc < 0:
        if disc < -DISCRIMINANT_SLACK * max(scale, 1.0):
            raise InconsistentMeasurements(
                f"negative discriminant {disc:.6g} recovering the bare average "
                f"(Tr V = {trace_v:.6g}, displaced averages {m.tolist()})"
            )
        disc = 0.0
    if disc == 0.0:
        r = -qb / (2 * qa)
        return (r, r), disc
    # stable pair, no cancellation in -b +/- sqrt(disc)
    q = -0.5 * (qb - np.sqrt(disc)) if qb < 0 else -0.5 * (qb + np.sqrt(disc))
    return tuple(sorted((q / qa, qc / q))), disc


def recover_mean_via_trace(m, trace_v: float, n: int, policy: str = "min-norm") -> RootRecovery:
    """Mean vector of an output whose bare average was not measured.

    ``m`` holds the displaced averages ordered ``(q1, p1, ..., qn, pn)``.
    ``"min-n"`` takes the smaller photon-number root; every other policy takes
    the minimum-norm mean at this stage. Both rules coincide, since the
    spurious root is larger in both photon number and norm exactly when
    ``delta > 0``.
    """
    if policy not in ROOT_POLICIES:
        raise ValueError(f"unknown root policy {policy!r}; expected one of {ROOT_POLICIES}")
    m = np.asarray(m, dtype=float)
    roots, disc = quadratic_roots(m, trace_v, n)
    cands = [m - r - 0.5 for r in roots]
    k = 0 if policy == "min-n" else int(np.argmin([c @ c for c in cands]))
    return RootRecovery(cands[k], roots[k], roots, k, disc, tuple(cands))


@dataclass(frozen=True, eq=False)
class ChannelEstimate:
    A: np.ndarray
    B: np.ndarray
    plan: ChannelPlan
    results: Mapping[str, float]
    output_estimate: stomo.StateEstimate
    amplitudes: np.ndarray
    cp_ok: bool
    cp_margin: float
    residuals: Mapping[str, float]
    root_log: tuple
    policy: str
    alternatives: tuple = field(default=())

    @property
    def n_settings(self) -> int:
        return len(self.plan)


def _assemble(amps, columns, v_out):
    A = np.column_stack(columns) / amps[None, :]
    B = 2 * v_out - A @ A.T
    return A, (B + B.T) / 2


def _enumerate(amps, first, recoveries):
    """Every root combination with its CP margin, as ``(choices, margin)`` pairs."""
    keys = sorted(recoveries)
    out = []
    for choice in itertools.product(*[range(len(set(recoveries[k].roots))) for k in keys]):
        cols = [first.d] + [recoveries[k].alternatives[c] for k, c in zip(keys, choice)]
        A, B = _assemble(amps, cols, first.V)
        out.append((tuple(int(c) for c in choice), is_cp(A, B)[1]))
    return tuple(out)


def tomograph_channel(
    source: Union[GaussianChannel, Mapping[str, float]],
    budget: ms.ShotBudget = ms.EXACT,
    plan: Optional[ChannelPlan] = None,
    root_policy: str = "min-norm",
    n: Optional[int] = None,
) -> ChannelEstimate:
    """Estimate ``(A, B)`` from a channel (simulated) or from measured averages.

    ``"report-both"`` keeps the minimum-norm choice and lists the CP margin of
    every root combination. ``"cp-consistent"`` picks the combination with the
    largest CP margin, ties going to the minimum-norm choice.
    """
    if root_policy not in ROOT_POLICIES:
        raise ValueError(f"unknown root policy {root_policy!r}; expected one of {ROOT_POLICIES}")
    if isinstance(source, GaussianChannel):
        plan = plan or make_channel_plan(source.n)
        results = simulate_channel(source, plan, budget)
    else:
        if plan is None:
            if n is None:
                raise ValueError("a plan or mode count is required when passing results")
            plan = make_channel_plan(n)
        results = dict(source)
    first = stomo.tomograph_state(results, plan=plan.state_plan)
    amps = plan.probe_amplitudes(first.V)
    recoveries = {}
    for k, disp in plan.mean_plans.items():
        labels = [disp[(i, axis)].label for i in range(plan.n) for axis in ("q", "p")]
        missing = [lb for lb in labels if lb not in results]
        if missing:
            raise MissingMeasurement(f"no result for setting {missing[0]!r}")
        m = [results[lb] for lb in labels]
        recoveries[k] = recover_mean_via_trace(m, first.trace_v, plan.n, root_policy)

    keys = sorted(recoveries)
    choice = tuple(recoveries[k].chosen for k in keys)
    alternatives = ()
    if root_policy in ("report-both", "cp-consistent"):
        alternatives = _enumerate(amps, first, recoveries)
    if root_policy == "cp-consistent":
        best = max(m for _, m in alternatives)
        tied = [c for c, m in alternatives if m >= best - 1e-9]
        default = tuple(c if len(set(recoveries[k].roots)) > 1 else 0 for k, c in zip(keys, choice))
        choice = default if default in tied else tied[0]
    columns = [first.d] + [recoveries[k].alternatives[c] for k, c in zip(keys, choice)]
    A, B = _assemble(amps, columns, first.V)
    ok, margin = is_cp(A, B)
    root_log = tuple(
        {
            "probe": probe_name(k),
            "amplitude": float(amps[k]),
            "roots": [float(r) for r in recoveries[k].roots],
            "chosen": int(c),
            "discriminant": float(recoveries[k].discriminant),
        }
        for k, c in zip(keys, choice)
    )
    return ChannelEstimate(A, B, plan, results, first, amps, ok, margin, dict(first.residuals),
                           root_log, root_policy, alternatives)
