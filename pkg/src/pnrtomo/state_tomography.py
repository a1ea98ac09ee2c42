"""Gaussian state tomography from total-photon-number averages.

The plan uses ``2n^2 + 3n`` distinct settings: one bare measurement, ``2n``
unit displacements, ``3n - 1`` single-mode P-gate settings (the last mode gets
two and borrows ``Tr V`` for the third equation) and four two-mode Q-gate
settings per unordered mode pair.

Each gate equation is linear in the unknown covariance entries once the mean is
known. The coefficients are taken from ``G^T G - I`` of the actual gate, so
non-default gate parameters invert correctly as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np

from . import measurement as ms
from .errors import InvariantViolation, MissingMeasurement
from .state import GaussianState, project_to_physical

COND_LIMIT = 1e10


class GateParams(NamedTuple):
    tag: str
    r: float
    phi: float


LN2_HALF = 0.5 * np.log(2.0)
LN3_HALF = 0.5 * np.log(3.0)

P_SETTINGS = (
    GateParams("sqrt2,0", LN2_HALF, 0.0),
    GateParams("sqrt3,0", LN3_HALF, 0.0),
    GateParams("sqrt2,pi/4", LN2_HALF, np.pi / 4),
)
# Indices into P_SETTINGS kept for the last mode.
LAST_MODE_P = (0, 2)
Q_SETTINGS = (
    GateParams("sqrt2,0", LN2_HALF, 0.0),
    GateParams("sqrt3,0", LN3_HALF, 0.0),
    GateParams("sqrt2,pi/2", LN2_HALF, np.pi / 2),
    GateParams("sqrt3,pi/2", LN3_HALF, np.pi / 2),
)


def expected_count(n: int) -> int:
    return 2 * n * n + 3 * n


@dataclass(frozen=True, eq=False)
class StatePlan:
    n: int
    settings: tuple
    bare: ms.MeasurementSetting
    displaced: Mapping[tuple, ms.MeasurementSetting]
    intra: Mapping[int, tuple]
    inter: Mapping[tuple, tuple]
    prefix: str = ""

    def __len__(self):
        return len(self.settings)

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.settings]


def mean_settings(n: int, prefix: str = "", with_bare: bool = True) -> tuple[Optional[ms.MeasurementSetting], dict]:
    b = ms.bare(f"{prefix}N") if with_bare else None
    disp = {}
    for i in range(n):
        for axis in ("q", "p"):
            disp[(i, axis)] = ms.displaced(i, axis, 1.0, label=f"{prefix}D[{axis}{i}]")
    return b, disp


def make_state_plan(
    n: int,
    prefix: str = "",
    p_settings: Sequence[GateParams] = P_SETTINGS,
    q_settings: Sequence[GateParams] = Q_SETTINGS,
    last_mode_p: Sequence[int] = LAST_MODE_P,
) -> StatePlan:
    if int(n) != n or n < 1:
        raise ValueError(f"mode count must be a positive integer, got {n!r}")
    n = int(n)
    b, disp = mean_settings(n, prefix)
    settings = [b, *disp.values()]
    intra = {}
    for i in range(n):
        chosen = p_settings if i < n - 1 else [p_settings[k] for k in last_mode_p]
        intra[i] = tuple(
            ms.gated(ms.GateSpec("P", (i,), g.r, g.phi), f"{prefix}P[{i}]({g.tag})") for g in chosen
        )
        settings += intra[i]
    inter = {}
    for i, j in combinations(range(n), 2):
        inter[(i, j)] = tuple(
            ms.gated(ms.GateSpec("Q", (i, j), g.r, g.phi), f"{prefix}Q[{i},{j}]({g.tag})")
            for g in q_settings
        )
        settings += inter[(i, j)]
    labels = [s.label for s in settings]
    if len(set(labels)) != len(labels):
        raise InvariantViolation("plan labels are not distinct")
    return StatePlan(n, tuple(settings), b, disp, intra, inter, prefix)


def _get(results: Mapping[str, float], label: str) -> float:
    try:
        return float(results[label])
    except KeyError:
        raise MissingMeasurement(f"no result for setting {label!r}") from None


def estimate_mean(results: Mapping[str, float], plan: StatePlan) -> tuple[np.ndarray, float]:
    """Mean vector from the displaced settings; also returns the bare average."""
    n_bar = _get(results, plan.bare.label)
    d = np.empty(2 * plan.n)
    for (i, axis), s in plan.displaced.items():
        d[2 * i + (axis == "p")] = _get(results, s.label) - n_bar - 0.5
    return d, n_bar


def estimate_trace(d_hat, n_bar: float, n: int) -> float:
    d_hat = np.asarray(d_hat, dtype=float)
    return float(2 * n_bar - d_hat @ d_hat + n)


def _solve(rows, rhs, what: str) -> tuple[np.ndarray, float]:
    A = np.asarray(rows, dtype=float)
    b = np.asarray(rhs, dtype=float)
    if A.shape[0] < A.shape[1] or np.linalg.matrix_rank(A) < A.shape[1]:
        raise InvariantViolation(f"{what}: settings do not determine the unknowns")
    if np.linalg.cond(A) > COND_LIMIT:
        raise InvariantViolation(f"{what}: linear system is numerically singular")
    if A.shape[0] == A.shape[1]:
        x = np.linalg.solve(A, b)
    else:
        x = np.linalg.lstsq(A, b, rcond=None)[0]
    return x, float(np.linalg.norm(A @ x - b))


def estimate_intra(
    results: Mapping[str, float], plan: StatePlan, d_hat, n_bar: float, trace_v: float
) -> tuple[np.ndarray, dict]:
    """Per-mode 2x2 covariance blocks, shape ``(n, 2, 2)``."""
    n = plan.n
    d_hat = np.asarray(d_hat, dtype=float)
    blocks = np.empty((n, 2, 2))
    residuals = {}
    partial_trace = 0.0
    for i in range(n):
        di = d_hat[2 * i : 2 * i + 2]
        rows, rhs = [], []
        for s in plan.intra[i]:
            G = s.gate.local().S
            K = G.T @ G - np.eye(2)
            rows.append([K[0, 0], K[1, 1], 2 * K[0, 1]])
            rhs.append(2 * (_get(results, s.label) - n_bar) - di @ K @ di)
        if i == n - 1:
            rows.append([1.0, 1.0, 0.0])
            rhs.append(trace_v - partial_trace)
        (sqq, spp, sqp), res = _solve(rows, rhs, f"intra-mode block {i}")
        blocks[i] = [[sqq, sqp], [sqp, spp]]
        residuals[f"intra[{i}]"] = res
        partial_trace += sqq + spp
    return blocks, residuals


def estimate_inter(
    results: Mapping[str, float], plan: StatePlan, d_hat, n_bar: float, intra
) -> tuple[dict, dict]:
    """Off-diagonal 2x2 blocks ``V[i, j]`` for ``i < j``."""
    d_hat = np.asarray(d_hat, dtype=float)
    out, residuals = {}, {}
    for (i, j), settings in plan.inter.items():
        dij = np.concatenate([d_hat[2 * i : 2 * i + 2], d_hat[2 * j : 2 * j + 2]])
        rows, rhs = [], []
        for s in settings:
            G = s.gate.local().S
            X = G.T @ G - np.eye(4)
            known = np.trace(intra[i] @ X[:2, :2]) + np.trace(intra[j] @ X[2:, 2:])
            rows.append(X[:2, 2:].reshape(-1))
            rhs.append(_get(results, s.label) - n_bar - 0.5 * known - 0.5 * dij @ X @ dij)
        x, res = _solve(rows, rhs, f"inter-mode block ({i},{j})")
        out[(i, j)] = x.reshape(2, 2)
        residuals[f"inter[{i},{j}]"] = res
    return out, residuals


@dataclass(frozen=True, eq=False)
class StateEstimate:
    state: GaussianState
    plan: StatePlan
    results: Mapping[str, float]
    residuals: Mapping[str, float]
    trace_v: float
    n_bar: float
    projected: Optional[np.ndarray] = field(default=None)

    @property
    def d(self) -> np.ndarray:
        return self.state.d

    @property
    def V(self) -> np.ndarray:
        return self.state.V

    @property
    def n_settings(self) -> int:
        return len(self.plan)

    @property
    def physical(self) -> bool:
        return self.state.is_physical


def reconstruct_state(results: Mapping[str, float], plan: StatePlan) -> tuple[GaussianState, dict, float, float]:
    d_hat, n_bar = estimate_mean(results, plan)
    trace_v = estimate_trace(d_hat, n_bar, plan.n)
    intra, res_a = estimate_intra(results, plan, d_hat, n_bar, trace_v)
    inter, res_b = estimate_inter(results, plan, d_hat, n_bar, intra)
    n = plan.n
    V = np.zeros((2 * n, 2 * n))
    for i in range(n):
        V[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = intra[i]
    for (i, j), blk in inter.items():
        V[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = blk
        V[2 * j : 2 * j + 2, 2 * i : 2 * i + 2] = blk.T
    return GaussianState.unchecked(d_hat, V), {**res_a, **res_b}, trace_v, n_bar


def tomograph_state(
    source: Union[GaussianState, Mapping[str, float]],
    budget: ms.ShotBudget = ms.EXACT,
    plan: Optional[StatePlan] = None,
    project: bool = False,
    n: Optional[int] = None,
) -> StateEstimate:
    """Run (or invert) the full measurement plan.

    ``source`` is either the true state, which is then measured with ``budget``,
    or a mapping from setting label to measured average. For a mapping the mode
    count comes from ``plan`` or ``n``.
    """
    if isinstance(source, GaussianState):
        plan = plan or make_state_plan(source.n)
        if plan.n != source.n:
            raise InvariantViolation(f"{plan.n}-mode plan for a {source.n}-mode state")
        results = ms.run_settings(source, plan.settings, budget)
    else:
        if plan is None:
            if n is None:
                raise ValueError("a plan or mode count is required when passing results")
            plan = make_state_plan(n)
        results = dict(source)
    est, residuals, trace_v, n_bar = reconstruct_state(results, plan)
    projected = project_to_physical(est.V) if project else None
    return StateEstimate(est, plan, results, residuals, trace_v, n_bar, projected)
