"""Gaussian states and their closed-form photon-number statistics.

A state is the pair ``(d, V)``: the quadrature mean and the symmetrised
covariance matrix, with the vacuum at ``V = I/2`` (hbar = 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import symplectic as sp
from .errors import InvariantViolation

SYMMETRY_TOL = 1e-12
PHYSICALITY_FLOOR = -1e-10


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def physicality_margin(V) -> float:
    """Smallest eigenvalue of the Hermitian matrix ``V + (i/2) Omega``."""
    V = np.asarray(V, dtype=float)
    H = V + 0.5j * sp.omega(V.shape[0] // 2)
    return float(np.linalg.eigvalsh(H).min())


def symplectic_eigenvalues(V) -> np.ndarray:
    """Williamson spectrum of ``V``, sorted ascending (one value per mode)."""
    V = np.asarray(V, dtype=float)
    ev = np.linalg.eigvals(1j * sp.omega(V.shape[0] // 2) @ V)
    return np.sort(np.abs(ev.real))[::2]


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Mean ``d`` (length 2n) and covariance ``V`` (2n x 2n) of a Gaussian state.

    Construction validates symmetry and the uncertainty relation. Use
    :meth:`unchecked` for estimates, which need not be physical.
    """

    d: np.ndarray
    V: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        d = np.array(self.d, dtype=float).reshape(-1)
        V = np.array(self.V, dtype=float)
        if V.ndim != 2 or V.shape[0] != V.shape[1] or V.shape[0] % 2:
            raise InvariantViolation(f"covariance must be 2n x 2n, got shape {V.shape}")
        if d.shape != (V.shape[0],):
            raise InvariantViolation(f"mean has length {d.size}, covariance is {V.shape[0]}-dim")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(V))):
            raise InvariantViolation("state has non-finite entries")
        asym = float(np.abs(V - V.T).max())
        if asym > SYMMETRY_TOL * max(1.0, float(np.abs(V).max())):
            raise InvariantViolation(f"covariance is not symmetric (max asymmetry {asym:.3e})")
        V = (V + V.T) / 2
        object.__setattr__(self, "d", _frozen(d))
        object.__setattr__(self, "V", _frozen(V))
        if not self.check:
            return
        margin = physicality_margin(V)
        if margin < PHYSICALITY_FLOOR:
            raise InvariantViolation(
                f"covariance violates V + i/2 Omega >= 0 (min eigenvalue {margin:.3e})"
            )

    @classmethod
    def unchecked(cls, d, V) -> "GaussianState":
        """Build without the physicality check (symmetry is still enforced)."""
        return cls(d, V, check=False)

    @property
    def n(self) -> int:
        return self.V.shape[0] // 2

    @property
    def margin(self) -> float:
        return physicality_margin(self.V)

    @property
    def is_physical(self) -> bool:
        return self.margin >= PHYSICALITY_FLOOR

    def __repr__(self):
        return f"GaussianState(n={self.n}, d={self.d.tolist()})"


@dataclass(frozen=True)
class SqueezedThermalParams:
    """Single-mode recipe: thermal occupation, squeezing, phase angle, displacement."""

    n_th: float = 0.0
    s: float = 0.0
    beta: float = 0.0
    u: float = 0.0

    def __post_init__(self):
        for name in ("n_th", "s", "beta", "u"):
            if not np.isfinite(getattr(self, name)):
                raise InvariantViolation(f"{name} must be finite")
        if self.n_th < 0:
            raise InvariantViolation(f"thermal occupation must be >= 0, got {self.n_th}")


def _check_dim(state: GaussianState, size: int, what: str):
    if size != 2 * state.n:
        raise InvariantViolation(f"{what} has dimension {size}, state has {2 * state.n}")


def vacuum(n: int) -> GaussianState:
    if int(n) != n or n < 1:
        raise ValueError(f"mode count must be a positive integer, got {n!r}")
    return GaussianState(np.zeros(2 * n), np.eye(2 * n) / 2)


def coherent(d) -> GaussianState:
    d = np.asarray(d, dtype=float)
    return displace(vacuum(d.size // 2), d)


def displace(state: GaussianState, r) -> GaussianState:
    r = np.asarray(r, dtype=float).reshape(-1)
    _check_dim(state, r.size, "displacement")
    return GaussianState(state.d + r, state.V, check=state.check)


def apply_gate(state: GaussianState, gate) -> GaussianState:
    S = sp.as_matrix(gate)
    _check_dim(state, S.shape[0], "gate")
    V = S @ state.V @ S.T
    return GaussianState(S @ state.d, (V + V.T) / 2, check=state.check)


def marginal(state: GaussianState, modes: Sequence[int]) -> GaussianState:
    modes = [int(m) for m in modes]
    if not modes or len(set(modes)) != len(modes):
        raise InvariantViolation(f"modes must be distinct and non-empty, got {modes}")
    if any(m < 0 or m >= state.n for m in modes):
        raise InvariantViolation(f"mode index out of range for n={state.n}: {modes}")
    idx = sp._quadrature_index(modes)
    return GaussianState(state.d[idx], state.V[np.ix_(idx, idx)], check=state.check)


def tensor(*states: GaussianState) -> GaussianState:
    d = np.concatenate([s.d for s in states])
    size = d.size
    V = np.zeros((size, size))
    k = 0
    for s in states:
        m = s.V.shape[0]
        V[k : k + m, k : k + m] = s.V
        k += m
    return GaussianState(d, V)


def squeezed_thermal_cov(params: SqueezedThermalParams) -> np.ndarray:
    R = sp.rotation(params.beta).S
    S2 = sp.squeeze(2 * params.s).S
    return (2 * params.n_th + 1) / 2 * R @ S2 @ R.T


def squeezed_thermal(params: SqueezedThermalParams) -> GaussianState:
    """Single-mode squeezed coherent thermal state with mean ``(u, u)``."""
    return GaussianState([params.u, params.u], squeezed_thermal_cov(params))


def two_mode_benchmark(
    params1: SqueezedThermalParams, params2: SqueezedThermalParams, u: float
) -> GaussianState:
    """Two squeezed thermal modes mixed on a balanced beam splitter, mean ``(u, u, u, u)``.

    The per-mode ``u`` fields are ignored; the displacement is applied after mixing.
    """
    B = sp.beamsplitter(np.pi / 4).S
    V0 = np.zeros((4, 4))
    V0[:2, :2] = squeezed_thermal_cov(params1)
    V0[2:, 2:] = squeezed_thermal_cov(params2)
    return GaussianState(np.full(4, float(u)), B @ V0 @ B.T)


def random_state(n: int, rng: np.random.Generator, max_thermal: float = 1.0,
                 squeeze_scale: float = 0.4, mean_scale: float = 1.0) -> GaussianState:
    """Random physical state: Williamson form conjugated by a random symplectic."""
    nu = 0.5 + rng.uniform(0, max_thermal, size=n)
    S = sp.random_symplectic(n, rng, scale=squeeze_scale)
    V = S @ np.diag(np.repeat(nu, 2)) @ S.T
    return GaussianState(rng.normal(scale=mean_scale, size=2 * n), (V + V.T) / 2)


# -- photon-number statistics -------------------------------------------------

def _mean_photon(d, V) -> float:
    return 0.5 * (np.trace(V) - V.shape[0] / 2 + d @ d)


def _photon_variance(d, V) -> float:
    half = np.eye(V.shape[0]) / 2
    return 0.5 * np.trace((V - half) @ (V + half)) + d @ V @ d


def mean_photon(state: GaussianState) -> float:
    return float(_mean_photon(state.d, state.V))


def photon_variance(state: GaussianState) -> float:
    return float(_photon_variance(state.d, state.V))


def displaced_mean_photon(state: GaussianState, r) -> float:
    r = np.asarray(r, dtype=float).reshape(-1)
    _check_dim(state, r.size, "displacement")
    return float(_mean_photon(state.d + r, state.V))


def displaced_photon_variance(state: GaussianState, r) -> float:
    r = np.asarray(r, dtype=float).reshape(-1)
    _check_dim(state, r.size, "displacement")
    return float(_photon_variance(state.d + r, state.V))


def gated_mean_photon(state: GaussianState, gate) -> float:
    S = sp.as_matrix(gate)
    _check_dim(state, S.shape[0], "gate")
    StS = S.T @ S
    return float(0.5 * (np.trace(state.V @ StS) - state.n) + 0.5 * state.d @ StS @ state.d)


VARIANCE_FORMS = ("transformed", "printed")


def gated_photon_variance(state: GaussianState, gate, form: str = "transformed") -> float:
    """Photon-number variance after a symplectic gate.

    ``form="transformed"`` evaluates the Gaussian variance on ``(S d, S V S^T)``
    and is the form confirmed by the Fock-space oracle. ``form="printed"`` keeps
    the untransformed ``d^T V d`` displacement term, which disagrees with the
    oracle whenever ``S^T S`` does not commute with ``V`` on ``d``.
    """
    S = sp.as_matrix(gate)
    _check_dim(state, S.shape[0], "gate")
    W = S @ state.V @ S.T
    half = np.eye(W.shape[0]) / 2
    trace_term = 0.5 * np.trace((W - half) @ (W + half))
    if form == "transformed":
        Sd = S @ state.d
        return float(trace_term + Sd @ W @ Sd)
    if form == "printed":
        return float(trace_term + state.d @ state.V @ state.d)
    raise ValueError(f"unknown variance form {form!r}; expected one of {VARIANCE_FORMS}")


def project_to_physical(V) -> np.ndarray:
    """Raise symplectic eigenvalues below 1/2 to exactly 1/2.

    Uses the Williamson decomposition ``V = S diag(nu) S^T`` computed from the
    real Schur form of ``V^-1/2 Omega V^-1/2``. Non-positive-definite input is
    first clipped to a small positive spectrum.
    """
    from scipy.linalg import schur, sqrtm

    V = np.asarray(V, dtype=float)
    V = (V + V.T) / 2
    w, U = np.linalg.eigh(V)
    if w.min() <= 1e-9:
        V = U @ np.diag(np.maximum(w, 1e-9)) @ U.T
    n = V.shape[0] // 2
    Vh = np.real(sqrtm(V))
    Vmh = np.linalg.inv(Vh)
    A = Vmh @ sp.omega(n) @ Vmh
    T, O = schur(A, output="real")
    # order each 2x2 block so that T = O (+ [[0, 1/nu], [-1/nu, 0]]) O^T
    nus = np.empty(n)
    for k in range(n):
        b = T[2 * k, 2 * k + 1]
        if b < 0:
            O[:, [2 * k, 2 * k + 1]] = O[:, [2 * k + 1, 2 * k]]
            b = -b
        nus[k] = 1.0 / b
    S = Vh @ O @ np.diag(np.repeat(1 / np.sqrt(nus), 2))
    clipped = np.diag(np.repeat(np.maximum(nus, 0.5), 2))
    out = S @ clipped @ S.T
    return (out + out.T) / 2
