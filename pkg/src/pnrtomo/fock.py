"""Truncated Fock-space oracle for one- and two-mode Gaussian states.

States are built by applying exponentials of quadratic generators to a
thermal state, in the same order as the covariance recipes, inside a padded
box of ``PAD * cutoff`` levels per mode. The result is then cut back to
``cutoff`` levels. Conventions (hbar = 1, ``a = (q + i p) / sqrt(2)``):

* rotation ``R(phi)``: ``exp(-i phi a^dag a)``
* squeeze ``S(r)``: ``exp[(r/2)(a^2 - a^dag^2)]``
* beam splitter ``B(theta)`` on modes ``(i, j)``: ``exp[theta (a_i^dag a_j - a_i a_j^dag)]``
* displacement by ``(q0, p0)``: ``exp(alpha a^dag - alpha^* a)``, ``alpha = (q0 + i p0) / sqrt(2)``

Each matches the symplectic matrix of the same name acting on ``(d, V)``.

A state is held as a weighted mixture of pure vectors. The thermal input is
either the exact number-state mixture (``thermal="fock"``) or a degree-5
cubature of its Glauber P function over coherent states (``thermal="coherent"``).
For a Gaussian unitary ``W``, ``<beta| W^dag N^k W |beta>`` is a polynomial of
degree ``2k`` in ``(Re beta, Im beta)``, so the cubature integrates ``<N>`` and
``<N^2>`` exactly.
The second form keeps the two-mode oracle small.
"""

from __future__ import annotations

import functools
from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import PnrTomoError
from .measurement import MeasurementSetting
from .state import SqueezedThermalParams

MIN_CUTOFF = 8
PAD = 1.25
TRACE_TOL = 1e-8
UNITARITY_TOL = 1e-10
CONVERGENCE_TOL = 1e-8
WEIGHT_FLOOR = 1e-20
THERMAL_MODES = ("fock", "coherent")
# Default caps; two modes at 520 levels need about 2 GB.
MAX_CUTOFF = {1: 2048, 2: 520}


class CutoffError(PnrTomoError):
    """The truncated state lost more than ``TRACE_TOL`` of its trace."""


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)


def number(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float))


@dataclass(frozen=True, eq=False)
class FockOperator:
    cutoff: int
    matrix: np.ndarray

    def commutator_defect(self) -> float:
        """``max |[a, a^dag] - 1|`` below the boundary row; zero for :func:`annihilation`."""
        a = self.matrix
        c = a @ a.conj().T - a.conj().T @ a
        k = self.cutoff - 1
        return float(np.abs(c[:k, :k] - np.eye(k)).max()) if k else 0.0


def _certify(U: np.ndarray) -> np.ndarray:
    res = float(np.abs(U.conj().T @ U - np.eye(U.shape[0])).max())
    if res > UNITARITY_TOL:
        raise PnrTomoError(f"unitary fails the {UNITARITY_TOL:g} residual check ({res:.3e})")
    return U


# The single-mode generators are real antisymmetric and (per parity class for
# the squeezer) tridiagonal. Conjugating by diag(i^k) turns each into i times a
# real symmetric tridiagonal matrix whose eigensystem does not depend on the
# gate parameter, so it is computed once per dimension.

@functools.lru_cache(maxsize=16)
def _tridiagonal_eig(off: tuple) -> tuple[np.ndarray, np.ndarray]:
    w, W = eigh_tridiagonal(np.zeros(len(off) + 1), np.array(off))
    return w, W


def _phase(dim: int) -> np.ndarray:
    return 1j ** np.arange(dim)


def _exp_tridiagonal(off, t: float) -> np.ndarray:
    """``exp(t * (X - X^T))`` for ``X`` with superdiagonal ``off``."""
    w, W = _tridiagonal_eig(tuple(float(x) for x in off))
    T = _phase(len(w))
    # X - X^T = T (i C) T^dag with C symmetric tridiagonal, off-diagonal ``off``
    return (T[:, None] * (W * np.exp(1j * t * w)) @ W.T) * T.conj()[None, :]


@functools.lru_cache(maxsize=256)
def _squeeze(r: float, dim: int) -> np.ndarray:
    U = np.zeros((dim, dim), dtype=complex)
    for parity in (0, 1):
        idx = np.arange(parity, dim, 2)
        if idx.size == 1:
            U[idx[0], idx[0]] = 1.0
            continue
        off = np.sqrt((idx[:-1] + 1.0) * (idx[:-1] + 2.0))
        U[np.ix_(idx, idx)] = _exp_tridiagonal(off, r / 2)
    return _certify(U)


@functools.lru_cache(maxsize=256)
def _displace(re: float, im: float, dim: int) -> np.ndarray:
    alpha = complex(re, im)
    off = np.sqrt(np.arange(1, dim, dtype=float))
    # x (a^dag - a) is -(X - X^T) for X = a
    U = _exp_tridiagonal(off, -abs(alpha))
    ph = np.exp(1j * np.angle(alpha) * np.arange(dim))
    return _certify(ph[:, None] * U * ph.conj()[None, :])


BLOCK_CACHE_BYTES = 1_500_000_000
_block_cache: "OrderedDict[tuple, tuple]" = OrderedDict()
_PROBES = np.random.default_rng(20240531).standard_normal((4096, 2))


def _probe_certify(U: np.ndarray) -> np.ndarray:
    """Unitarity check on two fixed random vectors, ``O(m^2)`` instead of ``O(m^3)``."""
    v = _PROBES[: U.shape[0]]
    res = float(np.abs(U.conj().T @ (U @ v) - v).max() / max(1.0, np.abs(v).max()))
    if res > UNITARITY_TOL:
        raise PnrTomoError(f"unitary fails the {UNITARITY_TOL:g} probe check ({res:.3e})")
    return U


def _real_block(theta: float, k: int, js: np.ndarray) -> np.ndarray:
    """``exp(theta G)`` for the beam-splitter generator on levels ``(j, k - j)``, ``j`` in ``js``.

    ``G = -(X - X^T)`` with ``X`` tridiagonal, so by the diag(i^j) similarity
    ``U_ab = i^(a-b) sum_l W_al W_bl exp(-i theta w_l)``, which is real.
    """
    m = len(js)
    if m == 1:
        return np.ones((1, 1))
    # a_i^dag a_j sends (j, k - j) to (j + 1, k - j - 1)
    c = np.sqrt((js[:-1] + 1.0) * (k - js[:-1]))
    w, W = eigh_tridiagonal(np.zeros(m), c)
    C = (W * np.cos(theta * w)) @ W.T
    S = (W * np.sin(theta * w)) @ W.T
    d = np.subtract.outer(np.arange(m), np.arange(m))
    even = d % 2 == 0
    sign = np.where(even, (-1.0) ** (d // 2), (-1.0) ** ((d - 1) // 2))
    return _probe_certify(np.where(even, sign * C, sign * S))


@functools.lru_cache(maxsize=None)
def _full_block(theta: float, k: int) -> np.ndarray:
    return _real_block(theta, k, np.arange(k + 1))


def _beamsplitter_blocks(theta: float, dim: int) -> tuple:
    """Real orthogonal block per total photon number, in increasing order of the total.

    Blocks with total below ``dim`` are whole and shared between box sizes; the
    others are cut by the box and cached per size, up to ``BLOCK_CACHE_BYTES``.
    """
    key = (float(theta), int(dim))
    if key in _block_cache:
        _block_cache.move_to_end(key)
        return _block_cache[key]
    cut = tuple(_real_block(theta, k, np.arange(k - dim + 1, dim)) for k in range(dim, 2 * dim - 1))
    blocks = tuple(_full_block(float(theta), k) for k in range(dim)) + cut
    _block_cache[key] = blocks
    while len(_block_cache) > 1 and sum(b.nbytes for v in _block_cache.values() for b in v[dim:]) > BLOCK_CACHE_BYTES:
        _block_cache.popitem(last=False)
    return blocks


def clear_caches():
    """Drop every cached unitary (they can hold gigabytes at large cutoffs)."""
    _block_cache.clear()
    for f in (_full_block, _block_layout, _tridiagonal_eig, _squeeze, _displace):
        f.cache_clear()


@functools.lru_cache(maxsize=16)
def _block_layout(dim: int) -> tuple[np.ndarray, list]:
    """Flat box indices ordered by total photon number, and each block's row span."""
    order, spans, lo = [], [], 0
    for k in range(2 * dim - 1):
        js = np.arange(max(0, k - dim + 1), min(k, dim - 1) + 1)
        order.append(js * dim + (k - js))
        spans.append((lo, lo + len(js)))
        lo += len(js)
    return np.concatenate(order), spans


class _Mixture:
    """Weighted pure states in a box of ``dim`` levels per mode."""

    def __init__(self, weights, psi, n: int):
        self.weights = np.asarray(weights, dtype=float)
        self.psi = np.asarray(psi, dtype=complex)
        self.n = n

    @property
    def dim(self) -> int:
        return self.psi.shape[-1]

    def copy(self) -> "_Mixture":
        return _Mixture(self.weights, self.psi.copy(), self.n)

    def single(self, U: np.ndarray, mode: int):
        if self.n == 1 or mode == 1:
            self.psi = self.psi @ U.T
        else:
            self.psi = np.matmul(U, self.psi)

    def phase(self, ph: np.ndarray, mode: int):
        if self.n == 1 or mode == 1:
            self.psi *= ph
        else:
            self.psi *= ph[:, None]

    def beamsplitter(self, theta: float, modes: tuple):
        if self.n != 2:
            raise PnrTomoError("beam splitter needs two modes")
        dim = self.dim
        psi = self.psi if tuple(modes) == (0, 1) else self.psi.transpose(0, 2, 1)
        order, spans = _block_layout(dim)
        # rows grouped by total photon number, one contiguous slab per block
        g = np.ascontiguousarray(psi.reshape(len(psi), dim * dim)[:, order].T)
        # real blocks act on real and imaginary parts alike: use a float view
        gf = g.view(np.float64)
        for (lo, hi), U in zip(spans, _beamsplitter_blocks(float(theta), dim)):
            if hi - lo > 1:
                gf[lo:hi] = U @ gf[lo:hi]
        out = np.empty_like(psi).reshape(len(psi), dim * dim)
        out[:, order] = g.T
        out = out.reshape(psi.shape)
        self.psi = out if tuple(modes) == (0, 1) else np.ascontiguousarray(out.transpose(0, 2, 1))


def _coherent_amplitudes(beta: complex, dim: int) -> np.ndarray:
    amp = np.empty(dim, dtype=complex)
    amp[0] = np.exp(-abs(beta) ** 2 / 2)
    for k in range(1, dim):
        amp[k] = amp[k - 1] * beta / np.sqrt(k)
    return amp


def _thermal_fock(n_th: float, dim: int):
    """Number-state mixture; terms below ``WEIGHT_FLOOR`` are dropped (invisible in double precision)."""
    if n_th == 0:
        p = (np.arange(dim) == 0).astype(float)
    else:
        x = n_th / (n_th + 1)
        p = x ** np.arange(dim) / (n_th + 1)
    keep = np.flatnonzero(p > WEIGHT_FLOOR)
    return p[keep], np.eye(dim, dtype=complex)[keep]


def _p_function_nodes() -> tuple[np.ndarray, np.ndarray]:
    """Seven-point degree-5 rule for the weight ``exp(-x^2 - y^2) / pi`` on the plane.

    The origin carries weight 1/2 and six points on the circle of radius
    ``sqrt(2)`` at angles ``k pi / 3`` carry 1/12 each. This integrates every
    monomial of total degree <= 5 exactly.
    """
    ang = np.arange(6) * np.pi / 3
    pts = np.concatenate([[0j], np.sqrt(2) * np.exp(1j * ang)])
    w = np.concatenate([[0.5], np.full(6, 1 / 12)])
    return pts, w


def _thermal_coherent(n_th: float, dim: int):
    """Coherent-state quadrature of the thermal P function, variance ``n_th / 2`` per quadrature."""
    if n_th == 0:
        return np.ones(1), _coherent_amplitudes(0, dim)[None, :]
    pts, w = _p_function_nodes()
    psi = np.array([_coherent_amplitudes(np.sqrt(n_th) * z, dim) for z in pts])
    return w, psi


def _joint_p_function_nodes() -> tuple[np.ndarray, np.ndarray]:
    """24-point degree-5 rule for ``exp(-|z1|^2 - |z2|^2) / pi^2`` on C^2.

    Sixteen points ``(+-a, +-a, +-a, +-a)`` carry 1/144 each and the eight
    points ``+-a e_k`` carry 1/9 each, with ``a = sqrt(3/2)`` in every real
    coordinate. Every monomial of total degree <= 5 is integrated exactly.
    """
    a = np.sqrt(1.5)
    corners = a * np.array(np.meshgrid(*[[-1.0, 1.0]] * 4, indexing="ij")).reshape(4, -1).T
    axes = a * np.concatenate([np.eye(4), -np.eye(4)])
    x = np.concatenate([corners, axes])
    w = np.concatenate([np.full(16, 1 / 144), np.full(8, 1 / 9)])
    return x[:, 0::2] + 1j * x[:, 1::2], w


def _thermal(n_th: float, dim: int, thermal: str) -> _Mixture:
    if thermal not in THERMAL_MODES:
        raise ValueError(f"unknown thermal mode {thermal!r}; expected one of {THERMAL_MODES}")
    make = _thermal_fock if thermal == "fock" else _thermal_coherent
    return _Mixture(*make(float(n_th), dim), 1)


def _paired_thermal(n_ths, dim: int) -> tuple[_Mixture, _Mixture]:
    """Per-mode coherent states at the joint nodes; component ``k`` of each pairs up."""
    pts, w = _joint_p_function_nodes()
    return tuple(
        _Mixture(w, [_coherent_amplitudes(np.sqrt(nt) * z, dim) for z in pts[:, m]], 1)
        for m, nt in enumerate(n_ths)
    )


def _pair(m0: _Mixture, m1: _Mixture) -> _Mixture:
    psi = m0.psi[:, :, None] * m1.psi[:, None, :]
    return _Mixture(m0.weights, psi, 2)


def _product(m0: _Mixture, m1: _Mixture) -> _Mixture:
    weights = np.outer(m0.weights, m1.weights).reshape(-1)
    psi = (m0.psi[:, None, :, None] * m1.psi[None, :, None, :]).reshape(-1, m0.dim, m0.dim)
    return _Mixture(weights, psi, 2)


# -- operation lists ----------------------------------------------------------
# ("S", mode, r) | ("R", mode, phi) | ("D", mode, q0, p0) | ("B", (i, j), theta)

@dataclass(frozen=True)
class TwoModeRecipe:
    """Two squeezed thermal modes mixed on a balanced beam splitter, then displaced by ``u``."""

    mode1: SqueezedThermalParams
    mode2: SqueezedThermalParams
    u: float = 0.0


Recipe = Union[SqueezedThermalParams, TwoModeRecipe]


def recipe_modes(recipe: Recipe) -> int:
    return 1 if isinstance(recipe, SqueezedThermalParams) else 2


def _recipe_ops(recipe: Recipe) -> tuple[list, list, list]:
    """Thermal occupations, per-mode operations, then operations on the joint state."""
    if isinstance(recipe, SqueezedThermalParams):
        p = recipe
        return [p.n_th], [[("S", 0, p.s), ("R", 0, p.beta)]], [("D", 0, p.u, p.u)]
    params = (recipe.mode1, recipe.mode2)
    local = [[("S", 0, p.s), ("R", 0, p.beta)] for p in params]
    joint = [("B", (0, 1), np.pi / 4), ("D", 0, recipe.u, recipe.u), ("D", 1, recipe.u, recipe.u)]
    return [p.n_th for p in params], local, joint


def _setting_ops(setting: Optional[MeasurementSetting]) -> list:
    if setting is None or setting.kind == "bare":
        return []
    if setting.kind == "displaced":
        q0, p0 = (setting.amount, 0.0) if setting.axis == "q" else (0.0, setting.amount)
        return [("D", setting.mode, q0, p0)]
    g = setting.gate
    if g.family == "P":
        (i,) = g.modes
        return [("R", i, g.phi), ("S", i, g.r)]
    i, j = g.modes
    return [("R", i, g.phi), ("B", (i, j), np.pi / 4), ("S", i, g.r)]


def _apply(mix: _Mixture, ops: list):
    dim = mix.dim
    for op in ops:
        kind = op[0]
        if kind == "B":
            mix.beamsplitter(op[2], op[1])
            continue
        mode = op[1]
        if mode >= mix.n:
            raise PnrTomoError(f"operation on mode {mode} of a {mix.n}-mode state")
        if kind == "S":
            if op[2] != 0:
                mix.single(_squeeze(float(op[2]), dim), mode)
        elif kind == "R":
            if op[2] != 0:
                mix.phase(np.exp(-1j * float(op[2]) * np.arange(dim)), mode)
        elif kind == "D":
            q0, p0 = float(op[2]), float(op[3])
            if q0 or p0:
                mix.single(_displace(q0 / np.sqrt(2), p0 / np.sqrt(2), dim), mode)


# -- public state -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FockState:
    """Mixture ``sum_k w_k |psi_k><psi_k|`` truncated to ``cutoff`` levels per mode."""

    cutoff: int
    n: int
    weights: np.ndarray
    vectors: np.ndarray

    @property
    def trace(self) -> float:
        axes = tuple(range(1, self.vectors.ndim))
        return float(self.weights @ (np.abs(self.vectors) ** 2).sum(axis=axes))

    def density_matrix(self) -> np.ndarray:
        """Dense density matrix; only sensible for small cutoffs."""
        v = self.vectors.reshape(len(self.weights), -1)
        return (v.T * self.weights) @ v.conj()

    def photon_distribution(self) -> np.ndarray:
        """Probability of each total photon number ``0 .. n(cutoff - 1)``."""
        probs = self.weights @ (np.abs(self.vectors.reshape(len(self.weights), -1)) ** 2)
        totals = _totals(self.cutoff, self.n).reshape(-1)
        return np.bincount(totals, weights=probs, minlength=self.n * (self.cutoff - 1) + 1)


def _totals(cutoff: int, n: int) -> np.ndarray:
    k = np.arange(cutoff)
    return k if n == 1 else k[:, None] + k[None, :]


def _prepare(recipe: Recipe, dim: int, thermal: Optional[str]) -> _Mixture:
    n_ths, local, joint = _recipe_ops(recipe)
    thermal = thermal or ("fock" if len(n_ths) == 1 else "coherent")
    paired = thermal == "coherent" and len(n_ths) == 2 and min(n_ths) > 0
    if paired:
        parts = list(_paired_thermal(n_ths, dim))
    else:
        parts = [_thermal(nt, dim, thermal) for nt in n_ths]
    for mix, ops in zip(parts, local):
        _apply(mix, ops)
    if len(parts) == 1:
        mix = parts[0]
    else:
        mix = _pair(*parts) if paired else _product(*parts)
    _apply(mix, joint)
    return mix


def _truncate(mix: _Mixture, cutoff: int) -> FockState:
    vecs = mix.psi[:, :cutoff] if mix.n == 1 else mix.psi[:, :cutoff, :cutoff]
    state = FockState(cutoff, mix.n, mix.weights, vecs)
    tr = state.trace
    if tr < 1 - TRACE_TOL:
        raise CutoffError(f"trace {tr:.12f} at cutoff {cutoff}; raise the cutoff")
    return state


def _box(cutoff: int) -> int:
    return int(np.ceil(PAD * cutoff))


def _check_cutoff(cutoff) -> int:
    if int(cutoff) != cutoff or cutoff < MIN_CUTOFF:
        raise ValueError(f"cutoff must be an integer >= {MIN_CUTOFF}, got {cutoff!r}")
    return int(cutoff)


def build_gaussian_fock(recipe: Recipe, cutoff: int, setting: Optional[MeasurementSetting] = None,
                        thermal: Optional[str] = None) -> FockState:
    """Fock-space version of ``recipe``, optionally followed by a measurement setting.

    The work is done with ``PAD * cutoff`` levels per mode and then truncated.
    ``thermal`` defaults to ``"fock"`` for one mode and ``"coherent"`` for two.
    Raises :class:`CutoffError` if the truncated trace is below ``1 - 1e-8``.
    """
    cutoff = _check_cutoff(cutoff)
    mix = _prepare(recipe, _box(cutoff), thermal)
    _apply(mix, _setting_ops(setting))
    return _truncate(mix, cutoff)


def fock_mean_and_variance(state: FockState) -> tuple[float, float]:
    """``<N>`` and ``<N^2> - <N>^2`` of the total photon number."""
    tot = _totals(state.cutoff, state.n).astype(float)
    axes = tuple(range(1, state.vectors.ndim))
    p = np.abs(state.vectors) ** 2
    m1 = float(state.weights @ (p * tot).sum(axis=axes))
    m2 = float(state.weights @ (p * tot * tot).sum(axis=axes))
    return m1, m2 - m1 * m1


@dataclass(frozen=True)
class OracleResult:
    mean: float
    variance: float
    cutoff: int
    change: float


def oracle_moments_many(recipe: Recipe, settings: Sequence[Optional[MeasurementSetting]],
                        start: int = 16, max_cutoff: Optional[int] = None,
                        tol: float = CONVERGENCE_TOL, thermal: Optional[str] = None,
                        growth: float = 1.5) -> list[OracleResult]:
    """Converged ``(<N>, Var)`` for each setting (``None`` means bare).

    The cutoff grows by ``growth`` until two successive values of both the mean
    and the variance differ by less than ``tol``. A stage whose trace check
    fails counts as unconverged. The recipe state is prepared once per stage
    and shared by all settings. Raises :class:`CutoffError` if ``max_cutoff``
    is passed first.
    """
    if growth <= 1:
        raise ValueError(f"growth factor must exceed 1, got {growth}")
    n = recipe_modes(recipe)
    max_cutoff = max_cutoff or MAX_CUTOFF[n]
    ops = [_setting_ops(s) for s in settings]
    prev = [None] * len(ops)
    done: list = [None] * len(ops)
    cutoff = _check_cutoff(max(int(start), MIN_CUTOFF))
    while cutoff <= max_cutoff:
        base = _prepare(recipe, _box(cutoff), thermal)
        for k, op in enumerate(ops):
            if done[k] is not None:
                continue
            mix = base.copy() if op else base
            _apply(mix, op)
            try:
                cur = fock_mean_and_variance(_truncate(mix, cutoff))
            except CutoffError:
                cur = None
            if cur is not None and prev[k] is not None:
                change = max(abs(cur[0] - prev[k][0]), abs(cur[1] - prev[k][1]))
                if change < tol:
                    done[k] = OracleResult(cur[0], cur[1], cutoff, change)
            prev[k] = cur
        if all(d is not None for d in done):
            return done
        if cutoff == max_cutoff:
            break
        cutoff = min(int(np.ceil(cutoff * growth)), max_cutoff)
    raise CutoffError(f"no convergence to {tol:g} below cutoff {max_cutoff}; raise the cutoff")


def oracle_moments(recipe: Recipe, setting: Optional[MeasurementSetting] = None, **kwargs) -> OracleResult:
    return oracle_moments_many(recipe, [setting], **kwargs)[0]
