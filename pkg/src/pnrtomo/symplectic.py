"""Real symplectic linear algebra in the (q1, p1, ..., qn, pn) ordering.

All matrices are dense ``float64`` arrays. Gates are immutable value objects
wrapping a ``2n x 2n`` matrix together with a human-readable label.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvariantViolation

SYMPLECTIC_TOL = 1e-12

_OMEGA_1 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def omega(n: int) -> np.ndarray:
    """Return the ``2n x 2n`` symplectic form as a direct sum of ``[[0, 1], [-1, 0]]``."""
    if int(n) != n or n < 1:
        raise ValueError(f"mode count must be a positive integer, got {n!r}")
    return _frozen(np.kron(np.eye(int(n)), _OMEGA_1))


def symplectic_residual(S) -> float:
    """Frobenius norm of ``S Omega S^T - Omega``."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
        raise InvariantViolation(f"expected a square even-sized matrix, got shape {S.shape}")
    om = omega(S.shape[0] // 2)
    return float(np.linalg.norm(S @ om @ S.T - om))


def is_symplectic(S, tol: float = SYMPLECTIC_TOL) -> bool:
    return symplectic_residual(S) <= tol * max(1.0, float(np.linalg.norm(S)) ** 2)


@dataclass(frozen=True, eq=False)
class SymplecticGate:
    """A symplectic matrix acting on ``n`` modes.

    The residual is checked at construction with a tolerance scaled by
    ``||S||^2`` so that strongly squeezing gates are not rejected for rounding.
    """

    S: np.ndarray
    label: str = "gate"

    def __post_init__(self):
        S = _frozen(self.S)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
            raise InvariantViolation(f"gate matrix must be 2n x 2n, got shape {S.shape}")
        if not np.all(np.isfinite(S)):
            raise InvariantViolation(f"gate {self.label!r} has non-finite entries")
        if not is_symplectic(S):
            raise InvariantViolation(
                f"gate {self.label!r} is not symplectic "
                f"(residual {symplectic_residual(S):.3e})"
            )
        object.__setattr__(self, "S", S)

    @property
    def n(self) -> int:
        return self.S.shape[0] // 2

    def __matmul__(self, other: "SymplecticGate") -> "SymplecticGate":
        if other.n != self.n:
            raise InvariantViolation(f"cannot compose {self.n}-mode and {other.n}-mode gates")
        return SymplecticGate(self.S @ other.S, f"{self.label}*{other.label}")

    @property
    def T(self) -> np.ndarray:
        return self.S.T

    def __repr__(self):
        return f"SymplecticGate(n={self.n}, label={self.label!r})"


def as_matrix(gate) -> np.ndarray:
    """Accept either a :class:`SymplecticGate` or a bare array."""
    return gate.S if isinstance(gate, SymplecticGate) else np.asarray(gate, dtype=float)


def identity(n: int) -> SymplecticGate:
    return SymplecticGate(np.eye(2 * n), f"I{n}")


def rotation(phi: float) -> SymplecticGate:
    """Single-mode phase shift ``[[cos, sin], [-sin, cos]]``."""
    c, s = np.cos(phi), np.sin(phi)
    return SymplecticGate(np.array([[c, s], [-s, c]]), f"R({phi:.17g})")


def squeeze(r: float) -> SymplecticGate:
    """Single-mode squeezer ``diag(e^-r, e^r)``."""
    return SymplecticGate(np.diag([np.exp(-r), np.exp(r)]), f"S({r:.17g})")


def beamsplitter(theta: float) -> SymplecticGate:
    """Two-mode beam splitter with transmissivity ``cos(theta)**2``."""
    c, s = np.cos(theta), np.sin(theta)
    I2 = np.eye(2)
    return SymplecticGate(np.block([[c * I2, s * I2], [-s * I2, c * I2]]), f"B({theta:.17g})")


def _quadrature_index(modes: Sequence[int]) -> list[int]:
    idx = []
    for m in modes:
        idx += [2 * m, 2 * m + 1]
    return idx


def embed(gate, modes: Sequence[int], n: int) -> SymplecticGate:
    """Place ``gate`` on the listed modes of an ``n``-mode system.

    ``modes[k]`` receives the gate's k-th mode, so ``embed(B, [2, 0], 3)`` makes
    mode 2 the first beam-splitter port.
    """
    S = as_matrix(gate)
    modes = [int(m) for m in modes]
    if S.shape != (2 * len(modes), 2 * len(modes)):
        raise InvariantViolation(
            f"gate acts on {S.shape[0] // 2} modes but {len(modes)} indices were given"
        )
    if len(set(modes)) != len(modes):
        raise InvariantViolation(f"repeated mode index in {modes}")
    if any(m < 0 or m >= n for m in modes):
        raise InvariantViolation(f"mode index out of range for n={n}: {modes}")
    out = np.eye(2 * n)
    idx = _quadrature_index(modes)
    out[np.ix_(idx, idx)] = S
    label = getattr(gate, "label", "gate")
    return SymplecticGate(out, f"{label}@{tuple(modes)}")


def direct_sum(*gates) -> SymplecticGate:
    mats = [as_matrix(g) for g in gates]
    size = sum(m.shape[0] for m in mats)
    out = np.zeros((size, size))
    k = 0
    for m in mats:
        out[k : k + m.shape[0], k : k + m.shape[0]] = m
        k += m.shape[0]
    return SymplecticGate(out, "+".join(getattr(g, "label", "M") for g in gates))


def p_gate(r: float, phi: float) -> SymplecticGate:
    """Phase shift followed by squeezing: ``S(r) R(phi)``."""
    return SymplecticGate(squeeze(r).S @ rotation(phi).S, f"P({r:.17g},{phi:.17g})")


def q_gate(r: float, phi: float) -> SymplecticGate:
    """Two-mode gate ``(S(r) + I) B(pi/4) (R(phi) + I)``."""
    I2 = np.eye(2)
    left = direct_sum(squeeze(r), I2).S
    right = direct_sum(rotation(phi), I2).S
    return SymplecticGate(left @ beamsplitter(np.pi / 4).S @ right, f"Q({r:.17g},{phi:.17g})")


def p_gate_coefficients(r: float, phi: float) -> tuple[float, float, float]:
    """Entries ``(k1, k2, k3)`` of ``P^T P - I = [[k1, k3], [k3, k2]]``."""
    P = p_gate(r, phi).S
    K = P.T @ P - np.eye(2)
    return float(K[0, 0]), float(K[1, 1]), float(K[0, 1])


def random_symplectic(n: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """``expm(Omega H)`` for a random symmetric ``H`` is symplectic."""
    from scipy.linalg import expm

    H = rng.normal(scale=scale, size=(2 * n, 2 * n))
    H = (H + H.T) / 2
    return expm(omega(n) @ H)
