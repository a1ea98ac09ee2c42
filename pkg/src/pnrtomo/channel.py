"""Gaussian channels in the ``(A, B)`` form: ``d -> A d``, ``V -> A V A^T + B/2``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import symplectic as sp
from .errors import InvariantViolation
from .state import GaussianState

CP_FLOOR = -1e-10
SYMMETRY_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _cp_matrix(A, B) -> np.ndarray:
    om = sp.omega(A.shape[0] // 2)
    return B + 1j * om - 1j * A @ om @ A.T


def is_cp(A, B) -> tuple[bool, float]:
    """Check ``B >= 0`` and ``B + i Omega - i A Omega A^T >= 0``.

    Returns ``(ok, margin)`` where ``margin`` is the smaller of the two minimum
    eigenvalues. Raises if ``B`` is not symmetric or the shapes disagree.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] % 2:
        raise InvariantViolation(f"A must be 2n x 2n, got shape {A.shape}")
    if B.shape != A.shape:
        raise InvariantViolation(f"B has shape {B.shape}, A has {A.shape}")
    asym = float(np.abs(B - B.T).max())
    if asym > SYMMETRY_TOL * max(1.0, float(np.abs(B).max())):
        raise InvariantViolation(f"B is not symmetric (max asymmetry {asym:.3e})")
    B = (B + B.T) / 2
    margin = min(
        float(np.linalg.eigvalsh(B).min()),
        float(np.linalg.eigvalsh(_cp_matrix(A, B)).min()),
    )
    return margin >= CP_FLOOR, margin


@dataclass(frozen=True, eq=False)
class GaussianChannel:
    A: np.ndarray
    B: np.ndarray
    label: str = "channel"
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        B = np.array(self.B, dtype=float)
        ok, margin = is_cp(A, B)
        if self.check and not ok:
            raise InvariantViolation(
                f"channel {self.label!r} violates complete positivity "
                f"(min eigenvalue {margin:.3e})"
            )
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "B", _frozen((B + B.T) / 2))

    @property
    def n(self) -> int:
        return self.A.shape[0] // 2

    @property
    def cp_margin(self) -> float:
        return is_cp(self.A, self.B)[1]

    def __repr__(self):
        return f"GaussianChannel(n={self.n}, label={self.label!r})"


def apply_channel(channel: GaussianChannel, state: GaussianState) -> GaussianState:
    if channel.n != state.n:
        raise InvariantViolation(f"{channel.n}-mode channel applied to {state.n}-mode state")
    A = channel.A
    V = A @ state.V @ A.T + channel.B / 2
    return GaussianState(A @ state.d, (V + V.T) / 2, check=state.check and channel.check)


# -- catalog ------------------------------------------------------------------

def identity_channel(n: int = 1) -> GaussianChannel:
    return GaussianChannel(np.eye(2 * n), np.zeros((2 * n, 2 * n)), "identity")


def attenuator(eta: float, n: int = 1) -> GaussianChannel:
    """Pure loss with transmissivity ``eta``: ``A = sqrt(eta) I``, ``B = (1 - eta) I``."""
    if not 0 <= eta <= 1:
        raise InvariantViolation(f"attenuator needs 0 <= eta <= 1, got {eta}")
    I = np.eye(2 * n)
    return GaussianChannel(np.sqrt(eta) * I, (1 - eta) * I, f"attenuator({eta})")


def amplifier(g: float, n: int = 1) -> GaussianChannel:
    """Phase-insensitive amplifier with amplitude gain ``g``: ``B = (g^2 - 1) I``."""
    if g < 1:
        raise InvariantViolation(f"amplifier needs gain g >= 1, got {g}")
    I = np.eye(2 * n)
    return GaussianChannel(g * I, (g * g - 1) * I, f"amplifier({g})")


def classical_noise(c: float, n: int = 1) -> GaussianChannel:
    if c < 0:
        raise InvariantViolation(f"classical noise needs c >= 0, got {c}")
    I = np.eye(2 * n)
    return GaussianChannel(I, c * I, f"classical_noise({c})")


def random_cp_channel(n: int, seed: int, margin: float = 0.05) -> GaussianChannel:
    """Random channel with CP margin at least ``margin``.

    ``A`` has entries uniform in [-1, 1]. ``B`` is the identity shifted by the
    deficit of ``i Omega - i A Omega A^T`` plus a random PSD perturbation.
    """
    if margin < 0:
        raise InvariantViolation(f"margin must be >= 0, got {margin}")
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1, 1, size=(2 * n, 2 * n))
    deficit = float(np.linalg.eigvalsh(_cp_matrix(A, np.zeros_like(A))).min())
    G = rng.normal(size=(2 * n, 2 * n))
    extra = 0.1 * G @ G.T / (2 * n)
    B = (max(0.0, -deficit) + margin) * np.eye(2 * n) + extra
    return GaussianChannel(A, B, f"random_cp(n={n},seed={seed})")


def catalog(n: int = 1, seed: int = 0) -> dict[str, GaussianChannel]:
    """Named test channels used by the round-trip suites."""
    return {
        "identity": identity_channel(n),
        "attenuator": attenuator(0.5, n),
        "amplifier": amplifier(1.2, n),
        "classical_noise": classical_noise(0.3, n),
        "random": random_cp_channel(n, seed),
    }
