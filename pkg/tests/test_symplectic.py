import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pnrtomo import symplectic as sp
from pnrtomo.errors import InvariantViolation

angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)
squeezes = st.floats(-1.5, 1.5, allow_nan=False)


def test_omega_block_structure():
    om = sp.omega(2)
    assert np.array_equal(om[:2, :2], [[0, 1], [-1, 0]])
    assert np.array_equal(om[:2, 2:], np.zeros((2, 2)))
    assert np.allclose(om @ om, -np.eye(4))
    assert np.allclose(om.T, -om)


@pytest.mark.parametrize("bad", [0, -1, 1.5])
def test_omega_rejects_bad_mode_count(bad):
    with pytest.raises(ValueError):
        sp.omega(bad)


def test_rotation_entries():
    R = sp.rotation(0.3).S
    c, s = np.cos(0.3), np.sin(0.3)
    assert np.array_equal(R, [[c, s], [-s, c]])


def test_squeeze_entries():
    assert np.allclose(sp.squeeze(0.4).S, np.diag([np.exp(-0.4), np.exp(0.4)]))


def test_beamsplitter_blocks():
    B = sp.beamsplitter(np.pi / 4).S
    h = 1 / np.sqrt(2)
    assert np.allclose(B[:2, :2], h * np.eye(2))
    assert np.allclose(B[:2, 2:], h * np.eye(2))
    assert np.allclose(B[2:, :2], -h * np.eye(2))


@pytest.mark.parametrize("gate", [
    sp.rotation(1.1), sp.squeeze(-0.8), sp.beamsplitter(0.3), sp.p_gate(0.5 * np.log(3), np.pi / 4),
    sp.q_gate(0.5 * np.log(2), np.pi / 2), sp.identity(3),
])
def test_catalog_gates_are_symplectic(gate):
    assert sp.symplectic_residual(gate.S) < 1e-14
    assert np.isclose(np.linalg.det(gate.S), 1.0)


def test_non_symplectic_matrix_rejected():
    with pytest.raises(InvariantViolation, match="not symplectic"):
        sp.SymplecticGate(np.diag([2.0, 2.0]))


@pytest.mark.parametrize("shape", [(3, 3), (2, 4)])
def test_bad_shapes_rejected(shape):
    with pytest.raises(InvariantViolation):
        sp.SymplecticGate(np.ones(shape))


def test_non_finite_rejected():
    with pytest.raises(InvariantViolation, match="non-finite"):
        sp.SymplecticGate(np.array([[np.nan, 0], [0, 1]]))


def test_composition_order():
    R, S = sp.rotation(0.2), sp.squeeze(0.7)
    assert np.allclose((S @ R).S, S.S @ R.S)
    assert np.allclose(sp.p_gate(0.7, 0.2).S, S.S @ R.S)


def test_composition_needs_same_size():
    with pytest.raises(InvariantViolation):
        sp.rotation(0.1) @ sp.beamsplitter(0.1)


def test_embed_places_modes_in_order():
    B = sp.beamsplitter(0.4)
    E = sp.embed(B, [2, 0], 3).S
    # first beam-splitter port goes to mode 2
    assert np.allclose(E[np.ix_([4, 5], [4, 5])], B.S[:2, :2])
    assert np.allclose(E[np.ix_([4, 5], [0, 1])], B.S[:2, 2:])
    assert np.allclose(E[np.ix_([2, 3], [2, 3])], np.eye(2))
    assert sp.is_symplectic(E)


@pytest.mark.parametrize("modes,n", [([0, 0], 2), ([0, 3], 3), ([0], 2)])
def test_embed_errors(modes, n):
    with pytest.raises(InvariantViolation):
        sp.embed(sp.beamsplitter(0.1), modes, n)


def test_q_gate_matches_product():
    r, phi = 0.3, 0.9
    left = sp.direct_sum(sp.squeeze(r), sp.identity(1)).S
    right = sp.direct_sum(sp.rotation(phi), sp.identity(1)).S
    assert np.allclose(sp.q_gate(r, phi).S, left @ sp.beamsplitter(np.pi / 4).S @ right)


@given(squeezes, angles)
def test_p_gate_coefficients_closed_form(r, phi):
    k1, k2, k3 = sp.p_gate_coefficients(r, phi)
    c, s = np.cos(phi), np.sin(phi)
    a, b = np.exp(-2 * r), np.exp(2 * r)
    # P^T P = R^T diag(a, b) R with R = [[c, s], [-s, c]]
    assert np.isclose(k1, a * c * c + b * s * s - 1, atol=1e-12)
    assert np.isclose(k2, a * s * s + b * c * c - 1, atol=1e-12)
    assert np.isclose(k3, (a - b) * c * s, atol=1e-12)


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_random_symplectic_certificate(n, seed):
    S = sp.random_symplectic(n, np.random.default_rng(seed))
    assert sp.is_symplectic(S)
    om = sp.omega(n)
    assert np.allclose(S.T @ om @ S, om, atol=1e-10)


@given(angles, squeezes, angles)
def test_products_stay_symplectic(a, r, b):
    G = sp.p_gate(r, a) @ sp.p_gate(-r, b)
    assert sp.is_symplectic(G.S)
