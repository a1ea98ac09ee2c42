import math

import numpy as np
import pytest
from scipy.linalg import expm

from pnrtomo import fock as fk
from pnrtomo import measurement as ms
from pnrtomo import state as gs
from pnrtomo.state_tomography import make_state_plan

P = gs.SqueezedThermalParams


def test_ladder_operators():
    a = fk.annihilation(12)
    assert np.allclose(a.T @ a, fk.number(12))
    assert fk.FockOperator(12, a).commutator_defect() < 1e-14
    assert fk.FockOperator(1, np.zeros((1, 1))).commutator_defect() == 0.0


@pytest.mark.parametrize("r", [0.3, -0.7])
def test_squeeze_matches_expm(r):
    a = fk.annihilation(40)
    U = expm(r / 2 * (a @ a - a.T @ a.T))
    assert np.abs(fk._squeeze(r, 40) - U).max() < 1e-12


@pytest.mark.parametrize("re,im", [(0.4, 0.0), (-0.3, 0.8)])
def test_displace_matches_expm(re, im):
    a = fk.annihilation(40)
    alpha = complex(re, im)
    U = expm(alpha * a.T - np.conj(alpha) * a)
    assert np.abs(fk._displace(re, im, 40) - U).max() < 1e-12


@pytest.mark.parametrize("dim", [5, 8])
def test_beamsplitter_blocks_match_expm(dim):
    theta = 0.37
    blocks = fk._beamsplitter_blocks(theta, dim)
    for k, U in enumerate(blocks):
        js = np.arange(max(0, k - dim + 1), min(k, dim - 1) + 1)
        G = np.zeros((len(js), len(js)))
        for t in range(len(js) - 1):
            G[t + 1, t] = np.sqrt((js[t] + 1) * (k - js[t]))
            G[t, t + 1] = -G[t + 1, t]
        assert np.abs(U - expm(theta * G)).max() < 1e-12


def test_hong_ou_mandel_dip():
    psi = np.zeros((1, 6, 6), dtype=complex)
    psi[0, 1, 1] = 1.0
    mix = fk._Mixture([1.0], psi, 2)
    mix.beamsplitter(np.pi / 4, (0, 1))
    out = mix.psi[0]
    assert abs(out[1, 1]) < 1e-14
    assert np.isclose(abs(out[2, 0]) ** 2, 0.5) and np.isclose(abs(out[0, 2]) ** 2, 0.5)


def test_vacuum():
    st = fk.build_gaussian_fock(P(), 16)
    assert fk.fock_mean_and_variance(st) == pytest.approx((0.0, 0.0), abs=1e-14)


def test_coherent_state_is_poissonian():
    p = P(u=0.8)
    st = fk.build_gaussian_fock(p, 40)
    nbar = 0.8 ** 2  # |d|^2 / 2 with d = (u, u)
    dist = st.photon_distribution()
    k = np.arange(dist.size)
    poisson = np.exp(-nbar) * nbar ** k / np.array([math.factorial(int(j)) for j in k])
    assert np.abs(dist - poisson).max() < 1e-12


def test_squeezed_vacuum_distribution():
    s = 0.5
    dist = fk.build_gaussian_fock(P(s=s, beta=0.4), 60).photon_distribution()
    t = np.tanh(s)
    for m in range(6):
        p2m = math.factorial(2 * m) / (2 ** m * math.factorial(m)) ** 2 * t ** (2 * m) / np.cosh(s)
        assert np.isclose(dist[2 * m], p2m, atol=1e-12)
        assert abs(dist[2 * m + 1]) < 1e-14


@pytest.mark.parametrize("thermal", fk.THERMAL_MODES)
def test_thermal_spot_values(thermal):
    res = fk.oracle_moments(P(n_th=1.0), thermal=thermal)
    assert abs(res.mean - 1) < 1e-6 and abs(res.variance - 2) < 1e-6


def test_thermal_representations_agree_single_mode():
    p = P(n_th=0.8, s=0.4, beta=1.0, u=0.5)
    a = fk.oracle_moments(p, thermal="fock")
    b = fk.oracle_moments(p, thermal="coherent")
    assert abs(a.mean - b.mean) < 1e-8 and abs(a.variance - b.variance) < 1e-8


def test_thermal_representations_agree_two_mode():
    rec = fk.TwoModeRecipe(P(0.4, 0.2, 0.3), P(0.3, -0.1, 0.7), 0.2)
    setting = make_state_plan(2).inter[(0, 1)][1]
    a = fk.oracle_moments(rec, setting, thermal="fock", max_cutoff=200)
    b = fk.oracle_moments(rec, setting, thermal="coherent", max_cutoff=200)
    assert abs(a.mean - b.mean) < 1e-8 and abs(a.variance - b.variance) < 1e-8


def _gaussian_moment(powers):
    # E[x^k] for a normal with variance 1/2
    out = 1.0
    for k in powers:
        out *= 0.0 if k % 2 else math.prod(range(k - 1, 0, -2)) * 0.5 ** (k // 2)
    return out


def test_planar_rule_is_degree_five():
    z, w = fk._p_function_nodes()
    assert np.isclose(w.sum(), 1.0)
    for i in range(6):
        for j in range(6 - i):
            assert np.isclose(w @ (z.real ** i * z.imag ** j), _gaussian_moment([i, j]), atol=1e-14)


def test_joint_rule_is_degree_five():
    z, w = fk._joint_p_function_nodes()
    x = np.stack([z[:, 0].real, z[:, 0].imag, z[:, 1].real, z[:, 1].imag], axis=1)
    assert np.isclose(w.sum(), 1.0) and np.all(w > 0)
    for powers in np.ndindex(6, 6, 6, 6):
        if sum(powers) <= 5:
            got = w @ np.prod(x ** np.array(powers), axis=1)
            assert np.isclose(got, _gaussian_moment(powers), atol=1e-13), powers


def test_truncation_error_raised():
    with pytest.raises(fk.CutoffError, match="raise the cutoff"):
        fk.build_gaussian_fock(P(n_th=1.5, s=0.7, u=1.0), 10)


def test_oracle_cap_error():
    with pytest.raises(fk.CutoffError, match="no convergence"):
        fk.oracle_moments(P(n_th=1.5, s=0.7, u=1.0), max_cutoff=20)


def test_bad_arguments():
    with pytest.raises(ValueError):
        fk.oracle_moments(P(), growth=1.0)
    with pytest.raises(ValueError):
        fk.build_gaussian_fock(P(), 16, thermal="bogus")


def test_density_matrix_is_a_state():
    st = fk.build_gaussian_fock(P(n_th=0.3, s=0.2, u=0.3), 30)
    rho = st.density_matrix()
    assert np.isclose(np.trace(rho).real, st.trace)
    assert np.allclose(rho, rho.conj().T)
    assert np.linalg.eigvalsh(rho).min() > -1e-12


@pytest.mark.parametrize("seed", range(4))
def test_oracle_matches_closed_form_single_mode(seed):
    rng = np.random.default_rng(seed)
    p = P(rng.uniform(0, 1.5), rng.uniform(-0.7, 0.7), rng.uniform(0, 2 * np.pi), rng.uniform(-1, 1))
    state = gs.squeezed_thermal(p)
    settings = make_state_plan(1).settings
    for res, s in zip(fk.oracle_moments_many(p, settings), settings):
        assert abs(res.mean - ms.expected(state, s)) < 1e-6
        assert abs(res.variance - ms.variance(state, s)) < 1e-6


def test_oracle_rejects_printed_variance_form():
    p = P(n_th=1.0, s=0.6, beta=np.pi / 3, u=1.0)
    state = gs.squeezed_thermal(p)
    s = make_state_plan(1).intra[0][0]
    res = fk.oracle_moments(p, s)
    G = s.gate.matrix(1)
    assert abs(res.variance - gs.gated_photon_variance(state, G, "transformed")) < 1e-6
    assert abs(res.variance - gs.gated_photon_variance(state, G, "printed")) > 0.1


def test_oracle_matches_closed_form_two_mode():
    rec = fk.TwoModeRecipe(P(0.5, 0.3, 0.4), P(0.2, -0.2, 2.0), 0.3)
    state = gs.two_mode_benchmark(rec.mode1, rec.mode2, rec.u)
    settings = make_state_plan(2).settings
    for res, s in zip(fk.oracle_moments_many(rec, settings), settings):
        assert abs(res.mean - ms.expected(state, s)) < 1e-6
        assert abs(res.variance - ms.variance(state, s)) < 1e-6
