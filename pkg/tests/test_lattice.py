import numpy as np
import pytest

from zenolab.lattice import (
    LatticeState,
    lattice_step,
    new_lattice_model,
    one_step_matrix,
    product_identity_residual,
    rotation_core_step,
    verify_one_sided,
)

from oracles import dense_ring_step, lattice_matrix_from_stepping


def random_state(model, rng, n_wave=6):
    if model.topology == "ring":
        n_wave = model.ring_length
    core = rng.normal(size=model.core_dim) + 1j * rng.normal(size=model.core_dim)
    wave = rng.normal(size=n_wave) + 1j * rng.normal(size=n_wave)
    norm = np.sqrt(np.vdot(core, core).real + np.vdot(wave, wave).real)
    return LatticeState(core=core / norm, wave=wave / norm, n=0)


# --- construction -----------------------------------------------------------

def test_identity_core_step_is_valid():
    model = new_lattice_model(2, rotation_core_step(0.0), "unilateral", horizon=5)
    state = model.initial_state()
    for _ in range(5):
        state = lattice_step(model, state)
    assert abs(state.core[0]) == pytest.approx(1.0, abs=1e-15)


def test_rotation_core_step_valid():
    model = new_lattice_model(2, rotation_core_step(0.3), "unilateral", horizon=10)
    assert model.core_dim == 2


def test_non_unitary_core_step_rejected():
    bad = rotation_core_step(0.3) * 1.05  # ~0.1 deviation in K^dag K
    with pytest.raises(ValueError, match="unitary"):
        new_lattice_model(2, bad, "unilateral", horizon=10)


def test_ring_length_zero_rejected():
    with pytest.raises(ValueError):
        new_lattice_model(2, rotation_core_step(0.3), "ring", horizon=10, ring_length=0)


def test_horizon_validated():
    with pytest.raises(ValueError):
        new_lattice_model(2, rotation_core_step(0.3), "unilateral", horizon=0)


# --- stepping ---------------------------------------------------------------

def test_unilateral_decay_closed_form():
    theta = 0.3
    model = new_lattice_model(2, rotation_core_step(theta), "unilateral", horizon=40)
    state = model.initial_state()
    for t in range(1, 26):
        state = lattice_step(model, state)
        assert abs(state.core[0]) ** 2 == pytest.approx(np.cos(theta) ** (2 * t), abs=1e-13)


def test_step_preserves_norm():
    rng = np.random.default_rng(3)
    for topology, kwargs in (("unilateral", {}), ("ring", {"ring_length": 5})):
        model = new_lattice_model(2, rotation_core_step(0.7, phase=0.4), topology,
                                  horizon=50, **kwargs)
        state = random_state(model, rng)
        for _ in range(50):
            state = lattice_step(model, state)
            assert state.norm_sq() == pytest.approx(1.0, abs=1e-12)


def test_wave_cells_never_reenter_core_unilateral():
    # exact one-sidedness: a state supported on wave cells keeps core == 0
    model = new_lattice_model(2, rotation_core_step(0.9), "unilateral", horizon=60)
    for j in range(4):
        wave = np.zeros(4, dtype=complex)
        wave[j] = 1.0
        state = LatticeState(core=np.zeros(2, dtype=complex), wave=wave, n=0)
        for _ in range(40):
            state = lattice_step(model, state)
            assert np.all(state.core == 0.0)


def test_ring_revival_matches_dense_matrix_power():
    theta, L = 0.3, 4
    model = new_lattice_model(2, rotation_core_step(theta), "ring", horizon=40,
                              ring_length=L)
    u = dense_ring_step(theta, L)
    vec = np.zeros(2 + L, dtype=complex)
    vec[0] = 1.0
    state = model.initial_state()
    for t in range(1, 21):
        state = lattice_step(model, state)
        vec = u @ vec
        assert abs(state.core[0] - vec[0]) < 1e-13
    # revival: |C| grows again after the loop time
    cs = []
    state = model.initial_state()
    for _ in range(14):
        state = lattice_step(model, state)
        cs.append(abs(state.core[0]))
    assert min(cs) < cs[-1]  # partial revival after t > L


# --- one-sidedness and the product identity ---------------------------------

def test_verify_one_sided_unilateral_zero():
    model = new_lattice_model(2, rotation_core_step(0.3), "unilateral", horizon=20)
    assert verify_one_sided(model, 8) == 0.0


def test_verify_one_sided_identity_core():
    model = new_lattice_model(2, rotation_core_step(0.0), "unilateral", horizon=20)
    assert verify_one_sided(model, 4) == 0.0


def test_verify_one_sided_ring_matches_dense_product():
    theta, L = 0.3, 4
    model = new_lattice_model(2, rotation_core_step(theta), "ring", horizon=20,
                              ring_length=L)
    residual = verify_one_sided(model, L)
    u = dense_ring_step(theta, L)
    p_c = np.zeros((2 + L, 2 + L))
    p_c[0, 0] = p_c[1, 1] = 1.0
    p_w = np.eye(2 + L) - p_c
    expected = np.max(np.abs(p_c @ u @ p_w))
    assert residual == pytest.approx(expected, abs=1e-14)
    assert residual > 1e-3


def test_one_step_matrix_agrees_with_stepping():
    for topology, kwargs in (("unilateral", {}), ("ring", {"ring_length": 3})):
        model = new_lattice_model(2, rotation_core_step(0.4, phase=1.1), topology,
                                  horizon=20, **kwargs)
        n_cells = 5 if topology == "unilateral" else 3
        structural = one_step_matrix(model, n_cells)
        stepped = lattice_matrix_from_stepping(model, n_cells)
        np.testing.assert_allclose(structural, stepped, atol=1e-15)


def test_product_identity_unilateral():
    model = new_lattice_model(2, rotation_core_step(0.3), "unilateral", horizon=30)
    assert product_identity_residual(model, 5) <= 1e-12
    assert product_identity_residual(model, 20) <= 1e-12


def test_product_identity_single_step_trivial():
    model = new_lattice_model(2, rotation_core_step(0.3), "unilateral", horizon=30)
    assert product_identity_residual(model, 1) == 0.0


def test_product_identity_ring_fails():
    theta, L, n = 0.3, 3, 5
    model = new_lattice_model(2, rotation_core_step(theta), "ring", horizon=20,
                              ring_length=L)
    residual = product_identity_residual(model, n)
    assert residual > 0.0
    # dense oracle for the same residual
    u = dense_ring_step(theta, L)
    dim = 2 + L
    p_c = np.zeros((dim, dim))
    p_c[0, 0] = p_c[1, 1] = 1.0
    chain = np.eye(dim)
    for _ in range(n):
        chain = p_c @ u @ chain
    expected = np.max(np.abs(chain - p_c @ np.linalg.matrix_power(u, n)))
    assert residual == pytest.approx(expected, abs=1e-13)


# --- the core-agreement lemma ------------------------------------------------

def test_lemma_identical_cores_stay_identical():
    rng = np.random.default_rng(11)
    model = new_lattice_model(2, rotation_core_step(0.6, phase=0.2), "unilateral",
                              horizon=40)
    for _ in range(5):
        core = rng.normal(size=2) + 1j * rng.normal(size=2)
        core *= 0.5 / np.linalg.norm(core)
        tail = np.sqrt(1 - 0.25)
        states = []
        for _ in range(2):
            wave = rng.normal(size=7) + 1j * rng.normal(size=7)
            wave *= tail / np.linalg.norm(wave)
            states.append(LatticeState(core=core.copy(), wave=wave, n=0))
        s1, s2 = states
        for _ in range(30):
            s1, s2 = lattice_step(model, s1), lattice_step(model, s2)
            assert np.max(np.abs(s1.core - s2.core)) <= 1e-12
