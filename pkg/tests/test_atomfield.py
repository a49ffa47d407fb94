import numpy as np
import pytest

from zenolab.atomfield import (
    ModelParams,
    build_model,
    evolve_to,
    init_excited,
    init_two_particle,
    step,
)
from zenolab.errors import SimulationLimitError

from oracles import Rk4Reference, volterra_survival


PARAMS = ModelParams(d=1.0, omega=5.0, g0=0.5, dx=1 / 32, t_max=1.0)


# --- construction and geometry ------------------------------------------------

def test_odd_cells_per_box_rejected():
    with pytest.raises(ValueError, match="even"):
        build_model(ModelParams(d=1.0, dx=1 / 3, t_max=1.0))


def test_non_integer_cells_per_box_rejected():
    with pytest.raises(ValueError):
        build_model(ModelParams(d=1.0, dx=0.3, t_max=1.0))


def test_interior_mask_geometry():
    model = build_model(ModelParams(d=1.0, dx=1 / 64, t_max=1.0))
    assert model.nx_box == 64
    centers_r = model.xr[model.int_r] + model.params.dx / 2
    centers_l = model.xl[model.int_l] - model.params.dx / 2
    assert centers_r.size == 64 and centers_l.size == 64
    assert np.all((centers_r > -0.5) & (centers_r < 0.5))
    assert np.all((centers_l > -0.5) & (centers_l < 0.5))


def test_decoupled_step_is_pure_phase():
    model = build_model(ModelParams(d=1.0, omega=5.0, g0=0.0, dx=1 / 32, t_max=0.5))
    state = step(model, init_excited(model))
    assert state.c == pytest.approx(np.exp(-1j * 5.0 * model.dt), abs=1e-14)
    assert not state.f.any()


# --- initial states -------------------------------------------------------------

def test_init_excited_exact():
    model = build_model(PARAMS)
    state = init_excited(model)
    assert model.norm_sq(state) == 1.0
    assert model.field_norm_sq(state.f) == 0.0
    assert abs(model.survival_amplitude(state)) ** 2 == 1.0


def test_init_two_particle_regions():
    model = build_model(ModelParams(d=1.0, g0=0.5, dx=1 / 16, t_max=2.0))
    out = init_two_particle(model, 1.0, -1.0)
    assert model.norm_sq(out) == pytest.approx(1.0, abs=1e-12)
    i, j = model.grid_index(1.0, -1.0)
    assert model.wave_mask[i, j]
    core = init_two_particle(model, 0.0, 0.0)
    i, j = model.grid_index(0.0, 0.0)
    assert not model.wave_mask[i, j]
    assert model.norm_sq(core) == pytest.approx(1.0, abs=1e-12)


def test_init_two_particle_sector_violation():
    model = build_model(ModelParams(d=1.0, dx=1 / 16, t_max=2.0))
    with pytest.raises(ValueError, match="x_R"):
        init_two_particle(model, -1.0, 0.0)


def test_init_two_particle_off_grid():
    model = build_model(ModelParams(d=1.0, dx=1 / 16, t_max=2.0))
    with pytest.raises(ValueError):
        init_two_particle(model, 0.013, 0.0)


# --- free propagation (outside the box) ---------------------------------------

def test_exterior_pair_propagates_freely():
    model = build_model(ModelParams(d=1.0, g0=0.5, omega=5.0, dx=1 / 16, t_max=1.0))
    state = init_two_particle(model, 0.75, -0.8125)
    amp0 = state.f.copy()
    i0, j0 = model.grid_index(0.75, -0.8125)
    state = evolve_to(model, state, 0.5)
    k = 8  # steps taken
    assert state.f[i0 + k, j0 - k] == amp0[i0, j0]  # amplitude carried unchanged
    moved = np.zeros_like(amp0)
    moved[i0 + k, j0 - k] = amp0[i0, j0]
    assert np.array_equal(state.f, moved)
    assert state.c == 0.0


# --- stepping against the dense RK4 reference ----------------------------------

def test_step_matches_rk4_reference():
    params = ModelParams(d=1.0, omega=5.0, g0=0.5, dx=1 / 40, t_max=0.3)
    model = build_model(params)
    ref = Rk4Reference(d=1.0, omega=5.0, g0=0.5, dx=1 / 40, t_max=0.3)
    c_hist, _f = ref.run(8)  # t = 0.2
    state = evolve_to(model, init_excited(model), 0.2)
    assert abs(state.c - c_hist[-1]) < 1e-6


def test_survival_curve_matches_rk4_reference_pointwise():
    params = ModelParams(d=1.0, omega=5.0, g0=0.5, dx=1 / 32, t_max=1.0)
    model = build_model(params)
    ref = Rk4Reference(d=1.0, omega=5.0, g0=0.5, dx=1 / 32, t_max=1.0)
    c_hist, _ = ref.run(32)
    state = init_excited(model)
    for n in range(1, 33):
        state = step(model, state)
        assert abs(abs(state.c) ** 2 - abs(c_hist[n]) ** 2) < 1e-6


# --- evolve_to contract ---------------------------------------------------------

def test_evolve_to_identity():
    model = build_model(PARAMS)
    state = evolve_to(model, init_excited(model), 0.5)
    again = evolve_to(model, state, 0.5)
    assert again is state or (again.c == state.c and np.array_equal(again.f, state.f))


def test_evolve_to_decoupled_survival_one():
    model = build_model(ModelParams(d=1.0, omega=5.0, g0=0.0, dx=1 / 32, t_max=1.0))
    state = evolve_to(model, init_excited(model), 1.0)
    assert abs(state.c) ** 2 == pytest.approx(1.0, abs=1e-14)


def test_evolve_to_composition_bit_identical():
    model = build_model(PARAMS)
    one = evolve_to(model, evolve_to(model, init_excited(model), 0.375), 0.875)
    direct = evolve_to(model, init_excited(model), 0.875)
    assert one.c == direct.c
    assert np.array_equal(one.f, direct.f)


def test_evolve_to_rejects_off_grid_time():
    model = build_model(PARAMS)
    with pytest.raises(ValueError, match="integer"):
        evolve_to(model, init_excited(model), 0.01)


def test_horizon_exceeded():
    model = build_model(ModelParams(d=1.0, dx=1 / 16, t_max=0.5))
    state = evolve_to(model, init_excited(model), 0.5)
    with pytest.raises(SimulationLimitError):
        step(model, state)


# --- invariants ------------------------------------------------------------------

def test_unitarity_per_step_and_full_run():
    model = build_model(ModelParams(d=1.0, omega=5.0, g0=0.5, dx=1 / 64, t_max=2.0))
    state = init_excited(model)
    prev = 1.0
    worst = 0.0
    for _ in range(model.n_steps_max):
        state = step(model, state)
        cur = model.norm_sq(state)
        worst = max(worst, abs(cur - prev))
        prev = cur
    assert worst <= 1e-12
    assert abs(model.norm_sq(state) - 1.0) <= 1e-9


def test_survival_identity_against_field_norm():
    model = build_model(ModelParams(d=1.0, omega=5.0, g0=0.5, dx=1 / 32, t_max=1.0))
    state = init_excited(model)
    for _ in range(32):
        state = step(model, state)
        s = abs(state.c) ** 2
        assert abs(s - (1.0 - model.field_norm_sq(state.f))) <= 1e-12
        assert abs(abs(state.c) ** 2 + model.field_norm_sq(state.f) - 1.0) <= 1e-12


def test_wave_zone_is_exactly_invariant():
    # no interior support and no excited amplitude: stays that way exactly
    model = build_model(ModelParams(d=1.0, omega=5.0, g0=0.8, dx=1 / 16, t_max=2.0))
    state = init_two_particle(model, 0.625, -0.625)
    interior = np.ix_(range(model.int_r.start, model.int_r.stop),
                      range(model.int_l.start, model.int_l.stop))
    for _ in range(int(round(1.5 / model.dt))):
        state = step(model, state)
        assert state.c == 0.0
        assert not state.f[interior].any()


def test_refinement_convergence_order_at_least_one():
    svals = {}
    for nx in (16, 32, 64):
        model = build_model(ModelParams(d=1.0, omega=5.0, g0=0.5, dx=1 / nx, t_max=1.0))
        svals[nx] = abs(evolve_to(model, init_excited(model), 1.0).c) ** 2
    order = np.log2(abs(svals[16] - svals[32]) / abs(svals[32] - svals[64]))
    assert order >= 1.0


def test_continuum_limit_against_memory_kernel_equation():
    # the split scheme converges to the continuum survival from the
    # characteristics-integrated memory-kernel equation
    _t, s_ref = volterra_survival(d=1.0, omega=5.0, g0=0.5, t_end=1.0, h=2.5e-4)
    model = build_model(ModelParams(d=1.0, omega=5.0, g0=0.5, dx=1 / 128, t_max=1.0))
    s_sim = abs(evolve_to(model, init_excited(model), 1.0).c) ** 2
    coarse = build_model(ModelParams(d=1.0, omega=5.0, g0=0.5, dx=1 / 64, t_max=1.0))
    s_coarse = abs(evolve_to(coarse, init_excited(coarse), 1.0).c) ** 2
    err_fine = abs(s_sim - s_ref[-1])
    err_coarse = abs(s_coarse - s_ref[-1])
    assert err_fine < err_coarse  # refinement approaches the continuum value
    assert err_fine < 5e-5
