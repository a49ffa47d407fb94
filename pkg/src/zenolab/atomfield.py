"""Two-level atom decaying into a pair of counter-moving field quanta in 1D.

The closed sector is spanned by the excited atom and two-particle states
|x_R, x_L> with one right-mover and one left-mover.  The state is

    C * |e>  +  sum_{cells} F(x_R, x_L) * dx * |x_R, x_L>,

with F a complex amplitude density on a 2D grid, so the norm is
|C|^2 + sum |F|^2 dx^2.  The amplitude equations are

    i dC/dt = omega C + integral g*(x_R, x_L) F dx_R dx_L
    (d_t + c d_{x_R} - c d_{x_L}) F = -i g(x_R, x_L) C

with a coupling g that is a constant g0 on the interaction box
(-d/2, d/2)^2 and zero outside (natural units, hbar = c = 1).

Discretization
--------------
Cells are labeled by their left node x = -d/2 + i*dx; a cell is "interior"
when it lies entirely inside the box, which needs d/dx to be an integer
(and even, so that x = 0 and the box edges are grid nodes).  The time step
is locked to dt = dx, so transport is an exact one-cell shift per step
(zero dispersion) and causality is exact on the grid: a cell that has left
the box can never re-enter it.  Each step is a Lie split:

1. advection: F(i_R, i_L) <- F(i_R - 1, i_L + 1), zeros entering at the
   x_R = -d/2 and x_L = d/2 edges;
2. interaction: the atom couples only to the normalized collective mode
   (uniform over interior cells for constant g0), so the pair
   (C, collective amplitude) is rotated by the exact 2x2 matrix exponential
   of [[omega, kappa], [kappa, 0]] * dt with kappa = g0 * d; everything
   orthogonal to the mode, and every exterior cell, is untouched.

Both substeps are exactly norm-preserving, and the grid is sized to hold
the full causal cone up to t_max so no amplitude ever reaches the outer
boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import SimulationLimitError

__all__ = [
    "ModelParams",
    "AtomFieldModel",
    "AtomFieldState",
    "build_model",
    "init_excited",
    "init_two_particle",
    "step",
    "evolve_to",
]

_GRID_TOL = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """Physical and grid parameters (hbar = c = 1).

    d:      size of the interaction box, centered on the origin
    omega:  excited-level frequency
    g0:     coupling amplitude, constant on the box
    dx:     cell size; d/dx must be a positive even integer
    t_max:  simulation horizon (the grid holds the causal cone up to here)
    margin: extra length beyond the causal cone on each outgoing side
    """

    d: float = 1.0
    omega: float = 5.0
    g0: float = 0.5
    dx: float = 1.0 / 64
    t_max: float = 3.0
    margin: float = 0.0


@dataclass(frozen=True)
class AtomFieldState:
    """Value-like state: excited amplitude, field density grid, step count."""

    c: complex
    f: np.ndarray  # shape (n_axis, n_axis), axis 0 = x_R, axis 1 = x_L
    n: int

    def t_of(self, dt: float) -> float:
        return self.n * dt


class AtomFieldModel:
    """Precomputed grid geometry and propagators; immutable after build."""

    def __init__(self, params: ModelParams):
        d, dx = params.d, params.dx
        nx_box = int(round(d / dx))
        if nx_box < 2 or abs(nx_box * dx - d) > _GRID_TOL * max(1.0, d):
            raise ValueError(f"d/dx must be a positive integer, got d={d}, dx={dx}")
        if nx_box % 2 != 0:
            raise ValueError(f"d/dx must be even so the box edges and x=0 are grid nodes (got {nx_box})")
        if params.t_max <= 0:
            raise ValueError("t_max must be positive")
        if params.margin < 0:
            raise ValueError("margin must be nonnegative")

        self.params = params
        self.dt = dx
        self.n_steps_max = int(np.floor(params.t_max / dx + _GRID_TOL))
        if self.n_steps_max < 1:
            raise ValueError("t_max shorter than one step; grid too small")
        margin_cells = int(np.ceil(params.margin / dx - _GRID_TOL))
        self.nx_box = nx_box
        self.margin_cells = margin_cells
        self.n_axis = nx_box + self.n_steps_max + margin_cells + 1
        # node coordinates; cell i spans [x_i, x_i + dx) on the x_R axis and
        # (x_j - dx, x_j] on the x_L axis
        self.xr = -d / 2 + dx * np.arange(self.n_axis)
        self.xl = d / 2 - dx * np.arange(self.n_axis - 1, -1, -1)
        # interior = cells fully inside the box (the coupled region)
        self.int_r = slice(0, nx_box)
        self.int_l = slice(self.n_axis - nx_box, self.n_axis)
        self.n_int = nx_box * nx_box
        self._sqrt_n_int = float(np.sqrt(self.n_int))

        kappa = params.g0 * dx * nx_box  # = g0 * d on the grid
        h2 = np.array([[params.omega, kappa], [kappa, 0.0]], dtype=complex)
        self.u2 = expm(-1j * h2 * self.dt)

        wave = np.zeros((self.n_axis, self.n_axis), dtype=bool)
        wave[nx_box:, :] = True  # right-mover has left the box
        wave[:, : self.n_axis - nx_box] = True  # left-mover has left the box
        wave.setflags(write=False)
        self.wave_mask = wave

    # --- engine-facing API -------------------------------------------------

    @property
    def t_max(self) -> float:
        return self.n_steps_max * self.dt

    def initial_state(self) -> AtomFieldState:
        return init_excited(self)

    def step_state(self, state: AtomFieldState) -> AtomFieldState:
        return step(self, state)

    def evolve(self, state: AtomFieldState, n_steps: int) -> AtomFieldState:
        for _ in range(n_steps):
            state = step(self, state)
        return state

    def survival_amplitude(self, state: AtomFieldState) -> complex:
        return state.c

    # --- norms and geometry --------------------------------------------------

    def field_norm_sq(self, f: np.ndarray) -> float:
        return float(np.vdot(f, f).real) * self.params.dx**2

    def norm_sq(self, state: AtomFieldState) -> float:
        return abs(state.c) ** 2 + self.field_norm_sq(state.f)

    def grid_index(self, x_r: float, x_l: float) -> tuple[int, int]:
        """Map (x_R, x_L) node coordinates to grid indices, validating that
        the point is on the grid and inside the two-particle sector."""
        dx, d = self.params.dx, self.params.d
        i = int(round((x_r + d / 2) / dx))
        j = int(round((x_l - self.xl[0]) / dx))
        if not (0 <= i < self.n_axis) or abs(self.xr[i] - x_r) > _GRID_TOL:
            raise ValueError(f"x_R={x_r} is off-grid or outside the stored window")
        if not (0 <= j < self.n_axis) or abs(self.xl[j] - x_l) > _GRID_TOL:
            raise ValueError(f"x_L={x_l} is off-grid or outside the stored window")
        if x_r < -self.params.d / 2 - _GRID_TOL:
            raise ValueError(f"x_R={x_r} violates the sector constraint x_R >= -d/2")
        if x_l > self.params.d / 2 + _GRID_TOL:
            raise ValueError(f"x_L={x_l} violates the sector constraint x_L <= d/2")
        return i, j


def build_model(params: ModelParams) -> AtomFieldModel:
    """Validate parameters and precompute masks and the interaction propagator."""
    return AtomFieldModel(params)


def init_excited(model: AtomFieldModel) -> AtomFieldState:
    """The atom excited, no field quanta: C = 1, F = 0, t = 0."""
    f = np.zeros((model.n_axis, model.n_axis), dtype=complex)
    return AtomFieldState(c=1.0 + 0.0j, f=f, n=0)


def init_two_particle(model: AtomFieldModel, x_r: float, x_l: float) -> AtomFieldState:
    """Normalized single-cell two-particle state at grid nodes (x_R, x_L).

    The point amplitude is regularized as one grid cell with density 1/dx,
    so the state has unit norm.
    """
    i, j = model.grid_index(x_r, x_l)
    f = np.zeros((model.n_axis, model.n_axis), dtype=complex)
    f[i, j] = 1.0 / model.params.dx
    return AtomFieldState(c=0.0 + 0.0j, f=f, n=0)


def _advect(f: np.ndarray) -> np.ndarray:
    """Exact one-cell transport: x_R up, x_L down, vacuum flowing in at the
    x_R = -d/2 and x_L = d/2 edges.  Raises if nonzero amplitude would be
    carried off the stored grid."""
    if f[-1, :].any() or f[:, 0].any():
        raise SimulationLimitError("amplitude reached the outer grid boundary; "
                                   "enlarge margin or shorten t_max")
    out = np.zeros_like(f)
    out[1:, :-1] = f[:-1, 1:]
    return out


def step(model: AtomFieldModel, state: AtomFieldState) -> AtomFieldState:
    """One split step: exact advection, then the exact 2x2 interaction
    rotation on (C, collective interior mode)."""
    if state.n + 1 > model.n_steps_max:
        raise SimulationLimitError(
            f"step would exceed the horizon t_max = {model.t_max}")
    f = _advect(state.f)
    dx = model.params.dx
    interior = f[model.int_r, model.int_l]
    a = dx * interior.sum() / model._sqrt_n_int
    c_new = model.u2[0, 0] * state.c + model.u2[0, 1] * a
    a_new = model.u2[1, 0] * state.c + model.u2[1, 1] * a
    f[model.int_r, model.int_l] += (a_new - a) / (model._sqrt_n_int * dx)
    return AtomFieldState(c=c_new, f=f, n=state.n + 1)


def evolve_to(model: AtomFieldModel, state: AtomFieldState, t_target: float) -> AtomFieldState:
    """Advance to t_target, which must sit on the step grid at or after the
    state's current time."""
    n_target = int(round(t_target / model.dt))
    if abs(n_target * model.dt - t_target) > _GRID_TOL:
        raise ValueError(f"t_target={t_target} is not an integer number of steps (dt={model.dt})")
    if n_target < state.n:
        raise ValueError(f"t_target={t_target} is before the state's time {state.n * model.dt}")
    return model.evolve(state, n_target - state.n)
