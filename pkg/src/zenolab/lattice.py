"""Discrete-time conveyor-lattice models.

A small unitary block (the "core": excited level plus a staging cell) feeds a
chain of wave cells.  One time step applies the core unitary K and then a
shift S that moves the staging amplitude onto the conveyor and every wave
cell one slot outward, so the full step is U = S @ K.

Two topologies are supported:

* ``unilateral``: the conveyor is half-infinite (storage grows on demand, at
  most ``horizon`` cells are ever populated).  Amplitude that has left the
  core can never come back, which makes the wave cells an exactly one-sided
  subspace, and repeated core projections commute with the evolution.
* ``ring(L)``: the conveyor is a cyclic buffer of length L, so amplitude
  re-enters the staging cell after L steps.  This is the minimal model with
  backflow, used as a counterexample where measurements do change survival.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LatticeModel",
    "LatticeState",
    "new_lattice_model",
    "rotation_core_step",
    "lattice_step",
    "one_step_matrix",
    "verify_one_sided",
    "product_identity_residual",
]

_UNITARITY_TOL = 1e-10


def rotation_core_step(theta: float, phase: float = 0.0) -> np.ndarray:
    """2x2 core unitary: rotate amplitude from the excited level into the
    staging cell by an angle ``theta``, with an adjustable emission phase."""
    c, s = np.cos(theta), np.sin(theta)
    ph = np.exp(1j * phase)
    return np.array([[c, -s * np.conj(ph)], [s * ph, c]], dtype=complex)


@dataclass(frozen=True)
class LatticeModel:
    """Immutable model: core block unitary plus conveyor topology."""

    core_dim: int
    core_step: np.ndarray
    topology: str  # "unilateral" | "ring"
    ring_length: int | None
    horizon: int

    # engine-facing time grid: one lattice step is one time unit
    @property
    def dt(self) -> float:
        return 1.0

    @property
    def t_max(self) -> float:
        return float(self.horizon)

    def initial_state(self) -> "LatticeState":
        core = np.zeros(self.core_dim, dtype=complex)
        core[0] = 1.0
        n_wave = self.ring_length if self.topology == "ring" else 0
        return LatticeState(core=core, wave=np.zeros(n_wave, dtype=complex), n=0)

    def step_state(self, state: "LatticeState") -> "LatticeState":
        return lattice_step(self, state)

    def evolve(self, state: "LatticeState", n_steps: int) -> "LatticeState":
        for _ in range(n_steps):
            state = lattice_step(self, state)
        return state

    def survival_amplitude(self, state: "LatticeState") -> complex:
        return complex(state.core[0])


@dataclass(frozen=True)
class LatticeState:
    """Value-like state: core amplitudes plus the conveyor content.

    ``wave[j]`` (0-based) is the amplitude of cell j+1, i.e. the quantum
    emitted j+1 steps ago on the unilateral conveyor.
    """

    core: np.ndarray
    wave: np.ndarray
    n: int = 0

    @property
    def t(self) -> float:
        return float(self.n)

    def norm_sq(self) -> float:
        return float(np.vdot(self.core, self.core).real + np.vdot(self.wave, self.wave).real)


def new_lattice_model(
    core_dim: int,
    core_step: np.ndarray,
    topology: str = "unilateral",
    horizon: int = 64,
    ring_length: int | None = None,
) -> LatticeModel:
    """Validate and build a lattice model.

    Raises ValueError for a non-unitary core step, a ring of length zero,
    or a horizon < 1.
    """
    if core_dim < 2:
        raise ValueError("core_dim must be >= 2 (excited level plus staging cell)")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    k = np.asarray(core_step, dtype=complex)
    if k.shape != (core_dim, core_dim):
        raise ValueError(f"core_step must be {core_dim}x{core_dim}, got {k.shape}")
    defect = np.max(np.abs(k.conj().T @ k - np.eye(core_dim)))
    if defect > _UNITARITY_TOL:
        raise ValueError(f"core_step is not unitary: max |K^dag K - 1| = {defect:.3e}")
    if topology == "ring":
        if ring_length is None or ring_length < 1:
            raise ValueError("ring topology requires ring_length >= 1")
    elif topology == "unilateral":
        ring_length = None
    else:
        raise ValueError(f"unknown topology {topology!r}")
    k.setflags(write=False)
    return LatticeModel(core_dim=core_dim, core_step=k, topology=topology,
                        ring_length=ring_length, horizon=horizon)


def lattice_step(model: LatticeModel, state: LatticeState) -> LatticeState:
    """One step U = S @ K: core unitary, then shift the conveyor outward.

    Unilateral: the staging cell feeds a new first wave cell and storage
    grows by one; nothing ever flows back.  Ring: the buffer is rotated
    cyclically and the last cell flows back into the staging cell.
    """
    core = model.core_step @ state.core
    staging = model.core_dim - 1
    if model.topology == "unilateral":
        wave = np.empty(state.wave.size + 1, dtype=complex)
        wave[0] = core[staging]
        wave[1:] = state.wave
        core = core.copy()
        core[staging] = 0.0
    else:
        wave = np.empty_like(state.wave)
        wave[0] = core[staging]
        wave[1:] = state.wave[:-1]
        core = core.copy()
        core[staging] = state.wave[-1]
    return LatticeState(core=core, wave=wave, n=state.n + 1)


def _shift_matrix(model: LatticeModel, n_cells: int) -> np.ndarray:
    """Dense matrix of the shift S on core + n_cells wave cells.

    For the unilateral topology the last cell shifts out of the stored
    window; the matrix is therefore a truncation (an isometry off the last
    cell), which is exact for every column whose image stays inside.
    """
    dim = model.core_dim + n_cells
    staging = model.core_dim - 1
    s = np.zeros((dim, dim), dtype=complex)
    for i in range(model.core_dim - 1):
        s[i, i] = 1.0  # non-staging core cells untouched
    if n_cells >= 1:
        s[model.core_dim, staging] = 1.0  # staging -> w_1
        for j in range(n_cells - 1):
            s[model.core_dim + j + 1, model.core_dim + j] = 1.0  # w_j -> w_{j+1}
        if model.topology == "ring" and n_cells == model.ring_length:
            s[staging, model.core_dim + n_cells - 1] = 1.0  # w_L -> staging
    else:
        s[staging, staging] = 1.0
    return s


def one_step_matrix(model: LatticeModel, n_cells: int) -> np.ndarray:
    """Dense one-step operator U = S @ K on core + n_cells wave cells.

    A ring buffer holds exactly ``ring_length`` cells, so n_cells is capped
    there; the backflow edge w_L -> staging enters only when the whole ring
    is inside the window.
    """
    if model.topology == "ring":
        n_cells = min(n_cells, model.ring_length)
    dim = model.core_dim + n_cells
    k = np.eye(dim, dtype=complex)
    k[: model.core_dim, : model.core_dim] = model.core_step
    return _shift_matrix(model, n_cells) @ k


def verify_one_sided(model: LatticeModel, window: int) -> float:
    """Max-norm of the forbidden core<-wave block of the one-step operator.

    Builds U on core + window wave cells (the full ring for ring topology
    when window >= L) and returns max |(P_C U P_W)_{ij}|.  Zero means wave
    amplitude can never reach the core in one step.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    n_cells = window
    if model.topology == "ring":
        n_cells = min(window, model.ring_length)
    u = one_step_matrix(model, n_cells)
    nc = model.core_dim
    return float(np.max(np.abs(u[:nc, nc:]))) if u.shape[0] > nc else 0.0


def product_identity_residual(model: LatticeModel, n_steps: int) -> float:
    """Residual of the projected-evolution identity (P_C U)^n = P_C U^n.

    Computed densely on a window large enough that the unilateral
    truncation cannot touch the compared columns.  The identity holds
    whenever wave amplitude cannot flow back into the core; on a ring it
    fails once the chain is longer than the ring.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if model.topology == "ring":
        n_check = model.ring_length
        n_cells = model.ring_length
    else:
        n_check = n_steps
        n_cells = 2 * n_steps
    u = one_step_matrix(model, n_cells)
    dim = u.shape[0]
    nc = model.core_dim
    p_c = np.zeros((dim, dim), dtype=complex)
    p_c[:nc, :nc] = np.eye(nc)
    pcu = p_c @ u
    chain = np.eye(dim, dtype=complex)
    power = np.eye(dim, dtype=complex)
    for _ in range(n_steps):
        chain = pcu @ chain
        power = u @ power
    diff = chain - p_c @ power
    cols = nc + n_check
    return float(np.max(np.abs(diff[:, :cols])))
