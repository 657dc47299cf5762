"""Brute-force single-excitation dynamics with a discretized guided continuum.

Each propagating TM branch is sampled on a uniform, symmetric k grid and the
full atom + field amplitude equations are integrated with the explicit
``exp(+-i (omega_k - omega_a) t)`` phases of the interaction frame.  Nothing is
assumed about flat couplings or resonance dominance, so the result checks the
reduced retarded and master equations rather than presupposing them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .modes import CouplingTable, TMMode, dispersion, group_velocity, resonant_wavevector
from .retarded import Trajectory

# The reduced equations carry the self rate pi g'^2 / v.  Summing the bare
# coupling over both +k0 and -k0 gives twice that, so each continuum branch is
# weighted by 1/sqrt(2) to keep the brute-force model on the same rate scale.
CONTINUUM_WEIGHT = 1 / math.sqrt(2)


class RevivalHorizonError(ValueError):
    """Requested times reach the spurious recurrence of the finite mode grid."""


@dataclass(frozen=True)
class ModeGrid:
    mode: TMMode
    k: np.ndarray
    dk: float
    omega: np.ndarray
    coupling: np.ndarray  # (2, N) complex per-sample couplings incl. exp(i k z_l)
    velocity: float

    @property
    def revival_time(self) -> float:
        return 2 * math.pi / (self.dk * self.velocity)


def default_k_max(mode: TMMode, omega_a: float, gamma_ref: float, window: float = 40.0) -> float:
    """Wavevector where the branch sits ``window * gamma_ref`` above the atomic frequency."""
    w = omega_a + window * gamma_ref
    return math.sqrt(w**2 - mode.cutoff**2)


def build_grid(mode: TMMode, g_raw, z, omega_a: float, k_max: float, n: int = 4001) -> ModeGrid:
    if n < 3 or n % 2 == 0:
        raise ValueError(f"grid size must be odd and >= 3, got {n}")
    k0 = resonant_wavevector(mode, omega_a)
    if k_max <= k0:
        raise ValueError(f"k_max={k_max} does not bracket the resonant wavevector {k0}")
    k = np.linspace(-k_max, k_max, n)
    dk = 2 * k_max / (n - 1)
    omega = dispersion(mode, k)
    amp = CONTINUUM_WEIGHT * math.sqrt(dk) / np.sqrt(omega)
    coupling = np.array([g * amp * np.exp(1j * k * zl) for g, zl in zip(g_raw, z)])
    return ModeGrid(mode, k, dk, omega, coupling, group_velocity(mode, omega_a))


def grids_for(table: CouplingTable, z1: float, z2: float, n: int = 4001, k_max: float | None = None,
              gamma_ref: float | None = None) -> list[ModeGrid]:
    """One grid per propagating mode that couples to at least one atom."""
    if gamma_ref is None:
        gamma_ref = float(table.mode_rates(0)[0, 0]) or float(table.mode_rates(0)[1, 1])
    grids = []
    for j, mode in enumerate(table.modes):
        if not np.any(table.g_raw[j]):
            continue
        km = k_max if k_max is not None else default_k_max(mode, table.omega_a, gamma_ref)
        grids.append(build_grid(mode, table.g_raw[j], (z1, z2), table.omega_a, km, n))
    return grids


@dataclass
class OracleResult:
    trajectory: Trajectory
    field_norm: np.ndarray
    norm_error: float
    revival_time: float


def integrate_full(
    grids: list[ModeGrid],
    omega_a: float,
    initial=(1.0, 0.0),
    t_grid=None,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> OracleResult:
    b0 = np.asarray(initial, dtype=complex)
    if abs(np.vdot(b0, b0).real - 1) > 1e-12:
        raise ValueError("initial atomic state must be normalized (field starts in vacuum)")
    t = np.asarray(t_grid, dtype=float)
    t_rev = min((g.revival_time for g in grids), default=math.inf)
    if t[-1] >= t_rev:
        raise RevivalHorizonError(
            f"t_end={t[-1]:.6g} reaches the grid revival time t_rev={t_rev:.6g}; refine the k grid"
        )
    if grids:
        G = np.concatenate([g.coupling for g in grids], axis=1)
        detuning = np.concatenate([g.omega for g in grids]) - omega_a
    else:
        G = np.zeros((2, 0), dtype=complex)
        detuning = np.zeros(0)
    Gc = G.conj()

    def rhs(tt, y):
        c = y[2:]
        ph = np.exp(1j * detuning * tt)
        db = -(Gc @ (c * ph.conj()))
        dc = (G[0] * y[0] + G[1] * y[1]) * ph
        return np.concatenate((db, dc))

    y0 = np.zeros(2 + detuning.size, dtype=complex)
    y0[:2] = b0
    sol = solve_ivp(rhs, (t[0], t[-1]), y0, method="DOP853", t_eval=t, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"oracle integration failed: {sol.message}")
    y = sol.y
    field = np.sum(np.abs(y[2:]) ** 2, axis=0)
    total = np.abs(y[0]) ** 2 + np.abs(y[1]) ** 2 + field
    traj = Trajectory(t, y[0], y[1])
    return OracleResult(traj, field, float(np.abs(total - 1).max()), t_rev)
