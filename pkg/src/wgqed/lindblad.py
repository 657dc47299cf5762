"""Born-Markov master equation for two atoms sharing a waveguide.

Basis ordering is ``|gg>, |ge>, |eg>, |ee>`` with the first label for atom 1,
so index 2 (``|eg>``) is "atom 1 excited".  Density matrices are vectorized
row-major, for which ``vec(A rho B) = kron(A, B.T) vec(rho)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .modes import ChannelRates, CouplingTable, collective_rates

_SM = np.array([[0.0, 1.0], [0.0, 0.0]])  # |g><e| with g=0, e=1
_I2 = np.eye(2)
SIGMA_MINUS = (np.kron(_SM, _I2), np.kron(_I2, _SM))
BASIS = ("gg", "ge", "eg", "ee")


def basis_state(label: str) -> np.ndarray:
    v = np.zeros(4, dtype=complex)
    v[BASIS.index(label)] = 1.0
    return v


def single_excitation_state(c1: complex, c2: complex) -> np.ndarray:
    """``c1 |eg> + c2 |ge>`` (atom 1 / atom 2 excited)."""
    v = np.zeros(4, dtype=complex)
    v[2], v[1] = c1, c2
    return v


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


@dataclass(frozen=True)
class LindbladSpec:
    """Coefficients of the two-atom master equation.

    ``Gamma`` is the collective decay matrix, ``U`` the exchange matrix
    (``U = 2 Im A``), and ``gamma_local2`` the extra loss of atom 2 into
    higher guided modes, entering as ``gamma_local2 * (2 s rho s+ - ...)``.
    """

    omega_a: float
    U: np.ndarray
    Gamma: np.ndarray
    gamma_local2: float = 0.0

    def __post_init__(self):
        G = np.asarray(self.Gamma, dtype=float)
        U = np.asarray(self.U, dtype=float)
        object.__setattr__(self, "Gamma", G)
        object.__setattr__(self, "U", U)
        if not (np.allclose(G, G.T) and np.allclose(U, U.T)):
            raise ValueError("Gamma and U must be symmetric")
        scale = max(1.0, float(np.abs(G).max()))
        if np.linalg.eigvalsh(G).min() < -1e-12 * scale:
            raise ValueError("collective decay matrix Gamma is not positive semidefinite")
        if self.gamma_local2 < 0:
            raise ValueError("gamma_local2 must be non-negative")

    @classmethod
    def from_table(cls, table: CouplingTable, z1: float, z2: float) -> "LindbladSpec":
        """Assemble from couplings: TM11 collective terms, higher modes' atom-2 self rate as local loss."""
        A = collective_rates(table, z1, z2, 0).A.copy()
        local = 0.0
        for j in range(1, len(table.modes)):
            Aj = collective_rates(table, z1, z2, j).A.copy()
            local += Aj[1, 1].real
            Aj[1, 1] = 0.0
            A += Aj
        return cls(table.omega_a, 2 * A.imag, 2 * A.real, local)

    @classmethod
    def from_rates(cls, rates: ChannelRates, phase: float, omega_a: float = 0.0) -> "LindbladSpec":
        A = np.array(
            [[rates.gamma11, rates.gamma12 * np.exp(1j * phase)], [rates.gamma12 * np.exp(1j * phase), rates.gamma22]]
        )
        return cls(omega_a, 2 * A.imag, 2 * A.real, rates.gamma212)


def hamiltonian(spec: LindbladSpec) -> np.ndarray:
    """``omega_a sum n_i + sum_ij (U_ij / 2) s+_i s-_j``.

    The exchange coefficient of ``s+_1 s-_2`` is ``U_12 / 2 = Im A_12``, which
    is the Markov limit of the retarded amplitude equations.
    """
    sp = [s.conj().T for s in SIGMA_MINUS]
    H = sum(spec.omega_a * sp[i] @ SIGMA_MINUS[i] for i in range(2))
    for i in range(2):
        for j in range(2):
            H = H + 0.5 * spec.U[i, j] * sp[i] @ SIGMA_MINUS[j]
    return H.astype(complex)


class Generator:
    """Constant Lindblad superoperator as a 16x16 matrix on row-major vec(rho)."""

    def __init__(self, matrix: np.ndarray, spec: LindbladSpec | None = None):
        self.matrix = matrix
        self.spec = spec

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return (self.matrix @ np.asarray(rho, dtype=complex).reshape(16)).reshape(4, 4)

    def decay_rates(self, tol: float = 1e-9) -> np.ndarray:
        """Positive decay rates ``-Re(lambda)`` of the nonstationary eigenmodes."""
        ev = np.linalg.eigvals(self.matrix)
        scale = max(1.0, float(np.abs(ev).max()))
        rates = -ev.real
        return np.sort(rates[rates > tol * scale])


def build_generator(spec: LindbladSpec) -> Generator:
    I4 = np.eye(4)

    def left(A):
        return np.kron(A, I4)

    def right(B):
        return np.kron(I4, B.T)

    H = hamiltonian(spec)
    L = -1j * (left(H) - right(H))
    sm = SIGMA_MINUS
    sp = [s.T for s in sm]
    for i in range(2):
        for j in range(2):
            g = spec.Gamma[i, j]
            if g == 0.0:
                continue
            L = L + 0.5 * g * (
                2 * np.kron(sm[j], sp[i].T) - left(sp[i] @ sm[j]) - right(sp[i] @ sm[j])
            )
    if spec.gamma_local2:
        n2 = sp[1] @ sm[1]
        L = L + spec.gamma_local2 * (2 * np.kron(sm[1], sp[1].T) - left(n2) - right(n2))
    return Generator(L, spec)


@dataclass
class MEResult:
    t: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    p_ee: np.ndarray
    trace: np.ndarray
    min_eig: np.ndarray
    states: np.ndarray | None = None


def _rk4_propagator(L: np.ndarray, h: float) -> np.ndarray:
    # one classical RK4 step of a constant linear system, as a matrix
    X = h * L
    X2 = X @ X
    X3 = X2 @ X
    return np.eye(L.shape[0]) + X + X2 / 2 + X3 / 6 + X3 @ X / 24


def _observables(vecs: np.ndarray):
    rhos = vecs.reshape(-1, 4, 4)
    diag = np.real(np.einsum("nii->ni", rhos))
    herm = 0.5 * (rhos + np.conj(np.transpose(rhos, (0, 2, 1))))
    min_eig = np.linalg.eigvalsh(herm)[:, 0]
    return rhos, diag[:, 2] + diag[:, 3], diag[:, 1] + diag[:, 3], diag[:, 3], diag.sum(axis=1), min_eig


def integrate_me(
    gen: Generator,
    rho0: np.ndarray,
    t_grid,
    method: str = "rk4",
    max_step_norm: float = 0.01,
    keep_states: bool = False,
) -> MEResult:
    """Propagate ``rho0`` over ``t_grid`` (must start at 0 or later and increase).

    ``rk4`` takes substeps with ``h * ||L||_2 <= max_step_norm``; ``expm`` uses
    the exact matrix exponential per output interval.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    _validate_density(rho0)
    t = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    L = gen.matrix
    norm = float(np.linalg.norm(L, 2))
    out = np.empty((t.size, 16), dtype=complex)
    v = rho0.reshape(16)
    cache: dict[float, np.ndarray] = {}

    def propagator(dt: float) -> np.ndarray:
        key = round(dt, 14)
        if key not in cache:
            if method == "expm":
                cache[key] = expm(L * dt)
            elif method == "rk4":
                m = max(1, math.ceil(dt * norm / max_step_norm))
                cache[key] = np.linalg.matrix_power(_rk4_propagator(L, dt / m), m)
            else:
                raise ValueError(f"unknown method {method!r}")
        return cache[key]

    if t[0] > 0:
        v = propagator(t[0]) @ v
    out[0] = v
    for i in range(1, t.size):
        v = propagator(t[i] - t[i - 1]) @ v
        out[i] = v
    rhos, p1, p2, pee, tr, mn = _observables(out)
    return MEResult(t, p1, p2, pee, tr, mn, rhos if keep_states else None)


def steady_state(gen: Generator, rho0: np.ndarray, horizon: float = 50.0) -> np.ndarray:
    """Long-time limit reached from ``rho0``: propagate to ``horizon / slowest nonzero rate``.

    The kernel can be two-dimensional (vacuum plus a dark state), so the fixed
    point depends on the initial state and a null-space solve is not enough.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    _validate_density(rho0)
    rates = gen.decay_rates()
    if rates.size == 0:
        return rho0.copy()
    T = horizon / rates[0]
    return (expm(gen.matrix * T) @ rho0.reshape(16)).reshape(4, 4)


def _validate_density(rho: np.ndarray) -> None:
    if rho.shape != (4, 4):
        raise ValueError(f"density matrix must be 4x4, got {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=1e-12):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > 1e-10:
        raise ValueError("density matrix trace differs from 1")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValueError("density matrix has negative eigenvalues")
