"""Static waveguide quantities: TM cutoffs, dispersion, couplings and decay rates.

Natural units are used throughout: hbar = c = eps0 = 1 and lengths in units of
the guide width ``a``.  The dipole scale (mu, cross-section area) never enters
separately; the user fixes the renormalized coupling of a centred atom to the
fundamental TM11 mode as the ratio ``scale = g'_11 / Omega_1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

C_LIGHT = 1.0

DEFAULT_MODE_LIST: tuple[tuple[int, int], ...] = ((1, 1), (2, 1), (3, 1))


class ModeNotPropagating(ValueError):
    """Raised when a frequency lies at or below a mode's cutoff."""


class GeometryError(ValueError):
    """Raised for atoms placed outside the guide cross section."""


@dataclass(frozen=True)
class CrossSection:
    a: float = 1.0
    b: float = 0.5

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise GeometryError(f"cross section needs a > 0 and b > 0, got a={self.a}, b={self.b}")

    @property
    def area(self) -> float:
        return self.a * self.b


@dataclass(frozen=True)
class TMMode:
    m: int
    n: int
    cutoff: float

    @classmethod
    def of(cls, m: int, n: int, cs: CrossSection) -> "TMMode":
        return cls(m, n, cutoff_frequency(m, n, cs))

    @property
    def label(self) -> str:
        return f"TM{self.m}{self.n}"


@dataclass(frozen=True)
class AtomSpec:
    """A two-level atom with its dipole along the guide axis z."""

    x: float
    y: float
    z: float
    omega_a: float

    def __post_init__(self):
        if not self.omega_a > 0:
            raise ValueError(f"omega_a must be positive, got {self.omega_a}")

    def check_inside(self, cs: CrossSection) -> None:
        if not (0.0 <= self.x <= cs.a and 0.0 <= self.y <= cs.b):
            raise GeometryError(
                f"atom at (x={self.x}, y={self.y}) lies outside the {cs.a} x {cs.b} cross section"
            )


def cutoff_frequency(m: int, n: int, cs: CrossSection) -> float:
    if m < 1 or n < 1:
        raise ValueError(f"TM modes need m >= 1 and n >= 1, got ({m}, {n})")
    return C_LIGHT * math.hypot(m * math.pi / cs.a, n * math.pi / cs.b)


def dispersion(mode: TMMode, k):
    """Guided-mode frequency ``sqrt(Omega^2 + c^2 k^2)``; accepts scalars or arrays."""
    w = np.sqrt(mode.cutoff**2 + (C_LIGHT * np.asarray(k, dtype=float)) ** 2)
    return float(w) if w.ndim == 0 else w


def resonant_wavevector(mode: TMMode, omega_a: float) -> float:
    if omega_a <= mode.cutoff:
        raise ModeNotPropagating(
            f"mode not propagating at this frequency: omega_a={omega_a:.6g} <= cutoff {mode.cutoff:.6g}"
        )
    return math.sqrt(omega_a**2 - mode.cutoff**2) / C_LIGHT


def group_velocity(mode: TMMode, omega_a: float) -> float:
    return C_LIGHT**2 * resonant_wavevector(mode, omega_a) / omega_a


def midpoint_frequency(cs: CrossSection) -> float:
    """Atomic frequency halfway between the TM11 and TM31 cutoffs."""
    return 0.5 * (cutoff_frequency(1, 1, cs) + cutoff_frequency(3, 1, cs))


def mode_profile(mode: TMMode, x: float, y: float, cs: CrossSection) -> float:
    """E_z profile ``sin(m pi x/a) sin(n pi y/b)``, snapped to 0 on nodal planes."""
    px = mode.m * x / cs.a
    py = mode.n * y / cs.b
    # sin(k pi) is ~1e-16 in floating point; nodal atoms must decouple exactly
    sx = 0.0 if _is_integer(px) else math.sin(math.pi * px)
    sy = 0.0 if _is_integer(py) else math.sin(math.pi * py)
    return sx * sy


def _is_integer(v: float, tol: float = 1e-12) -> bool:
    return abs(v - round(v)) <= tol * max(1.0, abs(v))


def coupling_strength(mode: TMMode, atom: AtomSpec, cs: CrossSection, scale: float) -> tuple[float, float]:
    """Return ``(g_raw, g_renorm)`` for one atom and one TM mode.

    ``g_renorm = scale * Omega_mn * profile`` so that a centred atom couples to
    TM11 with ``scale * Omega_11``; ``g_raw = g_renorm * sqrt(omega_a)``.
    """
    g_renorm = scale * mode.cutoff * mode_profile(mode, atom.x, atom.y, cs)
    return g_renorm * math.sqrt(atom.omega_a), g_renorm


def propagating_modes(
    cs: CrossSection, omega_a: float, mode_list: Iterable[tuple[int, int]] = DEFAULT_MODE_LIST
) -> list[TMMode]:
    modes = [TMMode.of(m, n, cs) for m, n in mode_list]
    return sorted((md for md in modes if md.cutoff < omega_a), key=lambda md: md.cutoff)


@dataclass(frozen=True)
class CouplingTable:
    """Renormalized couplings ``g'[j, l]`` for propagating mode j and atom l."""

    modes: tuple[TMMode, ...]
    omega_a: float
    g_renorm: np.ndarray = field(repr=False)

    @property
    def g_raw(self) -> np.ndarray:
        return self.g_renorm * math.sqrt(self.omega_a)

    def wavevector(self, j: int) -> float:
        return resonant_wavevector(self.modes[j], self.omega_a)

    def velocity(self, j: int) -> float:
        return group_velocity(self.modes[j], self.omega_a)

    def mode_rates(self, j: int) -> np.ndarray:
        """2x2 real matrix ``pi g'_jl g'_jm / v_j`` for mode j."""
        g = self.g_renorm[j]
        return math.pi * np.outer(g, g) / self.velocity(j)

    def without_higher_modes(self) -> "CouplingTable":
        """Keep only the fundamental mode (drops e.g. the TM21 channel)."""
        return CouplingTable(self.modes[:1], self.omega_a, self.g_renorm[:1].copy())


def coupling_table(
    cs: CrossSection, atoms: Sequence[AtomSpec], modes: Sequence[TMMode], scale: float
) -> CouplingTable:
    if len(atoms) != 2:
        raise ValueError("exactly two atoms are supported")
    omega_a = atoms[0].omega_a
    if any(not math.isclose(at.omega_a, omega_a) for at in atoms):
        raise ValueError("both atoms must share one transition frequency")
    for at in atoms:
        at.check_inside(cs)
    g = np.array([[coupling_strength(md, at, cs, scale)[1] for at in atoms] for md in modes], dtype=float)
    return CouplingTable(tuple(modes), omega_a, g.reshape(len(modes), 2))


@dataclass(frozen=True)
class ChannelRates:
    gamma11: float
    gamma12: float
    gamma22: float
    gamma212: float


def channel_rates(table: CouplingTable) -> ChannelRates:
    """Named rates: TM11 self/cross rates plus the atom-2 loss into higher modes."""
    if not table.modes:
        raise ModeNotPropagating("no propagating mode in the coupling table")
    r = table.mode_rates(0)
    gamma212 = sum(table.mode_rates(j)[1, 1] for j in range(1, len(table.modes)))
    return ChannelRates(float(r[0, 0]), float(r[0, 1]), float(r[1, 1]), float(gamma212))


@dataclass(frozen=True)
class CollectiveRates:
    """Complex collective coefficients; decay ``Gamma = 2 Re A`` and exchange ``U = 2 Im A``."""

    A: np.ndarray

    @property
    def Gamma(self) -> np.ndarray:
        return 2.0 * self.A.real

    @property
    def U(self) -> np.ndarray:
        return 2.0 * self.A.imag


def collective_rates(table: CouplingTable, z1: float, z2: float, mode_index: int = 0) -> CollectiveRates:
    """``A_ij = pi g'_i g'_j exp(i k0 |z_i - z_j|) / v`` for one mode (TM11 by default)."""
    k0 = table.wavevector(mode_index)
    sep = abs(z2 - z1)
    phase = np.array([[1.0, np.exp(1j * k0 * sep)], [np.exp(1j * k0 * sep), 1.0]])
    return CollectiveRates(table.mode_rates(mode_index) * phase)
