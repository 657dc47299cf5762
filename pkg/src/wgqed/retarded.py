"""Retarded (delay-differential) amplitude equations for two atoms.

    dB_i/dt = -r_i B_i(t) - sum_ch kappa e^{i phi} Theta(t - tau) B_src(t - tau)

integrated with classical RK4 under the method of steps.  The fixed step divides
the smallest positive delay, so every delayed lookup trails the integration
front by at least one completed step and is read from cubic Hermite dense
output.  Amplitudes live in the frame rotating at omega_a.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .modes import ChannelRates, CouplingTable


class DDEConfigError(ValueError):
    """Invalid integrator configuration (step/delay mismatch, negative window)."""


@dataclass(frozen=True)
class DelayChannel:
    source: int
    target: int
    strength: float
    delay: float
    phase: float

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError(f"delays must be non-negative, got {self.delay}")
        if {self.source, self.target} != {0, 1}:
            raise ValueError("channels connect atom 0 and atom 1")

    @property
    def coefficient(self) -> complex:
        return self.strength * complex(math.cos(self.phase), math.sin(self.phase))


@dataclass(frozen=True)
class RetardedSystem:
    self_rate_1: float
    self_rate_2: float
    channels: tuple[DelayChannel, ...] = ()

    def __post_init__(self):
        if self.self_rate_1 < 0 or self.self_rate_2 < 0:
            raise ValueError("self decay rates must be non-negative")
        object.__setattr__(self, "channels", tuple(self.channels))

    @classmethod
    def from_rates(cls, rates: ChannelRates, delay: float, phase: float) -> "RetardedSystem":
        """Two-atom system with a single shared TM11 channel in both directions."""
        chans = ()
        if rates.gamma12 != 0.0:
            chans = (
                DelayChannel(1, 0, rates.gamma12, delay, phase),
                DelayChannel(0, 1, rates.gamma12, delay, phase),
            )
        return cls(rates.gamma11, rates.gamma22 + rates.gamma212, chans)

    @classmethod
    def from_table(cls, table: CouplingTable, z1: float, z2: float) -> "RetardedSystem":
        """General form: every propagating mode adds self decay and a delayed exchange channel."""
        sep = abs(z2 - z1)
        r1 = r2 = 0.0
        chans = []
        for j in range(len(table.modes)):
            rates = table.mode_rates(j)
            r1 += rates[0, 0]
            r2 += rates[1, 1]
            if rates[0, 1] != 0.0:
                tau = sep / table.velocity(j)
                phi = table.wavevector(j) * sep
                kappa = float(rates[0, 1])
                chans += [DelayChannel(1, 0, kappa, tau, phi), DelayChannel(0, 1, kappa, tau, phi)]
        return cls(float(r1), float(r2), tuple(chans))

    @property
    def positive_delays(self) -> list[float]:
        return sorted({ch.delay for ch in self.channels if ch.delay > 0})

    @property
    def max_rate(self) -> float:
        return max([self.self_rate_1, self.self_rate_2] + [abs(ch.strength) for ch in self.channels])


@dataclass
class Trajectory:
    """Sampled amplitudes; ``tau`` (if set) is the delay used for the t/tau axis."""

    t: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    tau: float | None = None

    @property
    def p1(self) -> np.ndarray:
        return np.abs(self.b1) ** 2

    @property
    def p2(self) -> np.ndarray:
        return np.abs(self.b2) ** 2


class History:
    """Uniform-step node storage with cubic Hermite dense output.

    Two derivative arrays are kept because the delayed source switches on with
    a jump: ``d_left`` is the limit from earlier times and ``d_right`` from
    later times.  They differ only on the switch-on nodes.
    """

    def __init__(self, step: float, capacity: int):
        self.step = step
        self.y = np.zeros((capacity, 2), dtype=complex)
        self.d_left = np.zeros((capacity, 2), dtype=complex)
        self.d_right = np.zeros((capacity, 2), dtype=complex)
        self.size = 0

    @property
    def front(self) -> float:
        return (self.size - 1) * self.step

    def append(self, y, d_left, d_right) -> None:
        n = self.size
        self.y[n] = y
        self.d_left[n] = d_left
        self.d_right[n] = d_right
        self.size = n + 1

    def component(self, atom: int, t: float) -> complex:
        """Amplitude of one atom at time t (zero pre-history for t < 0)."""
        if t < 0:
            return 0j
        h = self.step
        k = int(t / h)
        last = self.size - 1
        if k >= last:
            if t <= self.front * (1 + 1e-12) + 1e-14:
                return complex(self.y[last, atom])
            raise ValueError(f"history query at t={t} beyond integration front {self.front}")
        s = t / h - k
        s2 = s * s
        s3 = s2 * s
        return complex(
            (2 * s3 - 3 * s2 + 1) * self.y[k, atom]
            + (s3 - 2 * s2 + s) * h * self.d_right[k, atom]
            + (-2 * s3 + 3 * s2) * self.y[k + 1, atom]
            + (s3 - s2) * h * self.d_left[k + 1, atom]
        )

    def evaluate(self, t: float) -> tuple[complex, complex]:
        return self.component(0, t), self.component(1, t)

    def sample(self, times: np.ndarray) -> np.ndarray:
        """Vectorized dense output on a grid inside ``[0, front]``; returns shape (len, 2)."""
        times = np.asarray(times, dtype=float)
        if times.size and (times.min() < 0 or times.max() > self.front * (1 + 1e-12) + 1e-14):
            raise ValueError("sample times must lie within [0, integration front]")
        h = self.step
        k = np.minimum((times / h).astype(int), self.size - 2)
        s = (times / h - k)[:, None]
        s2, s3 = s * s, s * s * s
        return (
            (2 * s3 - 3 * s2 + 1) * self.y[k]
            + (s3 - 2 * s2 + s) * h * self.d_right[k]
            + (-2 * s3 + 3 * s2) * self.y[k + 1]
            + (s3 - s2) * h * self.d_left[k + 1]
        )


def choose_step(system: RetardedSystem, min_steps_per_delay: int = 200, rate_resolution: float = 0.01,
                t_end: float = 1.0) -> float:
    """Largest step h = tau_min / N with h <= tau_min/200 and h <= 0.01/rate_max."""
    rate = system.max_rate
    h_rate = rate_resolution / rate if rate > 0 else max(t_end, 1.0) / 1000
    delays = system.positive_delays
    if not delays:
        return h_rate
    tau = delays[0]
    n = max(min_steps_per_delay, math.ceil(tau / h_rate - 1e-9))
    return tau / n


def solve_history(system: RetardedSystem, initial=(1.0, 0.0), t_end: float = 10.0,
                  step: float | None = None) -> History:
    """Run the method of steps up to (at least) ``t_end`` and return the node history."""
    if t_end < 0:
        raise DDEConfigError(f"t_end must be non-negative, got {t_end}")
    b0 = np.asarray(initial, dtype=complex)
    if abs(b0[0]) ** 2 + abs(b0[1]) ** 2 > 1 + 1e-12:
        raise ValueError("initial atomic populations exceed one excitation")
    delays = system.positive_delays
    if step is None:
        h = choose_step(system, t_end=t_end)
    else:
        h = float(step)
        if delays:
            ratio = delays[0] / h
            if ratio < 1 - 1e-9 or abs(ratio - round(ratio)) > 1e-9 * ratio:
                raise DDEConfigError(
                    f"step {h} is not commensurate with the smallest delay {delays[0]} (need tau = N*h)"
                )
    n_steps = max(1, math.ceil(t_end / h - 1e-9))
    hist = History(h, n_steps + 1)

    r = (system.self_rate_1, system.self_rate_2)
    instant = [(ch.source, ch.target, ch.coefficient) for ch in system.channels if ch.delay == 0]
    delayed = [(ch.source, ch.target, ch.coefficient, ch.delay) for ch in system.channels if ch.delay > 0]
    tol = 1e-9 * h
    # nodes where a delayed source switches on carry different one-sided derivatives
    jump_nodes = {round(d / h) for *_, d in delayed if abs(d / h - round(d / h)) * h <= tol}

    def rhs(t, b1, b2, right):
        d = [-r[0] * b1, -r[1] * b2]
        b = (b1, b2)
        for src, tgt, coef in instant:
            d[tgt] -= coef * b[src]
        for src, tgt, coef, tau in delayed:
            s = t - tau
            if s > tol:
                d[tgt] -= coef * hist.component(src, s)
            elif s >= -tol and right:
                # Theta(0) = 0 at the node itself; the right limit drives the step after it
                d[tgt] -= coef * hist.component(src, 0.0)
        return d

    b1, b2 = complex(b0[0]), complex(b0[1])
    hist.append((b1, b2), rhs(0.0, b1, b2, False), rhs(0.0, b1, b2, True))
    for n in range(n_steps):
        t = n * h
        k1 = hist.d_right[n]
        k1a, k1b = complex(k1[0]), complex(k1[1])
        k2a, k2b = rhs(t + 0.5 * h, b1 + 0.5 * h * k1a, b2 + 0.5 * h * k1b, True)
        k3a, k3b = rhs(t + 0.5 * h, b1 + 0.5 * h * k2a, b2 + 0.5 * h * k2b, True)
        k4a, k4b = rhs((n + 1) * h, b1 + h * k3a, b2 + h * k3b, False)
        b1 = b1 + h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
        b2 = b2 + h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
        t1 = (n + 1) * h
        dl = rhs(t1, b1, b2, False)
        dr = rhs(t1, b1, b2, True) if (n + 1) in jump_nodes else dl
        hist.append((b1, b2), dl, dr)

    return hist


def integrate_retarded(
    system: RetardedSystem,
    initial=(1.0, 0.0),
    t_end: float = 10.0,
    samples: int = 2000,
    step: float | None = None,
) -> Trajectory:
    """Integrate the retarded equations and return amplitudes on ``linspace(0, t_end, samples)``."""
    hist = solve_history(system, initial, t_end, step)
    t_out = np.linspace(0.0, t_end, samples)
    vals = hist.sample(t_out)
    delays = system.positive_delays
    return Trajectory(t_out, vals[:, 0], vals[:, 1], tau=delays[0] if delays else None)
