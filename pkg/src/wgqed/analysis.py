"""Dark-state algebra and comparisons between dynamics engines."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DarkState:
    """Normalized amplitudes over (atom 1 excited, atom 2 excited)."""

    c1: float
    c2: float


def dark_state(g11: float, g12: float) -> DarkState:
    """State annihilated by ``g11 s-_1 + g12 s-_2``: ``(g12, -g11) / norm``."""
    norm = math.hypot(g11, g12)
    if norm == 0.0:
        raise ValueError("dark state undefined when both couplings vanish")
    return DarkState(g12 / norm, -g11 / norm)


@dataclass(frozen=True)
class SteadyPopulations:
    p1: float
    p2: float
    ratio: float | None  # None when p2 == 0


def steady_ratio(dark: DarkState, initial) -> SteadyPopulations:
    """Long-time populations when only the dark component of ``initial`` survives."""
    c1, c2 = (complex(v) for v in initial)
    if abs(abs(c1) ** 2 + abs(c2) ** 2 - 1) > 1e-10:
        raise ValueError("initial amplitudes must be normalized in the single-excitation sector")
    weight = abs(dark.c1 * c1 + dark.c2 * c2) ** 2
    p1 = weight * dark.c1**2
    p2 = weight * dark.c2**2
    return SteadyPopulations(p1, p2, p1 / p2 if p2 > 0 else None)


def dark_ratio_formula(dy: float, b: float) -> float:
    """P1/P2 at long times for atom 2 displaced by ``dy`` along y: ``cos^2(pi dy / b)``."""
    return math.cos(math.pi * dy / b) ** 2


def tail_average(t, values, fraction: float = 0.05, flatness: float = 1e-4) -> float:
    """Mean over the final ``fraction`` of the window; raises if the tail is not flat."""
    t = np.asarray(t)
    values = np.asarray(values)
    tail = values[t >= t[-1] - fraction * (t[-1] - t[0])]
    spread = float(tail.max() - tail.min())
    if spread > flatness:
        raise ValueError(f"trajectory tail not stationary: max-min = {spread:.3g} > {flatness}")
    return float(tail.mean())


@dataclass(frozen=True)
class Distance:
    sup: float
    l2: float


def curve_distance(a, b, observable: str = "p1") -> Distance:
    """Sup-norm and L2 (trapezoid) distance of one observable, on ``a``'s grid.

    ``b`` is linearly interpolated onto the part of ``a``'s grid inside its range.
    """
    ta, tb = np.asarray(a.t), np.asarray(b.t)
    ya, yb = np.asarray(getattr(a, observable)), np.asarray(getattr(b, observable))
    lo, hi = max(ta[0], tb[0]), min(ta[-1], tb[-1])
    if lo > hi:
        raise ValueError("trajectories have disjoint time ranges")
    if ta.shape == tb.shape and np.array_equal(ta, tb):
        t, diff = ta, ya - yb
    else:
        mask = (ta >= lo) & (ta <= hi)
        t = ta[mask]
        diff = ya[mask] - np.interp(t, tb, yb)
    if t.size < 2:
        return Distance(float(np.abs(diff).max(initial=0.0)), 0.0)
    return Distance(float(np.abs(diff).max()), float(math.sqrt(np.trapezoid(diff**2, t))))


def local_extrema(y, tol: float = 0.0):
    """Indices of strict interior local minima and maxima (plateaus of width <= tol ignored)."""
    y = np.asarray(y)
    d = np.diff(y)
    d[np.abs(d) <= tol] = 0.0
    sign = np.sign(d)
    # drop flat segments so a min followed by a plateau still registers
    nz = np.nonzero(sign)[0]
    mins, maxs = [], []
    for i0, i1 in zip(nz[:-1], nz[1:]):
        if sign[i0] < 0 < sign[i1]:
            mins.append(i1)
        elif sign[i0] > 0 > sign[i1]:
            maxs.append(i1)
    return mins, maxs
