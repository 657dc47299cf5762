import math

import numpy as np
import pytest

from wgqed.modes import AtomSpec, coupling_table, resonant_wavevector
from wgqed.oracle import RevivalHorizonError, build_grid, default_k_max, grids_for, integrate_full
from wgqed.retarded import RetardedSystem, integrate_retarded


def test_tiny_grid(modes, wa):
    k0 = resonant_wavevector(modes[0], wa)
    with pytest.raises(ValueError, match="bracket"):
        build_grid(modes[0], (1.0, 0.0), (0.0, 0.0), wa, k_max=1.0, n=3)
    g = build_grid(modes[1], (1.0, 0.0), (0.0, 0.0), wa, k_max=k0, n=3)
    assert np.allclose(g.k, [-k0, 0.0, k0]) and g.dk == pytest.approx(k0)
    with pytest.raises(ValueError, match="odd"):
        build_grid(modes[0], (1.0, 0.0), (0.0, 0.0), wa, k_max=10.0, n=4)


def test_default_grid_resolves_linewidth(make_table, ref):
    tb, z1, z2 = make_table(sep_k10=12)
    grids = grids_for(tb, z1, z2)
    g = grids[0]
    assert g.k[0] < -ref["k10"] and g.k[-1] > ref["k10"]
    # linewidth in k is gamma / v; want many samples across it
    assert (ref["gamma11"] / ref["v1"]) / g.dk >= 20
    assert g.revival_time > 10 * 2 * ref["tau_12"]


def test_uncoupled_mode_skipped(make_table):
    tb, z1, z2 = make_table(dx=0.0, sep_k10=12)
    assert [m.label for m in tb.modes] == ["TM11", "TM21"]
    # both atoms sit on the TM21 nodal plane x=a/2
    assert [g.mode.label for g in grids_for(tb, z1, z2, n=101)] == ["TM11"]
    tb, z1, z2 = make_table(dx=0.25, sep_k10=12)
    assert [g.mode.label for g in grids_for(tb, z1, z2, n=101)] == ["TM11", "TM21"]


def test_zero_coupling_keeps_amplitudes():
    t = np.linspace(0, 5, 11)
    res = integrate_full([], 9.0, (0.6, 0.8j), t)
    assert np.allclose(res.trajectory.b1, 0.6) and np.allclose(res.trajectory.b2, 0.8j)
    assert res.norm_error == 0


def test_norm_conservation(make_table):
    tb, z1, z2 = make_table(sep_k10=12)
    res = integrate_full(grids_for(tb, z1, z2, n=801), tb.omega_a, (1.0, 0.0), np.linspace(0, 3, 61))
    assert res.norm_error <= 1e-8


def test_revival_guard(make_table):
    tb, z1, z2 = make_table(sep_k10=12)
    grids = grids_for(tb, z1, z2, n=101)
    t_rev = min(g.revival_time for g in grids)
    with pytest.raises(RevivalHorizonError, match="refine"):
        integrate_full(grids, tb.omega_a, (1.0, 0.0), np.linspace(0, 1.01 * t_rev, 5))


def test_exchange_symmetry(cs, wa, modes):
    # identical transverse positions: swapping the initial excitation mirrors populations
    k10 = resonant_wavevector(modes[0], wa)
    atoms = [AtomSpec(0.5, 0.25, 0.0, wa), AtomSpec(0.5, 0.25, 3.0 / k10, wa)]
    tb = coupling_table(cs, atoms, modes, 0.08).without_higher_modes()
    grids = grids_for(tb, 0.0, 3.0 / k10, n=801)
    t = np.linspace(0, 2, 41)
    r1 = integrate_full(grids, wa, (1.0, 0.0), t).trajectory
    r2 = integrate_full(grids, wa, (0.0, 1.0), t).trajectory
    assert np.abs(r1.p1 - r2.p2).max() <= 1e-8
    assert np.abs(r1.p2 - r2.p1).max() <= 1e-8


def test_weak_coupling_matches_retarded_model(make_table):
    tb, z1, z2 = make_table(sep_k10=12, scale=0.01, higher=False)
    gamma = float(tb.mode_rates(0)[0, 0])
    t = np.linspace(0, 3.0 / gamma, 301)
    grids = grids_for(tb, z1, z2, n=4001)
    orc = integrate_full(grids, tb.omega_a, (1.0, 0.0), t).trajectory
    dde = integrate_retarded(RetardedSystem.from_table(tb, z1, z2), (1.0, 0.0), t[-1], samples=t.size)
    assert np.abs(orc.p1 - dde.p1).max() <= 0.03
    assert np.abs(orc.p2 - dde.p2).max() <= 0.03


def test_default_k_max(modes, wa):
    km = default_k_max(modes[0], wa, 1.0, window=2.0)
    assert math.hypot(km, modes[0].cutoff) == pytest.approx(wa + 2.0)
