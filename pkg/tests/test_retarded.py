import math

import numpy as np
import pytest

from wgqed.lindblad import LindbladSpec, basis_state, build_generator, integrate_me, projector
from wgqed.modes import ChannelRates
from wgqed.retarded import (
    DDEConfigError,
    DelayChannel,
    History,
    RetardedSystem,
    integrate_retarded,
    solve_history,
)


def centred_system(gamma=1.0, tau=1.0, phase=12.0):
    return RetardedSystem.from_rates(ChannelRates(gamma, gamma, gamma, 0.0), tau, phase)


def test_decoupled_exponential():
    tr = integrate_retarded(RetardedSystem(0.7, 0.3), (1.0, 0.0), t_end=5.0, samples=101)
    assert np.allclose(tr.b1, np.exp(-0.7 * tr.t), atol=1e-10, rtol=0)
    assert np.allclose(tr.p1, np.exp(-1.4 * tr.t), atol=1e-10, rtol=0)
    assert np.all(tr.b2 == 0)


def test_centred_causality_and_pre_echo(make_table):
    tb, z1, z2 = make_table(sep_k10=12)
    system = RetardedSystem.from_table(tb, z1, z2)
    tau = system.positive_delays[0]
    gamma = system.self_rate_1
    hist = solve_history(system, (1.0, 0.0), 3 * tau)
    nodes = np.arange(hist.size) * hist.step
    early = nodes <= tau * (1 + 1e-12)
    assert np.all(hist.y[early, 1] == 0)
    echo = nodes <= 2 * tau * (1 - 1e-12)
    assert np.abs(np.abs(hist.y[echo, 0]) ** 2 - np.exp(-2 * gamma * nodes[echo])).max() <= 1e-8
    # P2 switches on right after tau
    assert abs(hist.y[np.searchsorted(nodes, tau) + 2, 1]) > 0


def test_perp_y_dark_state_populations(make_table):
    tb, z1, z2 = make_table(dy=0.125)
    tr = integrate_retarded(RetardedSystem.from_table(tb, z1, z2), (1.0, 0.0), t_end=12.0, samples=500)
    assert tr.p1[-1] == pytest.approx(1 / 9, abs=1e-8)
    assert tr.p2[-1] == pytest.approx(2 / 9, abs=1e-8)


def test_history_prehistory_and_nodes():
    hist = solve_history(RetardedSystem(1.0, 0.0), (1.0, 0.0), t_end=1.0, step=0.01)
    assert hist.evaluate(-1.0) == (0j, 0j)
    assert hist.component(0, 0.37) == pytest.approx(complex(hist.y[37, 0]), abs=1e-15)
    assert hist.component(0, 0.0) == 1.0


def test_history_hermite_midpoint_accuracy():
    hist = solve_history(RetardedSystem(1.0, 0.0), (1.0, 0.0), t_end=2.0, step=0.01)
    for t in (0.005, 0.505, 1.235, 1.995):
        assert abs(hist.component(0, t) - math.exp(-t)) <= 1e-9


def test_history_rejects_future_queries():
    hist = solve_history(RetardedSystem(1.0, 0.0), (1.0, 0.0), t_end=1.0, step=0.1)
    with pytest.raises(ValueError):
        hist.component(0, 1.5)
    with pytest.raises(ValueError):
        hist.sample(np.array([0.0, 2.0]))


def test_history_class_directly():
    h = History(0.5, 3)
    h.append((1.0, 0.0), (0.0, 0.0), (0.0, 0.0))
    h.append((1.0, 2.0), (0.0, 0.0), (0.0, 0.0))
    assert h.front == 0.5
    assert h.evaluate(0.25) == (1.0, 1.0)


def test_incommensurate_step_rejected():
    with pytest.raises(DDEConfigError, match="commensurate"):
        integrate_retarded(centred_system(tau=1.0), t_end=2.0, step=0.3)
    with pytest.raises(DDEConfigError):
        integrate_retarded(centred_system(tau=1.0), t_end=2.0, step=2.0)


def test_negative_window_rejected():
    with pytest.raises(DDEConfigError):
        integrate_retarded(centred_system(), t_end=-1.0)


def test_channel_validation():
    with pytest.raises(ValueError):
        DelayChannel(0, 1, 1.0, -0.1, 0.0)
    with pytest.raises(ValueError):
        RetardedSystem(-1.0, 0.0)


@pytest.mark.parametrize("phase", [0.0, 1.3, 12.0, math.pi])
def test_population_bounded(phase):
    tr = integrate_retarded(centred_system(1.0, 0.8, phase), t_end=20.0, samples=4001)
    total = tr.p1 + tr.p2
    assert total.min() >= 0
    assert total.max() <= 1 + 1e-6


def test_exchange_symmetry():
    s = 1 / math.sqrt(2)
    tr = integrate_retarded(centred_system(1.54, 3.16, 12.0), (s, s), t_end=20.0, samples=1000)
    assert np.abs(tr.p1 - tr.p2).max() <= 1e-10


def test_step_halving_fourth_order():
    system = centred_system(1.0, 1.0, 12.0)
    runs = [integrate_retarded(system, t_end=6.0, samples=121, step=1.0 / n) for n in (20, 40, 80)]
    e1 = np.abs(runs[0].b1 - runs[1].b1).max()
    e2 = np.abs(runs[1].b1 - runs[2].b1).max()
    assert 11 < e1 / e2 < 22


def test_zero_delay_matches_master_equation(make_table):
    tb, z1, z2 = make_table(dx=0.25)
    tr = integrate_retarded(RetardedSystem.from_table(tb, z1, z2), (1.0, 0.0), t_end=8.0, samples=800)
    gen = build_generator(LindbladSpec.from_table(tb, z1, z2))
    me = integrate_me(gen, projector(basis_state("eg")), tr.t)
    assert np.abs(tr.p1 - me.p1).max() <= 1e-6
    assert np.abs(tr.p2 - me.p2).max() <= 1e-6


def test_revival_after_round_trip():
    """P1 is monotone until the echo returns at 2 tau, then revives."""
    from wgqed.analysis import local_extrema

    tr = integrate_retarded(centred_system(1.0, 1.0, 12.0), t_end=5.0, samples=5001)
    mins, maxs = local_extrema(tr.p1, 1e-14)
    assert tr.t[mins[0]] >= 2.0
    assert any(mx > mins[0] for mx in maxs)


def test_default_step_resolution():
    from wgqed.retarded import choose_step

    system = centred_system(2.0, 3.0)
    h = choose_step(system)
    n = 3.0 / h
    assert abs(n - round(n)) < 1e-9
    assert h <= 3.0 / 200 and h <= 0.01 / 2.0
