import math

import pytest

from wgqed.modes import AtomSpec, CrossSection, coupling_table, midpoint_frequency, propagating_modes, resonant_wavevector

# 25-digit mpmath evaluations for a=1, b=1/2, omega_a=(Omega_11+Omega_31)/2, g'_11=0.08 Omega_11
REF = {
    "O1": 7.0248147310407264,
    "O2": 8.8857658763167325,
    "O3": 11.327173399138978,
    "wa": 9.175994065089852,
    "k10": 5.9034604324173627,
    "k20": 2.2895483995428703,
    "v1": 0.6433592252284827,
    "v2": 0.2495150261979219,
    "g11": 0.56198517848325812,
    "g12_dx": 0.39738353063184406,
    "gamma11": 1.5422190509776617,
    "gamma212": 6.3624279075364665,
    "tau_12": 3.159519619608199,
    "Gamma12": 2.6028153028003337,
    "U12": -1.655025952757891,
}


@pytest.fixture
def ref():
    return REF


@pytest.fixture
def cs():
    return CrossSection(1.0, 0.5)


@pytest.fixture
def wa(cs):
    return midpoint_frequency(cs)


@pytest.fixture
def modes(cs, wa):
    return propagating_modes(cs, wa)


@pytest.fixture
def make_table(cs, wa, modes):
    """Coupling table for atom 1 centred and atom 2 offset by (dx, dy) at z-separation sep/k10."""

    def build(dx=0.0, dy=0.0, sep_k10=0.0, scale=0.08, higher=True):
        k10 = resonant_wavevector(modes[0], wa)
        z2 = sep_k10 / k10
        atoms = [AtomSpec(0.5, 0.25, 0.0, wa), AtomSpec(0.5 + dx, 0.25 + dy, z2, wa)]
        tb = coupling_table(cs, atoms, modes, scale)
        return (tb if higher else tb.without_higher_modes()), 0.0, z2

    return build


SQRT_HALF = 1 / math.sqrt(2)
