"""Two two-level atoms coupled to a rectangular waveguide: retarded, Markovian and brute-force dynamics."""

from .analysis import curve_distance, dark_state, steady_ratio
from .lindblad import LindbladSpec, build_generator, integrate_me, steady_state
from .modes import (
    AtomSpec,
    CrossSection,
    TMMode,
    channel_rates,
    collective_rates,
    coupling_strength,
    coupling_table,
    cutoff_frequency,
    dispersion,
    group_velocity,
    propagating_modes,
    resonant_wavevector,
)
from .oracle import build_grid, integrate_full
from .retarded import RetardedSystem, Trajectory, integrate_retarded
from .scenario import build_scenario, preset_config, run_scenario

__version__ = "0.1.0"
