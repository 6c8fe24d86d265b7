"""Photon entrainment of a delocalized interferometer mirror."""

from .core import (
    DIAGONAL,
    FULL,
    DelayParams,
    GridCapError,
    InterferometerConfig,
    MirrorState,
    SpatialGrid,
    make_grid_for,
    purity,
    state_weight,
)
from .dynamics import (
    HistoryNode,
    MeasurementRecord,
    conditional_update,
    enumerate_histories,
    exit_probability,
    free_evolution,
    min_photon_delay,
    sample_trajectories,
    sample_trajectory,
)
from .optics import ExitAmplitudes, closed_form_kernel_n1, exit_amplitudes, kick_phase, splitter_matrix
from .states import StateSpec, gaussian_pure, initial_state, make_state, thermal_gaussian, top_hat

__version__ = "0.1.0"
