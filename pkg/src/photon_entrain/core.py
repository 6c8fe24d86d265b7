"""Shared domain types: grids, interferometer settings and mirror states.

Units: hbar = 1 and every length is a multiple of a reference width
sigma_0 = 1.  Only :class:`DelayParams` carries SI units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

TOL_NORM = 1e-9
TOL_HERM = 1e-10
TOL_NEG = 1e-10

SPEED_OF_LIGHT = 299_792_458.0  # m/s

DIAGONAL = "diagonal"
FULL = "full"

DEFAULT_MAX_POINTS = {DIAGONAL: 2_000_000, FULL: 8_000}

PORTS = ("L", "R")


class GridCapError(RuntimeError):
    """Raised when a requested grid exceeds the configured point cap."""


def check_history(history: str) -> str:
    """Validate a history label.

    Labels are written newest-first, the way conditional kick operators
    compose: ``"RLL"`` means two photons left, then one right.
    """
    if not isinstance(history, str):
        raise TypeError(f"history must be a string, got {type(history).__name__}")
    bad = set(history) - set(PORTS)
    if bad:
        raise ValueError(f"history {history!r} contains invalid outcome(s) {sorted(bad)}; allowed: L, R")
    return history


def chronological(history: str) -> str:
    """Return the history with the first detected photon first."""
    return check_history(history)[::-1]


def trapezoid(values: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    return np.trapezoid(values, dx=h, axis=axis)


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform 1-D discretization of the mirror coordinate."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if not self.x_min < self.x_max:
            raise ValueError(f"x_min ({self.x_min}) must be below x_max ({self.x_max})")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError(f"n_points must be an integer >= 2, got {self.n_points}")

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @cached_property
    def x(self) -> np.ndarray:
        x = np.linspace(self.x_min, self.x_max, self.n_points)
        x.flags.writeable = False
        return x

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights."""
        w = np.full(self.n_points, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        w.flags.writeable = False
        return w

    def integrate(self, values: np.ndarray) -> float:
        return float(trapezoid(np.asarray(values), self.spacing))

    def covers(self, lo: float, hi: float) -> bool:
        slack = 1e-9 * max(1.0, abs(self.x_min), abs(self.x_max))
        return self.x_min <= lo + slack and self.x_max >= hi - slack


@dataclass(frozen=True)
class InterferometerConfig:
    """Settings of the interferometer.

    Parameters
    ----------
    wavelength : float
        Photon wavelength, in units of sigma_0.
    phase : float
        Phase-shifter setting in radians.
    reflectivity : float
        Intensity reflectivity ``r = cos(theta)**2`` of the central mirror.
    bounces : int
        Number of reflections off the central mirror per photon.
    incidence : float
        Angle of incidence in radians.
    entry_port : {"L0", "R0"}
        Input mode occupied by the photon.
    """

    wavelength: float
    phase: float = 0.0
    reflectivity: float = 1.0
    bounces: int = 1
    incidence: float = 0.0
    entry_port: str = "L0"

    def __post_init__(self):
        if not (self.wavelength > 0 and math.isfinite(self.wavelength)):
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if not math.isfinite(self.phase):
            raise ValueError("phase must be finite")
        if not 0.0 <= self.reflectivity <= 1.0:
            raise ValueError(f"reflectivity must lie in [0, 1], got {self.reflectivity}")
        if int(self.bounces) != self.bounces or self.bounces < 1:
            raise ValueError(f"bounces must be an integer >= 1, got {self.bounces}")
        if not -math.pi / 2 < self.incidence < math.pi / 2:
            raise ValueError(f"incidence must lie in (-pi/2, pi/2), got {self.incidence}")
        if self.entry_port not in ("L0", "R0"):
            raise ValueError(f"entry_port must be 'L0' or 'R0', got {self.entry_port!r}")

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def theta(self) -> float:
        return math.acos(math.sqrt(self.reflectivity))

    @property
    def photon_momentum(self) -> float:
        return 2.0 * self.wavenumber * math.cos(self.incidence)

    @property
    def fringe_period(self) -> float:
        """Nominal imprint period ``lambda / (4 N)``."""
        return self.wavelength / (4 * self.bounces)


@dataclass(frozen=True)
class DelayParams:
    """Timing inputs in SI units (seconds, meters)."""

    coherence_time: float
    leg_distance: float
    bounces: int = 1
    light_speed: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not self.coherence_time > 0:
            raise ValueError(f"coherence_time must be positive, got {self.coherence_time}")
        # D = 0 is allowed: it is the degenerate single-location limit.
        if not self.leg_distance >= 0:
            raise ValueError(f"leg_distance must be non-negative, got {self.leg_distance}")
        if int(self.bounces) != self.bounces or self.bounces < 1:
            raise ValueError(f"bounces must be an integer >= 1, got {self.bounces}")
        if not self.light_speed > 0:
            raise ValueError("light_speed must be positive")


@dataclass(frozen=True, eq=False)
class MirrorState:
    """Center-of-mass state of the mirror on a grid.

    ``rho`` is either the real diagonal ``rho(x, x)`` (shape ``(n,)``) or the
    full complex density matrix ``rho(x, xi)`` (shape ``(n, n)``).  Conditional
    states are kept unnormalized; ``weight`` is the probability ``p_H`` of
    the recorded ``history``.
    """

    grid: SpatialGrid
    rho: np.ndarray
    weight: float = 1.0
    history: str = ""
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        check_history(self.history)
        rho = np.asarray(self.rho)
        n = self.grid.n_points
        if rho.ndim == 1:
            if rho.shape != (n,):
                raise ValueError(f"diagonal must have shape ({n},), got {rho.shape}")
            if np.iscomplexobj(rho):
                if np.max(np.abs(rho.imag), initial=0.0) > TOL_HERM:
                    raise ValueError("diagonal density must be real")
                rho = rho.real
            rho = np.array(rho, dtype=float)
        elif rho.ndim == 2:
            if rho.shape != (n, n):
                raise ValueError(f"density matrix must have shape ({n}, {n}), got {rho.shape}")
            rho = np.array(rho, dtype=complex)
        else:
            raise ValueError("rho must be a vector (diagonal) or a square matrix")
        rho.flags.writeable = False
        object.__setattr__(self, "rho", rho)
        if not 0.0 <= self.weight <= 1.0 + TOL_NORM:
            raise ValueError(f"weight must lie in [0, 1], got {self.weight}")
        if self.check:
            self.validate()

    @property
    def representation(self) -> str:
        return DIAGONAL if self.rho.ndim == 1 else FULL

    def diagonal(self) -> np.ndarray:
        if self.rho.ndim == 1:
            return self.rho
        return np.diagonal(self.rho).real

    def alpha(self) -> np.ndarray:
        """Normalized position density ``rho_H(x, x) / p_H``."""
        if self.weight <= 0:
            raise ValueError("state has zero weight")
        return self.diagonal() / self.weight

    def to_diagonal(self) -> MirrorState:
        if self.rho.ndim == 1:
            return self
        return MirrorState(self.grid, self.diagonal().copy(), self.weight, self.history, check=False)

    def validate(self) -> None:
        diag = self.diagonal()
        if diag.min() < -TOL_NEG:
            raise ValueError(f"negative probability density ({diag.min():.3e})")
        if self.rho.ndim == 2:
            herm = np.max(np.abs(self.rho - self.rho.conj().T))
            if herm > TOL_HERM:
                raise ValueError(f"density matrix not Hermitian (max deviation {herm:.3e})")
            if np.max(np.abs(np.diagonal(self.rho).imag)) > TOL_HERM:
                raise ValueError("density matrix has a non-real diagonal")
        trace = self.grid.integrate(diag)
        if abs(trace - self.weight) > TOL_NORM:
            raise ValueError(f"trace {trace!r} does not match weight {self.weight!r}")


def make_grid_for(
    config: InterferometerConfig,
    envelope_halfwidth: float,
    points_per_fringe: int = 16,
    center: float = 0.0,
    representation: str = DIAGONAL,
    max_points: int | None = None,
) -> SpatialGrid:
    """Size a grid for ``config`` covering ``center +- 4 * envelope_halfwidth``.

    The spacing resolves both the imprint period ``lambda / (4 N)`` and the
    envelope itself with at least ``points_per_fringe`` points.
    """
    if not envelope_halfwidth > 0:
        raise ValueError(f"envelope_halfwidth must be positive, got {envelope_halfwidth}")
    if points_per_fringe < 8:
        raise ValueError(f"points_per_fringe must be >= 8, got {points_per_fringe}")
    if representation not in DEFAULT_MAX_POINTS:
        raise ValueError(f"unknown representation {representation!r}")
    cap = DEFAULT_MAX_POINTS[representation] if max_points is None else max_points
    span = 8.0 * envelope_halfwidth
    h_max = min(config.fringe_period, envelope_halfwidth) / points_per_fringe
    # interval count is a multiple of 8 so center +- k * halfwidth are nodes
    n_intervals = int(math.ceil(span / h_max - 1e-9))
    n_points = 8 * int(math.ceil(n_intervals / 8)) + 1
    if n_points > cap:
        raise GridCapError(
            f"grid needs {n_points} points for a {representation} state (cap {cap}); "
            "increase the wavelength or lower points_per_fringe"
        )
    return SpatialGrid(center - 0.5 * span, center + 0.5 * span, n_points)


def state_weight(state: MirrorState) -> float:
    """Quadrature integral of the diagonal, i.e. ``p_H``."""
    return state.grid.integrate(state.diagonal())


def purity(state: MirrorState) -> float:
    """``Tr[(rho / p_H)^2]`` of a full density matrix."""
    if state.representation != FULL:
        raise ValueError("purity needs the full density matrix representation")
    weight = state_weight(state)
    if weight <= 0:
        raise ValueError("state has zero weight")
    w = state.grid.weights
    sq = np.abs(state.rho) ** 2
    return float(w @ sq @ w) / weight**2
