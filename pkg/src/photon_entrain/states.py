"""Initial mirror states: coherent Gaussian, thermal Gaussian and top hat."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DIAGONAL, FULL, InterferometerConfig, MirrorState, SpatialGrid, make_grid_for

GAUSSIAN_PURE = "GaussianPure"
THERMAL_GAUSSIAN = "ThermalGaussian"
TOP_HAT = "TopHat"
KINDS = (GAUSSIAN_PURE, THERMAL_GAUSSIAN, TOP_HAT)


@dataclass(frozen=True)
class StateSpec:
    """Parameters of an initial mirror state.

    ``sigma`` is the width of the Gaussian density ``exp(-(x-x0)^2/sigma^2)``.
    ``momentum`` boosts pure states by a phase ``exp(i p0 x)``.
    """

    kind: str = GAUSSIAN_PURE
    sigma: float = 1.0
    center: float = 0.0
    momentum: float = 0.0
    coherence_length: float | None = None
    width: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown state kind {self.kind!r}; expected one of {KINDS}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.kind == THERMAL_GAUSSIAN and self.coherence_length is None:
            raise ValueError("ThermalGaussian needs a coherence_length")
        if self.coherence_length is not None and not self.coherence_length > 0:
            raise ValueError(f"coherence_length must be positive, got {self.coherence_length}")
        if self.kind == TOP_HAT and self.width is None:
            raise ValueError("TopHat needs a width")
        if self.width is not None and not self.width > 0:
            raise ValueError(f"width must be positive, got {self.width}")

    @property
    def halfwidth(self) -> float:
        """Envelope half-width used for grid sizing."""
        if self.kind == TOP_HAT:
            return 0.5 * self.width
        return self.sigma

    @property
    def scale(self) -> float:
        """Length that washout thresholds are quoted in."""
        return self.width if self.kind == TOP_HAT else self.sigma


def _require_coverage(grid: SpatialGrid, lo: float, hi: float) -> None:
    if not grid.covers(lo, hi):
        raise ValueError(
            f"grid [{grid.x_min}, {grid.x_max}] does not cover the required span [{lo}, {hi}]"
        )


def _from_amplitude(grid: SpatialGrid, psi: np.ndarray, representation: str) -> MirrorState:
    norm = grid.integrate(np.abs(psi) ** 2)
    psi = psi / math.sqrt(norm)
    if representation == DIAGONAL:
        return MirrorState(grid, np.abs(psi) ** 2)
    if representation == FULL:
        return MirrorState(grid, np.outer(psi, psi.conj()))
    raise ValueError(f"unknown representation {representation!r}")


def gaussian_pure(grid: SpatialGrid, spec: StateSpec, representation: str = FULL) -> MirrorState:
    """Coherent Gaussian ``psi(x) ~ exp(-(x-x0)^2/(2 sigma^2)) exp(i p0 x)``.

    Normalization is done on the grid, so the trace is 1 to rounding.
    """
    s, x0 = spec.sigma, spec.center
    _require_coverage(grid, x0 - 4 * s, x0 + 4 * s)
    x = grid.x
    psi = np.exp(-((x - x0) ** 2) / (2 * s * s)) * np.exp(1j * spec.momentum * x)
    return _from_amplitude(grid, psi, representation)


def thermal_gaussian(grid: SpatialGrid, spec: StateSpec, representation: str = FULL) -> MirrorState:
    """Mixed Gaussian with a finite coherence length.

    ``rho(x, xi) = Z exp(-((x-x0)^2 + (xi-x0)^2) / (2 sigma^2)) exp(-(x-xi)^2 / (2 l_c^2))``.
    The diagonal is the same as for the pure Gaussian; purity is
    ``1 / sqrt(1 + 2 sigma^2 / l_c^2)``.
    """
    if spec.coherence_length is None:
        raise ValueError("thermal_gaussian needs spec.coherence_length")
    s, x0, lc = spec.sigma, spec.center, spec.coherence_length
    _require_coverage(grid, x0 - 4 * s, x0 + 4 * s)
    x = grid.x
    env = np.exp(-((x - x0) ** 2) / (2 * s * s))
    diag = env * env
    z = 1.0 / grid.integrate(diag)
    if representation == DIAGONAL:
        return MirrorState(grid, z * diag)
    if representation != FULL:
        raise ValueError(f"unknown representation {representation!r}")
    dx = x[:, None] - x[None, :]
    rho = z * np.outer(env, env) * np.exp(-(dx * dx) / (2 * lc * lc))
    if spec.momentum:
        phase = np.exp(1j * spec.momentum * x)
        rho = rho * np.outer(phase, phase.conj())
    return MirrorState(grid, rho)


def top_hat(grid: SpatialGrid, spec: StateSpec, representation: str = DIAGONAL) -> MirrorState:
    """Uniform density on ``[x0 - w/2, x0 + w/2]``.

    Each node carries the fraction of its cell ``[x - h/2, x + h/2]`` that
    lies inside the support, so an edge that falls on a node gets weight
    1/2 and the trapezoid rule integrates the support exactly.
    """
    if spec.width is None:
        raise ValueError("top_hat needs spec.width")
    w, x0 = spec.width, spec.center
    _require_coverage(grid, x0 - w / 2, x0 + w / 2)
    h = grid.spacing
    if w < 2 * h:
        raise ValueError("top hat narrower than two grid cells")
    x = grid.x
    covered = np.minimum(x + h / 2, x0 + w / 2) - np.maximum(x - h / 2, x0 - w / 2)
    # rounding removes float noise when the edges sit on nodes
    coverage = np.round(np.clip(covered / h, 0.0, 1.0), 12)
    psi = np.sqrt(coverage) * np.exp(1j * spec.momentum * x)
    return _from_amplitude(grid, psi, representation)


def make_state(spec: StateSpec, grid: SpatialGrid, representation: str = DIAGONAL) -> MirrorState:
    if spec.kind == GAUSSIAN_PURE:
        return gaussian_pure(grid, spec, representation)
    if spec.kind == THERMAL_GAUSSIAN:
        return thermal_gaussian(grid, spec, representation)
    return top_hat(grid, spec, representation)



def initial_state(
    spec: StateSpec,
    config: InterferometerConfig,
    points_per_fringe: int = 16,
    representation: str = DIAGONAL,
    halfwidth: float | None = None,
) -> MirrorState:
    """Build ``spec`` on a grid sized for ``config`` and centered on the state."""
    grid = make_grid_for(
        config,
        spec.halfwidth if halfwidth is None else halfwidth,
        points_per_fringe,
        center=spec.center,
        representation=representation,
    )
    return make_state(spec, grid, representation)
