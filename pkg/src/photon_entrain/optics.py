"""Single-photon transfer chain through the interferometer.

The photon enters through one port, is split by a balanced beam splitter,
bounces ``N`` times off the delocalized central mirror and is recombined
on a second balanced splitter.  At a fixed mirror position ``x`` each kick
operator is an ordinary 2x2 matrix, so the whole chain reduces to a pair
of complex exit amplitudes ``a_L(x), a_R(x)``.  Conditioning the mirror on
an exit port multiplies its density matrix by ``a(x) * conj(a(xi))``.

Propagator convention: path lengths and the fixed mirror phase jumps are
absorbed into the phase shifter.  ``P_1 .. P_N`` are identities and the
last propagator, between the final kick and the recombining splitter, is
``diag(exp(-i phi/2), exp(+i phi/2))``.  With this choice the ``N = 1`` port-L
kernel equals the closed form in :func:`closed_form_kernel_n1` (the
amplitude differs by a global sign) and ``a_R(phi) = a_L(phi - pi)`` up
to a constant phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import InterferometerConfig, SpatialGrid

BALANCED = math.pi / 4


def splitter_matrix(theta: float) -> np.ndarray:
    """Lossless splitter with reflection probability ``cos(theta)**2``."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 1j * s], [1j * s, c]], dtype=complex)


def propagator_matrix(config: InterferometerConfig, j: int) -> np.ndarray:
    """Propagator ``P_j`` for ``j = 1 .. N+1``."""
    if not 1 <= j <= config.bounces + 1:
        raise ValueError(f"propagator index must lie in 1..{config.bounces + 1}, got {j}")
    if j <= config.bounces:
        return np.eye(2, dtype=complex)
    half = 0.5 * config.phase
    return np.diag([np.exp(-1j * half), np.exp(1j * half)])


def kick_phase(x, config: InterferometerConfig, side: str):
    """Recoil phase ``exp(+-i p_gamma x)`` picked up on reflection at ``side``."""
    if side == "L":
        sign = 1.0
    elif side == "R":
        sign = -1.0
    else:
        raise ValueError(f"side must be 'L' or 'R', got {side!r}")
    return np.exp(1j * sign * config.photon_momentum * np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class ExitAmplitudes:
    grid: SpatialGrid
    a_L: np.ndarray
    a_R: np.ndarray

    def amplitude(self, port: str) -> np.ndarray:
        if port == "L":
            return self.a_L
        if port == "R":
            return self.a_R
        raise ValueError(f"port must be 'L' or 'R', got {port!r}")

    def probability(self, port: str) -> np.ndarray:
        """Pointwise exit probability ``|a_port(x)|**2``."""
        a = self.amplitude(port)
        return a.real**2 + a.imag**2

    def kernel(self, port: str) -> np.ndarray:
        a = self.amplitude(port)
        return np.outer(a, a.conj())


def exit_amplitudes_at(config: InterferometerConfig, x) -> tuple[np.ndarray, np.ndarray]:
    """Exit amplitudes at arbitrary mirror positions ``x``."""
    x = np.asarray(x, dtype=float)
    if config.entry_port == "L0":
        v = np.array([1.0, 0.0], dtype=complex)
    else:
        v = np.array([0.0, 1.0], dtype=complex)
    v = splitter_matrix(BALANCED) @ v
    u_l = np.full(x.shape, v[0])
    u_r = np.full(x.shape, v[1])

    c, s = math.cos(config.theta), math.sin(config.theta)
    kick_l = c * kick_phase(x, config, "L")
    kick_r = c * kick_phase(x, config, "R")
    for j in range(1, config.bounces + 1):
        p = propagator_matrix(config, j)
        u_l, u_r = p[0, 0] * u_l, p[1, 1] * u_r
        u_l, u_r = kick_l * u_l + 1j * s * u_r, 1j * s * u_l + kick_r * u_r

    p = propagator_matrix(config, config.bounces + 1)
    u_l, u_r = p[0, 0] * u_l, p[1, 1] * u_r
    b = splitter_matrix(BALANCED)
    return b[0, 0] * u_l + b[0, 1] * u_r, b[1, 0] * u_l + b[1, 1] * u_r


def exit_amplitudes(config: InterferometerConfig, grid: SpatialGrid) -> ExitAmplitudes:
    a_l, a_r = exit_amplitudes_at(config, grid.x)
    a_l.flags.writeable = False
    a_r.flags.writeable = False
    return ExitAmplitudes(grid, a_l, a_r)


def chain_matrix(config: InterferometerConfig, x: float) -> np.ndarray:
    """Full 2x2 transfer matrix at a single mirror position, built by matrix products."""
    c, s = math.cos(config.theta), math.sin(config.theta)
    m = splitter_matrix(BALANCED)
    for j in range(1, config.bounces + 1):
        k = np.array(
            [[c * kick_phase(x, config, "L"), 1j * s], [1j * s, c * kick_phase(x, config, "R")]],
            dtype=complex,
        )
        m = k @ propagator_matrix(config, j) @ m
    return splitter_matrix(BALANCED) @ propagator_matrix(config, config.bounces + 1) @ m


def closed_form_kernel_n1(config: InterferometerConfig, x, xi, port: str = "L"):
    """Effective single-bounce kick kernel ``K(x, xi)`` in closed form.

    Valid for ``N = 1`` at normal incidence with the photon entering at L0.
    The R kernel follows from the L kernel by shifting the phase by ``-pi``.
    """
    if config.bounces != 1:
        raise ValueError("closed form exists only for a single bounce")
    if config.incidence != 0.0 or config.entry_port != "L0":
        raise ValueError("closed form assumes normal incidence and entry through L0")
    if port == "L":
        phi = config.phase
    elif port == "R":
        phi = config.phase - math.pi
    else:
        raise ValueError(f"port must be 'L' or 'R', got {port!r}")
    s, c = math.sin(config.theta), math.cos(config.theta)
    k = config.wavenumber
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    left = s * math.cos(phi / 2) - 1j * c * np.sin(2 * k * x - phi / 2)
    right = s * math.cos(phi / 2) + 1j * c * np.sin(2 * k * xi - phi / 2)
    return left * right
