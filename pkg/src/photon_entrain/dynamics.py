"""Conditional evolution of the mirror under photon detections."""

from __future__ import annotations

import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DIAGONAL,
    FULL,
    PORTS,
    DelayParams,
    InterferometerConfig,
    MirrorState,
    check_history,
    state_weight,
)
from .optics import ExitAmplitudes, exit_amplitudes

MAX_TREE_DEPTH = 16
DEFAULT_MASS = 1e4


def _amplitudes_for(state: MirrorState, config: InterferometerConfig, amps: ExitAmplitudes | None):
    if amps is None:
        return exit_amplitudes(config, state.grid)
    if amps.grid != state.grid:
        raise ValueError("exit amplitudes were computed on a different grid")
    return amps


def _check_port(port: str) -> None:
    if port not in PORTS:
        raise ValueError(f"port must be 'L' or 'R', got {port!r}")


def exit_probability(
    state: MirrorState, config: InterferometerConfig, amps: ExitAmplitudes | None = None
) -> tuple[float, float]:
    """Probabilities ``(I_L, I_R)`` that the next photon leaves through L or R."""
    weight = state_weight(state)
    if not weight > 0:
        raise ValueError("cannot condition on a zero-weight state")
    amps = _amplitudes_for(state, config, amps)
    diag = state.diagonal()
    grid = state.grid
    i_l = grid.integrate(amps.probability("L") * diag) / weight
    i_r = grid.integrate(amps.probability("R") * diag) / weight
    return i_l, i_r


def conditional_update(
    state: MirrorState, port: str, config: InterferometerConfig, amps: ExitAmplitudes | None = None
) -> MirrorState:
    """Condition the mirror on a photon detected at ``port``.

    The result is left unnormalized: its weight is the joint probability of
    the extended history.
    """
    _check_port(port)
    if not state.weight > 0:
        raise ValueError("cannot condition on a zero-weight state")
    amps = _amplitudes_for(state, config, amps)
    if state.representation == DIAGONAL:
        rho = amps.probability(port) * state.rho
    else:
        a = amps.amplitude(port)
        rho = a[:, None] * state.rho * a.conj()[None, :]
        rho = 0.5 * (rho + rho.conj().T)
    diag = rho if rho.ndim == 1 else np.diagonal(rho).real
    weight = min(1.0, state.grid.integrate(diag))
    return MirrorState(state.grid, rho, weight, port + state.history, check=False)


@dataclass(eq=False)
class HistoryNode:
    """A node of the exact history tree.

    ``conditional_intensities`` are the exit probabilities of the next
    photon given ``history``; ``children`` maps the next outcome to its node.
    """

    history: str
    weight: float
    conditional_intensities: tuple[float, float]
    children: dict[str, HistoryNode] | None = None
    state: MirrorState | None = field(default=None, repr=False)

    def get(self, history: str) -> HistoryNode:
        """Look up a descendant by its full (newest-first) history label."""
        check_history(history)
        if not history.endswith(self.history):
            raise KeyError(history)
        node = self
        for port in reversed(history[: len(history) - len(self.history)]):
            if node.children is None:
                raise KeyError(history)
            node = node.children[port]
        return node

    def intensity(self, port: str) -> float:
        _check_port(port)
        return self.conditional_intensities[0 if port == "L" else 1]

    def iter_nodes(self):
        yield self
        if self.children:
            for port in PORTS:
                yield from self.children[port].iter_nodes()

    def level(self, depth: int) -> list[HistoryNode]:
        """All nodes exactly ``depth`` photons below this one."""
        return [n for n in self.iter_nodes() if len(n.history) - len(self.history) == depth]


def enumerate_histories(
    initial: MirrorState,
    config: InterferometerConfig,
    depth: int,
    max_depth: int = MAX_TREE_DEPTH,
    keep_states: bool = False,
) -> HistoryNode:
    """Exact binary tree of conditional weights down to ``depth`` photons."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if depth > max_depth:
        raise ValueError(f"depth {depth} exceeds the cap {max_depth} (2^{depth} histories)")
    amps = exit_amplitudes(config, initial.grid)

    def build(state: MirrorState, level: int) -> HistoryNode:
        if state.weight > 0:
            intensities = exit_probability(state, config, amps)
        else:
            intensities = (0.5, 0.5)
        node = HistoryNode(
            state.history, state.weight, intensities, state=state if keep_states else None
        )
        if level < depth:
            node.children = {}
            for port in PORTS:
                if state.weight > 0:
                    child = conditional_update(state, port, config, amps)
                else:
                    child = MirrorState(state.grid, np.zeros_like(state.rho), 0.0, port + state.history, check=False)
                node.children[port] = build(child, level + 1)
        return node

    return build(initial, 0)


@dataclass(frozen=True)
class MeasurementRecord:
    """Outcome of one simulated run.

    ``outcomes`` is a newest-first history label; ``probabilities`` lists
    ``(I_L, I_R)`` for each photon in detection order.
    """

    seed: int
    outcomes: str
    probabilities: tuple[tuple[float, float], ...]

    def __post_init__(self):
        check_history(self.outcomes)
        if len(self.outcomes) != len(self.probabilities):
            raise ValueError("outcomes and probabilities must have equal length")

    @property
    def chronological(self) -> str:
        return self.outcomes[::-1]


class BranchCache:
    """Memo of conditional states keyed by history, shared between trajectories.

    Trajectories that share a history prefix share the conditional state, so
    long sweeps only ever compute each tree node once.
    """

    def __init__(self, initial: MirrorState, config: InterferometerConfig):
        self.config = config
        self.amps = exit_amplitudes(config, initial.grid)
        self._root = initial
        self._nodes: dict[str, tuple[MirrorState, tuple[float, float]]] = {}
        self._lock = threading.Lock()

    def lookup(self, history: str) -> tuple[MirrorState, tuple[float, float]]:
        with self._lock:
            hit = self._nodes.get(history)
        if hit is not None:
            return hit
        if history == self._root.history:
            state = self._root
        else:
            parent, _ = self.lookup(history[1:])
            state = conditional_update(parent, history[0], self.config, self.amps)
        hit = (state, exit_probability(state, self.config, self.amps))
        with self._lock:
            self._nodes.setdefault(history, hit)
        return hit


def sample_trajectory(
    initial: MirrorState,
    config: InterferometerConfig,
    m: int,
    seed: int,
    cache: BranchCache | None = None,
) -> tuple[MeasurementRecord, MirrorState]:
    """Simulate ``m`` consecutive photons with a seeded PCG64 generator."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rng = np.random.Generator(np.random.PCG64(seed))
    if cache is None:
        cache = BranchCache(initial, config)
    state, probs = cache.lookup(initial.history)
    steps = []
    for u in rng.random(m):
        port = "L" if u < probs[0] else "R"
        steps.append(probs)
        state, probs = cache.lookup(port + state.history)
    return MeasurementRecord(seed, state.history[: len(state.history) - len(initial.history)], tuple(steps)), state


def trajectory_seed(master_seed: int, index: int) -> int:
    """Per-trajectory seed derived from the master seed and the trajectory index."""
    seq = np.random.SeedSequence([master_seed, index])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def sample_trajectories(
    initial: MirrorState,
    config: InterferometerConfig,
    m: int,
    n_trajectories: int,
    seed: int,
    threads: int = 1,
) -> list[MeasurementRecord]:
    """Run many seeded trajectories; output order and content ignore ``threads``."""
    if n_trajectories < 1:
        raise ValueError("n_trajectories must be >= 1")
    cache = BranchCache(initial, config)

    def run(chunk: range) -> list[MeasurementRecord]:
        return [
            sample_trajectory(initial, config, m, trajectory_seed(seed, i), cache)[0] for i in chunk
        ]

    workers = threads if threads > 0 else (os.cpu_count() or 1)
    if workers == 1:
        return run(range(n_trajectories))
    size = math.ceil(n_trajectories / (4 * workers))
    chunks = [range(i, min(i + size, n_trajectories)) for i in range(0, n_trajectories, size)]
    with ThreadPoolExecutor(workers) as pool:
        return [rec for part in pool.map(run, chunks) for rec in part]


def _momentum_grid(state: MirrorState) -> np.ndarray:
    return 2 * np.pi * np.fft.fftfreq(state.grid.n_points, d=state.grid.spacing)


def _moments(state: MirrorState) -> tuple[float, float, float, float]:
    """Position mean/variance and momentum mean/variance of a full state."""
    grid, diag = state.grid, state.diagonal()
    norm = grid.integrate(diag)
    x = grid.x
    mean_x = grid.integrate(x * diag) / norm
    var_x = grid.integrate((x - mean_x) ** 2 * diag) / norm
    p = _momentum_grid(state)
    rho_p = np.fft.fft(np.fft.ifft(state.rho, axis=1), axis=0)
    prob_p = np.diagonal(rho_p).real
    prob_p = prob_p / prob_p.sum()
    mean_p = float(p @ prob_p)
    var_p = float(((p - mean_p) ** 2) @ prob_p)
    return mean_x, var_x, mean_p, var_p


def free_evolution(state: MirrorState, time: float, mass: float = DEFAULT_MASS) -> MirrorState:
    """Evolve a full density matrix under the free-particle Hamiltonian ``p^2/(2 mass)``.

    Uses the periodic discrete Fourier transform, so the packet must stay
    at least four predicted widths away from the grid edges.
    """
    if state.representation != FULL:
        raise ValueError("free evolution needs the full density matrix representation")
    if not mass > 0:
        raise ValueError(f"mass must be positive, got {mass}")
    if time == 0:
        return state
    grid = state.grid
    mean_x, var_x, mean_p, var_p = _moments(state)
    drift = mean_x + mean_p * time / mass
    spread = math.sqrt(var_x) + math.sqrt(var_p) * abs(time) / mass
    if not grid.covers(drift - 4 * spread, drift + 4 * spread):
        raise ValueError(
            f"evolved packet (center {drift:.4g}, width {spread:.4g}) gets within 4 widths of the grid edge"
        )
    p = _momentum_grid(state)
    phase = np.exp(-0.5j * p * p * time / mass)

    def apply(m: np.ndarray) -> np.ndarray:
        return np.fft.ifft(phase[:, None] * np.fft.fft(m, axis=0), axis=0)

    half = apply(state.rho)
    rho = apply(half.conj().T).conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return MirrorState(grid, rho, state.weight, state.history, check=False)


def min_photon_delay(params: DelayParams) -> float:
    """Lower bound on the spacing between successive photons, in seconds."""
    return params.coherence_time + params.leg_distance * (params.bounces - 1) / params.light_speed
