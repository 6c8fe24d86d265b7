"""Figure-level observables: intensity surfaces, fringes, washout and entrainment."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .core import DIAGONAL, InterferometerConfig, MirrorState, check_history
from .dynamics import conditional_update, enumerate_histories, exit_probability
from .optics import exit_amplitudes
from .states import StateSpec, initial_state

# |sinc| of a top hat falls to 1/2 here; fixes the form-factor calibration.
_TOP_HAT_HALF_VISIBILITY = brentq(lambda y: math.sin(y) / y - 0.5, 1.0, 3.0)
FORM_FACTOR_CALIBRATION = math.pi / _TOP_HAT_HALF_VISIBILITY


def _map(fn, items, threads: int):
    if threads == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(threads if threads > 0 else None) as pool:
        return list(pool.map(fn, items))


def complement(label: str) -> str:
    """Label of the opposite port for the same history, e.g. ``LRL -> RRL``."""
    check_history(label)
    if not label:
        raise ValueError("empty intensity label")
    return ("R" if label[0] == "L" else "L") + label[1:]


@dataclass(eq=False)
class IntensitySurface:
    """Conditional intensities on a (wavelength, phase) grid.

    A label ``"L" + H`` holds ``I_{L,H}``, the probability that the next
    photon exits at L after history ``H``.  Arrays are indexed
    ``[wavelength, phase]``.
    """

    lambda_axis: np.ndarray
    phi_axis: np.ndarray
    values: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, label: str) -> np.ndarray:
        return self.values[label]


@dataclass(frozen=True)
class FringeReport:
    period: float | None
    visibility: float
    zero_crossings: int


@dataclass(frozen=True)
class EntrainmentRow:
    """Follow probabilities at one reflectivity.

    ``intensities[n]`` is the probability of an L detection after ``n``
    L detections in a row, evaluated at the template phase.
    """

    reflectivity: float
    intensities: tuple[float, ...]
    phi_band_halfwidth: float


def visibility(samples) -> float:
    """Contrast ``(I_max - I_min) / (I_max + I_min)`` of an intensity-vs-phase scan.

    ``samples`` is a sequence of ``(phi, I)`` pairs or a plain sequence of
    intensities.
    """
    arr = np.asarray(samples, dtype=float)
    values = arr[:, 1] if arr.ndim == 2 else arr
    if values.size < 8:
        raise ValueError(f"need at least 8 phase samples, got {values.size}")
    hi, lo = float(values.max()), float(values.min())
    if hi + lo <= 0:
        raise ValueError("visibility undefined for an all-zero scan")
    return (hi - lo) / (hi + lo)


def default_phases(n: int = 16) -> np.ndarray:
    return np.linspace(0.0, 2 * np.pi, n, endpoint=False)


def _labels_depth(labels) -> int:
    for label in labels:
        check_history(label)
        if not label:
            raise ValueError("empty intensity label")
    return max(1, max(len(label) for label in labels) - 1)


def _conditional_intensities(state: MirrorState, config: InterferometerConfig, labels, depth) -> dict:
    tree = enumerate_histories(state, config, depth)
    out = {}
    for label in labels:
        node = tree.get(label[1:] + state.history)
        out[label] = node.intensity(label[0])
    return out


def intensity_surface(
    spec: StateSpec,
    template: InterferometerConfig,
    wavelengths,
    phases,
    histories=("L",),
    points_per_fringe: int = 16,
    threads: int = 1,
) -> IntensitySurface:
    """Tabulate conditional intensities over wavelength and phase."""
    lambdas = np.asarray(wavelengths, dtype=float)
    phis = np.asarray(phases, dtype=float)
    if lambdas.size == 0 or phis.size == 0:
        raise ValueError("wavelength and phase ranges must be non-empty")
    labels = list(dict.fromkeys(histories))
    depth = _labels_depth(labels)

    def row(lam: float) -> dict[str, list[float]]:
        base = replace(template, wavelength=float(lam))
        state = initial_state(spec, base, points_per_fringe, DIAGONAL)
        cells = {label: [] for label in labels}
        for phi in phis:
            got = _conditional_intensities(state, replace(base, phase=float(phi)), labels, depth)
            for label in labels:
                cells[label].append(got[label])
        return cells

    rows = _map(row, list(lambdas), threads)
    values = {label: np.array([r[label] for r in rows]) for label in labels}
    return IntensitySurface(lambdas, phis, values)


def phase_scan(
    state: MirrorState, template: InterferometerConfig, phases=None, port: str = "L"
) -> np.ndarray:
    """First-photon exit probability at ``port`` for each phase setting."""
    phases = default_phases() if phases is None else phases
    idx = 0 if port == "L" else 1
    return np.array(
        [exit_probability(state, replace(template, phase=float(phi)))[idx] for phi in phases]
    )


def fringe_period(state: MirrorState, reference: MirrorState, floor: float = 1e-6) -> FringeReport:
    """Measure the imprinted fringe period of a conditioned state.

    The ratio ``rho_H(x,x) / rho_0(x,x)`` is demeaned where the reference
    exceeds ``floor`` times its peak; the period is twice the mean spacing
    of its zero crossings.  With fewer than four crossings only the
    visibility is reported.
    """
    if state.grid != reference.grid:
        raise ValueError("state and reference live on different grids")
    ref = reference.diagonal()
    mask = ref > floor * ref.max()
    ratio = np.zeros_like(ref)
    ratio[mask] = state.diagonal()[mask] / ref[mask]
    vals = ratio[mask]
    hi, lo = vals.max(), vals.min()
    vis = float((hi - lo) / (hi + lo)) if hi + lo > 0 else 0.0

    dev = ratio - vals.mean()
    dev[np.abs(dev) <= 1e-12 * max(abs(hi), 1e-300)] = 0.0
    x = state.grid.x
    pair = mask[:-1] & mask[1:] & (dev[:-1] * dev[1:] < 0)
    i = np.nonzero(pair)[0]
    crossings = x[i] - dev[i] * (x[i + 1] - x[i]) / (dev[i + 1] - dev[i])
    count = int(crossings.size)
    if count < 4:
        return FringeReport(None, vis, count)
    spacing = (crossings[-1] - crossings[0]) / (count - 1)
    return FringeReport(float(2 * spacing), vis, count)


def _visibility_at(
    spec: StateSpec, template: InterferometerConfig, lam: float, n_phase: int, points_per_fringe: int
) -> float:
    config = replace(template, wavelength=lam)
    state = initial_state(spec, config, points_per_fringe, DIAGONAL)
    return visibility(phase_scan(state, config, default_phases(n_phase)))


def washout_threshold(
    spec: StateSpec,
    template: InterferometerConfig,
    bounces: int,
    threshold: float = 0.5,
    search=(0.25, 400.0),
    rel_tol: float = 0.01,
    n_phase: int = 16,
    points_per_fringe: int = 16,
) -> tuple[float, float]:
    """Smallest wavelength at which the first-photon visibility reaches ``threshold``.

    Returns ``(lambda_star / scale, form_factor)``, where ``scale`` is sigma
    for Gaussians and the width for a top hat.  ``search`` is given in units
    of ``scale * bounces``.  The form factor is normalized so a top hat
    gives 1.
    """
    config = replace(template, bounces=bounces)
    unit = spec.scale * bounces

    def vis(lam: float) -> float:
        return _visibility_at(spec, config, lam, n_phase, points_per_fringe)

    # coarse geometric scan for the first upward crossing, then bisect
    ladder = np.geomspace(search[0] * unit, search[1] * unit, 48)
    lo = hi = None
    prev = ladder[0]
    if vis(prev) >= threshold:
        raise ValueError("visibility already exceeds the threshold at the bottom of the search range")
    for lam in ladder[1:]:
        if vis(lam) >= threshold:
            lo, hi = prev, lam
            break
        prev = lam
    if lo is None:
        raise ValueError("no visibility crossing inside the search range")
    while hi / lo - 1 > rel_tol:
        mid = math.sqrt(lo * hi)
        if vis(mid) >= threshold:
            hi = mid
        else:
            lo = mid
    lam_star = math.sqrt(lo * hi)
    form_factor = lam_star / (spec.scale * 4 * bounces * FORM_FACTOR_CALIBRATION)
    return lam_star / spec.scale, form_factor


def entrainment_curve(
    spec: StateSpec,
    template: InterferometerConfig,
    reflectivities,
    depth: int = 4,
    n_phase: int = 16,
    points_per_fringe: int = 16,
    threads: int = 1,
) -> list[EntrainmentRow]:
    """Follow probabilities ``I_L, I_{L,L}, I_{L,LL}, ...`` versus reflectivity.

    The band half-width is half the spread of the conditioned follow
    probabilities (``I_{L,L}`` onward) over a phase scan.
    """
    rs = [float(r) for r in reflectivities]
    if not rs:
        raise ValueError("reflectivity range must be non-empty")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if template.wavelength / spec.scale > 0.2:
        raise ValueError("entrainment curves need wavelength / sigma <= 0.2")
    labels = ["L" * (n + 1) for n in range(depth)]
    tree_depth = max(1, depth - 1)
    state = initial_state(spec, template, points_per_fringe, DIAGONAL)

    def one(r: float) -> EntrainmentRow:
        config = replace(template, reflectivity=r)
        got = _conditional_intensities(state, config, labels, tree_depth)
        scan = []
        for phi in default_phases(n_phase):
            alt = _conditional_intensities(state, replace(config, phase=float(phi)), labels, tree_depth)
            scan.append([alt[label] for label in labels[1:]] or [alt[labels[0]]])
        scan = np.array(scan)
        band = float(np.max(scan.max(axis=0) - scan.min(axis=0)) / 2)
        return EntrainmentRow(r, tuple(got[label] for label in labels), band)

    return _map(one, rs, threads)


def conditioned_states(state: MirrorState, config: InterferometerConfig, histories) -> dict:
    """Conditional states ``rho_H`` for each requested (newest-first) history."""
    amps = exit_amplitudes(config, state.grid)
    out = {}
    for label in histories:
        check_history(label)
        current = state
        for port in reversed(label):
            current = conditional_update(current, port, config, amps)
        out[label] = current
    return out
