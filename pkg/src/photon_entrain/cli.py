"""Command-line front end.

Runs are described by a flat ``key = value`` file.  Interferometer and
state fields are top-level keys; grid, run, sweep and output settings use
dotted sections::

    wavelength = 0.1
    reflectivity = 1.0
    sigma = 1
    run.trajectories = 100000
    run.seed = 7
    output.format = csv

All lengths are multiples of sigma_0 = 1 (hbar = 1); only ``delay`` takes
SI inputs.  History labels are written newest-first: ``RL`` means an L
detection followed by an R detection.  Exit codes: 0 success, 1 usage or
configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from . import analysis
from .core import DIAGONAL, FULL, DelayParams, GridCapError, InterferometerConfig, check_history
from .dynamics import min_photon_delay, sample_trajectories
from .states import StateSpec, initial_state

FRINGE_HISTORIES = ("R", "L", "RR", "LL", "RRR", "LLL", "RL", "RLR")


class ConfigError(ValueError):
    pass


def _number(text: str) -> float:
    """Parse a float, also accepting multiples of pi such as ``2pi`` or ``0.5pi``."""
    t = text.strip().lower()
    if t.endswith("pi"):
        head = t[:-2].rstrip("*").strip()
        return (float(head) if head else 1.0) * math.pi
    return float(t)


def _axis(text: str) -> tuple[float, ...]:
    """Comma list of numbers, or ``start:stop:count`` (inclusive linspace)."""
    text = text.strip()
    if not text:
        return ()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:count, got {text!r}")
        count = int(parts[2])
        if count < 1:
            return ()
        return tuple(float(v) for v in np.linspace(_number(parts[0]), _number(parts[1]), count))
    return tuple(_number(v) for v in text.split(",") if v.strip())


def _labels(text: str) -> tuple[str, ...]:
    out = tuple(v.strip() for v in text.split(",") if v.strip())
    for label in out:
        check_history(label)
    return out


def _optional_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "none") else _number(text)


@dataclass(frozen=True)
class RunConfig:
    wavelength: float = 0.1
    phase: float = 0.0
    reflectivity: float = 1.0
    bounces: int = 1
    incidence: float = 0.0
    entry_port: str = "L0"
    kind: str = "GaussianPure"
    sigma: float = 1.0
    center: float = 0.0
    momentum: float = 0.0
    coherence_length: float | None = None
    width: float | None = None
    grid_points_per_fringe: int = 16
    grid_halfwidth: float | None = None
    grid_representation: str = DIAGONAL
    run_depth: int | None = None
    run_trajectories: int = 1000
    run_seed: int = 0
    run_histories: tuple[str, ...] | None = None
    sweep_wavelength: tuple[float, ...] = tuple(float(v) for v in np.linspace(0.5, 50.0, 20))
    sweep_phase: tuple[float, ...] = tuple(float(v) for v in np.linspace(0.0, 2 * np.pi, 20))
    sweep_reflectivity: tuple[float, ...] = (1.0, 0.9, 0.8, 0.7, 0.6)
    output_path: str | None = None
    output_format: str = "csv"

    def interferometer(self) -> InterferometerConfig:
        return InterferometerConfig(
            self.wavelength, self.phase, self.reflectivity, self.bounces, self.incidence, self.entry_port
        )

    def state_spec(self) -> StateSpec:
        return StateSpec(self.kind, self.sigma, self.center, self.momentum, self.coherence_length, self.width)

    def validate(self) -> RunConfig:
        self.interferometer()
        self.state_spec()
        if self.grid_points_per_fringe < 8:
            raise ValueError("grid.points_per_fringe must be >= 8")
        if self.grid_halfwidth is not None and not self.grid_halfwidth > 0:
            raise ValueError("grid.halfwidth must be positive")
        if self.grid_representation not in (DIAGONAL, FULL):
            raise ValueError("grid.representation must be 'diagonal' or 'full'")
        if self.run_depth is not None and self.run_depth < 1:
            raise ValueError("run.depth must be >= 1")
        if self.run_trajectories < 1:
            raise ValueError("run.trajectories must be >= 1")
        if self.run_seed < 0:
            raise ValueError("run.seed must be non-negative")
        if self.output_format not in ("csv", "json"):
            raise ValueError("output.format must be 'csv' or 'json'")
        for r in self.sweep_reflectivity:
            if not 0 <= r <= 1:
                raise ValueError(f"sweep.reflectivity value {r} outside [0, 1]")
        for lam in self.sweep_wavelength:
            if not lam > 0:
                raise ValueError(f"sweep.wavelength value {lam} must be positive")
        return self


_PARSERS = {
    "wavelength": _number,
    "phase": _number,
    "reflectivity": float,
    "bounces": int,
    "incidence": _number,
    "entry_port": str.strip,
    "kind": str.strip,
    "sigma": float,
    "center": float,
    "momentum": float,
    "coherence_length": _optional_float,
    "width": _optional_float,
    "grid.points_per_fringe": int,
    "grid.halfwidth": _optional_float,
    "grid.representation": str.strip,
    "run.depth": int,
    "run.trajectories": int,
    "run.seed": int,
    "run.histories": _labels,
    "sweep.wavelength": _axis,
    "sweep.phase": _axis,
    "sweep.reflectivity": _axis,
    "output.path": str.strip,
    "output.format": str.strip,
}
assert set(k.replace(".", "_") for k in _PARSERS) == {f.name for f in fields(RunConfig)}


def parse_config(text: str) -> RunConfig:
    """Parse a ``key = value`` config; unknown or repeated keys are errors."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key.replace(".", "_") in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key.replace(".", "_")] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    try:
        return RunConfig(**values).validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _defaults_help() -> str:
    cfg = RunConfig()
    lines = ["config keys and defaults (lengths in units of sigma_0 = 1, hbar = 1):"]
    for key in _PARSERS:
        value = getattr(cfg, key.replace(".", "_"))
        if isinstance(value, tuple) and len(value) > 6:
            value = f"{len(value)} values from {value[0]:g} to {value[-1]:g}"
        lines.append(f"  {key} = {value}")
    lines.append("run.depth defaults to 3 photons for simulate and 4 columns for entrain.")
    lines.append("History labels are newest-first: 'RL' is an L detection followed by R.")
    return "\n".join(lines)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(cfg: RunConfig, text: str) -> bool:
    """Write the data product; return True when it went to standard output."""
    if cfg.output_path:
        with open(cfg.output_path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
        return False
    sys.stdout.write(text)
    return True


def _summary_stream(data_on_stdout: bool):
    return sys.stderr if data_on_stdout else sys.stdout


def _state(cfg: RunConfig, config: InterferometerConfig, representation: str = DIAGONAL):
    return initial_state(
        cfg.state_spec(), config, cfg.grid_points_per_fringe, representation, cfg.grid_halfwidth
    )


def follow_bias(histories: list[str], depth: int) -> list[tuple[int, float, int]]:
    """Empirical probability that photon n+1 repeats n identical predecessors."""
    rows = []
    for n in range(1, depth):
        eligible = [h[::-1] for h in histories if len(set(h[::-1][:n])) == 1]
        follows = sum(1 for h in eligible if h[n] == h[0])
        rows.append((n, follows / len(eligible) if eligible else float("nan"), len(eligible)))
    return rows


def cmd_simulate(cfg: RunConfig, threads: int) -> int:
    config = cfg.interferometer()
    depth = cfg.run_depth or 3
    state = _state(cfg, config, cfg.grid_representation)
    records = sample_trajectories(state, config, depth, cfg.run_trajectories, cfg.run_seed, threads)
    bias = follow_bias([r.outcomes for r in records], depth)
    if cfg.output_format == "csv":
        header = ["seed", "history"] + [f"I_L_{i + 1}" for i in range(depth)]
        rows = ([r.seed, r.outcomes] + [p[0] for p in r.probabilities] for r in records)
        text = _csv_text(header, rows)
    else:
        doc = {
            "seed": cfg.run_seed,
            "trajectories": [
                {"seed": r.seed, "history": r.outcomes, "I_L": [p[0] for p in r.probabilities]}
                for r in records
            ],
            "follow_bias": [{"n_identical": n, "probability": p, "count": c} for n, p, c in bias],
        }
        text = json.dumps(doc) + "\n"
    out = _summary_stream(_emit(cfg, text))
    print(f"# follow bias over {len(records)} trajectories", file=out)
    out.write(_csv_text(["n_identical", "follow_probability", "count"], bias))
    return 0


def cmd_entrain(cfg: RunConfig, threads: int) -> int:
    depth = cfg.run_depth or 4
    rows = analysis.entrainment_curve(
        cfg.state_spec(),
        cfg.interferometer(),
        cfg.sweep_reflectivity,
        depth,
        points_per_fringe=cfg.grid_points_per_fringe,
        threads=threads,
    )
    columns = ["I_" + "L" * (n + 1) for n in range(depth)]
    if cfg.output_format == "csv":
        header = ["r"] + columns + ["phi_band_halfwidth"]
        text = _csv_text(header, ([r.reflectivity, *r.intensities, r.phi_band_halfwidth] for r in rows))
    else:
        doc = {
            "axes": {"r": [r.reflectivity for r in rows]},
            "values": {c: [r.intensities[i] for r in rows] for i, c in enumerate(columns)},
            "phi_band_halfwidth": [r.phi_band_halfwidth for r in rows],
        }
        text = json.dumps(doc) + "\n"
    _emit(cfg, text)
    return 0


def cmd_surface(cfg: RunConfig, threads: int) -> int:
    labels = cfg.run_histories or ("L", "LL", "LLL")
    surface = analysis.intensity_surface(
        cfg.state_spec(),
        cfg.interferometer(),
        cfg.sweep_wavelength,
        cfg.sweep_phase,
        labels,
        cfg.grid_points_per_fringe,
        threads,
    )
    if cfg.output_format == "csv":
        rows = (
            (float(lam), float(phi), label, float(surface[label][i, j]))
            for i, lam in enumerate(surface.lambda_axis)
            for j, phi in enumerate(surface.phi_axis)
            for label in labels
        )
        text = _csv_text(["lambda", "phi", "history", "intensity"], rows)
    else:
        doc = {
            "axes": {"lambda": surface.lambda_axis.tolist(), "phi": surface.phi_axis.tolist()},
            "values": {label: surface[label].tolist() for label in labels},
        }
        text = json.dumps(doc) + "\n"
    _emit(cfg, text)
    return 0


def cmd_fringes(cfg: RunConfig, threads: int) -> int:
    labels = cfg.run_histories or FRINGE_HISTORIES
    config = cfg.interferometer()
    reference = _state(cfg, config)
    states = analysis.conditioned_states(reference, config, labels)
    reports = {label: analysis.fringe_period(states[label], reference) for label in labels}
    report_rows = [
        (label, "" if rep.period is None else rep.period, rep.visibility, rep.zero_crossings, states[label].weight)
        for label, rep in reports.items()
    ]
    report_header = ["history", "period", "visibility", "zero_crossings", "weight"]
    x = reference.grid.x
    if cfg.output_format == "csv":
        header = ["x"] + [f"rho_{label}" for label in labels]
        diags = [states[label].diagonal() for label in labels]
        rows = ([float(x[i])] + [float(d[i]) for d in diags] for i in range(x.size))
        text = _csv_text(header, rows)
    else:
        doc = {
            "axes": {"x": x.tolist()},
            "values": {label: states[label].diagonal().tolist() for label in labels},
            "reports": [dict(zip(report_header, row)) for row in report_rows],
        }
        text = json.dumps(doc) + "\n"
    out = _summary_stream(_emit(cfg, text))
    out.write(_csv_text(report_header, report_rows))
    return 0


def format_seconds(value: float) -> str:
    """Four significant digits, exponent without zero padding (``2.001e-9``)."""
    mantissa, exponent = f"{value:.3e}".split("e")
    return f"{mantissa}e{int(exponent)}"


def cmd_delay(args) -> int:
    params = DelayParams(args.coherence_fs * 1e-15, args.distance_m, args.bounces)
    print(format_seconds(min_photon_delay(params)))
    return 0


COMMANDS = {
    "simulate": (cmd_simulate, "run seeded Monte Carlo trajectories, one CSV row per trajectory"),
    "entrain": (cmd_entrain, "follow probabilities versus mirror reflectivity"),
    "surface": (cmd_surface, "conditional intensities over (wavelength, phase): long-form table"),
    "fringes": (cmd_fringes, "conditioned mirror densities and measured fringe periods"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="key = value run description")
    common.add_argument("--output", help="output file (default: standard output)")
    common.add_argument("--format", choices=("csv", "json"), help="output format (default: csv)")
    common.add_argument("--seed", type=int, help="master seed, overrides run.seed")
    common.add_argument("--threads", type=int, default=1, help="worker threads, 0 = auto; never changes results")

    parser = argparse.ArgumentParser(
        prog="photon-entrain",
        description=__doc__.split("\n\n")[0],
        epilog=_defaults_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(
            name,
            parents=[common],
            help=help_text,
            description=help_text,
            epilog=_defaults_help(),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
    delay = sub.add_parser("delay", help="minimum spacing between photons, in seconds (SI inputs)")
    delay.add_argument("--coherence-fs", type=float, default=100.0, help="photon coherence time in fs (default 100)")
    delay.add_argument("--distance-m", type=float, required=True, help="distance between mirror interactions in m")
    delay.add_argument("--bounces", type=int, default=1, help="bounces per photon (default 1)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1

    if args.command == "delay":
        try:
            return cmd_delay(args)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1

    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
        overrides = {}
        if args.output:
            overrides["output_path"] = args.output
        if args.format:
            overrides["output_format"] = args.format
        if args.seed is not None:
            overrides["run_seed"] = args.seed
        cfg = replace(cfg, **overrides).validate()
        if args.threads < 0:
            raise ConfigError("--threads must be >= 0")
        if args.command == "entrain" and not cfg.sweep_reflectivity:
            raise ConfigError("sweep.reflectivity is empty")
        if args.command == "surface" and not (cfg.sweep_wavelength and cfg.sweep_phase):
            raise ConfigError("sweep.wavelength and sweep.phase must be non-empty")
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        return COMMANDS[args.command][0](cfg, args.threads)
    except (GridCapError, ValueError, RuntimeError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
