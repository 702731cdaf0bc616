"""Scenario orchestration: config validation, pipelines and artifacts."""

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__, presets
from .core import Units, convert_units
from .covariance import (
    estimate_covariance_batched,
    export_covariance_csv,
    import_covariance_csv,
    physicality_violation,
)
from .covariance import estimate_covariance
from .demod import demodulate_ensemble, rotate_covariance, \
    symmetrize_covariance
from .entanglement import entanglement_report, optimize_gme, write_report
from .errors import ConfigInvalid, NotPositiveDefinite
from .graph import (
    analytic_output_covariance,
    build_interaction_matrix,
    extract_graph,
    graph_edge_list,
    graph_to_dot,
    invert_interaction,
    zassenhaus_counts,
)
from .langevin import iter_trajectories

_SCENARIOS = ("tripartite", "quadripartite")
_KNOWN_KEYS = {
    "scenario", "pump_amplitude", "pump_phases", "delta_phi",
    "n_trajectories", "seed", "dt", "n_batches", "two_vs_two",
}


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    pump_amplitude: float = 0.1
    pump_phases: tuple = None
    delta_phi: float = None
    n_trajectories: int = 200
    seed: int = 0
    dt: float = 1e-9
    n_batches: int = 10
    two_vs_two: bool = None

    def bundle(self):
        """Resolve (params, pumps, layout, settings) for this config."""
        params, pumps, layout, settings = presets.scenario(self.scenario)
        pumps = pumps.with_amplitudes(self.pump_amplitude * params.total_rate)
        if self.delta_phi is not None:
            pumps = presets.tripartite_pumps(
                a=self.pump_amplitude, delta_phi=self.delta_phi, params=params
            )
        if self.pump_phases is not None:
            pumps = pumps.with_phases(self.pump_phases)
        settings = type(settings)(
            dt=self.dt, duration=settings.duration,
            n_trajectories=self.n_trajectories, seed=self.seed,
            transient=settings.transient,
        )
        settings.validate(params, layout)
        return params, pumps, layout, settings

    def as_dict(self):
        return {
            "scenario": self.scenario,
            "pump_amplitude": self.pump_amplitude,
            "pump_phases": list(self.pump_phases) if self.pump_phases else None,
            "delta_phi": self.delta_phi,
            "n_trajectories": self.n_trajectories,
            "seed": self.seed,
            "dt": self.dt,
            "n_batches": self.n_batches,
            "two_vs_two": self.two_vs_two,
        }


def validate_config(raw):
    """Validate a config mapping; collect all messages before raising."""
    msgs = []
    if not isinstance(raw, dict):
        raise ConfigInvalid("config must be a mapping")
    unknown = sorted(set(raw) - _KNOWN_KEYS)
    for key in unknown:
        msgs.append(f"unknown key {key!r}")
    scenario = raw.get("scenario")
    if scenario not in _SCENARIOS:
        msgs.append(f"scenario must be one of {_SCENARIOS}")
    amp = raw.get("pump_amplitude", 0.1)
    if not isinstance(amp, (int, float)) or not 0 <= amp:
        msgs.append("pump_amplitude must be a non-negative number")
    elif amp >= 0.5:
        msgs.append("pump_amplitude must stay below the threshold A = 0.5")
    phases = raw.get("pump_phases")
    if phases is not None:
        n_tones = 2 if scenario == "tripartite" else 3
        if (not isinstance(phases, (list, tuple))
                or len(phases) != n_tones
                or not all(isinstance(p, (int, float)) for p in phases)):
            msgs.append(f"pump_phases must list {n_tones} numbers")
    delta_phi = raw.get("delta_phi")
    if delta_phi is not None:
        if scenario != "tripartite":
            msgs.append("delta_phi applies to the tripartite scenario only")
        elif not isinstance(delta_phi, (int, float)):
            msgs.append("delta_phi must be a number")
    n_traj = raw.get("n_trajectories", 200)
    if not isinstance(n_traj, int) or n_traj < 1:
        msgs.append("n_trajectories must be a positive integer")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        msgs.append("seed must be a non-negative integer")
    dt = raw.get("dt", 1e-9)
    if not isinstance(dt, (int, float)) or not dt > 0:
        msgs.append("dt must be a positive number")
    n_batches = raw.get("n_batches", 10)
    if not isinstance(n_batches, int) or n_batches < 2:
        msgs.append("n_batches must be an integer >= 2")
    elif isinstance(n_traj, int) and n_traj < n_batches:
        msgs.append("n_trajectories must be at least n_batches")
    two = raw.get("two_vs_two")
    if two is not None and not isinstance(two, bool):
        msgs.append("two_vs_two must be a boolean")
    if msgs:
        raise ConfigInvalid(msgs)
    return ExperimentConfig(
        scenario=scenario,
        pump_amplitude=float(amp),
        pump_phases=tuple(phases) if phases is not None else None,
        delta_phi=float(delta_phi) if delta_phi is not None else None,
        n_trajectories=n_traj,
        seed=seed,
        dt=float(dt),
        n_batches=n_batches,
        two_vs_two=two,
    )


def load_config(path):
    with open(path) as fh:
        return validate_config(yaml.safe_load(fh))


def simulate_quadratures(params, pumps, layout, settings):
    """Run the full ensemble and demodulate it, one trajectory at a time."""
    return demodulate_ensemble(
        iter_trajectories(params, pumps, settings), layout
    )


def measurement_frame(params, pumps, layout, n_points=33):
    """Per-mode rotation angles fixing the measurement phase frame.

    Demodulation phases are arbitrary up to per-mode rotations; this
    anchors them by symmetrizing the analytic output covariance at a
    chosen reference drive. Rotating measured covariances by the returned
    angles makes witness weights and phase sweeps comparable across runs.
    """
    v_out = analytic_output_covariance(params, pumps, layout,
                                       n_points=n_points)
    return symmetrize_covariance(v_out).angles


@dataclass(frozen=True)
class LandscapePoint:
    amplitude: float
    delta_phi: float
    s_value: float
    weights_h: tuple
    weights_g: tuple


def gme_landscape(amplitudes, delta_phis, n_trajectories=400, seed=23,
                  dt=1e-9, kerr=None, frame=None):
    """Tripartite witness landscape over pump amplitude and relative phase.

    Each grid point simulates the driven cavity (with the fitted Kerr
    constant so above-threshold drives stay bounded), rotates the
    estimated covariance into the calibrated measurement frame and
    minimizes the witness ratio over tied weights.
    """
    if kerr is None:
        kerr = presets.tripartite_kerr()
    layout = presets.tripartite_layout()
    params = replace(presets.tripartite_params(), kerr=kerr)
    if frame is None:
        ref = presets.tripartite_pumps(0.22, -2 * np.pi / 3)
        frame = measurement_frame(presets.tripartite_params(), ref, layout)
    points = []
    for dphi in delta_phis:
        for a in amplitudes:
            pumps = presets.tripartite_pumps(a, dphi, params)
            settings = presets.tripartite_settings(n_trajectories, seed, dt)
            ens = simulate_quadratures(params, pumps, layout, settings)
            cov = rotate_covariance(estimate_covariance(ens), frame)
            res = optimize_gme(cov)
            points.append(LandscapePoint(
                float(a), float(dphi), res.s_value,
                res.weights_h, res.weights_g,
            ))
    return points


def config_checksum(config):
    blob = json.dumps(config.as_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _write_manifest(out_dir, config, outputs):
    manifest = {
        "config": config.as_dict(),
        "config_sha256": config_checksum(config),
        "seed": config.seed,
        "version": __version__,
        "outputs": sorted(outputs),
    }
    path = Path(out_dir) / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def run_simulation(config, out_dir):
    """Simulate a scenario and write covariance + manifest artifacts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params, pumps, layout, settings = config.bundle()
    ens = simulate_quadratures(params, pumps, layout, settings)
    cov, se = estimate_covariance_batched(ens, n_batches=config.n_batches)
    # physicality gate: the estimate must be a physical state within noise
    violation = physicality_violation(cov)
    gate = -3.0 * 4.0 * float(se.max())
    if violation < gate:
        raise NotPositiveDefinite(
            f"estimated covariance is unphysical ({violation:.3e} < {gate:.3e})"
        )
    export_covariance_csv(
        cov, out_dir / "covariance.csv",
        metadata={
            "scenario": config.scenario,
            "standard_error_max": float(se.max()),
            "bin_offsets_hz": [float(x) for x in ens.bin_offsets]
            if ens.bin_offsets is not None else None,
        },
    )
    np.savetxt(out_dir / "standard_error.csv", se, delimiter=",", fmt="%.17g")
    files = ["covariance.csv", "covariance.csv.meta.json",
             "standard_error.csv", "manifest.json"]
    _write_manifest(out_dir, config, files)
    return cov, se


def run_analysis(cov_path, out_path, two_vs_two=None):
    """Entanglement report for a stored covariance matrix."""
    cov = import_covariance_csv(cov_path)
    report = entanglement_report(cov, include_two_vs_two=two_vs_two)
    write_report(report, out_path)
    return report


def run_graph(config, out_dir):
    """Analytic graph artifacts for a scenario configuration."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params, pumps, layout, _ = config.bundle()
    m = build_interaction_matrix(params, pumps, layout)
    m_inv = invert_interaction(m)
    graph = extract_graph(m_inv)
    (out_dir / "hgraph.edges").write_text(graph_edge_list(graph))
    (out_dir / "hgraph.dot").write_text(graph_to_dot(graph))
    v_out = analytic_output_covariance(params, pumps, layout)
    export_covariance_csv(v_out, out_dir / "analytic_covariance.csv",
                          metadata={"scenario": config.scenario})
    n_tms, n_bs = zassenhaus_counts(layout.n_modes)
    summary = {
        "n_modes": layout.n_modes,
        "tms_edges": sorted(list(graph.edge_set("TMS"))),
        "bs_edges": sorted(list(graph.edge_set("BS"))),
        "zassenhaus": {"n_tms": n_tms, "n_bs": n_bs},
    }
    with open(out_dir / "graph.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    files = ["hgraph.edges", "hgraph.dot", "analytic_covariance.csv",
             "analytic_covariance.csv.meta.json", "graph.json",
             "manifest.json"]
    _write_manifest(out_dir, config, files)
    return graph


def run_scenario(config, out_dir):
    """Full pipeline: simulate, estimate, analyze, export."""
    out_dir = Path(out_dir)
    cov, se = run_simulation(config, out_dir)
    two = config.two_vs_two
    report = entanglement_report(
        convert_units(cov, Units.VACUUM_UNIT), include_two_vs_two=two
    )
    write_report(report, out_dir / "report.json")
    return report
