"""Preset device and experiment configurations.

Two standard scenarios: a tripartite run (two pumps, three spectral modes)
and a quadripartite run (three pumps, four spectral modes). Analysis spans
are chosen so every mode center and band edge falls exactly on the FFT bin
grid and the transient covers an integer number of pump-beat cycles.
"""

import numpy as np

from .core import CavityParams, ModeLayout, PumpConfig, PumpTone, TWOPI
from .langevin import SimSettings

MHZ = 1e6


def tripartite_params():
    """Cavity parameters for the three-mode scenario."""
    return CavityParams(
        omega_r=TWOPI * 6.024e9,
        kappa=TWOPI * 4.44 * MHZ,
        gamma=TWOPI * 2.30 * MHZ,
        temperature=0.020,
    )


def tripartite_layout():
    """Modes at -2, 0, +2 MHz; 1.9 MHz bands with 0.1 MHz guards."""
    return ModeLayout(3, (-2 * MHZ, 0.0, 2 * MHZ), 1.9 * MHZ, 0.1 * MHZ)


def tripartite_pumps(a=0.1, delta_phi=0.0, params=None):
    """Two pumps at -/+ 2 MHz around the rotating frame.

    ``a`` is the normalized amplitude alpha / (kappa + gamma), shared by
    both tones; ``delta_phi`` is the relative phase of the lower pump,
    phi_1 = pi/2 + delta_phi, phi_2 = pi/2.
    """
    if params is None:
        params = tripartite_params()
    alpha = a * params.total_rate
    return PumpConfig((
        PumpTone(-TWOPI * 2 * MHZ, alpha, np.pi / 2 + delta_phi),
        PumpTone(TWOPI * 2 * MHZ, alpha, np.pi / 2),
    ))


def tripartite_kerr():
    """Fitted Kerr constant (rad/s) for phase-landscape sweeps.

    The linear model diverges once the normalized amplitude crosses the
    tripartite threshold 1 / (2 sqrt(2)); this small negative Kerr keeps
    above-threshold drives bounded while leaving the below-threshold
    covariance essentially unchanged.
    """
    return -TWOPI * 500.0


def tripartite_settings(n_trajectories=200, seed=0, dt=1e-9):
    """61 us runs; 60 us aligned analysis window after a 1 us transient."""
    return SimSettings(
        dt=dt,
        duration=61e-6,
        n_trajectories=n_trajectories,
        seed=seed,
        transient=1e-6,
    )


def quadripartite_params():
    """Cavity parameters for the four-mode scenario."""
    return CavityParams(
        omega_r=TWOPI * 5.978e9,
        kappa=TWOPI * 4.44 * MHZ,
        gamma=TWOPI * 2.30 * MHZ,
        temperature=0.020,
    )


def quadripartite_layout():
    """Modes at +/-0.25, +/-0.75 MHz; 0.4 MHz bands, 0.1 MHz guards."""
    return ModeLayout(
        4,
        (-0.75 * MHZ, -0.25 * MHZ, 0.25 * MHZ, 0.75 * MHZ),
        0.4 * MHZ,
        0.1 * MHZ,
    )


def quadripartite_pumps(a=0.1, phases=None, params=None):
    """Three pumps at -1, 0, +1 MHz; default phases all pi/2."""
    if params is None:
        params = quadripartite_params()
    if phases is None:
        phases = (np.pi / 2, np.pi / 2, np.pi / 2)
    alpha = a * params.total_rate
    return PumpConfig(tuple(
        PumpTone(TWOPI * det * MHZ, alpha, ph)
        for det, ph in zip((-1.0, 0.0, 1.0), phases)
    ))


def quadripartite_settings(n_trajectories=200, seed=0, dt=1e-9):
    """261 us runs; 260 us aligned analysis window after a 1 us transient."""
    return SimSettings(
        dt=dt,
        duration=261e-6,
        n_trajectories=n_trajectories,
        seed=seed,
        transient=1e-6,
    )


def scenario(name):
    """Bundle (params, pumps, layout, settings) for a named preset."""
    if name == "tripartite":
        params = tripartite_params()
        return params, tripartite_pumps(params=params), tripartite_layout(), \
            tripartite_settings()
    if name == "quadripartite":
        params = quadripartite_params()
        return params, quadripartite_pumps(params=params), \
            quadripartite_layout(), quadripartite_settings()
    raise KeyError(f"unknown scenario {name!r}")
