"""Stochastic intracavity dynamics and input-output field records.

The cavity field is integrated in the frame rotating at half the pump-sum
frequency with a stochastic Heun scheme; vacuum (or thermal, for the loss
port) inputs enter as complex white Gaussian noise with
<xi(t) xi*(t')> = delta(t - t') / 2.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import TWOPI, thermal_coth
from .errors import ConfigInvalid, NumericalOverflow


@dataclass(frozen=True)
class SimSettings:
    """Integration settings.

    Attributes
    ----------
    dt : float
        Time step (s).
    duration : float
        Total integrated time (s), including the transient.
    n_trajectories : int
        Number of independent trajectories.
    seed : int
        Base seed; trajectory i uses the counter-based stream (seed, i).
    transient : float
        Initial span discarded from the output record (s).
    overflow_photons : float
        Abort threshold on |a|^2.
    """

    dt: float
    duration: float
    n_trajectories: int
    seed: int = 0
    transient: float = 0.0
    overflow_photons: float = 1e6

    def validate(self, params, layout=None):
        """Collect configuration violations; raise ConfigInvalid if any."""
        msgs = []
        if not self.dt > 0:
            msgs.append("dt must be positive")
        if self.transient < 0:
            msgs.append("transient must be non-negative")
        if not self.duration > self.transient:
            msgs.append("duration must exceed the transient")
        if self.n_trajectories < 1:
            msgs.append("n_trajectories must be at least 1")
        if self.dt > 0 and self.dt * params.total_rate >= 0.1:
            msgs.append("dt * (kappa + gamma) must be below 0.1")
        if self.transient * params.total_rate < 20.0 - 1e-9:
            msgs.append("transient must cover at least 20 cavity lifetimes")
        if layout is not None:
            span = self.duration - self.transient
            if span * layout.bandwidth < 100.0 - 1e-9:
                msgs.append(
                    "analysis span must cover at least 100 inverse bandwidths"
                )
        if msgs:
            raise ConfigInvalid(msgs)
        return self


@dataclass(frozen=True)
class FieldTrace:
    """Sampled output field of one trajectory.

    ``samples`` holds b_out = b_in - sqrt(kappa) a on the post-transient
    grid t0 + k dt; ``b_in`` is the matching input record.
    """

    samples: np.ndarray
    t0: float
    dt: float
    b_in: np.ndarray = None


def drift(a, t, params, pumps):
    """Deterministic part of the intracavity equation of motion."""
    pump = sum(
        tone.amplitude * np.exp(1j * (tone.phase - tone.detuning * t))
        for tone in pumps.tones
    )
    return (
        (-1j * params.delta_r - 0.5 * params.total_rate) * a
        - 1j * pump * np.conj(a)
        - 12j * params.kerr * (a.real**2 + a.imag**2) * a
    )


@njit(cache=True)
def _heun_kernel(n_steps, dt, delta_r, half_rate, kerr,
                 amps, dets, phases, sqrt_kappa, sqrt_gamma,
                 xi_b, xi_c, drive_amp, drive_det, bound_sq,
                 b_out, b_in_rec):
    a = 0.0 + 0.0j
    n_tones = amps.shape[0]
    for k in range(n_steps):
        t = k * dt
        dr0 = drive_amp * np.exp(-1j * drive_det * t)
        # the record carries midpoint timestamps, so sample the coherent
        # drive at the interval center (the noise is interval-integrated)
        b_in = xi_b[k] + drive_amp * np.exp(-1j * drive_det * (t + 0.5 * dt))
        b_in_rec[k] = b_in
        pump0 = 0.0 + 0.0j
        pump1 = 0.0 + 0.0j
        for d in range(n_tones):
            pump0 += amps[d] * np.exp(1j * (phases[d] - dets[d] * t))
            pump1 += amps[d] * np.exp(1j * (phases[d] - dets[d] * (t + dt)))
        lin = -1j * delta_r - half_rate
        f0 = (lin * a - 1j * pump0 * np.conj(a)
              - 12j * kerr * (a.real * a.real + a.imag * a.imag) * a
              + sqrt_kappa * dr0)
        dw = (sqrt_kappa * xi_b[k] + sqrt_gamma * xi_c[k]) * dt
        ap = a + f0 * dt + dw
        dr1 = drive_amp * np.exp(-1j * drive_det * (t + dt))
        f1 = (lin * ap - 1j * pump1 * np.conj(ap)
              - 12j * kerr * (ap.real * ap.real + ap.imag * ap.imag) * ap
              + sqrt_kappa * dr1)
        a_new = a + 0.5 * (f0 + f1) * dt + dw
        # trapezoid output record: keeps the half-step noise-field
        # correlation of the continuum input-output relation
        b_out[k] = b_in - sqrt_kappa * 0.5 * (a + a_new)
        a = a_new
        if a.real * a.real + a.imag * a.imag > bound_sq:
            return k
    return -1


def _trajectory_noise(settings, n_steps, index, thermal_scale):
    """Counter-based per-trajectory vacuum noise (xi_b, xi_c)."""
    key = np.array([settings.seed, index], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    scale = 0.5 / np.sqrt(settings.dt)
    raw = rng.standard_normal(4 * n_steps) * scale
    xi_b = raw[:n_steps] + 1j * raw[n_steps:2 * n_steps]
    xi_c = (raw[2 * n_steps:3 * n_steps] + 1j * raw[3 * n_steps:]) * thermal_scale
    return xi_b, xi_c


def integrate_trajectory(params, pumps, settings, index=0, drive=None,
                         noise=True):
    """Integrate one trajectory and return its post-transient FieldTrace.

    ``drive`` optionally adds a coherent input tone (amplitude, detuning);
    ``noise=False`` runs the deterministic equation (for calibration maps).
    """
    dt = settings.dt
    n_steps = int(round(settings.duration / dt))
    n_skip = int(round(settings.transient / dt))
    if n_skip >= n_steps:
        raise ConfigInvalid("transient leaves no samples to record")
    if noise:
        thermal_scale = np.sqrt(
            thermal_coth(params.omega_r / TWOPI, params.temperature)
        )
        xi_b, xi_c = _trajectory_noise(settings, n_steps, index, thermal_scale)
    else:
        xi_b = np.zeros(n_steps, dtype=complex)
        xi_c = np.zeros(n_steps, dtype=complex)
    drive_amp, drive_det = (0.0 + 0.0j, 0.0) if drive is None else (
        complex(drive[0]), float(drive[1])
    )
    amps = np.array([t.amplitude for t in pumps.tones], dtype=float)
    dets = np.array([t.detuning for t in pumps.tones], dtype=float)
    phases = np.array([t.phase for t in pumps.tones], dtype=float)
    b_out = np.empty(n_steps, dtype=complex)
    b_in_rec = np.empty(n_steps, dtype=complex)
    bad = _heun_kernel(
        n_steps, dt, params.delta_r, 0.5 * params.total_rate, params.kerr,
        amps, dets, phases, np.sqrt(params.kappa), np.sqrt(params.gamma),
        xi_b, xi_c, drive_amp, drive_det, settings.overflow_photons,
        b_out, b_in_rec,
    )
    if bad >= 0:
        raise NumericalOverflow(
            f"|a|^2 exceeded {settings.overflow_photons:g} at t = {bad * dt:.3e} s",
            trajectory_index=index,
        )
    # each recorded sample represents the step interval [t, t + dt]
    # (trapezoid field average, integrated noise), so it carries the
    # midpoint timestamp
    return FieldTrace(
        samples=b_out[n_skip:], t0=(n_skip + 0.5) * dt, dt=dt,
        b_in=b_in_rec[n_skip:],
    )


def iter_trajectories(params, pumps, settings, drive=None, noise=True):
    """Yield trajectories one at a time (memory-friendly ensemble runs)."""
    for i in range(settings.n_trajectories):
        yield integrate_trajectory(params, pumps, settings, index=i,
                                   drive=drive, noise=noise)


def run_ensemble(params, pumps, settings, drive=None, noise=True):
    """Integrate all trajectories and return the list of FieldTrace."""
    return list(iter_trajectories(params, pumps, settings, drive=drive,
                                  noise=noise))


def dump_traces(traces, path):
    """Write an ensemble to a binary .npz with a plain-text sidecar."""
    arr = np.stack([t.samples for t in traces])
    b_in = np.stack([t.b_in for t in traces])
    np.savez_compressed(path, b_out=arr, b_in=b_in,
                        t0=traces[0].t0, dt=traces[0].dt)


def load_traces(path):
    """Read back an ensemble written by dump_traces."""
    data = np.load(path)
    t0 = float(data["t0"])
    dt = float(data["dt"])
    return [
        FieldTrace(samples=data["b_out"][i], t0=t0, dt=dt,
                   b_in=data["b_in"][i])
        for i in range(data["b_out"].shape[0])
    ]
