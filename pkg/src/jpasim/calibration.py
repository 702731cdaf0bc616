"""Device calibration: resonance fits, gain maps, Kerr and noise budgets."""

from dataclasses import dataclass

import numpy as np
from scipy.constants import k as BOLTZMANN_K
from scipy.optimize import least_squares, minimize_scalar

from .core import TWOPI, CavityParams, PumpConfig, PumpTone
from .errors import DegenerateSweep, FitDiverged
from .langevin import SimSettings, integrate_trajectory


def reflection_response(omega, params):
    """Complex reflection coefficient of the single-port cavity."""
    omega = np.asarray(omega, dtype=float)
    denom = -1j * (omega - params.omega_r) + 0.5 * params.total_rate
    return 1.0 - params.kappa / denom


def cavity_phase_response(omega, params):
    """Phase of the reflection response (rad)."""
    return np.angle(reflection_response(omega, params))


@dataclass(frozen=True)
class ResonanceFit:
    omega_r: float
    kappa: float
    gamma: float
    stderr: tuple
    residual_norm: float

    def __iter__(self):
        return iter((self.omega_r, self.kappa, self.gamma))


def fit_resonance(sweep, responses=None):
    """Least-squares fit of (omega_r, kappa, gamma) to a reflection sweep.

    ``sweep`` is an iterable of (omega, complex response) pairs; the two
    arrays may also be passed separately.
    """
    if responses is None:
        pairs = list(sweep)
        omegas = np.asarray([p[0] for p in pairs], dtype=float)
        responses = np.asarray([p[1] for p in pairs], dtype=complex)
    else:
        omegas = np.asarray(sweep, dtype=float)
        responses = np.asarray(responses, dtype=complex)
    mags = np.abs(responses)
    if mags.max() - mags.min() < 1e-6 * max(mags.max(), 1e-300):
        raise FitDiverged("sweep shows no resonance feature")
    i0 = int(np.argmin(mags))
    w0 = omegas[i0]
    # depth |r| = |kappa - gamma| / (kappa + gamma) and the half-width give
    # starting values; assume the overcoupled branch
    span = omegas.max() - omegas.min()
    total0 = max(span / 10.0, 1e-6 * abs(w0) + 1.0)
    depth = mags[i0]
    kappa0 = 0.5 * total0 * (1.0 + depth)
    gamma0 = max(total0 - kappa0, 1e-3 * total0)

    def residuals(p):
        w_r, kap, gam = p
        if kap <= 0 or gam < 0:
            return np.full(2 * len(omegas), 1e6)
        model = 1.0 - kap / (-1j * (omegas - w_r) + 0.5 * (kap + gam))
        diff = model - responses
        return np.concatenate([diff.real, diff.imag])

    res = least_squares(residuals, x0=[w0, kappa0, gamma0], method="lm")
    if not res.success or res.x[1] <= 0:
        raise FitDiverged("resonance fit did not converge")
    # parameter covariance from the Jacobian at the optimum
    m, n = res.jac.shape
    dof = max(m - n, 1)
    try:
        cov = np.linalg.inv(res.jac.T @ res.jac) * 2 * res.cost / dof
        stderr = tuple(np.sqrt(np.abs(np.diag(cov))))
    except np.linalg.LinAlgError:
        stderr = (np.inf,) * 3
    return ResonanceFit(
        omega_r=float(res.x[0]), kappa=float(res.x[1]),
        gamma=float(max(res.x[2], 0.0)), stderr=stderr,
        residual_norm=float(np.sqrt(2 * res.cost)),
    )


def _default_gain_settings(params, dt=1e-9):
    return SimSettings(
        dt=dt, duration=12e-6, n_trajectories=1, seed=0, transient=2e-6,
    )


def _probe_response(params, pumps, settings, probe_amp, probe_det):
    """Steady-state complex output amplitude at the probe frequency."""
    trace = integrate_trajectory(
        params, pumps, settings, drive=(probe_amp, probe_det), noise=False
    )
    t = trace.t0 + trace.dt * np.arange(len(trace.samples))
    if abs(probe_det) > 0:
        period = TWOPI / abs(probe_det)
        n_keep = int((len(trace.samples) * trace.dt) / period) * int(
            round(period / trace.dt)
        )
        n_keep = max(n_keep, 1)
    else:
        n_keep = len(trace.samples)
    sel = slice(0, n_keep)
    return np.mean(trace.samples[sel] * np.exp(1j * probe_det * t[sel]))


def simulate_gain_map(params, probe_detunings, amplitudes, settings=None,
                      probe_amplitude=None, pump_phase=np.pi / 2):
    """Deterministic degenerate-pump gain map (dB).

    Rows index normalized pump amplitudes A = alpha / (kappa + gamma),
    columns probe detunings (rad/s); gain is relative to the pump-off
    response at the same detuning.
    """
    if settings is None:
        settings = _default_gain_settings(params)
    if probe_amplitude is None:
        probe_amplitude = 30.0 * np.sqrt(params.total_rate)
    ref = np.array([
        abs(_probe_response(params, PumpConfig(()), settings,
                            probe_amplitude, det))
        for det in probe_detunings
    ])
    rows = []
    for a in amplitudes:
        pumps = PumpConfig((PumpTone(0.0, a * params.total_rate, pump_phase),))
        row = [
            abs(_probe_response(params, pumps, settings, probe_amplitude, det))
            for det in probe_detunings
        ]
        rows.append(20.0 * np.log10(np.asarray(row) / ref))
    return np.asarray(rows)


def fit_kerr(measured_map, params, probe_detunings, amplitudes,
             bracket=(0.0, None), settings=None, probe_amplitude=None):
    """Recover the Kerr constant by matching simulated gain maps.

    Scans K over the bracket with a bounded scalar minimizer of the L2
    map mismatch; the probe settings must match those used to produce
    ``measured_map``.
    """
    measured_map = np.asarray(measured_map, dtype=float)
    lo, hi = bracket
    if hi is None:
        hi = 1e-6 * params.omega_r

    def mismatch(kerr):
        trial = CavityParams(
            omega_r=params.omega_r, kappa=params.kappa, gamma=params.gamma,
            kerr=kerr, delta_r=params.delta_r,
            temperature=params.temperature,
        )
        sim = simulate_gain_map(trial, probe_detunings, amplitudes,
                                settings=settings,
                                probe_amplitude=probe_amplitude)
        return float(np.linalg.norm(sim - measured_map))

    res = minimize_scalar(mismatch, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-3 * (hi - lo)})
    if not res.success:
        raise FitDiverged("Kerr fit did not converge")
    return float(res.x), float(res.fun)


@dataclass(frozen=True)
class NoiseSweepPoint:
    """One point of a hot/cold noise sweep.

    power_density is the measured output noise power spectral density
    (W/Hz) referenced to the detector; source_temperature in kelvin.
    """

    source_temperature: float
    power_density: float


@dataclass(frozen=True)
class FriisFit:
    gain_db: float
    t_preamp: float
    gain_db_err: float
    t_preamp_err: float


def friis_fit(points, f=None, min_temperature=None):
    """System gain and preamp noise temperature from a noise-power sweep.

    Fits P = k_B G (T + T_preamp) over points above ``min_temperature``
    (the linear Rayleigh-Jeans regime). When only the signal frequency
    ``f`` (Hz) is given, points with k_B T < 5 h f are dropped to stay
    clear of quantum corrections.
    """
    if min_temperature is None:
        min_temperature = 0.0
        if f is not None:
            from scipy.constants import h as PLANCK_H

            min_temperature = 5.0 * PLANCK_H * f / BOLTZMANN_K
    pts = [p for p in points if p.source_temperature >= min_temperature]
    temps = np.array([p.source_temperature for p in pts])
    powers = np.array([p.power_density for p in pts])
    if len(pts) < 2 or np.ptp(temps) <= 0:
        raise DegenerateSweep("need at least two distinct source temperatures")
    design = np.column_stack([temps, np.ones_like(temps)])
    coef, res, _, _ = np.linalg.lstsq(design, powers, rcond=None)
    slope, intercept = coef
    if slope <= 0:
        raise FitDiverged("fitted gain is not positive")
    gain = slope / BOLTZMANN_K
    t_pre = intercept / slope
    if len(pts) > 2 and res.size:
        sigma2 = res[0] / (len(pts) - 2)
        cov = sigma2 * np.linalg.inv(design.T @ design)
        s_err, i_err = np.sqrt(np.diag(cov))
        gain_db_err = 10.0 * s_err / (slope * np.log(10.0))
        t_err = t_pre * np.sqrt((i_err / max(abs(intercept), 1e-300)) ** 2
                                + (s_err / slope) ** 2)
    else:
        gain_db_err, t_err = 0.0, 0.0
    return FriisFit(
        gain_db=float(10.0 * np.log10(gain)),
        t_preamp=float(t_pre),
        gain_db_err=float(gain_db_err),
        t_preamp_err=float(t_err),
    )


def pump_phase_corrections(params, pumps):
    """Cavity-response phase corrections for each pump tone.

    Each pump at detuning Delta_d addresses the mode pair around the
    half-frequency Delta_d / 2. The correction to apply to the pump
    phase is minus half the reflection-phase offset there relative to
    resonance: a pump phase shift rotates the squeezed quadratures by
    half of itself, so half the offset compensates the full rotation
    picked up by the pair correlator.
    """
    ref = cavity_phase_response(params.omega_r, params)
    out = []
    for tone in pumps.tones:
        ph = cavity_phase_response(params.omega_r + 0.5 * tone.detuning, params)
        diff = np.angle(np.exp(1j * (ph - ref)))
        out.append(float(-0.5 * diff))
    return tuple(out)
