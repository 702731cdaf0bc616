"""Covariance estimation, detector-unit scaling and background subtraction.

The raw estimator works in VacuumQuarter units on demodulated quadratures;
the calibrated experimental pipeline produces VacuumUnit matrices
V = 4 (V_on - V_off) + diag(coth(h f_i / 2 k_B T_i)).
"""

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.constants import h as PLANCK_H

from .core import CovarianceMatrix, Units, convert_units, symplectic_form, thermal_coth
from .errors import DimensionMismatch, InsufficientData, NonPositiveGain


def _sample_matrix(ensemble):
    """Stack the ensemble into rows of (x1, p1, ..., xN, pN)."""
    n_traj, n_modes, n_samp = ensemble.iq.shape
    rows = np.moveaxis(ensemble.iq, 1, 2).reshape(n_traj * n_samp, n_modes)
    out = np.empty((rows.shape[0], 2 * n_modes))
    out[:, 0::2] = rows.real
    out[:, 1::2] = rows.imag
    return out


def estimate_covariance(ensemble):
    """Unbiased sample covariance over all trajectories and samples."""
    rows = _sample_matrix(ensemble)
    if rows.shape[0] < 2:
        raise InsufficientData("need at least two samples")
    return CovarianceMatrix(np.cov(rows, rowvar=False, ddof=1),
                            Units.VACUUM_QUARTER)


def estimate_covariance_batched(ensemble, n_batches=10):
    """Covariance with element-wise standard errors from trajectory batches.

    Returns (CovarianceMatrix, se) where se[i, j] is the standard error of
    the mean of per-batch covariance estimates.
    """
    n_traj = ensemble.iq.shape[0]
    if n_traj < n_batches:
        raise InsufficientData(
            f"need at least {n_batches} trajectories for {n_batches} batches"
        )
    edges = np.linspace(0, n_traj, n_batches + 1).astype(int)
    covs = []
    for b in range(n_batches):
        part = ensemble.iq[edges[b]:edges[b + 1]]
        sub = type(ensemble)(
            iq=part, layout=ensemble.layout, dt_dec=ensemble.dt_dec,
            mode_phases=ensemble.mode_phases, bin_offsets=ensemble.bin_offsets,
        )
        covs.append(estimate_covariance(sub).data)
    covs = np.stack(covs)
    se = covs.std(axis=0, ddof=1) / np.sqrt(n_batches)
    return estimate_covariance(ensemble), se


def scale_quadratures(ensemble, gains, frequencies, resolution_bandwidth,
                      impedance=50.0):
    """Convert detector voltages to photon units.

    Divides mode i by sqrt(G_i Z0 h f_i df_i); gains are linear power
    gains, frequencies in Hz, resolution bandwidth in Hz.
    """
    n_modes = ensemble.iq.shape[1]
    gains = np.broadcast_to(np.asarray(gains, dtype=float), n_modes)
    freqs = np.broadcast_to(np.asarray(frequencies, dtype=float), n_modes)
    dfs = np.broadcast_to(np.asarray(resolution_bandwidth, dtype=float), n_modes)
    if np.any(gains <= 0):
        raise NonPositiveGain("all gains must be strictly positive")
    scale = np.sqrt(gains * impedance * PLANCK_H * freqs * dfs)
    iq = ensemble.iq / scale[None, :, None]
    return type(ensemble)(
        iq=iq, layout=ensemble.layout, dt_dec=ensemble.dt_dec,
        mode_phases=ensemble.mode_phases, bin_offsets=ensemble.bin_offsets,
    )


@dataclass(frozen=True)
class BackgroundPair:
    """Pump-on / pump-off raw covariance pair with per-mode context.

    frequencies are the absolute mode frequencies (Hz) and temperatures
    the matching noise temperatures (K) used for the vacuum offset.
    """

    v_on: CovarianceMatrix
    v_off: CovarianceMatrix
    frequencies: tuple
    temperatures: tuple

    def __post_init__(self):
        n = self.v_on.n_modes
        if self.v_off.n_modes != n:
            raise DimensionMismatch("on/off covariance sizes differ")
        for name in ("frequencies", "temperatures"):
            vals = getattr(self, name)
            if np.isscalar(vals):
                vals = (float(vals),) * n
            vals = tuple(float(v) for v in vals)
            if len(vals) != n:
                raise DimensionMismatch(f"need one {name[:-1]} per mode")
            object.__setattr__(self, name, vals)


def scale_and_subtract(pair):
    """Background-subtracted covariance in VacuumUnit normalization.

    V = 4 (V_on - V_off) + diag(coth(h f_i / 2 k_B T_i)); at zero
    temperature the added diagonal is exactly 1.
    """
    diff = 4.0 * (pair.v_on.data - pair.v_off.data)
    vac = np.repeat(
        [thermal_coth(f, t) for f, t in zip(pair.frequencies, pair.temperatures)],
        2,
    )
    return CovarianceMatrix(diff + np.diag(vac), Units.VACUUM_UNIT)


def physicality_violation(cov):
    """Most negative eigenvalue of V + i Omega (VacuumUnit convention).

    Non-negative spectra (up to noise) certify a physical state.
    """
    v = convert_units(cov, Units.VACUUM_UNIT).data
    omega = symplectic_form(cov.n_modes)
    return float(np.linalg.eigvalsh(v + 1j * omega).min())


def is_physical(cov, tol=0.0):
    """True if V + i Omega is positive semidefinite within tol."""
    return physicality_violation(cov) >= -abs(tol)


def export_covariance_csv(cov, path, metadata=None):
    """Write a covariance to CSV with a JSON sidecar (units, metadata)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in cov.data:
            writer.writerow([f"{v:.17g}" for v in row])
    side = {"units": cov.units.value, "n_modes": cov.n_modes}
    if metadata:
        side.update(metadata)
    with open(str(path) + ".meta.json", "w") as fh:
        json.dump(side, fh, indent=2, sort_keys=True)
        fh.write("\n")


def import_covariance_csv(path):
    """Read back a covariance written by export_covariance_csv."""
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    with open(str(path) + ".meta.json") as fh:
        side = json.load(fh)
    return CovarianceMatrix(np.array(rows), Units(side["units"]))
