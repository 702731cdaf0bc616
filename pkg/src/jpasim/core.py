"""Physical parameters, unit conventions and mode-layout geometry.

Conventions used throughout the package:

* angular frequencies (rad/s) internally; Hz appears only in configuration
  inputs and report outputs,
* quadratures x = (a + a†)/2, p = (a − a†)/2i, ordered (x1, p1, ..., xN, pN),
* covariance matrices carry an explicit unit tag: ``VacuumQuarter`` means the
  vacuum diagonal is 1/4, ``VacuumUnit`` means it is 1.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.constants import h as PLANCK_H, k as BOLTZMANN_K

from .errors import ConfigInvalid, DimensionMismatch, NotPositiveDefinite

TWOPI = 2.0 * np.pi


def wrap_phase(phi):
    """Wrap an angle to the interval (-pi, pi]."""
    return float(phi - TWOPI * np.ceil((phi - np.pi) / TWOPI))


@dataclass(frozen=True)
class CavityParams:
    """Parametric cavity parameters (all rates in rad/s).

    Attributes
    ----------
    omega_r : float
        Resonator angular frequency.
    kappa : float
        External coupling rate.
    gamma : float
        Internal loss rate.
    kerr : float
        Kerr constant K; the nonlinear drift term is -12iK|a|^2 a.
    delta_r : float
        Rotating-frame detuning omega_r - omega_sigma/2.
    temperature : float
        Bath temperature in kelvin (applies to the internal loss port).
    """

    omega_r: float
    kappa: float
    gamma: float = 0.0
    kerr: float = 0.0
    delta_r: float = 0.0
    temperature: float = 0.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ConfigInvalid("kappa must be positive")
        if self.gamma < 0:
            raise ConfigInvalid("gamma must be non-negative")
        if self.temperature < 0:
            raise ConfigInvalid("temperature must be non-negative")

    @property
    def total_rate(self):
        return self.kappa + self.gamma

    def with_pump_frame(self, omega_sigma):
        """Return a copy with delta_r recomputed for the given pump frame."""
        return CavityParams(
            omega_r=self.omega_r,
            kappa=self.kappa,
            gamma=self.gamma,
            kerr=self.kerr,
            delta_r=self.omega_r - 0.5 * omega_sigma,
            temperature=self.temperature,
        )


@dataclass(frozen=True)
class PumpTone:
    """Single pump tone: detuning relative to omega_sigma, amplitude, phase."""

    detuning: float
    amplitude: float
    phase: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ConfigInvalid("pump amplitude must be non-negative")
        if not np.isfinite(self.phase):
            raise ConfigInvalid("pump phase must be finite")
        object.__setattr__(self, "phase", wrap_phase(self.phase))


@dataclass(frozen=True)
class PumpConfig:
    """Ordered set of pump tones in the frame rotating at omega_sigma/2.

    Tone detunings are re-centered on construction so that their sum is
    exactly zero (they are defined relative to their own mean).
    """

    tones: tuple
    omega_sigma: float = 0.0

    def __post_init__(self):
        tones = tuple(self.tones)
        if tones:
            mean = sum(t.detuning for t in tones) / len(tones)
            if mean != 0.0:
                tones = tuple(
                    PumpTone(t.detuning - mean, t.amplitude, t.phase)
                    for t in tones
                )
            dets = [t.detuning for t in tones]
            if len(set(dets)) != len(dets):
                raise ConfigInvalid("pump tone detunings must be pairwise distinct")
        object.__setattr__(self, "tones", tones)

    def __len__(self):
        return len(self.tones)

    def normalized_amplitudes(self, params):
        """Per-tone A = alpha/(kappa+gamma)."""
        return tuple(t.amplitude / params.total_rate for t in self.tones)

    def with_phases(self, phases):
        if len(phases) != len(self.tones):
            raise DimensionMismatch("one phase per tone required")
        return PumpConfig(
            tuple(
                PumpTone(t.detuning, t.amplitude, p)
                for t, p in zip(self.tones, phases)
            ),
            self.omega_sigma,
        )

    def with_amplitudes(self, amplitudes):
        if np.isscalar(amplitudes):
            amplitudes = [amplitudes] * len(self.tones)
        if len(amplitudes) != len(self.tones):
            raise DimensionMismatch("one amplitude per tone required")
        return PumpConfig(
            tuple(
                PumpTone(t.detuning, a, t.phase)
                for t, a in zip(self.tones, amplitudes)
            ),
            self.omega_sigma,
        )


@dataclass(frozen=True)
class ModeLayout:
    """Spectral-mode geometry inside the cavity linewidth.

    Centers are offsets (Hz) of the mode band centers in the rotating frame;
    bandwidth and guard are per-mode quantities in Hz.
    """

    n_modes: int
    centers: tuple
    bandwidth: float
    guard: float = 0.0

    def __post_init__(self):
        centers = tuple(float(c) for c in self.centers)
        object.__setattr__(self, "centers", centers)
        if self.n_modes != len(centers):
            raise ConfigInvalid("n_modes must equal len(centers)")
        if not self.bandwidth > 0:
            raise ConfigInvalid("bandwidth must be positive")
        if self.guard < 0:
            raise ConfigInvalid("guard must be non-negative")
        spacing = np.diff(sorted(centers))
        if len(spacing) and spacing.min() < self.bandwidth + self.guard - 1e-9:
            raise ConfigInvalid(
                "mode spacing must be at least bandwidth + guard"
            )

    @classmethod
    def equidistant(cls, n_modes, spacing, bandwidth):
        """Symmetric equidistant layout; guard absorbs spacing - bandwidth."""
        centers = tuple(
            (i - 0.5 * (n_modes - 1)) * spacing for i in range(n_modes)
        )
        return cls(n_modes, centers, bandwidth, spacing - bandwidth)

    @property
    def centers_rad(self):
        """Mode center offsets in rad/s."""
        return tuple(TWOPI * c for c in self.centers)


class Units(Enum):
    """Covariance normalization: vacuum diagonal of 1/4 or of 1."""

    VACUUM_QUARTER = "vacuum_quarter"
    VACUUM_UNIT = "vacuum_unit"


@dataclass(frozen=True)
class CovarianceMatrix:
    """Real symmetric 2N x 2N covariance in (x1, p1, ..., xN, pN) ordering."""

    data: np.ndarray
    units: Units

    def __post_init__(self):
        m = np.asarray(self.data, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise DimensionMismatch("covariance must be square 2N x 2N")
        scale = np.abs(m).max() or 1.0
        if np.abs(m - m.T).max() > 1e-12 * scale:
            raise DimensionMismatch("covariance must be symmetric to 1e-12")
        m = 0.5 * (m + m.T)
        eigs = np.linalg.eigvalsh(m)
        if eigs.min() < -1e-9 * np.trace(m):
            raise NotPositiveDefinite(
                f"covariance has eigenvalue {eigs.min():.3e}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "data", m)

    @property
    def n_modes(self):
        return self.data.shape[0] // 2


def convert_units(cov, target):
    """Convert a covariance matrix between the two vacuum normalizations."""
    if cov.units == target:
        return cov
    factor = 4.0 if target == Units.VACUUM_UNIT else 0.25
    return CovarianceMatrix(cov.data * factor, target)


def thermal_coth(frequency, temperature):
    """Thermal occupation factor coth(hf / 2kT); 1 at zero temperature."""
    if temperature <= 0:
        return 1.0
    x = PLANCK_H * frequency / (2.0 * BOLTZMANN_K * temperature)
    return float(1.0 / np.tanh(x))


def symplectic_form(n_modes):
    """Block-diagonal symplectic form with 2x2 blocks [[0, 1], [-1, 0]]."""
    if n_modes < 1:
        raise ConfigInvalid("n_modes must be at least 1")
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for i in range(n_modes):
        omega[2 * i, 2 * i + 1] = 1.0
        omega[2 * i + 1, 2 * i] = -1.0
    return omega
