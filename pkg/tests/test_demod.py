"""FFT-band demodulation: normalization, phase referencing, rotations."""

import numpy as np
import pytest

from jpasim import presets
from jpasim.core import TWOPI, ModeLayout, Units, CovarianceMatrix
from jpasim.covariance import estimate_covariance
from jpasim.demod import (
    band_leakage,
    demodulate,
    demodulate_ensemble,
    export_quadratures_csv,
    import_quadratures_csv,
    rotate_covariance,
    rotate_mode_phase,
    rotation_matrix,
    symmetrize_covariance,
)
from jpasim.errors import BandwidthExceeded, DegenerateSubspace, \
    DimensionMismatch
from jpasim.graph import analytic_covariance
from jpasim.langevin import FieldTrace

LAY3 = presets.tripartite_layout()
DT = 1e-9
N = 60000


def make_trace(samples, t0=0.5 * DT, dt=DT):
    return FieldTrace(samples=np.asarray(samples, dtype=complex), t0=t0, dt=dt)


def tone_trace(center, amp, phase, t0=0.5 * DT):
    t = t0 + DT * np.arange(N)
    return make_trace(amp * np.exp(1j * (phase - TWOPI * center * t)), t0=t0)


def noise_traces(rng, n_traj):
    scale = 0.5 / np.sqrt(DT)
    for _ in range(n_traj):
        raw = rng.standard_normal((2, N))
        yield make_trace(scale * (raw[0] + 1j * raw[1]))


def test_tone_envelope_amplitude_and_phase():
    # a coherent tone at a mode center appears as a flat complex envelope
    # amp e^{i phase} / sqrt(bw_eff), independent of the record offset t0
    amp, phase = 3.0, 0.7
    for t0 in (0.5 * DT, 17.5 * DT):
        iq, offsets = demodulate(tone_trace(2e6, amp, phase, t0=t0), LAY3)
        df = 1.0 / (N * DT)
        bw_eff = len(offsets) * df
        expect = amp * np.exp(1j * phase) / np.sqrt(bw_eff)
        np.testing.assert_allclose(iq[2], expect, rtol=1e-9)
        # no leakage into the other modes
        assert np.abs(iq[:2]).max() < 1e-9 * abs(expect)


def test_bin_offsets_symmetric_in_band():
    _, offsets = demodulate(tone_trace(0.0, 1.0, 0.0), LAY3)
    assert offsets is not None
    assert np.abs(offsets).max() < 0.5 * LAY3.bandwidth
    np.testing.assert_allclose(np.sort(offsets), np.sort(-offsets),
                               atol=1e-6)


def test_vacuum_quarter_normalization():
    rng = np.random.default_rng(11)
    ens = demodulate_ensemble(noise_traces(rng, 50), LAY3)
    var_i = ens.i_data(1).var()
    var_q = ens.q_data(1).var()
    assert np.isclose(var_i, 0.25, rtol=0.05)
    assert np.isclose(var_q, 0.25, rtol=0.05)
    # vacuum has no anomalous correlation
    anomalous = np.mean(ens.iq[:, 1, :] ** 2)
    assert abs(anomalous) < 0.05


def test_band_leakage_is_numerical():
    rng = np.random.default_rng(3)
    trace = next(noise_traces(rng, 1))
    assert band_leakage(trace, LAY3) < 1e-12


def test_bandwidth_exceeded():
    wide = ModeLayout(2, (-30e6, 30e6), 10e6)
    with pytest.raises(BandwidthExceeded):
        demodulate(make_trace(np.zeros(4096), dt=1e-8), wide)


def test_rotate_mode_phase_matches_covariance_rotation():
    rng = np.random.default_rng(5)
    ens = demodulate_ensemble(noise_traces(rng, 10), LAY3)
    cov = estimate_covariance(ens)
    theta = 0.8
    rotated = rotate_mode_phase(ens, 1, theta)
    assert np.isclose(rotated.mode_phases[1], theta)
    cov_rot = estimate_covariance(rotated)
    expect = rotate_covariance(cov, (0.0, theta, 0.0))
    np.testing.assert_allclose(cov_rot.data, expect.data, atol=1e-12)
    with pytest.raises(DimensionMismatch):
        rotate_mode_phase(ens, 5, theta)


def test_rotation_matrix_symplectic_orthogonal():
    r = rotation_matrix((0.3, -1.1, 2.0))
    np.testing.assert_allclose(r @ r.T, np.eye(6), atol=1e-14)
    from jpasim.core import symplectic_form
    omega = symplectic_form(3)
    np.testing.assert_allclose(r @ omega @ r.T, omega, atol=1e-14)


def test_symmetrize_recovers_applied_rotations():
    par = presets.tripartite_params()
    _, vout = analytic_covariance(par, presets.tripartite_pumps(0.2), LAY3)
    base = symmetrize_covariance(vout)
    applied = (0.0, 0.35, -0.6)
    scrambled = rotate_covariance(base.cov, applied)
    result = symmetrize_covariance(scrambled)
    for got, want in zip(result.angles[1:], applied[1:]):
        # block zeroing is defined modulo pi
        assert min(abs((got + want) % np.pi), np.pi - (got + want) % np.pi) \
            < 1e-6

    def chain_cost(m):
        return sum(m[2 * k, 2 * k + 3] ** 2 + m[2 * k + 1, 2 * k + 2] ** 2
                   for k in range(2))

    assert chain_cost(result.cov.data) < 1e-16 * np.trace(base.cov.data) ** 2


def test_symmetrize_degenerate_block():
    vac = CovarianceMatrix(np.eye(6) / 4, Units.VACUUM_QUARTER)
    with pytest.raises(DegenerateSubspace):
        symmetrize_covariance(vac)
    res = symmetrize_covariance(vac, check_degenerate=False)
    assert res.degenerate == (False, True, True)
    np.testing.assert_allclose(res.cov.data, vac.data)


def test_quadrature_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(9)
    ens = demodulate_ensemble(noise_traces(rng, 2), LAY3)
    path = tmp_path / "iq.csv"
    export_quadratures_csv(ens, path)
    back = import_quadratures_csv(path, LAY3)
    assert back.iq.shape == ens.iq.shape
    np.testing.assert_allclose(back.iq, ens.iq, atol=1e-9)
    wrong = presets.quadripartite_layout()
    with pytest.raises(DimensionMismatch):
        import_quadratures_csv(path, wrong)


def test_rotation_preserves_sample_power():
    rng = np.random.default_rng(21)
    ens = demodulate_ensemble(noise_traces(rng, 3), LAY3)
    rotated = rotate_mode_phase(ens, 2, -1.3)
    np.testing.assert_allclose(np.abs(rotated.iq), np.abs(ens.iq),
                               rtol=1e-12)


def test_symmetrize_preserves_symplectic_spectrum():
    from jpasim.entanglement import symplectic_eigenvalues

    par = presets.tripartite_params()
    _, vout = analytic_covariance(par, presets.tripartite_pumps(0.25), LAY3)
    scrambled = rotate_covariance(vout, (0.2, -0.9, 1.4))
    res = symmetrize_covariance(scrambled)
    np.testing.assert_allclose(symplectic_eigenvalues(res.cov),
                               symplectic_eigenvalues(vout), atol=1e-9)
