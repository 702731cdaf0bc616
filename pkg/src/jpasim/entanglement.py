"""Entanglement tests on Gaussian covariance matrices.

Two complementary criteria: symplectic PPT tests over all one-vs-rest
bipartitions (full inseparability) and a variance witness for genuine
multipartite entanglement with optimized quadrature weights.
"""

import hashlib
import json
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.optimize import minimize

from .core import CovarianceMatrix, Units, convert_units, symplectic_form
from .errors import InvalidModeSet, JpasimError, ZeroDenominator


def symplectic_eigenvalues(cov):
    """Symplectic spectrum of a covariance matrix (VacuumUnit convention).

    A physical state has all values >= 1; values are the paired moduli of
    the spectrum of i Omega V.
    """
    v = convert_units(cov, Units.VACUUM_UNIT).data
    omega = symplectic_form(cov.n_modes)
    mods = np.sort(np.abs(np.linalg.eigvals(1j * omega @ v)))
    pairs = mods.reshape(-1, 2)
    spread = np.abs(pairs[:, 1] - pairs[:, 0])
    if np.any(spread > 1e-6 * (1.0 + pairs[:, 1])):
        raise JpasimError("symplectic spectrum failed to pair up")
    return pairs.mean(axis=1)


def partial_transpose(cov, modes):
    """Momentum-sign flip on the given mode subset (0-based indices)."""
    n = cov.n_modes
    modes = sorted(set(modes))
    if not modes or any(m < 0 or m >= n for m in modes) or len(modes) >= n:
        raise InvalidModeSet(
            "partial transposition needs a proper non-empty mode subset"
        )
    lam = np.ones(2 * n)
    for m in modes:
        lam[2 * m + 1] = -1.0
    return CovarianceMatrix(cov.data * np.outer(lam, lam), cov.units)


def _partition_label(modes, n):
    left = "".join(str(m + 1) for m in sorted(modes))
    right = "".join(str(m + 1) for m in range(n) if m not in modes)
    return f"{left}-{right}"


@dataclass(frozen=True)
class PptResult:
    """Minimum symplectic eigenvalue after PPT for each bipartition."""

    eigenvalues: dict  # label -> min symplectic eigenvalue
    fully_inseparable: bool
    extras: dict  # two-vs-two results, excluded from the verdict


def ppt_full_inseparability(cov, include_two_vs_two=False, threshold=1.0):
    """PPT test over all one-vs-rest bipartitions.

    The state is reported fully inseparable when every one-vs-rest
    partial transpose has a symplectic eigenvalue below ``threshold``.
    Two-vs-two splits (for 4 modes) are computed on request but never
    enter the verdict.
    """
    n = cov.n_modes
    eigs = {}
    for m in range(n):
        nu = symplectic_eigenvalues(partial_transpose(cov, [m])).min()
        eigs[_partition_label([m], n)] = float(nu)
    extras = {}
    if include_two_vs_two and n == 4:
        for pair in ([0, 1], [0, 2], [0, 3]):
            nu = symplectic_eigenvalues(partial_transpose(cov, pair)).min()
            extras[_partition_label(pair, n)] = float(nu)
    verdict = all(v < threshold for v in eigs.values())
    return PptResult(eigs, verdict, extras)


def f3(h, g):
    """Tripartite witness bound for weights h, g (length 3)."""
    k = [abs(h[i] * g[i]) for i in range(3)]
    return 0.5 * min(
        abs(h[0] * g[0] + h[1] * g[1]) + k[2],
        abs(h[2] * g[2] + h[1] * g[1]) + k[0],
        abs(h[0] * g[0] + h[2] * g[2]) + k[1],
    )


def f4(h, g):
    """Quadripartite witness bound for weights h, g (length 4)."""
    k = [h[i] * g[i] for i in range(4)]
    a = [abs(k[i]) for i in range(4)]
    sums = [
        abs(k[1] + k[2] + k[3]) + a[0],
        abs(k[0] + k[2] + k[3]) + a[1],
        abs(k[0] + k[1] + k[3]) + a[2],
        abs(k[0] + k[1] + k[2]) + a[3],
        abs(k[0] + k[1]) + abs(k[2] + k[3]),
        abs(k[0] + k[2]) + abs(k[1] + k[3]),
        abs(k[0] + k[3]) + abs(k[1] + k[2]),
    ]
    return 0.5 * min(sums)


def gme_S(cov, h, g):
    """Witness ratio S = (<Du^2> + <Dv^2>) / f_N for u = h.x, v = g.p.

    Values below 1 certify genuine multipartite entanglement. The
    variances are evaluated in VacuumQuarter units.
    """
    n = cov.n_modes
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float)
    if len(h) != n or len(g) != n:
        raise InvalidModeSet("need one weight per mode")
    f = f3(h, g) if n == 3 else f4(h, g)
    if f < 1e-12:
        raise ZeroDenominator("witness bound f_N vanishes for these weights")
    v = convert_units(cov, Units.VACUUM_QUARTER).data
    var_u = h @ v[0::2, 0::2] @ h
    var_v = g @ v[1::2, 1::2] @ g
    return (var_u + var_v) / f


@dataclass(frozen=True)
class GmeResult:
    s_value: float
    weights_h: tuple
    weights_g: tuple
    base_mode: int


def optimize_gme(cov, grid_points=21):
    """Minimize the witness ratio over tied weights in [-1, 1].

    For each choice of base mode b the weights h_b = g_b = 1 are fixed
    and the remaining modes share tied weights h_i = h, g_i = g scanned
    on a grid and refined locally. The returned S never exceeds the best
    grid value.
    """
    n = cov.n_modes
    if n not in (3, 4):
        raise InvalidModeSet("witness defined for 3 or 4 modes")

    def weights(base, hw, gw):
        h = np.full(n, hw)
        g = np.full(n, gw)
        h[base] = 1.0
        g[base] = 1.0
        return h, g

    def objective(base, hw, gw):
        h, g = weights(base, float(np.clip(hw, -1, 1)), float(np.clip(gw, -1, 1)))
        try:
            return gme_S(cov, h, g)
        except ZeroDenominator:
            return np.inf

    grid = np.linspace(-1.0, 1.0, grid_points)
    best = (np.inf, 0, 1.0, 1.0)
    for base in range(n):
        for hw, gw in product(grid, grid):
            s = objective(base, hw, gw)
            if s < best[0]:
                best = (s, base, hw, gw)
    s0, base, hw, gw = best
    res = minimize(
        lambda x: objective(base, x[0], x[1]),
        np.array([hw, gw]),
        method="Nelder-Mead",
        options={"xatol": 1e-8, "fatol": 1e-12},
    )
    if res.fun < s0:
        s0, hw, gw = float(res.fun), float(np.clip(res.x[0], -1, 1)), float(
            np.clip(res.x[1], -1, 1)
        )
    h, g = weights(base, hw, gw)
    return GmeResult(float(s0), tuple(h), tuple(g), base)


def covariance_checksum(cov):
    """SHA-256 of the covariance bytes (row-major float64) and units."""
    digest = hashlib.sha256()
    digest.update(cov.units.value.encode())
    digest.update(np.ascontiguousarray(cov.data, dtype=np.float64).tobytes())
    return digest.hexdigest()


def entanglement_report(cov, include_two_vs_two=None):
    """Combined PPT + GME report as a JSON-serializable dict."""
    if include_two_vs_two is None:
        include_two_vs_two = cov.n_modes == 4
    ppt = ppt_full_inseparability(cov, include_two_vs_two=include_two_vs_two)
    gme = optimize_gme(cov)
    return {
        "n_modes": cov.n_modes,
        "units": cov.units.value,
        "covariance_sha256": covariance_checksum(cov),
        "ppt": {
            "eigenvalues": ppt.eigenvalues,
            "fully_inseparable": ppt.fully_inseparable,
            "two_vs_two": ppt.extras,
        },
        "gme": {
            "s_value": gme.s_value,
            "weights_h": list(gme.weights_h),
            "weights_g": list(gme.weights_g),
            "base_mode": gme.base_mode,
            "genuine_multipartite": gme.s_value < 1.0,
        },
    }


def write_report(report, path):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
