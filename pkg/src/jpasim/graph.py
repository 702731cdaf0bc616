"""Frequency-domain linear interaction matrix and graph analytics.

Inside this module only, vectors follow the ladder ordering
(a1 ... aN, a1† ... aN†); everything exported as a covariance uses the
canonical quadrature ordering (x1, p1, ..., xN, pN).
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .core import (
    TWOPI,
    CovarianceMatrix,
    PumpTone,
    Units,
    thermal_coth,
    wrap_phase,
)
from .errors import (
    NonRealResidue,
    SingularAtThreshold,
    UnmatchedPump,
    UnsupportedTarget,
)

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class InteractionMatrix:
    """Complex 2N x 2N coupling matrix in ladder ordering at offset omega."""

    data: np.ndarray
    omega: float
    params: object
    pumps: object
    layout: object


@dataclass(frozen=True)
class HGraph:
    """Typed-edge graph view of an inverse interaction matrix."""

    nodes: tuple
    edges: tuple  # (i, j, kind in {"TMS", "BS"}, complex weight)

    def edge_set(self, kind=None):
        return {
            (i, j)
            for (i, j, k, _) in self.edges
            if kind is None or k == kind
        }


def pump_mode_pairs(pumps, layout):
    """Map each pump tone to the mode pairs (i, j), i <= j, it couples.

    Pump d couples modes whose center offsets sum to the tone detuning,
    within half a guard band.
    """
    centers = np.asarray(layout.centers_rad)
    tol = 0.5 * TWOPI * (layout.guard if layout.guard > 0 else 1e-3 * layout.bandwidth)
    mapping = []
    for tone in pumps.tones:
        pairs = [
            (i, j)
            for i in range(layout.n_modes)
            for j in range(i, layout.n_modes)
            if abs(centers[i] + centers[j] - tone.detuning) < tol
        ]
        if not pairs:
            raise UnmatchedPump(
                f"pump detuning {tone.detuning / TWOPI:.6g} Hz matches no mode pair"
            )
        mapping.append(pairs)
    return mapping


def _pairs_for_centers(centers, detuning, tol):
    n = len(centers)
    return [
        (i, j)
        for i in range(n)
        for j in range(i, n)
        if abs(centers[i] + centers[j] - detuning) < tol
    ]


def _lattice_matrix(params, pumps, centers, omega, include_offsets, tol):
    """Interaction matrix over an arbitrary list of mode centers (rad/s)."""
    n = len(centers)
    half_rate = 0.5 * params.total_rate
    m = np.zeros((2 * n, 2 * n), dtype=complex)
    for i, mu in enumerate(centers):
        off = mu if include_offsets else 0.0
        m[i, i] = -1j * (omega + off - params.delta_r) + half_rate
        m[n + i, n + i] = -1j * (omega - off + params.delta_r) + half_rate
    for tone in pumps.tones:
        up = 1j * tone.amplitude * np.exp(1j * tone.phase)
        down = np.conj(up)  # -i alpha e^{-i phi}
        for (i, j) in _pairs_for_centers(centers, tone.detuning, tol):
            m[i, n + j] += up
            m[n + j, i] += down
            if i != j:
                m[j, n + i] += up
                m[n + i, j] += down
    return m


def build_interaction_matrix(params, pumps, layout, omega=0.0,
                             include_mode_offsets=False):
    """Linear-model interaction matrix M for the configured pumps.

    The default drops the mode-center offsets from the diagonal, matching
    the narrow-band approximation used by the closed-form expressions;
    ``include_mode_offsets=True`` keeps the per-mode detunings, which is
    the form used by the simulation oracle.
    """
    mapping = pump_mode_pairs(pumps, layout)  # raises UnmatchedPump
    del mapping
    centers = list(layout.centers_rad)
    tol = 0.5 * TWOPI * (layout.guard if layout.guard > 0 else 1e-3 * layout.bandwidth)
    data = _lattice_matrix(params, pumps, centers, omega, include_mode_offsets, tol)
    data.setflags(write=False)
    return InteractionMatrix(data, omega, params, pumps, layout)


def invert_interaction(m):
    """Numeric inverse of the interaction matrix."""
    data = m.data if isinstance(m, InteractionMatrix) else np.asarray(m)
    if np.linalg.cond(data) > _COND_LIMIT:
        raise SingularAtThreshold(
            "interaction matrix is singular: pump amplitude at or above threshold"
        )
    return np.linalg.inv(data)


def io_adjacency(m_inv, kappa):
    """Input-output adjacency I - kappa * M^-1."""
    return np.eye(m_inv.shape[0]) - kappa * m_inv


def ladder_to_quadrature_map(n_modes):
    """Basis-change matrix from (a1..aN, a1†..aN†) to (x1, p1, ..., xN, pN)."""
    k = np.zeros((2 * n_modes, 2 * n_modes), dtype=complex)
    for i in range(n_modes):
        k[2 * i, i] = 0.5
        k[2 * i, n_modes + i] = 0.5
        k[2 * i + 1, i] = -0.5j
        k[2 * i + 1, n_modes + i] = 0.5j
    return k


def to_quadrature_basis(m_inv, kappa):
    """Real parametric interaction matrix S^-1 = sqrt(kappa) K M^-1 K^-1."""
    n = m_inv.shape[0] // 2
    k = ladder_to_quadrature_map(n)
    k_inv = 2.0 * k.conj().T
    s_inv = np.sqrt(kappa) * (k @ m_inv @ k_inv)
    scale = np.abs(s_inv).max() or 1.0
    if np.abs(s_inv.imag).max() > 1e-10 * scale:
        raise NonRealResidue(
            "quadrature-basis matrix has a non-negligible imaginary part"
        )
    return s_inv.real


def _sigma_x(n):
    """Ladder-ordered white-noise symmetric correlation structure."""
    s = np.zeros((2 * n, 2 * n))
    s[:n, n:] = np.eye(n)
    s[n:, :n] = np.eye(n)
    return s


def _spectral_blocks(params, pumps, centers, omega, include_offsets, tol):
    """Output and intracavity spectral covariance at a single offset omega.

    Returns the pair (V_a(omega), V_out(omega)) in quadrature ordering for
    the given lattice of mode centers; both are exact for the linear model,
    including the internal loss port.
    """
    n = len(centers)
    m_p = _lattice_matrix(params, pumps, centers, omega, include_offsets, tol)
    m_m = _lattice_matrix(params, pumps, centers, -omega, include_offsets, tol)
    inv_p = np.linalg.inv(m_p)
    inv_m = np.linalg.inv(m_m)
    k = ladder_to_quadrature_map(n)
    sig = _sigma_x(n)
    kappa, gamma = params.kappa, params.gamma
    coth = thermal_coth(params.omega_r / TWOPI, params.temperature)
    adj_p = np.eye(2 * n) - kappa * inv_p
    adj_m = np.eye(2 * n) - kappa * inv_m
    loss = kappa * gamma * coth * (inv_p @ sig @ inv_m.T)
    v_out = 0.5 * (k @ (adj_p @ sig @ adj_m.T + loss) @ k.T)
    v_a = 0.5 * (kappa + gamma * coth) * (k @ (inv_p @ sig @ inv_m.T) @ k.T)
    return v_a, v_out


def _realize(v, label):
    v = 0.5 * (v + v.T)
    scale = np.abs(v).max() or 1.0
    if np.abs(v.imag).max() > 1e-9 * scale:
        raise NonRealResidue(f"{label} has a non-negligible imaginary part")
    return v.real


def analytic_covariance(params, pumps, layout, omega=0.0):
    """Closed-form linear-model covariances (V_a, V_out) at offset omega.

    Uses the narrow-band interaction matrix (no mode-center offsets on the
    diagonal). V_a is the intracavity spectral density in the same
    normalization as the closed-form expressions; V_out is the output
    covariance with vacuum input (both VacuumQuarter tags).
    """
    # raises UnmatchedPump for inconsistent layouts, SingularAtThreshold above
    m = build_interaction_matrix(params, pumps, layout, omega)
    invert_interaction(m)
    centers = list(layout.centers_rad)
    tol = 0.5 * TWOPI * (layout.guard if layout.guard > 0 else 1e-3 * layout.bandwidth)
    va_p, vout_p = _spectral_blocks(params, pumps, centers, omega, False, tol)
    va_m, vout_m = _spectral_blocks(params, pumps, centers, -omega, False, tol)
    v_a = _realize(0.5 * (va_p + va_m), "V_a")
    v_out = _realize(0.5 * (vout_p + vout_m), "V_out")
    return (
        CovarianceMatrix(v_a, Units.VACUUM_QUARTER),
        CovarianceMatrix(v_out, Units.VACUUM_QUARTER),
    )


def _extended_centers(layout, pumps, n_shells):
    """Close the mode lattice under the pump coupling map."""
    centers = list(layout.centers_rad)
    tol = 0.5 * TWOPI * (layout.guard if layout.guard > 0 else 1e-3 * layout.bandwidth)
    frontier = list(centers)
    for _ in range(n_shells):
        fresh = []
        for tone in pumps.tones:
            for mu in frontier:
                nu = tone.detuning - mu
                if all(abs(nu - c) > tol for c in centers + fresh):
                    fresh.append(nu)
        if not fresh:
            break
        centers.extend(fresh)
        frontier = fresh
    return centers, tol


def analytic_output_covariance(params, pumps, layout, offsets_hz=None,
                               n_shells=6, n_points=65):
    """Band-averaged output covariance of the linear model.

    This is the quantitative oracle for the stochastic simulation: the
    diagonal keeps per-mode center offsets, the mode lattice is closed under
    the pump coupling map (out-of-band partners up to ``n_shells`` away;
    the default is converged to a few 1e-6 even close to threshold),
    and the spectral covariance is averaged over the analysis band. When
    ``offsets_hz`` is given (e.g. the FFT-bin offsets actually used during
    demodulation) the average runs over exactly those offsets; otherwise a
    uniform grid over the mode bandwidth is used.
    """
    centers, tol = _extended_centers(layout, pumps, n_shells)
    n = layout.n_modes
    if offsets_hz is None:
        offsets = TWOPI * np.linspace(
            -0.5 * layout.bandwidth, 0.5 * layout.bandwidth, n_points
        )
        weights = np.ones(len(offsets))
        weights[0] = weights[-1] = 0.5
    else:
        offsets = TWOPI * np.asarray(offsets_hz, dtype=float)
        weights = np.ones(len(offsets))
    acc = np.zeros((2 * n, 2 * n), dtype=complex)
    for w, delta in zip(weights, offsets):
        _, v_out = _spectral_blocks(params, pumps, centers, delta, True, tol)
        acc += w * v_out[: 2 * n, : 2 * n]
    v = _realize(acc / weights.sum(), "band-averaged V_out")
    return CovarianceMatrix(v, Units.VACUUM_QUARTER)


def extract_graph(m_inv, threshold=0.01):
    """Typed-edge graph from the off-diagonal structure of M^-1."""
    n = m_inv.shape[0] // 2
    mags = np.abs(m_inv).copy()
    np.fill_diagonal(mags, 0.0)
    ref = mags.max()
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if abs(m_inv[i, j]) > threshold * ref:
                edges.append((i, j, "BS", complex(m_inv[i, j])))
            if abs(m_inv[i, n + j]) > threshold * ref:
                edges.append((i, j, "TMS", complex(m_inv[i, n + j])))
    return HGraph(tuple(range(n)), tuple(edges))


def graph_edge_list(graph):
    """Plain-text edge list: `i j kind re(w) im(w)` per line."""
    lines = [
        f"{i} {j} {kind} {w.real:.12g} {w.imag:.12g}"
        for (i, j, kind, w) in graph.edges
    ]
    return "\n".join(lines) + "\n"


def graph_to_dot(graph):
    """DOT rendering with solid TMS and dashed BS edges."""
    lines = ["graph hgraph {"]
    for node in graph.nodes:
        lines.append(f"  {node + 1};")
    for (i, j, kind, w) in graph.edges:
        style = "solid" if kind == "TMS" else "dashed"
        lines.append(
            f'  {i + 1} -- {j + 1} [style={style}, label="{abs(w):.3g}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def zassenhaus_counts(n_modes):
    """Counts (n_tms, n_bs) in the multimode squeezing decomposition."""
    terms = range(1, n_modes // 2 + 1)
    n_bs = sum(n_modes - 2 * n for n in terms)
    n_tms = sum(n_modes - 2 * n + 1 for n in terms)
    return n_tms, n_bs


def _bs_suppression_metric(params, pumps, layout, phases):
    m = build_interaction_matrix(params, pumps.with_phases(phases), layout)
    try:
        m_inv = invert_interaction(m)
    except SingularAtThreshold:
        return np.inf
    n = layout.n_modes
    within = max(
        abs(m_inv[i, j]) + abs(m_inv[n + i, n + j])
        for i in range(n)
        for j in range(n)
        if i != j
    )
    cross = np.abs(m_inv[:n, n:]).max()
    return within / max(cross, 1e-300)


def find_bs_suppressing_phases(params, pumps, layout, tol=1e-10):
    """Search for pump phases that cancel all beam-splitter correlations.

    Scans the grid of pi/2 multiples, refines the best candidate locally,
    and returns the phase tuple if the within-block off-diagonal magnitudes
    of M^-1 drop below ``tol`` relative to the TMS entries, else None.
    """
    p = len(pumps.tones)
    grid = [-np.pi / 2, 0.0, np.pi / 2, np.pi]
    best, best_metric = None, np.inf
    for idx in np.ndindex(*(4,) * p):
        phases = tuple(grid[i] for i in idx)
        metric = _bs_suppression_metric(params, pumps, layout, phases)
        if metric < best_metric:
            best, best_metric = phases, metric
    if best_metric < tol:
        return best
    res = minimize(
        lambda x: _bs_suppression_metric(params, pumps, layout, tuple(x)),
        np.array(best),
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 2000},
    )
    if res.fun < tol:
        return tuple(wrap_phase(v) for v in res.x)
    return None


def ghz_augmentation(layout, graph_target, amplitude=1.0, phase=np.pi / 2):
    """Extra pump tones that complete the TMS edge set to a GHZ graph.

    Returns a tuple of PumpTone to append to the standard equidistant
    pump configuration (the amplitude/phase of the new tones are free
    parameters of the caller).
    """
    if graph_target not in ("GHZ3", "GHZ4"):
        raise UnsupportedTarget(f"unknown graph target {graph_target!r}")
    want = 3 if graph_target == "GHZ3" else 4
    if layout.n_modes != want:
        raise UnsupportedTarget(
            f"{graph_target} requires a {want}-mode equidistant layout"
        )
    centers = sorted(layout.centers_rad)
    spacings = np.diff(centers)
    if not np.allclose(spacings, spacings[0], rtol=1e-9):
        raise UnsupportedTarget("layout is not equidistant")
    if abs(sum(centers)) > 1e-6 * max(abs(c) for c in centers):
        raise UnsupportedTarget("layout is not centered on the rotating frame")
    spacing = float(spacings[0])
    if graph_target == "GHZ3":
        # the missing 1-3 TMS edge: centers sum to zero
        return (PumpTone(0.0, amplitude, phase),)
    # missing 1-3 and 2-4 edges: center sums are -spacing and +spacing
    return (
        PumpTone(-spacing, amplitude, phase),
        PumpTone(spacing, amplitude, phase),
    )
