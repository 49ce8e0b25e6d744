"""Pilot-based channel estimation and rotation-angle recovery.

Angle recovery comes in two independent flavours.  The closed form reads
two probe entries of the estimated matrix whose element azimuths make the
tilt terms collapse onto a sine/cosine pair of one common quantity; a
principal-branch complex log then returns the pair directly.  The
grid-plus-golden-section least-squares search knows nothing about that
algebra and serves as the oracle for (and fallback beyond) the closed
form's unambiguous range.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, replace

import numpy as np

from .channel import (
    ESTIMATED,
    ChannelMatrix,
    LinkBudget,
    _as_entries,
    channel_constants,
)
from .geometry import Pose, UcaPairConfig, link_range, wrap_angle, wrapped_difference

CLOSED_FORM = "closed_form"
NLS = "nls"

THETA_GRID_STEPS = 720
PHI_GRID_STEPS = 200
REFINE_TOL = 1e-10
# Relative Frobenius misfit beyond which an estimate is considered to have
# left the model (e.g. a probe phase wrapped past the principal branch).
MISFIT_THRESHOLD = 0.5

_COARSE_CACHE: OrderedDict = OrderedDict()
_COARSE_CACHE_SLOTS = 4


@dataclass(frozen=True)
class AngleEstimate:
    """Recovered misalignment angles plus fit diagnostics.

    ``residual`` is the relative Frobenius mismatch between the input matrix
    and the far-field model rebuilt at the estimate.  ``ambiguous`` is set
    when the tilt is unobservable (zero), the estimate sits at the edge of
    the estimator's trustworthy range, or the model fit is poor.
    """

    theta_hat: float
    phi_hat: float
    residual: float
    ambiguous: bool
    method: str

    def __post_init__(self):
        if not 0.0 <= self.phi_hat < math.pi / 2.0:
            raise ValueError(f"phi_hat must lie in [0, pi/2), got {self.phi_hat}")
        if self.residual < 0.0:
            raise ValueError("residual must be >= 0")
        object.__setattr__(self, "theta_hat", float(wrap_angle(self.theta_hat)))


@dataclass(frozen=True)
class EstimationScenario:
    """Everything the estimators are allowed to know.

    The true pose travels with the scenario so the simulation pipeline can
    score estimates, but the estimators only read its distance ``d`` (a
    known link parameter); the tilt angles stay hidden.  ``a`` is the common
    reference rotation of both arrays.  ``phi_grid_max`` bounds the
    least-squares tilt grid.
    """

    cfg: UcaPairConfig
    pose: Pose
    link: LinkBudget
    pilot_power: float = 1.0
    a: float = 0.0
    phi_grid_max: float = 0.1

    def __post_init__(self):
        if self.pilot_power <= 0.0:
            raise ValueError("pilot power must be positive")
        if not 0.0 < self.phi_grid_max < math.pi / 2.0:
            raise ValueError("phi_grid_max must lie in (0, pi/2)")
        object.__setattr__(self, "a", float(wrap_angle(self.a)))


def lmmse_estimate(
    Y: np.ndarray, X: np.ndarray, sigma2: float, prior_power: float
) -> ChannelMatrix:
    """Linear MMSE channel estimate from a known pilot block.

    H_hat = Y X^H (X X^H + (sigma2 / prior_power) I)^{-1}, where
    ``prior_power`` is the per-entry channel power assumed by the prior.
    Reduces to the exact least-squares inverse as sigma2 -> 0.
    """
    Y = np.asarray(Y, dtype=complex)
    X = np.asarray(X, dtype=complex)
    if Y.ndim != 2 or X.ndim != 2:
        raise ValueError("received block and pilot block must be 2-D")
    if Y.shape[1] != X.shape[1]:
        raise ValueError(
            f"received block has {Y.shape[1]} slots, pilots have {X.shape[1]}"
        )
    if prior_power <= 0.0:
        raise ValueError(f"prior power must be positive, got {prior_power}")
    if sigma2 < 0.0:
        raise ValueError(f"noise variance must be >= 0, got {sigma2}")
    gram = X @ X.conj().T + (sigma2 / prior_power) * np.eye(X.shape[0])
    try:
        estimate = np.linalg.solve(gram.conj().T, (Y @ X.conj().T).conj().T).conj().T
    except np.linalg.LinAlgError as exc:  # unreachable with orthogonal pilots
        raise ValueError("regularized pilot Gram matrix is singular") from exc
    return ChannelMatrix(entries=estimate, model=ESTIMATED)


def ambiguity_bound(cfg: UcaPairConfig, link: LinkBudget, d: float) -> float:
    """Largest tilt for which both closed-form probes stay on the principal branch.

    phi_max = arcsin(lambda * S / (2 d (R_t + R_r))), clamped to pi/2 when
    the argument exceeds one (small or distant arrays are never ambiguous).
    """
    if d <= 0.0:
        raise ValueError(f"distance must be positive, got {d}")
    s = link_range(cfg, Pose(d=d))
    arg = link.wavelength * s / (2.0 * d * (cfg.R_t + cfg.R_r))
    if arg >= 1.0:
        return math.pi / 2.0
    return math.asin(arg)


def _model_entries(
    cfg: UcaPairConfig, link: LinkBudget, d: float, theta: float, phi: float
) -> np.ndarray:
    """Far-field matrix at an arbitrary (theta, phi), bypassing Pose range checks."""
    consts = channel_constants(cfg, Pose(d=d), link)
    rx_az = cfg.rx_azimuths()
    tx_az = cfg.tx_azimuths()
    sin_phi = math.sin(phi)
    rx_terms = d * cfg.R_r * sin_phi * np.cos(rx_az - theta)
    cross_terms = -cfg.R_t * cfg.R_r * np.cos(rx_az[:, None] - tx_az[None, :])
    tx_terms = -d * cfg.R_t * sin_phi * np.cos(tx_az - theta)
    total = rx_terms[:, None] + cross_terms + tx_terms[None, :]
    return consts.prefactor * np.exp(consts.phase_scale * total)


def _relative_misfit(entries: np.ndarray, model: np.ndarray) -> float:
    norm = np.linalg.norm(entries)
    if norm == 0.0:
        raise ValueError("estimated channel matrix is identically zero")
    return float(np.linalg.norm(entries - model) / norm)


def _require_common_rotation(cfg: UcaPairConfig, a: float) -> None:
    if abs(wrapped_difference(cfg.a_t, a)) > 1e-12 or abs(
        wrapped_difference(cfg.a_r, a)
    ) > 1e-12:
        raise ValueError(
            "angle recovery assumes both arrays share the known reference "
            f"rotation a={a}, got a_t={cfg.a_t}, a_r={cfg.a_r}"
        )


def closed_form_angles(Hhat, scenario: EstimationScenario) -> AngleEstimate:
    """Two-probe closed-form recovery of (theta, phi).

    Probe one pairs receive azimuth 0 with transmit azimuth pi, probe two
    pairs receive azimuth pi/2 with transmit azimuth 3*pi/2; with both
    reference rotations equal these choices cancel everything except
    d (R_t + R_r) sin(phi) times cos / sin of (theta - a).  The known
    element-coupling phase is divided out before taking the principal log,
    and the pair feeds a quadrant-correct atan2.

    Valid only while both probe phases stay on the principal branch
    (tilts below :func:`ambiguity_bound`); outside that range the result is
    flagged ambiguous, as is the unobservable-azimuth case phi = 0.
    """
    cfg, link = scenario.cfg, scenario.link
    if cfg.K % 4 != 0 or cfg.V % 4 != 0:
        raise ValueError(
            f"closed-form probes need K and V divisible by 4, got K={cfg.K}, V={cfg.V}"
        )
    _require_common_rotation(cfg, scenario.a)
    entries = _as_entries(Hhat)
    if entries.shape != (cfg.V, cfg.K):
        raise ValueError(f"expected a {cfg.V} x {cfg.K} matrix, got {entries.shape}")
    d = scenario.pose.d
    consts = channel_constants(cfg, Pose(d=d), link)
    phase_rate = abs(consts.phase_scale.imag)

    # Both probe pairs sit at opposite azimuths, where the element-coupling
    # term equals +R_t R_r.
    base = consts.prefactor * np.exp(consts.phase_scale * (cfg.R_t * cfg.R_r))
    probe_cos = entries[0, cfg.K // 2]
    probe_sin = entries[cfg.V // 4, (3 * cfg.K) // 4]
    if probe_cos == 0.0 or probe_sin == 0.0:
        raise ValueError("closed-form probe entry has zero magnitude")
    s_cos = -np.angle(probe_cos / base) / phase_rate
    s_sin = -np.angle(probe_sin / base) / phase_rate

    theta_hat = float(wrap_angle(scenario.a + math.atan2(s_sin, s_cos)))
    scale = d * (cfg.R_t + cfg.R_r)
    sin_phi = math.hypot(s_cos, s_sin) / scale
    phi_hat = math.asin(min(sin_phi, 1.0))
    phi_hat = min(phi_hat, math.nextafter(math.pi / 2.0, 0.0))

    residual = _relative_misfit(entries, _model_entries(cfg, link, d, theta_hat, phi_hat))
    branch_sin = min(1.0, link.wavelength * link_range(cfg, Pose(d=d)) / (2.0 * scale))
    ambiguous = (
        phi_hat == 0.0
        or sin_phi >= branch_sin * (1.0 - 1e-9)
        or residual > MISFIT_THRESHOLD
    )
    if phi_hat == 0.0:
        theta_hat = scenario.a  # tilt zero leaves the azimuth unobservable
    return AngleEstimate(theta_hat, phi_hat, residual, ambiguous, CLOSED_FORM)


def _coarse_tables(cfg: UcaPairConfig, link: LinkBudget, d: float, phi_grid_max: float):
    """Steering tables of the coarse search, cached per link geometry.

    The tables depend on everything except the matrix under test, so one
    cache entry serves every estimate drawn from the same geometry.
    """
    key = (cfg.K, cfg.V, cfg.R_t, cfg.R_r, cfg.a_t, cfg.a_r, d, link.f, phi_grid_max)
    hit = _COARSE_CACHE.get(key)
    if hit is not None:
        _COARSE_CACHE.move_to_end(key)
        return hit
    consts = channel_constants(cfg, Pose(d=d), link)
    theta_grid = np.linspace(0.0, 2.0 * math.pi, THETA_GRID_STEPS, endpoint=False)
    phi_grid = np.linspace(0.0, phi_grid_max, PHI_GRID_STEPS)
    rx_az = cfg.rx_azimuths()
    tx_az = cfg.tx_azimuths()
    rx_scale = d * cfg.R_r * np.cos(rx_az[None, :] - theta_grid[:, None])
    tx_scale = -d * cfg.R_t * np.cos(tx_az[None, :] - theta_grid[:, None])
    sin_phi = np.sin(phi_grid)
    phase = consts.phase_scale * sin_phi[None, :, None]
    rx_table = np.exp(phase * rx_scale[:, None, :]).astype(np.complex64)
    tx_table = np.exp(phase * tx_scale[:, None, :]).astype(np.complex64)
    rx_table = rx_table.reshape(-1, cfg.V)
    tx_table = tx_table.reshape(-1, cfg.K)
    cross = np.exp(
        consts.phase_scale * (-cfg.R_t * cfg.R_r * np.cos(rx_az[:, None] - tx_az[None, :]))
    )
    tables = (theta_grid, phi_grid, rx_table, tx_table, cross)
    _COARSE_CACHE[key] = tables
    while len(_COARSE_CACHE) > _COARSE_CACHE_SLOTS:
        _COARSE_CACHE.popitem(last=False)
    return tables


_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_section(fn, lo: float, hi: float, tol: float) -> float:
    """Minimize a unimodal scalar function on [lo, hi] to the given width."""
    x1 = hi - _INV_GOLDEN * (hi - lo)
    x2 = lo + _INV_GOLDEN * (hi - lo)
    f1, f2 = fn(x1), fn(x2)
    while hi - lo > tol:
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_GOLDEN * (hi - lo)
            f1 = fn(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_GOLDEN * (hi - lo)
            f2 = fn(x2)
    return 0.5 * (lo + hi)


def nls_angles(Hhat, scenario: EstimationScenario) -> AngleEstimate:
    """Least-squares angle recovery by grid search plus golden-section polish.

    Scans a fixed grid (``THETA_GRID_STEPS`` azimuths over the full circle,
    ``PHI_GRID_STEPS`` tilts up to ``scenario.phi_grid_max``) for the best
    Frobenius fit of the far-field model, breaking exact ties towards the
    smallest azimuth and then the smallest tilt, and polishes each axis
    alternately with golden-section searches down to 1e-10 rad.  Makes no
    use of the closed form, so the two methods cross-validate each other.
    """
    cfg, link = scenario.cfg, scenario.link
    _require_common_rotation(cfg, scenario.a)
    entries = _as_entries(Hhat)
    if entries.shape != (cfg.V, cfg.K):
        raise ValueError(f"expected a {cfg.V} x {cfg.K} matrix, got {entries.shape}")
    d = scenario.pose.d
    consts = channel_constants(cfg, Pose(d=d), link)
    theta_grid, phi_grid, rx_table, tx_table, cross = _coarse_tables(
        cfg, link, d, scenario.phi_grid_max
    )

    # The model has constant entry magnitude, so minimizing the Frobenius
    # mismatch equals maximizing Re<model, estimate> over the grid.
    weights = (np.conj(entries) * cross).astype(np.complex64)
    score = np.real(
        np.complex64(consts.prefactor) * np.sum((rx_table @ weights) * tx_table, axis=1)
    )
    best = int(np.argmax(score))
    theta = float(theta_grid[best // PHI_GRID_STEPS])
    phi = float(phi_grid[best % PHI_GRID_STEPS])

    def objective(th: float, ph: float) -> float:
        return float(np.linalg.norm(entries - _model_entries(cfg, link, d, th, ph)))

    theta_window = float(theta_grid[1] - theta_grid[0])
    phi_window = float(phi_grid[1] - phi_grid[0])
    for sweep in range(3):
        theta = _golden_section(
            lambda x: objective(x, phi), theta - theta_window, theta + theta_window, REFINE_TOL
        )
        phi = _golden_section(
            lambda x: objective(theta, x),
            max(0.0, phi - phi_window),
            min(scenario.phi_grid_max, phi + phi_window),
            REFINE_TOL,
        )
        theta_window = phi_window = 1e-7 if sweep == 0 else 1e-9

    theta_hat = float(wrap_angle(theta))
    phi_hat = float(phi)
    residual = _relative_misfit(entries, _model_entries(cfg, link, d, theta_hat, phi_hat))
    ambiguous = (
        phi_hat < 1e-9
        or phi_hat > 0.999 * scenario.phi_grid_max
        or residual > MISFIT_THRESHOLD
    )
    return AngleEstimate(theta_hat, phi_hat, residual, ambiguous, NLS)


def quantize_estimate(est: AngleEstimate, bits: int) -> AngleEstimate:
    """Uniformly quantize the fed-back angles to 2**bits levels per axis.

    The azimuth grid spans [0, 2*pi), the tilt grid [0, pi/2); both round
    to the nearest level.
    """
    if bits < 1:
        raise ValueError(f"quantizer needs at least 1 bit, got {bits}")
    levels = 2**bits
    theta_step = 2.0 * math.pi / levels
    phi_step = (math.pi / 2.0) / levels
    theta_q = wrap_angle(round(est.theta_hat / theta_step) * theta_step)
    phi_q = min(round(est.phi_hat / phi_step) * phi_step, (levels - 1) * phi_step)
    return replace(est, theta_hat=float(theta_q), phi_hat=float(phi_q))
