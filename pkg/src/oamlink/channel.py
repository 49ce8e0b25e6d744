"""Line-of-sight channel synthesis for the misaligned UCA pair.

Two models are provided.  The exact model keeps the true element-pair
distance in both amplitude and phase.  The far-field model replaces the
distance by its first-order expansion, which turns every entry into a
common complex prefactor times a pure phase driven by the distance cross
terms; that structure is what the closed-form angle recovery exploits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Pose, UcaPairConfig, distance_matrix, distance_term_arrays, link_range

SPEED_OF_LIGHT = 299_792_458.0

EXACT = "exact"
FARFIELD = "farfield"
ESTIMATED = "estimated"


@dataclass(frozen=True)
class LinkBudget:
    """Carrier frequency, common complex gain and per-element noise variance.

    The wavelength is derived from the frequency; ``beta`` gathers the
    element-level gain/phase constants and ``sigma2`` is the per-element
    receiver noise variance in watts.
    """

    f: float
    beta: complex = 1.0 + 0.0j
    sigma2: float = 0.0

    def __post_init__(self):
        if self.f <= 0.0:
            raise ValueError(f"carrier frequency must be positive, got {self.f}")
        if abs(self.beta) == 0.0:
            raise ValueError("beta must be nonzero")
        if self.sigma2 < 0.0:
            raise ValueError(f"noise variance must be >= 0, got {self.sigma2}")
        object.__setattr__(self, "beta", complex(self.beta))

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.f


@dataclass(frozen=True)
class ChannelConstants:
    """Constants of the far-field model.

    ``prefactor`` is the common complex gain of every entry;
    ``phase_scale`` is the purely imaginary factor (rad per m^2) that maps a
    distance cross term onto an entry phase.
    """

    prefactor: complex
    phase_scale: complex


@dataclass(frozen=True)
class ChannelMatrix:
    """V x K complex gains tagged with the model that generated them."""

    entries: np.ndarray
    model: str
    cfg: UcaPairConfig | None = None
    pose: Pose | None = None
    link: LinkBudget | None = None

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 2:
            raise ValueError(f"entries must be a 2-D matrix, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ValueError("channel entries must be finite")
        object.__setattr__(self, "entries", entries)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


def _as_entries(H) -> np.ndarray:
    return H.entries if isinstance(H, ChannelMatrix) else np.asarray(H, dtype=complex)


def channel_constants(cfg: UcaPairConfig, pose: Pose, link: LinkBudget) -> ChannelConstants:
    """Far-field prefactor and phase scale of the given link geometry."""
    lam = link.wavelength
    s = link_range(cfg, pose)
    prefactor = link.beta * lam / (4.0 * math.pi * pose.d) * np.exp(-2j * math.pi * s / lam)
    phase_scale = -2j * math.pi / (lam * s)
    return ChannelConstants(complex(prefactor), complex(phase_scale))


def gain_exact(cfg: UcaPairConfig, pose: Pose, link: LinkBudget, v: int, k: int) -> complex:
    """Exact free-space gain between receive element v and transmit element k."""
    from .geometry import exact_distance

    dist = exact_distance(cfg, pose, v, k)
    lam = link.wavelength
    return complex(link.beta * lam * np.exp(-2j * math.pi * dist / lam) / (4.0 * math.pi * dist))


def gain_farfield(cfg: UcaPairConfig, pose: Pose, link: LinkBudget, v: int, k: int) -> complex:
    """Far-field gain: prefactor times the cross-term phase."""
    from .geometry import distance_terms

    consts = channel_constants(cfg, pose, link)
    total = distance_terms(cfg, pose, v, k).total
    return complex(consts.prefactor * np.exp(consts.phase_scale * total))


def build_matrix(
    cfg: UcaPairConfig, pose: Pose, link: LinkBudget, model: str = FARFIELD
) -> ChannelMatrix:
    """Assemble the V x K channel matrix under the requested model."""
    if model == EXACT:
        dists = distance_matrix(cfg, pose)
        lam = link.wavelength
        entries = link.beta * lam * np.exp(-2j * math.pi * dists / lam) / (4.0 * math.pi * dists)
    elif model == FARFIELD:
        consts = channel_constants(cfg, pose, link)
        rx_terms, cross_terms, tx_terms = distance_term_arrays(cfg, pose)
        total = rx_terms[:, None] + cross_terms + tx_terms[None, :]
        entries = consts.prefactor * np.exp(consts.phase_scale * total)
    else:
        raise ValueError(f"unknown channel model {model!r}")
    return ChannelMatrix(entries=entries, model=model, cfg=cfg, pose=pose, link=link)


def tx_mode_matrix(cfg: UcaPairConfig) -> np.ndarray:
    """Unitary K x K mode matrix; column l holds e^{j (phi_k + a_t) l} / sqrt(K)."""
    az = cfg.tx_azimuths()
    modes = np.arange(cfg.K)
    return np.exp(1j * np.outer(az, modes)) / math.sqrt(cfg.K)


def rx_mode_matrix(cfg: UcaPairConfig) -> np.ndarray:
    """Unitary V x V mode matrix; column m holds e^{j (psi_v + a_r) m} / sqrt(V)."""
    az = cfg.rx_azimuths()
    modes = np.arange(cfg.V)
    return np.exp(1j * np.outer(az, modes)) / math.sqrt(cfg.V)


def mode_effective_gains(H, cfg: UcaPairConfig) -> np.ndarray:
    """Per-mode effective gains seen by each receive element, shape (V, K).

    Column l is the channel response to transmit mode l, i.e. the channel
    matrix times the l-th column of the unitary transmit mode matrix.
    """
    entries = _as_entries(H)
    if entries.shape[1] != cfg.K:
        raise ValueError(
            f"channel has {entries.shape[1]} columns, config has K={cfg.K}"
        )
    return entries @ tx_mode_matrix(cfg)
