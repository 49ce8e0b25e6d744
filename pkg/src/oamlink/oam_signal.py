"""OAM modulation, noisy transmission and mode demodulation.

Modulation maps one symbol per OAM mode onto the transmit elements through
the unitary mode matrix; demodulation applies the conjugate transform on
the receive side.  Receiver noise comes from a counter-based generator
keyed by (seed, element, slot), so samples are reproducible and
order-independent regardless of how a block is assembled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelMatrix, rx_mode_matrix, tx_mode_matrix
from .geometry import UcaPairConfig

_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_SLOT_SALT = np.uint64(0xD1B54A32D192ED03)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise variance (watts per element) and the deterministic stream seed."""

    sigma2: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma2 < 0.0:
            raise ValueError(f"noise variance must be >= 0, got {self.sigma2}")


def _mix64(x: np.ndarray) -> np.ndarray:
    """Finalizer with full avalanche on 64-bit words (splitmix64 style)."""
    x = (x ^ (x >> np.uint64(30))) * _MIX_1
    x = (x ^ (x >> np.uint64(27))) * _MIX_2
    return x ^ (x >> np.uint64(31))


def _keyed_words(seed: int, elements: np.ndarray, slots: np.ndarray) -> np.ndarray:
    """One well-mixed 64-bit word per (seed, element, slot) triple."""
    # numpy wraps uint64 arrays silently but warns on scalars, so the seed
    # travels as a 1x1 array.
    seed_arr = np.full((1, 1), seed & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64)
    base = _mix64(seed_arr + _GOLDEN)
    h = _mix64(base ^ (elements.astype(np.uint64) * _GOLDEN + np.uint64(1)))
    return _mix64(h ^ (slots.astype(np.uint64) * _SLOT_SALT + np.uint64(1)))


def noise_samples(
    noise: NoiseSpec, num_elements: int, num_slots: int = 1, first_slot: int = 0
) -> np.ndarray:
    """Circularly-symmetric complex Gaussian block, shape (elements, slots).

    Each sample has total variance ``sigma2`` and depends only on its own
    (seed, element, slot) key: generating a block, a column or a single
    sample yields bit-identical values.
    """
    elements = np.arange(num_elements, dtype=np.uint64)[:, None]
    slots = np.arange(first_slot, first_slot + num_slots, dtype=np.uint64)[None, :]
    words = _keyed_words(noise.seed, elements, slots)
    follow = _mix64(words + _GOLDEN)
    # 53-bit uniforms; the +1 keeps the log argument strictly positive.
    u1 = ((words >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    u2 = (follow >> np.uint64(11)).astype(np.float64) * 2.0**-53
    radius = np.sqrt(-2.0 * np.log(u1))
    scale = math.sqrt(noise.sigma2 / 2.0)
    return scale * radius * (np.cos(2.0 * math.pi * u2) + 1j * np.sin(2.0 * math.pi * u2))


def modulate(s: np.ndarray, cfg: UcaPairConfig) -> np.ndarray:
    """Element-domain transmit signal for one symbol per OAM mode.

    x_k = sum_l s_l e^{j (phi_k + a_t) l} / sqrt(K); energy is preserved
    because the mode matrix is unitary.
    """
    s = np.asarray(s, dtype=complex)
    if s.shape != (cfg.K,):
        raise ValueError(f"expected {cfg.K} mode symbols, got shape {s.shape}")
    return tx_mode_matrix(cfg) @ s


def transmit(H, x: np.ndarray, noise: NoiseSpec, first_slot: int = 0) -> np.ndarray:
    """Propagate element signals through the channel and add receiver noise.

    ``x`` may be a single slot (K,) or a block (K, T) with one column per
    slot; slot t of a block uses noise keys ``first_slot + t``.
    sigma2 = 0 returns H @ x exactly.
    """
    entries = H.entries if isinstance(H, ChannelMatrix) else np.asarray(H, dtype=complex)
    x = np.asarray(x, dtype=complex)
    if x.shape[0] != entries.shape[1]:
        raise ValueError(
            f"signal has {x.shape[0]} elements, channel expects {entries.shape[1]}"
        )
    if x.ndim == 1:
        received = entries @ x
        if noise.sigma2 > 0.0:
            received = received + noise_samples(noise, entries.shape[0], 1, first_slot)[:, 0]
        return received
    if x.ndim == 2:
        received = entries @ x
        if noise.sigma2 > 0.0:
            received = received + noise_samples(noise, entries.shape[0], x.shape[1], first_slot)
        return received
    raise ValueError(f"signal must be 1-D or 2-D, got shape {x.shape}")


def demodulate(r: np.ndarray, cfg: UcaPairConfig) -> np.ndarray:
    """Receive-side mode transform: s_m = sum_v r_v e^{-j (psi_v + a_r) m} / sqrt(V)."""
    r = np.asarray(r, dtype=complex)
    if r.shape != (cfg.V,):
        raise ValueError(f"expected {cfg.V} element samples, got shape {r.shape}")
    return rx_mode_matrix(cfg).conj().T @ r


def pilot_matrix(cfg: UcaPairConfig, power: float) -> np.ndarray:
    """Orthogonal pilot block, K elements x K slots.

    Entry (k, t) is sqrt(power) e^{-j 2 pi k t / K}, so every element
    transmits ``power`` watts in every slot and X X^H = power * K * I.
    """
    if power <= 0.0:
        raise ValueError(f"pilot power must be positive, got {power}")
    k = np.arange(cfg.K)
    return math.sqrt(power) * np.exp(-2j * math.pi * np.outer(k, k) / cfg.K)
