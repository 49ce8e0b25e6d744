"""Geometry of a misaligned pair of uniform circular arrays.

The transmit array lies in the z = 0 plane, centred at the origin.  The
receive-array centre sits at distance ``d`` along the direction given by an
azimuth ``theta`` and a polar tilt ``phi``, and the receive plane stays
parallel to the transmit plane.  Everything downstream (channel synthesis,
angle recovery) consumes the element coordinates defined here and the
cross-term decomposition of the squared element-pair distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(angle):
    """Wrap an angle (scalar or ndarray) to [0, 2*pi)."""
    return np.mod(angle, TWO_PI)


def wrapped_difference(x, y):
    """Smallest signed difference x - y, wrapped to [-pi, pi)."""
    return np.mod(x - y + math.pi, TWO_PI) - math.pi


@dataclass(frozen=True)
class UcaPairConfig:
    """Element counts, radii and reference rotations of a TX/RX UCA pair.

    ``a_t`` and ``a_r`` are the rotations of the first element of each array
    away from zero azimuth; they are wrapped to [0, 2*pi) on construction.
    Element indices are 0-based throughout, with basic azimuths 2*pi*k/K on
    the transmit side and 2*pi*v/V on the receive side.
    """

    K: int
    V: int
    R_t: float = 0.5
    R_r: float = 0.5
    a_t: float = 0.0
    a_r: float = 0.0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.V < 1:
            raise ValueError(f"V must be >= 1, got {self.V}")
        if self.R_t <= 0.0 or self.R_r <= 0.0:
            raise ValueError("array radii must be positive")
        object.__setattr__(self, "a_t", float(wrap_angle(self.a_t)))
        object.__setattr__(self, "a_r", float(wrap_angle(self.a_r)))

    def tx_azimuths(self) -> np.ndarray:
        """Phase angles 2*pi*k/K + a_t of all transmit elements."""
        return TWO_PI * np.arange(self.K) / self.K + self.a_t

    def rx_azimuths(self) -> np.ndarray:
        """Phase angles 2*pi*v/V + a_r of all receive elements."""
        return TWO_PI * np.arange(self.V) / self.V + self.a_r


@dataclass(frozen=True)
class Pose:
    """Position of the receive-array centre relative to the transmit array.

    Attributes
    ----------
    d : float
        Centre-to-centre distance in metres, > 0.
    theta : float
        Azimuth of the centre offset, wrapped to [0, 2*pi) on construction.
    phi : float
        Polar tilt away from the transmit-array normal, in [0, pi/2).
    """

    d: float
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if self.d <= 0.0:
            raise ValueError(f"centre distance must be positive, got {self.d}")
        if not 0.0 <= self.phi < math.pi / 2.0:
            raise ValueError(f"tilt must lie in [0, pi/2), got {self.phi}")
        object.__setattr__(self, "theta", float(wrap_angle(self.theta)))

    def boresight(self) -> np.ndarray:
        """Unit vector from the transmit centre towards the receive centre."""
        return direction_vector(self.theta, self.phi)

    def rx_center(self) -> np.ndarray:
        """Coordinates of the receive-array centre."""
        return self.d * self.boresight()


@dataclass(frozen=True)
class DistanceTerms:
    """Cross terms of one squared element-pair distance.

    ``exact_distance**2 = d**2 + R_t**2 + R_r**2 + 2 * total`` where
    ``total = rx_term + cross_term + tx_term``:

    - ``rx_term``   couples the centre offset with the receive element
      azimuth: d * R_r * sin(phi) * cos(psi_v + a_r - theta);
    - ``cross_term`` couples the two element azimuths:
      -R_t * R_r * cos(psi_v - phi_k + a_r - a_t);
    - ``tx_term``   couples the centre offset with the transmit element
      azimuth: -d * R_t * sin(phi) * cos(phi_k + a_t - theta).
    """

    rx_term: float
    cross_term: float
    tx_term: float

    @property
    def total(self) -> float:
        return self.rx_term + self.cross_term + self.tx_term


def direction_vector(theta: float, phi: float) -> np.ndarray:
    """Unit vector with azimuth ``theta`` and polar angle ``phi``."""
    sin_phi = math.sin(phi)
    return np.array(
        [sin_phi * math.cos(theta), sin_phi * math.sin(theta), math.cos(phi)]
    )


def _check_index(idx: int, count: int, name: str) -> None:
    if not 0 <= idx < count:
        raise IndexError(f"{name} index {idx} out of range [0, {count})")


def tx_positions(cfg: UcaPairConfig) -> np.ndarray:
    """Coordinates of all transmit elements, shape (K, 3)."""
    az = cfg.tx_azimuths()
    return np.column_stack(
        [cfg.R_t * np.cos(az), cfg.R_t * np.sin(az), np.zeros(cfg.K)]
    )


def rx_positions(cfg: UcaPairConfig, pose: Pose) -> np.ndarray:
    """Coordinates of all receive elements, shape (V, 3).

    The receive plane is parallel to the transmit plane, so the z
    coordinate is d * cos(phi) for every element.
    """
    az = cfg.rx_azimuths()
    center = pose.rx_center()
    return np.column_stack(
        [
            center[0] + cfg.R_r * np.cos(az),
            center[1] + cfg.R_r * np.sin(az),
            np.full(cfg.V, center[2]),
        ]
    )


def tx_element_position(cfg: UcaPairConfig, k: int) -> np.ndarray:
    """Coordinates of transmit element ``k`` (0-based)."""
    _check_index(k, cfg.K, "transmit element")
    return tx_positions(cfg)[k]


def rx_element_position(cfg: UcaPairConfig, pose: Pose, v: int) -> np.ndarray:
    """Coordinates of receive element ``v`` (0-based)."""
    _check_index(v, cfg.V, "receive element")
    return rx_positions(cfg, pose)[v]


def distance_matrix(cfg: UcaPairConfig, pose: Pose) -> np.ndarray:
    """Euclidean element-pair distances, shape (V, K)."""
    diff = rx_positions(cfg, pose)[:, None, :] - tx_positions(cfg)[None, :, :]
    return np.linalg.norm(diff, axis=-1)


def exact_distance(cfg: UcaPairConfig, pose: Pose, v: int, k: int) -> float:
    """Euclidean distance between receive element v and transmit element k."""
    _check_index(v, cfg.V, "receive element")
    _check_index(k, cfg.K, "transmit element")
    return float(
        np.linalg.norm(rx_element_position(cfg, pose, v) - tx_element_position(cfg, k))
    )


def distance_term_arrays(
    cfg: UcaPairConfig, pose: Pose
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cross terms of the squared distances for all pairs at once.

    Returns ``(rx_terms, cross_terms, tx_terms)`` with shapes (V,), (V, K)
    and (K,); see :class:`DistanceTerms` for the per-pair identity.
    """
    rx_az = cfg.rx_azimuths()
    tx_az = cfg.tx_azimuths()
    sin_phi = math.sin(pose.phi)
    rx_terms = pose.d * cfg.R_r * sin_phi * np.cos(rx_az - pose.theta)
    cross_terms = -cfg.R_t * cfg.R_r * np.cos(rx_az[:, None] - tx_az[None, :])
    tx_terms = -pose.d * cfg.R_t * sin_phi * np.cos(tx_az - pose.theta)
    return rx_terms, cross_terms, tx_terms


def distance_terms(cfg: UcaPairConfig, pose: Pose, v: int, k: int) -> DistanceTerms:
    """Cross terms of the squared distance for the pair (v, k)."""
    _check_index(v, cfg.V, "receive element")
    _check_index(k, cfg.K, "transmit element")
    rx_terms, cross_terms, tx_terms = distance_term_arrays(cfg, pose)
    return DistanceTerms(
        float(rx_terms[v]), float(cross_terms[v, k]), float(tx_terms[k])
    )


def link_range(cfg: UcaPairConfig, pose: Pose) -> float:
    """Zeroth-order element-pair distance sqrt(d^2 + R_t^2 + R_r^2)."""
    return math.sqrt(pose.d**2 + cfg.R_t**2 + cfg.R_r**2)


def approx_distance_matrix(cfg: UcaPairConfig, pose: Pose) -> np.ndarray:
    """First-order element-pair distances S + terms/S, shape (V, K)."""
    s = link_range(cfg, pose)
    rx_terms, cross_terms, tx_terms = distance_term_arrays(cfg, pose)
    total = rx_terms[:, None] + cross_terms + tx_terms[None, :]
    return s + total / s


def approx_distance(cfg: UcaPairConfig, pose: Pose, v: int, k: int) -> float:
    """First-order distance for the pair (v, k).

    Accurate when the cross terms are small against the squared link range;
    the metrics module reports the actual error instead of assuming it
    negligible.
    """
    _check_index(v, cfg.V, "receive element")
    _check_index(k, cfg.K, "transmit element")
    s = link_range(cfg, pose)
    return s + distance_terms(cfg, pose, v, k).total / s


def angular_separation(
    theta1: float, phi1: float, theta2: float, phi2: float
) -> float:
    """Arc angle between two directions given as (azimuth, polar) pairs.

    Result is in [0, pi].  Uses atan2 of the cross/dot products, which stays
    accurate for nearly parallel directions.
    """
    u1 = direction_vector(theta1, phi1)
    u2 = direction_vector(theta2, phi2)
    cross = np.linalg.norm(np.cross(u1, u2))
    return math.atan2(cross, float(np.dot(u1, u2)))
