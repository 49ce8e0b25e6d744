"""Link-level toolkit for misaligned UCA-based OAM radio links.

Synthesizes exact and far-field channel matrices for a transmit/receive
pair of uniform circular arrays whose boresights are misaligned, recovers
the misalignment angles from pilots, applies the movable-antenna rotation
and quantifies spectrum efficiency before and after alignment.
"""

from .alignment import LoopReport, apply_ma_correction, run_closed_loop
from .channel import (
    ChannelConstants,
    ChannelMatrix,
    LinkBudget,
    SPEED_OF_LIGHT,
    build_matrix,
    channel_constants,
    gain_exact,
    gain_farfield,
    mode_effective_gains,
    rx_mode_matrix,
    tx_mode_matrix,
)
from .config import ConfigError, RunConfig, parse_config, parse_config_text, render_config
from .estimation import (
    AngleEstimate,
    EstimationScenario,
    ambiguity_bound,
    closed_form_angles,
    lmmse_estimate,
    nls_angles,
    quantize_estimate,
)
from .geometry import (
    DistanceTerms,
    Pose,
    UcaPairConfig,
    angular_separation,
    approx_distance,
    distance_matrix,
    distance_terms,
    exact_distance,
    link_range,
    rx_element_position,
    tx_element_position,
)
from .metrics import (
    ApproximationReport,
    SeBreakdown,
    approximation_report,
    se_mode_snr,
    se_sinr,
)
from .oam_signal import NoiseSpec, demodulate, modulate, noise_samples, pilot_matrix, transmit

__version__ = "0.1.0"

__all__ = [
    "AngleEstimate",
    "ApproximationReport",
    "ChannelConstants",
    "ChannelMatrix",
    "ConfigError",
    "DistanceTerms",
    "EstimationScenario",
    "LinkBudget",
    "LoopReport",
    "NoiseSpec",
    "Pose",
    "RunConfig",
    "SeBreakdown",
    "SPEED_OF_LIGHT",
    "UcaPairConfig",
    "ambiguity_bound",
    "angular_separation",
    "apply_ma_correction",
    "approx_distance",
    "approximation_report",
    "build_matrix",
    "channel_constants",
    "closed_form_angles",
    "demodulate",
    "distance_matrix",
    "distance_terms",
    "exact_distance",
    "gain_exact",
    "gain_farfield",
    "link_range",
    "lmmse_estimate",
    "mode_effective_gains",
    "modulate",
    "nls_angles",
    "noise_samples",
    "parse_config",
    "parse_config_text",
    "pilot_matrix",
    "quantize_estimate",
    "render_config",
    "run_closed_loop",
    "rx_element_position",
    "rx_mode_matrix",
    "se_mode_snr",
    "se_sinr",
    "transmit",
    "tx_element_position",
    "tx_mode_matrix",
]
