"""Figure rendering for oamlink sweep CSVs."""

from .render import (
    ANGLE_SURFACE,
    SNR_LINES,
    PlotDataError,
    PlotSpec,
    angle_grid,
    build_angle_figure,
    build_snr_figure,
    load_sweep,
    render,
    snr_line_series,
)

__version__ = "0.1.0"

__all__ = [
    "ANGLE_SURFACE",
    "SNR_LINES",
    "PlotDataError",
    "PlotSpec",
    "angle_grid",
    "build_angle_figure",
    "build_snr_figure",
    "load_sweep",
    "render",
    "snr_line_series",
]
