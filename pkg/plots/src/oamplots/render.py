"""Render oamlink sweep CSVs into line charts and angle-surface heatmaps.

The renderer consumes only the CSV contract of the simulator (comment
lines starting with ``#``, a header row, one record per scheme/variant/
grid point) and never mutates its input.  Output is deterministic for a
fixed input file: colors follow the sorted (scheme, K) order, the SVG
hash salt is pinned and creation-date metadata is stripped.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np
import pandas as pd

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

SNR_LINES = "snr_lines"
ANGLE_SURFACE = "angle_surface"

_REQUIRED = {
    SNR_LINES: ["scheme", "se_variant", "K", "snr_db", "se_total"],
    ANGLE_SURFACE: ["scheme", "se_variant", "theta_deg", "phi_deg", "se_total"],
}

_HASH_SALT = "oamplots"


class PlotDataError(ValueError):
    """Raised when the CSV lacks required columns or the filter empties it."""


@dataclass(frozen=True)
class PlotSpec:
    """What to render: input CSV, figure kind, output path and filters."""

    csv_path: str
    kind: str
    out_path: str
    se_variant: str | None = None
    scheme: str = "ma"
    title: str | None = None

    def __post_init__(self):
        if self.kind not in (SNR_LINES, ANGLE_SURFACE):
            raise PlotDataError(f"unknown figure kind {self.kind!r}")


def load_sweep(csv_path: str, kind: str, se_variant: str | None) -> pd.DataFrame:
    """Load a sweep CSV, validate its columns and apply the variant filter."""
    frame = pd.read_csv(csv_path, comment="#")
    missing = [col for col in _REQUIRED[kind] if col not in frame.columns]
    if missing:
        raise PlotDataError(f"{csv_path} lacks required columns: {missing}")
    variants = sorted(frame["se_variant"].unique())
    if se_variant is None:
        se_variant = "sinr" if "sinr" in variants else variants[0]
    frame = frame[frame["se_variant"] == se_variant]
    if frame.empty:
        raise PlotDataError(
            f"no rows left after filtering se_variant={se_variant!r} "
            f"(file carries {variants})"
        )
    return frame


def snr_line_series(frame: pd.DataFrame) -> dict[tuple[str, int], pd.Series]:
    """Mean efficiency per SNR point for every (scheme, K), sorted."""
    series = {}
    for (scheme, count), group in frame.groupby(["scheme", "K"]):
        series[(str(scheme), int(count))] = group.groupby("snr_db")["se_total"].mean()
    return dict(sorted(series.items()))


def angle_grid(frame: pd.DataFrame, scheme: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Efficiency grid over (theta, phi) for one scheme.

    Returns (theta_deg values, phi_deg values, grid) with grid shape
    (len(phi), len(theta)); entries are means over seeds.
    """
    subset = frame[frame["scheme"] == scheme]
    if subset.empty:
        raise PlotDataError(f"no rows for scheme {scheme!r}")
    pivot = subset.pivot_table(index="phi_deg", columns="theta_deg", values="se_total")
    pivot = pivot.sort_index(axis=0).sort_index(axis=1)
    if pivot.isna().any().any():
        raise PlotDataError("angle grid is incomplete (missing (theta, phi) cells)")
    return pivot.columns.to_numpy(float), pivot.index.to_numpy(float), pivot.to_numpy(float)


def _color_for(position: int):
    palette = plt.get_cmap("tab10").colors
    return palette[position % len(palette)]


def build_snr_figure(frame: pd.DataFrame, title: str | None):
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for position, ((scheme, count), series) in enumerate(snr_line_series(frame).items()):
        ax.plot(
            series.index.to_numpy(float),
            series.to_numpy(float),
            marker="o",
            color=_color_for(position),
            label=f"{scheme}, K={count}",
        )
    ax.set_xlabel("per-element receive SNR (dB)")
    ax.set_ylabel("spectrum efficiency (bit/s/Hz)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return fig


def build_angle_figure(frame: pd.DataFrame, scheme: str, title: str | None):
    theta, phi, grid = angle_grid(frame, scheme)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    mesh = ax.pcolormesh(theta, phi, grid, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="spectrum efficiency (bit/s/Hz)")
    ax.set_xlabel("azimuth theta (deg)")
    ax.set_ylabel("tilt phi (deg)")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return fig


def render(spec: PlotSpec) -> str:
    """Render the requested figure and return the output path."""
    frame = load_sweep(spec.csv_path, spec.kind, spec.se_variant)
    plt.rcParams["svg.hashsalt"] = _HASH_SALT
    if spec.kind == SNR_LINES:
        fig = build_snr_figure(frame, spec.title)
    else:
        fig = build_angle_figure(frame, spec.scheme, spec.title)
    suffix = Path(spec.out_path).suffix.lower()
    metadata = None
    if suffix == ".svg":
        metadata = {"Date": None}
    elif suffix == ".pdf":
        metadata = {"CreationDate": None}
    try:
        fig.savefig(spec.out_path, metadata=metadata)
    finally:
        plt.close(fig)
    return spec.out_path
