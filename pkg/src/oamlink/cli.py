"""Command-line front end: scenario runs, sweeps and the self-test suite.

CSV outputs are deterministic for a fixed configuration and seed; the only
non-reproducible line is a timestamp comment, suppressible with
``--no-timestamp``.  The receive SNR convention used throughout is the
per-element ratio ``power_total * |prefactor|^2 / sigma2``, which makes
curves comparable across element counts.
"""

from __future__ import annotations

import argparse
import math
import sys
from datetime import datetime, timezone

import numpy as np

from .alignment import LoopReport, run_closed_loop
from .channel import LinkBudget, build_matrix, channel_constants, mode_effective_gains
from .config import (
    ConfigError,
    RunConfig,
    beta_complex,
    config_comment_lines,
    parse_config,
)
from .estimation import (
    EstimationScenario,
    ambiguity_bound,
    closed_form_angles,
    lmmse_estimate,
    nls_angles,
)
from .geometry import (
    Pose,
    UcaPairConfig,
    distance_matrix,
    distance_term_arrays,
)
from .metrics import approximation_report, se_mode_snr, se_sinr
from .oam_signal import NoiseSpec, modulate, pilot_matrix, transmit

SNR_DEFINITION = "per-element receive SNR = power_total * |prefactor|^2 / sigma2"


def _base_columns(max_k: int) -> list[str]:
    return (
        ["scheme", "model", "se_variant", "K", "V", "snr_db", "theta_deg", "phi_deg", "seed", "se_total"]
        + [f"se_mode_{i}" for i in range(max_k)]
        + ["theta_hat_deg", "phi_hat_deg", "ambiguous", "residual"]
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _write_csv(path: str | None, comments: list[str], header: list[str], rows: list[list]) -> None:
    lines = comments + [",".join(header)] + [",".join(_fmt(x) for x in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


def _comments(cfg: RunConfig, command: str, no_timestamp: bool) -> list[str]:
    comments = [f"# oamlink {command}", f"# {SNR_DEFINITION}"]
    if not no_timestamp:
        comments.append(f"# generated {datetime.now(timezone.utc).isoformat()}")
    comments.extend(config_comment_lines(cfg))
    return comments


def _uca(cfg: RunConfig, k: int | None = None, v: int | None = None) -> UcaPairConfig:
    return UcaPairConfig(
        K=k if k is not None else cfg.k,
        V=v if v is not None else cfg.v,
        R_t=cfg.r_t,
        R_r=cfg.r_r,
        a_t=math.radians(cfg.a_t_deg),
        a_r=math.radians(cfg.a_r_deg),
    )


def _pose(cfg: RunConfig, theta_deg: float | None = None, phi_deg: float | None = None) -> Pose:
    return Pose(
        d=cfg.d_m,
        theta=math.radians(cfg.theta_deg if theta_deg is None else theta_deg),
        phi=math.radians(cfg.phi_deg if phi_deg is None else phi_deg),
    )


def _entry_power(cfg: RunConfig, uca: UcaPairConfig, pose: Pose) -> float:
    link = LinkBudget(f=cfg.f_hz, beta=beta_complex(cfg))
    return abs(channel_constants(uca, pose, link).prefactor) ** 2


def _sigma2_for_snr(cfg: RunConfig, entry_power: float, snr_db: float) -> float:
    return cfg.power_total_w * entry_power / 10.0 ** (snr_db / 10.0)


def _pilot_sigma2(cfg: RunConfig, entry_power: float) -> float:
    if math.isinf(cfg.pilot_snr_db):
        return 0.0
    return cfg.power_total_w * entry_power / 10.0 ** (cfg.pilot_snr_db / 10.0)


def _variants(cfg: RunConfig) -> list[str]:
    return ["paper", "sinr"] if cfg.se_variant == "both" else [cfg.se_variant]


def _se_breakdown(H, uca: UcaPairConfig, powers: np.ndarray, sigma2: float, variant: str):
    if variant == "sinr":
        return se_sinr(H, uca, powers, sigma2)
    return se_mode_snr(mode_effective_gains(H, uca), powers, np.full(uca.K, sigma2))


def _pad_modes(per_mode: np.ndarray, max_k: int) -> list:
    return list(per_mode) + [None] * (max_k - len(per_mode))


def _scenario(cfg: RunConfig, uca: UcaPairConfig, pose: Pose, link: LinkBudget) -> EstimationScenario:
    return EstimationScenario(
        cfg=uca,
        pose=pose,
        link=link,
        pilot_power=cfg.power_total_w / uca.K,
        a=math.radians(cfg.a_t_deg),
        phi_grid_max=math.radians(cfg.nls_phi_max_deg),
    )


def _loop(cfg: RunConfig, uca: UcaPairConfig, pose: Pose, sigma2: float, seed: int) -> LoopReport:
    link = LinkBudget(f=cfg.f_hz, beta=beta_complex(cfg), sigma2=sigma2)
    scenario = _scenario(cfg, uca, pose, link)
    entry_power = _entry_power(cfg, uca, pose)
    noise = NoiseSpec(sigma2=_pilot_sigma2(cfg, entry_power), seed=seed)
    powers = np.full(uca.K, cfg.power_total_w / uca.K)
    return run_closed_loop(
        scenario,
        noise,
        cfg.model,
        powers=powers,
        data_sigma2=sigma2,
        se_variant="sinr" if cfg.se_variant != "paper" else "paper",
        tolerance=cfg.tolerance_rad,
        max_iterations=cfg.iterations,
        quantizer_bits=cfg.quantizer_bits or None,
    )


def _grid_rows(cfg: RunConfig, points, max_k: int) -> list[list]:
    """Rows for (uca, theta_deg, phi_deg, snr_db, seed) grid points.

    Each point yields a baseline row and a corrected row per selected
    variant; the grid degree values are echoed verbatim.
    """
    rows = []
    for uca, theta_deg, phi_deg, snr_db, seed in points:
        pose = _pose(cfg, theta_deg=theta_deg, phi_deg=phi_deg)
        entry_power = _entry_power(cfg, uca, pose)
        sigma2 = _sigma2_for_snr(cfg, entry_power, snr_db)
        link = LinkBudget(f=cfg.f_hz, beta=beta_complex(cfg), sigma2=sigma2)
        powers = np.full(uca.K, cfg.power_total_w / uca.K)
        before = build_matrix(uca, pose, link, cfg.model)
        report = _loop(cfg, uca, pose, sigma2, seed)
        after = build_matrix(uca, report.corrected, link, cfg.model)
        est = report.estimate
        for variant in _variants(cfg):
            se_b = _se_breakdown(before, uca, powers, sigma2, variant)
            rows.append(
                ["no_ma", cfg.model, variant, uca.K, uca.V, snr_db,
                 theta_deg, phi_deg, seed, se_b.total]
                + _pad_modes(se_b.per_mode, max_k)
                + [None, None, None, None]
            )
            se_a = _se_breakdown(after, uca, powers, sigma2, variant)
            rows.append(
                ["ma", cfg.model, variant, uca.K, uca.V, snr_db,
                 theta_deg, phi_deg, seed, se_a.total]
                + _pad_modes(se_a.per_mode, max_k)
                + [math.degrees(est.theta_hat), math.degrees(est.phi_hat),
                   est.ambiguous, est.residual]
            )
    return rows


def cmd_sweep_snr(cfg: RunConfig, out: str | None, no_timestamp: bool) -> int:
    points = [
        (_uca(cfg, k=count, v=count), cfg.theta_deg, cfg.phi_deg, float(snr_db), cfg.seed + idx)
        for count in cfg.element_counts
        for snr_db in cfg.snr_grid()
        for idx in range(cfg.num_seeds)
    ]
    max_k = max(cfg.element_counts)
    rows = _grid_rows(cfg, points, max_k)
    _write_csv(out, _comments(cfg, "sweep-snr", no_timestamp), _base_columns(max_k), rows)
    return 0


def cmd_sweep_angle(cfg: RunConfig, out: str | None, no_timestamp: bool) -> int:
    uca = _uca(cfg)
    points = [
        (uca, float(theta), float(phi), cfg.snr_db, cfg.seed + idx)
        for theta in cfg.theta_grid_deg()
        for phi in cfg.phi_grid_deg()
        for idx in range(cfg.num_seeds)
    ]
    rows = _grid_rows(cfg, points, uca.K)
    _write_csv(out, _comments(cfg, "sweep-angle", no_timestamp), _base_columns(uca.K), rows)
    return 0


def cmd_channel(cfg: RunConfig, out: str | None, no_timestamp: bool) -> int:
    uca, pose = _uca(cfg), _pose(cfg)
    link = LinkBudget(f=cfg.f_hz, beta=beta_complex(cfg))
    consts = channel_constants(uca, pose, link)
    report = approximation_report(uca, pose, link)
    print(f"wavelength_m = {link.wavelength:.9g}")
    print(f"|prefactor| = {abs(consts.prefactor):.9g}")
    print(f"|phase_scale| = {abs(consts.phase_scale):.9g} rad/m^2")
    print(f"max_rel_distance_error = {report.max_rel_distance_error:.6g}")
    print(f"max_rel_gain_error = {report.max_rel_gain_error:.6g}")
    print(f"mean_abs_phase_error = {report.mean_abs_phase_error:.6g} rad")
    if out is not None:
        header = ["model", "v", "k", "re", "im", "abs", "phase_rad"]
        rows = []
        for model in ("exact", "farfield"):
            entries = build_matrix(uca, pose, link, model).entries
            for v in range(uca.V):
                for k in range(uca.K):
                    g = entries[v, k]
                    rows.append([model, v, k, g.real, g.imag, abs(g), np.angle(g)])
        _write_csv(out, _comments(cfg, "channel", no_timestamp), header, rows)
    return 0


def cmd_estimate(cfg: RunConfig, out: str | None, no_timestamp: bool) -> int:
    uca, pose = _uca(cfg), _pose(cfg)
    entry_power = _entry_power(cfg, uca, pose)
    sigma2 = _sigma2_for_snr(cfg, entry_power, cfg.snr_db)
    link = LinkBudget(f=cfg.f_hz, beta=beta_complex(cfg), sigma2=sigma2)
    scenario = _scenario(cfg, uca, pose, link)
    noise = NoiseSpec(sigma2=_pilot_sigma2(cfg, entry_power), seed=cfg.seed)
    pilots = pilot_matrix(uca, scenario.pilot_power)
    channel = build_matrix(uca, pose, link, cfg.model)
    received = transmit(channel, pilots, noise)
    h_hat = lmmse_estimate(received, pilots, noise.sigma2, entry_power)
    closed = closed_form_angles(h_hat, scenario)
    search = nls_angles(h_hat, scenario)
    bound = ambiguity_bound(uca, link, pose.d)
    print(f"true: theta_deg = {math.degrees(pose.theta):.9g}, phi_deg = {math.degrees(pose.phi):.9g}")
    for est in (closed, search):
        print(
            f"{est.method}: theta_hat_deg = {math.degrees(est.theta_hat):.9g}, "
            f"phi_hat_deg = {math.degrees(est.phi_hat):.9g}, "
            f"ambiguous = {est.ambiguous}, residual = {est.residual:.6g}"
        )
    print(f"ambiguity_bound_deg = {math.degrees(bound):.9g}")
    if out is not None:
        header = ["method", "theta_deg", "phi_deg", "theta_hat_deg", "phi_hat_deg", "ambiguous", "residual"]
        rows = [
            [est.method, math.degrees(pose.theta), math.degrees(pose.phi),
             math.degrees(est.theta_hat), math.degrees(est.phi_hat), est.ambiguous, est.residual]
            for est in (closed, search)
        ]
        _write_csv(out, _comments(cfg, "estimate", no_timestamp), header, rows)
    return 0


def cmd_align(cfg: RunConfig, out: str | None, no_timestamp: bool) -> int:
    uca, pose = _uca(cfg), _pose(cfg)
    entry_power = _entry_power(cfg, uca, pose)
    sigma2 = _sigma2_for_snr(cfg, entry_power, cfg.snr_db)
    report = _loop(cfg, uca, pose, sigma2, cfg.seed)
    est = report.estimate
    print(f"estimate ({est.method}): theta_hat_deg = {math.degrees(est.theta_hat):.9g}, "
          f"phi_hat_deg = {math.degrees(est.phi_hat):.9g}, ambiguous = {est.ambiguous}")
    print(f"residual_angle_deg = {math.degrees(report.residual_angle):.9g}")
    print(f"se_before = {report.se_before:.9g} bit/s/Hz")
    print(f"se_after = {report.se_after:.9g} bit/s/Hz")
    print(f"iterations = {report.iterations}")
    if out is not None:
        header = ["theta_deg", "phi_deg", "theta_hat_deg", "phi_hat_deg", "ambiguous",
                  "residual_angle_rad", "se_before", "se_after", "iterations"]
        rows = [[math.degrees(pose.theta), math.degrees(pose.phi),
                 math.degrees(est.theta_hat), math.degrees(est.phi_hat), est.ambiguous,
                 report.residual_angle, report.se_before, report.se_after, report.iterations]]
        _write_csv(out, _comments(cfg, "align", no_timestamp), header, rows)
    return 0


# --- self-test -------------------------------------------------------------

def _check_distance_identity(terms_fn) -> tuple[bool, str]:
    rng = np.random.default_rng(20240517)
    worst = 0.0
    for _ in range(1000):
        uca = UcaPairConfig(
            K=int(rng.integers(1, 17)),
            V=int(rng.integers(1, 17)),
            R_t=float(rng.uniform(0.05, 2.0)),
            R_r=float(rng.uniform(0.05, 2.0)),
            a_t=float(rng.uniform(0.0, 2.0 * math.pi)),
            a_r=float(rng.uniform(0.0, 2.0 * math.pi)),
        )
        pose = Pose(
            d=float(rng.uniform(0.5, 50.0)),
            theta=float(rng.uniform(0.0, 2.0 * math.pi)),
            phi=float(rng.uniform(0.0, math.pi / 2.0 * 0.999)),
        )
        v = int(rng.integers(0, uca.V))
        k = int(rng.integers(0, uca.K))
        squared = distance_matrix(uca, pose)[v, k] ** 2
        rx_terms, cross_terms, tx_terms = terms_fn(uca, pose)
        total = rx_terms[v] + cross_terms[v, k] + tx_terms[k]
        base = pose.d**2 + uca.R_t**2 + uca.R_r**2
        worst = max(worst, abs(squared - base - 2.0 * total) / squared)
    return worst <= 1e-12, f"max relative defect {worst:.3g}"


def _check_circulant() -> tuple[bool, str]:
    worst = 0.0
    for count in (4, 8, 16):
        uca = UcaPairConfig(K=count, V=count)
        link = LinkBudget(f=5.8e9)
        H = build_matrix(uca, Pose(d=1.0), link, "farfield")
        from .channel import rx_mode_matrix, tx_mode_matrix

        mode = rx_mode_matrix(uca).conj().T @ H.entries @ tx_mode_matrix(uca)
        off = mode - np.diag(np.diag(mode))
        worst = max(worst, np.max(np.abs(off)) / np.max(np.abs(np.diag(mode))))
    return worst <= 1e-10, f"max off-diagonal leakage {worst:.3g}"


def _check_parseval() -> tuple[bool, str]:
    rng = np.random.default_rng(7)
    worst = 0.0
    for count in (4, 8, 16):
        uca = UcaPairConfig(K=count, V=count, a_t=0.3, a_r=0.3)
        s = rng.normal(size=count) + 1j * rng.normal(size=count)
        x = modulate(s, uca)
        worst = max(worst, abs(np.sum(np.abs(x) ** 2) - np.sum(np.abs(s) ** 2)))
    return worst <= 1e-12, f"max energy defect {worst:.3g}"


def _check_lmmse_noiseless() -> tuple[bool, str]:
    uca = UcaPairConfig(K=8, V=8)
    link = LinkBudget(f=5.8e9)
    pose = Pose(d=1.0337670965517241, theta=0.7, phi=0.017)
    H = build_matrix(uca, pose, link, "farfield")
    pilots = pilot_matrix(uca, 0.125)
    received = transmit(H, pilots, NoiseSpec(sigma2=0.0, seed=0))
    h_hat = lmmse_estimate(received, pilots, 0.0, abs(channel_constants(uca, pose, link).prefactor) ** 2)
    err = np.max(np.abs(h_hat.entries - H.entries)) / np.max(np.abs(H.entries))
    return err <= 1e-12, f"max relative entry error {err:.3g}"


def _check_round_trip() -> tuple[bool, str]:
    uca = UcaPairConfig(K=8, V=8)
    link = LinkBudget(f=5.8e9)
    d = 20.0 * link.wavelength
    worst = 0.0
    for theta_deg in (10.0, 100.0, 190.0, 280.0):
        for phi_deg in (0.3, 0.8, 1.3):
            pose = Pose(d=d, theta=math.radians(theta_deg), phi=math.radians(phi_deg))
            scenario = EstimationScenario(cfg=uca, pose=pose, link=link)
            H = build_matrix(uca, pose, link, "farfield")
            for est in (closed_form_angles(H, scenario), nls_angles(H, scenario)):
                worst = max(
                    worst,
                    abs(est.phi_hat - pose.phi),
                    abs((est.theta_hat - pose.theta + math.pi) % (2.0 * math.pi) - math.pi),
                )
    return worst <= 1e-8, f"max angle error {worst:.3g} rad"


def run_selftest(distance_terms_fn=None) -> list[tuple[str, bool, str]]:
    """Run the invariant suite; the hook swaps the distance-term implementation."""
    terms_fn = distance_terms_fn or distance_term_arrays
    checks = [
        ("distance-identity", lambda: _check_distance_identity(terms_fn)),
        ("farfield-circulant", _check_circulant),
        ("modulation-parseval", _check_parseval),
        ("lmmse-noiseless-exact", _check_lmmse_noiseless),
        ("estimator-round-trip", _check_round_trip),
    ]
    results = []
    for name, check in checks:
        try:
            ok, detail = check()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, ok, detail))
    return results


def cmd_selftest() -> int:
    results = run_selftest()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name} ({detail})")
    return 0 if all(ok for _, ok, _ in results) else 1


# --- argument plumbing -----------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oamlink", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("selftest", "channel", "estimate", "align", "sweep-snr", "sweep-angle"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", metavar="PATH", default=None)
        cmd.add_argument("--out", metavar="PATH", default=None)
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--model", choices=("exact", "farfield"), default=None)
        cmd.add_argument("--se", choices=("paper", "sinr"), default=None)
        cmd.add_argument("--no-timestamp", action="store_true")
    return parser


def _load_config(args) -> RunConfig:
    cfg = parse_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.model is not None:
        cfg.model = args.model
    if args.se is not None:
        cfg.se_variant = args.se
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "selftest":
        return cmd_selftest()
    try:
        cfg = _load_config(args)
        dispatch = {
            "channel": cmd_channel,
            "estimate": cmd_estimate,
            "align": cmd_align,
            "sweep-snr": cmd_sweep_snr,
            "sweep-angle": cmd_sweep_angle,
        }
        return dispatch[args.command](cfg, args.out, args.no_timestamp)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
