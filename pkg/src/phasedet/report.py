"""Reference curves and figures of merit for a finished run."""

from __future__ import annotations

import math

import numpy as np

from . import reference as ref
from .detector import DetectorArray, density_profile
from .scenarios import ScenarioConfig, Snapshot

# agreement is only claimed once the packets have outgrown their initial width
MIN_CHECK_TIME = 2.0
MAX_FRAC_Z = 0.01
MAX_REL_L2 = 0.05
WALL_NODE_FRACTION = 0.02


def reference_curves(cfg: ScenarioConfig, x, t):
    """(exact density, large-t approximate density) at bin centers."""
    p = cfg.physics
    if cfg.kind == "single_packet":
        return (ref.density_single_exact(x, t, p.x0, p.v0, 0.5 / p.sigma_v),
                ref.density_single_approx(x, t, p.x0, p.v0, 1.0))
    if cfg.kind == "two_packets":
        return (ref.density_two_exact(x, t, p.x1, p.x2, p.v0, 0.5 / p.sigma_v),
                ref.density_two_approx(x, t, p.x1, p.x2, p.v0, 1.0, p.phi0))
    if cfg.kind == "wall":
        return (ref.density_wall_image(x, t, p.x0, p.v0, 0.5 / p.sigma_v, p.wall_x),
                ref.density_wall_approx(x, t, p.x0, p.v0, 1.0, p.wall_x, p.phi0))
    raise ValueError(f"no massive-particle reference for {cfg.kind}")


def expected_variance(cfg: ScenarioConfig, x, t, delta_x, exact):
    """Poisson variance (in counts) of the recorded count per bin."""
    scale = cfg.particles * delta_x
    p = cfg.physics
    if cfg.kind == "single_packet":
        return scale * exact
    if cfg.kind == "two_packets":
        amps = ref.two_channel_amplitudes(x, t, p.x1, p.x2, p.v0, p.phi0)
    else:
        amps = ref.wall_channel_amplitudes(x, t, p.x0, p.v0, p.wall_x, p.phi0)
    return ref.poisson_variance([math.sqrt(scale) * a for a in amps])


def fringe_window(cfg: ScenarioConfig, t):
    """(lo, hi, period) of the region where the channels overlap."""
    p = cfg.physics
    if cfg.kind == "two_packets":
        mid = 0.5 * (p.x1 + p.x2)
        return mid - 5.0, mid + 5.0, 2.0 * math.pi * t / (p.x2 - p.x1)
    if cfg.kind == "wall":
        return p.wall_x - 5.0, p.wall_x, math.pi * t / (p.wall_x - p.x0)
    return None


def snapshot_report(cfg: ScenarioConfig, snap: Snapshot, det: DetectorArray) -> dict:
    prof = density_profile(det, cfg.particles)
    x, t = prof.x, snap.time
    exact, approx = reference_curves(cfg, x, t)
    var = expected_variance(cfg, x, t, det.delta_x, exact)
    window = fringe_window(cfg, t)
    cmp_exact = ref.compare(x, prof.recorded_density, exact, cfg.particles, det.delta_x,
                            expected_variance=var,
                            visibility_window=window[:2] if window else None,
                            visibility_period=window[2] if window else None)
    cmp_approx = ref.compare(x, prof.recorded_density, approx)
    out = {
        "time": t,
        "delta_x": det.delta_x,
        "raw_total": int(prof.raw_count.sum()),
        "recorded_total": float(prof.recorded_count.sum()),
        "overflow": det.overflow,
        "rejected": det.rejected,
        "vs_exact": cmp_exact.summary(),
        "vs_approx": {"linf": cmp_approx.linf, "relative_l2": cmp_approx.relative_l2},
    }
    if window:
        lo, hi, period = window
        out["visibility_raw"] = ref.fringe_visibility(x, prof.raw_density, lo, hi, period)
        out["fringe_contrast"] = ref.fringe_contrast(x, prof.recorded_density, lo, hi, period)
        out["fringe_contrast_raw"] = ref.fringe_contrast(x, prof.raw_density, lo, hi, period)
    if cfg.kind == "wall":
        dens = prof.recorded_density
        out["wall_node_fraction"] = float(dens[-2:].max() / dens.max()) if dens.max() > 0 else 0.0
    return out


def checks(cfg: ScenarioConfig, reports: list[dict]) -> list[tuple[str, bool, str]]:
    """Pass/fail lines used by ``phasedet check``."""
    results = []
    for r in reports:
        t = r["time"]
        if cfg.kind == "wall":
            frac = r["wall_node_fraction"]
            results.append((f"t={t:g} wall node", frac < WALL_NODE_FRACTION,
                            f"{frac:.4f} of peak"))
        if t < MIN_CHECK_TIME:
            continue
        e = r["vs_exact"]
        results.append((f"t={t:g} |z|>3 fraction", e["frac_z_above_3"] <= MAX_FRAC_Z,
                        f"{e['frac_z_above_3']:.4f}"))
        results.append((f"t={t:g} relative L2", e["relative_l2"] <= MAX_REL_L2,
                        f"{e['relative_l2']:.4f}"))
    return results


def segment_visibility(recorded_segments) -> float:
    return ref.fringe_visibility(np.arange(len(recorded_segments)), recorded_segments)
