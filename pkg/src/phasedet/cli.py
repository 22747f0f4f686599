"""Command line driver.

    phasedet run [CONFIG] [--scenario KIND] [--seed N] [--out DIR]
    phasedet check [CONFIG] ...          exit 3 if the run misses its references
    phasedet sweep-bin [CONFIG] --dx 0.001,0.01,0.1,0.2,0.4 [--time 4]
    phasedet sweep-buildup [CONFIG] --checkpoints 100,1000,10000,100000
    phasedet config --scenario KIND      print a default config

Exit codes: 0 success, 1 invalid input, 2 runtime failure, 3 failed check.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from pathlib import Path

from . import __version__, report
from .config import ConfigError, emit_config, load_config
from .detector import density_profile
from .output import channel_columns, detector_columns, write_json, write_table
from .reference import fringe_visibility
from .scenarios import (KINDS, ScenarioConfig, double_slit_expected, run, run_bin_sizes,
                        segment_histogram)

log = logging.getLogger("phasedet")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_CHECK = 0, 1, 2, 3
OVERFLOW_WARNING = 0.10


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(float(v)) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_config(args) -> ScenarioConfig:
    if args.config:
        cfg = load_config(args.config)
        if args.scenario and args.scenario != cfg.kind:
            raise ConfigError(0, f"--scenario {args.scenario} contradicts kind {cfg.kind} in {args.config}")
    elif args.scenario:
        cfg = ScenarioConfig(args.scenario)
    else:
        raise ConfigError(0, "give a config file or --scenario")
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.particles is not None:
        changes["particles"] = args.particles
    if args.workers is not None:
        changes["workers"] = args.workers
    if changes:
        try:
            cfg = dataclasses.replace(cfg, **changes)
        except ValueError as exc:
            raise ConfigError(0, str(exc)) from None
    return cfg


def _warn_overflow(name, overflow, total):
    if total and overflow > OVERFLOW_WARNING * total:
        log.warning("%s: %d of %d particles fell outside the detector", name, overflow, total)


def _meta(cfg, **extra):
    return {"kind": cfg.kind, "particles": cfg.particles, "seed": cfg.seed,
            "version": __version__, **extra}


def _write_massive(cfg, result, out: Path, config_text, prefix="profile", total=None):
    total = cfg.particles if total is None else total
    files = []
    for snap, det in zip(result.snapshots, result.detectors):
        prof_cols = detector_columns(det, total)
        exact, approx = report.reference_curves(cfg, det.centers, snap.time)
        prof_cols["reference_exact"] = exact
        prof_cols["reference_approx"] = approx
        prof_cols.update(channel_columns(det))
        name = f"{prefix}_t{snap.time:g}_dx{det.delta_x:g}.csv"
        meta = _meta(cfg, time=snap.time, delta_x=det.delta_x, overflow=det.overflow,
                     rejected=det.rejected,
                     units="x in hbar/(m sigma_v); densities = counts/(particles*delta_x)")
        write_table(out / name, prof_cols, meta, config_text)
        files.append(name)
        _warn_overflow(name, det.overflow, total)
    return files


def _write_double_slit(cfg, pixels, out: Path, config_text, tag="", photons=None):
    photons = cfg.particles if photons is None else photons
    p = cfg.physics
    exp_raw, exp_rec = double_slit_expected(p, photons)
    cols = detector_columns(pixels, max(photons, 1))
    cols["expected_raw"] = exp_raw
    cols["expected_recorded"] = exp_rec
    cols.update(channel_columns(pixels))
    meta = _meta(cfg, photons=photons, pixel_width=p.pixel_width, overflow=pixels.overflow,
                 units="x in meters from the detector midpoint")
    pix_name = f"pixels{tag}.csv"
    write_table(out / pix_name, cols, meta, config_text)

    centers, raw, rec = segment_histogram(pixels, p)
    per = p.pixels_per_segment
    seg_cols = {"segment_center": centers, "raw_count": raw, "recorded_count": rec,
                "expected_raw": exp_raw.reshape(p.segments, per).sum(axis=1),
                "expected_recorded": exp_rec.reshape(p.segments, per).sum(axis=1)}
    seg_name = f"segments{tag}.csv"
    write_table(out / seg_name, seg_cols, _meta(cfg, photons=photons,
                                                segment_width=p.segment_width), config_text)
    _warn_overflow(pix_name, pixels.overflow, photons)
    summary = {"photons": photons, "overflow": pixels.overflow,
               "segment_visibility": report.segment_visibility(rec),
               "raw_segment_visibility": report.segment_visibility(raw)}
    return [pix_name, seg_name], summary


def _manifest(cfg, config_text, files, timings, extra=None):
    out = {"config": config_text, "seed": cfg.seed, "version": __version__,
           "files": files, "timings": timings}
    out.update(extra or {})
    return out


def cmd_run(args, check=False) -> int:
    cfg = build_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    text = emit_config(cfg)
    t0 = time.perf_counter()
    result = run(cfg)
    timings = {"simulate": result.elapsed}

    if cfg.kind == "double_slit":
        files, summary = _write_double_slit(cfg, result.pixels, out, text)
        write_json(out / "report.json", summary)
        files.append("report.json")
        overflow = {"screen": result.pixels.overflow}
        failures = []
    else:
        files = _write_massive(cfg, result, out, text)
        reports = [report.snapshot_report(cfg, s, d)
                   for s, d in zip(result.snapshots, result.detectors)]
        write_json(out / "report.json", {"snapshots": reports})
        files.append("report.json")
        overflow = {f"{s.time:g}": d.overflow for s, d in zip(result.snapshots, result.detectors)}
        failures = []
        if check:
            for name, ok, detail in report.checks(cfg, reports):
                print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
                if not ok:
                    failures.append(name)
    timings["total"] = time.perf_counter() - t0
    write_json(out / "manifest.json", _manifest(cfg, text, files, timings, {"overflow": overflow}))
    log.info("wrote %d files to %s", len(files) + 1, out)
    if check and failures:
        return EXIT_CHECK
    return EXIT_OK


def cmd_sweep_bin(args) -> int:
    cfg = build_config(args)
    if cfg.kind == "double_slit":
        raise ConfigError(0, "bin-size sweeps apply to the massive-particle scenarios")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    text = emit_config(cfg)
    result = run_bin_sizes(cfg, args.dx, args.time)
    files = _write_massive(cfg, result, out, text, prefix="sweep")
    rows = []
    window = report.fringe_window(cfg, args.time)
    for snap, det in zip(result.snapshots, result.detectors):
        prof = density_profile(det, cfg.particles)
        row = {"delta_x": det.delta_x, "recorded_total": float(prof.recorded_count.sum()),
               "raw_total": int(prof.raw_count.sum())}
        if window:
            lo, hi, _ = window
            row["visibility"] = fringe_visibility(prof.x, prof.recorded_density, lo, hi)
        rows.append(row)
        print("  ".join(f"{k}={v:.6g}" for k, v in row.items()))
    write_json(out / "sweep_bin.json", {"time": args.time, "rows": rows})
    files.append("sweep_bin.json")
    write_json(out / "manifest.json", _manifest(cfg, text, files, {"simulate": result.elapsed}))
    return EXIT_OK


def cmd_sweep_buildup(args) -> int:
    cfg = build_config(args)
    checkpoints = sorted(args.checkpoints)
    if checkpoints != list(args.checkpoints):
        raise ConfigError(0, "checkpoints must be ascending")
    if checkpoints and checkpoints[-1] > cfg.particles:
        cfg = dataclasses.replace(cfg, particles=checkpoints[-1])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    text = emit_config(cfg)
    result = run(cfg, checkpoints=checkpoints)
    files, rows = [], []
    for m in checkpoints:
        if cfg.kind == "double_slit":
            f, summary = _write_double_slit(cfg, result.buildup[m], out, text, tag=f"_n{m}",
                                            photons=m)
            files += f
            rows.append(summary)
        else:
            snap_result = dataclasses.replace(result, detectors=result.buildup[m])
            files += _write_massive(cfg, snap_result, out, text, prefix=f"buildup_n{m}", total=m)
            rows.append({"particles": m})
    write_json(out / "sweep_buildup.json", {"checkpoints": rows})
    files.append("sweep_buildup.json")
    write_json(out / "manifest.json", _manifest(cfg, text, files, {"simulate": result.elapsed}))
    for row in rows:
        print("  ".join(f"{k}={v:.6g}" for k, v in row.items()))
    return EXIT_OK


def cmd_config(args) -> int:
    cfg = build_config(args)
    sys.stdout.write(emit_config(cfg))
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasedet", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", nargs="?", help="scenario config file")
        p.add_argument("--scenario", choices=KINDS, help="scenario kind (defaults if no config)")
        p.add_argument("--seed", type=int)
        p.add_argument("--particles", type=int, help="override the particle budget")
        p.add_argument("--workers", type=int, help="worker threads (results do not depend on it)")
        p.add_argument("--out", default="phasedet_out", help="output directory")
        return p

    common(sub.add_parser("run", help="run a scenario and write profiles"))
    common(sub.add_parser("check", help="run and compare against the references"))
    p = common(sub.add_parser("sweep-bin", help="one particle stream, several bin sizes"))
    p.add_argument("--dx", type=_floats, default=[0.001, 0.01, 0.1, 0.2, 0.4])
    p.add_argument("--time", type=float, default=4.0)
    p = common(sub.add_parser("sweep-buildup", help="profiles after the first m particles"))
    p.add_argument("--checkpoints", type=_ints, default=[100, 1000, 10000, 100000])
    common(sub.add_parser("config", help="print the effective config"))
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    commands = {"run": cmd_run, "check": lambda a: cmd_run(a, check=True),
                "sweep-bin": cmd_sweep_bin, "sweep-buildup": cmd_sweep_buildup,
                "config": cmd_config}
    try:
        return commands[args.command](args)
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"phasedet: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, RuntimeError, MemoryError) as exc:
        print(f"phasedet: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
