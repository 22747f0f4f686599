"""Delimited-text profiles and the JSON run manifest."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .detector import DetectorArray


def _header(meta: dict, config_text: str | None) -> str:
    lines = ["phasedet profile"]
    lines += [f"{k}: {v}" for k, v in meta.items()]
    if config_text:
        lines.append("config:")
        lines += ["  " + ln for ln in config_text.rstrip().splitlines()]
    return "".join(f"# {ln}\n" for ln in lines)


def write_table(path, columns: dict[str, np.ndarray], meta: dict, config_text=None) -> Path:
    """Write ``columns`` as comma-separated text under a ``#`` comment block.

    Integer columns are written as integers and floats with 17 significant
    digits, so a rerun with the same seed reproduces the file byte for byte.
    """
    path = Path(path)
    names = list(columns)
    data = [np.asarray(columns[n]) for n in names]
    n = len(data[0])
    if any(len(d) != n for d in data):
        raise ValueError("columns differ in length")
    fmts = ["%d" if np.issubdtype(d.dtype, np.integer) else "%.17g" for d in data]
    with open(path, "w") as fh:
        fh.write(_header(meta, config_text))
        fh.write(",".join(names) + "\n")
        if n:
            # integer counts stay exact as float64 well past any budget here
            np.savetxt(fh, np.column_stack([d.astype(float) for d in data]),
                       fmt=fmts, delimiter=",")
    return path


def detector_columns(det: DetectorArray, total: int) -> dict[str, np.ndarray]:
    raw = det.raw()
    rec = det.recorded()
    norm = total * det.delta_x
    cols = {
        "bin_center": det.centers,
        "raw_count": raw,
        "raw_density": raw / norm,
        "recorded_count": rec,
        "recorded_density": rec / norm,
    }
    return cols


def channel_columns(det: DetectorArray) -> dict[str, np.ndarray]:
    cols = {}
    for k in range(det.n_channels):
        cols[f"count_{k}"] = det.counts[:, k]
        cols[f"sum_re_{k}"] = det.sums[:, k].real
        cols[f"sum_im_{k}"] = det.sums[:, k].imag
    return cols


def read_table(path):
    """Header metadata and columns of a file written by :func:`write_table`."""
    meta, names, rows = {}, None, []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                body = line[2:].rstrip("\n")
                if ": " in body and not body.startswith("  "):
                    k, v = body.split(": ", 1)
                    meta[k] = v
                continue
            if names is None:
                names = line.strip().split(",")
                continue
            rows.append(line.strip().split(","))
    cols = {}
    for i, name in enumerate(names or []):
        vals = [r[i] for r in rows]
        if name.startswith(("count_", "raw_count")):
            cols[name] = np.array([int(v) for v in vals], dtype=np.int64)
        else:
            cols[name] = np.array([float(v) for v in vals])
    return meta, cols


def write_json(path, obj) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")
    return path


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")
