"""Reading and writing scenario configs.

The format is flat INI-style text::

    [run]
    kind = two_packets
    particles = 2000000
    seed = 7
    times = 0.1, 1, 2, 4, 6, 8, 10

    [detector]
    delta_x = 0.01

    [two_packets]
    x1 = -20
    x2 = 20

Sections are ``run``, ``detector`` and one section named after the kind.
Unknown sections or keys are errors, and every error names its line.
configparser is not used because it cannot report where a key came from.
"""

from __future__ import annotations

import dataclasses
import math
import re

from .scenarios import KINDS, PHYSICS, DetectorGeometry, ScenarioConfig

RUN_KEYS = {"kind": str, "particles": int, "seed": int, "times": tuple, "workers": int}
DETECTOR_KEYS = {"x_min": float, "x_max": float, "delta_x": float}
POSITIVE = {"particles", "delta_x", "workers", "wavelength", "slit_separation",
            "screen_distance", "pixel_width", "segment_width", "segments"}


class ConfigError(ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


_SECTION = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")
_ENTRY = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*[=:]\s*(.*)$")


def _read(text: str) -> dict[str, dict[str, tuple[int, str]]]:
    sections: dict[str, dict[str, tuple[int, str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            current = m.group(1).lower()
            if current in sections:
                raise ConfigError(lineno, f"duplicate section [{current}]")
            sections[current] = {}
            continue
        m = _ENTRY.match(line)
        if not m:
            raise ConfigError(lineno, f"cannot parse {raw.strip()!r}")
        if current is None:
            raise ConfigError(lineno, "key outside of any section")
        key, value = m.group(1).lower(), m.group(2).strip()
        if key in sections[current]:
            raise ConfigError(lineno, f"duplicate key {key!r}")
        sections[current][key] = (lineno, value)
    return sections


def _number(kind, key, lineno, text):
    try:
        if kind is int:
            value = float(text)
            if not value.is_integer():
                raise ValueError
            value = int(value)
        else:
            value = float(text)
    except ValueError:
        raise ConfigError(lineno, f"{key}: expected {'an integer' if kind is int else 'a number'}, "
                                  f"got {text!r}") from None
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(lineno, f"{key}: value must be finite")
    if key in POSITIVE and value <= 0:
        raise ConfigError(lineno, f"{key} must be positive, got {text}")
    return value


def _convert(key, lineno, text, kind):
    if kind is str:
        return text
    if kind is tuple:
        parts = [p for p in re.split(r"[,\s]+", text) if p]
        if not parts:
            raise ConfigError(lineno, f"{key}: empty list")
        values = tuple(_number(float, key, lineno, p) for p in parts)
        if any(v <= 0 for v in values):
            raise ConfigError(lineno, f"{key}: snapshot times must be strictly positive")
        return values
    return _number(kind, key, lineno, text)


def _apply(section, entries, allowed):
    out = {}
    for key, (lineno, text) in entries.items():
        if key not in allowed:
            raise ConfigError(lineno, f"unknown key {key!r} in [{section}]")
        out[key] = _convert(key, lineno, text, allowed[key])
    return out


def parse_config(text: str) -> ScenarioConfig:
    sections = _read(text)
    if "run" not in sections:
        raise ConfigError(0, "missing [run] section")
    run = _apply("run", sections["run"], RUN_KEYS)
    if "kind" not in run:
        raise ConfigError(0, "missing key 'kind' in [run]")
    kind = run["kind"]
    if kind not in KINDS:
        raise ConfigError(sections["run"]["kind"][0],
                          f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    for name, entries in sections.items():
        if name not in ("run", "detector", kind):
            line = min((ln for ln, _ in entries.values()), default=0)
            raise ConfigError(line, f"unexpected section [{name}] for kind {kind}")

    det = _apply("detector", sections.get("detector", {}), DETECTOR_KEYS)
    phys_cls = PHYSICS[kind]
    phys_keys = {f.name: (int if f.type in (int, "int") else float)
                 for f in dataclasses.fields(phys_cls)}
    phys = _apply(kind, sections.get(kind, {}), phys_keys)
    if kind == "double_slit" and det:
        line = min(ln for ln, _ in sections["detector"].values())
        raise ConfigError(line, "double_slit takes its pixel geometry from [double_slit]")
    try:
        return ScenarioConfig(
            kind=kind,
            detector=DetectorGeometry(**det),
            physics=phys_cls(**phys),
            **{k: v for k, v in run.items() if k != "kind"},
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(0, str(exc)) from None


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(cfg: ScenarioConfig) -> str:
    """Text that :func:`parse_config` turns back into an equal config."""
    lines = ["[run]", f"kind = {cfg.kind}", f"particles = {cfg.particles}",
             f"seed = {cfg.seed}"]
    if cfg.kind != "double_slit":
        lines.append(f"times = {_fmt(cfg.times)}")
    lines.append(f"workers = {cfg.workers}")
    if cfg.kind != "double_slit":
        lines += ["", "[detector]"]
        for f in dataclasses.fields(cfg.detector):
            lines.append(f"{f.name} = {_fmt(float(getattr(cfg.detector, f.name)))}")
    lines += ["", f"[{cfg.kind}]"]
    for f in dataclasses.fields(cfg.physics):
        lines.append(f"{f.name} = {_fmt(getattr(cfg.physics, f.name))}")
    return "\n".join(lines) + "\n"
