import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasedet.config import ConfigError, emit_config, parse_config
from phasedet.scenarios import KINDS, DetectorGeometry, ScenarioConfig, TwoPackets


def test_minimal_single_packet():
    cfg = parse_config("[run]\nkind = single_packet\n")
    assert cfg.physics.v0 == 5.0 and cfg.physics.sigma_v == 1.0
    assert cfg.physics.phi0 == -math.pi / 4
    assert cfg.detector.delta_x == 0.01
    assert cfg.times == (0.1, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0)


def test_two_packets_default_positions():
    cfg = parse_config("[run]\nkind = two_packets\n[two_packets]\nv0 = 5\n")
    assert (cfg.physics.x1, cfg.physics.x2) == (-20.0, 20.0)


def test_full_config():
    text = """# comment
[run]
kind = wall
particles = 2e5
seed = 7
times = 6, 8 10

[detector]
delta_x = 0.02   ; trailing comment

[wall]
x0 = -15
"""
    cfg = parse_config(text)
    assert cfg.particles == 200_000 and cfg.seed == 7 and cfg.times == (6.0, 8.0, 10.0)
    assert cfg.detector.delta_x == 0.02 and cfg.physics.x0 == -15.0


@pytest.mark.parametrize("text,line,needle", [
    ("[run]\nkind = wall\n[detector]\ndelta_x = -1\n", 4, "delta_x"),
    ("[run]\nkind = wall\nparticles = 0\n", 3, "particles"),
    ("[run]\nkind = wall\nparticles = 1.5\n", 3, "particles"),
    ("[run]\nkind = wall\nseed = abc\n", 3, "seed"),
    ("[run]\nkind = wall\n[wall]\nx0 = 1e\n", 4, "x0"),
    ("[run]\nkind = wall\n[wall]\nspeed = 3\n", 4, "speed"),
    ("[run]\nkind = wall\n[two_packets]\nx1 = 3\n", 4, "two_packets"),
    ("[run]\nkind = pendulum\n", 2, "pendulum"),
    ("[run]\nkind = wall\ntimes = 1, 0\n", 3, "times"),
    ("kind = wall\n", 1, "section"),
    ("[run]\nkind = wall\nthis is not a pair\n", 3, "parse"),
    ("[run]\nkind = wall\nkind = wall\n", 3, "duplicate"),
    ("[run]\nkind = double_slit\n[detector]\ndelta_x = 0.1\n", 4, "double_slit"),
])
def test_errors_name_the_line(text, line, needle):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)
    assert needle in str(info.value)


def test_missing_kind():
    with pytest.raises(ConfigError, match="kind"):
        parse_config("[run]\nseed = 1\n")
    with pytest.raises(ConfigError, match=r"\[run\]"):
        parse_config("[wall]\nx0 = -3\n")


def test_semantic_error_surfaces_as_config_error():
    with pytest.raises(ConfigError):
        parse_config("[run]\nkind = wall\n[wall]\nx0 = 3\n")


@pytest.mark.parametrize("kind", KINDS)
def test_round_trip_defaults(kind):
    cfg = ScenarioConfig(kind)
    assert parse_config(emit_config(cfg)) == cfg


@settings(max_examples=50, deadline=None)
@given(x1=st.floats(-100, -0.5), x2=st.floats(0.5, 100), v0=st.floats(0.1, 20),
       dx=st.floats(1e-3, 1.0), seed=st.integers(0, 2**31), n=st.integers(1, 10**7),
       times=st.lists(st.floats(1e-3, 50), min_size=1, max_size=5))
def test_round_trip_random(x1, x2, v0, dx, seed, n, times):
    cfg = ScenarioConfig("two_packets", particles=n, seed=seed, times=tuple(times),
                         detector=DetectorGeometry(delta_x=dx), physics=TwoPackets(x1, x2, v0))
    back = parse_config(emit_config(cfg))
    assert back == cfg
