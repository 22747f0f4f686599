"""Monte Carlo interference from free classical particles carrying an
action phase, recorded by a phase-aggregating detector."""

__version__ = "0.1.0"
