"""coarse-lab: word metrics, sublinear gauges, Morse-style ray probes and
random-walk experiments on right-angled Coxeter groups, at desk scale."""

__version__ = "0.1.0"
