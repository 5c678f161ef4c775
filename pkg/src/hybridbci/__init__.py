"""Hybrid SSVEP+P300 BCI simulator: stimulus engine, synthetic EEG, marker
link, EDF I/O, decoding pipeline, robot simulator, and live gateway."""

__version__ = "0.1.0"
