"""Discrete-event simulator for wARP-Path, a layer-2 reactive path discovery protocol for ad hoc radios."""

__version__ = "0.1.0"
