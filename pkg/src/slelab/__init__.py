"""Simulation and estimation laboratory for SLE, GFF, and cut-point measures."""

__version__ = "0.1.0"

from . import annuli, cutmeasure, flowlines, geometry, gff, hypwhitney, loewner, processes

__all__ = [
    "annuli",
    "cutmeasure",
    "flowlines",
    "geometry",
    "gff",
    "hypwhitney",
    "loewner",
    "processes",
]
