"""Spectra of Laplacians on compact metric graphs and the thermodynamics of
free and hardcore Bose gases built on them."""

from .graph_core import (MetricGraph, VertexConditions, interval, loop, scale, star,
                         standard_conditions, total_length, vertex_conditions)
from .spectral import Spectrum, eigenvalues_in, ground_state_energy, predicted_negative_count

__all__ = ["MetricGraph", "VertexConditions", "Spectrum", "interval", "loop", "star", "scale",
           "total_length", "standard_conditions", "vertex_conditions", "eigenvalues_in",
           "ground_state_energy", "predicted_negative_count"]
__version__ = "0.1.0"
