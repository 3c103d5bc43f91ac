"""Heterogeneously coupled circle maps: simulation, reduced hub maps,
mean-field fluctuation statistics and Laplacian synchronizability audits."""

from hcm.torus import (
    INF,
    CircleSampler,
    SplitMix64,
    SplitVector,
    circle_dist,
    sample_uniform,
    split_p_norm,
    wrap,
)

__all__ = [
    "INF",
    "CircleSampler",
    "SplitMix64",
    "SplitVector",
    "circle_dist",
    "sample_uniform",
    "split_p_norm",
    "wrap",
]

__version__ = "0.1.0"
