"""Sensor-network sleep/sense scheduling simulator.

Deterministic, seedable simulation of distributed duty-cycling protocols
(EvenRep and baselines) with Monte Carlo estimators for the two spatial
quality-of-representation metrics: the density-normalized mean distance
from region points to their nearest active node, and the Gini unevenness
of those distances.
"""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
