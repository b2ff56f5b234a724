"""invlab: a simulation and verification laboratory for maximal inequalities
and the invariance principle of stationary sequences."""

__version__ = "0.1.0"
