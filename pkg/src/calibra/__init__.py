"""Calibrated forecasting via forecast hedging.

The package is organized around the repeated forecast/action loop:

- ``domains``     compact convex forecast sets with closed-form projections
- ``binning``     weight functions and partitions of unity over a domain
- ``history``     incremental gap/error accumulators for a play record
- ``scores``      calibration scores (classic, binned, square, smooth, weak)
- ``hedging``     outgoing-point solvers (fixed point, minimax LP, almost
                  deterministic) and Caratheodory support reduction
- ``procedures``  forecasting engines (FP, MM, AD, one-dimensional binary)
                  and the simulation loop
- ``adversaries`` action-sequence generators, from oblivious to leaky
- ``dynamics``    continuously calibrated learning on finite games
- ``cli``         batch experiment runner with CSV/JSON outputs
"""

from calibra.domains import Box, Interval01, ProductOfSimplices, Simplex
from calibra.binning import Binning, tent_binning, indicator_binning
from calibra.history import HistoryStats
from calibra.mixed import MixedForecast

__all__ = [
    "Box",
    "Interval01",
    "ProductOfSimplices",
    "Simplex",
    "Binning",
    "tent_binning",
    "indicator_binning",
    "HistoryStats",
    "MixedForecast",
]

__version__ = "0.1.0"
