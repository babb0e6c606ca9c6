"""Good-deal pricing engine for one-period markets with frictions.

Computes superreplication prices with acceptable risk, market-consistent
price intervals, good-deal diagnostics, and consistent price deflators on
finite state spaces, with a verification harness for the asset-pricing
duality between good deals and strictly consistent deflators.
"""

__version__ = "0.1.0"
