"""Max-Plus Tails - tail decay rates of stochastic (max,plus)-linear networks."""

__version__ = "1.0.0"
