"""Edge percolation of regular graphs, exact matching numbers, and local
convergence to the Poisson Galton-Watson tree."""

__version__ = "0.1.0"
