"""Numerical experiments for the free and nonlinear Liouville-von Neumann flow
``i u_t + (Lap_x - Lap_y) u = F(u)`` on bipartite fields ``u(x, y, t)``."""

__version__ = "0.1.0"
