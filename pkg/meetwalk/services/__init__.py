"""Numerical core: graphs, chain structure, product spaces, solvers and the Monte Carlo oracle."""
