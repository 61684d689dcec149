"""
Django Gelfand

A reusable Django app for Gelfand-type problems -Δu = λ f(u) with homogeneous
Dirichlet data on random walk spaces realized as finite weighted graphs:
- Weighted graphs, Dirichlet domains and the nonlocal Laplacian
- Dirichlet eigenpairs and the moment estimator of the first eigenvalue
- Minimal solutions by monotone iteration, Newton for the other branches
- Extremal parameter λ* by bisection, stability index μ₁
- Pseudo-arclength continuation and bifurcation-diagram CSV output
- A built-in corpus of worked examples runnable through `manage.py gelfand demo`
"""

__version__ = '0.1.0'
