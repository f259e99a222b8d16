"""Numerically exact exterior calculus on frame-bundle jet charts.

Verifies, by sampled residuals with exact derivatives, the identities and
equations of motion of the vielbein/connection formulation of gravity on
coordinate charts of the frame bundle, its first jet, and the associated
velocity-multimomentum space.
"""

__version__ = "0.1.0"
