"""
ErgoLab - Polynomial Multiple Averages Laboratory
Desk-scale simulation of a skew product T, its permutation conjugate S = R^-1 T R,
and exact or statistical checks of the identities the construction relies on
"""

__version__ = "1.0.0"
__author__ = "ErgoLab Team"
__description__ = "Simulation and verification laboratory for non-commuting polynomial multiple averages"
