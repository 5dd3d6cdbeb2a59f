"""
Bayesian Discrepancy Measure

Library and command-line tools computing the discrepancy measure of a precise
hypothesis from a posterior, under first-order, third-order, skew-modal and
skew-normal approximations, with exact oracles for verification.
"""

__version__ = "1.0.0"
__author__ = "BDM Team"
