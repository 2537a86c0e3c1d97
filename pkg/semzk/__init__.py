"""
semzk: pseudospectral ZK/SEM solver and verification harness for Carleman-type estimates.
"""

__version__ = "1.0.0"
