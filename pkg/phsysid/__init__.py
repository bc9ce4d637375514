"""
phsysid - Pseudo-Hamiltonian System Identification
Sparse identification of ODE systems trained on symmetric integration schemes
"""

__version__ = "1.0.0"
