"""Exact Gaussian-state laboratory for decoherence-induced redundancy in
quantum Brownian motion: covariance-matrix dynamics of an oscillator coupled
to a discretized harmonic bath, correlation measures over environment
fractions, the closed-form branch-model oracle, and redundancy extraction.
"""

__version__ = "0.1.0"
