"""semitoric: classical invariants, joint spectra and the inverse
problem for two-degree-of-freedom integrable Hamiltonian systems."""

__version__ = "0.1.0"
