"""Higher-derivative supersymmetric quantum mechanics: dynamics, spectra and superalgebras."""

__version__ = "0.1.0"
