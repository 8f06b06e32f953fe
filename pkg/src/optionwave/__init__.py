"""Option-price wave modeling with the adaptive nonlinear Schrodinger equation."""

__version__ = "0.1.0"
