"""Transfer operators, Gibbs states and long-range Ising diagnostics on finite discretisations."""

__version__ = "0.1.0"
