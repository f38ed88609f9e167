"""Random Schrodinger operators on metric Cayley graphs: counting functions,
integrated density of states, spectral shifts and pattern frequencies."""

__version__ = "0.1.0"
