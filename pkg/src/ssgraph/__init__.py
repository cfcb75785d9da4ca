"""Transfer functions, Green functions and spectrum bounds for symmetrically self-similar graphs."""

__version__ = "0.1.0"
