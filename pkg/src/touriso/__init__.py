"""Tournament isomorphism via tournament asymmetry: a randomized Turing reduction."""

__version__ = "0.1.0"
