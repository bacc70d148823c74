"""Out-of-core probabilistic model checking of Markov decision processes."""
__version__ = "0.1.0"
