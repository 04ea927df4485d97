"""Kernel dependence toolkit: HSIC, randomized HSIC, independence tests and sensitivity maps."""

__version__ = "0.3.0"
