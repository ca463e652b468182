"""Stochastic numerics for singular integral sequences against fractional
Brownian motion: kernels, operators, discretized Skorohod/Ito integrals,
and Monte Carlo verification of their limit laws."""

from . import fbm, integrals, kernels, montecarlo, specfun
from .errors import (
    ConfigError,
    DomainError,
    NumericalError,
    UnsupportedOrderError,
    UsageError,
)

__version__ = "0.1.0"

__all__ = [
    "fbm",
    "integrals",
    "kernels",
    "montecarlo",
    "specfun",
    "ConfigError",
    "DomainError",
    "NumericalError",
    "UnsupportedOrderError",
    "UsageError",
]
