"""Measure Flow Lab - Monte Carlo checks of Ito-Krylov formulas for flows of measures."""

__version__ = "0.1.0"
