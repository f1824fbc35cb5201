"""Suffix trees and tries over Markov sources: exact formulas and simulation."""

__version__ = "0.1.0"
