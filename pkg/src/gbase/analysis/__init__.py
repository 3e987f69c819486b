"""
Analytic Engine

Characteristic function products, canonical series and brute-force
empirical distributions for G-additive functions.
"""

from .transform import TransformTrace, PerturbedCompanion, h_sequence, companion_at
from .series import SeriesReport, SeriesVerdict, AtomicityVerdict, s1_terms, s2_terms
from .empirical import EmpiricalDistribution, DigitOdometer, empirical_values, ks_distance

__all__ = [
    'TransformTrace',
    'PerturbedCompanion',
    'h_sequence',
    'companion_at',
    'SeriesReport',
    'SeriesVerdict',
    'AtomicityVerdict',
    's1_terms',
    's2_terms',
    'EmpiricalDistribution',
    'DigitOdometer',
    'empirical_values',
    'ks_distance',
]
