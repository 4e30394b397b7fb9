"""
ballstream - nonparametric classification of data streams with adaptive ball covers.

Learns a growing set of metric balls over the input space, predicts with the
nearest ball's local label statistics, and evaluates learners prequentially
(test-then-train) with random label sub-sampling and bounded model budgets.
"""

__version__ = "0.1.0"
