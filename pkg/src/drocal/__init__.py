"""Output-only calibration of epistemic parameters with KS ambiguity sets.

Builds eligibility sets for epistemic model parameters from time-series
data, then uses the per-parameter weight polytopes to bound failure
probabilities and tune a design vector.
"""

__version__ = "0.1.0"
