"""Arithmetic over a diffusive two-species molecular channel.

Values are encoded as molecule counts, A for positive and B for negative,
and combine in the channel. The receiver recovers the joint result by
multi-sample detection. A particle simulator with A+B annihilation
provides ground truth for the closed-form channel model.
"""

__version__ = "0.1.0"
