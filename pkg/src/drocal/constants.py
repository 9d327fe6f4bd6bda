"""Versioned constants for the built-in synthetic model and run defaults.

Bump ``SYNTHETIC_MODEL_VERSION`` whenever any value below changes; the
version is written into run provenance so older outputs stay traceable.
"""

SYNTHETIC_MODEL_VERSION = "1"

# Synthetic oscillator sampling grid: T + 1 = 256 samples at 30 Hz.
OSCILLATOR_N_SAMPLES = 256
OSCILLATOR_DT = 1.0 / 30.0

A_BOX = ((0.0, 0.0), (1.0, 1.0))
E0_BOX = ((0.0, 0.0, 0.0, 0.0), (2.0, 2.0, 2.0, 2.0))

# Design vector layout of the synthetic requirements:
#   0 gain_peak   1 gain_band1   2 gain_band2   3 gain_mix   4 mix_slope
#   5 thr_1       6 thr_2        7 thr_3        8 margin
THETA_BASELINE = (1.0, 0.6, 2.0, 0.25, 3.0, 2.8, 3.0, 2.0, 0.05)

BAND1 = (0.0, 1.59)
BAND2 = (1.71, 5.98)

ALPHA = 0.05
N2 = 1000
K = 1000

KW_C0 = 0.1
KW_A0 = 0.1
KW_N_MAX = 8
