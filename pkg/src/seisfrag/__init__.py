"""Seismic fragility curve estimation by active learning on SVM classifiers.

The pipeline: synthesize ground motions from a modulated filtered white-noise
model, run a nonlinear oscillator to label exceedance of a damage threshold,
train SVM classifiers with uncertainty-sampling active learning, and turn the
calibrated scores into non-parametric fragility curves.
"""

__version__ = "0.1.0"
