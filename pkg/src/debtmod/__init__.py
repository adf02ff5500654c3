"""Toolkit for measuring individual debt aversion.

Submodules
----------
model        structural utility model and logit choice rule
data         choice records, MPL and survey-item catalogs, file I/O
staircase    adaptive binary tree locating a switchpoint among 15 debt contracts
instruments  built-in MPL catalogs (canonical staircase list, synthetic batteries)
simulation   synthetic decision-makers and shrinkage calibration
estimation   per-subject hierarchical maximum-likelihood estimation
selection    item filtering, exhaustive best-subset OLS, information criteria, CV
predictor    the validated two-item debt-aversion predictor
service      HTTP service exposing the predictor and the staircase
cli          command-line pipeline driver
"""

__version__ = "0.1.0"
