"""Permutation tests of dependence between two point processes."""

__version__ = "0.1.0"

from .core import (Ragged, Sample, SpikeTrain, TrialPair, c_statistic, coincidence_count,
                   coincidence_matrix, cross_sum, f_phi, t_statistic)
from .permutation import TestConfig, TestResult, mc_null, permutation_test, permute_sample
from .rng import RandomStream
from .simulate import (HawkesParams, JitterParams, NoiseSpec, hawkes_pair, hawkes_univariate,
                       iid_sample, jitter_trial, poisson_process)
