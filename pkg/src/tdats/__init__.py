"""Topological data analysis of multivariate time series dependence networks.

Simulate latent AR(2) mixtures with planted dependence topology, estimate
band coherence, build Vietoris-Rips filtrations on the channel network,
compute persistence diagrams and landscapes, and compare groups with a
permutation test.
"""
from .embed import cloud_distances, delay_embed, smooth, sublevel_persistence
from .homology import (BettiCurve, Filtration, PersistenceDiagram, betti_curve, bottleneck, persistence,
                       rips_filtration, rips_persistence, wasserstein)
from .inference import GroupSample, PermutationTestReport, permutation_test, test_statistic
from .landscape import PersistenceLandscape, evaluate, landscape_from_diagram, lp_norm, mean_landscape
from .sim import (Ar2Spec, MixingModel, TimeSeriesPanel, ar2_coefficients, preset_example, simulate_ar2,
                  simulate_mixture)
from .spectral import (CoherenceMatrix, DistanceMatrix, SpectralMatrix, band_coherence, coherence_to_distance,
                       fourier_coefficients, smoothed_cross_spectrum)

__version__ = "0.1.0"
