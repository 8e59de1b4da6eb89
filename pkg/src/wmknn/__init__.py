"""Nearest-neighbor classification with mutual-neighbor noise filtering,
inverse-distance voting, outlier rejection and certainty measures."""

from .classify import (ClassifierModel, DegenerateFilterError, Prediction, Variant, VoteTally,
                       certainty_unweighted, certainty_weighted, filter_noise, fit, predict,
                       predict_many, vote_majority, vote_weighted, weight)
from .dataset import (Dataset, FeatureSchema, Instance, LoadError, Normalizer, PROFILES,
                      apply_normalizer, fit_normalizer, load_csv, load_profile, stratified_folds)
from .geometry import (MutualSet, NeighborList, distance, distance_matrix, knn_of,
                       mutual_neighbors, mutual_neighbors_of_query)

__version__ = "0.1.0"
