"""Geographically weighted research-leadership networks and SpatialLeaderRank."""
from .corpus import (
    Institution,
    InstitutionStats,
    PublicationRecord,
    ValidationReport,
    institution_stats,
    load_institutions,
    parse_publications,
    validate_corpus,
)
from .evaluate import h_index, ksim, powerlaw_mle, roc_auc, spearman, top_fraction_labels
from .geo import GeoPoint, haversine_km, kde_grid, spatial_score_pair
from .gravity import GravityFit, build_gravity_samples, estimate_lambda, lambda_by_year, ols_fit
from .leadership import LeadershipMass, LeadershipNetwork, build_network, extract_roles
from .ranking import RankingResult, augment_ground, centrality, leader_rank, page_rank, spatial_leader_rank

__version__ = "0.1.0"
