"""Exact Gaussian Markov random field marginals by sums over simple paths and cycles."""
from .engine import (
    DiagonalResolvent,
    PathSumEngine,
    PathSumResult,
    ResolventMemo,
    absorb_observations,
    diagonal_entry,
    full_covariance,
    mean_vector,
    off_diagonal_entry,
)
from .errors import (
    ConfigurationError,
    DomainError,
    ModelError,
    NotPositiveDefiniteError,
    ParseError,
    PartitionError,
    PathSumError,
    SingularityError,
    TopologyError,
    UnsupportedPartitionError,
)
from .gabp import MessageTable, gabp_marginals, is_tree
from .graph import (
    ModelGraph,
    build_graph,
    connected_component,
    enumerate_simple_cycles,
    enumerate_simple_paths,
)
from .io import load_matrix, parse_partition, write_json_model, write_matrix_market
from .model import BlockPartition, InformationModel
from .validation import (
    DiagnosticReport,
    determinant_formula_entry,
    diagnose,
    direct_inverse,
    spectral_radius_abs_r,
)

__version__ = "0.1.0"
