"""Spectral geometry of finite higher-rank graphs.

From ``k`` commuting adjacency matrices the package builds the stationary
k-Bratteli diagram, the self-similar measure and ultrametric on its
infinite path space, the zeta function and Dixmier-trace measure, wavelet
bases with the matching Laplacian eigenspaces, and a Dirac operator
together with the Cuntz-Krieger representation.
"""

from .bratteli import (
    Diagram,
    FinitePath,
    LazyInfinitePath,
    count_paths,
    diagram,
    enumerate_paths,
    format_path,
    j_pattern,
    parse_path,
)
from .dirac import AlphaSequence, ck_check, commutator_norm, dirac_eigen_report, dirac_matrix
from .errors import (
    DepthTooLarge,
    DiameterHypothesisFailed,
    GraphNotAdmitted,
    KGSError,
    NoConvergence,
    ParseError,
    SchemaError,
    Undecided,
    ValidationError,
)
from .harmonic import (
    StepFunction,
    SubspaceBasis,
    eigen_residual,
    eigenspace_basis,
    inner,
    j_wavelet_basis,
    laplacian_apply,
    principal_angle,
    refined_wavelet_basis,
    wavelet_basis,
)
from .io import GraphDocument, emit_graph, load_bundled, load_graph, parse_graph
from .kgraph import KGraph, SpectralData, ValidationReport, perron, spectral_data, validate
from .metric import WeightContext, diam, distance, make_context, measure_M, weight
from .report import ReportBundle
from .zeta import (
    abscissa_estimate,
    dixmier,
    dixmier_closed,
    hausdorff_dim_estimate,
    hausdorff_sum,
    zeta_eval,
)

__version__ = "0.1.0"
