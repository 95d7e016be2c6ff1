"""Spectra and average-consensus metrics of q-triangular r-regular ring networks."""

from .errors import ConsensusError, DivergenceError, EigensolverError, InconclusiveError
from .graph import (
    BipartiteResult,
    FamilySpec,
    Graph,
    build_ring,
    family_graph,
    incidence,
    is_bipartite,
    laplacian,
    q_triangulate,
    read_edge_list,
    write_edge_list,
)
from .metrics import (
    MetricsReport,
    best_constant_h,
    coherence_paper,
    coherence_spectral,
    convergence_time,
    convergence_time_paper,
    gamma_from_h,
    max_delay_paper,
    max_delay_spectral,
    metrics_report,
)
from .simulator import SimConfig, SimTrace, delay_stability_probe, estimate_first_order_coherence, run_consensus
from .spectra import (
    BranchPair,
    Spectrum,
    branch_map,
    full_spectrum,
    numeric_spectrum,
    ring_eigenvalues,
    spectral_extremes,
)

__version__ = "0.1.0"
