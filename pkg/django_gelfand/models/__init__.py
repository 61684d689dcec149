from .graphs import (
    WeightedGraph,
    DirichletDomain,
    build_graph,
    build_domain,
    build_kernel_space,
    is_m_connected,
    nonlocal_gradient,
    gradient_field,
    nonlocal_divergence,
)
from .nonlinearities import (
    Convexity,
    Nonlinearity,
    Exp,
    Power,
    Affine,
    AllenCahn,
    Log,
    Polynomial,
    PiecewiseC1,
    Truncated,
    truncate,
    parse_nonlinearity,
    read_piecewise_file,
)
from .solutions import (
    BranchLabel,
    EigenPair,
    Solution,
    BranchPoint,
    Fold,
    Branch,
    VerificationReport,
)

__all__ = [
    'WeightedGraph',
    'DirichletDomain',
    'build_graph',
    'build_domain',
    'build_kernel_space',
    'is_m_connected',
    'nonlocal_gradient',
    'gradient_field',
    'nonlocal_divergence',
    'Convexity',
    'Nonlinearity',
    'Exp',
    'Power',
    'Affine',
    'AllenCahn',
    'Log',
    'Polynomial',
    'PiecewiseC1',
    'Truncated',
    'truncate',
    'parse_nonlinearity',
    'read_piecewise_file',
    'BranchLabel',
    'EigenPair',
    'Solution',
    'BranchPoint',
    'Fold',
    'Branch',
    'VerificationReport',
]
