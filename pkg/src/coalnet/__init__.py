"""Coalescence of weighted coupled-cell networks.

Build networks and their coalescences, study the Laplacian spectrum of a
feedforward coalescence in terms of its components, and predict how
equilibrium branches of the first component extend to the whole network,
with a brute-force numerical oracle to check the predictions.
"""

from .branches import (BranchPrediction, BranchSeed, CaseTag, HVector, PredictedBranch, PredictionReport,
                       classify_case, compute_H, linear_case_prediction, ls_expansion, ls_pitchfork_prediction,
                       n1_branch_seeds, one_component_extension, predict, predict_seed,
                       quarter_root_prediction, sqrt_case_prediction)
from .continuation import (LinkedBranch, NumericalBranch, OracleConfig, OracleResult, fit_growth_exponent,
                           numerical_jordan_check, solve_equilibria, trace_branches)
from .errors import (CellIndexError, CoalnetError, ConnectivityError, ConsistencyError, GenericityError,
                     InputError, JetError, NumericalError, ParseError, PreconditionError, RankError)
from .network import (Coalescence, Network, adjacency, build_network, coalesce, is_ffcn, is_regular,
                      laplacian, sequential_coalesce, valency)
from .spectral import (coupling_condition, eigen_structure, ffcn_spectral_report, lift_eigenvector,
                       reduced_laplacians, spectrum_union_check, zero_eigenspace_basis)
from .system import DiffusiveJet, bifurcation_eigenvalue, realize_polynomial_system
from .verify import verify

__all__ = [name for name in dir() if not name.startswith("_")]
