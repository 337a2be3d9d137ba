"""Expected meeting times of random walkers on digraphs."""

from meetwalk.config import GraphParseError, MeetwalkError, ParameterError, SolverError, StateBudgetError
from meetwalk.services.chain_analysis import (
    ChainDecomposition,
    PairClassification,
    classify_pair,
    classify_pair_ctmc,
    classify_tuple,
    classify_tuple_ctmc,
    decompose,
    stationary_distribution,
    stationary_distribution_ctmc,
)
from meetwalk.services.graph_core import (
    Digraph,
    RateMatrix,
    TransitionMatrix,
    equal_neighbor_matrix,
    generate,
    load_graph,
    load_matrix,
    rate_matrix_from_digraph,
    save_graph,
    save_matrix,
    transition_matrix_from_digraph,
)
from meetwalk.services.mc_oracle import SimulationEstimate, simulate_ctmc, simulate_dtmc
from meetwalk.services.meeting_ctmc import (
    CtmcMeetingResult,
    ctmc_group_meeting_times,
    ctmc_hitting_times,
    ctmc_mean_group_meeting_time,
    ctmc_mean_meeting_time,
    ctmc_meeting_times,
    ctmc_system_matrix,
    joint_generator,
)
from meetwalk.services.meeting_dtmc import (
    MeetingTimeResult,
    first_passage_times,
    fixed_point_residual,
    group_meeting_times,
    hitting_times,
    mean_group_meeting_time,
    mean_hitting_time,
    mean_meeting_time,
    meeting_time_pair,
    meeting_times,
)
from meetwalk.services.product_space import (
    FinitenessCertificate,
    MeetingSet,
    ProductIndex,
    ctmc_product_adjacency,
    finite_region,
    finiteness_certificate,
    is_convergent,
    masked_product_matrix,
    meeting_distances,
    meeting_walk,
    product_adjacency,
    reaches_meeting_set,
)

__version__ = '0.1.0'

__all__ = [
    'ChainDecomposition',
    'CtmcMeetingResult',
    'Digraph',
    'FinitenessCertificate',
    'GraphParseError',
    'MeetingSet',
    'MeetingTimeResult',
    'MeetwalkError',
    'PairClassification',
    'ParameterError',
    'ProductIndex',
    'RateMatrix',
    'SimulationEstimate',
    'SolverError',
    'StateBudgetError',
    'TransitionMatrix',
    'classify_pair',
    'classify_pair_ctmc',
    'classify_tuple',
    'classify_tuple_ctmc',
    'ctmc_group_meeting_times',
    'ctmc_hitting_times',
    'ctmc_mean_group_meeting_time',
    'ctmc_mean_meeting_time',
    'ctmc_meeting_times',
    'ctmc_product_adjacency',
    'ctmc_system_matrix',
    'decompose',
    'equal_neighbor_matrix',
    'finite_region',
    'finiteness_certificate',
    'first_passage_times',
    'fixed_point_residual',
    'generate',
    'group_meeting_times',
    'hitting_times',
    'is_convergent',
    'joint_generator',
    'load_graph',
    'load_matrix',
    'masked_product_matrix',
    'mean_group_meeting_time',
    'mean_hitting_time',
    'mean_meeting_time',
    'meeting_distances',
    'meeting_time_pair',
    'meeting_times',
    'meeting_walk',
    'product_adjacency',
    'rate_matrix_from_digraph',
    'reaches_meeting_set',
    'save_graph',
    'save_matrix',
    'simulate_ctmc',
    'simulate_dtmc',
    'stationary_distribution',
    'stationary_distribution_ctmc',
    'transition_matrix_from_digraph',
]
