"""Virtual network embedding toolkit.

Substrate/request modeling with bit-exact residual accounting, feasible
routing (min-hop, breadth-first, and exact flow splitting), spectral node
features maintained incrementally under perturbation, policy-gradient and
pointer-network embedding agents, and a discrete-event simulation harness.
"""

from ._accel import NUMBA_ACTIVE
from .embedders import (EmbedderConfig, EpisodeTrace, PointerAgent,
                        PolicyAgent, active_search, baseline_embed,
                        baseline_rank, make_feature_provider, noderank_embed,
                        noderank_scores, train_agent)
from .errors import (ConfigError, ConvergenceError, EpisodeError, FormatError,
                     GenerationError, IncompleteEmbeddingError,
                     InfeasibleAllocationError, ReleaseError, UnknownNodeError,
                     VneError)
from .learncore import (PolicyParameters, RewardBaseline, load_params,
                        masked_softmax, reinforce_update, save_params)
from .metrics import (RESULT_COLUMNS, ResultsWriter, RunningTotals,
                      acceptance_rate, cost, link_utilization, long_term_rc,
                      read_results, revenue)
from .netmodel import (Embedding, SubstrateLink, SubstrateNetwork,
                       SubstrateNode, VirtualNetworkRequest, parse_substrate,
                       read_substrate, validate_embedding, write_substrate)
from .routing import (PathQuery, bfs_feasible_path, max_flow_exact,
                      shortest_feasible_path, split_flow)
from .sim import (ScenarioConfig, generate_requests, generate_substrate,
                  load_config, parse_config, read_requests, report,
                  run_simulation, write_requests)
from .spectral import (SpectralEmbedding, build_attribute_matrix, fuse,
                       perturb_update, top_k_eigen)

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ACTIVE",
    "EmbedderConfig", "EpisodeTrace", "PointerAgent", "PolicyAgent",
    "active_search", "baseline_embed", "baseline_rank",
    "make_feature_provider", "noderank_embed", "noderank_scores",
    "train_agent",
    "ConfigError", "ConvergenceError", "EpisodeError", "FormatError",
    "GenerationError", "IncompleteEmbeddingError",
    "InfeasibleAllocationError", "ReleaseError", "UnknownNodeError",
    "VneError",
    "PolicyParameters", "RewardBaseline", "load_params", "masked_softmax",
    "reinforce_update", "save_params",
    "RESULT_COLUMNS", "ResultsWriter", "RunningTotals", "acceptance_rate",
    "cost", "link_utilization", "long_term_rc", "read_results", "revenue",
    "Embedding", "SubstrateLink", "SubstrateNetwork", "SubstrateNode",
    "VirtualNetworkRequest", "parse_substrate", "read_substrate",
    "validate_embedding", "write_substrate",
    "PathQuery", "bfs_feasible_path", "max_flow_exact",
    "shortest_feasible_path", "split_flow",
    "ScenarioConfig", "generate_requests", "generate_substrate",
    "load_config", "parse_config", "read_requests", "report",
    "run_simulation", "write_requests",
    "SpectralEmbedding", "build_attribute_matrix", "fuse", "perturb_update",
    "top_k_eigen",
    "__version__",
]
