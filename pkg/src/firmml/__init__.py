"""Dense structures (FirmTruss, FirmCore) and community search on multilayer graphs."""
from .errors import (BudgetExceeded, CorruptIndex, DomainError, IndexMismatch, NoCommunity, ParseError, QueryNotContained,
                     QuerySplit, UnsupportedParameter)
from .graph import (AttributeTable, MultilayerGraph, SubgraphView, connected_component, degree_vector, diameter,
                    induced_subgraph, load_attributes, load_graph, load_ground_truth, ml_distance, query_distance,
                    top_lambda)
from .firmcore import (NodeProperty, SkylineCoreness, degree_property, dominates, firm_fixpoint,
                       firmcore_decomposition, index_maximal_firmcore, maximal_firmcore, property_support)
from .firmtruss import (SkylineIndex, firmtruss_decomposition, index_maximal_firmtruss, index_read, index_write,
                        layer_supports, maintain_firmtruss, maximal_firmtruss)
from .search import (Community, SearchParams, community_search, fccs_global, fccs_local, ftcs_global, ftcs_local,
                     validate_community)
from .attributed import HomophilyContext, aftcs_approx, delta_u, exact_maxinf, exact_maxmin, homophily_score, similarity
from .metrics import (density, density_lower_bound, diameter_upper_bound, edge_connectivity_bound, f1_score,
                      generalized_mean)
from .synth import generate_synthetic

__version__ = "0.1.0"
