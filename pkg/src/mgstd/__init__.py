"""Morse decompositions and shift-averaged vector fields from noisy time series."""
from .dataset import (Dataset, ingest_csv, pca_project, reindex_interleave, standardize,
                      transition_pairs)
from .errors import (DataError, DomainError, IntegrationError, MgstdError, ParameterError,
                     ParseError, SelectionError)
from .graph import (MorseDecomposition, combinatorial_attractors, condensation_reachability,
                    export_dot, morse_decomposition, morse_graph, scc, transitive_reduction)
from .grid import GridSpec, barycenter, build_grid, locate
from .sde import (SimConfig, double_well_1d, generate_preset, saddle_2d, simulate,
                  srk2_step)
from .selection import (grid_coverage, recommend_h, select_mu_star,
                        select_mu_star_averaged)
from .transitions import (Digraph, TransitionCounts, build_deterministic_map,
                          build_multivalued_map, classify_pair, count_transitions,
                          transition_probability)
from .vectorfield import (EdgeVector, VectorField, canonical_average, edge_vectors,
                          run_mgstd, shift_field)

__version__ = "0.1.0"
