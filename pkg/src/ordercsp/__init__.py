"""Randomized local search for bounded-occurrence ordering CSPs, with exact oracles."""
from .buckets import (BucketAssignment, Neighborhood, bucket_count, expected_payoff_f, neighborhood,
                      sample_from_Ux, separating_assignments)
from .evaluation import (EvalReport, average_value, best_insertion, brute_force, delta_u,
                         delta_u_witness, value)
from .fourier import (CubeEncoding, FourierTable, flip_construction, improvement_statistics,
                      sparsity_bound, theorem2_certificate, transform)
from .generators import (BooleanClause, GenSpec, encode_boolean_csp, gen_betweenness, gen_mas,
                         gen_random_table)
from .model import (Constraint, GuardError, Instance, InstanceError, Ordering, betweenness_constraint,
                    load_instance, mas_constraint, parse_instance, relative_order, save_instance,
                    serialize_instance)
from .solvers import (SolveTrace, derive_seed, local_search, local_search_with_restarts,
                      random_ordering)

__version__ = "0.1.0"
